fn main() {
    std::process::exit(grnobs::cli::run(std::env::args_os()));
}
