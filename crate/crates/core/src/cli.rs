//! Command-line front end: `synth`, `verify`, `simulate`, `oracles`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, AssignmentSpec, RunConfig};
use crate::lmi::{assemble_lmi_system, assemble_lmi_system_with_gains, evaluate_lmi_system, min_margin};
use crate::oracles::run_lemma_suite;
use crate::report::{emit_report, sig6, RunReport};
use crate::sim::{simulate, Profile};
use crate::synthesis::{synthesize_observer, SynthesisError};

/// The command ran and met its success criterion.
pub const EXIT_OK: i32 = 0;
/// The command ran but its criterion was not met.
pub const EXIT_NOT_MET: i32 = 1;
/// Bad arguments or configuration.
pub const EXIT_USAGE: i32 = 2;
/// I/O or numerical failure.
pub const EXIT_FAILURE: i32 = 3;

/// Largest final-to-initial error norm ratio accepted by `--check-decay`.
pub const DECAY_RATIO: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "grnobs", version, about = "Observer synthesis for delayed reaction-diffusion gene networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the observer conditions and report the gains.
    Synth(Common),
    /// Evaluate the conditions at the configured assignment.
    Verify(Common),
    /// Simulate plant and observer with configured or synthesized gains.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Start the plant from seeded random sine modes.
        #[arg(long)]
        seed: Option<u64>,
        /// Fail unless both error norms fall below 1% of their initial values.
        #[arg(long)]
        check_decay: bool,
    },
    /// Run the inequality oracles on seeded random draws.
    Oracles {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl ToString) -> Failure {
    Failure { code, message: message.to_string() }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", common.config.display())))?;
    let config = parse_config(&text).map_err(|e| fail(EXIT_USAGE, e))?;
    let out = common
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn write(dir: &Path, report: &RunReport) -> Result<(), Failure> {
    let written = emit_report(dir, report).map_err(|e| fail(EXIT_FAILURE, format!("writing {}: {e}", dir.display())))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn synth(common: &Common) -> Result<i32, Failure> {
    let (config, out) = load(common)?;
    let (report, code) = match synthesize_observer(&config.problem, &config.solver) {
        Ok(g) => {
            let c = &g.certificate;
            println!("status: {} margin: {}", c.status, sig6(c.margin));
            let report = RunReport {
                command: "synth".into(),
                status: Some(c.status.to_string()),
                margin: Some(c.margin),
                margins: c.margins.clone(),
                notes: vec![("iterations".into(), c.iterations.to_string())],
                gains: Some((g.k1, g.k2)),
                ..RunReport::default()
            };
            (report, EXIT_OK)
        }
        Err(SynthesisError::NotFeasible(c)) => {
            println!("status: {} margin: {}", c.status, sig6(c.margin));
            let report = RunReport {
                command: "synth".into(),
                status: Some(c.status.to_string()),
                margin: Some(c.margin),
                margins: c.margins.clone(),
                notes: vec![("iterations".into(), c.iterations.to_string())],
                ..RunReport::default()
            };
            (report, EXIT_NOT_MET)
        }
        Err(e) => return Err(fail(EXIT_FAILURE, e)),
    };
    write(&out, &report)?;
    Ok(code)
}

fn verify(common: &Common) -> Result<i32, Failure> {
    let (config, out) = load(common)?;
    let system = match &config.gains {
        Some((k1, k2)) => assemble_lmi_system_with_gains(&config.problem, k1, k2),
        None => assemble_lmi_system(&config.problem),
    }
    .map_err(|e| fail(EXIT_USAGE, e))?;
    let spec = config.assignment.clone().unwrap_or(AssignmentSpec::Identity);
    let x = spec.resolve(&system.layout).map_err(|e| fail(EXIT_USAGE, e))?;
    let margins = evaluate_lmi_system(&system, &x).map_err(|e| fail(EXIT_FAILURE, e))?;
    let margin = min_margin(&margins);
    let ok = margin > 0.0;
    let status = if ok { "all constraints hold" } else { "violated" };
    println!("status: {status} min margin: {}", sig6(margin));
    let assignment = match spec {
        AssignmentSpec::Identity => "identity",
        AssignmentSpec::Slots(_) => "explicit",
    };
    let report = RunReport {
        command: "verify".into(),
        status: Some(status.into()),
        margin: Some(margin),
        margins,
        notes: vec![("assignment".into(), assignment.into())],
        ..RunReport::default()
    };
    write(&out, &report)?;
    Ok(if ok { EXIT_OK } else { EXIT_NOT_MET })
}

fn simulate_cmd(common: &Common, seed: Option<u64>, check_decay: bool) -> Result<i32, Failure> {
    let (mut config, out) = load(common)?;
    if let Some(seed) = seed {
        config.simulation.plant.mrna = Profile::RandomModes { seed, modes: 5, amplitude: 1.0 };
        config.simulation.plant.protein = Profile::RandomModes { seed: seed.wrapping_add(1), modes: 5, amplitude: 1.0 };
    }
    let mut report = RunReport { command: "simulate".into(), ..RunReport::default() };
    let (k1, k2) = match config.gains.clone() {
        Some(g) => {
            report.notes.push(("gains".into(), "from config".into()));
            g
        }
        None => {
            let g = synthesize_observer(&config.problem, &config.solver).map_err(|e| fail(EXIT_FAILURE, e))?;
            report.notes.push(("gains".into(), "synthesized".into()));
            report.margin = Some(g.certificate.margin);
            report.margins = g.certificate.margins.clone();
            (g.k1, g.k2)
        }
    };
    let tr = simulate(&config.problem, &k1, &k2, &config.simulation).map_err(|e| fail(EXIT_USAGE, e))?;
    let (rm, rp) = tr.decay_ratios();
    let decayed = rm < DECAY_RATIO && rp < DECAY_RATIO;
    println!("error norm ratios: m {} p {}", sig6(rm), sig6(rp));
    report.notes.push(("error ratio m".into(), sig6(rm)));
    report.notes.push(("error ratio p".into(), sig6(rp)));
    if check_decay {
        report.status = Some(if decayed { "decayed" } else { "did not decay" }.into());
    }
    report.gains = Some((k1, k2));
    report.trajectory = Some(tr);
    write(&out, &report)?;
    Ok(if !check_decay || decayed { EXIT_OK } else { EXIT_NOT_MET })
}

fn oracles(seed: u64, draws: usize, out: Option<PathBuf>) -> Result<i32, Failure> {
    let summaries = run_lemma_suite(seed, draws).map_err(|e| fail(EXIT_FAILURE, e))?;
    let mut report = RunReport {
        command: "oracles".into(),
        notes: vec![("seed".into(), seed.to_string()), ("draws".into(), draws.to_string())],
        ..RunReport::default()
    };
    let mut all = true;
    for s in &summaries {
        let verdict = if s.passed() { "PASS" } else { "FAIL" };
        all &= s.passed();
        let line = format!("{verdict} min slack {} witness residual {}", sig6(s.min_slack), sig6(s.witness_residual));
        println!("{}: {line}", s.name);
        report.notes.push((s.name.to_string(), line));
    }
    report.status = Some(if all { "all inequalities hold" } else { "violation found" }.into());
    if let Some(dir) = out {
        write(&dir, &report)?;
    }
    Ok(if all { EXIT_OK } else { EXIT_NOT_MET })
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Synth(c) => synth(c),
        Command::Verify(c) => verify(c),
        Command::Simulate { common, seed, check_decay } => simulate_cmd(common, *seed, *check_decay),
        Command::Oracles { seed, draws, out } => oracles(*seed, *draws, out.clone()),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
