//! Observer synthesis for genetic regulatory networks with time-varying
//! delays and reaction-diffusion terms.
//!
//! The crate assembles the delay-dependent LMI conditions for the
//! estimation-error system, solves them with a margin-maximising barrier
//! method, extracts the observer gains, and validates them by simulating
//! the plant/observer pair with the method of lines.
//!
//! ```no_run
//! let text = std::fs::read_to_string("example2.json").unwrap();
//! let config = grnobs::config::parse_config(&text).unwrap();
//! let gains = grnobs::synthesis::synthesize_observer(&config.problem, &config.solver).unwrap();
//! println!("K2 = {}", gains.k2);
//! ```

pub mod cli;
pub mod config;
pub mod lmi;
pub mod model;
pub mod oracles;
pub mod report;
pub mod sdp;
pub mod sim;
pub mod synthesis;
