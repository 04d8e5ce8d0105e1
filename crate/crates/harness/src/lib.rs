//! Experiment drivers for the viscous Burgers laboratory: decay fits, profile
//! convergence, jump location, concentration and property reports, emitted
//! as CSV tables with a JSON sidecar.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;

use std::path::PathBuf;
use std::time::Instant;

use serde_json::json;

pub use config::{Equation, Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiments::{Check, Report};
pub use fit::{fit_power_law, DecayFitResult};

/// Outcome of a run written to disk.
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

/// Run the configured experiment and write `<stem>.csv` plus `<stem>.json`
/// into the output directory.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let report = experiments::run(cfg)?;
    let wall = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let stem = cfg.experiment.stem();
    let mut files = report.write_csv(&cfg.out_dir, stem)?;
    let checks = report.checks(cfg);
    let sidecar = json!({
        "config": cfg,
        "versions": {
            "burgers-core": burgers_core::VERSION,
            "burgers-harness": env!("CARGO_PKG_VERSION"),
        },
        "wall_time_s": wall,
        "results": report.summary(),
        "checks": checks,
    });
    let path = cfg.out_dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar)?)?;
    files.push(path);
    Ok(RunOutput { files, checks })
}
