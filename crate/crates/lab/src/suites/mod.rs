//! The experiment suites. Each returns its tables and assertions; the
//! runner writes them with the config snapshot into the run directory.

mod carleman;
mod converge;
mod energy;
mod reconstruct;
mod stability;
mod verify_ops;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::Config;
use crate::report::{self, Assertion, Summary, Table};
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    VerifyOps,
    Converge,
    Energy,
    Carleman,
    Stability,
    Reconstruct,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::VerifyOps, Suite::Converge, Suite::Energy, Suite::Carleman, Suite::Stability, Suite::Reconstruct];

    pub fn name(self) -> &'static str {
        match self {
            Suite::VerifyOps => "verify-ops",
            Suite::Converge => "converge",
            Suite::Energy => "energy",
            Suite::Carleman => "carleman",
            Suite::Stability => "stability",
            Suite::Reconstruct => "reconstruct",
        }
    }

    pub fn code(self) -> u32 {
        Suite::ALL.iter().position(|s| *s == self).unwrap() as u32 + 1
    }
}

#[derive(Debug, Default)]
pub struct SuiteOutput {
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    /// Trajectory files to write, by file name.
    pub trajectories: Vec<(String, carleman_core::solver::Trajectory)>,
}

/// Runs `f` for every run id on the current pool; results come back in
/// run-id order whatever the scheduling.
pub(crate) fn par_runs<T: Send>(runs: usize, f: impl Fn(u64) -> Result<T, LabError> + Sync + Send) -> Result<Vec<T>, LabError> {
    (0..runs as u64).into_par_iter().map(f).collect()
}

fn execute(suite: Suite, cfg: &Config) -> Result<SuiteOutput, LabError> {
    match suite {
        Suite::VerifyOps => verify_ops::run(cfg),
        Suite::Converge => converge::run(cfg),
        Suite::Energy => energy::run(cfg),
        Suite::Carleman => carleman::run(cfg),
        Suite::Stability => stability::run(cfg),
        Suite::Reconstruct => reconstruct::run(cfg),
    }
}

/// Runs a suite and writes `config.toml`, `seed.txt`, its CSV tables,
/// trajectory files and `summary.json` into `dir`.
pub fn run_suite(suite: Suite, cfg: &Config, dir: &Path) -> Result<Summary, LabError> {
    let start = Instant::now();
    report::create_dir(dir)?;
    report::write_text(&dir.join("config.toml"), &cfg.to_toml())?;
    report::write_text(&dir.join("seed.txt"), &format!("{}\n", cfg.seed))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| LabError::Pool(e.to_string()))?;
    let out = pool.install(|| execute(suite, cfg))?;
    for t in &out.tables {
        t.write(dir)?;
    }
    for (name, tr) in &out.trajectories {
        let path = dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| LabError::io(&path, e))?;
        crate::io::write_trajectory(std::io::BufWriter::new(file), tr).map_err(|e| LabError::io(&path, e))?;
    }
    let summary = Summary { suite: suite.name().into(), assertions: out.assertions, wall_time_s: start.elapsed().as_secs_f64() };
    report::write_summary(dir, &summary)?;
    Ok(summary)
}

/// Largest over smallest of positive maxima.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}
