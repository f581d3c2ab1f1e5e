use std::path::PathBuf;
use std::process::ExitCode;

use carleman_lab::{run_suite, Config, Suite};
use clap::Parser;

/// Numerical experiments for semi-discrete parabolic Carleman estimates.
#[derive(Debug, Parser)]
#[command(name = "carleman-lab", version)]
struct Cli {
    #[arg(value_enum)]
    suite: Suite,
    /// TOML configuration; defaults are used for absent keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set weight.tau=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Values of 1/h for the error-term refinement (stability).
    #[arg(long, value_delimiter = ',')]
    grids: Option<Vec<usize>>,
    /// Run directory; defaults to `runs/<suite>-<seed>`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides.clone();
    if let Some(g) = &cli.grids {
        let list: Vec<String> = g.iter().map(|v| v.to_string()).collect();
        overrides.push(format!("stability.decay_grids=[{}]", list.join(",")));
    }
    let cfg = match Config::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let dir = cli.out.unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{}", cli.suite.name(), cfg.seed)));
    match run_suite(cli.suite, &cfg, &dir) {
        Ok(summary) => {
            for a in &summary.assertions {
                println!("{} {}: {:e} (bound {:e})", if a.pass { "pass" } else { "FAIL" }, a.name, a.value, a.bound);
            }
            println!("{} in {:.2}s -> {}", summary.suite, summary.wall_time_s, dir.display());
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
