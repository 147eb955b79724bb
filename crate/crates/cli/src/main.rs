//! `supwave <experiment> --config <file> [--out <dir>] [--workers k] [--seed n]`
//!
//! Exit status: 0 when every check passes, 2 for an invalid config or a
//! violated exponent constraint, 3 when a numerical check fails, 1 otherwise.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use serde::Serialize;

use config::{Config, Experiment, RawConfig};
use experiments::{Artifact, Check};

#[derive(Parser, Debug)]
#[command(name = "supwave", version, about = "Truncated cubic wave experiments with randomized data")]
struct Cli {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out`, then $SUPWAVE_OUT, then `supwave-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; affects wall time only.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'static str,
    parameters: &'a Config,
    checks: &'a [Check],
    pass: bool,
}

fn output_dir(cli: Option<PathBuf>, raw: &RawConfig) -> PathBuf {
    cli.or_else(|| raw.out.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("SUPWAVE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("supwave-out"))
}

fn write_outputs(dir: &Path, cfg: &Config, out: &experiments::Outcome, pass: bool) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let header = format!("# config: {}\n", cfg.to_json_line());
    for a in &out.artifacts {
        let (path, bytes) = match a {
            Artifact::Csv { name, body } => (dir.join(format!("{name}.csv")), format!("{header}{body}").into_bytes()),
            Artifact::Binary { name, bytes } => (dir.join(name), bytes.clone()),
        };
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = Summary { experiment: cfg.experiment.name(), parameters: cfg, checks: &out.checks, pass };
    let path = dir.join(format!("{}_summary.json", cfg.experiment.name()));
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let raw = match RawConfig::from_file(&cli.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let dir = output_dir(cli.out, &raw);
    let cfg = match Config::resolve(raw, cli.experiment, cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let outcome = match experiments::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let pass = outcome.checks.iter().all(|c| c.pass);
    if let Err(e) = write_outputs(&dir, &cfg, &outcome, pass) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    for c in &outcome.checks {
        println!("{} {}: margin {:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.margin);
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("check failed: {}", outcome.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect::<Vec<_>>().join(", "));
        ExitCode::from(3)
    }
}
