use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use jumpdiff::experiment::{run, ExperimentConfig, ExperimentKind};
use jumpdiff::Error;

const COLUMNS: &str = "\
CSV columns (every file starts with the resolved configuration as `#` comment lines):

  gap-sweep          mu, gap_numeric, gap_is_real, dirichlet_bottom, theoretical_gap,
                     conjectured_threshold, coupling_rate, tv_rate
                     (rate columns are empty unless \"monte_carlo\": true)
  gap-sweep          <stem>-corollary3.csv: mu, gap, lambda0, gap_below_lambda0
  spectrum           mu, re, im, multiplicity, residual, is_gap
  invariant          mu, y, density, limit, abs_diff, excluded
                     <stem>-sup.csv: mu, sup_distance
  tv-decay           mu, t, tv, noise_floor
  coupling-tail      mu, t, survival, stderr
  lemma6-check       mu, n, t_n, fraction_x_in_a, fraction_y_in_a, accepted, attempts
  convolution-check  mu, t, lhs, rhs, ratio, lhs_mc, rhs_mc

Exit codes: 0 success, 2 invalid configuration or arguments, 3 solver failure.";

/// Spectral gap and coupling experiments for drifted Brownian motion with a
/// jump boundary.
#[derive(Parser, Debug)]
#[command(version, after_long_help = COLUMNS)]
struct Cli {
    /// Experiment to run.
    experiment: ExperimentKind,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { 2 } else { 3 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::from_file(&cli.config) {
        Ok(c) => c,
        Err(e) => return exit_for(&e),
    };
    match cfg.experiment {
        Some(k) if k != cli.experiment => {
            return exit_for(&Error::Config(format!(
                "configuration names {} but {} was requested",
                k.name(),
                cli.experiment.name()
            )))
        }
        _ => cfg.experiment = Some(cli.experiment),
    }
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return exit_for(&Error::InvalidArgument("--threads must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return exit_for(&Error::InvalidArgument(e.to_string()));
        }
    }
    match run(&cfg) {
        Ok(out) => {
            println!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => exit_for(&e),
    }
}
