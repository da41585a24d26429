use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use expcli::config::validate_config_with_seed;
use expcli::run::run_experiment;

/// Runs a configured experiment and writes `report.json`, CSV tables and `summary.txt`.
///
/// Exit status: 0 all checks pass, 1 a check failed, 2 invalid config, 3 effective sample
/// size flagged, 4 the run itself failed.
#[derive(Debug, Parser)]
#[command(name = "expcli", version)]
struct Args {
  /// Experiment config (TOML with dotted keys).
  #[arg(long)]
  config: PathBuf,
  /// Output directory; overrides `output.dir` (default `out`).
  #[arg(long)]
  out: Option<PathBuf>,
  /// Worker threads; results do not depend on this.
  #[arg(long)]
  workers: Option<usize>,
  /// Single worker thread.
  #[arg(long, conflicts_with = "workers")]
  sequential: bool,
  /// Replaces the seed in the config (and so its hash).
  #[arg(long)]
  seed_override: Option<u64>,
}

fn main() -> ExitCode {
  let args = Args::parse();
  let text = match std::fs::read_to_string(&args.config) {
    Ok(t) => t,
    Err(e) => {
      eprintln!("{}: {e}", args.config.display());
      return ExitCode::from(2);
    }
  };
  let config = match validate_config_with_seed(&text, args.seed_override) {
    Ok(c) => c,
    Err(diags) => {
      for d in diags {
        eprintln!("{}: {d}", args.config.display());
      }
      return ExitCode::from(2);
    }
  };
  let threads = if args.sequential { Some(1) } else { args.workers };
  if let Some(n) = threads {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
      eprintln!("thread pool: {e}");
      return ExitCode::from(4);
    }
  }
  let out = args.out.or(config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
  let report = run_experiment(&config, &mut |line| println!("{line}"));
  match report.write(&out) {
    Ok(files) => {
      print!("{}", report.summary_text());
      for f in files {
        println!("wrote {}", f.display());
      }
    }
    Err(e) => {
      eprintln!("writing {}: {e}", out.display());
      return ExitCode::from(4);
    }
  }
  ExitCode::from(report.status.exit_code())
}
