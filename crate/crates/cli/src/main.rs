use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use faddeev_core::pipeline::{run, write_report, Mode, PipelineError, RunConfig};

/// Reconstruct a potential from zero-energy scattering amplitudes on |Im k| = ρ.
#[derive(Debug, Parser)]
#[command(name = "faddeev", version)]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// synthesize | reconstruct | end-to-end | sweep | stability | diagnostics
    #[arg(long)]
    mode: Option<Mode>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Boundary data for reconstruct mode.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Random seed for stability probes.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("faddeev: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if cli.data.is_some() {
        cfg.data = cli.data;
    }
    if cli.seed.is_some() {
        cfg.stability.seed = cli.seed;
    }
    let report = run(&cfg)?;
    write_report(&report, &cfg.out_dir)?;
    if let Some(s) = &report.run {
        eprintln!(
            "converged in {} iterations, residual {:.3e}",
            s.trace.diffs.len(),
            s.trace.residual
        );
        if !s.feasibility.feasible() {
            eprintln!("warning: feasibility conditions fail ({})", s.feasibility.failures().join(", "));
        }
    }
    if let Some(s) = &report.sweep {
        match s.slope {
            Some(v) => eprintln!("sweep slope {v:.3}"),
            None => eprintln!("sweep slope undefined"),
        }
    }
    eprintln!("wrote {}", cfg.out_dir.display());
    Ok(())
}
