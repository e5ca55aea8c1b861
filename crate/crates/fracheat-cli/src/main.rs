//! Command-line driver: reproducible runs of the kernel sweeps, Gevrey
//! estimates, backward reconstruction, bound checks, evolution engines,
//! and the Monte Carlo subordination test.
//!
//! Every run echoes its fully resolved configuration as manifest.toml
//! next to results.csv and report.json; re-running a manifest reproduces
//! the outputs byte for byte. Exit codes: 0 success, 1 configuration
//! error, 2 numerical tolerance failure, 3 well-posedness refusal.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracheat", version, about = "fractional heat kernel toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// configuration file (TOML with [kernel], [grid], [run])
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// output directory for results.csv, report.json, manifest.toml
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// master seed; overrides [run].seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// cap on worker threads (results are identical at any cap)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// numerical tolerance for the command's pass flag
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Cmd {
    /// kernel values on a (t, r) grid with route cross-checks
    Kernel,
    /// Gevrey-order fit in time or space
    Gevrey,
    /// backward reconstruction behind the growth gate
    Backward,
    /// two-sided kernel-bound ratio sweep
    Bounds,
    /// linear or nonlinear evolution of the eigenmode fixture
    Evolve,
    /// Monte Carlo subordination test
    Mc,
}

fn run(cli: &Cli) -> Result<i32, String> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| "--config is required".to_string())?;
    let out = cli.out.as_ref().ok_or_else(|| "--out is required".to_string())?;
    let cfg = config::load(config_path)?;
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err("--workers must be positive".into());
        }
        fracheat::exec::set_workers(w);
    }
    std::fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;

    let seed = cli.seed.or(cfg.run.seed).unwrap_or(0);
    let default_tol = match cli.command {
        Cmd::Kernel => 1e-6,
        Cmd::Backward => 1e-4,
        Cmd::Evolve => 1e-6,
        _ => 1e-6,
    };
    let tolerance = cli.tolerance.unwrap_or(default_tol);

    let manifest = config::Manifest {
        command: format!("{:?}", cli.command).to_lowercase(),
        seed,
        tolerance,
        workers: cli.workers,
        config: cfg.clone(),
    };
    let manifest_text =
        toml::to_string_pretty(&manifest).map_err(|e| format!("manifest encode error: {e}"))?;
    std::fs::write(out.join("manifest.toml"), manifest_text)
        .map_err(|e| format!("cannot write manifest: {e}"))?;

    match cli.command {
        Cmd::Kernel => commands::cmd_kernel(&cfg, out, tolerance),
        Cmd::Gevrey => commands::cmd_gevrey(&cfg, out, cli.tolerance),
        Cmd::Backward => commands::cmd_backward(&cfg, out, tolerance),
        Cmd::Bounds => commands::cmd_bounds(&cfg, out, tolerance),
        Cmd::Evolve => commands::cmd_evolve(&cfg, out, tolerance),
        Cmd::Mc => commands::cmd_mc(&cfg, out, seed, tolerance),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
