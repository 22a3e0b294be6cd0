//! `holo-interp`: batch front end for separation, density, interpolation certificates,
//! the glued extension and kernel interpolation.
//!
//! Exit codes: 0 success or pass, 1 criterion failed, 2 input error, 3 numerical guard.

mod commands;
mod inputs;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] holo_interp::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical_guard() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimum pairwise distance of the node set and the resulting δ₀.
    Separation,
    /// Far-field density of the node set on a grid (hyperbolic ball only).
    Density,
    /// Laplacian criterion on flat ℂ.
    CertifyBos,
    /// Curvature-versus-count criterion with the comparison factor.
    CertifyT1,
    /// Curvature and bounded density on the hyperbolic ball.
    CertifyT2,
    /// Glued extension sampled on a grid, with its ∂̄ energy.
    Construct,
    /// Minimal-norm kernel interpolant of the node values.
    Interpolate,
    /// Riesz bounds of truncated lattices over a range of spacings.
    Sweep,
    /// Finite-difference checks of the comparison factor, Ricci form and ball volumes.
    VerifyGeometry,
}

#[derive(Debug, Parser)]
#[command(name = "holo-interp", version, about = "Interpolation certificates for weighted holomorphic sections")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,

    /// Space JSON (inline or path), e.g. {"kind":"hyperbolic_ball","n":1,"kappa":1.0}
    #[arg(long, global = true)]
    pub space: Option<String>,
    /// Weight JSON (inline or path), e.g. {"builtin":"fock","alpha":1.0}
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Point set JSON file: {"space":..., "points":[[re,im],...], "values":[[re,im],...]}
    #[arg(long, global = true)]
    pub points: Option<String>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Curvature constant for certify-t1 (at least the space's own k).
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// `box:H:M`, `disk:R:M` or a JSON list of points.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Output directory; without it the primary JSON report goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Uniform grid jitter amplitude per real coordinate (uses --seed).
    #[arg(long, global = true, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, global = true, env = "HOLO_INTERP_THREADS")]
    pub threads: Option<usize>,
    /// Density threshold for certify-t2 (user-set; reported as such).
    #[arg(long, global = true, default_value_t = 10.0)]
    pub cutoff: f64,
    /// Nodes closer than this distance are left out of the density.
    #[arg(long, global = true, default_value_t = holo_interp::pointset::DENSITY_CUTOFF)]
    pub near_cutoff: f64,
    #[arg(long, global = true)]
    pub delta0: Option<f64>,
    #[arg(long, global = true, default_value_t = 24)]
    pub n_radial: usize,
    #[arg(long, global = true, default_value_t = 32)]
    pub n_angular: usize,
    #[arg(long, global = true, default_value = "4,3.5,3,2.5,2,1.75,1.5")]
    pub spacings: String,
    #[arg(long, global = true, default_value = "6")]
    pub radii: String,
    /// Radial samples for verify-geometry.
    #[arg(long, global = true, default_value_t = 200)]
    pub samples: usize,
}

fn emit(args: &Args, outcome: &commands::Outcome) -> Result<(), CliError> {
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, contents) in &outcome.artifacts {
                fs::write(dir.join(name), contents)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.artifacts[0].1.as_bytes())?;
        }
    }
    Ok(())
}

fn execute(args: &Args) -> Result<u8, CliError> {
    let outcome = match args.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Input(format!("cannot build a pool of {t} threads: {e}")))?;
            pool.install(|| commands::run(args))?
        }
        None => commands::run(args)?,
    };
    emit(args, &outcome)?;
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
