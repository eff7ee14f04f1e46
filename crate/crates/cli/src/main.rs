//! Command-line pipeline: voxelize geometry, compute accessibility fields,
//! rank build orientations, and plan support removal.
//!
//! Exit codes: 0 success, 2 usage, 3 input error, 4 internal invariant
//! failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

#[derive(Parser)]
#[command(
    name = "nearnet",
    version,
    about = "Voxel planning for AM parts finished by multi-axis machining"
)]
struct Cli {
    /// Worker threads (default: available parallelism). Results are
    /// identical for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize an STL mesh into an indicator volume file.
    Voxelize {
        /// Input STL (binary or ASCII), coordinates in mm.
        #[arg(long)]
        mesh: PathBuf,
        /// Voxel edge length in mm.
        #[arg(long, value_parser = positive_f64)]
        spacing: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also export an ASCII structured-points file for viewers.
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Compute the accessibility field for one build direction and split the
    /// support into accessible and secluded parts.
    Imf {
        #[command(flatten)]
        common: ConfigArg,
        /// Build direction as "x,y,z" (normalized internally).
        #[arg(long, value_parser = parse_dir)]
        build_dir: Vector3d,
        /// Override the secluded threshold from the config.
        #[arg(long)]
        lambda: Option<f64>,
        /// Verify the field against the brute-force placement oracle
        /// (domains up to 32^3); disagreement exits with code 4.
        #[arg(long)]
        oracle_check: bool,
        /// Output prefix for the _field/_accessible/_secluded volumes.
        #[arg(long)]
        out_prefix: PathBuf,
        /// Also write structured-points exports.
        #[arg(long)]
        vtk: bool,
    },
    /// Rank sampled build orientations by the weighted Pareto score.
    Optimize {
        #[command(flatten)]
        common: ConfigArg,
        /// Override the accessibility weight in [0, 1].
        #[arg(long)]
        w_acc: Option<f64>,
        /// Override the sample count.
        #[arg(long)]
        samples: Option<usize>,
        /// Override how many top orientations to keep.
        #[arg(long)]
        keep: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Ranking CSV (all samples; schema bx,by,bz,V_S_mm3,V_Gamma_mm3,xi).
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy support-removal plan for one build direction.
    Plan {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long, value_parser = parse_dir)]
        build_dir: Vector3d,
        /// Stop when the best step removes less than this fraction of the
        /// initial support volume (default from config, 0.005).
        #[arg(long)]
        halt_fraction: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Plan CSV (step,volume_fraction_pct,fixture,tool,dir_x,dir_y,dir_z).
        #[arg(long)]
        out: PathBuf,
        /// Prefix for optional per-step removed-volume exports.
        #[arg(long)]
        export_steps: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Setup description (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy)]
struct Vector3d(f64, f64, f64);

impl From<Vector3d> for Vector3<f64> {
    fn from(v: Vector3d) -> Self {
        Vector3::new(v.0, v.1, v.2)
    }
}

fn parse_dir(s: &str) -> Result<Vector3d, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected \"x,y,z\"".into());
    }
    let mut v = [0.0f64; 3];
    for (slot, tok) in v.iter_mut().zip(&parts) {
        *slot = tok
            .trim()
            .parse()
            .map_err(|_| format!("bad component {tok:?}"))?;
    }
    if v.iter().all(|c| *c == 0.0) {
        return Err("direction must be non-zero".into());
    }
    Ok(Vector3d(v[0], v[1], v[2]))
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be > 0".into())
    }
}

/// Die quietly when a downstream pipe closes, like other unix CLIs.
#[cfg(unix)]
fn restore_sigpipe_default() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_sigpipe_default() {}

fn main() -> ExitCode {
    restore_sigpipe_default();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let internal = e.chain().any(|c| c.to_string().starts_with("internal:"))
                || e.to_string().contains("oracle check failed");
            ExitCode::from(if internal { 4 } else { 3 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Voxelize {
            mesh,
            spacing,
            out,
            vtk,
        } => commands::voxelize(&mesh, spacing, &out, vtk.as_deref()),
        Command::Imf {
            common,
            build_dir,
            lambda,
            oracle_check,
            out_prefix,
            vtk,
        } => {
            let loaded = config::load(&common.config)?;
            commands::imf(
                &loaded,
                &commands::ImfArgs {
                    build_dir: build_dir.into(),
                    lambda,
                    oracle_check,
                    out_prefix,
                    vtk,
                },
            )
        }
        Command::Optimize {
            common,
            w_acc,
            samples,
            keep,
            lambda,
            out,
        } => {
            let loaded = config::load(&common.config)?;
            if let Some(w) = w_acc {
                if !(0.0..=1.0).contains(&w) {
                    return Err(anyhow!("w_acc must be in [0, 1]"));
                }
            }
            commands::optimize(
                &loaded,
                &commands::OptimizeArgs {
                    overrides: commands::OptimizeOverrides {
                        w_acc,
                        samples,
                        keep,
                        lambda,
                    },
                    out,
                },
            )
        }
        Command::Plan {
            common,
            build_dir,
            halt_fraction,
            lambda,
            out,
            export_steps,
        } => {
            let loaded = config::load(&common.config)?;
            commands::plan(
                &loaded,
                &commands::PlanArgs {
                    build_dir: build_dir.into(),
                    halt_fraction,
                    lambda,
                    out,
                    export_steps,
                },
            )
        }
    }
}
