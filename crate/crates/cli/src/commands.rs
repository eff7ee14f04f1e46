//! Command implementations behind the CLI surface.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::Vector3;

use nearnet_core::imf::{imf_oracle, imf_setup, setup_obstacles, split_support};
use nearnet_core::orient::optimize_full;
use nearnet_core::planner::plan_support_removal;
use nearnet_core::support::assemble_near_net;
use nearnet_core::{io, IndicatorGrid, MachineSetup, OptimizeConfig, PlanConfig, PlanOutcome};

use crate::config::LoadedSetup;

pub fn voxelize(mesh: &Path, spacing: f64, out: &Path, vtk: Option<&Path>) -> Result<()> {
    let mesh = io::load_mesh(mesh).with_context(|| format!("loading {}", mesh.display()))?;
    let (grid, report) = io::voxelize::<f64>(&mesh, spacing)?;
    if !report.is_clean() {
        eprintln!(
            "warning: mesh is not watertight along {} scan rows; cell contents there are parity best-effort",
            report.open_rows
        );
    }
    io::write_indicator(out, &grid)?;
    if let Some(vtk_path) = vtk {
        io::write_vtk_ascii(vtk_path, &io::Volume::Indicator(grid.clone()))?;
    }
    println!(
        "voxelized: dims {:?}, {} cells set, volume {} mm^3 -> {}",
        grid.lattice().dims(),
        grid.count_set(),
        grid.volume(),
        out.display()
    );
    Ok(())
}

pub struct ImfArgs {
    pub build_dir: Vector3<f64>,
    pub lambda: Option<f64>,
    pub oracle_check: bool,
    pub out_prefix: PathBuf,
    pub vtk: bool,
}

pub fn imf(loaded: &LoadedSetup, args: &ImfArgs) -> Result<()> {
    let lambda = args.lambda.unwrap_or(loaded.params.lambda);
    if lambda < 0.0 {
        bail!("lambda must be >= 0");
    }
    let nn = assemble_near_net(&loaded.part, args.build_dir, loaded.params.alpha_deg)?;
    let result = imf_setup(&nn.part, &loaded.setup)?;
    let (accessible, secluded) = split_support(&nn.support, &result.field, lambda);

    if args.oracle_check {
        oracle_check(&nn.part, &loaded.setup, &result.field)?;
    }

    // report the field over the near-net lattice
    let field = result.field.resample_to(nn.part.lattice(), 0.0);
    let prefix = args.out_prefix.as_path();
    let field_path = with_suffix(prefix, "_field.vol");
    let acc_path = with_suffix(prefix, "_accessible.vol");
    let secl_path = with_suffix(prefix, "_secluded.vol");
    io::write_field(&field_path, &field)?;
    io::write_indicator(&acc_path, &accessible)?;
    io::write_indicator(&secl_path, &secluded)?;
    if args.vtk {
        io::write_vtk_ascii(with_suffix(prefix, "_field.vtk"), &io::Volume::Field(field))?;
        io::write_vtk_ascii(
            with_suffix(prefix, "_secluded.vtk"),
            &io::Volume::Indicator(secluded.clone()),
        )?;
    }

    println!(
        "support_mm3={} accessible_mm3={} secluded_mm3={} lambda={}",
        nn.support.volume(),
        accessible.volume(),
        secluded.volume(),
        lambda
    );
    println!(
        "wrote {} {} {}",
        field_path.display(),
        acc_path.display(),
        secl_path.display()
    );
    Ok(())
}

/// Re-evaluate the combined field with the brute-force placement oracle at
/// every near-net-domain cell of a small scene. Disagreement is an internal
/// invariant failure.
fn oracle_check(
    part: &IndicatorGrid,
    setup: &MachineSetup,
    field: &nearnet_core::ScalarField,
) -> Result<()> {
    let obstacles = setup_obstacles(part, setup)?;
    let domain = obstacles[0].lattice().clone();
    if domain.len() > 32 * 32 * 32 {
        bail!(
            "--oracle-check needs a domain of at most 32^3 cells, got {:?}",
            domain.dims()
        );
    }
    // subsample deterministically to keep the check brisk on 3D scenes
    let stride = (domain.len() / 2048).max(1);
    let queries: Vec<Vector3<f64>> = (0..domain.len())
        .step_by(stride)
        .map(|idx| domain.cell_center(domain.cell_of_index(idx)))
        .collect();

    let mut best = vec![1.0f64; queries.len()];
    for obstacle in &obstacles {
        for tool in &setup.tools {
            let vals = imf_oracle(obstacle, tool, &queries);
            for (b, v) in best.iter_mut().zip(vals) {
                *b = b.min(v);
            }
        }
    }
    for (q, expect) in queries.iter().zip(&best) {
        let got = field.value_at(q, 1.0);
        if (got - expect).abs() > 1e-9 {
            return Err(anyhow!(
                "internal: field {got} disagrees with oracle {expect} at {q:?}"
            ))
            .context("oracle check failed");
        }
    }
    println!("oracle check passed on {} cells", queries.len());
    Ok(())
}

pub struct OptimizeArgs {
    pub overrides: OptimizeOverrides,
    pub out: PathBuf,
}

#[derive(Default)]
pub struct OptimizeOverrides {
    pub w_acc: Option<f64>,
    pub samples: Option<usize>,
    pub keep: Option<usize>,
    pub lambda: Option<f64>,
}

pub fn optimize(loaded: &LoadedSetup, args: &OptimizeArgs) -> Result<()> {
    let mut cfg: OptimizeConfig = loaded.params.optimize_config()?;
    let o = &args.overrides;
    if let Some(w) = o.w_acc {
        cfg.w_acc = w;
    }
    if let Some(n) = o.samples {
        cfg.n_b = n;
    }
    if let Some(k) = o.keep {
        cfg.n_b_star = k;
    }
    if let Some(l) = o.lambda {
        cfg.lambda = l;
    }

    let outcome = optimize_full(&loaded.part, &loaded.setup, &cfg)?;

    let mut csv = String::from("bx,by,bz,V_S_mm3,V_Gamma_mm3,xi\n");
    for r in &outcome.records {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.b.x,
            r.b.y,
            r.b.z,
            r.support_volume,
            r.secluded_volume,
            r.score.expect("optimize sets scores")
        )?;
    }
    write_text(&args.out, &csv)?;

    println!(
        "evaluated {} orientations (max support {} mm^3, max secluded {} mm^3)",
        outcome.records.len(),
        outcome.max_support,
        outcome.max_secluded
    );
    println!(
        "top {} by weighted score (w_acc = {}):",
        outcome.top.len(),
        cfg.w_acc
    );
    println!("  rank      bx      by      bz      V_S_mm3  V_Gamma_mm3       xi");
    for (rank, r) in outcome.top.iter().enumerate() {
        println!(
            "  {:>4}  {:>6.3}  {:>6.3}  {:>6.3}  {:>11.3}  {:>11.3}  {:>7.4}",
            rank + 1,
            r.b.x,
            r.b.y,
            r.b.z,
            r.support_volume,
            r.secluded_volume,
            r.score.unwrap_or(f64::NAN)
        );
    }
    println!("full ranking written to {}", args.out.display());
    Ok(())
}

pub struct PlanArgs {
    pub build_dir: Vector3<f64>,
    pub halt_fraction: Option<f64>,
    pub lambda: Option<f64>,
    pub out: PathBuf,
    pub export_steps: Option<PathBuf>,
}

pub fn plan(loaded: &LoadedSetup, args: &PlanArgs) -> Result<()> {
    let mut cfg: PlanConfig = loaded.params.plan_config();
    if let Some(h) = args.halt_fraction {
        cfg.halt_fraction = h;
    }
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }

    let nn = assemble_near_net(&loaded.part, args.build_dir, loaded.params.alpha_deg)?;
    let outcome = plan_support_removal(&nn.part, &nn.support, &loaded.setup, &cfg)?;
    write_text(&args.out, &plan_csv(&outcome))?;

    println!(
        "initial support {} mm^3; {} steps remove {:.2}% ({} mm^3 left)",
        outcome.initial_support_volume,
        outcome.steps.len(),
        outcome.removed_fraction() * 100.0,
        outcome.remaining_support.volume()
    );
    println!("  step  frac(%)  fixture        tool           direction");
    for s in &outcome.steps {
        println!(
            "  {:>4}  {:>7.2}  {:<13}  {:<13}  ({:.2}, {:.2}, {:.2})",
            s.index,
            s.removed_fraction * 100.0,
            s.fixture_name,
            s.tool_name,
            s.direction.x,
            s.direction.y,
            s.direction.z
        );
    }
    if let Some(prefix) = &args.export_steps {
        for s in &outcome.steps {
            let path = with_suffix(prefix, &format!("_step{:02}.vol", s.index));
            io::write_indicator(&path, &s.removed)?;
        }
        let rest = with_suffix(prefix, "_remaining.vol");
        io::write_indicator(&rest, &outcome.remaining_support)?;
        println!(
            "per-step removed volumes exported with prefix {}",
            prefix.display()
        );
    }
    println!("plan table written to {}", args.out.display());
    Ok(())
}

fn plan_csv(outcome: &PlanOutcome) -> String {
    let mut csv = String::from("step,volume_fraction_pct,fixture,tool,dir_x,dir_y,dir_z\n");
    for s in &outcome.steps {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            s.index,
            s.removed_fraction * 100.0,
            s.fixture_name,
            s.tool_name,
            s.direction.x,
            s.direction.y,
            s.direction.z
        );
    }
    csv
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
