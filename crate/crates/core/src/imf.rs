//! Inaccessibility measure field.
//!
//! For every lattice cell, the field holds the minimum normalized collision
//! volume between the machining obstacle (part ∪ fixture ∪ platform) and a
//! tool placed with any allowed rotation and any sharp point touching that
//! cell. Zero means the cell is reachable collision-free; one means every
//! placement buries at least a full tool volume.
//!
//! The per-rotation overlap fields come from FFT cross-correlation; sharp
//! points shift the same field instead of re-correlating. A brute-force
//! placement oracle ([`imf_oracle`]) evaluates the defining minimum directly
//! for validation on small instances.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::correlate::PreparedObstacle;
use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Rotation, ScalarField};
use crate::machine::{MachineSetup, ToolAssembly};
use crate::num::Real;

/// Which (fixture, tool, rotation, sharp point) attained the cell minimum.
/// Ties resolve to the smallest tuple in that ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArgminInfo {
    pub fixture: u16,
    pub tool: u16,
    pub rotation: u16,
    pub sharp_point: u16,
}

/// Combined field for a machining setup, with optional per-fixture fields and
/// per-cell argmin records for reporting.
#[derive(Debug, Clone)]
pub struct ImfResult<T: Real> {
    pub field: ScalarField<T>,
    pub per_fixture: Option<Vec<ScalarField<T>>>,
    pub argmin: Option<Vec<ArgminInfo>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ImfOptions {
    pub keep_per_fixture: bool,
    pub keep_argmin: bool,
}

/// Field for one (obstacle, tool, rotation) combination: the normalized
/// overlap minimized over the tool's sharp points, evaluated on the obstacle
/// lattice. Cells no sharp point can reach stay at the maximal value 1.
pub fn rotation_field<T: Real>(
    prep: &PreparedObstacle<T>,
    tool: &ToolAssembly<T>,
    rotation: &Rotation<T>,
) -> Result<ScalarField<T>> {
    Ok(rotation_field_impl(prep, tool, rotation, false)?.0)
}

fn rotation_field_impl<T: Real>(
    prep: &PreparedObstacle<T>,
    tool: &ToolAssembly<T>,
    rotation: &Rotation<T>,
    track_k: bool,
) -> Result<(ScalarField<T>, Option<Vec<u16>>)> {
    let target = prep.lattice().clone();
    let probe = tool.union_grid().rotate_about(rotation, &Vector3::zeros());
    let corr = prep.correlate(&probe)?;
    let h = target.spacing();
    let [tx, ty, tz] = target.dims();
    let cd = corr.lattice().dims();
    let corr_vals = corr.values();

    // raw overlap volumes, minimized over sharp points; normalize once at the end
    let mut acc = vec![T::of(f64::INFINITY); target.len()];
    let mut best_k = track_k.then(|| vec![0u16; target.len()]);

    for (k_idx, k_pos) in tool.sharp_point_positions().into_iter().enumerate() {
        let rk = rotation.apply(&k_pos);
        // constant index shift: field value at x comes from corr at x - R k
        let mut delta = [0i64; 3];
        for a in 0..3 {
            let exact = (target.origin()[a] - rk[a] - corr.lattice().origin()[a]) / h;
            delta[a] = exact.round().as_f64() as i64;
        }
        // clip to the window where corr is defined; outside it the overlap
        // field is undefined and the cell keeps its maximal init value
        let lo = |a: usize| (-delta[a]).max(0) as usize;
        let hi =
            |a: usize, t_dim: usize| ((cd[a] as i64 - delta[a]).min(t_dim as i64)).max(0) as usize;
        let (x0, x1) = (lo(0), hi(0, tx));
        let (y0, y1) = (lo(1), hi(1, ty));
        let (z0, z1) = (lo(2), hi(2, tz));
        for mz in z0..z1 {
            let sz = (mz as i64 + delta[2]) as usize;
            for my in y0..y1 {
                let sy = (my as i64 + delta[1]) as usize;
                let t_row = tx * (my + ty * mz);
                let c_row = cd[0] * (sy + cd[1] * sz);
                for mx in x0..x1 {
                    let v = corr_vals[(mx as i64 + delta[0]) as usize + c_row];
                    let slot = &mut acc[mx + t_row];
                    if v < *slot {
                        *slot = v;
                        if let Some(bk) = best_k.as_mut() {
                            bk[mx + t_row] = k_idx as u16;
                        }
                    }
                }
            }
        }
    }

    let v_t = tool.volume();
    let one = T::one();
    for v in acc.iter_mut() {
        *v = (*v / v_t).min(one);
    }
    Ok((ScalarField::from_vec(target, acc)?, best_k))
}

/// Field for one tool: minimum of [`rotation_field`] over the tool's allowed
/// rotations, evaluated on the obstacle lattice.
pub fn imf_single_tool<T: Real>(
    obstacle: &IndicatorGrid<T>,
    tool: &ToolAssembly<T>,
) -> Result<ScalarField<T>> {
    let prep = PreparedObstacle::new(obstacle, tool.rotated_dims_bound());
    min_over_rotations(&prep, tool)
}

fn min_over_rotations<T: Real>(
    prep: &PreparedObstacle<T>,
    tool: &ToolAssembly<T>,
) -> Result<ScalarField<T>> {
    let fields: Result<Vec<ScalarField<T>>> = tool
        .rotations()
        .par_iter()
        .map(|r| rotation_field(prep, tool, r))
        .collect();
    let mut fields = fields?;
    let mut out = fields.pop().expect("rotations are validated non-empty");
    for f in &fields {
        out.min_with(f)?;
    }
    Ok(out)
}

/// Combined field over several tools (cellwise minimum).
pub fn imf_tools<T: Real>(
    obstacle: &IndicatorGrid<T>,
    tools: &[ToolAssembly<T>],
) -> Result<ScalarField<T>> {
    if tools.is_empty() {
        return Err(Error::param("imf needs at least one tool"));
    }
    let mut bound = [1usize; 3];
    for t in tools {
        let b = t.rotated_dims_bound();
        for a in 0..3 {
            bound[a] = bound[a].max(b[a]);
        }
    }
    let prep = PreparedObstacle::new(obstacle, bound);
    let mut out: Option<ScalarField<T>> = None;
    for tool in tools {
        let f = min_over_rotations(&prep, tool)?;
        match out.as_mut() {
            None => out = Some(f),
            Some(acc) => acc.min_with(&f)?,
        }
    }
    Ok(out.expect("tool list is non-empty"))
}

/// Combined field for a full machining setup: for each fixturing
/// configuration builds the obstacle part ∪ fixture ∪ platform on a shared
/// domain lattice, minimizes over tools and rotations, then over fixtures.
pub fn imf_setup<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
) -> Result<ImfResult<T>> {
    imf_setup_with(part, setup, &ImfOptions::default())
}

pub fn imf_setup_with<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    opts: &ImfOptions,
) -> Result<ImfResult<T>> {
    let obstacles = setup_obstacles(part, setup)?;
    let probe_bound = setup.probe_dims_bound();

    let mut combined: Option<(ScalarField<T>, Option<Vec<ArgminInfo>>)> = None;
    let mut per_fixture = opts.keep_per_fixture.then(Vec::new);

    for (j, obstacle) in obstacles.iter().enumerate() {
        let prep = PreparedObstacle::new(obstacle, probe_bound);
        let field_j = if opts.keep_argmin {
            fixture_field_with_argmin(&prep, &setup.tools, j as u16)?
        } else {
            let mut acc: Option<ScalarField<T>> = None;
            for tool in &setup.tools {
                let f = min_over_rotations(&prep, tool)?;
                match acc.as_mut() {
                    None => acc = Some(f),
                    Some(a) => a.min_with(&f)?,
                }
            }
            (acc.expect("tools validated non-empty"), None)
        };
        if let Some(list) = per_fixture.as_mut() {
            list.push(field_j.0.clone());
        }
        match combined.as_mut() {
            None => combined = Some(field_j),
            Some((acc, meta)) => {
                merge_min(acc, meta.as_mut(), &field_j.0, field_j.1.as_deref());
            }
        }
    }

    let (field, argmin) = combined.expect("fixtures validated non-empty");
    Ok(ImfResult {
        field,
        per_fixture,
        argmin,
    })
}

/// Obstacle grids `part ∪ F_j ∪ platform`, one per fixturing configuration,
/// co-registered on the shared domain lattice.
pub fn setup_obstacles<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
) -> Result<Vec<IndicatorGrid<T>>> {
    let platform = setup.platform.materialize(part.lattice())?;
    let mut lattices = vec![platform.lattice()];
    for f in &setup.fixtures {
        if !f.body.is_set_empty() {
            lattices.push(f.body.lattice());
        }
    }
    let domain = part.lattice().cover(&lattices)?;
    let base = part
        .resample_to(&domain)
        .union(&platform.resample_to(&domain))?;
    setup
        .fixtures
        .iter()
        .map(|f| {
            if f.body.is_set_empty() {
                Ok(base.clone())
            } else {
                base.union(&f.body.resample_to(&domain))
            }
        })
        .collect()
}

fn fixture_field_with_argmin<T: Real>(
    prep: &PreparedObstacle<T>,
    tools: &[ToolAssembly<T>],
    fixture: u16,
) -> Result<(ScalarField<T>, Option<Vec<ArgminInfo>>)> {
    let mut field: Option<ScalarField<T>> = None;
    let mut meta: Option<Vec<ArgminInfo>> = None;
    for (i, tool) in tools.iter().enumerate() {
        for (r, rotation) in tool.rotations().iter().enumerate() {
            let (f, ks) = rotation_field_impl(prep, tool, rotation, true)?;
            let ks = ks.expect("tracking requested");
            let make = |cell: usize| ArgminInfo {
                fixture,
                tool: i as u16,
                rotation: r as u16,
                sharp_point: ks[cell],
            };
            match field.as_mut() {
                None => {
                    meta = Some((0..f.values().len()).map(make).collect());
                    field = Some(f);
                }
                Some(acc) => {
                    let m = meta.as_mut().expect("meta tracks field");
                    for (cell, (&v, slot)) in f.values().iter().zip(acc.values_mut()).enumerate() {
                        if v < *slot {
                            *slot = v;
                            m[cell] = make(cell);
                        }
                    }
                }
            }
        }
    }
    Ok((field.expect("tools validated non-empty"), meta))
}

fn merge_min<T: Real>(
    acc: &mut ScalarField<T>,
    acc_meta: Option<&mut Vec<ArgminInfo>>,
    other: &ScalarField<T>,
    other_meta: Option<&[ArgminInfo]>,
) {
    match (acc_meta, other_meta) {
        (Some(am), Some(om)) => {
            for (cell, (&v, slot)) in other.values().iter().zip(acc.values_mut()).enumerate() {
                if v < *slot {
                    *slot = v;
                    am[cell] = om[cell];
                }
            }
        }
        _ => {
            for (&v, slot) in other.values().iter().zip(acc.values_mut()) {
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
}

/// Brute-force evaluation of the defining minimum: for each query point,
/// place the rotated tool with each sharp point on the query and count the
/// overlapping obstacle cells directly. Independent of the correlation and
/// field-shift machinery; intended for small instances.
pub fn imf_oracle<T: Real>(
    obstacle: &IndicatorGrid<T>,
    tool: &ToolAssembly<T>,
    queries: &[Vector3<T>],
) -> Vec<T> {
    let v_t = tool.volume();
    let cell_vol = obstacle.lattice().cell_volume();
    let union = tool.union_grid();
    let probes: Vec<IndicatorGrid<T>> = tool
        .rotations()
        .iter()
        .map(|r| union.rotate_about(r, &Vector3::zeros()))
        .collect();
    let probe_cells: Vec<Vec<Vector3<T>>> = probes
        .iter()
        .map(|p| {
            let lat = p.lattice().clone();
            p.set_cells().map(|c| lat.cell_center(c)).collect()
        })
        .collect();
    let positions = tool.sharp_point_positions();

    queries
        .iter()
        .map(|x| {
            let mut best = T::one();
            for (r_idx, rotation) in tool.rotations().iter().enumerate() {
                for k_pos in &positions {
                    let v = x - rotation.apply(k_pos);
                    let mut count = 0usize;
                    for w in &probe_cells[r_idx] {
                        if obstacle.get_signed(obstacle.lattice().nearest_cell(&(w + v))) {
                            count += 1;
                        }
                    }
                    let val = (T::of(count as f64) * cell_vol / v_t).min(T::one());
                    if val < best {
                        best = val;
                    }
                }
            }
            best
        })
        .collect()
}

/// Split support cells by the field value: `secluded` collects cells with
/// `field > lambda`, `accessible` the rest. The two partition the support.
/// Support cells outside the field's domain read as free space (value 0).
pub fn split_support<T: Real>(
    support: &IndicatorGrid<T>,
    field: &ScalarField<T>,
    lambda: T,
) -> (IndicatorGrid<T>, IndicatorGrid<T>) {
    let mut accessible = IndicatorGrid::empty(support.lattice().clone());
    let mut secluded = IndicatorGrid::empty(support.lattice().clone());
    for cell in support.set_cells() {
        let p = support.lattice().cell_center(cell);
        if field.value_at(&p, T::zero()) > lambda {
            secluded.set(cell, true);
        } else {
            accessible.set(cell, true);
        }
    }
    (accessible, secluded)
}
