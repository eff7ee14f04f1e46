use nalgebra::Vector3;
use rayon::prelude::*;

use super::stl::TriangleMesh;
use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Lattice};
use crate::num::Real;

/// Diagnostics from a voxelization pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoxelizeReport {
    /// Rows whose ray ended inside material (odd crossing count): the mesh is
    /// not watertight along them. Content there is parity-best-effort.
    pub open_rows: usize,
    /// Rows that needed a jittered re-cast after hitting an edge or vertex.
    pub jittered_rows: usize,
}

impl VoxelizeReport {
    pub fn is_clean(&self) -> bool {
        self.open_rows == 0
    }
}

/// Voxelize a triangle mesh at uniform `spacing`: a cell is set when its
/// center lies inside the mesh by ray parity along +x. Degenerate hits
/// (edges, vertices, rays in a triangle's plane) re-cast the whole row with a
/// deterministic sub-cell offset. Non-watertight input is reported in the
/// [`VoxelizeReport`] and voxelized best-effort rather than rejected.
pub fn voxelize<T: Real>(
    mesh: &TriangleMesh,
    spacing: T,
) -> Result<(IndicatorGrid<T>, VoxelizeReport)> {
    if !(spacing > T::zero()) {
        return Err(Error::param("voxel spacing must be > 0"));
    }
    if !mesh.is_finite() {
        return Err(Error::param("mesh has non-finite vertices"));
    }
    let (lo, hi) = mesh
        .bounds()
        .ok_or_else(|| Error::EmptyGrid("cannot voxelize an empty mesh".into()))?;

    let h = spacing.as_f64();
    let mut dims = [0usize; 3];
    for a in 0..3 {
        dims[a] = (((hi[a] - lo[a]) / h - 1e-9).ceil() as usize).max(1);
    }
    let origin = Vector3::new(
        T::of(lo[0] + h / 2.0),
        T::of(lo[1] + h / 2.0),
        T::of(lo[2] + h / 2.0),
    );
    let lattice = Lattice::new(dims, spacing, origin)?;

    // one parity row per (j, k): sweep along +x through the cell centers
    let rows: Vec<RowResult> = (0..dims[1] * dims[2])
        .into_par_iter()
        .map(|row| {
            let j = row % dims[1];
            let k = row / dims[1];
            let yc = lo[1] + h / 2.0 + h * j as f64;
            let zc = lo[2] + h / 2.0 + h * k as f64;
            cast_row(mesh, yc, zc, h)
        })
        .collect();

    let mut grid = IndicatorGrid::empty(lattice);
    let mut report = VoxelizeReport::default();
    for (row, res) in rows.iter().enumerate() {
        let j = row % dims[1];
        let k = row / dims[1];
        if res.open {
            report.open_rows += 1;
        }
        if res.jittered {
            report.jittered_rows += 1;
        }
        for i in 0..dims[0] {
            let xc = lo[0] + h / 2.0 + h * i as f64;
            let beyond = res.crossings.iter().filter(|&&x| x > xc).count();
            if beyond % 2 == 1 {
                grid.set([i, j, k], true);
            }
        }
    }
    Ok((grid, report))
}

struct RowResult {
    crossings: Vec<f64>,
    open: bool,
    jittered: bool,
}

fn cast_row(mesh: &TriangleMesh, yc: f64, zc: f64, h: f64) -> RowResult {
    let mut jittered = false;
    for attempt in 0..16 {
        // deterministic sub-cell offsets on retry, biggest about half a cell
        let d = h * 2.9e-2 * attempt as f64;
        match crossings_at(mesh, yc + d, zc + 1.37 * d) {
            Some(mut xs) => {
                xs.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
                let open = xs.len() % 2 == 1;
                return RowResult {
                    crossings: xs,
                    open,
                    jittered,
                };
            }
            None => jittered = true,
        }
    }
    // give up on cleanliness; accept boundary-grazing hits as crossings
    let xs = forced_crossings(mesh, yc, zc);
    RowResult {
        crossings: xs,
        open: true,
        jittered: true,
    }
}

/// Crossing x values of the ray (y, z) = const, or `None` on a degenerate hit
/// that needs a jittered retry.
fn crossings_at(mesh: &TriangleMesh, y: f64, z: f64) -> Option<Vec<f64>> {
    const EPS: f64 = 1e-12;
    let mut xs = Vec::new();
    for tri in &mesh.triangles {
        let e1 = [tri[1][1] - tri[0][1], tri[1][2] - tri[0][2]];
        let e2 = [tri[2][1] - tri[0][1], tri[2][2] - tri[0][2]];
        let denom = e1[0] * e2[1] - e1[1] * e2[0];
        let py = y - tri[0][1];
        let pz = z - tri[0][2];
        if denom.abs() < EPS {
            // triangle plane contains the ray direction; degenerate only if
            // the point grazes its projected extent
            let in_y = y >= tri.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min) - EPS
                && y <= tri.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max) + EPS;
            let in_z = z >= tri.iter().map(|v| v[2]).fold(f64::INFINITY, f64::min) - EPS
                && z <= tri.iter().map(|v| v[2]).fold(f64::NEG_INFINITY, f64::max) + EPS;
            if in_y && in_z {
                return None;
            }
            continue;
        }
        let u = (py * e2[1] - pz * e2[0]) / denom;
        let v = (pz * e1[0] - py * e1[1]) / denom;
        let w = 1.0 - u - v;
        let inside = u > 0.0 && v > 0.0 && w > 0.0;
        let near_edge = u.abs() < 1e-9 || v.abs() < 1e-9 || w.abs() < 1e-9;
        if near_edge && u > -1e-9 && v > -1e-9 && w > -1e-9 {
            return None;
        }
        if inside {
            xs.push(tri[0][0] + u * (tri[1][0] - tri[0][0]) + v * (tri[2][0] - tri[0][0]));
        }
    }
    Some(xs)
}

fn forced_crossings(mesh: &TriangleMesh, y: f64, z: f64) -> Vec<f64> {
    let mut xs = Vec::new();
    for tri in &mesh.triangles {
        let e1 = [tri[1][1] - tri[0][1], tri[1][2] - tri[0][2]];
        let e2 = [tri[2][1] - tri[0][1], tri[2][2] - tri[0][2]];
        let denom = e1[0] * e2[1] - e1[1] * e2[0];
        if denom.abs() < 1e-12 {
            continue;
        }
        let py = y - tri[0][1];
        let pz = z - tri[0][2];
        let u = (py * e2[1] - pz * e2[0]) / denom;
        let v = (pz * e1[0] - py * e1[1]) / denom;
        if u >= 0.0 && v >= 0.0 && u + v <= 1.0 {
            xs.push(tri[0][0] + u * (tri[1][0] - tri[0][0]) + v * (tri[2][0] - tri[0][0]));
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
    xs
}
