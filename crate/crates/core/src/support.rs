//! Sacrificial support generation and near-net assembly.
//!
//! Supports follow a layer-sweep columnar rule: walking the build axis from
//! the top down, a part cell is unsupported when the layer below holds no
//! material (part or support) within a horizontal Chebyshev radius set by the
//! overhang angle, and every unsupported cell drops a straight column of
//! support through the void until it lands on part or the platform level
//! (layer 0). `alpha = 90` is the conservative straight-projection rule;
//! `alpha = 45` lets 45-degree slopes carry themselves.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Rotation};
use crate::num::Real;

/// The as-printed shape: part rotated into the build frame plus its supports.
///
/// Build frame convention: the build axis is `+z` (`+y` for one-slab 2D
/// grids), the content rests on layer 0 (the platform top is the world plane
/// at height 0), and the footprint is centered on the world origin. Fixture
/// geometry is authored against this frame.
#[derive(Debug, Clone)]
pub struct NearNetShape<T: Real> {
    pub part: IndicatorGrid<T>,
    pub support: IndicatorGrid<T>,
    pub build_dir: Vector3<T>,
}

impl<T: Real> NearNetShape<T> {
    /// Part ∪ support.
    pub fn union_grid(&self) -> IndicatorGrid<T> {
        self.part
            .union(&self.support)
            .expect("part and support share the build lattice")
    }
}

/// Horizontal self-support radius in cells for an overhang angle in degrees.
fn chebyshev_radius<T: Real>(alpha_deg: T) -> Result<usize> {
    let a = alpha_deg.as_f64();
    if !(a > 0.0 && a <= 90.0) {
        return Err(Error::param(format!(
            "overhang angle must be in (0, 90], got {a}"
        )));
    }
    if a == 90.0 {
        return Ok(0);
    }
    // the epsilon absorbs trig roundoff so tan(45 deg) floors to 1, not 0
    Ok(((90.0 - a).to_radians().tan() + 1e-9).floor() as usize)
}

/// Generate the support indicator for a part already rotated into the build
/// frame. Supports occupy void cells only (`S ∩ part = ∅`) and every column
/// runs from just under the part cell it serves down to part or layer 0.
pub fn generate_support<T: Real>(
    part: &IndicatorGrid<T>,
    alpha_deg: T,
) -> Result<IndicatorGrid<T>> {
    let radius = chebyshev_radius(alpha_deg)? as i64;
    let lattice = part.lattice().clone();
    let up = lattice.up_axis();
    let (ha, hb) = match up {
        2 => (0usize, 1usize),
        _ => (0usize, 2usize), // 2D: sweep y, x is horizontal, z is the slab axis
    };
    let layers = lattice.dims()[up];
    let mut support = IndicatorGrid::empty(lattice.clone());
    let mut material = part.clone();

    for layer in (1..layers).rev() {
        // two-phase per layer: find every unsupported part cell against the
        // material state below, then drop all their columns
        let mut seeds = Vec::new();
        for cell in lattice.cells() {
            if cell[up] != layer || !part.get(cell) {
                continue;
            }
            let mut held = false;
            'scan: for da in -radius..=radius {
                for db in -radius..=radius {
                    let mut below = [cell[0] as i64, cell[1] as i64, cell[2] as i64];
                    below[up] -= 1;
                    below[ha] += da;
                    below[hb] += db;
                    if material.get_signed(below) {
                        held = true;
                        break 'scan;
                    }
                }
            }
            if !held {
                seeds.push(cell);
            }
        }
        for cell in seeds {
            let mut col = cell;
            while col[up] > 0 {
                col[up] -= 1;
                if part.get(col) {
                    break;
                }
                if support.get(col) {
                    break; // the rest of this column is already filled
                }
                support.set(col, true);
                material.set(col, true);
            }
        }
    }
    Ok(support)
}

/// Rotate `part` so the build direction `b` becomes the build axis, place it
/// into the canonical build frame, and generate supports.
///
/// The rotation is the minimal-angle map from `b` onto the build axis; the
/// antipodal case resolves to a half turn about `+x` (about `+z` for 2D
/// slabs, the only in-plane choice).
pub fn assemble_near_net<T: Real>(
    part: &IndicatorGrid<T>,
    b: Vector3<T>,
    alpha_deg: T,
) -> Result<NearNetShape<T>> {
    assemble_near_net_with_roll(part, b, T::zero(), alpha_deg)
}

/// [`assemble_near_net`] with an extra roll about the build axis applied
/// after the alignment rotation. Roll is optional spin the direction vector
/// alone cannot express; `roll = 0` reproduces `assemble_near_net`.
pub fn assemble_near_net_with_roll<T: Real>(
    part: &IndicatorGrid<T>,
    b: Vector3<T>,
    roll: T,
    alpha_deg: T,
) -> Result<NearNetShape<T>> {
    let norm = b.norm();
    if norm <= T::default_epsilon() * T::of(16.0) {
        return Err(Error::param("build direction must be non-zero"));
    }
    let b = b / norm;

    let lattice = part.lattice();
    let (up_vec, fallback) = if lattice.is_2d() {
        if b.z.abs() > T::of(1e-9) {
            return Err(Error::param(
                "2D parts take in-plane build directions (b.z = 0)",
            ));
        }
        (Vector3::y(), Vector3::z())
    } else {
        (Vector3::z(), Vector3::x())
    };

    let mut rotation = Rotation::between(b, up_vec, fallback)?;
    if roll != T::zero() {
        rotation = Rotation::from_axis_angle(up_vec, roll)?.compose(&rotation);
    }
    let rotated = part.rotate(&rotation);
    let placed = place_in_build_frame(&rotated)?;
    let support = generate_support(&placed, alpha_deg)?;
    Ok(NearNetShape {
        part: placed,
        support,
        build_dir: b,
    })
}

/// Crop to the set cells and drop the canonical build-frame origin on them:
/// footprint centered on 0, content bottom face on the height-0 plane.
pub fn place_in_build_frame<T: Real>(g: &IndicatorGrid<T>) -> Result<IndicatorGrid<T>> {
    let (lo, hi) = g
        .set_bbox()
        .ok_or_else(|| Error::EmptyGrid("cannot place an empty part".into()))?;
    let h = g.lattice().spacing();
    let up = g.lattice().up_axis();
    let mut origin = Vector3::zeros();
    for a in 0..3 {
        let extent = (hi[a] - lo[a]) as f64;
        origin[a] = if a == up {
            h * T::of(0.5)
        } else if g.lattice().is_2d() && a == 2 {
            T::zero()
        } else {
            -h * T::of(extent / 2.0)
        };
    }
    g.crop_to_set_with_origin(origin)
}
