use nalgebra::Vector3;

use super::bits::BitBuf;
use super::lattice::Lattice;
use super::rotation::Rotation;
use crate::error::{Error, Result};
use crate::num::Real;

/// Binary voxel field on a [`Lattice`]: each cell is in or out of the set.
///
/// Immutable in spirit: every operation returns a new grid, so grids can be
/// shared freely across parallel workers.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorGrid<T: Real> {
    lattice: Lattice<T>,
    cells: BitBuf,
}

/// Cellwise set operation for [`IndicatorGrid::boolean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersect,
    Subtract,
}

impl<T: Real> IndicatorGrid<T> {
    pub fn empty(lattice: Lattice<T>) -> Self {
        let cells = BitBuf::zeros(lattice.len());
        Self { lattice, cells }
    }

    pub fn full(lattice: Lattice<T>) -> Self {
        let mut g = Self::empty(lattice);
        for idx in 0..g.lattice.len() {
            g.cells.set(idx, true);
        }
        g
    }

    /// Build from a predicate over cell coordinates.
    pub fn from_fn(lattice: Lattice<T>, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let mut g = Self::empty(lattice);
        for cell in g.lattice.clone().cells() {
            if f(cell) {
                g.set(cell, true);
            }
        }
        g
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    #[inline]
    pub fn get(&self, cell: [usize; 3]) -> bool {
        self.cells.get(self.lattice.index(cell))
    }

    /// Bounds-checked signed lookup; out-of-lattice cells read as empty.
    #[inline]
    pub fn get_signed(&self, cell: [i64; 3]) -> bool {
        self.lattice.contains_cell(cell)
            && self.get([cell[0] as usize, cell[1] as usize, cell[2] as usize])
    }

    #[inline]
    pub fn set(&mut self, cell: [usize; 3], value: bool) {
        let idx = self.lattice.index(cell);
        self.cells.set(idx, value);
    }

    #[inline]
    pub fn get_linear(&self, idx: usize) -> bool {
        self.cells.get(idx)
    }

    pub fn count_set(&self) -> usize {
        self.cells.count_ones()
    }

    pub fn is_set_empty(&self) -> bool {
        !self.cells.any()
    }

    /// Material volume: set-cell count times `spacing^3`.
    pub fn volume(&self) -> T {
        T::of(self.count_set() as f64) * self.lattice.cell_volume()
    }

    /// Linear indices of all set cells.
    pub fn set_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.ones()
    }

    /// Cell coordinates of all set cells.
    pub fn set_cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.cells.ones().map(|idx| self.lattice.cell_of_index(idx))
    }

    /// Number of set cells shared with `other` (lattices must match).
    pub fn intersection_count(&self, other: &Self) -> Result<usize> {
        self.require_same_lattice(other)?;
        Ok(self.cells.intersection_count(&other.cells))
    }

    fn require_same_lattice(&self, other: &Self) -> Result<()> {
        if !self.lattice.same_as(&other.lattice) {
            return Err(Error::mismatch(format!(
                "grids on different lattices ({:?} vs {:?}); resample first",
                self.lattice.dims(),
                other.lattice.dims()
            )));
        }
        Ok(())
    }

    /// Cellwise boolean combination. Errors unless both grids share a lattice;
    /// the caller is responsible for co-registration.
    pub fn boolean(&self, other: &Self, op: BoolOp) -> Result<Self> {
        self.require_same_lattice(other)?;
        let mut out = self.clone();
        match op {
            BoolOp::Union => out.cells.union_with(&other.cells),
            BoolOp::Intersect => out.cells.intersect_with(&other.cells),
            BoolOp::Subtract => out.cells.subtract(&other.cells),
        }
        Ok(out)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.boolean(other, BoolOp::Union)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.boolean(other, BoolOp::Intersect)
    }

    pub fn subtract(&self, other: &Self) -> Result<Self> {
        self.boolean(other, BoolOp::Subtract)
    }

    /// Rotate about the lattice bounding-box centroid, resampling onto a new
    /// lattice that bounds the rotated extent (nearest neighbor).
    pub fn rotate(&self, r: &Rotation<T>) -> Self {
        self.rotate_about(r, &self.lattice.centroid())
    }

    /// Rotate about an arbitrary world-space pivot.
    ///
    /// Each output cell is set iff its center, pulled back through the
    /// rotation, lands in a set input cell. Nearest-neighbor keeps the grid
    /// binary; volume drift is bounded by the resampling ripple.
    pub fn rotate_about(&self, r: &Rotation<T>, pivot: &Vector3<T>) -> Self {
        let h = self.lattice.spacing();
        let (lo, hi) = self.lattice.bbox();
        let mut aabb_lo = Vector3::repeat(T::of(f64::INFINITY));
        let mut aabb_hi = Vector3::repeat(T::of(f64::NEG_INFINITY));
        for corner in 0..8 {
            let c = Vector3::new(
                if corner & 1 == 0 { lo.x } else { hi.x },
                if corner & 2 == 0 { lo.y } else { hi.y },
                if corner & 4 == 0 { lo.z } else { hi.z },
            );
            let rc = r.apply(&(c - pivot)) + pivot;
            aabb_lo = aabb_lo.inf(&rc);
            aabb_hi = aabb_hi.sup(&rc);
        }
        let mut dims = [0usize; 3];
        for a in 0..3 {
            let n = ((aabb_hi[a] - aabb_lo[a]) / h - T::of(1e-6))
                .ceil()
                .as_f64();
            dims[a] = (n as usize).max(1);
        }
        let half = h * T::of(0.5);
        let origin = aabb_lo + Vector3::repeat(half);
        let lattice = Lattice::new(dims, h, origin).expect("rotated bounds are valid");

        let inv = r.inverse();
        let mut out = Self::empty(lattice);
        for cell in out.lattice.clone().cells() {
            let q = out.lattice.cell_center(cell);
            let src = inv.apply(&(q - pivot)) + pivot;
            if self.get_signed(self.lattice.nearest_cell(&src)) {
                out.set(cell, true);
            }
        }
        out
    }

    /// Point reflection through the world origin (the grid's registration
    /// origin): the output has a cell at `-v` for every input cell at `v`.
    pub fn reflect(&self) -> Self {
        let h = self.lattice.spacing();
        let dims = self.lattice.dims();
        let span = Vector3::new(
            h * T::of((dims[0] - 1) as f64),
            h * T::of((dims[1] - 1) as f64),
            h * T::of((dims[2] - 1) as f64),
        );
        let origin = -(self.lattice.origin() + span);
        let lattice = Lattice::new(dims, h, origin).expect("reflection preserves validity");
        let mut out = Self::empty(lattice);
        for cell in self.set_cells() {
            out.set(
                [
                    dims[0] - 1 - cell[0],
                    dims[1] - 1 - cell[1],
                    dims[2] - 1 - cell[2],
                ],
                true,
            );
        }
        out
    }

    /// Nearest-neighbor resample onto `target`. Exact (pure index shift) when
    /// `target` shares this grid's spacing and cell alignment.
    pub fn resample_to(&self, target: &Lattice<T>) -> Self {
        let mut out = Self::empty(target.clone());
        for cell in target.cells() {
            let p = target.cell_center(cell);
            if self.get_signed(self.lattice.nearest_cell(&p)) {
                out.set(cell, true);
            }
        }
        out
    }

    /// Inclusive cell-index bounds of the set region, or `None` when empty.
    pub fn set_bbox(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for cell in self.set_cells() {
            any = true;
            for a in 0..3 {
                lo[a] = lo[a].min(cell[a]);
                hi[a] = hi[a].max(cell[a]);
            }
        }
        any.then_some((lo, hi))
    }

    /// Crop to the set-cell bounding box and drop a new world origin on it.
    /// Used to place a rotated part into the canonical build frame.
    pub fn crop_to_set_with_origin(&self, origin_of_min_cell: Vector3<T>) -> Result<Self> {
        let (lo, hi) = self
            .set_bbox()
            .ok_or_else(|| Error::EmptyGrid("cannot crop an empty grid".into()))?;
        let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
        let lattice = Lattice::new(dims, self.lattice.spacing(), origin_of_min_cell)?;
        let mut out = Self::empty(lattice);
        for cell in self.set_cells() {
            out.set([cell[0] - lo[0], cell[1] - lo[1], cell[2] - lo[2]], true);
        }
        Ok(out)
    }

    /// Cell bits packed little-endian, x-fastest, LSB-first within each byte.
    pub(crate) fn cell_bytes(&self) -> Vec<u8> {
        self.cells.to_bytes()
    }

    pub(crate) fn from_cell_bytes(lattice: Lattice<T>, bytes: &[u8]) -> Option<Self> {
        BitBuf::from_bytes(lattice.len(), bytes).map(|cells| Self { lattice, cells })
    }

    /// Count of set cells with at least one unset (or out-of-grid) face
    /// neighbor. 2D slabs ignore the z faces.
    pub fn surface_cell_count(&self) -> usize {
        let axes: &[usize] = if self.lattice.is_2d() {
            &[0, 1]
        } else {
            &[0, 1, 2]
        };
        self.set_cells()
            .filter(|cell| {
                axes.iter().any(|&a| {
                    let mut lo = [cell[0] as i64, cell[1] as i64, cell[2] as i64];
                    let mut hi = lo;
                    lo[a] -= 1;
                    hi[a] += 1;
                    !self.get_signed(lo) || !self.get_signed(hi)
                })
            })
            .count()
    }

    /// Volume of the symmetric difference with `other` (lattices must match).
    pub fn symmetric_difference_volume(&self, other: &Self) -> Result<T> {
        self.require_same_lattice(other)?;
        let inter = self.cells.intersection_count(&other.cells);
        let n = self.count_set() + other.count_set() - 2 * inter;
        Ok(T::of(n as f64) * self.lattice.cell_volume())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn box_grid(dims: [usize; 3], spacing: f64) -> IndicatorGrid<f64> {
        let lat = Lattice::new(dims, spacing, Vector3::new(0.5, 0.5, 0.5) * spacing).unwrap();
        IndicatorGrid::full(lat)
    }

    #[test]
    fn volume_empty_is_zero() {
        let g =
            IndicatorGrid::<f64>::empty(Lattice::new([4, 4, 4], 1.0, Vector3::zeros()).unwrap());
        assert_eq!(g.volume(), 0.0);
    }

    #[test]
    fn volume_solid_box() {
        // 10x4x4 solid box at 1 mm spacing -> 160 mm^3
        let g = box_grid([10, 4, 4], 1.0);
        assert_eq!(g.volume(), 160.0);
    }

    #[test]
    fn volume_matches_direct_count() {
        // independent oracle: naive cell loop
        let lat = Lattice::new([32, 32, 32], 0.25, Vector3::zeros()).unwrap();
        let g = IndicatorGrid::from_fn(lat.clone(), |[i, j, k]| (i * 31 + j * 17 + k * 7) % 5 < 2);
        let mut count = 0usize;
        for k in 0..32 {
            for j in 0..32 {
                for i in 0..32 {
                    if g.get([i, j, k]) {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(g.volume(), count as f64 * 0.25f64.powi(3));
    }

    #[test]
    fn rotate_identity_is_cell_exact() {
        let lat = Lattice::new([5, 4, 3], 0.7, Vector3::new(1.0, -2.0, 0.3)).unwrap();
        let g = IndicatorGrid::from_fn(lat, |[i, j, k]| (i + 2 * j + k) % 3 == 0);
        let r = g.rotate(&Rotation::identity());
        assert_eq!(r.lattice().dims(), g.lattice().dims());
        for cell in g.lattice().cells() {
            assert_eq!(r.get(cell), g.get(cell));
        }
    }

    #[test]
    fn rotate_box_quarter_turn_swaps_dims() {
        let g = box_grid([10, 4, 4], 1.0);
        let r = g.rotate(&Rotation::about_z(FRAC_PI_2));
        assert_eq!(r.lattice().dims(), [4, 10, 4]);
        assert_eq!(r.volume(), g.volume());
    }

    #[test]
    fn rotate_cube_45_preserves_volume_within_5_percent() {
        let g = box_grid([8, 8, 8], 1.0);
        let r = g.rotate(&Rotation::about_z(FRAC_PI_4));
        let drift = (r.volume() - g.volume()).abs() / g.volume();
        assert!(drift <= 0.05, "drift {drift}");

        // independent check: each set output cell center must lie inside the
        // rotated cube (within half-cell tolerance), counted per output cell
        let pivot = g.lattice().centroid();
        let inv = Rotation::<f64>::about_z(FRAC_PI_4).inverse();
        let (lo, hi) = g.lattice().bbox();
        let slack = 0.5 * g.lattice().spacing() * 1.5; // half-diagonal of a cell in-plane
        for cell in r.set_cells() {
            let q = r.lattice().cell_center(cell);
            let back = inv.apply(&(q - pivot)) + pivot;
            for a in 0..3 {
                assert!(back[a] > lo[a] - slack && back[a] < hi[a] + slack);
            }
        }
    }

    #[test]
    fn rotate_ball_oblique_axis_preserves_volume() {
        let lat = Lattice::new([13, 13, 13], 1.0, Vector3::new(0.5, 0.5, 0.5)).unwrap();
        let ball = IndicatorGrid::from_fn(lat.clone(), |c| {
            (lat.cell_center(c) - Vector3::new(6.5, 6.5, 6.5)).norm_squared() <= 36.0
        });
        let r = Rotation::<f64>::from_axis_angle(Vector3::new(1.0, 1.0, 0.0), 0.52).unwrap();
        let rotated = ball.rotate(&r);
        let drift: f64 = (rotated.volume() - ball.volume()).abs() / ball.volume();
        assert!(drift <= 0.05, "drift {drift}");
    }

    #[test]
    fn rotate_composition_close_to_single_rotation() {
        let g = box_grid([10, 10, 10], 1.0);
        let r1 = Rotation::<f64>::from_axis_angle(Vector3::x(), 0.41).unwrap();
        let r2 = Rotation::<f64>::from_axis_angle(Vector3::z(), 0.77).unwrap();
        let combined = g.rotate(&r1.compose(&r2));
        let stepped = g.rotate(&r2).rotate(&r1);
        // resample one onto the other's lattice to compare world content
        let stepped_on = stepped.resample_to(combined.lattice());
        let sym = combined.symmetric_difference_volume(&stepped_on).unwrap();
        let bound = combined.surface_cell_count() as f64 * combined.lattice().cell_volume();
        assert!(sym <= bound, "sym diff {sym} > bound {bound}");
    }

    #[test]
    fn reflect_single_cell() {
        // single cell at offset (2,1,0) reflects to (-2,-1,0)
        let lat = Lattice::new([5, 5, 1], 1.0, Vector3::new(-2.0, -2.0, 0.0)).unwrap();
        let mut g = IndicatorGrid::empty(lat);
        g.set([4, 3, 0], true); // world (2, 1, 0)
        let r = g.reflect();
        let hits: Vec<_> = r.set_cells().collect();
        assert_eq!(hits.len(), 1);
        let p = r.lattice().cell_center(hits[0]);
        assert!((p - Vector3::new(-2.0, -1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reflect_symmetric_ball_is_identical() {
        // ball centered on the world origin
        let lat = Lattice::new([9, 9, 9], 1.0, Vector3::new(-4.0, -4.0, -4.0)).unwrap();
        let g = IndicatorGrid::from_fn(lat.clone(), |c| {
            let p = lat.cell_center(c);
            p.norm_squared() <= 16.0
        });
        let r = g.reflect();
        assert!(r.lattice().same_as(g.lattice()));
        assert_eq!(r, g);
    }

    #[test]
    fn boolean_ops_follow_set_algebra() {
        let lat = Lattice::new([4, 4, 4], 1.0, Vector3::zeros()).unwrap();
        let g = IndicatorGrid::from_fn(lat.clone(), |[i, j, k]| (i + j + k) % 2 == 0);
        let empty = IndicatorGrid::empty(lat.clone());
        let full = IndicatorGrid::full(lat.clone());

        assert_eq!(g.union(&empty).unwrap(), g);
        assert_eq!(g.intersect(&g).unwrap(), g);

        let mut one = IndicatorGrid::empty(lat);
        one.set([1, 2, 3], true);
        let sub = full.subtract(&one).unwrap();
        assert_eq!(sub.volume(), 63.0);
    }

    #[test]
    fn boolean_rejects_lattice_mismatch() {
        let a = box_grid([4, 4, 4], 1.0);
        let b = box_grid([4, 4, 4], 0.5);
        assert!(matches!(a.union(&b), Err(Error::LatticeMismatch(_))));
        let c = box_grid([4, 4, 5], 1.0);
        assert!(a.union(&c).is_err());
    }

    #[test]
    fn resample_aligned_window_is_exact() {
        let lat = Lattice::new([6, 6, 6], 1.0, Vector3::new(0.5, 0.5, 0.5)).unwrap();
        let g = IndicatorGrid::from_fn(lat, |[i, j, k]| i == j && j == k);
        let target = Lattice::new([3, 3, 3], 1.0, Vector3::new(1.5, 1.5, 1.5)).unwrap();
        let w = g.resample_to(&target);
        for cell in target.cells() {
            assert_eq!(w.get(cell), g.get([cell[0] + 1, cell[1] + 1, cell[2] + 1]));
        }
    }

    #[test]
    fn reflect_is_an_involution() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(
                    1usize..6,
                    1usize..6,
                    1usize..4,
                    0u64..1000,
                    -3i32..3,
                    -3i32..3,
                ),
                |(nx, ny, nz, seed, ox, oy)| {
                    let lat = Lattice::new(
                        [nx, ny, nz],
                        1.0,
                        Vector3::new(ox as f64 + 0.5, oy as f64 - 0.25, 0.0),
                    )
                    .unwrap();
                    let g = IndicatorGrid::from_fn(lat, |[i, j, k]| {
                        (i as u64 * 31 + j as u64 * 7 + k as u64 * 3 + seed) % 3 == 0
                    });
                    prop_assert_eq!(g.reflect().reflect(), g);
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn set_bbox_and_crop() {
        let lat = Lattice::new([8, 8, 8], 1.0, Vector3::zeros()).unwrap();
        let mut g = IndicatorGrid::empty(lat);
        g.set([2, 3, 4], true);
        g.set([5, 3, 6], true);
        let (lo, hi) = g.set_bbox().unwrap();
        assert_eq!(lo, [2, 3, 4]);
        assert_eq!(hi, [5, 3, 6]);
        let cropped = g.crop_to_set_with_origin(Vector3::zeros()).unwrap();
        assert_eq!(cropped.lattice().dims(), [4, 1, 3]);
        assert_eq!(cropped.count_set(), 2);
        assert!(cropped.get([0, 0, 0]) && cropped.get([3, 0, 2]));
    }
}
