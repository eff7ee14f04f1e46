use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::num::Real;

/// Axis-aligned voxel lattice: grid dimensions, uniform spacing, and the
/// world coordinate of the center of cell `(0, 0, 0)`.
///
/// 2D problems use `nz = 1`; there is no separate code path.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T: Real> {
    dims: [usize; 3],
    spacing: T,
    origin: Vector3<T>,
}

impl<T: Real> Lattice<T> {
    pub fn new(dims: [usize; 3], spacing: T, origin: Vector3<T>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::param(format!(
                "lattice dims must be >= 1, got {dims:?}"
            )));
        }
        if !(spacing > T::zero()) {
            return Err(Error::param("lattice spacing must be > 0"));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn origin(&self) -> Vector3<T> {
        self.origin
    }

    /// Total cell count.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        false // dims are validated >= 1
    }

    /// Volume of a single cell (`spacing^3`; 2D slabs count as one cell thick).
    pub fn cell_volume(&self) -> T {
        self.spacing * self.spacing * self.spacing
    }

    pub fn is_2d(&self) -> bool {
        self.dims[2] == 1
    }

    /// Axis index of the build/up direction: `z` in 3D, `y` for one-slab 2D grids.
    pub fn up_axis(&self) -> usize {
        if self.is_2d() {
            1
        } else {
            2
        }
    }

    /// Linear index with x fastest: `i + nx * (j + ny * k)`.
    #[inline]
    pub fn index(&self, cell: [usize; 3]) -> usize {
        cell[0] + self.dims[0] * (cell[1] + self.dims[1] * cell[2])
    }

    #[inline]
    pub fn cell_of_index(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn contains_cell(&self, cell: [i64; 3]) -> bool {
        (0..3).all(|a| cell[a] >= 0 && (cell[a] as usize) < self.dims[a])
    }

    /// World coordinates of a cell center.
    #[inline]
    pub fn cell_center(&self, cell: [usize; 3]) -> Vector3<T> {
        self.origin
            + Vector3::new(
                self.spacing * T::of(cell[0] as f64),
                self.spacing * T::of(cell[1] as f64),
                self.spacing * T::of(cell[2] as f64),
            )
    }

    /// Nearest cell to a world point, unclamped (may be out of bounds).
    #[inline]
    pub fn nearest_cell(&self, p: &Vector3<T>) -> [i64; 3] {
        let rel = (p - self.origin) / self.spacing;
        [
            rel.x.round().as_f64() as i64,
            rel.y.round().as_f64() as i64,
            rel.z.round().as_f64() as i64,
        ]
    }

    /// World-space bounding box of the lattice (cell boxes, not centers).
    pub fn bbox(&self) -> (Vector3<T>, Vector3<T>) {
        let half = self.spacing * T::of(0.5);
        let span = Vector3::new(
            self.spacing * T::of((self.dims[0] - 1) as f64),
            self.spacing * T::of((self.dims[1] - 1) as f64),
            self.spacing * T::of((self.dims[2] - 1) as f64),
        );
        (
            self.origin - Vector3::repeat(half),
            self.origin + span + Vector3::repeat(half),
        )
    }

    /// Center of the lattice bounding box; the default rotation pivot.
    pub fn centroid(&self) -> Vector3<T> {
        let (lo, hi) = self.bbox();
        (lo + hi) * T::of(0.5)
    }

    /// True when the two lattices are cell-for-cell compatible: same dims,
    /// same spacing, and origins coincident within a small fraction of a cell.
    pub fn same_as(&self, other: &Self) -> bool {
        if self.dims != other.dims {
            return false;
        }
        self.compatible_spacing(other) && self.aligned_with(other, 1e-6)
    }

    pub fn compatible_spacing(&self, other: &Self) -> bool {
        let rel = (self.spacing - other.spacing).abs() / self.spacing;
        rel < T::of(1e-9).max(T::default_epsilon() * T::of(8.0))
    }

    fn aligned_with(&self, other: &Self, tol: f64) -> bool {
        let d = (self.origin - other.origin) / self.spacing;
        d.iter().all(|c| c.abs() < T::of(tol))
    }

    /// Smallest lattice on this lattice's cell alignment that covers both
    /// `self` and every lattice in `others`. Expansion happens in whole cells
    /// so grids already registered to `self` keep exact integer offsets.
    pub fn cover(&self, others: &[&Lattice<T>]) -> Result<Self> {
        let h = self.spacing;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..3 {
            hi[a] = self.dims[a] as i64 - 1;
        }
        for other in others {
            if !self.compatible_spacing(other) {
                return Err(Error::mismatch(format!(
                    "cover: spacing {} vs {}",
                    self.spacing.as_f64(),
                    other.spacing.as_f64()
                )));
            }
            let rel = (other.origin - self.origin) / h;
            for a in 0..3 {
                let first = rel[a].as_f64();
                let last = first + (other.dims[a] - 1) as f64;
                lo[a] = lo[a].min(first.floor() as i64);
                hi[a] = hi[a].max(last.ceil() as i64);
            }
        }
        let dims = [
            (hi[0] - lo[0] + 1) as usize,
            (hi[1] - lo[1] + 1) as usize,
            (hi[2] - lo[2] + 1) as usize,
        ];
        let origin = self.origin
            + Vector3::new(
                h * T::of(lo[0] as f64),
                h * T::of(lo[1] as f64),
                h * T::of(lo[2] as f64),
            );
        Lattice::new(dims, h, origin)
    }

    /// Lattice grown by `layers` whole cells on the low side of `axis`.
    pub fn extended_below(&self, axis: usize, layers: usize) -> Result<Self> {
        let mut dims = self.dims;
        dims[axis] += layers;
        let mut origin = self.origin;
        origin[axis] -= self.spacing * T::of(layers as f64);
        Lattice::new(dims, self.spacing, origin)
    }

    /// Iterate all cells in linear order.
    pub fn cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| [i, j, k])))
    }
}
