use super::indicator::IndicatorGrid;
use super::lattice::Lattice;
use crate::error::{Error, Result};
use crate::num::Real;

/// Dense real-valued field on a [`Lattice`]. Holds correlation overlaps and
/// normalized inaccessibility values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T: Real> {
    lattice: Lattice<T>,
    cells: Vec<T>,
}

/// Which side of the threshold [`ScalarField::threshold`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Cells with `value > lambda`.
    Greater,
    /// Cells with `value <= lambda`.
    Leq,
}

impl<T: Real> ScalarField<T> {
    pub fn from_elem(lattice: Lattice<T>, value: T) -> Self {
        let cells = vec![value; lattice.len()];
        Self { lattice, cells }
    }

    pub fn zeros(lattice: Lattice<T>) -> Self {
        Self::from_elem(lattice, T::zero())
    }

    pub fn from_vec(lattice: Lattice<T>, cells: Vec<T>) -> Result<Self> {
        if cells.len() != lattice.len() {
            return Err(Error::param(format!(
                "field payload has {} values, lattice wants {}",
                cells.len(),
                lattice.len()
            )));
        }
        Ok(Self { lattice, cells })
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn values(&self) -> &[T] {
        &self.cells
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    #[inline]
    pub fn get(&self, cell: [usize; 3]) -> T {
        self.cells[self.lattice.index(cell)]
    }

    #[inline]
    pub fn set(&mut self, cell: [usize; 3], value: T) {
        let idx = self.lattice.index(cell);
        self.cells[idx] = value;
    }

    /// Nearest-cell lookup by world point; `default` outside the lattice.
    #[inline]
    pub fn value_at(&self, p: &nalgebra::Vector3<T>, default: T) -> T {
        let cell = self.lattice.nearest_cell(p);
        if self.lattice.contains_cell(cell) {
            self.cells[self
                .lattice
                .index([cell[0] as usize, cell[1] as usize, cell[2] as usize])]
        } else {
            default
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            lattice: self.lattice.clone(),
            cells: self.cells.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cellwise minimum with `other` (same lattice required).
    pub fn min_with(&mut self, other: &Self) -> Result<()> {
        if !self.lattice.same_as(&other.lattice) {
            return Err(Error::mismatch("min_with needs co-registered fields"));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            if *b < *a {
                *a = *b;
            }
        }
        Ok(())
    }

    pub fn max_value(&self) -> T {
        self.cells
            .iter()
            .copied()
            .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b))
    }

    pub fn min_value(&self) -> T {
        self.cells
            .iter()
            .copied()
            .fold(T::of(f64::INFINITY), |a, b| a.min(b))
    }

    pub fn all_finite(&self) -> bool {
        self.cells.iter().all(|v| v.is_finite())
    }

    /// Level-set extraction: keep cells above (or at/below) `lambda`.
    pub fn threshold(&self, lambda: T, mode: ThresholdMode) -> IndicatorGrid<T> {
        let mut out = IndicatorGrid::empty(self.lattice.clone());
        for (idx, &v) in self.cells.iter().enumerate() {
            let keep = match mode {
                ThresholdMode::Greater => v > lambda,
                ThresholdMode::Leq => v <= lambda,
            };
            if keep {
                out.set(self.lattice.cell_of_index(idx), true);
            }
        }
        out
    }

    /// Copy the window of this field covered by `target` (nearest neighbor;
    /// exact for aligned lattices). Out-of-range cells take `default`.
    pub fn resample_to(&self, target: &Lattice<T>, default: T) -> Self {
        let mut out = Self::from_elem(target.clone(), default);
        for cell in target.cells() {
            let p = target.cell_center(cell);
            let v = self.value_at(&p, default);
            out.set(cell, v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn lat(dims: [usize; 3]) -> Lattice<f64> {
        Lattice::new(dims, 1.0, Vector3::new(0.5, 0.5, 0.5)).unwrap()
    }

    #[test]
    fn threshold_constant_fields() {
        let f0 = ScalarField::from_elem(lat([4, 4, 1]), 0.0);
        assert_eq!(f0.threshold(0.001, ThresholdMode::Greater).count_set(), 0);
        let f1 = ScalarField::from_elem(lat([4, 4, 1]), 1.0);
        assert_eq!(f1.threshold(0.001, ThresholdMode::Greater).count_set(), 16);
    }

    #[test]
    fn threshold_sides_partition_lattice() {
        let l = lat([5, 3, 2]);
        let f = ScalarField::from_vec(l.clone(), (0..l.len()).map(|i| (i as f64) / 10.0).collect())
            .unwrap();
        let hi = f.threshold(1.3, ThresholdMode::Greater);
        let lo = f.threshold(1.3, ThresholdMode::Leq);
        assert_eq!(hi.count_set() + lo.count_set(), l.len());
        assert_eq!(hi.intersection_count(&lo).unwrap(), 0);
    }

    #[test]
    fn min_with_takes_cellwise_min() {
        let l = lat([2, 2, 1]);
        let mut a = ScalarField::from_vec(l.clone(), vec![0.1, 0.9, 0.5, 0.3]).unwrap();
        let b = ScalarField::from_vec(l, vec![0.2, 0.4, 0.5, 0.1]).unwrap();
        a.min_with(&b).unwrap();
        assert_eq!(a.values(), &[0.1, 0.4, 0.5, 0.1]);
    }

    #[test]
    fn value_at_defaults_outside() {
        let f = ScalarField::from_elem(lat([2, 2, 1]), 0.7);
        assert_eq!(f.value_at(&Vector3::new(0.5, 0.5, 0.5), -1.0), 0.7);
        assert_eq!(f.value_at(&Vector3::new(40.0, 0.5, 0.5), -1.0), -1.0);
    }

    #[test]
    fn threshold_complement_property() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(1usize..6, 1usize..6, 0u64..500, 0.0f64..1.0),
                |(nx, ny, seed, lambda)| {
                    let l = lat([nx, ny, 2]);
                    let f = ScalarField::from_vec(
                        l.clone(),
                        (0..l.len())
                            .map(|i| ((i as u64 * 37 + seed) % 101) as f64 / 100.0)
                            .collect(),
                    )
                    .unwrap();
                    let hi = f.threshold(lambda, ThresholdMode::Greater);
                    let lo = f.threshold(lambda, ThresholdMode::Leq);
                    prop_assert_eq!(hi.intersection_count(&lo).unwrap(), 0);
                    prop_assert_eq!(hi.count_set() + lo.count_set(), l.len());
                    Ok(())
                },
            )
            .unwrap();
    }
}
