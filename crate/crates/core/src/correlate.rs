//! FFT cross-correlation of indicator grids.
//!
//! `correlate(a, b)` produces the overlap-volume field `c(t) = vol(a ∩ (b+t))`
//! over all translations `t` of the probe, computed as a zero-padded linear
//! correlation (equivalently, the convolution of `a` with the reflected
//! probe). Raw spectral values are rounded back to the integer overlap count
//! they represent before scaling by the cell volume, so downstream thresholds
//! see exact set arithmetic.

use nalgebra::Vector3;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Lattice, ScalarField};
use crate::num::Real;

/// Obstacle spectrum reused across many probes (one FFT of the obstacle per
/// padded size instead of one per rotation). `probe_dims_bound` must be at
/// least the dims of every probe that will be correlated against it.
pub struct PreparedObstacle<T: Real> {
    lattice: Lattice<T>,
    padded: [usize; 3],
    spectrum: Vec<Complex<T>>,
}

impl<T: Real> PreparedObstacle<T> {
    pub fn new(obstacle: &IndicatorGrid<T>, probe_dims_bound: [usize; 3]) -> Self {
        let od = obstacle.lattice().dims();
        let padded = [
            next_smooth(od[0] + probe_dims_bound[0].max(1) - 1),
            next_smooth(od[1] + probe_dims_bound[1].max(1) - 1),
            next_smooth(od[2] + probe_dims_bound[2].max(1) - 1),
        ];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); padded[0] * padded[1] * padded[2]];
        for [i, j, k] in obstacle.set_cells() {
            buf[i + padded[0] * (j + padded[1] * k)] = Complex::new(T::one(), T::zero());
        }
        fft3_in_place(&mut buf, padded, false);
        Self {
            lattice: obstacle.lattice().clone(),
            padded,
            spectrum: buf,
        }
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    /// Correlate against one probe. See [`correlate`] for the field contract.
    pub fn correlate(&self, probe: &IndicatorGrid<T>) -> Result<ScalarField<T>> {
        if probe.is_set_empty() {
            return Err(Error::EmptyGrid(
                "correlation probe has no set cells".into(),
            ));
        }
        if !self.lattice.compatible_spacing(probe.lattice()) {
            return Err(Error::mismatch(format!(
                "correlation spacing mismatch: {} vs {}",
                self.lattice.spacing().as_f64(),
                probe.lattice().spacing().as_f64()
            )));
        }
        let od = self.lattice.dims();
        let pd = probe.lattice().dims();
        let out_dims = [od[0] + pd[0] - 1, od[1] + pd[1] - 1, od[2] + pd[2] - 1];
        for a in 0..3 {
            if out_dims[a] > self.padded[a] {
                return Err(Error::param(format!(
                    "probe dims {pd:?} exceed the prepared padding {:?}",
                    self.padded
                )));
            }
        }

        // probe spectrum
        let n = self.padded[0] * self.padded[1] * self.padded[2];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        for [i, j, k] in probe.set_cells() {
            buf[i + self.padded[0] * (j + self.padded[1] * k)] = Complex::new(T::one(), T::zero());
        }
        fft3_in_place(&mut buf, self.padded, false);

        // cross-spectrum A * conj(B), then back to lag space
        for (x, a) in buf.iter_mut().zip(&self.spectrum) {
            *x = a * x.conj();
        }
        fft3_in_place(&mut buf, self.padded, true);

        // gather lags into the output window; lag = m - (pd - 1) per axis,
        // negative lags wrap to the top of the padded cube
        let h = self.lattice.spacing();
        let cell_vol = self.lattice.cell_volume();
        let scale = T::one() / T::of(n as f64);
        let origin = self.lattice.origin()
            - probe.lattice().origin()
            - Vector3::new(
                h * T::of((pd[0] - 1) as f64),
                h * T::of((pd[1] - 1) as f64),
                h * T::of((pd[2] - 1) as f64),
            );
        let out_lat = Lattice::new(out_dims, h, origin)?;
        let mut out = ScalarField::zeros(out_lat);
        for mz in 0..out_dims[2] {
            let sz = wrap_lag(mz, pd[2], self.padded[2]);
            for my in 0..out_dims[1] {
                let sy = wrap_lag(my, pd[1], self.padded[1]);
                for mx in 0..out_dims[0] {
                    let sx = wrap_lag(mx, pd[0], self.padded[0]);
                    let raw = buf[sx + self.padded[0] * (sy + self.padded[1] * sz)].re * scale;
                    let count = raw.round().max(T::zero());
                    out.set([mx, my, mz], count * cell_vol);
                }
            }
        }
        Ok(out)
    }
}

#[inline]
fn wrap_lag(m: usize, probe_n: usize, padded: usize) -> usize {
    let lag = m as i64 - (probe_n as i64 - 1);
    if lag >= 0 {
        lag as usize
    } else {
        (padded as i64 + lag) as usize
    }
}

/// Overlap field `c(t) = vol(obstacle ∩ (probe + t))` by zero-padded FFT.
///
/// The output lattice is registered in translation space: the value at world
/// point `t` is the overlap volume when the probe is rigidly translated by
/// `t` (equivalently, when the probe's registration origin is moved to `t`,
/// for probes registered about the world origin). Values are exact integer
/// overlap counts scaled by `spacing^3`.
pub fn correlate<T: Real>(
    obstacle: &IndicatorGrid<T>,
    probe: &IndicatorGrid<T>,
) -> Result<ScalarField<T>> {
    PreparedObstacle::new(obstacle, probe.lattice().dims()).correlate(probe)
}

/// Same contract as [`correlate`], by direct summation over set-cell pairs.
/// Intended as the independent oracle for small instances (≤ 32³ or sparse).
pub fn correlate_direct<T: Real>(
    obstacle: &IndicatorGrid<T>,
    probe: &IndicatorGrid<T>,
) -> Result<ScalarField<T>> {
    if probe.is_set_empty() {
        return Err(Error::EmptyGrid(
            "correlation probe has no set cells".into(),
        ));
    }
    if !obstacle.lattice().compatible_spacing(probe.lattice()) {
        return Err(Error::mismatch("correlation spacing mismatch"));
    }
    let od = obstacle.lattice().dims();
    let pd = probe.lattice().dims();
    let out_dims = [od[0] + pd[0] - 1, od[1] + pd[1] - 1, od[2] + pd[2] - 1];
    let h = obstacle.lattice().spacing();
    let origin = obstacle.lattice().origin()
        - probe.lattice().origin()
        - Vector3::new(
            h * T::of((pd[0] - 1) as f64),
            h * T::of((pd[1] - 1) as f64),
            h * T::of((pd[2] - 1) as f64),
        );
    let out_lat = Lattice::new(out_dims, h, origin)?;
    let mut counts = vec![0u32; out_lat.len()];
    let probe_cells: Vec<[usize; 3]> = probe.set_cells().collect();
    for [ox, oy, oz] in obstacle.set_cells() {
        for &[px, py, pz] in &probe_cells {
            let m = [
                ox + pd[0] - 1 - px,
                oy + pd[1] - 1 - py,
                oz + pd[2] - 1 - pz,
            ];
            counts[out_lat.index(m)] += 1;
        }
    }
    let cell_vol = obstacle.lattice().cell_volume();
    let cells = counts
        .into_iter()
        .map(|c| T::of(c as f64) * cell_vol)
        .collect();
    ScalarField::from_vec(out_lat, cells)
}

/// In-place 3D complex FFT over a flat x-fastest buffer, one axis at a time.
fn fft3_in_place<T: Real>(buf: &mut [Complex<T>], dims: [usize; 3], inverse: bool) {
    let [nx, ny, nz] = dims;
    let mut planner = FftPlanner::<T>::new();
    let mut plan = |n: usize| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };

    // x: contiguous rows
    let fx = plan(nx);
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fx.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(nx) {
        fx.process_with_scratch(row, &mut scratch);
    }

    // y and z: gather strided lanes into a scratch lane
    let fy = plan(ny);
    scratch.resize(
        fy.get_inplace_scratch_len().max(ny),
        Complex::new(T::zero(), T::zero()),
    );
    let mut lane = vec![Complex::new(T::zero(), T::zero()); ny];
    for k in 0..nz {
        for i in 0..nx {
            let base = i + nx * ny * k;
            for j in 0..ny {
                lane[j] = buf[base + nx * j];
            }
            fy.process_with_scratch(&mut lane, &mut scratch);
            for j in 0..ny {
                buf[base + nx * j] = lane[j];
            }
        }
    }

    let fz = plan(nz);
    scratch.resize(
        fz.get_inplace_scratch_len().max(nz),
        Complex::new(T::zero(), T::zero()),
    );
    let mut lane = vec![Complex::new(T::zero(), T::zero()); nz];
    for j in 0..ny {
        for i in 0..nx {
            let base = i + nx * j;
            for k in 0..nz {
                lane[k] = buf[base + nx * ny * k];
            }
            fz.process_with_scratch(&mut lane, &mut scratch);
            for k in 0..nz {
                buf[base + nx * ny * k] = lane[k];
            }
        }
    }
}

/// Smallest 5-smooth integer >= n; keeps rustfft on its fast paths.
fn next_smooth(n: usize) -> usize {
    let mut candidate = n.max(1);
    loop {
        let mut m = candidate;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return candidate;
        }
        candidate += 1;
    }
}
