//! Build-orientation sampling and Pareto-weighted ranking.
//!
//! Every sampled direction gets a near-net shape, an accessibility field, and
//! the pair (total support volume, secluded support volume). Orientations are
//! ranked by the weighted score: the two volumes normalized by their maxima
//! over the sample set and blended by the accessibility weight. Smaller is
//! better.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::IndicatorGrid;
use crate::imf::{imf_setup, split_support};
use crate::machine::MachineSetup;
use crate::num::Real;
use crate::support::assemble_near_net_with_roll;

/// One evaluated build orientation.
#[derive(Debug, Clone)]
pub struct OrientationRecord<T: Real> {
    /// Unit build direction.
    pub b: Vector3<T>,
    /// Roll about the build axis (radians); zero unless roll sampling is on.
    pub roll: T,
    /// Total support volume (mm^3).
    pub support_volume: T,
    /// Machine-inaccessible support volume (mm^3).
    pub secluded_volume: T,
    /// Weighted score; `None` until ranking normalizes the sample set.
    pub score: Option<T>,
}

/// How to sample candidate build directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Near-uniform points on the unit sphere via the Fibonacci lattice.
    SphereFibonacci,
    /// `n` in-plane directions for 2D problems, stepped uniformly around the
    /// circle starting at +y.
    CircleUniform,
}

#[derive(Debug, Clone)]
pub struct OptimizeConfig<T: Real> {
    /// Accessibility weight in [0, 1]; 0 ranks by support volume alone,
    /// 1 by secluded volume alone.
    pub w_acc: T,
    /// Number of sampled build directions.
    pub n_b: usize,
    /// Number of top orientations to return.
    pub n_b_star: usize,
    /// Secluded-support threshold on the accessibility field.
    pub lambda: T,
    /// Overhang angle in degrees.
    pub alpha_deg: T,
    pub sampling: SamplingMode,
    /// Rolls about the build axis evaluated per direction; 1 means none.
    pub roll_steps: usize,
}

impl<T: Real> OptimizeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_acc >= T::zero() && self.w_acc <= T::one()) {
            return Err(Error::param("w_acc must be in [0, 1]"));
        }
        if self.n_b == 0 || self.n_b_star == 0 || self.n_b_star > self.n_b * self.roll_steps.max(1)
        {
            return Err(Error::param("need 1 <= n_b_star <= sample count"));
        }
        if self.lambda < T::zero() {
            return Err(Error::param("lambda must be >= 0"));
        }
        if self.roll_steps == 0 {
            return Err(Error::param("roll_steps must be >= 1"));
        }
        Ok(())
    }
}

/// Sample `n` candidate build directions.
pub fn sample_directions<T: Real>(n: usize, mode: SamplingMode) -> Result<Vec<Vector3<T>>> {
    if n == 0 {
        return Err(Error::param("sample count must be >= 1"));
    }
    // trig residue like sin(pi) = 1.2e-16 would otherwise leak into reports
    let snap = |mut v: Vector3<T>| {
        for c in v.iter_mut() {
            if c.abs() < T::of(1e-12) {
                *c = T::zero();
            }
        }
        v
    };
    let dirs = match mode {
        SamplingMode::CircleUniform => (0..n)
            .map(|i| {
                let th = T::two_pi() * T::of(i as f64) / T::of(n as f64);
                snap(Vector3::new(-th.sin(), th.cos(), T::zero()))
            })
            .collect(),
        SamplingMode::SphereFibonacci => {
            let golden = T::pi() * (T::of(3.0) - T::of(5.0).sqrt());
            (0..n)
                .map(|i| {
                    let z = T::one() - T::of((2 * i + 1) as f64) / T::of(n as f64);
                    let r = (T::one() - z * z).max(T::zero()).sqrt();
                    let th = golden * T::of(i as f64);
                    snap(Vector3::new(r * th.cos(), r * th.sin(), z))
                })
                .collect()
        }
    };
    Ok(dirs)
}

/// Weighted Pareto score of one orientation given the sample maxima:
/// `(1 - w_acc) * support/max_support + w_acc * secluded/max_secluded`.
///
/// A zero `max_secluded` (no orientation has secluded support) zeroes that
/// term; a zero `max_support` makes the whole score zero.
pub fn weighted_score<T: Real>(
    support_volume: T,
    secluded_volume: T,
    max_support: T,
    max_secluded: T,
    w_acc: T,
) -> T {
    if max_support <= T::zero() {
        return T::zero();
    }
    let support_term = support_volume / max_support;
    let secluded_term = if max_secluded <= T::zero() {
        T::zero()
    } else {
        secluded_volume / max_secluded
    };
    (T::one() - w_acc) * support_term + w_acc * secluded_term
}

/// Evaluate one build direction: assemble the near-net shape, compute the
/// combined accessibility field, split the support at `lambda`, and report
/// the two volumes. The score stays unset until ranking.
pub fn evaluate_orientation<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    b: Vector3<T>,
    cfg: &OptimizeConfig<T>,
) -> Result<OrientationRecord<T>> {
    evaluate_orientation_rolled(part, setup, b, T::zero(), cfg)
}

fn evaluate_orientation_rolled<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    b: Vector3<T>,
    roll: T,
    cfg: &OptimizeConfig<T>,
) -> Result<OrientationRecord<T>> {
    let nn = assemble_near_net_with_roll(part, b, roll, cfg.alpha_deg)?;
    let (support_volume, secluded_volume) = if nn.support.is_set_empty() {
        (T::zero(), T::zero())
    } else {
        let result = imf_setup(&nn.part, setup)?;
        let (_, secluded) = split_support(&nn.support, &result.field, cfg.lambda);
        (nn.support.volume(), secluded.volume())
    };
    Ok(OrientationRecord {
        b: nn.build_dir,
        roll,
        support_volume,
        secluded_volume,
        score: None,
    })
}

/// Full optimization outcome: every evaluated sample (in sample order, scores
/// set) plus the ranked top list.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome<T: Real> {
    pub records: Vec<OrientationRecord<T>>,
    pub top: Vec<OrientationRecord<T>>,
    pub max_support: T,
    pub max_secluded: T,
}

/// Evaluate all sampled orientations and return the `n_b_star` records with
/// the smallest weighted score. Ties break by smaller secluded volume, then
/// smaller support volume, then sample index.
pub fn optimize<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    cfg: &OptimizeConfig<T>,
) -> Result<Vec<OrientationRecord<T>>> {
    Ok(optimize_full(part, setup, cfg)?.top)
}

pub fn optimize_full<T: Real>(
    part: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    cfg: &OptimizeConfig<T>,
) -> Result<OptimizeOutcome<T>> {
    cfg.validate()?;
    let dirs = sample_directions::<T>(cfg.n_b, cfg.sampling)?;
    let mut tasks: Vec<(Vector3<T>, T)> = Vec::with_capacity(cfg.n_b * cfg.roll_steps);
    for d in &dirs {
        for s in 0..cfg.roll_steps {
            let roll = T::two_pi() * T::of(s as f64) / T::of(cfg.roll_steps as f64);
            tasks.push((*d, roll));
        }
    }

    let mut records: Vec<OrientationRecord<T>> = tasks
        .par_iter()
        .map(|(b, roll)| evaluate_orientation_rolled(part, setup, *b, *roll, cfg))
        .collect::<Result<_>>()?;

    let max_support = records
        .iter()
        .map(|r| r.support_volume)
        .fold(T::zero(), |a, b| a.max(b));
    let max_secluded = records
        .iter()
        .map(|r| r.secluded_volume)
        .fold(T::zero(), |a, b| a.max(b));
    for r in records.iter_mut() {
        r.score = Some(weighted_score(
            r.support_volume,
            r.secluded_volume,
            max_support,
            max_secluded,
            cfg.w_acc,
        ));
    }

    let order = ranked_indices(&records);
    let top = order[..cfg.n_b_star.min(order.len())]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    Ok(OptimizeOutcome {
        records,
        top,
        max_support,
        max_secluded,
    })
}

/// Indices of `records` sorted by (score, secluded, support, index).
pub fn ranked_indices<T: Real>(records: &[OrientationRecord<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = &records[a];
        let rb = &records[b];
        let key = |r: &OrientationRecord<T>| {
            (
                r.score.expect("ranking needs scores"),
                r.secluded_volume,
                r.support_volume,
            )
        };
        key(ra)
            .partial_cmp(&key(rb))
            .expect("volumes and scores are finite")
            .then(a.cmp(&b))
    });
    order
}
