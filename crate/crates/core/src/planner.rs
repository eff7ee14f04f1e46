//! Greedy support-removal planning.
//!
//! Each step picks the (fixture, tool, rotation) combination whose accessible
//! set covers the most remaining support, removes it, and repeats until the
//! best step falls under the halting fraction of the initial support volume.
//! Accessibility per combination is the sharp-point-minimized field compared
//! against the same threshold the orientation ranking uses; the obstacle
//! never includes support, so removal order affects bookkeeping only.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::correlate::PreparedObstacle;
use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Rotation, ScalarField, ThresholdMode};
use crate::imf::{rotation_field, setup_obstacles};
use crate::machine::MachineSetup;
use crate::num::Real;
use crate::support::assemble_near_net;

/// One machining action of a removal plan.
#[derive(Debug, Clone)]
pub struct PlanStep<T: Real> {
    /// 1-based position in the plan.
    pub index: usize,
    pub fixture: usize,
    pub fixture_name: String,
    pub tool: usize,
    pub tool_name: String,
    pub rotation_index: usize,
    pub rotation: Rotation<T>,
    /// Rotated tool axis; names the approach direction in reports.
    pub direction: Vector3<T>,
    /// Support cells this step removes.
    pub removed: IndicatorGrid<T>,
    /// Removed volume over the reference support volume.
    pub removed_fraction: T,
}

#[derive(Debug, Clone)]
pub struct PlanConfig<T: Real> {
    /// Accessibility threshold; cells with field value above it stay.
    pub lambda: T,
    /// Stop when the best step removes less than this fraction of the
    /// initial support volume. The 0.5% default matches the halting rule the
    /// planner is tuned for; 1.0 admits only a single full-removal step.
    pub halt_fraction: T,
}

impl<T: Real> Default for PlanConfig<T> {
    fn default() -> Self {
        Self {
            lambda: T::of(1e-3),
            halt_fraction: T::of(5e-3),
        }
    }
}

impl<T: Real> PlanConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < T::zero() {
            return Err(Error::param("lambda must be >= 0"));
        }
        if !(self.halt_fraction > T::zero() && self.halt_fraction <= T::one()) {
            return Err(Error::param("halt_fraction must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Ordered plan plus whatever support the greedy loop could not reach.
#[derive(Debug, Clone)]
pub struct PlanOutcome<T: Real> {
    pub steps: Vec<PlanStep<T>>,
    pub remaining_support: IndicatorGrid<T>,
    pub initial_support_volume: T,
}

impl<T: Real> PlanOutcome<T> {
    /// Fraction of the initial support volume the plan removes.
    pub fn removed_fraction(&self) -> T {
        self.steps
            .iter()
            .fold(T::zero(), |acc, s| acc + s.removed_fraction)
    }
}

/// Accessible-support mask for one (fixture, tool, rotation) combination,
/// resampled onto the support lattice.
struct CombinationMask<T: Real> {
    fixture: usize,
    tool: usize,
    rotation_index: usize,
    mask: IndicatorGrid<T>,
}

fn combination_masks<T: Real>(
    part: &IndicatorGrid<T>,
    support_lattice: &crate::grid::Lattice<T>,
    setup: &MachineSetup<T>,
    lambda: T,
) -> Result<Vec<CombinationMask<T>>> {
    let obstacles = setup_obstacles(part, setup)?;
    let probe_bound = setup.probe_dims_bound();
    let mut masks = Vec::new();
    for (j, obstacle) in obstacles.iter().enumerate() {
        let prep = PreparedObstacle::new(obstacle, probe_bound);
        for (i, tool) in setup.tools.iter().enumerate() {
            let fields: Result<Vec<ScalarField<T>>> = tool
                .rotations()
                .par_iter()
                .map(|rotation| rotation_field(&prep, tool, rotation))
                .collect();
            for (r, field) in fields?.into_iter().enumerate() {
                let accessible = field.threshold(lambda, ThresholdMode::Leq);
                masks.push(CombinationMask {
                    fixture: j,
                    tool: i,
                    rotation_index: r,
                    mask: accessible.resample_to(support_lattice),
                });
            }
        }
    }
    Ok(masks)
}

fn step_from_mask<T: Real>(
    m: &CombinationMask<T>,
    removed: IndicatorGrid<T>,
    reference_volume: T,
    setup: &MachineSetup<T>,
    index: usize,
) -> PlanStep<T> {
    let tool = &setup.tools[m.tool];
    let rotation = tool.rotations()[m.rotation_index];
    let mut direction = rotation.apply(&tool.axis());
    for c in direction.iter_mut() {
        // snap trig roundoff so reports read (0, 1, 0) rather than -6e-17
        if c.abs() < T::of(1e-12) {
            *c = T::zero();
        }
    }
    let fraction = if reference_volume > T::zero() {
        removed.volume() / reference_volume
    } else {
        T::zero()
    };
    PlanStep {
        index,
        fixture: m.fixture,
        fixture_name: setup.fixtures[m.fixture].name.clone(),
        tool: m.tool,
        tool_name: tool.name().to_string(),
        rotation_index: m.rotation_index,
        rotation,
        direction,
        removed,
        removed_fraction: fraction,
    }
}

/// Best single action against the remaining support: the combination whose
/// accessible set covers the most remaining volume. Ties break toward the
/// smallest (fixture, tool, rotation) triple. When nothing is removable the
/// returned step carries an empty `removed` grid and a zero fraction.
pub fn max_removable<T: Real>(
    part: &IndicatorGrid<T>,
    support_remaining: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    cfg: &PlanConfig<T>,
) -> Result<PlanStep<T>> {
    cfg.validate()?;
    if support_remaining.is_set_empty() {
        return Err(Error::EmptyGrid("no support remains to remove".into()));
    }
    let masks = combination_masks(part, support_remaining.lattice(), setup, cfg.lambda)?;
    let (best, removed) = pick_best(&masks, support_remaining)?;
    Ok(step_from_mask(
        &masks[best],
        removed,
        support_remaining.volume(),
        setup,
        1,
    ))
}

fn pick_best<T: Real>(
    masks: &[CombinationMask<T>],
    remaining: &IndicatorGrid<T>,
) -> Result<(usize, IndicatorGrid<T>)> {
    let mut best = 0usize;
    let mut best_count = 0usize;
    for (idx, m) in masks.iter().enumerate() {
        let count = remaining.intersection_count(&m.mask)?;
        if count > best_count {
            best_count = count;
            best = idx;
        }
    }
    let removed = remaining.intersect(&masks[best].mask)?;
    Ok((best, removed))
}

/// Assemble the near-net shape at build direction `b` and greedily plan the
/// removal of its support. Per-combination accessibility is computed once;
/// iterations only re-intersect it with the shrinking remaining support.
pub fn plan<T: Real>(
    part: &IndicatorGrid<T>,
    b: Vector3<T>,
    setup: &MachineSetup<T>,
    alpha_deg: T,
    cfg: &PlanConfig<T>,
) -> Result<PlanOutcome<T>> {
    cfg.validate()?;
    let nn = assemble_near_net(part, b, alpha_deg)?;
    plan_support_removal(&nn.part, &nn.support, setup, cfg)
}

/// Planning core for an already-assembled near-net shape.
pub fn plan_support_removal<T: Real>(
    part: &IndicatorGrid<T>,
    support: &IndicatorGrid<T>,
    setup: &MachineSetup<T>,
    cfg: &PlanConfig<T>,
) -> Result<PlanOutcome<T>> {
    cfg.validate()?;
    let initial_volume = support.volume();
    let mut remaining = support.clone();
    let mut steps = Vec::new();
    if support.is_set_empty() {
        return Ok(PlanOutcome {
            steps,
            remaining_support: remaining,
            initial_support_volume: initial_volume,
        });
    }

    let masks = combination_masks(part, support.lattice(), setup, cfg.lambda)?;
    let floor = cfg.halt_fraction * initial_volume;
    loop {
        let (best, removed) = pick_best(&masks, &remaining)?;
        if removed.volume() < floor || removed.is_set_empty() {
            break;
        }
        remaining = remaining.subtract(&removed)?;
        steps.push(step_from_mask(
            &masks[best],
            removed,
            initial_volume,
            setup,
            steps.len() + 1,
        ));
    }
    Ok(PlanOutcome {
        steps,
        remaining_support: remaining,
        initial_support_volume: initial_volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Lattice;
    use crate::imf::{imf_setup, split_support};
    use crate::machine::{FixtureConfig, Platform, ToolAssembly};
    use crate::support::generate_support;

    fn lat2d(nx: usize, ny: usize) -> Lattice<f64> {
        Lattice::new([nx, ny, 1], 1.0, Vector3::new(0.5, 0.5, 0.0)).unwrap()
    }

    /// Horizontal-only bar tool: 2 wide, 12 long, cutter tip of 2x2,
    /// rotations point the body along -x (90 deg) and +x (270 deg).
    fn side_bar_tool() -> ToolAssembly<f64> {
        let l = Lattice::new([2, 12, 1], 1.0, Vector3::new(0.0, 0.0, 0.0)).unwrap();
        let cutter = IndicatorGrid::from_fn(l.clone(), |[_, j, _]| j < 2);
        let holder = IndicatorGrid::from_fn(l, |[_, j, _]| j >= 2);
        let quarter = std::f64::consts::FRAC_PI_2;
        let rots = vec![Rotation::about_z(quarter), Rotation::about_z(3.0 * quarter)];
        ToolAssembly::new("side-bar", holder, cutter, vec![[0, 0, 0], [1, 0, 0]], rots).unwrap()
    }

    fn open_fixture() -> FixtureConfig<f64> {
        FixtureConfig::new("open", IndicatorGrid::empty(lat2d(1, 1)))
    }

    fn setup_with(tools: Vec<ToolAssembly<f64>>) -> MachineSetup<f64> {
        MachineSetup::new(Platform::Slab { layers: 2 }, vec![open_fixture()], tools).unwrap()
    }

    /// Two overhanging plates with opposite walls: the left plate's support
    /// (10 x 6 = 60 cells) is reachable only with the tool body leaving to
    /// the left, the right plate's (10 x 4 = 40 cells) only to the right.
    fn two_region_part() -> IndicatorGrid<f64> {
        IndicatorGrid::from_fn(lat2d(32, 10), |[i, j, _]| {
            let plate1 = (2..12).contains(&i) && j == 6;
            let wall1 = (12..14).contains(&i);
            let plate2 = (20..30).contains(&i) && j == 4;
            let wall2 = (18..20).contains(&i);
            plate1 || wall1 || plate2 || wall2
        })
    }

    #[test]
    fn two_region_support_counts_are_exact() {
        let part = two_region_part();
        let support = generate_support(&part, 90.0).unwrap();
        assert_eq!(support.count_set(), 100);
        let left = support.set_cells().filter(|c| c[0] < 12).count();
        let right = support.set_cells().filter(|c| c[0] >= 20).count();
        assert_eq!(left, 60);
        assert_eq!(right, 40);
    }

    #[test]
    fn max_removable_picks_the_larger_region() {
        let part = two_region_part();
        let support = generate_support(&part, 90.0).unwrap();
        let setup = setup_with(vec![side_bar_tool()]);
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 0.005,
        };
        let step = max_removable(&part, &support, &setup, &cfg).unwrap();
        assert_eq!(step.removed.count_set(), 60);
        assert!((step.removed_fraction - 0.6).abs() < 1e-12);
        // all removed cells sit under the left plate
        assert!(step.removed.set_cells().all(|c| c[0] < 12));
    }

    #[test]
    fn plan_removes_both_regions_in_size_order() {
        let part = two_region_part();
        let support = generate_support(&part, 90.0).unwrap();
        let setup = setup_with(vec![side_bar_tool()]);
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 0.005,
        };
        let outcome = plan_support_removal(&part, &support, &setup, &cfg).unwrap();

        assert_eq!(outcome.steps.len(), 2);
        assert_eq!(outcome.steps[0].removed.count_set(), 60);
        assert_eq!(outcome.steps[1].removed.count_set(), 40);
        assert!(outcome.remaining_support.is_set_empty());
        assert_eq!(outcome.steps[0].index, 1);
        assert_eq!(outcome.steps[1].index, 2);

        // steps are disjoint and fractions non-increasing
        assert_eq!(
            outcome.steps[0]
                .removed
                .intersection_count(&outcome.steps[1].removed)
                .unwrap(),
            0
        );
        assert!(outcome.steps[0].removed_fraction >= outcome.steps[1].removed_fraction);

        // the two steps approach from opposite sides
        let d0 = outcome.steps[0].direction;
        let d1 = outcome.steps[1].direction;
        assert!(
            (d0.x + d1.x).abs() < 1e-9,
            "opposite approaches: {d0:?} vs {d1:?}"
        );

        // union of removed equals support ∩ accessible set of the combined field
        let result = imf_setup(&part, &setup).unwrap();
        let (accessible, _) = split_support(&support, &result.field, cfg.lambda);
        let removed_union = outcome.steps[0]
            .removed
            .union(&outcome.steps[1].removed)
            .unwrap();
        assert_eq!(removed_union, accessible);
    }

    #[test]
    fn halt_fraction_boundary_semantics() {
        let part = two_region_part();
        let support = generate_support(&part, 90.0).unwrap();
        let setup = setup_with(vec![side_bar_tool()]);

        // halt at 1.0: no single combination removes everything -> empty plan
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 1.0,
        };
        let outcome = plan_support_removal(&part, &support, &setup, &cfg).unwrap();
        assert!(outcome.steps.is_empty());
        assert_eq!(outcome.remaining_support.count_set(), 100);

        // halt at 0.5: the 60-cell step qualifies, the 40-cell one does not
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 0.5,
        };
        let outcome = plan_support_removal(&part, &support, &setup, &cfg).unwrap();
        assert_eq!(outcome.steps.len(), 1);
        assert_eq!(outcome.steps[0].removed.count_set(), 60);
        assert_eq!(outcome.remaining_support.count_set(), 40);
    }

    #[test]
    fn fully_open_support_removed_in_one_step() {
        // floating plate: all support below is reachable from the open left side
        let part = IndicatorGrid::from_fn(lat2d(16, 8), |[i, j, _]| (3..13).contains(&i) && j == 5);
        let support = generate_support(&part, 90.0).unwrap();
        assert_eq!(support.count_set(), 50);
        let tool = {
            let l = Lattice::new([2, 12, 1], 1.0, Vector3::new(0.0, 0.0, 0.0)).unwrap();
            let cutter = IndicatorGrid::from_fn(l.clone(), |[_, j, _]| j < 2);
            let holder = IndicatorGrid::from_fn(l, |[_, j, _]| j >= 2);
            // single rotation: body leaves to the left
            ToolAssembly::new(
                "bar",
                holder,
                cutter,
                vec![[0, 0, 0], [1, 0, 0]],
                vec![Rotation::about_z(std::f64::consts::FRAC_PI_2)],
            )
            .unwrap()
        };
        let setup = setup_with(vec![tool]);
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 0.005,
        };
        let outcome = plan_support_removal(&part, &support, &setup, &cfg).unwrap();
        assert_eq!(outcome.steps.len(), 1);
        assert!((outcome.steps[0].removed_fraction - 1.0).abs() < 1e-12);
        assert!(outcome.remaining_support.is_set_empty());
    }

    #[test]
    fn sealed_cavity_yields_zero_sentinel() {
        // square ring with a hollow center: the cavity support is unreachable
        let part = IndicatorGrid::from_fn(lat2d(12, 12), |[i, j, _]| {
            !(4..8).contains(&i) || !(4..8).contains(&j)
        });
        let support = generate_support(&part, 90.0).unwrap();
        assert!(support.count_set() > 0);
        let setup = setup_with(vec![side_bar_tool()]);
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 0.005,
        };

        let step = max_removable(&part, &support, &setup, &cfg).unwrap();
        assert_eq!(step.removed_fraction, 0.0);
        assert!(step.removed.is_set_empty());

        let outcome = plan_support_removal(&part, &support, &setup, &cfg).unwrap();
        assert!(outcome.steps.is_empty());
        assert_eq!(outcome.remaining_support, support);
    }

    #[test]
    fn zero_support_plans_to_nothing() {
        let part = IndicatorGrid::from_fn(lat2d(6, 6), |[_, j, _]| j < 3);
        let setup = setup_with(vec![side_bar_tool()]);
        let cfg = PlanConfig::default();
        let outcome = plan(&part, Vector3::y(), &setup, 90.0, &cfg).unwrap();
        assert!(outcome.steps.is_empty());
        assert_eq!(outcome.initial_support_volume, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PlanConfig::<f64>::default();
        assert!(cfg.validate().is_ok());
        cfg.halt_fraction = 0.0;
        assert!(cfg.validate().is_err());
        cfg.halt_fraction = 1.5;
        assert!(cfg.validate().is_err());
        cfg.halt_fraction = 1.0;
        assert!(cfg.validate().is_ok());
        cfg.lambda = -0.2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn plan_through_build_direction_rotation() {
        // same two-region scene but the part arrives rotated 90 degrees, and
        // the build direction selects the original pose
        let part = two_region_part();
        let rotated = part.rotate(&Rotation::about_z(std::f64::consts::FRAC_PI_2));
        let setup = setup_with(vec![side_bar_tool()]);
        let cfg = PlanConfig {
            lambda: 0.01,
            halt_fraction: 0.005,
        };
        // b = -x maps back to +y under the minimal rotation
        let outcome = plan(&rotated, Vector3::new(-1.0, 0.0, 0.0), &setup, 90.0, &cfg).unwrap();
        assert_eq!(outcome.steps.len(), 2);
        assert_eq!(outcome.steps[0].removed.count_set(), 60);
        assert_eq!(outcome.steps[1].removed.count_set(), 40);
    }
}
