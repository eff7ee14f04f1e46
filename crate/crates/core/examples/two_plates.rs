//! Library walkthrough on a small 2D scene: two overhanging plates whose
//! supports are each reachable from one side only. Prints the accessibility
//! split for the upright pose, the orientation ranking, and the removal plan.
//!
//! Run with `cargo run --example two_plates`.

use nalgebra::Vector3;
use nearnet_core::grid::{IndicatorGrid, Lattice, Rotation};
use nearnet_core::imf::{imf_setup, split_support};
use nearnet_core::machine::{FixtureConfig, MachineSetup, Platform, ToolAssembly};
use nearnet_core::orient::{optimize_full, OptimizeConfig, SamplingMode};
use nearnet_core::planner::{plan, PlanConfig};
use nearnet_core::support::assemble_near_net;

fn main() -> nearnet_core::Result<()> {
    let lat2d = |nx, ny| Lattice::new([nx, ny, 1], 1.0, Vector3::new(0.5, 0.5, 0.0));

    // part: plates at two heights, each shielded by a wall on one side
    let part = IndicatorGrid::from_fn(lat2d(32, 10)?, |[i, j, _]| {
        let plate1 = (2..12).contains(&i) && j == 6;
        let wall1 = (12..14).contains(&i);
        let plate2 = (20..30).contains(&i) && j == 4;
        let wall2 = (18..20).contains(&i);
        plate1 || wall1 || plate2 || wall2
    });

    // side-milling bar: cutter tip on a long shank, approaches along +/-x
    let tool_lat = Lattice::new([2, 12, 1], 1.0, Vector3::new(0.0, 0.0, 0.0))?;
    let cutter = IndicatorGrid::from_fn(tool_lat.clone(), |[_, j, _]| j < 2);
    let holder = IndicatorGrid::from_fn(tool_lat, |[_, j, _]| j >= 2);
    let quarter = std::f64::consts::FRAC_PI_2;
    let tool = ToolAssembly::new(
        "side-bar",
        holder,
        cutter,
        vec![[0, 0, 0], [1, 0, 0]],
        vec![Rotation::about_z(quarter), Rotation::about_z(3.0 * quarter)],
    )?;
    let setup = MachineSetup::new(
        Platform::Slab { layers: 2 },
        vec![FixtureConfig::new(
            "open",
            IndicatorGrid::empty(lat2d(1, 1)?),
        )],
        vec![tool],
    )?;

    // upright pose: generate supports and split them by accessibility
    let lambda = 0.01;
    let nn = assemble_near_net(&part, Vector3::y(), 90.0)?;
    let result = imf_setup(&nn.part, &setup)?;
    let (accessible, secluded) = split_support(&nn.support, &result.field, lambda);
    println!(
        "upright: support {} mm^3, accessible {} mm^3, secluded {} mm^3",
        nn.support.volume(),
        accessible.volume(),
        secluded.volume()
    );

    // rank 16 in-plane build directions
    let cfg = OptimizeConfig {
        w_acc: 0.95,
        n_b: 16,
        n_b_star: 3,
        lambda,
        alpha_deg: 90.0,
        sampling: SamplingMode::CircleUniform,
        roll_steps: 1,
    };
    let outcome = optimize_full(&part, &setup, &cfg)?;
    println!(
        "\ntop build directions (weight {} on accessibility):",
        cfg.w_acc
    );
    for r in &outcome.top {
        println!(
            "  b = ({:+.2}, {:+.2}): support {:>6.1} mm^3, secluded {:>5.1} mm^3, score {:.4}",
            r.b.x,
            r.b.y,
            r.support_volume,
            r.secluded_volume,
            r.score.unwrap()
        );
    }

    // removal plan for the upright pose
    let plan_cfg = PlanConfig {
        lambda,
        halt_fraction: 0.005,
    };
    let outcome = plan(&part, Vector3::y(), &setup, 90.0, &plan_cfg)?;
    println!(
        "\nplan: {} steps remove {:.1}% of {} mm^3",
        outcome.steps.len(),
        outcome.removed_fraction() * 100.0,
        outcome.initial_support_volume
    );
    for s in &outcome.steps {
        println!(
            "  step {}: {:>5.1}% via {} / {} from ({:+.0}, {:+.0})",
            s.index,
            s.removed_fraction * 100.0,
            s.fixture_name,
            s.tool_name,
            s.direction.x,
            s.direction.y
        );
    }
    Ok(())
}
