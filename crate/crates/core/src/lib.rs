//! Voxel engine for hybrid additive-then-subtractive manufacturing planning:
//! support generation for a candidate build direction, machine-accessibility
//! fields over the near-net shape via FFT cross-correlation, Pareto-weighted
//! ranking of sampled build orientations, and greedy support-removal planning.
//!
//! All core types are generic over the lattice scalar (`f32` or `f64`, see
//! [`Real`]); the aliases at the crate root fix `f64`, which is what the CLI
//! and the file formats use.

pub mod correlate;
pub mod error;
pub mod grid;
pub mod imf;
pub mod io;
pub mod machine;
pub mod num;
pub mod orient;
pub mod planner;
pub mod support;

pub use error::{Error, Result};
pub use num::Real;

/// `f64` aliases for the common case.
pub type Lattice = grid::Lattice<f64>;
pub type IndicatorGrid = grid::IndicatorGrid<f64>;
pub type ScalarField = grid::ScalarField<f64>;
pub type Rotation = grid::Rotation<f64>;
pub type ToolAssembly = machine::ToolAssembly<f64>;
pub type FixtureConfig = machine::FixtureConfig<f64>;
pub type Platform = machine::Platform<f64>;
pub type MachineSetup = machine::MachineSetup<f64>;
pub type NearNetShape = support::NearNetShape<f64>;
pub type ImfResult = imf::ImfResult<f64>;
pub type OrientationRecord = orient::OrientationRecord<f64>;
pub type OptimizeConfig = orient::OptimizeConfig<f64>;
pub type OptimizeOutcome = orient::OptimizeOutcome<f64>;
pub type PlanStep = planner::PlanStep<f64>;
pub type PlanConfig = planner::PlanConfig<f64>;
pub type PlanOutcome = planner::PlanOutcome<f64>;
