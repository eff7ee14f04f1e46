//! Voxel-lattice core: lattices, binary indicator grids, scalar fields, and
//! rigid-motion resampling. Everything downstream builds on these types.

mod bits;
mod field;
mod indicator;
mod lattice;
mod rotation;

pub use field::{ScalarField, ThresholdMode};
pub use indicator::{BoolOp, IndicatorGrid};
pub use lattice::Lattice;
pub use rotation::Rotation;
