//! Geometry ingestion and result serialization: STL meshes in, voxel volumes
//! in and out.

mod stl;
mod volume;
mod voxelize;

pub use stl::{load_mesh, write_binary_stl, TriangleMesh};
pub use volume::{
    read_field, read_indicator, read_volume, write_field, write_indicator, write_vtk_ascii, Volume,
};
pub use voxelize::{voxelize, VoxelizeReport};
