//! Finite-element forward solver on the unit disk.

pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod trace;

pub use geometry::{Inclusion, InclusionSet, Point, Shape};
pub use mesh::{build_mesh, build_mesh_with, BoundaryEdge, Mesh, MeshOptions, Region};
pub use fem::{solve_background, solve_subdiffusion, FemOperators, ProblemData, SpaceTimeField};
pub use trace::{add_noise, boundary_restrict, BoundaryTrace, NoisyTrace};
