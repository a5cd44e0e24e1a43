//! Meshes, finite element spaces, assembly and linear solvers.

pub mod lagrange;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod space;
pub mod stability;

pub use mesh::{interval_mesh, interval_mesh_from_nodes, structured_triangle_mesh, SimplicialMesh, VertexPatch};
pub use quadrature::QuadratureRule;
pub use space::{CellField, FormKind, Prolongation, ScalarSpace};
pub use sparse::{solve_spd, Cholesky, SymmetricOperator};
pub use stability::estimate_h1_stability_constant;
