//! Equilibrated flux reconstruction from vertex-patch mixed problems.

pub mod flux;
pub mod patch;
pub mod rtn;

pub use flux::{assemble_flux, equilibration_residual, EquilibratedFlux};
pub use patch::{Equilibrator, PatchSolution, PatchSource};
pub use rtn::RtnSpace;
