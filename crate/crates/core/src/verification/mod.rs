//! Manufactured solutions, reference solves and exact error evaluation.

pub mod exact;
pub mod manufactured;
pub mod reference;

pub use exact::{exact_error, exact_error_with, observed_orders, reference_gap_ok, ExactQuadrature};
pub use manufactured::{manufactured, ManufacturedKind, ManufacturedProblem};
pub use reference::{reference_solve, ReferenceOptions, ReferenceSolution, ReferenceSource};
