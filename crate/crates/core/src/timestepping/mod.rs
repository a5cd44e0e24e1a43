//! Time partitions, data, implicit Euler and time reconstructions.

pub mod forcing;
pub mod function;
pub mod modal;
pub mod partition;
pub mod solver;

pub use forcing::{time_mean_data, time_mean_loads, time_mean_rhs, Forcing};
pub use function::{reconstruct, temporal_interpolant, SlabFunction, SpaceTimeFunction, TimeProfile};
pub use modal::ModalProblem;
pub use partition::TimePartition;
pub use solver::{implicit_euler, HeatDiscretization, InitialApproximation, TimeSlabSolution};
