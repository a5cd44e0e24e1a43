pub mod discretization;
pub mod equilibration;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod norms;
pub mod timestepping;
pub mod verification;

pub use error::{Error, Result};
