//! Estimators, data oscillation and evaluation of both sides of the error bounds.

pub mod bounds;
pub mod inefficiency;
pub mod local;
pub mod oscillation;
pub mod report;

pub use local::{flux_estimators, jump_estimator, modal_jump_estimator, FluxEstimators, Localized};
pub use oscillation::{oscillation, Oscillation, OscillationData, OscillationKind, Surrogate};
pub use bounds::{bound_report, constant_drift, BoundEvaluation, BoundEvaluator, Inequality, LocalConstant, Relation, Theorem};
pub use inefficiency::{inefficiency_study, InefficiencyRow, InefficiencyTable};
pub use report::{drift_alerts, estimator_report, report_with_bounds, DriftAlert, EstimatorReport, EstimatorTotals};
