//! One-step modal study of how `eta_J` compares with the errors of `u_tau` and `U`.
//!
//! Errors are in the modal `X` metric `sqrt(lambda) |.|_{L2(0,1)}`, the metric in which
//! `eta_J` is defined; the energy errors are reported alongside.

use serde::Serialize;

use super::local::modal_jump_estimator;
use crate::error::Result;
use crate::timestepping::{ModalProblem, TimePartition};

#[derive(Debug, Clone, Serialize)]
pub struct InefficiencyRow {
    pub lambda: f64,
    /// `|u - u_tau|_{L2(0,1)}`.
    pub l2_error_ut: f64,
    pub l2_error_uu: f64,
    pub error_ut: f64,
    pub error_uu: f64,
    pub energy_error_ut: f64,
    pub energy_error_uu: f64,
    pub eta_j: f64,
    /// `(lambda / 3)^{1/2} / (1 + lambda)`.
    pub eta_j_closed_form: f64,
}

impl InefficiencyRow {
    pub fn ratio_ut(&self) -> f64 {
        self.error_ut / self.eta_j
    }

    pub fn ratio_uu(&self) -> f64 {
        self.error_uu / self.eta_j
    }

    pub fn ratio_ut_uu(&self) -> f64 {
        self.error_ut / self.error_uu
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InefficiencyTable {
    pub rows: Vec<InefficiencyRow>,
}

pub fn inefficiency_study(lambdas: &[f64]) -> Result<InefficiencyTable> {
    let p = TimePartition::uniform(1.0, 1)?;
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(lambdas.len());
    for lambda in lambdas {
        let m = ModalProblem::new(lambda)?;
        let v = m.solve(&p)?;
        let u1 = v[1];
        let ut = |_: usize, _: f64| u1;
        let uu = |_: usize, t: f64| t * u1;
        let l2_ut = m.l2_time_error(&p, &ut).sqrt();
        let l2_uu = m.l2_time_error(&p, &uu).sqrt();
        rows.push(InefficiencyRow {
            lambda,
            l2_error_ut: l2_ut,
            l2_error_uu: l2_uu,
            error_ut: lambda.sqrt() * l2_ut,
            error_uu: lambda.sqrt() * l2_uu,
            energy_error_ut: m.energy_error_sq(&p, &ut).sqrt(),
            energy_error_uu: m.energy_error_sq(&p, &uu).sqrt(),
            eta_j: modal_jump_estimator(lambda, &p, &v),
            eta_j_closed_form: (lambda / 3.0).sqrt() / (1.0 + lambda),
        });
    }
    Ok(InefficiencyTable { rows })
}

impl InefficiencyTable {
    /// `|u - u_tau| / |u - U|` strictly decreasing in `lambda`.
    pub fn ratio_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ratio_ut_uu() < w[0].ratio_ut_uu())
    }

    /// `|u - u_tau| / eta_J` decreasing in `lambda` for `lambda >= 1`.
    pub fn large_lambda_trend(&self) -> bool {
        let tail: Vec<_> = self.rows.iter().filter(|r| r.lambda >= 1.0).collect();
        tail.windows(2).all(|w| w[1].ratio_ut() < w[0].ratio_ut())
    }

    /// `|u - U| / eta_J` decreasing as `lambda` decreases, for `lambda <= 1`.
    pub fn small_lambda_trend(&self) -> bool {
        let tail: Vec<_> = self.rows.iter().filter(|r| r.lambda <= 1.0).collect();
        tail.windows(2).all(|w| w[0].ratio_uu() < w[1].ratio_uu())
    }

    pub fn row(&self, lambda: f64) -> Option<&InefficiencyRow> {
        self.rows.iter().find(|r| r.lambda == lambda)
    }
}
