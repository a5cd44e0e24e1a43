//! Estimator totals, localized tables and bound evaluations of one run.

use std::collections::BTreeMap;

use serde::Serialize;

use super::bounds::{constant_drift, discrete_data, BoundEvaluation, BoundEvaluator, Theorem};
use super::local::{flux_estimators, jump_estimator, FluxEstimators, Localized};
use super::oscillation::{self, energy_kind_pair, patch_kind, Oscillation, OscillationData, OscillationKind};
use crate::equilibration::EquilibratedFlux;
use crate::error::Result;
use crate::norms::{affine_quadratic, PatchLifts, RieszLiftContext};
use crate::timestepping::{Forcing, TimeSlabSolution};
use crate::verification::ReferenceSolution;

/// Drift factor of a measured constant above which an alert is raised.
pub const DRIFT_ALERT: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorTotals {
    pub eta_j: f64,
    /// `|sigma + grad U|_X`.
    pub eta_f: Option<f64>,
    /// `|sigma + grad u_{h,tau}|_X`.
    pub eta_f_prime: Option<f64>,
    /// `|sigma + grad ubar|_X`.
    pub eta_f_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub totals: EstimatorTotals,
    pub osc_y: Oscillation,
    /// Closed-form bound for square-integrable data, the auxiliary solve otherwise.
    pub osc_x: Oscillation,
    pub osc_patch: Oscillation,
    pub osc_energy: Oscillation,
    /// `|u_0 - u_{h,tau,0}|` when the initial datum is known on the lift space.
    pub initial_error: Option<f64>,
    pub jump: Localized,
    #[serde(skip)]
    pub flux: Option<FluxEstimators>,
    pub bounds: Vec<BoundEvaluation>,
    /// Lift space refinement over the trial space.
    pub lift_refinement: usize,
    pub reference_refinement: Option<[usize; 2]>,
    pub gamma: Option<f64>,
}

/// Estimators and oscillations of a run without a reference solution.
///
/// `forcing` is the source `f`; `initial_error` is `u_0 - u_{h,tau,0}` on the lift space.
pub fn estimator_report(
    sol: &TimeSlabSolution,
    flux: Option<&EquilibratedFlux>,
    forcing: &Forcing,
    initial_error: Option<&nalgebra::DVector<f64>>,
    ctx: &RieszLiftContext,
) -> Result<EstimatorReport> {
    let jump = jump_estimator(sol);
    let flux = flux.map(|f| flux_estimators(sol, f)).transpose()?;
    let approx = discrete_data(sol)?;
    let data = OscillationData {
        forcing,
        approximation: &approx,
        partition: &sol.partition,
        initial_error: None,
    };
    let osc_y = oscillation::oscillation(&data, OscillationKind::Y, ctx)?;
    let osc_patch = patch_kind(&data, ctx, &PatchLifts::new(ctx)?)?;
    let zero = nalgebra::DVector::zeros(ctx.space.dim());
    let (osc_energy, osc_source) = energy_kind_pair(&data, ctx, initial_error.unwrap_or(&zero))?;
    let osc_x = if forcing.is_l2() {
        oscillation::oscillation(&data, OscillationKind::XBound, ctx)?
    } else {
        osc_source
    };
    Ok(EstimatorReport {
        totals: totals(&jump, flux.as_ref()),
        osc_y,
        osc_x,
        osc_patch,
        osc_energy,
        initial_error: initial_error.map(|e| ctx.mass.inner(e, e).max(0.0).sqrt()),
        jump,
        flux,
        bounds: Vec::new(),
        lift_refinement: ctx.refinement,
        reference_refinement: None,
        gamma: None,
    })
}

/// Estimators, oscillations over the reference space and the requested bounds.
pub fn report_with_bounds(
    sol: &TimeSlabSolution,
    flux: Option<&EquilibratedFlux>,
    reference: &ReferenceSolution,
    theorems: &[Theorem],
) -> Result<EstimatorReport> {
    let ev = BoundEvaluator::new(sol, flux, reference)?;
    let bounds = theorems
        .iter()
        .filter(|t| flux.is_some() || !t.needs_flux())
        .map(|&t| ev.evaluate(t, sol, reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimatorReport {
        totals: totals(&ev.jump, ev.flux.as_ref()),
        osc_y: ev.osc_y.clone(),
        osc_x: ev.osc_x.clone(),
        osc_patch: ev.osc_patch.clone(),
        osc_energy: ev.osc_energy.clone(),
        initial_error: Some(ev.initial_error),
        jump: ev.jump.clone(),
        flux: ev.flux.clone(),
        bounds,
        lift_refinement: reference.space_refinement,
        reference_refinement: Some(ev.reference_refinement),
        gamma: Some(ev.gamma),
    })
}

fn totals(jump: &Localized, flux: Option<&FluxEstimators>) -> EstimatorTotals {
    EstimatorTotals {
        eta_j: jump.total(),
        eta_f: flux.map(|f| f.flux.total()),
        eta_f_prime: flux.map(|f| f.flux_prime.total()),
        eta_f_mean: flux.map(|f| f.flux_mean.total()),
    }
}

impl EstimatorReport {
    /// Patch oscillation distributed to cells: each vertex shares its term equally among
    /// the cells of its patch, so the table sums to the total.
    pub fn osc_by_cell(&self, sol: &TimeSlabSolution) -> Localized {
        let mesh = &sol.space.mesh;
        let nt = sol.partition.n_intervals();
        let mut out = Localized::zeros(nt, mesh.n_cells());
        if let Some(table) = &self.osc_patch.per_patch {
            for (a, row) in table.iter().enumerate() {
                let cells = &mesh.vertex_cells[a];
                for (n, &v) in row.iter().enumerate() {
                    for &k in cells {
                        out.values[n][k] += v / cells.len() as f64;
                    }
                }
            }
        }
        out
    }

    /// Largest relative gap between a total squared and the sum of its localized entries.
    ///
    /// The jump total is recomputed from the global stiffness matrix, independently of
    /// the cellwise quadrature behind the table.
    pub fn localization_defect(&self, sol: &TimeSlabSolution) -> f64 {
        let rel = |total: f64, sum: f64| (total - sum).abs() / total.abs().max(f64::MIN_POSITIVE);
        let stiffness = sol.space.assemble(crate::discretization::FormKind::Stiffness);
        let jump_matrix: f64 = (0..sol.partition.n_intervals())
            .map(|n| {
                let d = &sol.values[n + 1] - &sol.values[n];
                affine_quadratic(sol.partition.tau(n), &d, &d, &stiffness) / 3.0
            })
            .sum();
        let mut worst = rel(jump_matrix, self.jump.total_sq());
        if jump_matrix == 0.0 && self.jump.total_sq() == 0.0 {
            worst = 0.0;
        }
        let osc = self.osc_patch.value.powi(2);
        if osc > 0.0 {
            worst = worst.max(rel(osc, self.osc_by_cell(sol).total_sq()));
        }
        if let Some(f) = &self.flux {
            for (loc, total) in [
                (&f.flux, self.totals.eta_f),
                (&f.flux_prime, self.totals.eta_f_prime),
                (&f.flux_mean, self.totals.eta_f_mean),
            ] {
                let t = total.unwrap_or(0.0).powi(2);
                if t > 0.0 {
                    worst = worst.max(rel(t, loc.total_sq()));
                }
            }
        }
        worst
    }
}

/// A measured constant whose range across runs exceeds [`DRIFT_ALERT`].
#[derive(Debug, Clone, Serialize)]
pub struct DriftAlert {
    pub theorem: Theorem,
    pub constants: Vec<f64>,
    pub drift: f64,
}

/// Collect measured local constants per bound across runs and flag drifting ones.
pub fn drift_alerts(runs: &[Vec<BoundEvaluation>]) -> (BTreeMap<&'static str, Vec<f64>>, Vec<DriftAlert>) {
    let mut by: BTreeMap<&'static str, (Theorem, Vec<f64>)> = BTreeMap::new();
    for run in runs {
        for b in run {
            if let Some(c) = b.max_local_constant {
                by.entry(b.theorem.name()).or_insert((b.theorem, Vec::new())).1.push(c);
            }
        }
    }
    let mut alerts = Vec::new();
    let mut table = BTreeMap::new();
    for (name, (theorem, constants)) in by {
        let drift = constant_drift(&constants);
        if drift > DRIFT_ALERT {
            alerts.push(DriftAlert {
                theorem,
                constants: constants.clone(),
                drift,
            });
        }
        table.insert(name, constants);
    }
    (table, alerts)
}
