//! Both sides of every error bound, evaluated against a reference solution.
//!
//! Errors in the `X` and energy norms are measured against the reference function.
//! The `Y` error of `U` uses the residual representation
//! `|u - U|_Y^2 = |R(U)|_{X*}^2 + |u_0 - U(0)|^2` with the reference space as lift
//! space, which keeps it below the true value. All dual norms, including the data
//! oscillation terms, are taken over the reference space.

use nalgebra::DVector;
use serde::Serialize;

use super::local::{flux_estimators, jump_estimator, FluxEstimators, Localized};
use super::oscillation::{self, dual_norm_at, Oscillation, OscillationData, OscillationKind};
use crate::discretization::quadrature::gauss_on_interval;
use crate::discretization::QuadratureRule;
use crate::equilibration::EquilibratedFlux;
use crate::error::{Error, Result};
use crate::norms::{residual_dual_norm_sq, PatchLifts};
use crate::timestepping::{reconstruct, Forcing, SlabFunction, TimeProfile, TimeSlabSolution};
use crate::verification::ReferenceSolution;

/// Minimum refinement of the reference relative to the run, in space and time.
pub const MIN_REFERENCE_RATIO: usize = 4;

/// Default allowance for the gap between the reference and the exact solution.
pub const REFERENCE_GAP: f64 = 0.02;

/// Allowance for the time-local jump bound and the energy equivalence.
pub const LOCAL_GAP: f64 = 0.05;

/// Time points per reference interval for integrals of sums of norms.
const NORM_SUM_POINTS: usize = 4;

/// The bounds that can be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// `|u - U|_Y <= eta_J + eta_osc,Y`.
    SemidiscreteYUpper,
    /// `eta_J <= |u - U|_Y + eta_osc,Y`.
    SemidiscreteYLower,
    /// Jump and oscillation per interval against the local `Y` error, up to a constant.
    OscillationDominated,
    /// `|u - u_tau|_X, |u - U|_X <= eta_J + eta_osc,X`.
    SemidiscreteXUpper,
    /// `|u - ubar|_E` within `eta_osc,E` of `eta_J / 2`.
    SemidiscreteEnergy,
    /// `|u - u_tau|_E^2 + |u - U|_E^2 = eta_J^2` without oscillation.
    Hypercircle,
    /// Flux estimator bound for `|u - U|_Y`.
    FluxYUpper,
    /// Extended norm `|u - u_tau|_{E_Y}`: upper bound, local and global lower bounds.
    ExtendedY,
    /// Local and global lower bounds of the flux estimator for `u_tau`.
    FluxXLower,
    /// Flux estimator bound for `|u - ubar|_E` and its lower bound.
    FluxEnergy,
    /// Jump estimator on each interval against the local error.
    JumpTimeLocal,
    /// `2 |u - ubar|_E <= E_X <= 4 |u - ubar|_E` and `eta_J <= E_X`.
    EnergyEquivalence,
}

impl Theorem {
    pub const ALL: [Theorem; 12] = [
        Theorem::SemidiscreteYUpper,
        Theorem::SemidiscreteYLower,
        Theorem::OscillationDominated,
        Theorem::SemidiscreteXUpper,
        Theorem::SemidiscreteEnergy,
        Theorem::Hypercircle,
        Theorem::FluxYUpper,
        Theorem::ExtendedY,
        Theorem::FluxXLower,
        Theorem::FluxEnergy,
        Theorem::JumpTimeLocal,
        Theorem::EnergyEquivalence,
    ];

    /// Bounds stated for time-only discretization, meaningful when the spatial error is negligible.
    pub fn is_semidiscrete(self) -> bool {
        matches!(
            self,
            Theorem::SemidiscreteYUpper
                | Theorem::SemidiscreteYLower
                | Theorem::OscillationDominated
                | Theorem::SemidiscreteXUpper
                | Theorem::SemidiscreteEnergy
                | Theorem::Hypercircle
                | Theorem::JumpTimeLocal
                | Theorem::EnergyEquivalence
        )
    }

    pub fn needs_flux(self) -> bool {
        matches!(
            self,
            Theorem::FluxYUpper | Theorem::ExtendedY | Theorem::FluxXLower | Theorem::FluxEnergy
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Theorem::SemidiscreteYUpper => "semidiscrete_y_upper",
            Theorem::SemidiscreteYLower => "semidiscrete_y_lower",
            Theorem::OscillationDominated => "oscillation_dominated",
            Theorem::SemidiscreteXUpper => "semidiscrete_x_upper",
            Theorem::SemidiscreteEnergy => "semidiscrete_energy",
            Theorem::Hypercircle => "hypercircle",
            Theorem::FluxYUpper => "flux_y_upper",
            Theorem::ExtendedY => "extended_y",
            Theorem::FluxXLower => "flux_x_lower",
            Theorem::FluxEnergy => "flux_energy",
            Theorem::JumpTimeLocal => "jump_time_local",
            Theorem::EnergyEquivalence => "energy_equivalence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs <= rhs` with constant one, up to the allowance.
    Upper,
    /// `lhs <= C rhs` with an unknown constant; `lhs / rhs` is measured.
    Measured,
    /// `lhs = rhs` up to the relative allowance.
    Identity,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub allowance: f64,
}

impl Inequality {
    fn new(label: &str, lhs: f64, rhs: f64, relation: Relation, allowance: f64) -> Self {
        Inequality {
            label: label.to_string(),
            lhs,
            rhs,
            relation,
            allowance,
        }
    }

    pub fn ratio(&self) -> f64 {
        ratio(self.lhs, self.rhs)
    }

    /// Verdict for relations with a known constant; `None` for measured ones.
    pub fn holds(&self) -> Option<bool> {
        match self.relation {
            Relation::Upper => Some(self.lhs <= self.rhs * (1.0 + self.allowance)),
            Relation::Identity => Some((self.lhs - self.rhs).abs() <= self.allowance * self.rhs.abs()),
            Relation::Measured => None,
        }
    }
}

/// Measured local constant `lhs / rhs` on one interval, and one cell if given.
#[derive(Debug, Clone, Serialize)]
pub struct LocalConstant {
    pub cell: Option<usize>,
    pub interval: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl LocalConstant {
    pub fn constant(&self) -> f64 {
        ratio(self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundEvaluation {
    pub theorem: Theorem,
    /// Error surrogate in the norm of the bound.
    pub error: f64,
    /// Estimator side of the main inequality.
    pub estimator: f64,
    pub effectivity: f64,
    pub inequalities: Vec<Inequality>,
    pub local: Vec<LocalConstant>,
    pub max_local_constant: Option<f64>,
    /// Space and time refinement of the reference.
    pub reference_refinement: [usize; 2],
    pub richardson: bool,
    /// `max h_{omega_a}^2 / tau_n` of the run.
    pub gamma: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Data shared by all bounds of one run.
#[derive(Debug, Clone)]
pub struct BoundEvaluator {
    pub jump: Localized,
    pub flux: Option<FluxEstimators>,
    pub osc_y: Oscillation,
    /// Closed-form bound when the data are square integrable, else the auxiliary solve.
    pub osc_x: Oscillation,
    pub osc_patch: Oscillation,
    /// Energy oscillation including the initial datum.
    pub osc_energy: Oscillation,
    /// Energy oscillation of the source alone.
    pub osc_energy_source: Oscillation,
    /// `|u_0 - u_{h,tau,0}|`.
    pub initial_error: f64,
    /// `int_{I_n} |R(U)|_*^2` per interval.
    pub residual: Vec<f64>,
    /// `int_{I_n} |grad(u - u_tau)|_K^2` and `int_{I_n} |grad(u - U)|_K^2`.
    pub x_ut: Localized,
    pub x_uu: Localized,
    /// `int_{I_n} |grad(u - ubar)|^2` summed over cells.
    pub x_mean: f64,
    /// `|(u - v)(T)|^2` for `v = u_tau = U = ubar`.
    pub final_error_sq: f64,
    /// `int_{I_n} |d_t(u - U)|_{H^-1}^2` per interval.
    pub dt_global: Vec<f64>,
    /// `int_{I_n} |d_t(u - U)|_{H^-1(omega_a)}^2` by vertex, then interval.
    pub dt_patch: Vec<Vec<f64>>,
    /// `int_{I_n} [|d_t(u - U)|_* + |grad(u - U)| + |f - f_tau|_*]^2` per interval.
    pub time_local_rhs: Vec<f64>,
    pub gamma: f64,
    pub reference_refinement: [usize; 2],
    pub richardson: bool,
    vertex_cells: Vec<Vec<usize>>,
    cell_vertices: Vec<Vec<usize>>,
}

/// Cellwise data of the run as a source term.
pub fn discrete_data(sol: &TimeSlabSolution) -> Result<Forcing> {
    let fields = sol
        .data
        .as_ref()
        .ok_or_else(|| Error::UnsupportedData("solution carries no cellwise data".into()))?;
    Ok(Forcing::PiecewiseConstant {
        partition: sol.partition.clone(),
        fields: std::sync::Arc::new(fields.clone()),
    })
}

impl BoundEvaluator {
    pub fn new(sol: &TimeSlabSolution, flux: Option<&EquilibratedFlux>, reference: &ReferenceSolution) -> Result<Self> {
        if !reference.is_finer_than(&sol.space, &sol.partition, MIN_REFERENCE_RATIO) {
            return Err(Error::Refinement(format!(
                "reference ({}x space, {}x time) must be at least {MIN_REFERENCE_RATIO}x finer than the run in both",
                reference.space_refinement, reference.time_refinement
            )));
        }
        let rctx = &reference.context;
        let coarse = &sol.partition;
        let fine = reference.partition();
        let nt = coarse.n_intervals();
        let mesh = &sol.space.mesh;

        let jump = jump_estimator(sol);
        let flux = flux.map(|f| flux_estimators(sol, f)).transpose()?;

        let approx = discrete_data(sol)?;
        let initial_vec = &reference.function.initial - rctx.prolongate(&sol.values[0]);
        let initial_error = rctx.mass.inner(&initial_vec, &initial_vec).max(0.0).sqrt();
        let data = OscillationData {
            forcing: &reference.forcing,
            approximation: &approx,
            partition: coarse,
            initial_error: None,
        };
        let osc_y = oscillation::oscillation(&data, OscillationKind::Y, rctx)?;
        let patches = PatchLifts::new(rctx)?;
        let osc_patch = oscillation::patch_kind(&data, rctx, &patches)?;
        let (osc_energy, osc_energy_source) = oscillation::energy_kind_pair(&data, rctx, &initial_vec)?;
        let osc_x = if data.forcing.is_l2() {
            oscillation::oscillation(&data, OscillationKind::XBound, rctx)?
        } else {
            osc_energy_source.clone()
        };

        let ut = reconstruct(sol, TimeProfile::ConstantLeftContinuous);
        let uu = reconstruct(sol, TimeProfile::ContinuousAffine);
        let ub = reconstruct(sol, TimeProfile::Average);
        let residual = residual_dual_norm_sq(&uu, &reference.forcing, rctx)?;

        let e_t = reference.error_of(&ut)?;
        let e_u = reference.error_of(&uu)?;
        let e_b = reference.error_of(&ub)?;
        let parents_t = coarse.parents_of(fine)?;
        let parents_k: Vec<usize> = (0..rctx.space.mesh.n_cells())
            .map(|k| {
                mesh.parent_of(&rctx.space.mesh, k)
                    .ok_or_else(|| Error::Refinement("reference mesh is not nested".into()))
            })
            .collect::<Result<_>>()?;
        let x_ut = local_x_sq(reference, &e_t, &parents_t, &parents_k, nt, mesh.n_cells());
        let x_uu = local_x_sq(reference, &e_u, &parents_t, &parents_k, nt, mesh.n_cells());
        let x_mean = local_x_sq(reference, &e_b, &parents_t, &parents_k, nt, mesh.n_cells()).total_sq();
        let fe = e_u.final_value();
        let final_error_sq = rctx.mass.inner(fe, fe);

        let nv = mesh.n_vertices();
        let mut dt_global = vec![0.0; nt];
        let mut dt_patch = vec![vec![0.0; nt]; nv];
        let mut time_local_rhs = vec![0.0; nt];
        for m in 0..fine.n_intervals() {
            let n = parents_t[m];
            let (a, b) = fine.interval(m);
            let tau = b - a;
            let l = rctx.mass.mul_vec(&((&e_u.end[m] - &e_u.start[m]) / tau));
            let dual = rctx.dual_norm_sq(&l)?;
            dt_global[n] += tau * dual;
            for (v, row) in dt_patch.iter_mut().enumerate() {
                row[n] += tau * patches.dual_norm_sq(v, &l);
            }
            let (s, e) = (&e_u.start[m], &e_u.end[m]);
            let (as_, ae) = (rctx.stiffness.mul_vec(s), rctx.stiffness.mul_vec(e));
            let (ss, se, ee) = (s.dot(&as_), s.dot(&ae), e.dot(&ae));
            for (t, w) in gauss_on_interval(NORM_SUM_POINTS, a, b) {
                let th = (t - a) / tau;
                let g = ((1.0 - th) * (1.0 - th) * ss + 2.0 * th * (1.0 - th) * se + th * th * ee).max(0.0);
                let o = dual_norm_at(&data, rctx, t)?;
                time_local_rhs[n] += w * (dual.sqrt() + g.sqrt() + o).powi(2);
            }
        }

        let mut gamma: f64 = 0.0;
        for a in 0..nv {
            let h = mesh.vertex_patch(a).diameter;
            for n in 0..nt {
                gamma = gamma.max(h * h / coarse.tau(n));
            }
        }
        Ok(BoundEvaluator {
            jump,
            flux,
            osc_y,
            osc_x,
            osc_patch,
            osc_energy,
            osc_energy_source,
            initial_error,
            residual,
            x_ut,
            x_uu,
            x_mean,
            final_error_sq,
            dt_global,
            dt_patch,
            time_local_rhs,
            gamma,
            reference_refinement: [reference.space_refinement, reference.time_refinement],
            richardson: reference.richardson,
            vertex_cells: (0..nv).map(|a| mesh.vertex_cells[a].clone()).collect(),
            cell_vertices: mesh.cells.clone(),
        })
    }

    /// Lift surrogate of `|u - U|_Y`.
    pub fn error_y(&self) -> f64 {
        (self.residual.iter().sum::<f64>() + self.initial_error.powi(2)).sqrt()
    }

    pub fn error_x_ut(&self) -> f64 {
        self.x_ut.total()
    }

    pub fn error_x_uu(&self) -> f64 {
        self.x_uu.total()
    }

    pub fn error_energy_ut(&self) -> f64 {
        (self.x_ut.total_sq() + 0.5 * self.final_error_sq).sqrt()
    }

    pub fn error_energy_uu(&self) -> f64 {
        (self.x_uu.total_sq() + 0.5 * self.final_error_sq).sqrt()
    }

    pub fn error_energy_mean(&self) -> f64 {
        (self.x_mean + 0.5 * self.final_error_sq).sqrt()
    }

    /// `|u - u_tau|_{E_Y}`; the jump part `|u_tau - U|_X = eta_J` is exact.
    pub fn error_extended_y(&self) -> f64 {
        (self.error_y().powi(2) + self.jump.total_sq()).sqrt()
    }

    fn flux_required(&self) -> Result<&FluxEstimators> {
        self.flux
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("this bound needs an equilibrated flux".into()))
    }

    /// `int (|sigma + grad U| + |f - f_{h,tau}|_*)^2 + |u_0 - u_{h,tau,0}|^2`, squared root.
    pub fn flux_y_estimator(&self, sol: &TimeSlabSolution, reference: &ReferenceSolution) -> Result<f64> {
        let fl = self.flux_required()?;
        let approx = discrete_data(sol)?;
        let data = OscillationData {
            forcing: &reference.forcing,
            approximation: &approx,
            partition: &sol.partition,
            initial_error: None,
        };
        let mut cross = 0.0;
        for n in 0..sol.partition.n_intervals() {
            if self.osc_y.per_interval[n] == 0.0 {
                continue;
            }
            let (a, b) = sol.partition.interval(n);
            for (t, w) in gauss_on_interval(6, a, b) {
                let th = (t - a) / (b - a);
                cross += w * fl.flux_sq_at(n, th).sqrt() * dual_norm_at(&data, &reference.context, t)?;
            }
        }
        let sq = fl.flux.total_sq() + 2.0 * cross + self.osc_y.value.powi(2) + self.initial_error.powi(2);
        Ok(sq.sqrt())
    }

    fn patch_sum(&self, table: &dyn Fn(usize) -> f64, a: usize) -> f64 {
        self.vertex_cells[a].iter().map(|&k| table(k)).sum()
    }

    fn osc_patch_table(&self) -> &Vec<Vec<f64>> {
        self.osc_patch.per_patch.as_ref().expect("patch oscillation carries its table")
    }

    pub fn evaluate(
        &self,
        theorem: Theorem,
        sol: &TimeSlabSolution,
        reference: &ReferenceSolution,
    ) -> Result<BoundEvaluation> {
        use Relation::*;
        let eta_j = self.jump.total();
        let osc_y = self.osc_y.value;
        let err_y = self.error_y();
        let nt = sol.partition.n_intervals();
        let mut ineq = Vec::new();
        let mut local = Vec::new();
        let (error, estimator) = match theorem {
            Theorem::SemidiscreteYUpper => {
                let est = ((eta_j + osc_y).powi(2) + self.initial_error.powi(2)).sqrt();
                ineq.push(Inequality::new("error_y <= eta_J + osc_Y", err_y, est, Upper, REFERENCE_GAP));
                (err_y, est)
            }
            Theorem::SemidiscreteYLower => {
                ineq.push(Inequality::new("eta_J <= error_y + osc_Y", eta_j, err_y + osc_y, Upper, REFERENCE_GAP));
                (err_y, eta_j)
            }
            Theorem::OscillationDominated => {
                let jn = self.jump.interval_sums();
                let xn = self.x_uu.interval_sums();
                for n in 0..nt {
                    local.push(LocalConstant {
                        cell: None,
                        interval: n,
                        lhs: jn[n] + self.osc_y.per_interval[n],
                        rhs: self.dt_global[n] + xn[n],
                    });
                }
                let lhs: f64 = local.iter().map(|c| c.lhs).sum();
                let rhs: f64 = local.iter().map(|c| c.rhs).sum();
                ineq.push(Inequality::new("jump^2 + osc_Y^2 <= C local Y error^2", lhs, rhs, Measured, 0.0));
                (rhs.sqrt(), lhs.sqrt())
            }
            Theorem::SemidiscreteXUpper => {
                let est = eta_j + self.osc_x.value;
                ineq.push(Inequality::new("|u - u_tau|_X <= eta_J + osc_X", self.error_x_ut(), est, Upper, REFERENCE_GAP));
                ineq.push(Inequality::new("|u - U|_X <= eta_J + osc_X", self.error_x_uu(), est, Upper, REFERENCE_GAP));
                (self.error_x_ut().max(self.error_x_uu()), est)
            }
            Theorem::SemidiscreteEnergy => {
                let eb = self.error_energy_mean();
                let osc = self.osc_energy.value;
                ineq.push(Inequality::new("|u - ubar|_E <= eta_J / 2 + osc_E", eb, 0.5 * eta_j + osc, Upper, REFERENCE_GAP));
                ineq.push(Inequality::new("eta_J / 2 <= |u - ubar|_E + osc_E", 0.5 * eta_j, eb + osc, Upper, REFERENCE_GAP));
                (eb, 0.5 * eta_j + osc)
            }
            Theorem::Hypercircle => {
                let lhs = self.error_energy_ut().powi(2) + self.error_energy_uu().powi(2);
                ineq.push(Inequality::new(
                    "|u - u_tau|_E^2 + |u - U|_E^2 = eta_J^2",
                    lhs,
                    eta_j * eta_j,
                    Identity,
                    REFERENCE_GAP,
                ));
                (lhs.sqrt(), eta_j)
            }
            Theorem::FluxYUpper => {
                let est = self.flux_y_estimator(sol, reference)?;
                ineq.push(Inequality::new("error_y <= flux estimator", err_y, est, Upper, REFERENCE_GAP));
                (err_y, est)
            }
            Theorem::ExtendedY => {
                let fl = self.flux_required()?;
                let err = self.error_extended_y();
                let est = (self.flux_y_estimator(sol, reference)?.powi(2) + self.jump.total_sq()).sqrt();
                ineq.push(Inequality::new("|u - u_tau|_EY <= estimator", err, est, Upper, REFERENCE_GAP));
                ineq.push(Inequality::new("|u - U|_Y <= |u - u_tau|_EY", err_y, err, Upper, REFERENCE_GAP));
                ineq.push(Inequality::new("|u - u_tau|_EY <= 3 |u - U|_Y", err, 3.0 * err_y, Upper, REFERENCE_GAP));
                let osc = self.osc_patch_table();
                for n in 0..nt {
                    let jn = &self.jump.values[n];
                    let xn = &self.x_uu.values[n];
                    let patch_rhs: Vec<f64> = (0..self.vertex_cells.len())
                        .map(|a| {
                            self.dt_patch[a][n]
                                + self.patch_sum(&|k| xn[k], a)
                                + self.patch_sum(&|k| jn[k], a)
                                + osc[a][n]
                        })
                        .collect();
                    for (k, verts) in self.cell_vertices.iter().enumerate() {
                        local.push(LocalConstant {
                            cell: Some(k),
                            interval: n,
                            lhs: fl.flux.get(n, k) + jn[k],
                            rhs: verts.iter().map(|&a| patch_rhs[a]).sum(),
                        });
                    }
                }
                let lhs = fl.flux.total_sq() + self.jump.total_sq();
                let rhs = err * err + self.osc_patch.value.powi(2);
                ineq.push(Inequality::new("global lower bound", lhs, rhs, Measured, 0.0));
                (err, est)
            }
            Theorem::FluxXLower => {
                let fl = self.flux_required()?;
                let osc = self.osc_patch_table();
                for n in 0..nt {
                    let jn = &self.jump.values[n];
                    let xn = &self.x_ut.values[n];
                    let patch_rhs: Vec<f64> = (0..self.vertex_cells.len())
                        .map(|a| self.patch_sum(&|k| xn[k] + jn[k], a) + osc[a][n])
                        .collect();
                    for (k, verts) in self.cell_vertices.iter().enumerate() {
                        local.push(LocalConstant {
                            cell: Some(k),
                            interval: n,
                            lhs: fl.flux_prime.get(n, k),
                            rhs: verts.iter().map(|&a| patch_rhs[a]).sum(),
                        });
                    }
                }
                let lhs = fl.flux_prime.total_sq();
                let rhs = self.x_ut.total_sq() + self.jump.total_sq() + self.osc_patch.value.powi(2);
                ineq.push(Inequality::new("global lower bound", lhs, rhs, Measured, 0.0));
                (self.error_x_ut(), fl.flux_prime.total())
            }
            Theorem::FluxEnergy => {
                let fl = self.flux_required()?;
                let eb = self.error_energy_mean();
                let main = (0.25 * self.jump.total_sq() + fl.flux_mean.total_sq()).sqrt();
                let est = main + self.osc_energy.value;
                ineq.push(Inequality::new("|u - ubar|_E <= estimator", eb, est, Upper, REFERENCE_GAP));
                let rhs = eb * eb + self.osc_energy_source.value.powi(2) + self.osc_patch.value.powi(2);
                ineq.push(Inequality::new("global lower bound", main * main, rhs, Measured, 0.0));
                (eb, est)
            }
            Theorem::JumpTimeLocal => {
                let jn = self.jump.interval_sums();
                for n in 0..nt {
                    local.push(LocalConstant {
                        cell: None,
                        interval: n,
                        lhs: jn[n],
                        rhs: self.time_local_rhs[n],
                    });
                }
                let worst = local.iter().map(LocalConstant::constant).fold(0.0, f64::max);
                ineq.push(Inequality::new("max_n lhs_n / rhs_n <= 1", worst, 1.0, Upper, LOCAL_GAP));
                let rhs: f64 = self.time_local_rhs.iter().sum();
                (rhs.sqrt(), eta_j)
            }
            Theorem::EnergyEquivalence => {
                let ex = self.error_x_ut() + self.error_x_uu();
                let eb = self.error_energy_mean();
                ineq.push(Inequality::new("2 |u - ubar|_E <= E_X", 2.0 * eb, ex, Upper, LOCAL_GAP));
                ineq.push(Inequality::new("E_X <= 4 |u - ubar|_E", ex, 4.0 * eb, Upper, LOCAL_GAP));
                ineq.push(Inequality::new("eta_J <= E_X", eta_j, ex, Upper, LOCAL_GAP));
                (ex, eta_j)
            }
        };
        let max_local_constant = (!local.is_empty())
            .then(|| local.iter().map(LocalConstant::constant).fold(0.0, f64::max));
        Ok(BoundEvaluation {
            theorem,
            error,
            estimator,
            effectivity: ratio(estimator, error),
            inequalities: ineq,
            local,
            max_local_constant,
            reference_refinement: self.reference_refinement,
            richardson: self.richardson,
            gamma: self.gamma,
        })
    }
}

/// Evaluate one bound. Builds the shared data; use [`BoundEvaluator`] for several.
pub fn bound_report(
    sol: &TimeSlabSolution,
    flux: Option<&EquilibratedFlux>,
    reference: &ReferenceSolution,
    theorem: Theorem,
) -> Result<BoundEvaluation> {
    if theorem.needs_flux() && flux.is_none() {
        return Err(Error::InvalidArgument(format!("{} needs an equilibrated flux", theorem.name())));
    }
    BoundEvaluator::new(sol, flux, reference)?.evaluate(theorem, sol, reference)
}

/// `int_{I_n} |grad e|_K^2` on coarse (interval, cell) pairs for `e` on the reference grid.
fn local_x_sq(
    reference: &ReferenceSolution,
    e: &SlabFunction,
    parents_t: &[usize],
    parents_k: &[usize],
    n_intervals: usize,
    n_cells: usize,
) -> Localized {
    let space = reference.space();
    let mesh = &space.mesh;
    let rule = QuadratureRule::simplex(mesh.dim, 2 * space.degree);
    let quad: Vec<_> = (0..mesh.n_cells()).map(|k| space.cell_quadrature(k, &rule)).collect();
    let mut out = Localized::zeros(n_intervals, n_cells);
    for m in 0..e.partition.n_intervals() {
        let tau = e.partition.tau(m);
        let (s, en) = (&e.start[m], &e.end[m]);
        for (k, pts) in quad.iter().enumerate() {
            let ls = space.local_coefficients(s, k);
            let le = space.local_coefficients(en, k);
            let mut acc = 0.0;
            for (_, lam, w) in pts {
                let g = space.basis.gradients(lam, &mesh.geometry[k].grad_bary);
                let (mut gs, mut ge) = ([0.0; 2], [0.0; 2]);
                for i in 0..g.len() {
                    for d in 0..2 {
                        gs[d] += ls[i] * g[i][d];
                        ge[d] += le[i] * g[i][d];
                    }
                }
                acc += w * (gs[0] * gs[0] + gs[1] * gs[1] + gs[0] * ge[0] + gs[1] * ge[1] + ge[0] * ge[0] + ge[1] * ge[1]);
            }
            out.values[parents_t[m]][parents_k[k]] += tau / 3.0 * acc;
        }
    }
    out
}

/// Measured constants of one bound across several runs.
///
/// Returns the largest ratio between successive runs; an alert is due above two.
pub fn constant_drift(constants: &[f64]) -> f64 {
    let finite: Vec<f64> = constants.iter().copied().filter(|c| c.is_finite() && *c > 0.0).collect();
    if finite.len() < constants.len() {
        return f64::INFINITY;
    }
    let max = finite.iter().copied().fold(0.0, f64::max);
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    if finite.is_empty() {
        1.0
    } else {
        max / min
    }
}

/// Initial error vector helper used by reports: `u_0 - u_{h,tau,0}` on the reference space.
pub fn initial_error_vector(sol: &TimeSlabSolution, reference: &ReferenceSolution) -> DVector<f64> {
    &reference.function.initial - reference.context.prolongate(&sol.values[0])
}
