//! Data oscillation terms.

use nalgebra::DVector;
use serde::Serialize;

use crate::discretization::quadrature::gauss_on_interval;
use crate::discretization::QuadratureRule;
use crate::error::{Error, Result};
use crate::norms::{slab_norm_sq, NormKind, PatchLifts, RieszLiftContext};
use crate::timestepping::forcing::data_quadrature_degree;
use crate::timestepping::{implicit_euler, Forcing, SpaceTimeFunction, TimePartition, TimeProfile};

/// Time points per interval for oscillation integrals of non-constant data.
const OSC_TIME_POINTS: usize = 6;

/// Time refinement of the auxiliary heat solve behind the energy kind.
pub const ENERGY_OSC_TIME_REFINEMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationKind {
    /// `|f - f_tau|_{L2(H^-1)}`.
    Y,
    /// `(sum_n tau_n / (2 pi) |f - f_tau|^2_{L2(I_n; L2)})^{1/2}`.
    XBound,
    /// `int_{I_n} |f - f_tau|^2_{H^-1(omega_a)}` per vertex and interval.
    Patch,
    /// Supremum over `Y` against the `|||.|||_Y` norm, including the initial datum.
    Energy,
}

/// How a reported oscillation value relates to the quantity it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Surrogate {
    /// Supremum over the lift space: a lower bound that tightens as the lift grows.
    LiftSupremum,
    /// A closed-form upper bound.
    ClosedFormBound,
    /// Energy norm of an auxiliary heat solution on the lift space.
    AuxiliarySolve,
}

/// Inputs of an oscillation term: `f`, its approximation, and the partition.
#[derive(Clone)]
pub struct OscillationData<'a> {
    pub forcing: &'a Forcing,
    pub approximation: &'a Forcing,
    pub partition: &'a TimePartition,
    /// `u_0 - u_{h,tau,0}` on the lift space; only the energy kind uses it.
    pub initial_error: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Oscillation {
    pub kind: OscillationKind,
    pub surrogate: Surrogate,
    pub value: f64,
    /// Squared contributions per interval.
    pub per_interval: Vec<f64>,
    /// Squared contributions per trial vertex and interval, for the patch kind.
    pub per_patch: Option<Vec<Vec<f64>>>,
}

impl OscillationData<'_> {
    fn difference(&self) -> Forcing {
        self.forcing.minus(self.approximation)
    }

    fn constant_on(&self, a: f64, b: f64) -> bool {
        self.forcing.constant_on(a, b) && self.approximation.constant_on(a, b)
    }

    /// Time quadrature adapted to interval `(a, b)`.
    fn time_points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        if self.constant_on(a, b) {
            vec![(0.5 * (a + b), b - a)]
        } else {
            gauss_on_interval(OSC_TIME_POINTS, a, b)
        }
    }
}

pub fn oscillation(data: &OscillationData, kind: OscillationKind, ctx: &RieszLiftContext) -> Result<Oscillation> {
    match kind {
        OscillationKind::Y => y_kind(data, ctx),
        OscillationKind::XBound => x_bound(data, ctx),
        OscillationKind::Patch => patch_kind(data, ctx, &PatchLifts::new(ctx)?),
        OscillationKind::Energy => energy_kind(data, ctx, data.initial_error.as_ref()),
    }
}

fn finish(kind: OscillationKind, surrogate: Surrogate, per_interval: Vec<f64>) -> Oscillation {
    Oscillation {
        kind,
        surrogate,
        value: per_interval.iter().sum::<f64>().sqrt(),
        per_interval,
        per_patch: None,
    }
}

/// `|f(t) - f_tau(t)|_{lift*}` at time `t`.
pub fn dual_norm_at(data: &OscillationData, ctx: &RieszLiftContext, t: f64) -> Result<f64> {
    let qd = data_quadrature_degree(ctx.space.degree);
    Ok(ctx.dual_norm_sq(&data.difference().load(&ctx.space, t, qd))?.sqrt())
}

fn y_kind(data: &OscillationData, ctx: &RieszLiftContext) -> Result<Oscillation> {
    let diff = data.difference();
    let qd = data_quadrature_degree(ctx.space.degree);
    let mut per = Vec::with_capacity(data.partition.n_intervals());
    for n in 0..data.partition.n_intervals() {
        let (a, b) = data.partition.interval(n);
        let mut s = 0.0;
        for (t, w) in data.time_points(a, b) {
            s += w * ctx.dual_norm_sq(&diff.load(&ctx.space, t, qd))?;
        }
        per.push(s);
    }
    Ok(finish(OscillationKind::Y, Surrogate::LiftSupremum, per))
}

fn x_bound(data: &OscillationData, ctx: &RieszLiftContext) -> Result<Oscillation> {
    if !data.forcing.is_l2() || !data.approximation.is_l2() {
        return Err(Error::UnsupportedData(
            "the closed-form X oscillation bound needs square-integrable data".into(),
        ));
    }
    let diff = data.difference();
    // Quadrature on the trial mesh, where piecewise data is smooth on every cell.
    let space = &ctx.trial;
    let rule = QuadratureRule::simplex(space.mesh.dim, data_quadrature_degree(space.degree));
    let cells: Vec<Vec<([f64; 2], f64)>> = (0..space.mesh.n_cells())
        .map(|k| space.cell_quadrature(k, &rule).into_iter().map(|(x, _, w)| (x, w)).collect())
        .collect();
    let mut per = Vec::with_capacity(data.partition.n_intervals());
    for n in 0..data.partition.n_intervals() {
        let (a, b) = data.partition.interval(n);
        let mut s = 0.0;
        for (t, wt) in data.time_points(a, b) {
            for pts in &cells {
                for &(x, w) in pts {
                    let d = diff.eval(x, t)?;
                    s += wt * w * d * d;
                }
            }
        }
        per.push((b - a) / (2.0 * std::f64::consts::PI) * s);
    }
    Ok(finish(OscillationKind::XBound, Surrogate::ClosedFormBound, per))
}

/// Patch oscillations `[eta_osc^{a,n}]^2` with precomputed patch lifts.
pub fn patch_kind(data: &OscillationData, ctx: &RieszLiftContext, patches: &PatchLifts) -> Result<Oscillation> {
    let diff = data.difference();
    let qd = data_quadrature_degree(ctx.space.degree);
    let nv = patches.dofs.len();
    let nt = data.partition.n_intervals();
    let mut table = vec![vec![0.0; nt]; nv];
    for n in 0..nt {
        let (a, b) = data.partition.interval(n);
        for (t, w) in data.time_points(a, b) {
            let l = diff.load(&ctx.space, t, qd);
            if l.amax() == 0.0 {
                continue;
            }
            for (v, row) in table.iter_mut().enumerate() {
                row[n] += w * patches.dual_norm_sq(v, &l);
            }
        }
    }
    let per: Vec<f64> = (0..nt).map(|n| table.iter().map(|row| row[n]).sum()).collect();
    let mut osc = finish(OscillationKind::Patch, Surrogate::LiftSupremum, per);
    osc.per_patch = Some(table);
    Ok(osc)
}

/// Energy norm of `w` solving `d_t w - Delta w = f - f_tau`, `w(0) = initial`, on the lift
/// space with a refined implicit Euler step.
///
/// By the inf-sup identity for the energy norm this is the supremum defining the
/// energy oscillation; the discrete solve makes it a surrogate.
pub fn energy_kind(
    data: &OscillationData,
    ctx: &RieszLiftContext,
    initial: Option<&DVector<f64>>,
) -> Result<Oscillation> {
    let loads = energy_loads(data, ctx)?;
    energy_solve(data, ctx, &loads, initial)
}

/// Energy oscillation with and without the initial datum, sharing the load assembly.
pub fn energy_kind_pair(
    data: &OscillationData,
    ctx: &RieszLiftContext,
    initial: &DVector<f64>,
) -> Result<(Oscillation, Oscillation)> {
    let loads = energy_loads(data, ctx)?;
    Ok((
        energy_solve(data, ctx, &loads, Some(initial))?,
        energy_solve(data, ctx, &loads, None)?,
    ))
}

fn energy_loads(data: &OscillationData, ctx: &RieszLiftContext) -> Result<(TimePartition, Vec<DVector<f64>>)> {
    let fine = data.partition.refine(ENERGY_OSC_TIME_REFINEMENT)?;
    let diff = data.difference();
    let qd = data_quadrature_degree(ctx.space.degree);
    let loads = (0..fine.n_intervals())
        .map(|m| {
            let (a, b) = fine.interval(m);
            diff.mean_load(&ctx.space, a, b, qd)
        })
        .collect();
    Ok((fine, loads))
}

fn energy_solve(
    data: &OscillationData,
    ctx: &RieszLiftContext,
    (fine, loads): &(TimePartition, Vec<DVector<f64>>),
    initial: Option<&DVector<f64>>,
) -> Result<Oscillation> {
    let w0 = initial.cloned().unwrap_or_else(|| DVector::zeros(ctx.space.dim()));
    if w0.len() != ctx.space.dim() {
        return Err(Error::InvalidArgument("initial error does not live on the lift space".into()));
    }
    let (values, _) = implicit_euler(&ctx.mass, &ctx.stiffness, fine, loads, w0)?;
    let w = SpaceTimeFunction::new(TimeProfile::ContinuousAffine, fine.clone(), values)?.to_slab();
    let parents = data.partition.parents_of(fine)?;
    let mut per = vec![0.0; data.partition.n_intervals()];
    for m in 0..fine.n_intervals() {
        per[parents[m]] += crate::norms::affine_quadratic(fine.tau(m), &w.start[m], &w.end[m], &ctx.stiffness);
    }
    let total = slab_norm_sq(&w, NormKind::Energy, ctx)?;
    // The final-time term is attributed to the last interval.
    let x: f64 = per.iter().sum();
    if let Some(last) = per.last_mut() {
        *last += (total - x).max(0.0);
    }
    Ok(finish(OscillationKind::Energy, Surrogate::AuxiliarySolve, per))
}
