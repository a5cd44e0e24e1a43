//! Errors against manufactured solutions by space-time quadrature.

use nalgebra::DVector;

use super::manufactured::ManufacturedProblem;
use crate::discretization::quadrature::gauss_on_interval;
use crate::discretization::{QuadratureRule, ScalarSpace};
use crate::error::{Error, Result};
use crate::norms::{NormKind, RieszLiftContext};
use crate::timestepping::forcing::data_quadrature_degree;
use crate::timestepping::{SlabFunction, SpaceTimeFunction, TimeProfile};

/// Gauss points per interval in time.
pub const EXACT_TIME_POINTS: usize = 6;

/// Quadrature settings of [`exact_error_with`].
#[derive(Debug, Clone, Copy)]
pub struct ExactQuadrature {
    pub time_points: usize,
    /// Added to the data quadrature degree of the space.
    pub extra_space_degree: usize,
}

impl Default for ExactQuadrature {
    fn default() -> Self {
        ExactQuadrature {
            time_points: EXACT_TIME_POINTS,
            extra_space_degree: 0,
        }
    }
}

/// `|u - v|` in the norm `kind`, with `v` on the trial space of `ctx`.
///
/// Dual norms of time derivatives are taken over the lift space.
pub fn exact_error(
    problem: &ManufacturedProblem,
    approx: &SpaceTimeFunction,
    kind: NormKind,
    ctx: &RieszLiftContext,
) -> Result<f64> {
    exact_error_with(problem, approx, kind, ctx, ExactQuadrature::default())
}

pub fn exact_error_with(
    problem: &ManufacturedProblem,
    approx: &SpaceTimeFunction,
    kind: NormKind,
    ctx: &RieszLiftContext,
    quad: ExactQuadrature,
) -> Result<f64> {
    if quad.time_points < 5 {
        return Err(Error::InvalidArgument("at least five time points per interval are needed".into()));
    }
    if matches!(kind, NormKind::Y | NormKind::YT | NormKind::YBar) && approx.profile != TimeProfile::ContinuousAffine {
        return Err(Error::ProfileMismatch(format!("{kind:?} error needs a continuous approximation")));
    }
    let space = &ctx.trial;
    if approx.nodes[0].len() != space.dim() {
        return Err(Error::InvalidArgument("approximation does not live on the trial space".into()));
    }
    let v = approx.to_slab();
    let rule = QuadratureRule::simplex(space.mesh.dim, data_quadrature_degree(space.degree) + quad.extra_space_degree);
    let x = x_error_sq(problem, space, &v, &rule, quad.time_points);
    let t_end = v.partition.final_time();
    let l2_end = || l2_error_sq(problem, space, v.final_value(), t_end, &rule);
    let l2_start = || l2_error_sq(problem, space, &v.initial, 0.0, &rule);
    let dt = || dual_dt_error_sq(problem, &v, ctx, quad.time_points);
    let sq = match kind {
        NormKind::X => x,
        NormKind::Energy => x + 0.5 * l2_end(),
        NormKind::Y => x + dt()? + l2_end(),
        NormKind::YT => x + dt()? + l2_start(),
        NormKind::YBar => x + dt()? + l2_end() + l2_start(),
    };
    Ok(sq.sqrt())
}

fn x_error_sq(
    problem: &ManufacturedProblem,
    space: &ScalarSpace,
    v: &SlabFunction,
    rule: &QuadratureRule,
    time_points: usize,
) -> f64 {
    let p = &v.partition;
    let cells: Vec<_> = (0..space.mesh.n_cells()).map(|k| space.cell_quadrature(k, rule)).collect();
    let mut s = 0.0;
    for n in 0..p.n_intervals() {
        let (a, b) = p.interval(n);
        for (t, wt) in gauss_on_interval(time_points, a, b) {
            let vt = v.value(n, (t - a) / (b - a));
            for (k, pts) in cells.iter().enumerate() {
                for (x, lam, w) in pts {
                    let g = space.gradient_in_cell(&vt, k, lam);
                    let gu = problem.grad_u(*x, t);
                    s += wt * w * ((gu[0] - g[0]).powi(2) + (gu[1] - g[1]).powi(2));
                }
            }
        }
    }
    s
}

fn l2_error_sq(problem: &ManufacturedProblem, space: &ScalarSpace, v: &DVector<f64>, t: f64, rule: &QuadratureRule) -> f64 {
    let mut s = 0.0;
    for k in 0..space.mesh.n_cells() {
        for (x, lam, w) in space.cell_quadrature(k, rule) {
            s += w * (problem.u(x, t) - space.eval_in_cell(v, k, &lam)).powi(2);
        }
    }
    s
}

fn dual_dt_error_sq(problem: &ManufacturedProblem, v: &SlabFunction, ctx: &RieszLiftContext, time_points: usize) -> Result<f64> {
    let p = &v.partition;
    let qd = data_quadrature_degree(ctx.space.degree) + 2;
    let mut s = 0.0;
    for n in 0..p.n_intervals() {
        let (a, b) = p.interval(n);
        let dv = ctx.mass.mul_vec(&ctx.prolongate(&((&v.end[n] - &v.start[n]) / (b - a))));
        for (t, w) in gauss_on_interval(time_points, a, b) {
            let l = ctx.space.load_vector(&|x| problem.dt_u(x, t), qd) - &dv;
            s += w * ctx.dual_norm_sq(&l)?;
        }
    }
    Ok(s)
}

/// Observed convergence orders `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.
pub fn observed_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(hw, ew)| (ew[0] / ew[1]).ln() / (hw[0] / hw[1]).ln())
        .collect()
}

/// Asymptotic-regime detector: errors measured against a 2x and a 4x finer reference
/// differ by less than half of the latter.
pub fn reference_gap_ok(error_vs_2x: f64, error_vs_4x: f64) -> bool {
    (error_vs_2x - error_vs_4x).abs() < 0.5 * error_vs_4x.abs()
}
