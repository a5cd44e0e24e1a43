//! Space-time norms of discrete functions and the discrete identities behind them.

use nalgebra::DVector;

use super::lift::RieszLiftContext;
use crate::error::{Error, Result};
use crate::timestepping::{SlabFunction, SpaceTimeFunction, TimeProfile};

/// Space-time norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `int |grad v|^2`.
    X,
    /// `int (|d_t v|_*^2 + |grad v|^2) + |v(T)|^2`.
    Y,
    /// As `Y` with `|v(0)|^2` in place of `|v(T)|^2`.
    YT,
    /// As `Y` with both `|v(0)|^2` and `|v(T)|^2`.
    YBar,
    /// `int |grad v|^2 + |v(T)|^2 / 2`.
    Energy,
}

impl NormKind {
    fn needs_continuity(self) -> bool {
        matches!(self, NormKind::Y | NormKind::YT | NormKind::YBar)
    }
}

/// `int_{I_n} a(v, v)` for `v` affine from `s` to `e`.
pub fn affine_quadratic(tau: f64, s: &DVector<f64>, e: &DVector<f64>, op: &crate::discretization::SymmetricOperator) -> f64 {
    let as_ = op.mul_vec(s);
    let ae = op.mul_vec(e);
    tau / 3.0 * (s.dot(&as_) + s.dot(&ae) + e.dot(&ae))
}

/// Squared norm of a function already expressed on the lift space.
pub fn slab_norm_sq(v: &SlabFunction, kind: NormKind, ctx: &RieszLiftContext) -> Result<f64> {
    if kind.needs_continuity() && !v.is_continuous() {
        return Err(Error::ProfileMismatch(format!(
            "{kind:?} norm needs a function continuous in time"
        )));
    }
    let p = &v.partition;
    let mut x = 0.0;
    for n in 0..p.n_intervals() {
        x += affine_quadratic(p.tau(n), &v.start[n], &v.end[n], &ctx.stiffness);
    }
    let l2 = |w: &DVector<f64>| ctx.mass.inner(w, w);
    let dt = || -> Result<f64> {
        let mut s = 0.0;
        for n in 0..p.n_intervals() {
            let tau = p.tau(n);
            let d = (&v.end[n] - &v.start[n]) / tau;
            s += tau * ctx.dual_norm_sq(&ctx.mass.mul_vec(&d))?;
        }
        Ok(s)
    };
    Ok(match kind {
        NormKind::X => x,
        NormKind::Energy => x + 0.5 * l2(v.final_value()),
        NormKind::Y => x + dt()? + l2(v.final_value()),
        NormKind::YT => x + dt()? + l2(&v.initial),
        NormKind::YBar => x + dt()? + l2(v.final_value()) + l2(&v.initial),
    })
}

/// Norm of a trial-space function, with dual norms taken over the lift space.
pub fn spacetime_norm(v: &SpaceTimeFunction, kind: NormKind, ctx: &RieszLiftContext) -> Result<f64> {
    if kind.needs_continuity() && v.profile != TimeProfile::ContinuousAffine {
        return Err(Error::ProfileMismatch(format!(
            "{kind:?} norm needs the continuous affine profile, got {:?}",
            v.profile
        )));
    }
    Ok(slab_norm_sq(&ctx.lift_function(v)?, kind, ctx)?.sqrt())
}

/// Relative defect of `|w* + v|_X^2 + |v(0)|^2 = |v|_Y^2`, where `w*` lifts `d_t v`
/// on each interval.
pub fn ys_identity_residual(v: &SpaceTimeFunction, ctx: &RieszLiftContext) -> Result<f64> {
    if v.profile != TimeProfile::ContinuousAffine {
        return Err(Error::ProfileMismatch("identity needs a continuous affine function".into()));
    }
    let s = ctx.lift_function(v)?;
    let p = &s.partition;
    let mut lhs = ctx.mass.inner(&s.initial, &s.initial);
    for n in 0..p.n_intervals() {
        let tau = p.tau(n);
        let w = ctx.riesz(&ctx.mass.mul_vec(&((&s.end[n] - &s.start[n]) / tau)))?;
        lhs += affine_quadratic(tau, &(&w + &s.start[n]), &(&w + &s.end[n]), &ctx.stiffness);
    }
    let rhs = slab_norm_sq(&s, NormKind::Y, ctx)?;
    Ok(relative(lhs, rhs))
}

/// Relative defect of `|||v|||_Y^2 = 2 |v(T)|^2 + int |(d_t + Delta) v|_*^2`.
pub fn infsup_identity_residual(v: &SpaceTimeFunction, ctx: &RieszLiftContext) -> Result<f64> {
    if v.profile != TimeProfile::ContinuousAffine {
        return Err(Error::ProfileMismatch("identity needs a continuous affine function".into()));
    }
    let s = ctx.lift_function(v)?;
    let p = &s.partition;
    let fin = s.final_value();
    let mut lhs = 2.0 * ctx.mass.inner(fin, fin);
    for n in 0..p.n_intervals() {
        let tau = p.tau(n);
        // The lift of (d_t + Delta) v(t) is w - v(t), with w the lift of d_t v.
        let w = ctx.riesz(&ctx.mass.mul_vec(&((&s.end[n] - &s.start[n]) / tau)))?;
        lhs += affine_quadratic(tau, &(&w - &s.start[n]), &(&w - &s.end[n]), &ctx.stiffness);
    }
    let rhs = slab_norm_sq(&s, NormKind::YBar, ctx)?;
    Ok(relative(lhs, rhs))
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}
