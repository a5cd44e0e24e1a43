//! Residual dual norms and the backward representer of the `X` norm.

use nalgebra::DVector;

use super::lift::RieszLiftContext;
use super::spacetime::{slab_norm_sq, NormKind};
use crate::discretization::quadrature::gauss_on_interval;
use crate::error::{Error, Result};
use crate::timestepping::forcing::data_quadrature_degree;
use crate::timestepping::{implicit_euler, Forcing, SlabFunction, SpaceTimeFunction, TimeProfile};

/// Points per interval for time integrals of residuals with general data.
pub const RESIDUAL_TIME_POINTS: usize = 6;

/// Squared lift-space dual norm of `R(t) = f(t) - d_t U - (-Delta U(t))`, integrated
/// over each interval of `U`'s partition.
///
/// Returns the per-interval contributions. With the initial error `e_0` added,
/// `sum + |e_0|^2` is the lift surrogate of `|u - U|_Y^2`.
pub fn residual_dual_norm_sq(
    u: &SpaceTimeFunction,
    forcing: &Forcing,
    ctx: &RieszLiftContext,
) -> Result<Vec<f64>> {
    if u.profile != TimeProfile::ContinuousAffine {
        return Err(Error::ProfileMismatch("residual needs the continuous affine reconstruction".into()));
    }
    let s = ctx.lift_function(u)?;
    let p = &s.partition;
    let qd = data_quadrature_degree(ctx.space.degree);
    let mut out = Vec::with_capacity(p.n_intervals());
    for n in 0..p.n_intervals() {
        let (a, b) = p.interval(n);
        let tau = b - a;
        let mdt = ctx.mass.mul_vec(&((&s.end[n] - &s.start[n]) / tau));
        let as_ = ctx.stiffness.mul_vec(&s.start[n]);
        let ae = ctx.stiffness.mul_vec(&s.end[n]);
        let mut acc = 0.0;
        if forcing.constant_on(a, b) {
            let f = forcing.load(&ctx.space, 0.5 * (a + b), qd);
            // Affine residual: two Gauss points are exact for its squared norm.
            for (t, w) in gauss_on_interval(2, a, b) {
                let th = (t - a) / tau;
                let r = &f - &mdt - (&as_ * (1.0 - th) + &ae * th);
                acc += w * ctx.dual_norm_sq(&r)?;
            }
        } else {
            for (t, w) in gauss_on_interval(RESIDUAL_TIME_POINTS, a, b) {
                let th = (t - a) / tau;
                let r = forcing.load(&ctx.space, t, qd) - &mdt - (&as_ * (1.0 - th) + &ae * th);
                acc += w * ctx.dual_norm_sq(&r)?;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Residual dual norm `|R|_{L2(0,T; lift*)}` (the `Y`-error surrogate without the
/// initial error term).
pub fn residual_dual_norm_y(u: &SpaceTimeFunction, forcing: &Forcing, ctx: &RieszLiftContext) -> Result<f64> {
    Ok(residual_dual_norm_sq(u, forcing, ctx)?.iter().sum::<f64>().sqrt())
}

/// `int_{I_n} a(v, w)` for two affine functions.
fn affine_bilinear(
    tau: f64,
    sv: &DVector<f64>,
    ev: &DVector<f64>,
    sw: &DVector<f64>,
    ew: &DVector<f64>,
    op: &crate::discretization::SymmetricOperator,
) -> f64 {
    let asw = op.mul_vec(sw);
    let aew = op.mul_vec(ew);
    tau / 6.0 * (2.0 * sv.dot(&asw) + sv.dot(&aew) + ev.dot(&asw) + 2.0 * ev.dot(&aew))
}

/// Backward representer `phi*` of `v` with `phi*(T) = 0`, from the backward implicit
/// Euler scheme for `-d_t phi - Delta phi = -Delta v`, and the ratio
/// `B_X(v, phi*) / |phi*|_{Y_T}`, a lower bound for `|v|_X`.
///
/// The returned function lives on the lift space.
pub fn backward_representer(v: &SpaceTimeFunction, ctx: &RieszLiftContext) -> Result<(SlabFunction, f64)> {
    let s = ctx.lift_function(v)?;
    let p = &s.partition;
    let n = p.n_intervals();
    let rev = p.reversed();
    let loads: Vec<DVector<f64>> = (0..n)
        .map(|k| {
            let m = n - 1 - k;
            ctx.stiffness.mul_vec(&((&s.start[m] + &s.end[m]) * 0.5))
        })
        .collect();
    let (psi, _) = implicit_euler(&ctx.mass, &ctx.stiffness, &rev, &loads, DVector::zeros(ctx.space.dim()))?;
    let nodes: Vec<DVector<f64>> = psi.into_iter().rev().collect();
    let phi = SpaceTimeFunction::new(TimeProfile::ContinuousAffine, p.clone(), nodes)?.to_slab();
    let mut b = 0.0;
    for k in 0..n {
        let tau = p.tau(k);
        let d = (&phi.end[k] - &phi.start[k]) / tau;
        let mv = ctx.mass.mul_vec(&((&s.start[k] + &s.end[k]) * 0.5));
        b += -tau * d.dot(&mv);
        b += affine_bilinear(tau, &s.start[k], &s.end[k], &phi.start[k], &phi.end[k], &ctx.stiffness);
    }
    let norm = slab_norm_sq(&phi, NormKind::YT, ctx)?.sqrt();
    let ratio = if norm == 0.0 { 0.0 } else { b / norm };
    Ok((phi, ratio))
}
