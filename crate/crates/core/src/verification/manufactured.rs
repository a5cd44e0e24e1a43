//! Manufactured solutions of the heat equation on the unit interval or square.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timestepping::Forcing;

type Field = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
type GradField = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManufacturedKind {
    /// `u = sin(k pi x) exp(-decay t)`.
    Fourier1d { k: u32, decay: f64 },
    /// `u = sin(kx pi x) sin(ky pi y) exp(-decay t)`.
    Fourier2d { kx: u32, ky: u32, decay: f64 },
    /// `u = t x(1-x)` in 1D, `u = t x(1-x) y(1-y)` in 2D.
    PolynomialInTime { dim: usize },
    /// `u = a (1 - exp(-lambda t)) phi / lambda` from rest under the steady source `f = a phi`,
    /// with `phi = sin(k pi x)` or `sin(k pi x) sin(k pi y)` and `lambda = dim (k pi)^2`.
    Relaxation { dim: usize, k: u32, amplitude: f64 },
}

/// Exact solution, its derivatives and the matching source on `(0, 1)^d x (0, T)`.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub kind: ManufacturedKind,
    pub dim: usize,
    pub final_time: f64,
    u: Field,
    dt_u: Field,
    grad_u: GradField,
    f: Field,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("kind", &self.kind)
            .field("final_time", &self.final_time)
            .finish()
    }
}

pub fn manufactured(kind: ManufacturedKind, final_time: f64) -> Result<ManufacturedProblem> {
    if !(final_time > 0.0) {
        return Err(Error::InvalidArgument(format!("final time {final_time} must be positive")));
    }
    let (dim, u, dt_u, grad_u, f): (usize, Field, Field, GradField, Field) = match kind {
        ManufacturedKind::Fourier1d { k, decay } => {
            if k == 0 {
                return Err(Error::InvalidArgument("mode index must be at least 1".into()));
            }
            let w = k as f64 * PI;
            let lap = w * w;
            (
                1,
                Arc::new(move |x, t| (w * x[0]).sin() * (-decay * t).exp()),
                Arc::new(move |x, t| -decay * (w * x[0]).sin() * (-decay * t).exp()),
                Arc::new(move |x, t| [w * (w * x[0]).cos() * (-decay * t).exp(), 0.0]),
                Arc::new(move |x, t| (lap - decay) * (w * x[0]).sin() * (-decay * t).exp()),
            )
        }
        ManufacturedKind::Fourier2d { kx, ky, decay } => {
            if kx == 0 || ky == 0 {
                return Err(Error::InvalidArgument("mode indices must be at least 1".into()));
            }
            let (a, b) = (kx as f64 * PI, ky as f64 * PI);
            let lap = a * a + b * b;
            let s = move |x: [f64; 2], t: f64| (a * x[0]).sin() * (b * x[1]).sin() * (-decay * t).exp();
            (
                2,
                Arc::new(s),
                Arc::new(move |x, t| -decay * s(x, t)),
                Arc::new(move |x, t| {
                    let e = (-decay * t).exp();
                    [
                        a * (a * x[0]).cos() * (b * x[1]).sin() * e,
                        b * (a * x[0]).sin() * (b * x[1]).cos() * e,
                    ]
                }),
                Arc::new(move |x, t| (lap - decay) * s(x, t)),
            )
        }
        ManufacturedKind::PolynomialInTime { dim: 1 } => (
            1,
            Arc::new(|x, t| t * x[0] * (1.0 - x[0])),
            Arc::new(|x, _| x[0] * (1.0 - x[0])),
            Arc::new(|x, t| [t * (1.0 - 2.0 * x[0]), 0.0]),
            Arc::new(|x, t| x[0] * (1.0 - x[0]) + 2.0 * t),
        ),
        ManufacturedKind::PolynomialInTime { dim: 2 } => {
            let q = |s: f64| s * (1.0 - s);
            (
                2,
                Arc::new(move |x, t| t * q(x[0]) * q(x[1])),
                Arc::new(move |x, _| q(x[0]) * q(x[1])),
                Arc::new(move |x, t| [t * (1.0 - 2.0 * x[0]) * q(x[1]), t * q(x[0]) * (1.0 - 2.0 * x[1])]),
                Arc::new(move |x, t| q(x[0]) * q(x[1]) + 2.0 * t * (q(x[0]) + q(x[1]))),
            )
        }
        ManufacturedKind::Relaxation { dim, k, amplitude } => {
            if k == 0 {
                return Err(Error::InvalidArgument("mode index must be at least 1".into()));
            }
            if dim != 1 && dim != 2 {
                return Err(Error::InvalidArgument(format!("dimension {dim} is not supported")));
            }
            let w = k as f64 * PI;
            let lambda = dim as f64 * w * w;
            let phi = move |x: [f64; 2]| (w * x[0]).sin() * if dim == 2 { (w * x[1]).sin() } else { 1.0 };
            let grad_phi = move |x: [f64; 2]| {
                if dim == 2 {
                    [w * (w * x[0]).cos() * (w * x[1]).sin(), w * (w * x[0]).sin() * (w * x[1]).cos()]
                } else {
                    [w * (w * x[0]).cos(), 0.0]
                }
            };
            let growth = move |t: f64| -(-lambda * t).exp_m1() / lambda;
            (
                dim,
                Arc::new(move |x, t| amplitude * growth(t) * phi(x)),
                Arc::new(move |x, t| amplitude * (-lambda * t).exp() * phi(x)),
                Arc::new(move |x, t| {
                    let g = grad_phi(x);
                    let c = amplitude * growth(t);
                    [c * g[0], c * g[1]]
                }),
                Arc::new(move |x, _| amplitude * phi(x)),
            )
        }
        ManufacturedKind::PolynomialInTime { dim } => {
            return Err(Error::InvalidArgument(format!("dimension {dim} is not supported")))
        }
    };
    Ok(ManufacturedProblem {
        kind,
        dim,
        final_time,
        u,
        dt_u,
        grad_u,
        f,
    })
}

impl ManufacturedProblem {
    pub fn u(&self, x: [f64; 2], t: f64) -> f64 {
        (self.u)(x, t)
    }

    pub fn dt_u(&self, x: [f64; 2], t: f64) -> f64 {
        (self.dt_u)(x, t)
    }

    pub fn grad_u(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        (self.grad_u)(x, t)
    }

    pub fn f(&self, x: [f64; 2], t: f64) -> f64 {
        (self.f)(x, t)
    }

    pub fn u0(&self, x: [f64; 2]) -> f64 {
        (self.u)(x, 0.0)
    }

    pub fn forcing(&self) -> Forcing {
        let f = self.f.clone();
        Forcing::Analytic(f)
    }

    /// Largest mismatch between `f` and centred differences of `d_t u - Delta u` at
    /// `samples` random points, relative to the size of the terms involved.
    ///
    /// Round-off of the second difference, about `eps |u| / step^2`, is added to the
    /// tolerance budget, so the returned value is compared against `tol` directly.
    pub fn consistency_defect(&self, samples: usize, step: f64, tol: f64, seed: u64) -> (f64, bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for _ in 0..samples {
            let mut x = [0.0; 2];
            for xi in x.iter_mut().take(self.dim) {
                *xi = rng.gen_range(0.05..0.95);
            }
            let t = rng.gen_range(0.05..0.95) * self.final_time;
            let u = |x: [f64; 2], t: f64| self.u(x, t);
            let dt = (u(x, t + step) - u(x, t - step)) / (2.0 * step);
            let mut lap = 0.0;
            for d in 0..self.dim {
                let mut xp = x;
                let mut xm = x;
                xp[d] += step;
                xm[d] -= step;
                lap += (u(xp, t) - 2.0 * u(x, t) + u(xm, t)) / (step * step);
            }
            let fd = dt - lap;
            let f = self.f(x, t);
            let scale = dt.abs() + lap.abs() + f.abs();
            let roundoff = 8.0 * f64::EPSILON * u(x, t).abs().max(1e-300) * self.dim as f64 / (step * step);
            let defect = (fd - f).abs();
            let rel = defect / scale.max(1e-300);
            worst = worst.max(rel);
            if defect > tol * scale + roundoff {
                ok = false;
            }
        }
        (worst, ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_decay_mode_has_zero_source() {
        let p = manufactured(ManufacturedKind::Fourier1d { k: 1, decay: PI * PI }, 1.0).unwrap();
        for &x in &[0.1, 0.4, 0.77] {
            assert!(p.f([x, 0.0], 0.3).abs() < 1e-13);
        }
    }

    #[test]
    fn stationary_mode_source() {
        let p = manufactured(ManufacturedKind::Fourier1d { k: 1, decay: 0.0 }, 1.0).unwrap();
        let x = [0.3, 0.0];
        assert!((p.f(x, 0.7) - PI * PI * (PI * 0.3).sin()).abs() < 1e-13);
        assert_eq!(p.u(x, 0.0), p.u(x, 0.9));
    }

    #[test]
    fn polynomial_source_by_hand() {
        let p = manufactured(ManufacturedKind::PolynomialInTime { dim: 1 }, 1.0).unwrap();
        let (x, t) = (0.25, 0.5);
        assert!((p.f([x, 0.0], t) - (x * (1.0 - x) + 2.0 * t)).abs() < 1e-15);
    }

    #[test]
    fn relaxation_is_consistent_and_starts_at_rest() {
        for dim in [1, 2] {
            let p = manufactured(ManufacturedKind::Relaxation { dim, k: 1, amplitude: 3.0 }, 0.2).unwrap();
            assert_eq!(p.u0([0.3, 0.6]), 0.0);
            let (_, ok) = p.consistency_defect(100, 1e-5, 1e-6, 11);
            assert!(ok);
        }
    }

    #[test]
    fn invalid_modes_rejected() {
        assert!(manufactured(ManufacturedKind::Fourier1d { k: 0, decay: 1.0 }, 1.0).is_err());
        assert!(manufactured(ManufacturedKind::Fourier2d { kx: 1, ky: 0, decay: 1.0 }, 1.0).is_err());
        assert!(manufactured(ManufacturedKind::PolynomialInTime { dim: 3 }, 1.0).is_err());
    }
}
