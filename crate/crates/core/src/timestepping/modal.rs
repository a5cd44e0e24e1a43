//! Scalar model problem `u' + lambda u = 1`, `u(0) = 0`.
//!
//! This is the heat equation restricted to one eigenfunction with eigenvalue
//! `lambda` of the negative Laplacian, normalized in `L2`. The `X` norm of
//! `c(t) phi` is then `sqrt(lambda) |c|_{L2(0,T)}`.

use nalgebra::DVector;

use super::partition::TimePartition;
use super::solver::implicit_euler;
use crate::discretization::quadrature::graded_gauss_on_interval;
use crate::discretization::SymmetricOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ModalProblem {
    pub lambda: f64,
}

impl ModalProblem {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("eigenvalue {lambda} must be positive")));
        }
        Ok(ModalProblem { lambda })
    }

    /// `u(t) = (1 - exp(-lambda t)) / lambda`.
    pub fn exact(&self, t: f64) -> f64 {
        -(-self.lambda * t).exp_m1() / self.lambda
    }

    /// Implicit Euler node values, through the same solver as the PDE.
    pub fn solve(&self, partition: &TimePartition) -> Result<Vec<f64>> {
        let m = SymmetricOperator::identity(1);
        let a = SymmetricOperator::from_triplets(1, vec![(0, 0, self.lambda)]);
        let loads = vec![DVector::from_element(1, 1.0); partition.n_intervals()];
        let (v, _) = implicit_euler(&m, &a, partition, &loads, DVector::zeros(1))?;
        Ok(v.iter().map(|x| x[0]).collect())
    }

    /// `int_0^T g(t)^2 dt` for `g = u - approximation`, resolving the initial layer
    /// of every interval.
    pub fn l2_time_error(&self, partition: &TimePartition, approx: &dyn Fn(usize, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for n in 0..partition.n_intervals() {
            let (a, b) = partition.interval(n);
            for (t, w) in graded_gauss_on_interval(a, b, 60, 12) {
                let e = self.exact(t) - approx(n, t);
                s += w * e * e;
            }
        }
        s
    }

    /// Energy-norm squared `lambda |e|^2_{L2(0,T)} + |e(T)|^2 / 2`.
    pub fn energy_error_sq(&self, partition: &TimePartition, approx: &dyn Fn(usize, f64) -> f64) -> f64 {
        let n = partition.n_intervals();
        let t = partition.final_time();
        let e_t = self.exact(t) - approx(n - 1, t);
        self.lambda * self.l2_time_error(partition, approx) + 0.5 * e_t * e_t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_value() {
        let p = TimePartition::uniform(1.0, 1).unwrap();
        for lambda in [1e-3, 1.0, 1e3] {
            let v = ModalProblem::new(lambda).unwrap().solve(&p).unwrap();
            assert!((v[1] - 1.0 / (1.0 + lambda)).abs() < 1e-15);
        }
    }

    #[test]
    fn l2_error_matches_closed_form() {
        // |u - c|^2 on (0, 1) expanded with the exact moments of u.
        let lambda: f64 = 10.0;
        let m = ModalProblem::new(lambda).unwrap();
        let p = TimePartition::uniform(1.0, 1).unwrap();
        let c = 1.0 / (1.0 + lambda);
        let e1 = (-lambda).exp();
        let int_u = (1.0 - (1.0 - e1) / lambda) / lambda;
        let int_u2 = (1.0 - 2.0 * (1.0 - e1) / lambda + (1.0 - e1 * e1) / (2.0 * lambda)) / (lambda * lambda);
        let exact = int_u2 - 2.0 * c * int_u + c * c;
        let q = m.l2_time_error(&p, &|_, _| c);
        assert!((q - exact).abs() < 1e-14);
    }
}
