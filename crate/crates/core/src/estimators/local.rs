//! Jump and flux estimators, localized on (cell, interval) pairs.

use serde::Serialize;

use crate::discretization::QuadratureRule;
use crate::equilibration::EquilibratedFlux;
use crate::error::{Error, Result};
use crate::timestepping::TimeSlabSolution;

/// Squared estimator contributions indexed by interval, then cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Localized {
    pub values: Vec<Vec<f64>>,
}

impl Localized {
    pub fn zeros(n_intervals: usize, n_cells: usize) -> Self {
        Localized {
            values: vec![vec![0.0; n_cells]; n_intervals],
        }
    }

    pub fn n_intervals(&self) -> usize {
        self.values.len()
    }

    pub fn n_cells(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.values[n][k]
    }

    /// Sum of all entries, interval by interval.
    pub fn total_sq(&self) -> f64 {
        self.interval_sums().iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.total_sq().sqrt()
    }

    pub fn interval_sums(&self) -> Vec<f64> {
        self.values.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn scaled(&self, c: f64) -> Localized {
        Localized {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v * c).collect())
                .collect(),
        }
    }

    /// Entrywise sum; both tables must have the same shape.
    pub fn add(&self, other: &Localized) -> Result<Localized> {
        if self.n_intervals() != other.n_intervals() || self.n_cells() != other.n_cells() {
            return Err(Error::InvalidArgument("localized tables differ in shape".into()));
        }
        Ok(Localized {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        })
    }
}

/// `eta_J^2 = sum_n tau_n / 3 |grad(u_n - u_{n-1})|^2`, per cell and interval.
pub fn jump_estimator(sol: &TimeSlabSolution) -> Localized {
    let space = &sol.space;
    let mesh = &space.mesh;
    let rule = QuadratureRule::simplex(mesh.dim, 2 * space.degree);
    let mut out = Localized::zeros(sol.partition.n_intervals(), mesh.n_cells());
    for n in 0..sol.partition.n_intervals() {
        let tau = sol.partition.tau(n);
        let d = &sol.values[n + 1] - &sol.values[n];
        if d.amax() == 0.0 {
            continue;
        }
        for k in 0..mesh.n_cells() {
            let mut s = 0.0;
            for (_, lam, w) in space.cell_quadrature(k, &rule) {
                let g = space.gradient_in_cell(&d, k, &lam);
                s += w * (g[0] * g[0] + g[1] * g[1]);
            }
            out.values[n][k] = tau / 3.0 * s;
        }
    }
    out
}

/// Flux estimator moments and the three flux estimators.
///
/// With `a = sigma_n + grad u_{n-1}` and `b = sigma_n + grad u_n` on interval `n`,
/// `moments[n][k] = [|a|_K^2, (a, b)_K, |b|_K^2]`.
#[derive(Debug, Clone)]
pub struct FluxEstimators {
    pub moments: Vec<Vec<[f64; 3]>>,
    /// `int_{I_n} |sigma + grad U|_K^2`.
    pub flux: Localized,
    /// `int_{I_n} |sigma + grad u_tau|_K^2`.
    pub flux_prime: Localized,
    /// `int_{I_n} |sigma + grad ubar|_K^2`.
    pub flux_mean: Localized,
}

impl FluxEstimators {
    /// `|sigma + grad U(t)|_Omega^2` at relative position `theta` in interval `n`.
    pub fn flux_sq_at(&self, n: usize, theta: f64) -> f64 {
        let s = 1.0 - theta;
        self.moments[n]
            .iter()
            .map(|m| s * s * m[0] + 2.0 * s * theta * m[1] + theta * theta * m[2])
            .sum::<f64>()
            .max(0.0)
    }
}

pub fn flux_estimators(sol: &TimeSlabSolution, flux: &EquilibratedFlux) -> Result<FluxEstimators> {
    let space = &sol.space;
    let mesh = &space.mesh;
    if flux.rtn.mesh.cells != mesh.cells || flux.coefficients.len() != sol.partition.n_intervals() {
        return Err(Error::InvalidArgument("flux and solution live on different grids".into()));
    }
    let rule = QuadratureRule::simplex(mesh.dim, 2 * flux.degree() + 2);
    let nt = sol.partition.n_intervals();
    let mut moments = vec![vec![[0.0; 3]; mesh.n_cells()]; nt];
    let mut est = [
        Localized::zeros(nt, mesh.n_cells()),
        Localized::zeros(nt, mesh.n_cells()),
        Localized::zeros(nt, mesh.n_cells()),
    ];
    for n in 0..nt {
        let tau = sol.partition.tau(n);
        for k in 0..mesh.n_cells() {
            let mut m = [0.0; 3];
            for (x, lam, w) in space.cell_quadrature(k, &rule) {
                let (sigma, _) = flux.eval(n, k, x);
                let g0 = space.gradient_in_cell(&sol.values[n], k, &lam);
                let g1 = space.gradient_in_cell(&sol.values[n + 1], k, &lam);
                let a = [sigma[0] + g0[0], sigma[1] + g0[1]];
                let b = [sigma[0] + g1[0], sigma[1] + g1[1]];
                m[0] += w * (a[0] * a[0] + a[1] * a[1]);
                m[1] += w * (a[0] * b[0] + a[1] * b[1]);
                m[2] += w * (b[0] * b[0] + b[1] * b[1]);
            }
            moments[n][k] = m;
            est[0].values[n][k] = tau / 3.0 * (m[0] + m[1] + m[2]);
            est[1].values[n][k] = tau * m[2];
            // sigma + grad ubar runs from (a + b) / 2 to b.
            est[2].values[n][k] = tau / 3.0 * (0.25 * m[0] + m[1] + 1.75 * m[2]);
        }
    }
    let [flux_u, flux_prime, flux_mean] = est;
    Ok(FluxEstimators {
        moments,
        flux: flux_u,
        flux_prime,
        flux_mean,
    })
}

/// `eta_J` for the modal problem with eigenvalue `lambda`, from its node values.
pub fn modal_jump_estimator(lambda: f64, partition: &crate::timestepping::TimePartition, values: &[f64]) -> f64 {
    (0..partition.n_intervals())
        .map(|n| partition.tau(n) / 3.0 * lambda * (values[n + 1] - values[n]).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timestepping::{ModalProblem, TimePartition};

    #[test]
    fn modal_one_step_closed_form() {
        let p = TimePartition::uniform(1.0, 1).unwrap();
        for lambda in [1e-2, 1.0, 50.0] {
            let v = ModalProblem::new(lambda).unwrap().solve(&p).unwrap();
            let eta = modal_jump_estimator(lambda, &p, &v);
            let expect = (lambda / 3.0).sqrt() / (1.0 + lambda);
            assert!((eta - expect).abs() < 1e-14 * expect.max(1.0));
        }
    }
}
