//! Implicit Euler time stepping.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;

use super::forcing::{time_mean_rhs, Forcing};
use super::partition::TimePartition;
use crate::discretization::sparse::{relative_residual, solve_with};
use crate::discretization::{CellField, FormKind, ScalarSpace, SymmetricOperator};
use crate::error::{Error, Result};

/// How the discrete initial value is obtained from `u_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialApproximation {
    #[default]
    L2Projection,
    Interpolation,
}

/// Node values `u_0, ..., u_N` of the implicit Euler scheme together with its data.
#[derive(Debug, Clone)]
pub struct TimeSlabSolution {
    pub space: Arc<ScalarSpace>,
    pub partition: TimePartition,
    pub values: Vec<DVector<f64>>,
    /// `b_n` for intervals `n = 0..N`.
    pub loads: Vec<DVector<f64>>,
    /// Cellwise data `f_{h,tau,n}` when the loads came from projected data.
    pub data: Option<Vec<CellField>>,
    pub max_step_residual: f64,
}

/// Space with its mass and stiffness matrices.
#[derive(Debug, Clone)]
pub struct HeatDiscretization {
    pub space: Arc<ScalarSpace>,
    pub mass: SymmetricOperator,
    pub stiffness: SymmetricOperator,
}

impl HeatDiscretization {
    pub fn new(space: Arc<ScalarSpace>) -> Self {
        let mass = space.assemble(FormKind::Mass);
        let stiffness = space.assemble(FormKind::Stiffness);
        HeatDiscretization {
            space,
            mass,
            stiffness,
        }
    }

    /// Discrete initial value.
    pub fn initial_value(
        &self,
        u0: &dyn Fn([f64; 2]) -> f64,
        mode: InitialApproximation,
    ) -> Result<DVector<f64>> {
        match mode {
            InitialApproximation::Interpolation => Ok(self.space.interpolate(u0)),
            InitialApproximation::L2Projection => self
                .space
                .l2_project(u0, super::forcing::data_quadrature_degree(self.space.degree)),
        }
    }

    /// Run the scheme with given loads.
    pub fn run(
        &self,
        partition: &TimePartition,
        loads: Vec<DVector<f64>>,
        u0: DVector<f64>,
    ) -> Result<TimeSlabSolution> {
        let (values, res) = implicit_euler(&self.mass, &self.stiffness, partition, &loads, u0)?;
        Ok(TimeSlabSolution {
            space: self.space.clone(),
            partition: partition.clone(),
            values,
            loads,
            data: None,
            max_step_residual: res,
        })
    }

    /// Run with loads from the temporal means of `forcing`, projected cellwise.
    pub fn run_with_forcing(
        &self,
        partition: &TimePartition,
        forcing: &Forcing,
        u0: DVector<f64>,
    ) -> Result<TimeSlabSolution> {
        let (loads, fields) = time_mean_rhs(&self.space, partition, forcing)?;
        let mut sol = self.run(partition, loads, u0)?;
        sol.data = Some(fields);
        Ok(sol)
    }
}

/// Solve `(M / tau_n + A) u_n = M u_{n-1} / tau_n + b_n` for `n = 1..N`.
///
/// Returns the node values and the largest relative step residual.
pub fn implicit_euler(
    mass: &SymmetricOperator,
    stiffness: &SymmetricOperator,
    partition: &TimePartition,
    loads: &[DVector<f64>],
    u0: DVector<f64>,
) -> Result<(Vec<DVector<f64>>, f64)> {
    let n_steps = partition.n_intervals();
    if loads.len() != n_steps {
        return Err(Error::InvalidArgument(format!(
            "{} load vectors for {} intervals",
            loads.len(),
            n_steps
        )));
    }
    if u0.len() != mass.n {
        return Err(Error::InvalidArgument("initial value has wrong length".into()));
    }
    let mut cache: HashMap<u64, (SymmetricOperator, crate::discretization::Cholesky)> = HashMap::new();
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(u0);
    let mut worst: f64 = 0.0;
    for n in 0..n_steps {
        let tau = partition.tau(n);
        if !cache.contains_key(&tau.to_bits()) {
            let k = mass.linear_combination(1.0 / tau, stiffness, 1.0);
            let f = k.cholesky()?;
            cache.insert(tau.to_bits(), (k, f));
        }
        let (k, f) = &cache[&tau.to_bits()];
        let rhs = mass.mul_vec(&values[n]) / tau + &loads[n];
        let u = solve_with(k, f, &rhs)?;
        worst = worst.max(relative_residual(k, &u, &rhs));
        values.push(u);
    }
    Ok((values, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::interval_mesh;

    #[test]
    fn steady_state_is_preserved() {
        // u = x(1-x) with f = 2 is a steady state reproduced exactly by P2.
        let space = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 2).unwrap());
        let d = HeatDiscretization::new(space.clone());
        let p = TimePartition::uniform(1.0, 5).unwrap();
        let u0 = d.initial_value(&|x| x[0] * (1.0 - x[0]), InitialApproximation::Interpolation).unwrap();
        let sol = d.run_with_forcing(&p, &Forcing::analytic(|_, _| 2.0), u0.clone()).unwrap();
        for v in &sol.values {
            assert!((v - &u0).amax() < 1e-12);
        }
        assert!(sol.max_step_residual <= 1e-12);
    }

    #[test]
    fn wrong_load_count_is_rejected() {
        let space = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 1).unwrap());
        let d = HeatDiscretization::new(space.clone());
        let p = TimePartition::uniform(1.0, 5).unwrap();
        assert!(d.run(&p, vec![], DVector::zeros(3)).is_err());
    }
}
