//! Global equilibrated flux, piecewise constant in time.

use std::sync::Arc;

use nalgebra::DVector;

use super::patch::{Equilibrator, PatchSolution};
use super::rtn::RtnSpace;
use crate::error::{Error, Result};
use crate::timestepping::TimeSlabSolution;

/// `sigma` on each interval as a global RTN coefficient vector.
#[derive(Debug, Clone)]
pub struct EquilibratedFlux {
    pub rtn: Arc<RtnSpace>,
    pub coefficients: Vec<DVector<f64>>,
    /// `|sigma^{a,n} + psi_a grad u_n|^2_{omega_a}` by vertex, then interval.
    pub patch_objectives: Vec<Vec<f64>>,
    pub max_kkt_residual: f64,
    pub max_constraint_residual: f64,
}

impl EquilibratedFlux {
    pub fn degree(&self) -> usize {
        self.rtn.degree
    }

    /// Value and divergence of `sigma` on interval `n`, cell `k`, at `x`.
    pub fn eval(&self, n: usize, k: usize, x: [f64; 2]) -> ([f64; 2], f64) {
        self.rtn.eval(&self.coefficients[n], k, x)
    }
}

/// Solve every vertex patch and sum the local fluxes in vertex order.
///
/// Patches are distributed over `threads` workers; the result does not depend on
/// the thread count.
pub fn assemble_flux(sol: &TimeSlabSolution, degree: usize, threads: usize) -> Result<EquilibratedFlux> {
    if degree < sol.space.degree + 1 {
        return Err(Error::InvalidArgument(format!(
            "flux degree {degree} must exceed the space degree {}",
            sol.space.degree
        )));
    }
    let eq = Equilibrator::new(sol.space.mesh.clone(), degree)?;
    let nv = sol.space.mesh.n_vertices();
    let threads = threads.clamp(1, nv.max(1));
    let solutions: Vec<Result<PatchSolution>> = if threads == 1 {
        (0..nv).map(|a| eq.solve_vertex(sol, a)).collect()
    } else {
        let chunk = nv.div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let eq = &eq;
                    s.spawn(move || {
                        (t * chunk..((t + 1) * chunk).min(nv))
                            .map(|a| eq.solve_vertex(sol, a))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("patch worker panicked"))
                .collect()
        })
    };
    let nsteps = sol.partition.n_intervals();
    let rtn = eq.rtn.clone();
    let mut coefficients = vec![DVector::zeros(rtn.n_dofs); nsteps];
    let mut patch_objectives = Vec::with_capacity(nv);
    let mut kkt: f64 = 0.0;
    let mut constraint: f64 = 0.0;
    for ps in solutions {
        let ps = ps?;
        for (n, c) in ps.coefficients.iter().enumerate() {
            for (i, &g) in ps.dofs.iter().enumerate() {
                coefficients[n][g] += c[i];
            }
        }
        kkt = kkt.max(ps.kkt_residual);
        constraint = constraint.max(ps.constraint_residual);
        patch_objectives.push(ps.objective);
    }
    Ok(EquilibratedFlux {
        rtn,
        coefficients,
        patch_objectives,
        max_kkt_residual: kkt,
        max_constraint_residual: constraint,
    })
}

/// Largest `|f_{h,tau} - d_t U - div sigma|` over cells, intervals and quadrature
/// points, divided by `1 + max |f_{h,tau}|`.
pub fn equilibration_residual(flux: &EquilibratedFlux, sol: &TimeSlabSolution) -> Result<f64> {
    let data = sol
        .data
        .as_ref()
        .ok_or_else(|| Error::UnsupportedData("solution carries no cellwise data".into()))?;
    let space = &sol.space;
    let rule = crate::discretization::QuadratureRule::simplex(space.mesh.dim, 2 * flux.degree() + 2);
    let mut worst: f64 = 0.0;
    let mut fmax: f64 = 0.0;
    for n in 0..sol.partition.n_intervals() {
        let tau = sol.partition.tau(n);
        let du = &sol.values[n + 1] - &sol.values[n];
        for k in 0..space.mesh.n_cells() {
            for (x, lam, _) in space.cell_quadrature(k, &rule) {
                let f = data[n].eval_in_cell(k, &lam);
                let dt = space.eval_in_cell(&du, k, &lam) / tau;
                let (_, div) = flux.eval(n, k, x);
                worst = worst.max((f - dt - div).abs());
                fmax = fmax.max(f.abs());
            }
        }
    }
    Ok(worst / (1.0 + fmax))
}
