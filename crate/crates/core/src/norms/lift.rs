//! Riesz lifts of functionals into `H^1_0`-conforming lift spaces.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::discretization::sparse::solve_with;
use crate::discretization::{Cholesky, FormKind, Prolongation, ScalarSpace, SymmetricOperator};
use crate::error::{Error, Result};
use crate::timestepping::{SlabFunction, SpaceTimeFunction};

/// A lift space with its factored stiffness matrix.
///
/// Dual norms computed here take the supremum over the lift space only, so they
/// are lower bounds for the `H^{-1}` norm that tighten as the lift space grows.
#[derive(Debug, Clone)]
pub struct RieszLiftContext {
    pub trial: Arc<ScalarSpace>,
    pub space: Arc<ScalarSpace>,
    pub mass: SymmetricOperator,
    pub stiffness: SymmetricOperator,
    factor: Cholesky,
    prolongation: Prolongation,
    /// Spatial refinement factor of the lift mesh relative to the trial mesh.
    pub refinement: usize,
    /// Polynomial degree increase of the lift space relative to the trial space.
    pub degree_increase: usize,
}

impl RieszLiftContext {
    /// Lift space equal to the trial space.
    pub fn on_trial(trial: Arc<ScalarSpace>) -> Result<Self> {
        Self::new(trial.clone(), trial, 1, 0)
    }

    /// Lift space obtained by refining the trial mesh `refinement` times per
    /// direction and raising the degree by `degree_increase`.
    pub fn refined(trial: Arc<ScalarSpace>, refinement: usize, degree_increase: usize) -> Result<Self> {
        if refinement == 1 && degree_increase == 0 {
            return Self::on_trial(trial);
        }
        let mesh = Arc::new(trial.mesh.refine(refinement)?);
        let space = Arc::new(ScalarSpace::new(mesh, trial.degree + degree_increase)?);
        Self::new(trial, space, refinement, degree_increase)
    }

    pub fn new(
        trial: Arc<ScalarSpace>,
        space: Arc<ScalarSpace>,
        refinement: usize,
        degree_increase: usize,
    ) -> Result<Self> {
        let prolongation = Prolongation::new(&trial, &space)?;
        let mass = space.assemble(FormKind::Mass);
        let stiffness = space.assemble(FormKind::Stiffness);
        let factor = stiffness.cholesky()?;
        Ok(RieszLiftContext {
            trial,
            space,
            mass,
            stiffness,
            factor,
            prolongation,
            refinement,
            degree_increase,
        })
    }

    pub fn is_trial(&self) -> bool {
        self.prolongation.is_identity()
    }

    /// `w` with `(grad w, grad v) = l(v)` for all `v` in the lift space.
    pub fn riesz(&self, functional: &DVector<f64>) -> Result<DVector<f64>> {
        solve_with(&self.stiffness, &self.factor, functional)
    }

    /// Squared dual norm of a functional given by its values on the lift basis.
    pub fn dual_norm_sq(&self, functional: &DVector<f64>) -> Result<f64> {
        if functional.amax() == 0.0 {
            return Ok(0.0);
        }
        let w = self.riesz(functional)?;
        Ok(functional.dot(&w).max(0.0))
    }

    /// Inject a trial-space vector into the lift space.
    pub fn prolongate(&self, v: &DVector<f64>) -> DVector<f64> {
        self.prolongation.apply(v)
    }

    /// Inject a trial-space function into the lift space.
    pub fn lift_function(&self, v: &SpaceTimeFunction) -> Result<SlabFunction> {
        if v.nodes[0].len() != self.trial.dim() {
            return Err(Error::InvalidArgument("function does not live on the trial space".into()));
        }
        Ok(v.to_slab().prolongate(&self.prolongation))
    }
}

/// Local lifts on `H^1_0(omega_a)` for the vertex patches of the trial mesh.
#[derive(Debug, Clone)]
pub struct PatchLifts {
    /// Lift-space dof indices inside each patch, by trial vertex.
    pub dofs: Vec<Vec<usize>>,
    factors: Vec<Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>>,
}

impl PatchLifts {
    /// A lift dof belongs to patch `a` when the trial hat function of `a` is positive
    /// at its node, i.e. the node is interior to the patch.
    pub fn new(ctx: &RieszLiftContext) -> Result<Self> {
        let trial_mesh = &ctx.trial.mesh;
        let lift = &ctx.space;
        let mut dofs = vec![Vec::new(); trial_mesh.n_vertices()];
        for (fi, &d) in lift.free_dofs.iter().enumerate() {
            let x = lift.dof_points[d];
            let Some((k, _)) = trial_mesh.locate(x) else { continue };
            // Collect every trial vertex whose hat is positive at x.
            let mut cand: Vec<usize> = trial_mesh.cells[k].clone();
            for &v in &trial_mesh.cells[k] {
                for &c in &trial_mesh.vertex_cells[v] {
                    cand.extend(trial_mesh.cells[c].iter().copied());
                }
            }
            cand.sort_unstable();
            cand.dedup();
            for a in cand {
                let inside = trial_mesh.vertex_cells[a].iter().any(|&c| {
                    let lam = trial_mesh.barycentric(c, x);
                    lam.iter().all(|&l| l >= -1e-12)
                        && lam[trial_mesh.cells[c].iter().position(|&v| v == a).unwrap()] > 1e-12
                });
                if inside {
                    dofs[a].push(fi);
                }
            }
        }
        let dense_local = |idx: &[usize]| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(idx.len(), idx.len());
            for (i, &gi) in idx.iter().enumerate() {
                for (j, &gj) in idx.iter().enumerate() {
                    m[(i, j)] = ctx.stiffness.get(gi, gj);
                }
            }
            m
        };
        let mut factors = Vec::with_capacity(dofs.len());
        for idx in &dofs {
            if idx.is_empty() {
                factors.push(None);
                continue;
            }
            let f = dense_local(idx)
                .cholesky()
                .ok_or_else(|| Error::SingularOperator("patch stiffness not positive definite".into()))?;
            factors.push(Some(f));
        }
        Ok(PatchLifts { dofs, factors })
    }

    /// Squared `H^{-1}(omega_a)` norm of a functional given on the lift basis.
    pub fn dual_norm_sq(&self, a: usize, functional: &DVector<f64>) -> f64 {
        let Some(f) = &self.factors[a] else { return 0.0 };
        let idx = &self.dofs[a];
        let l = DVector::from_iterator(idx.len(), idx.iter().map(|&i| functional[i]));
        l.dot(&f.solve(&l)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::interval_mesh;

    #[test]
    fn constant_load_dual_norm_in_1d() {
        // The Riesz representative of 1 is x(1-x)/2, reproduced exactly by P2,
        // so the dual norm is sqrt(1/12).
        let s = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 2).unwrap());
        let ctx = RieszLiftContext::on_trial(s.clone()).unwrap();
        let l = s.load_vector(&|_| 1.0, 4);
        assert!((ctx.dual_norm_sq(&l).unwrap() - 1.0 / 12.0).abs() < 1e-13);
    }

    #[test]
    fn dual_norm_grows_with_lift_space() {
        let s = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 1).unwrap());
        let coarse = RieszLiftContext::on_trial(s.clone()).unwrap();
        let fine = RieszLiftContext::refined(s.clone(), 2, 1).unwrap();
        let f = |x: [f64; 2]| (7.0 * x[0]).sin();
        let nc = coarse.dual_norm_sq(&s.load_vector(&f, 10)).unwrap();
        let nf = fine.dual_norm_sq(&fine.space.load_vector(&f, 10)).unwrap();
        assert!(nf >= nc);
    }

    #[test]
    fn patch_dofs_in_1d() {
        let s = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 1).unwrap());
        let ctx = RieszLiftContext::refined(s, 2, 0).unwrap();
        let p = PatchLifts::new(&ctx).unwrap();
        // Interior vertex 2 at x = 0.5: fine nodes 0.375, 0.5, 0.625 lie strictly inside.
        assert_eq!(p.dofs[2].len(), 3);
        // Boundary vertex 0: fine node 0.125 only.
        assert_eq!(p.dofs[0].len(), 1);
    }
}
