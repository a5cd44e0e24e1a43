//! H1 stability constant of the L2 projection onto a coarse space.

use nalgebra::DVector;

use super::space::{FormKind, Prolongation, ScalarSpace};
use super::sparse::solve_with;
use crate::error::Result;

/// Estimate `C = sup_v |grad Pi_h v| / |grad v|` over `v` in the probe space, where
/// `Pi_h` is the L2 projection onto `space`.
///
/// The probe space must contain `space`. The square of the constant is the top
/// eigenvalue of `K v = mu A v` with `K = M P M_h^{-1} A_h M_h^{-1} P^T M`, found by
/// power iteration to relative tolerance `1e-8`.
pub fn estimate_h1_stability_constant(space: &ScalarSpace, probe: &ScalarSpace) -> Result<f64> {
    let p = Prolongation::new(space, probe)?;
    if p.is_identity() {
        return Ok(1.0);
    }
    let mh = space.assemble(FormKind::Mass);
    let ah = space.assemble(FormKind::Stiffness);
    let m = probe.assemble(FormKind::Mass);
    let a = probe.assemble(FormKind::Stiffness);
    let mh_f = mh.cholesky()?;
    let a_f = a.cholesky()?;
    let apply_k = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let r = p.apply_transpose(&m.mul_vec(v));
        let c = solve_with(&mh, &mh_f, &r)?;
        let r = ah.mul_vec(&c);
        let c = solve_with(&mh, &mh_f, &r)?;
        Ok(m.mul_vec(&p.apply(&c)))
    };
    let n = probe.dim();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7).sin());
    let mut mu = 0.0;
    for _ in 0..20_000 {
        let kv = apply_k(&v)?;
        let av = a.mul_vec(&v);
        let next_mu = v.dot(&kv) / v.dot(&av);
        let w = solve_with(&a, &a_f, &kv)?;
        let norm = a.inner(&w, &w).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if (next_mu - mu).abs() <= 1e-8 * next_mu.abs() {
            mu = next_mu;
            break;
        }
        mu = next_mu;
    }
    Ok(mu.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::mesh::interval_mesh;
    use std::sync::Arc;

    #[test]
    fn identity_when_probe_equals_space() {
        let s = ScalarSpace::new(Arc::new(interval_mesh(8, 0.0, 1.0).unwrap()), 1).unwrap();
        assert_eq!(estimate_h1_stability_constant(&s, &s).unwrap(), 1.0);
    }

    #[test]
    fn uniform_interval_constant_is_moderate() {
        let mesh = Arc::new(interval_mesh(8, 0.0, 1.0).unwrap());
        let s = ScalarSpace::new(mesh.clone(), 1).unwrap();
        let f = ScalarSpace::new(Arc::new(mesh.refine(2).unwrap()), 1).unwrap();
        let c = estimate_h1_stability_constant(&s, &f).unwrap();
        assert!((1.0..=2.0).contains(&c), "{c}");
    }
}
