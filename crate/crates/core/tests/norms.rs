use std::sync::Arc;

use nalgebra::DVector;
use parest::discretization::{interval_mesh, structured_triangle_mesh, ScalarSpace};
use parest::norms::{
    backward_representer, infsup_identity_residual, residual_dual_norm_sq, spacetime_norm, ys_identity_residual,
    NormKind, RieszLiftContext,
};
use parest::timestepping::{reconstruct, Forcing, HeatDiscretization, SpaceTimeFunction, TimePartition, TimeProfile};
use parest::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_function(space: &ScalarSpace, p: &TimePartition, rng: &mut ChaCha8Rng) -> SpaceTimeFunction {
    let nodes = (0..=p.n_intervals())
        .map(|_| DVector::from_fn(space.dim(), |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    SpaceTimeFunction::new(TimeProfile::ContinuousAffine, p.clone(), nodes).unwrap()
}

#[test]
fn discrete_identities_hold_on_random_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = Arc::new(ScalarSpace::new(Arc::new(structured_triangle_mesh(3, 3, [0.0, 1.0, 0.0, 1.0]).unwrap()), 2).unwrap());
    let trial_ctx = RieszLiftContext::on_trial(space.clone()).unwrap();
    let fine_ctx = RieszLiftContext::refined(space.clone(), 2, 0).unwrap();
    let p = TimePartition::graded(0.7, 5, 1.5).unwrap();
    for _ in 0..5 {
        let v = random_function(&space, &p, &mut rng);
        for ctx in [&trial_ctx, &fine_ctx] {
            assert!(ys_identity_residual(&v, ctx).unwrap() < 1e-10);
            assert!(infsup_identity_residual(&v, ctx).unwrap() < 1e-10);
        }
    }
}

#[test]
fn y_norms_reject_discontinuous_profiles() {
    let space = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(4, 0.0, 1.0).unwrap()), 1).unwrap());
    let ctx = RieszLiftContext::on_trial(space.clone()).unwrap();
    let p = TimePartition::uniform(1.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut v = random_function(&space, &p, &mut rng);
    v.profile = TimeProfile::ConstantLeftContinuous;
    assert!(matches!(spacetime_norm(&v, NormKind::Y, &ctx), Err(Error::ProfileMismatch(_))));
    assert!(spacetime_norm(&v, NormKind::X, &ctx).is_ok());
}

#[test]
fn residual_on_trial_space_equals_jump_estimator() {
    // On the trial space the residual of U reduces to A (u_n - U(t)), whose squared
    // dual norm integrates to tau_n / 3 |grad (u_n - u_{n-1})|^2.
    let space = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(6, 0.0, 1.0).unwrap()), 2).unwrap());
    let d = HeatDiscretization::new(space.clone());
    let p = TimePartition::uniform(0.5, 4).unwrap();
    let f = Forcing::analytic(|x, t| (3.0 * x[0]).sin() * (1.0 + t));
    let u0 = d.initial_value(&|x| x[0] * (1.0 - x[0]), Default::default()).unwrap();
    let sol = d.run_with_forcing(&p, &f, u0).unwrap();
    let ctx = RieszLiftContext::on_trial(space.clone()).unwrap();
    let data = Forcing::PiecewiseConstant {
        partition: p.clone(),
        fields: Arc::new(sol.data.clone().unwrap()),
    };
    let big_u = reconstruct(&sol, TimeProfile::ContinuousAffine);
    let r = residual_dual_norm_sq(&big_u, &data, &ctx).unwrap();
    for n in 0..p.n_intervals() {
        let du = &sol.values[n + 1] - &sol.values[n];
        let eta = p.tau(n) / 3.0 * d.stiffness.inner(&du, &du);
        assert!((r[n] - eta).abs() <= 1e-10 * eta);
    }
}

#[test]
fn backward_representer_is_a_sharp_lower_bound() {
    let space = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(32, 0.0, 1.0).unwrap()), 1).unwrap());
    let ctx = RieszLiftContext::on_trial(space.clone()).unwrap();
    let p = TimePartition::uniform(1.0, 64).unwrap();
    let nodes = p
        .nodes()
        .iter()
        .map(|&t| space.interpolate(&|x| (std::f64::consts::PI * x[0]).sin() * (1.0 + t)))
        .collect();
    let v = SpaceTimeFunction::new(TimeProfile::ContinuousAffine, p, nodes).unwrap();
    let (_, ratio) = backward_representer(&v, &ctx).unwrap();
    let x = spacetime_norm(&v, NormKind::X, &ctx).unwrap();
    assert!(ratio / x <= 1.0 + 1e-12 && ratio / x >= 0.9, "{}", ratio / x);
}
