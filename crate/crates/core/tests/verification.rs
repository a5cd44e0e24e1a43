use std::sync::Arc;

use proptest::prelude::*;

use parest::discretization::{interval_mesh, ScalarSpace};
use parest::estimators::BoundEvaluator;
use parest::norms::{NormKind, RieszLiftContext};
use parest::timestepping::{reconstruct, HeatDiscretization, TimePartition, TimeProfile, TimeSlabSolution};
use parest::verification::{
    exact_error, manufactured, observed_orders, reference_solve, ManufacturedKind, ManufacturedProblem,
    ReferenceOptions, ReferenceSource,
};

fn run(problem: &ManufacturedProblem, cells: usize, steps: usize, p: usize) -> TimeSlabSolution {
    let space = Arc::new(ScalarSpace::new(Arc::new(interval_mesh(cells, 0.0, 1.0).unwrap()), p).unwrap());
    let d = HeatDiscretization::new(space);
    let part = TimePartition::uniform(problem.final_time, steps).unwrap();
    let u0 = d.initial_value(&|x| problem.u0(x), Default::default()).unwrap();
    d.run_with_forcing(&part, &problem.forcing(), u0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn manufactured_problems_solve_the_heat_equation(
        k in 1u32..4,
        decay in 0.0..30.0f64,
        dim in 1usize..3,
        which in 0usize..3,
        seed in any::<u64>(),
    ) {
        let kind = match (which, dim) {
            (0, 1) => ManufacturedKind::Fourier1d { k, decay },
            (0, _) => ManufacturedKind::Fourier2d { kx: k, ky: k + 1, decay },
            (1, _) => ManufacturedKind::PolynomialInTime { dim },
            _ => ManufacturedKind::Relaxation { dim, k, amplitude: 1.0 + decay },
        };
        let problem = manufactured(kind, 0.5).unwrap();
        let (defect, ok) = problem.consistency_defect(20, 1e-4, 1e-5, seed);
        prop_assert!(ok, "{:?}: {:e}", kind, defect);
    }

    #[test]
    fn observed_orders_recover_power_laws(q in 0.5..4.0f64, c in 0.01..100.0f64, h0 in 0.05..1.0f64) {
        let h: Vec<f64> = (0..4).map(|i| h0 / 2f64.powi(i)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(q)).collect();
        for o in observed_orders(&h, &e) {
            prop_assert!((o - q).abs() < 1e-9);
        }
    }
}

#[test]
fn reference_and_exact_errors_agree() {
    let problem = manufactured(ManufacturedKind::Fourier1d { k: 1, decay: std::f64::consts::PI.powi(2) }, 0.2).unwrap();
    let sol = run(&problem, 8, 4, 2);
    let r = reference_solve(
        &ReferenceSource::Manufactured(&problem),
        &sol.space,
        &sol.partition,
        4,
        4,
        ReferenceOptions {
            richardson: true,
            ..Default::default()
        },
    )
    .unwrap();
    let ev = BoundEvaluator::new(&sol, None, &r).unwrap();
    let ctx = RieszLiftContext::refined(sol.space.clone(), 4, 0).unwrap();
    let uu = reconstruct(&sol, TimeProfile::ContinuousAffine);
    let ut = reconstruct(&sol, TimeProfile::ConstantLeftContinuous);
    let x_uu = exact_error(&problem, &uu, NormKind::X, &ctx).unwrap();
    let x_ut = exact_error(&problem, &ut, NormKind::X, &ctx).unwrap();
    for (name, reference, exact) in [("X(U)", ev.error_x_uu(), x_uu), ("X(u_tau)", ev.error_x_ut(), x_ut)] {
        let gap = (reference - exact).abs() / exact;
        assert!(gap < 0.05, "{name}: reference {reference:e} exact {exact:e}");
    }
}

#[test]
fn reference_is_finer_than_requested() {
    let problem = manufactured(ManufacturedKind::PolynomialInTime { dim: 1 }, 0.5).unwrap();
    let sol = run(&problem, 4, 2, 1);
    let src = ReferenceSource::Manufactured(&problem);
    let opts = ReferenceOptions {
        richardson: true,
        ..Default::default()
    };
    let r = reference_solve(&src, &sol.space, &sol.partition, 4, 4, opts).unwrap();
    assert!(r.is_finer_than(&sol.space, &sol.partition, 4));
    assert!(!r.is_finer_than(&sol.space, &sol.partition, 8));
    assert!(reference_solve(&src, &sol.space, &sol.partition, 1, 4, opts).is_err());
    assert!(reference_solve(&src, &sol.space, &sol.partition, 4, 3, opts).is_err());
}

#[test]
fn errors_decrease_under_refinement() {
    let problem = manufactured(ManufacturedKind::Fourier1d { k: 2, decay: 1.0 }, 0.5).unwrap();
    let mut prev = f64::INFINITY;
    for level in 0..3 {
        let sol = run(&problem, 8 << level, 4 << level, 1);
        let ctx = RieszLiftContext::refined(sol.space.clone(), 2, 0).unwrap();
        let e = exact_error(&problem, &reconstruct(&sol, TimeProfile::Average), NormKind::Energy, &ctx).unwrap();
        assert!(e < prev);
        prev = e;
    }
}
