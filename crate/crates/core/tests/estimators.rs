use std::sync::Arc;

use proptest::prelude::*;

use parest::discretization::{interval_mesh, structured_triangle_mesh, FormKind, ScalarSpace, SimplicialMesh};
use parest::equilibration::assemble_flux;
use parest::estimators::bounds::discrete_data;
use parest::estimators::{
    constant_drift, estimator_report, flux_estimators, inefficiency_study, jump_estimator, modal_jump_estimator,
    report_with_bounds, Relation, Theorem,
};
use parest::norms::RieszLiftContext;
use parest::timestepping::{Forcing, HeatDiscretization, ModalProblem, TimePartition, TimeSlabSolution};
use parest::verification::{reference_solve, ReferenceOptions, ReferenceSource};

fn solve(mesh: SimplicialMesh, p: usize, steps: usize, a: f64, b: f64) -> TimeSlabSolution {
    let space = Arc::new(ScalarSpace::new(Arc::new(mesh), p).unwrap());
    let d = HeatDiscretization::new(space);
    let part = TimePartition::uniform(0.5, steps).unwrap();
    let f = Forcing::analytic(move |x, t| (1.0 + a * t) * (3.0 * x[0] + b).sin() * 4.0 + x[1]);
    let u0 = d.initial_value(&|x| x[0] * (1.0 - x[0]) * (1.0 + b * x[1]), Default::default()).unwrap();
    d.run_with_forcing(&part, &f, u0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jump_estimator_matches_stiffness_form(a in -2.0..4.0f64, b in 0.0..2.0f64, steps in 2usize..7) {
        let sol = solve(structured_triangle_mesh(4, 4, [0.0, 1.0, 0.0, 1.0]).unwrap(), 1, steps, a, b);
        let j = jump_estimator(&sol);
        let stiff = sol.space.assemble(FormKind::Stiffness);
        for n in 0..steps {
            prop_assert!(j.values[n].iter().all(|v| *v >= 0.0));
            let d = &sol.values[n + 1] - &sol.values[n];
            let expect = sol.partition.tau(n) / 3.0 * stiff.inner(&d, &d);
            let got = j.interval_sums()[n];
            prop_assert!((got - expect).abs() <= 1e-12 * expect.max(1e-300), "{} {}", got, expect);
        }
    }

    #[test]
    fn mean_flux_obeys_triangle_inequality(a in -2.0..4.0f64, b in 0.0..2.0f64) {
        let sol = solve(interval_mesh(6, 0.0, 1.0).unwrap(), 2, 3, a, b);
        let flux = assemble_flux(&sol, 3, 1).unwrap();
        let fe = flux_estimators(&sol, &flux).unwrap();
        for n in 0..3 {
            for k in 0..6 {
                let lhs = fe.flux_mean.get(n, k).sqrt();
                let rhs = 0.5 * (fe.flux.get(n, k).sqrt() + fe.flux_prime.get(n, k).sqrt());
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
            }
        }
        // The quadratic-in-time moments integrate back to the totals.
        let tau = sol.partition.tau(1);
        let w = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        let x = [0.5 - 0.5 * 0.6f64.sqrt(), 0.5, 0.5 + 0.5 * 0.6f64.sqrt()];
        let gauss: f64 = (0..3).map(|i| w[i] * tau * fe.flux_sq_at(1, x[i])).sum();
        let total = fe.flux.interval_sums()[1];
        prop_assert!((gauss - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn modal_jump_estimator_closed_form(log_lambda in -4.0..4.0f64) {
        let lambda = 10f64.powf(log_lambda);
        let p = TimePartition::uniform(1.0, 1).unwrap();
        let v = ModalProblem::new(lambda).unwrap().solve(&p).unwrap();
        let eta = modal_jump_estimator(lambda, &p, &v);
        let closed = (lambda / 3.0).sqrt() / (1.0 + lambda);
        prop_assert!((eta - closed).abs() <= 1e-13 * closed);
    }

    #[test]
    fn drift_is_scale_invariant(c in prop::collection::vec(0.1..10.0f64, 1..6), s in 0.01..100.0f64) {
        let scaled: Vec<f64> = c.iter().map(|x| x * s).collect();
        let (d0, d1) = (constant_drift(&c), constant_drift(&scaled));
        prop_assert!(d0 >= 1.0);
        prop_assert!((d0 - d1).abs() <= 1e-12 * d0);
    }
}

#[test]
fn drift_flags_nonpositive_constants() {
    assert_eq!(constant_drift(&[0.5, 1.0]), 2.0);
    assert!(constant_drift(&[0.5, 0.0]).is_infinite());
    assert!(constant_drift(&[0.5, f64::NAN]).is_infinite());
}

#[test]
fn oscillations_vanish_for_discrete_data() {
    let sol = solve(interval_mesh(8, 0.0, 1.0).unwrap(), 1, 4, 1.0, 0.3);
    let data = discrete_data(&sol).unwrap();
    let ctx = RieszLiftContext::refined(sol.space.clone(), 2, 0).unwrap();
    let r = estimator_report(&sol, None, &data, None, &ctx).unwrap();
    assert_eq!(r.osc_y.value, 0.0);
    assert_eq!(r.osc_patch.value, 0.0);
    assert!(r.totals.eta_j > 0.0);
    assert!(r.totals.eta_f.is_none());
    assert!(r.localization_defect(&sol) <= 1e-12);
}

#[test]
fn oscillations_are_positive_for_rough_data() {
    let sol = solve(interval_mesh(8, 0.0, 1.0).unwrap(), 1, 4, 1.0, 0.3);
    let f = Forcing::analytic(|x, t| (20.0 * x[0] + 7.0 * t).sin());
    let ctx = RieszLiftContext::refined(sol.space.clone(), 2, 0).unwrap();
    let r = estimator_report(&sol, None, &f, None, &ctx).unwrap();
    assert!(r.osc_y.value > 0.0 && r.osc_patch.value > 0.0);
    let by_cell = r.osc_by_cell(&sol);
    let rel = (by_cell.total_sq() - r.osc_patch.value.powi(2)).abs() / r.osc_patch.value.powi(2);
    assert!(rel <= 1e-12);
}

#[test]
fn guaranteed_bounds_hold_for_discrete_data() {
    let sol = solve(structured_triangle_mesh(4, 4, [0.0, 1.0, 0.0, 1.0]).unwrap(), 1, 4, 2.0, 0.5);
    let flux = assemble_flux(&sol, 2, 1).unwrap();
    let src = ReferenceSource::Discrete {
        forcing: discrete_data(&sol).unwrap(),
        initial: &sol.values[0],
    };
    let r = reference_solve(&src, &sol.space, &sol.partition, 4, 4, ReferenceOptions::default()).unwrap();
    let report = report_with_bounds(&sol, Some(&flux), &r, &Theorem::ALL).unwrap();
    assert_eq!(report.bounds.len(), Theorem::ALL.len());
    for b in &report.bounds {
        for q in &b.inequalities {
            if q.relation == Relation::Upper && [Theorem::FluxYUpper, Theorem::ExtendedY, Theorem::FluxEnergy].contains(&b.theorem) {
                assert_eq!(q.holds(), Some(true), "{} {}: {} > {}", b.theorem.name(), q.label, q.lhs, q.rhs);
            }
        }
        if let Some(c) = b.max_local_constant {
            assert!(c.is_finite() && c > 0.0, "{}", b.theorem.name());
        }
    }
    // With data equal to their projections the oscillations vanish.
    assert_eq!(report.osc_y.value, 0.0);
}

#[test]
fn bounds_need_a_finer_reference() {
    let sol = solve(interval_mesh(4, 0.0, 1.0).unwrap(), 1, 2, 0.0, 0.0);
    let src = ReferenceSource::Discrete {
        forcing: discrete_data(&sol).unwrap(),
        initial: &sol.values[0],
    };
    let r = reference_solve(&src, &sol.space, &sol.partition, 2, 2, ReferenceOptions::default()).unwrap();
    assert!(report_with_bounds(&sol, None, &r, &[Theorem::Hypercircle]).is_err());
}

#[test]
fn inefficiency_table_is_sorted_and_consistent() {
    let t = inefficiency_study(&[10.0, 0.1, 1.0]).unwrap();
    let l: Vec<f64> = t.rows.iter().map(|r| r.lambda).collect();
    assert_eq!(l, [0.1, 1.0, 10.0]);
    let r = t.row(1.0).unwrap();
    assert!((r.error_ut - r.l2_error_ut).abs() < 1e-15);
    assert!(t.ratio_strictly_decreasing());
}
