use std::sync::Arc;

use parest::discretization::{interval_mesh, structured_triangle_mesh, ScalarSpace, SimplicialMesh};
use parest::equilibration::{assemble_flux, equilibration_residual};
use parest::timestepping::{Forcing, HeatDiscretization, TimePartition, TimeSlabSolution};

fn solve(mesh: SimplicialMesh, p: usize) -> TimeSlabSolution {
    let space = Arc::new(ScalarSpace::new(Arc::new(mesh), p).unwrap());
    let d = HeatDiscretization::new(space);
    let part = TimePartition::uniform(0.5, 8).unwrap();
    let f = Forcing::analytic(|x, t| (1.0 + t) * (3.0 * x[0] + 1.0).sin() * (2.0 * x[1] + 0.5).cos() + 1.0);
    let u0 = d.initial_value(&|x| x[0] * (1.0 - x[0]) * (1.0 + x[1]), Default::default()).unwrap();
    d.run_with_forcing(&part, &f, u0).unwrap()
}

#[test]
fn equilibration_identity_holds() {
    for p in 1..=2 {
        for mesh in [
            interval_mesh(16, 0.0, 1.0).unwrap(),
            structured_triangle_mesh(8, 8, [0.0, 1.0, 0.0, 1.0]).unwrap(),
        ] {
            let sol = solve(mesh, p);
            let flux = assemble_flux(&sol, p + 1, 1).unwrap();
            let r = equilibration_residual(&flux, &sol).unwrap();
            assert!(r <= 1e-9, "p={p} residual {r:e}");
            assert!(flux.rtn.max_normal_jump(&flux.coefficients[3]) < 1e-10);
        }
    }
}
