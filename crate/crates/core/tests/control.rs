use lattice_obs::control::{
    adjoint_solve, apply_control, functional_f, minimize_f, random_mixed_datum, ControlProblem,
    MinimizeOptions,
};
use lattice_obs::{Error, GridFunction, GridSpec, LatticeVector};
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::with_resolution(1, 10, 20).unwrap()
}

fn problem(seed: u64, eps: f64) -> ControlProblem {
    let y0 = random_mixed_datum(grid(), seed);
    ControlProblem::new(
        y0,
        1.0,
        0.5,
        eps,
        ControlProblem::default_window(&grid()).unwrap(),
    )
    .unwrap()
}

fn bump(c: f64, s: f64, a: f64) -> GridFunction {
    GridFunction::from_fn(grid(), |x| a * (-(x[0] - c).powi(2) / (4.0 * s)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sample_operator_adjoint(c1 in -5.0f64..5.0, c2 in -5.0f64..5.0, s in 0.05f64..1.0) {
        let p = problem(0, 1e-2);
        let (phi, psi) = (bump(c1, s, 1.0), bump(c2, 1.0 - s / 2.0, 0.5));
        let lhs = p.sample_adjoint(&p.sample_operator(&phi).unwrap()).unwrap().inner(&psi).unwrap();
        let rhs = p.sample_operator(&phi).unwrap().dot(&p.sample_operator(&psi).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn minimizer_beats_feasible_points(seed in 0u64..1000, c in -4.0f64..4.0, s in 0.05f64..1.0, a in 0.0f64..3.0) {
        let p = problem(seed, 1e-2);
        let r = minimize_f(&p, &MinimizeOptions::default()).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.objective <= 0.0 + 1e-12);
        prop_assert!(r.objective <= functional_f(&p, &bump(c, s, a)).unwrap() + 1e-9);
        prop_assert!(r.phi_t_hat.min() >= 0.0);
        prop_assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn final_state_is_free_flow_plus_kicks() {
    let y0 = bump(0.3, 0.4, 1.0)
        .axpy(-1.5, &bump(-0.5, 0.2, 1.0))
        .unwrap();
    let p = ControlProblem::new(
        y0,
        1.0,
        0.5,
        1e-3,
        ControlProblem::default_window(&grid()).unwrap(),
    )
    .unwrap();
    let window = *p.window();
    let mut c = vec![0.0; window.len()];
    c[3] = 0.7;
    c[10] = -0.2;
    let v = LatticeVector::new(window, c).unwrap();
    let y = apply_control(&p, &v).unwrap();
    // kick at tau, then free flow: P_{T - tau}(P_tau y0 + sum v_n delta_n)
    let at_tau = adjoint_solve(p.y0(), 1.0, 0.5).unwrap();
    let composed = adjoint_solve(&at_tau, 1.0, 0.5)
        .unwrap()
        .axpy(1.0, &p.sample_adjoint(&v).unwrap())
        .unwrap();
    assert!(y.sup_distance(&composed).unwrap() < 1e-10);
}

#[test]
fn smaller_penalty_lowers_the_objective() {
    let a = minimize_f(&problem(9, 1e-1), &MinimizeOptions::default()).unwrap();
    let b = minimize_f(&problem(9, 1e-2), &MinimizeOptions::default()).unwrap();
    assert!(b.objective <= a.objective);
    assert!(b.min_final_value >= a.min_final_value);
}

#[test]
fn cone_is_enforced() {
    let p = problem(1, 1e-2);
    assert!(matches!(
        functional_f(&p, &bump(0.0, 0.5, -1.0)),
        Err(Error::ConeViolation(_))
    ));
}
