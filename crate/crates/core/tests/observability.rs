use std::f64::consts::{E, PI};

use lattice_obs::kernel::KernelBounds;
use lattice_obs::observability::{
    check_epsilon_necessity, check_observability_free, check_observability_scaled, final_state_1d,
    harnack_counterexample, harnack_solution, largest_window, observability_constant_free,
    observability_constant_potential, observability_constant_scaled,
};
use lattice_obs::{Error, GridFunction, GridSpec};
use proptest::prelude::*;

#[test]
fn free_constant_values() {
    assert!((observability_constant_free(1, 1.0).unwrap() - 36.0 * E * E).abs() < 1e-10);
    assert!((observability_constant_free(2, 2.0).unwrap() - 1296.0 * E * E).abs() < 1e-8);
    assert!(observability_constant_free(1, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaled_constant_is_rescaled_free_constant(d in 1usize..=3, t in 0.05f64..5.0, n in 1usize..=6) {
        let nf = n as f64;
        let expect = nf.powi(-(d as i32)) * observability_constant_free(d, nf * nf * t).unwrap();
        let got = observability_constant_scaled(d, t, n).unwrap();
        prop_assert!((got / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn potential_constant_grows_with_bounds(d in 1usize..=2, t in 0.1f64..3.0, m in 0.0f64..2.0) {
        let small = KernelBounds::new(m, 4.0, m.max(1e-12), 4.0).unwrap();
        let large = KernelBounds::new(m + 0.5, 4.0, m + 0.5, 4.0).unwrap();
        let a = observability_constant_potential(&small, d, t).unwrap().constant;
        let b = observability_constant_potential(&large, d, t).unwrap().constant;
        prop_assert!(b > a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nonnegative_data_are_observed(
        c in -3.0f64..3.0,
        s in 0.05f64..1.0,
        t in 0.1f64..3.0,
        a2 in 0.0f64..1.0,
    ) {
        let spec = GridSpec::with_resolution(1, 34, 10).unwrap();
        let w = largest_window(&spec, 1).unwrap();
        let u0 = GridFunction::from_fn(spec, |x| {
            (-(x[0] - c).powi(2) / (4.0 * s)).exp() + a2 * (-(x[0] + c).powi(2) / 2.0).exp()
        });
        let r = check_observability_free(&u0, t, &w).unwrap();
        prop_assert!(r.pass && r.ratio <= 1.0);
        let neg = check_observability_free(&u0.scaled(-1.0), t, &w).unwrap();
        prop_assert!(neg.negated);
        prop_assert!((neg.ratio - r.ratio).abs() <= 1e-14 * r.ratio);
    }
}

#[test]
fn sign_changing_data_are_rejected() {
    let spec = GridSpec::with_resolution(1, 20, 10).unwrap();
    let w = largest_window(&spec, 1).unwrap();
    let u0 = GridFunction::from_fn(spec, |x| x[0] * (-x[0] * x[0]).exp());
    assert!(matches!(
        check_observability_free(&u0, 1.0, &w),
        Err(Error::Hypothesis(_))
    ));
}

#[test]
fn scaled_check_agrees_with_rescaling() {
    let spec = GridSpec::with_resolution(1, 20, 24).unwrap();
    let w = largest_window(&spec, 3).unwrap();
    let u0 = GridFunction::from_fn(spec, |x| (-(x[0] - 0.2).powi(2)).exp());
    let r = check_observability_scaled(&u0, 0.4, &w).unwrap();
    assert!(r.pass);
    assert!(r.scaling.unwrap().relative_difference < 1e-9);
}

/// Midpoint rule for `int sin(a x)^2 f(x)^2 dx` with `f` the Gaussian of time `T+1`.
fn energy_by_quadrature(t_final: f64, a: f64) -> f64 {
    let h = 1e-3;
    (0..80_000)
        .map(|i| {
            let x = -40.0 + (i as f64 + 0.5) * h;
            let f =
                (4.0 * PI * (t_final + 1.0)).powf(-0.5) * (-x * x / (4.0 * (t_final + 1.0))).exp();
            ((a * x).sin() * f).powi(2) * h
        })
        .sum()
}

#[test]
fn counterexample_final_state_energy() {
    for (t, n) in [(1.0, 1usize), (0.5, 3)] {
        let a = n as f64 * PI;
        let closed =
            (1.0 - (-2.0 * a * a * (t + 1.0)).exp()) / (2.0 * (8.0 * PI * (t + 1.0)).sqrt());
        assert!((energy_by_quadrature(t, a) - closed).abs() < 1e-10);
        for k in -5..=5 {
            assert!(final_state_1d(t, n, k as f64 / n as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn counterexample_defeats_the_lattice() {
    let r = check_epsilon_necessity(1.0, 1, 1).unwrap();
    assert!(r.pass);
    assert!(r.ratio > 1e10);
    assert!(r.lattice_to_peak <= 1e-10);
}

#[test]
fn harnack_growth_floor() {
    for (m, t) in [(1.0, 0.5), (5.0, 1.0), (20.0, 0.5)] {
        let r = harnack_counterexample(m, t, 1).unwrap();
        assert!(
            (r.growth_floor - 0.5 * ((m - 0.25) / (4.0 * t)).exp()).abs() < 1e-9 * r.growth_floor
        );
        assert!(r.growth_holds);
        assert!((r.harnack_constant - (1.0 / t).exp()).abs() < 1e-12);
    }
    // the transverse factor cancels in the ratio
    let r1 = harnack_counterexample(3.0, 1.0, 1).unwrap();
    let r2 = harnack_counterexample(3.0, 1.0, 2).unwrap();
    assert!((r1.ratio - r2.ratio).abs() < 1e-12 * r1.ratio);
    assert!(harnack_solution(3.0, 1.0, &[3.5]) > harnack_solution(3.0, 1.0, &[0.0]));
}
