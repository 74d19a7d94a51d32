use lattice_obs::kernel::{
    free_kernel, heat_evolve, potential_evolve, HeatPropagator, Potential, PotentialSpec,
};
use lattice_obs::{GridFunction, GridSpec};
use proptest::prelude::*;

fn gaussian(spec: GridSpec, c: f64, s: f64) -> GridFunction {
    GridFunction::from_fn(spec, |x| {
        (-x.iter().map(|v| (v - c).powi(2)).sum::<f64>() / (4.0 * s)).exp()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaussian_widens_exactly(c in -2.0f64..2.0, s in 0.1f64..1.0, t in 0.05f64..3.0) {
        let spec = GridSpec::with_resolution(1, 24, 10).unwrap();
        let u = heat_evolve(&gaussian(spec, c, s), t).unwrap().field;
        let exact = gaussian(spec, c, s + t).scaled((s / (s + t)).sqrt());
        prop_assert!(u.sup_distance(&exact).unwrap() < 1e-12);
    }

    #[test]
    fn evolution_is_positive_and_mass_preserving(
        amps in prop::collection::vec(0.0f64..1.0, 3),
        t in 0.1f64..2.0,
    ) {
        let spec = GridSpec::with_resolution(1, 24, 10).unwrap();
        let u0 = GridFunction::from_fn(spec, |x| {
            amps.iter().enumerate().map(|(i, a)| a * (-(x[0] - i as f64).powi(2)).exp()).sum()
        });
        let u = heat_evolve(&u0, t).unwrap().field;
        prop_assert!(u.min() >= 0.0);
        let (m0, m1) = (u0.integral().unwrap(), u.integral().unwrap());
        prop_assert!((m0 - m1).abs() <= 1e-12 * m0.max(1e-300));
        // contraction in L2
        prop_assert!(u.l2_norm().unwrap() <= u0.l2_norm().unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_is_symmetric(x in -3.0f64..3.0, y in -3.0f64..3.0, t in 0.01f64..5.0) {
        let a = free_kernel(t, &[x, y], &[y, x]).unwrap();
        let b = free_kernel(t, &[y, x], &[x, y]).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn two_dimensional_gaussian() {
    let spec = GridSpec::with_resolution(2, 12, 8).unwrap();
    let u = heat_evolve(&gaussian(spec, 0.5, 0.4), 0.7).unwrap().field;
    let exact = gaussian(spec, 0.5, 1.1).scaled(0.4 / 1.1);
    assert!(u.sup_distance(&exact).unwrap() < 1e-12);
}

#[test]
fn propagator_matches_one_shot_evolution() {
    let spec = GridSpec::with_resolution(1, 16, 8).unwrap();
    let u0 = gaussian(spec, 1.0, 0.2);
    let p = HeatPropagator::new(spec, 0.9).unwrap();
    assert_eq!(p.apply(&u0).unwrap(), heat_evolve(&u0, 0.9).unwrap().field);
}

#[test]
fn constant_potential_scales_the_flow() {
    let spec = GridSpec::with_resolution(1, 20, 10).unwrap();
    let u0 = gaussian(spec, 0.0, 0.5);
    let c = -0.7;
    let v = Potential::from_spec(PotentialSpec::Constant { c });
    let u = potential_evolve(&u0, &v, 1.3, 4).unwrap().field;
    let exact = heat_evolve(&u0, 1.3).unwrap().field.scaled((c * 1.3).exp());
    assert!(u.sup_distance(&exact).unwrap() < 1e-12);
}

#[test]
fn nonpositive_times_are_rejected() {
    let spec = GridSpec::with_resolution(1, 4, 4).unwrap();
    assert!(heat_evolve(&gaussian(spec, 0.0, 1.0), 0.0).is_err());
    assert!(free_kernel(-1.0, &[0.0], &[0.0]).is_err());
}
