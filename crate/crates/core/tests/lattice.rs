use lattice_obs::lattice::{
    cube_gauss_sup, lattice_gauss_sum, pointwise_solution_bound, verify_lemma_around,
    verify_lemma_inside, verify_lemma_out, CubeQuery, Lemma, Regime,
};
use lattice_obs::{GridFunction, GridSpec, LatticeWindow};
use proptest::prelude::*;

/// Sum over the 3^d lattice points of the cube, by explicit enumeration.
fn brute_sum(a: f64, y: &[f64], k: &[i64]) -> f64 {
    let d = y.len();
    (0..3usize.pow(d as u32))
        .map(|mut c| {
            let mut r2 = 0.0;
            for i in 0..d {
                let n = k[i] + (c % 3) as i64 - 1;
                c /= 3;
                r2 += (n as f64 - y[i]).powi(2);
            }
            (-a * r2).exp()
        })
        .sum()
}

/// Distance from `y` to the cube, squared.
fn dist2(y: &[f64], k: &[i64]) -> f64 {
    y.iter()
        .zip(k)
        .map(|(yi, &ki)| {
            let lo = ki as f64 - 1.0;
            let hi = ki as f64 + 1.0;
            (lo - yi).max(yi - hi).max(0.0).powi(2)
        })
        .sum()
}

fn query() -> impl Strategy<Value = CubeQuery> {
    (1usize..=3).prop_flat_map(|d| {
        (
            0.01f64..3.0,
            prop::collection::vec(-4.0f64..4.0, d),
            prop::collection::vec(-2i64..=2, d),
        )
            .prop_map(|(a, y, k)| CubeQuery::new(a, y, k).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sums_and_sup_match_enumeration(q in query()) {
        let sum = brute_sum(q.a(), q.y(), q.center());
        prop_assert!((lattice_gauss_sum(&q) - sum).abs() <= 1e-13 * sum.max(1e-300));
        let sup = (-q.a() * dist2(q.y(), q.center())).exp();
        prop_assert!((cube_gauss_sup(&q) - sup).abs() <= 1e-13 * sup.max(1e-300));
    }

    #[test]
    fn around_bound_holds(q in query()) {
        prop_assert!(verify_lemma_around(&q).pass);
    }

    #[test]
    fn regime_bound_holds(q in query()) {
        let r = match q.regime() {
            Regime::Outside => verify_lemma_out(&q).unwrap(),
            Regime::Inside => verify_lemma_inside(&q).unwrap(),
        };
        prop_assert!(r.pass);
        prop_assert!(r.ln_lhs <= r.ln_rhs + 1e-10);
    }

    #[test]
    fn lattice_points_never_beat_the_sup(q in query()) {
        // every lattice summand is a value of the Gaussian inside the cube
        let sup = cube_gauss_sup(&q);
        let sum = lattice_gauss_sum(&q);
        prop_assert!(sum <= 3f64.powi(q.dim() as i32) * sup * (1.0 + 1e-12));
    }
}

#[test]
fn lemma_constants() {
    let e = std::f64::consts::E;
    assert_eq!(Lemma::Outside.constant(1, 0.9), 1.0);
    assert!((Lemma::Outside.constant(2, 1.0) - 2.0 * e.sqrt()).abs() < 1e-14);
    assert!((Lemma::Inside.constant(3, 0.5) - e.powi(6)).abs() < 1e-9);
    assert!((Lemma::Around.constant(2, 0.25) - 2.0 * e.powi(2)).abs() < 1e-13);
}

#[test]
fn preconditions_follow_the_regime() {
    let outside = CubeQuery::new(1.0, vec![3.0], vec![0]).unwrap();
    assert!(verify_lemma_out(&outside).is_ok());
    assert!(verify_lemma_inside(&outside).is_err());
    let inside = CubeQuery::new(1.0, vec![0.2], vec![0]).unwrap();
    assert!(verify_lemma_out(&inside).is_err());
}

#[test]
fn pointwise_bound_with_gaussian_oracle() {
    // u0 = e^{-x^2/(4s)} has u(t,x) = sqrt(s/(s+t)) e^{-x^2/(4(s+t))}
    let spec = GridSpec::with_resolution(1, 20, 10).unwrap();
    let w = LatticeWindow::new(1, 19, 1).unwrap();
    let s = 0.3;
    let u0 = GridFunction::from_fn(spec, |x| (-x[0] * x[0] / (4.0 * s)).exp());
    for (t, k) in [(0.2, 0), (1.0, 3), (3.0, -2)] {
        let r = pointwise_solution_bound(&u0, t, &[k], &w).unwrap();
        let u = |x: f64| (s / (s + t)).sqrt() * (-x * x / (4.0 * (s + t))).exp();
        let sum: f64 = (-1..=1).map(|j| u((k + j) as f64)).sum();
        assert!((r.lattice_sum - sum).abs() < 1e-10);
        assert!((r.constant - (1.0 / t).exp()).abs() < 1e-12 * r.constant);
        assert!(r.pass);
    }
}
