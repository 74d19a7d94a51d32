//! Two-sided Gaussian envelopes for heat kernels with bounded potentials.
//!
//! Run with `cargo run --release --example kernel_bounds`.

use lattice_obs::kernel::{
    check_two_sided_bounds, suggest_bounds_for_bounded_potential, Potential, PotentialSpec,
};
use lattice_obs::GridSpec;

fn main() -> lattice_obs::Result<()> {
    let spec = GridSpec::new(1, 16.0, 1025)?;
    let sources = vec![vec![-2.0], vec![0.0], vec![1.3]];
    for v in [
        PotentialSpec::Zero,
        PotentialSpec::Constant { c: 0.5 },
        PotentialSpec::Cosine {
            amplitude: 1.0,
            frequency: 1.0,
        },
        PotentialSpec::GaussianWell {
            depth: 2.0,
            width: 0.5,
        },
    ] {
        let pot = Potential::from_spec(v);
        let b = suggest_bounds_for_bounded_potential(pot.sup_bound(), 1)?;
        let r = check_two_sided_bounds(&pot, &b, &[0.25, 0.5, 1.0, 2.0], &sources, &spec, 32)?;
        let lower = r
            .entries
            .iter()
            .map(|e| e.lower_margin)
            .fold(f64::INFINITY, f64::min);
        let upper = r
            .entries
            .iter()
            .map(|e| e.upper_margin)
            .fold(f64::INFINITY, f64::min);
        println!(
            "{v:?}: c1={:.3} c3={:.3}, violations {}, min K/lower {:.3}, min upper/K {:.3}",
            b.c1, b.c3, r.total_violations, lower, upper
        );
    }
    Ok(())
}
