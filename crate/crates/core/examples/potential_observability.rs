//! Observability with a bounded potential, through the kernel-bound constant.
//!
//! Run with `cargo run --release --example potential_observability`.

use lattice_obs::kernel::{suggest_bounds_for_bounded_potential, Potential, PotentialSpec};
use lattice_obs::observability::{
    check_observability_potential, largest_window, observability_constant_potential,
};
use lattice_obs::{GridFunction, GridSpec};

fn main() -> lattice_obs::Result<()> {
    let spec = GridSpec::with_resolution(1, 34, 10)?;
    let window = largest_window(&spec, 1)?;
    let u0 = GridFunction::from_fn(spec, |x| (-(x[0] + 0.7).powi(2) / 0.5).exp());
    let v = Potential::from_spec(PotentialSpec::Cosine {
        amplitude: 1.0,
        frequency: 1.0,
    });
    let bounds = suggest_bounds_for_bounded_potential(v.sup_bound(), 1)?;
    for t in [0.2, 0.5, 1.0, 2.0] {
        let c = observability_constant_potential(&bounds, 1, t)?;
        let r = check_observability_potential(&u0, &v, t, &window)?;
        println!(
            "t={t}: sampled at s={}, constant {:.3e}, int u(t)^2 = {:.4e}, sum u(s,n)^2 = {:.4e}, ratio {:.2e}",
            c.lattice_time, c.constant, r.lhs, r.rhs_sum, r.ratio
        );
    }
    Ok(())
}
