//! Energy against lattice samples for nonnegative data under the free heat flow.
//!
//! Run with `cargo run --release --example observability_free`.

use lattice_obs::observability::{
    check_observability_free, largest_window, observability_constant_free,
};
use lattice_obs::{GridFunction, GridSpec};

fn main() -> lattice_obs::Result<()> {
    let spec = GridSpec::with_resolution(1, 34, 10)?;
    let window = largest_window(&spec, 1)?;
    // two bumps, one sitting between lattice points
    let u0 = GridFunction::from_fn(spec, |x| {
        (-(x[0] - 0.5).powi(2) / 0.2).exp() + 0.3 * (-(x[0] + 2.0).powi(2) / 2.0).exp()
    });
    println!(
        "{:>6} {:>14} {:>14} {:>14} {:>10}",
        "t", "int u^2", "sum u(n)^2", "constant", "ratio"
    );
    for t in [0.1, 0.25, 0.5, 1.0, 2.0, 5.0] {
        let r = check_observability_free(&u0, t, &window)?;
        println!(
            "{t:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.3e}",
            r.lhs,
            r.rhs_sum,
            observability_constant_free(1, t)?,
            r.ratio
        );
        assert!(r.pass);
    }
    Ok(())
}
