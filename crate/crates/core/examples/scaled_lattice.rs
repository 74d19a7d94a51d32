//! The observability check on the finer lattice Z/N, cross-checked by rescaling.
//!
//! Run with `cargo run --release --example scaled_lattice`.

use lattice_obs::observability::{
    check_observability_scaled, largest_window, observability_constant_scaled,
};
use lattice_obs::{GridFunction, GridSpec};

fn main() -> lattice_obs::Result<()> {
    let t = 0.3;
    for n in [1, 2, 3, 4] {
        let spec = GridSpec::with_resolution(1, 20, 8 * n)?;
        let window = largest_window(&spec, n)?;
        let u0 = GridFunction::from_fn(spec, |x| (-(x[0] - 0.3).powi(2) / 0.4).exp());
        let r = check_observability_scaled(&u0, t, &window)?;
        let s = r.scaling.expect("scaled check carries the oracle");
        println!(
            "N={n}: constant {:.4e}, ratio {:.6e}, rescaled ratio {:.6e}, relative difference {:.1e}",
            observability_constant_scaled(1, t, n)?,
            r.ratio,
            s.rescaled_ratio,
            s.relative_difference
        );
    }
    Ok(())
}
