//! Equal-time Harnack failure: mass far from the origin outgrows any fixed constant.
//!
//! Run with `cargo run --release --example harnack`.

use lattice_obs::observability::{
    default_pipeline_grid, harnack_counterexample, harnack_pipeline, harnack_threshold,
};

fn main() -> lattice_obs::Result<()> {
    for t in [0.5, 1.0] {
        for m in [1.0, 5.0, 20.0] {
            let r = harnack_counterexample(m, t, 1)?;
            println!(
                "t={t} M={m:>4}: u(x0)/u(0) = {:.3e} >= floor {:.3e}: {}; cube constant {:.3}",
                r.ratio, r.growth_floor, r.growth_holds, r.harnack_constant
            );
        }
        if let Some(m) = harnack_threshold(t, 1, 0.25, 400.0)? {
            println!("t={t}: first M on the 1/4 grid beating the cube constant: {m}");
        }
        let p = harnack_pipeline(2.0, t, default_pipeline_grid())?;
        println!(
            "t={t}: evolved indicator vs closed form, sup error {:.2e}",
            p.sup_error
        );
    }
    Ok(())
}
