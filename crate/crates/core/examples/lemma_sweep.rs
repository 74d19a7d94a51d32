//! Random cube queries against the three lattice Gaussian-sum bounds.
//!
//! Run with `cargo run --release --example lemma_sweep`.

use lattice_obs::lattice::{
    cube_gauss_sup, lattice_gauss_sum, lemma_sweep, summarize, verify_lemma_around, CubeQuery,
    Lemma,
};

fn main() -> lattice_obs::Result<()> {
    // one query by hand: y outside Q_2(0), so the "out" constant applies
    let q = CubeQuery::new(0.7, vec![2.5, -0.4], vec![0, 0])?;
    let around = verify_lemma_around(&q);
    println!(
        "a=0.7 y=(2.5,-0.4): sup {:.6e}, lattice sum {:.6e}, out constant {:.4}, around ratio {:.3}",
        cube_gauss_sup(&q),
        lattice_gauss_sum(&q),
        Lemma::Outside.constant(2, 0.7),
        around.ratio
    );

    for d in 1..=3 {
        let rows = lemma_sweep(d, 10_000, 7);
        let s = summarize(d, &rows);
        println!(
            "d={d}: {} queries ({} outside, {} inside), violations {} + {}, max ratios out {:.3} in {:.3e} around {:.3e}, oracle gap {:.1e}",
            s.samples,
            s.outside_samples,
            s.inside_samples,
            s.regime_violations,
            s.around_violations,
            s.max_ratio_outside,
            s.max_ratio_inside,
            s.max_ratio_around,
            s.max_oracle_gap
        );
    }
    Ok(())
}
