//! One impulse on the integer lattice pushes a sign-changing state into the cone.
//!
//! Run with `cargo run --release --example impulsive_control`.

use lattice_obs::control::{
    random_mixed_datum, random_probes, solve_ladder, synthesize_control,
    verify_sign_controllability, ControlProblem, MinimizeOptions, DEFAULT_LADDER,
};
use lattice_obs::GridSpec;

fn main() -> lattice_obs::Result<()> {
    let spec = GridSpec::with_resolution(1, 10, 20)?;
    let y0 = random_mixed_datum(spec, 1);
    let window = ControlProblem::default_window(&spec)?;
    let base = ControlProblem::new(y0, 1.0, 0.5, DEFAULT_LADDER[0], window)?;
    println!(
        "without control: min y(T) = {:.4e}",
        base.free_final_state().min()
    );

    let rungs = solve_ladder(&base, &DEFAULT_LADDER, &MinimizeOptions::default())?;
    for r in &rungs {
        let m = &r.result;
        println!(
            "eps={:.0e}: F={:+.6e} |v|={:.5} (bound {:.1}) min y(T)={:+.3e} in {} iterations",
            m.epsilon,
            m.objective,
            m.control_norm,
            r.chain.uniform_bound,
            m.min_final_value,
            m.iterations
        );
    }
    let last = &rungs.last().expect("ladder is nonempty").result;
    let p = base.with_epsilon(last.epsilon)?;
    let v = synthesize_control(&p, last)?;
    let s = verify_sign_controllability(&p, last, 1e-2, &random_probes(&spec, 50, 0))?;
    println!(
        "weak form on {} probes: {}; pointwise within delta: {}",
        s.probes, s.weak_form_pass, s.pointwise_pass
    );
    for (i, c) in v
        .values()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > 1e-6)
    {
        println!("  v{:?} = {c:+.6}", window.index(i));
    }
    Ok(())
}
