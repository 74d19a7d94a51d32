//! End-to-end acceptance suite. Prints one line per criterion and exits
//! nonzero if any of them fails.

use std::process::Command as Process;
use std::time::Instant;

use lattice_obs::cli::{
    execute, free_collapse_gap, solve_control, Command, ControlParams, RunConfig,
};
use lattice_obs::control::DatumSpec;
use lattice_obs::observability::{
    check_epsilon_necessity, counterexample_pipeline, PIPELINE_TOLERANCE,
};
use lattice_obs::report::comparable;
use lattice_obs::Result;
use serde_json::{json, Value};

const SEED: u64 = 20240501;

fn outcome(cmd: Command, params: Value) -> Result<lattice_obs::cli::Outcome> {
    execute(&RunConfig::new(cmd, params, SEED, "unused")?)
}

fn lemmas() -> Result<(bool, String)> {
    let o = outcome(Command::VerifyLemmas, json!({ "samples": 10_000 }))?;
    let s = &o.report.diagnostics["summaries"];
    let violations: u64 = s
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["violations"].as_u64().unwrap_or(0))
        .sum();
    let gap = s
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|x| x["max_oracle_gap"].as_f64())
        .fold(0.0, f64::max);
    Ok((
        o.report.pass,
        format!("d=1,2,3 x 10^4 queries, violations {violations}, oracle gap {gap:.2e}"),
    ))
}

fn observability_free() -> Result<(bool, String)> {
    let mut pass = true;
    let mut notes = Vec::new();
    for d in [1, 2] {
        let o = outcome(
            Command::VerifyObservability,
            json!({ "dim": d, "samples": 200, "centers": 0 }),
        )?;
        let ratio = o.report.diagnostics["max_ratio"]
            .as_f64()
            .unwrap_or(f64::INFINITY);
        pass &= o.report.pass && ratio <= 1.0;
        notes.push(format!("d={d} max ratio {ratio:.3e}"));
    }
    Ok((pass, notes.join(", ")))
}

fn pointwise() -> Result<(bool, String)> {
    let mut pass = true;
    let mut notes = Vec::new();
    for d in [1, 2] {
        let o = outcome(
            Command::VerifyObservability,
            json!({ "dim": d, "samples": 100, "centers": 5 }),
        )?;
        let pw = &o.report.diagnostics["pointwise"];
        let failures = pw["failures"].as_u64().unwrap_or(u64::MAX);
        pass &= failures == 0 && pw["checks"].as_u64() == Some(500);
        notes.push(format!(
            "d={d} {} checks, {failures} violations, max ratio {:.3e}",
            pw["checks"],
            pw["max_ratio"].as_f64().unwrap_or(f64::NAN)
        ));
    }
    Ok((pass, notes.join(", ")))
}

fn counterexample() -> Result<(bool, String)> {
    let mut pass = true;
    let mut notes = Vec::new();
    for (t, n, d) in [(1.0, 1, 1), (0.5, 3, 1), (1.0, 2, 2)] {
        let r = check_epsilon_necessity(t, n, d)?;
        let p = counterexample_pipeline(t, n, d)?;
        pass &= r.pass && p.sup_error <= PIPELINE_TOLERANCE;
        notes.push(format!(
            "({t},{n},{d}) ratio {:.2e} pipeline {:.1e}",
            r.ratio, p.sup_error
        ));
    }
    Ok((pass, notes.join(", ")))
}

fn harnack() -> Result<(bool, String)> {
    let o = outcome(Command::Harnack, json!({}))?;
    let th = &o.report.diagnostics["thresholds"];
    Ok((
        o.report.pass,
        format!(
            "growth floor holds {}, thresholds {th}",
            o.report.diagnostics["growth_holds_everywhere"]
        ),
    ))
}

fn kernel_bounds() -> Result<(bool, String)> {
    let o = outcome(Command::KernelBounds, json!({}))?;
    let g = &o.report.diagnostics;
    Ok((
        o.report.pass,
        format!(
            "violations {}, min margin {:.3}",
            g["total_violations"],
            g["min_margin"].as_f64().unwrap_or(0.0)
        ),
    ))
}

fn potential() -> Result<(bool, String)> {
    let o = outcome(Command::VerifyPotential, json!({ "samples": 50 }))?;
    let collapse = free_collapse_gap()?;
    let g = &o.report.diagnostics;
    Ok((
        o.report.pass && collapse <= 1e-9,
        format!(
            "failures {}, free collapse gap {collapse:.1e}",
            g["failures"]
        ),
    ))
}

fn control() -> Result<(bool, String)> {
    let mut pass = true;
    let (mut dual, mut unique, mut grad, mut euler) = (0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY);
    let mut failed = Vec::new();
    for i in 0..20u64 {
        let mut p: ControlParams = serde_json::from_value(json!({}))?;
        p.y0 = Some(DatumSpec::RandomMixed { seed: i });
        let (_, _, s) = solve_control(&p, i)?;
        let ok = s.duality_pass
            && s.euler_pass
            && s.uniqueness.pass
            && s.chain_pass
            && s.weak_form_pass
            && s.gradient_pass
            && s.converged;
        if !ok {
            failed.push(i);
        }
        pass &= ok;
        dual = dual.max(s.duality_max_error);
        unique = unique.max(s.uniqueness.objective_gap);
        grad = grad.max(s.gradient_check_worst);
        euler = euler.min(s.euler_worst);
    }
    Ok((
        pass,
        format!(
            "20 data, duality {dual:.1e}, uniqueness {unique:.1e}, gradient {grad:.1e}, euler min {euler:.2e}, failed {failed:?}"
        ),
    ))
}

fn scaled() -> Result<(bool, String)> {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [1, 2, 4] {
        let o = outcome(
            Command::VerifyObservability,
            json!({ "dim": 1, "N": n, "samples": 20, "centers": 0 }),
        )?;
        let gap = o.report.diagnostics["max_scaling_relative_difference"]
            .as_f64()
            .unwrap_or(0.0);
        pass &= o.report.pass && gap <= 1e-9;
        notes.push(format!("N={n} gap {gap:.1e}"));
    }
    Ok((pass, notes.join(", ")))
}

fn determinism() -> Result<(bool, String)> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"dim": 1, "samples": 20, "seed": 11}"#)?;
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Process::new(env!("CARGO_BIN_EXE_lattice-obs"))
            .arg("verify-observability")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()?;
        if !status.success() {
            return Ok((false, format!("run {run} exited with {status}")));
        }
        reports.push(std::fs::read_to_string(out.join("report.json"))?);
    }
    let same = comparable(&reports[0])? == comparable(&reports[1])?;
    Ok((
        same,
        format!("report.json identical apart from timestamp: {same}"),
    ))
}

type Criterion = fn() -> Result<(bool, String)>;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("lemma suite", lemmas),
        ("free observability", observability_free),
        ("pointwise bound", pointwise),
        ("counterexample", counterexample),
        ("harnack failure", harnack),
        ("kernel bounds", kernel_bounds),
        ("potential observability", potential),
        ("sign control", control),
        ("scaled lattice", scaled),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, note) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {:>2} {name}: {note} ({:.1}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
