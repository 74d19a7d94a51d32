//! Command-line runner.
//!
//! Each command runs one check, writes `report.json` and `data.csv` (plus
//! command-specific extras) into the output directory, and maps the outcome to
//! an exit status: 0 pass, 1 check failure, 2 usage error, 3 numerical-health
//! error (truncation, non-convergence, corrupt data).
//!
//! Parameters come from an optional JSON config file whose top-level keys are
//! the command's parameters; flags override the file. All randomness derives
//! from `--seed`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::control::{
    apply_control, duality_identity, euler_inequality, norm_chain, random_probes, solve_ladder,
    synthesize_control, uniqueness_check, verify_sign_controllability, ControlProblem, DatumSpec,
    MinimizeOptions, DEFAULT_LADDER,
};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, LatticeWindow};
use crate::kernel::{
    check_two_sided_bounds, suggest_bounds_for_bounded_potential, KernelBounds, Potential,
    PotentialSpec,
};
use crate::lattice::{lemma_sweep, pointwise_solution_bounds, summarize, sweep_csv};
use crate::observability::counterexample::PIPELINE_TOLERANCE;
use crate::observability::{
    check_epsilon_necessity, check_observability_free, check_observability_potential_with,
    check_observability_scaled, counterexample_pipeline, default_pipeline_grid,
    harnack_counterexample, harnack_pipeline, harnack_threshold, largest_window,
    observability_constant_free, observability_constant_potential, ObservabilityReport,
    OBSERVABILITY_TOLERANCE,
};
use crate::random::{bumps_on_grid, random_bumps, stream};
use crate::report::{write_atomic, Report};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "LATTICE_OBS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyLemmas,
    VerifyObservability,
    VerifyPotential,
    Counterexample,
    Harnack,
    Control,
    KernelBounds,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::VerifyLemmas,
        Command::VerifyObservability,
        Command::VerifyPotential,
        Command::Counterexample,
        Command::Harnack,
        Command::Control,
        Command::KernelBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyLemmas => "verify-lemmas",
            Command::VerifyObservability => "verify-observability",
            Command::VerifyPotential => "verify-potential",
            Command::Counterexample => "counterexample",
            Command::Harnack => "harnack",
            Command::Control => "control",
            Command::KernelBounds => "kernel-bounds",
        }
    }

    /// Name of the result the command checks.
    pub fn theorem(self) -> &'static str {
        match self {
            Command::VerifyLemmas => "lattice Gaussian sums dominate the cube supremum",
            Command::VerifyObservability => "lattice observability of the free heat flow",
            Command::VerifyPotential => "lattice observability with a bounded potential",
            Command::Counterexample => "the lattice sum alone cannot observe sign-changing data",
            Command::Harnack => "equal-time Harnack inequality fails for the heat flow",
            Command::Control => "impulsive lattice control into the nonnegative cone",
            Command::KernelBounds => {
                "two-sided Gaussian bounds for the heat kernel with a potential"
            }
        }
    }

    /// The checked statement, with its formulas.
    pub fn explain(self) -> &'static str {
        match self {
            Command::VerifyLemmas => {
                "For a > 0, y in R^d and the cube Q_2(k) = k + [-1,1]^d with k in Z^d:\n\
                 \n  out:    y outside Q_2(k)  =>  sup_Q e^{-a|x-y|^2} <= 2^{d-1} e^{(d-1)a/2} sum_{n in Q_2(k) cap Z^d} e^{-a|n-y|^2}\n\
                 \n  inside: y inside Q_2(k)   =>  sup_Q e^{-a|x-y|^2} <= e^{4ad} sum_n e^{-a|n-y|^2}\n\
                 \n  around: any y             =>  sup_Q e^{-a|x-y|^2} <= 2^{d-1} e^{4ad} sum_n e^{-a|n-y|^2}\n\
                 \nThe supremum is computed in closed form by clamping y to the cube and cross-checked\n\
                 against a dense grid of 10^4 points. Flags: --dim, --samples, --seed."
            }
            Command::VerifyObservability => {
                "For u_t = Delta u on R^d with u(0) >= 0 (or <= 0) and t > 0:\n\
                 \n  int u(t,x)^2 dx <= 36^d e^{2d/t} sum_{n in Z^d} u(t,n)^2,\n\
                 \nand on the lattice Z^d/N the constant becomes N^{-d} 36^d e^{2d/(N^2 t)}, cross-checked by\n\
                 rescaling space by N and time by N^2. Also checks the pointwise bound\n\
                 \n  u(t,x) <= 2^{d-1} e^{d/t} sum_{n in Q_2(k) cap Z^d} u(t,n)   for x in Q_2(k).\n\
                 \nData are random sums of nonnegative Gaussian bumps. Flags: --dim, --samples, --t, --N, --seed."
            }
            Command::VerifyPotential => {
                "For u_t = Delta u + V u with |V| <= M, the heat kernel obeys\n\
                 \n  e^{-c1} t^{-d/2} e^{-c2|x-y|^2/t} <= K(t,x,y) <= e^{c3 t} t^{-d/2} e^{-c4|x-y|^2/t},\n\
                 \nand for nonnegative data, with s = c4 t / c2,\n\
                 \n  int u(t,x)^2 dx <= C sum_n u(s,n)^2,\n  C = (c4 pi)^d e^{2c3(2-c2/c4)} (36 c4/c2)^d e^{2c3(t+1)} e^{2c1(s+1)} e^{8d/(c2 s)}.\n\
                 \nWith V = 0 and c1, c3 -> 0 the constant collapses to (4 pi)^d 36^d e^{2d/t}.\n\
                 Flags: --dim, --samples, --t, --seed; the potential comes from the config file."
            }
            Command::Counterexample => {
                "Without a sign condition no lattice inequality holds. With c = (T+1) N pi, A = e^{T(T+1) N^2 pi^2},\n\
                 \n  u0(x) = prod_i A/(2 sqrt(pi)) e^{-x_i^2/4} sin(c x_i)\n\
                 \nevolves to u(T,x) = prod_i sin(N pi x_i) (4 pi (T+1))^{-1/2} e^{-x_i^2/(4(T+1))}, which vanishes on\n\
                 Z^d/N while ||u(T)|| stays of order one. Reports ||u(T)||^2 against N^{-d} sum u(T,n/N)^2 and the\n\
                 extended-precision evolution against the closed form. Flags: --T, --N, --dim."
            }
            Command::Harnack => {
                "For u0 the indicator of [M, M+1] x R^{d-1}, times a Gaussian of time 1 in the other variables,\n\
                 and x0 = (M + 1/2, 0, ..., 0):\n\
                 \n  u_M(t, x0) >= 1/2 u_M(t, 0) e^{(M - 1/4)/(4t)},\n\
                 \nso u_M(t, x0)/u_M(t, 0) eventually exceeds the cube constant 2^{d-1} e^{d/t}: no equal-time\n\
                 Harnack inequality. Flags: --M, --t, --dim."
            }
            Command::Control => {
                "Given y0, 0 < tau < T and eps > 0, minimize over phi_T >= 0\n\
                 \n  F(phi_T) = 1/2 sum_n phi(tau, n/N)^2 + <y0, phi(0)> + eps ||phi_T||,  phi(t) = e^{(T-t)Delta} phi_T,\n\
                 \nand kick the state at time tau by v_n = phi_hat(tau, n/N). Then <y(T), psi> + eps ||psi|| >= 0 for\n\
                 every psi >= 0, and ||v|| <= 2 * 6^d e^{d/(T-tau)} ||y0||. Runs an eps ladder with warm starts and\n\
                 checks duality, optimality, uniqueness and the norm chain. Flags: --config, --T, --tau, --epsilon, --seed."
            }
            Command::KernelBounds => {
                "Samples the kernel of u_t = Delta u + V u (Strang splitting started from a narrow Gaussian) at\n\
                 several times and sources and checks\n\
                 \n  e^{-c1} t^{-d/2} e^{-c2|x-y|^2/t} <= K(t,x,y) <= e^{c3 t} t^{-d/2} e^{-c4|x-y|^2/t}\n\
                 \nwith c1 = M + (d/2) ln(4 pi), c2 = c4 = 4, c3 = M, wherever the lower envelope exceeds 1e-12.\n\
                 Flags: --dim, --t, --seed; the potential comes from the config file."
            }
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with the command's parameters
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// output directory for report.json and data.csv
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<f64>,
    #[arg(long = "t")]
    pub t: Option<f64>,
    /// print the checked statement and exit
    #[arg(long)]
    pub explain: bool,
}

#[derive(Debug, Subcommand)]
enum Sub {
    VerifyLemmas(Flags),
    VerifyObservability(Flags),
    VerifyPotential(Flags),
    Counterexample(Flags),
    Harnack(Flags),
    Control(Flags),
    KernelBounds(Flags),
}

#[derive(Debug, Parser)]
#[command(
    name = "lattice-obs",
    version,
    about = "Lattice observability checks and impulsive sign control"
)]
struct Cli {
    #[command(subcommand)]
    sub: Sub,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: Map<String, Value>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub explain: bool,
}

impl RunConfig {
    pub fn new(
        command: Command,
        params: Value,
        seed: u64,
        output_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let params = match params {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => {
                return Err(Error::Config(format!(
                    "parameters must be a JSON object, got {other}"
                )))
            }
        };
        Ok(Self {
            command,
            params,
            seed,
            output_dir: output_dir.into(),
            explain: false,
        })
    }

    fn from_flags(command: Command, f: Flags) -> Result<Self> {
        let mut params = match &f.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                match serde_json::from_str::<Value>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                {
                    Value::Object(m) => m,
                    _ => {
                        return Err(Error::Config(format!(
                            "{} must hold a JSON object",
                            path.display()
                        )))
                    }
                }
            }
            None => Map::new(),
        };
        let from_file = params.remove("seed");
        let seed = match (f.seed, from_file) {
            (Some(s), _) => s,
            (None, Some(v)) => v.as_u64().ok_or_else(|| {
                Error::Config(format!("seed must be an unsigned integer, got {v}"))
            })?,
            (None, None) => 0,
        };
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        };
        set("dim", f.dim.map(Value::from));
        set("samples", f.samples.map(Value::from));
        set("T", f.t_final.map(Value::from));
        set("tau", f.tau.map(Value::from));
        set("epsilon", f.epsilon.map(Value::from));
        set("N", f.n.map(Value::from));
        set("M", f.m.map(Value::from));
        set("t", f.t.map(Value::from));
        Ok(Self {
            command,
            params,
            seed,
            output_dir: f.out,
            explain: f.explain,
        })
    }
}

/// Result of a command before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// `(file name, contents)`; always includes `data.csv`
    pub files: Vec<(String, String)>,
}

fn parse<T: DeserializeOwned>(params: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| Error::Config(e.to_string()))
}

fn params_json<T: Serialize>(p: &T, seed: u64) -> Value {
    let mut v = serde_json::to_value(p).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("seed".into(), json!(seed));
    }
    v
}

fn check_dim(d: usize, allowed: &[usize]) -> Result<()> {
    if !allowed.contains(&d) {
        return Err(Error::Config(format!(
            "dimension {d} not supported here; use one of {allowed:?}"
        )));
    }
    Ok(())
}

/// Runs the command without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    match config.command {
        Command::VerifyLemmas => verify_lemmas(config),
        Command::VerifyObservability => verify_observability(config),
        Command::VerifyPotential => verify_potential(config),
        Command::Counterexample => counterexample(config),
        Command::Harnack => harnack(config),
        Command::Control => control(config),
        Command::KernelBounds => kernel_bounds(config),
    }
}

/// Exit status for an error.
pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_numerical_health() {
        3
    } else {
        2
    }
}

/// Runs, writes the output files and returns the exit status.
pub fn run(config: &RunConfig) -> i32 {
    let dir = &config.output_dir;
    match execute(config) {
        Ok(outcome) => {
            let pass = outcome.report.pass;
            match write_outcome(dir, &outcome) {
                Ok(()) => i32::from(!pass),
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            let mut report = Report::new(
                config.command.theorem(),
                Value::Object(config.params.clone()),
            );
            report.diagnostics = json!({ "error": e.to_string(), "exit_code": code });
            if let Ok(text) = report.to_json() {
                if let Err(w) = write_atomic(&dir.join("report.json"), &text) {
                    eprintln!("error: {w}");
                }
            }
            code
        }
    }
}

fn write_outcome(dir: &Path, outcome: &Outcome) -> Result<()> {
    for (name, contents) in &outcome.files {
        write_atomic(&dir.join(name), contents)?;
    }
    write_atomic(&dir.join("report.json"), &outcome.report.to_json()?)
}

/// Caps rayon's pool at `LATTICE_OBS_THREADS` when set.
pub fn init_threads() -> std::result::Result<(), String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
            if n == 0 {
                return Err(format!("{THREADS_ENV} must be positive"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

/// Entry point of the binary: parses arguments, runs, returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let (command, flags) = match cli.sub {
        Sub::VerifyLemmas(f) => (Command::VerifyLemmas, f),
        Sub::VerifyObservability(f) => (Command::VerifyObservability, f),
        Sub::VerifyPotential(f) => (Command::VerifyPotential, f),
        Sub::Counterexample(f) => (Command::Counterexample, f),
        Sub::Harnack(f) => (Command::Harnack, f),
        Sub::Control(f) => (Command::Control, f),
        Sub::KernelBounds(f) => (Command::KernelBounds, f),
    };
    if flags.explain {
        println!(
            "{}: {}\n\n{}",
            command.name(),
            command.theorem(),
            command.explain()
        );
        return 0;
    }
    let config = match RunConfig::from_flags(command, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let code = run(&config);
    let verdict = match code {
        0 => "pass",
        1 => "FAIL",
        _ => "error",
    };
    println!(
        "{}: {verdict} (report in {})",
        command.name(),
        config.output_dir.join("report.json").display()
    );
    code
}

// ---------------------------------------------------------------- lemmas

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaParams {
    /// one dimension, or 1, 2 and 3 when absent
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default = "default_lemma_samples")]
    pub samples: usize,
}

fn default_lemma_samples() -> usize {
    10_000
}

fn verify_lemmas(c: &RunConfig) -> Result<Outcome> {
    let p: LemmaParams = parse(&c.params)?;
    let dims = match p.dim {
        Some(d) if d >= 1 => vec![d],
        Some(_) => return Err(Error::Config("dimension must be at least 1".into())),
        None => vec![1, 2, 3],
    };
    let mut csv = String::new();
    let mut summaries = Vec::new();
    let mut pass = true;
    let mut worst: Option<(f64, f64)> = None;
    for &d in &dims {
        let rows = lemma_sweep(d, p.samples, c.seed);
        let s = summarize(d, &rows);
        pass &= s.regime_violations == 0 && s.around_violations == 0 && s.oracle_disagreements == 0;
        for r in &rows {
            for b in [&r.regime_check, &r.around_check] {
                if worst.is_none_or(|(l, h)| b.ln_lhs - b.ln_rhs > l - h) {
                    worst = Some((b.ln_lhs, b.ln_rhs));
                }
            }
        }
        let block = sweep_csv(&rows);
        if csv.is_empty() {
            csv = block;
        } else {
            csv.extend(block.lines().skip(1).flat_map(|l| [l, "\n"]));
        }
        summaries.push(s);
    }
    let mut report = Report::new(c.command.theorem(), params_json(&p, c.seed));
    if let Some((l, h)) = worst {
        report.lhs = Some(l);
        report.rhs = Some(h);
        report.ratio = Some((l - h).exp());
    }
    report.pass = pass;
    report.diagnostics =
        json!({ "sides": "natural logarithms of the worst case", "summaries": summaries });
    Ok(Outcome {
        report,
        files: vec![("data.csv".into(), csv)],
    })
}

// ---------------------------------------------------------- observability

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilityParams {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_obs_samples")]
    pub samples: usize,
    /// fixed time; drawn from `[t_min, t_max]` when absent
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "one", rename = "N")]
    pub n: usize,
    /// cube centres per datum for the pointwise bound
    #[serde(default = "default_centers")]
    pub centers: usize,
    #[serde(default = "default_max_bumps")]
    pub max_bumps: usize,
    /// bump centres lie in `[-reach, reach]^d`
    #[serde(default = "default_reach")]
    pub reach: f64,
}

fn one() -> usize {
    1
}
fn default_obs_samples() -> usize {
    200
}
fn default_t_min() -> f64 {
    0.1
}
fn default_t_max() -> f64 {
    5.0
}
fn default_centers() -> usize {
    5
}
fn default_max_bumps() -> usize {
    4
}
fn default_reach() -> f64 {
    3.0
}

/// Grid for random-bump data at times up to 5: `[-34, 34]^d`, spacing 1/10
/// in one dimension and 1/4 in two, refined to a multiple of `N`.
pub fn observability_grid(d: usize, n: usize) -> Result<GridSpec> {
    let base: usize = if d == 1 { 10 } else { 4 };
    let per_unit = base.div_ceil(n) * n;
    GridSpec::with_resolution(d, 34, per_unit)
}

fn random_datum(
    spec: GridSpec,
    seed: u64,
    labels: &[u64],
    max_bumps: usize,
    reach: f64,
) -> GridFunction {
    let mut rng = stream(seed, labels);
    bumps_on_grid(spec, &random_bumps(&mut rng, spec.dim(), max_bumps, reach))
}

fn draw_time(seed: u64, labels: &[u64], fixed: Option<f64>, lo: f64, hi: f64) -> f64 {
    fixed.unwrap_or_else(|| stream(seed, labels).gen_range(lo..=hi))
}

fn validate_times(fixed: Option<f64>, lo: f64, hi: f64) -> Result<()> {
    if let Some(t) = fixed {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("t must be positive, got {t}")));
        }
    } else if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Config(format!(
            "need 0 < t_min <= t_max, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn verify_observability(c: &RunConfig) -> Result<Outcome> {
    let p: ObservabilityParams = parse(&c.params)?;
    check_dim(p.dim, &[1, 2])?;
    validate_times(p.t, p.t_min, p.t_max)?;
    if p.n == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    let spec = observability_grid(p.dim, p.n)?;
    let window = largest_window(&spec, p.n)?;
    let unit = largest_window(&spec, 1)?;
    let d = p.dim as u64;
    let mut csv =
        String::from("index,t,lhs,rhs_sum,constant,ratio,pass,scaling_relative_difference\n");
    let mut pw_csv = String::from("index,t,center,max_in_cube,lattice_sum,constant,ratio,pass\n");
    let mut worst: Option<ObservabilityReport> = None;
    let mut failures = 0;
    let mut max_scaling_gap = 0.0_f64;
    let mut pointwise_checks = 0;
    let mut pointwise_failures = 0;
    let mut max_pointwise_ratio = 0.0_f64;
    let kmax = (p.reach.ceil() as i64 + 2).min(unit.radius() as i64 - 1);
    for i in 0..p.samples {
        let u0 = random_datum(spec, c.seed, &[0x6f62, d, i as u64], p.max_bumps, p.reach);
        let t = draw_time(c.seed, &[0x74, d, i as u64], p.t, p.t_min, p.t_max);
        let r = if p.n == 1 {
            check_observability_free(&u0, t, &window)?
        } else {
            check_observability_scaled(&u0, t, &window)?
        };
        let gap = r.scaling.as_ref().map(|s| s.relative_difference);
        if let Some(g) = gap {
            max_scaling_gap = max_scaling_gap.max(g);
        }
        if !r.pass {
            failures += 1;
        }
        csv.push_str(&format!(
            "{i},{t},{},{},{},{},{},{}\n",
            r.lhs,
            r.rhs_sum,
            r.bound_constant,
            r.ratio,
            r.pass,
            gap.map(|g| g.to_string()).unwrap_or_default()
        ));
        let mut rng = stream(c.seed, &[0x7077, d, i as u64]);
        let centers: Vec<Vec<i64>> = (0..p.centers)
            .map(|_| (0..p.dim).map(|_| rng.gen_range(-kmax..=kmax)).collect())
            .collect();
        for (k, b) in centers
            .iter()
            .zip(pointwise_solution_bounds(&u0, t, &centers, &unit)?)
        {
            pointwise_checks += 1;
            pointwise_failures += usize::from(!b.pass);
            max_pointwise_ratio = max_pointwise_ratio.max(b.ratio);
            let kk: Vec<String> = k.iter().map(|v| v.to_string()).collect();
            pw_csv.push_str(&format!(
                "{i},{t},{},{},{},{},{},{}\n",
                kk.join(" "),
                b.max_in_cube,
                b.lattice_sum,
                b.constant,
                b.ratio,
                b.pass
            ));
        }
        if worst.as_ref().is_none_or(|w| r.ratio > w.ratio) {
            worst = Some(r);
        }
    }
    let scaling_ok = p.n == 1 || max_scaling_gap <= OBSERVABILITY_TOLERANCE;
    let mut report = Report::new(c.command.theorem(), params_json(&p, c.seed));
    if let Some(w) = &worst {
        report = report.sides(w.lhs, w.bound_constant * w.rhs_sum, w.bound_constant);
    }
    report.pass = failures == 0 && pointwise_failures == 0 && scaling_ok;
    report.diagnostics = json!({
        "grid": spec,
        "window_radius": window.radius(),
        "instances": p.samples,
        "failures": failures,
        "max_ratio": worst.as_ref().map(|w| w.ratio),
        "worst": worst,
        "max_scaling_relative_difference": (p.n > 1).then_some(max_scaling_gap),
        "pointwise": {
            "checks": pointwise_checks,
            "failures": pointwise_failures,
            "max_ratio": max_pointwise_ratio,
        },
    });
    Ok(Outcome {
        report,
        files: vec![("data.csv".into(), csv), ("pointwise.csv".into(), pw_csv)],
    })
}

// -------------------------------------------------------------- potential

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_potential_samples")]
    pub samples: usize,
    /// one potential, or the default family when absent
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_potential_t_max")]
    pub t_max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_max_bumps")]
    pub max_bumps: usize,
    #[serde(default = "default_reach")]
    pub reach: f64,
}

fn default_potential_samples() -> usize {
    50
}
fn default_potential_t_max() -> f64 {
    2.0
}
fn default_steps() -> usize {
    32
}

/// `V = 0`, `V = 0.5` and `V = cos(x_1) ... cos(x_d)`.
pub fn default_potential_family() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::Zero,
        PotentialSpec::Constant { c: 0.5 },
        PotentialSpec::Cosine {
            amplitude: 1.0,
            frequency: 1.0,
        },
    ]
}

/// Largest relative gap between the potential constant with vanishing `c1`,
/// `c3` and `(4 pi)^d` times the free constant, over a few `(d, t)`.
pub fn free_collapse_gap() -> Result<f64> {
    let b = KernelBounds::new(1e-12, 4.0, 1e-12, 4.0)?;
    let mut worst = 0.0_f64;
    for d in 1..=3 {
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let pc = observability_constant_potential(&b, d, t)?;
            let free =
                (4.0 * std::f64::consts::PI).powi(d as i32) * observability_constant_free(d, t)?;
            worst = worst.max((pc.constant / free - 1.0).abs());
        }
    }
    Ok(worst)
}

fn verify_potential(c: &RunConfig) -> Result<Outcome> {
    let p: PotentialParams = parse(&c.params)?;
    check_dim(p.dim, &[1, 2])?;
    validate_times(p.t, p.t_min, p.t_max)?;
    let family = p
        .potential
        .map(|v| vec![v])
        .unwrap_or_else(default_potential_family);
    let spec = observability_grid(p.dim, 1)?;
    let window = largest_window(&spec, 1)?;
    let d = p.dim as u64;
    let mut csv = String::from("potential,index,t,lattice_time,lhs,rhs_sum,constant,ratio,pass\n");
    let mut failures = 0;
    let mut worst: Option<ObservabilityReport> = None;
    let mut per_potential = Vec::new();
    for (j, v) in family.iter().enumerate() {
        let pot = Potential::from_spec(*v);
        let label = serde_json::to_string(v)?.replace(',', ";");
        let mut max_ratio = 0.0_f64;
        for i in 0..p.samples {
            let u0 = random_datum(spec, c.seed, &[0x706f, d, i as u64], p.max_bumps, p.reach);
            let t = draw_time(
                c.seed,
                &[0x7074, d, j as u64, i as u64],
                p.t,
                p.t_min,
                p.t_max,
            );
            let r = check_observability_potential_with(&u0, &pot, t, &window, p.steps)?;
            failures += usize::from(!r.pass);
            max_ratio = max_ratio.max(r.ratio);
            csv.push_str(&format!(
                "\"{label}\",{i},{t},{},{},{},{},{},{}\n",
                r.lattice_time, r.lhs, r.rhs_sum, r.bound_constant, r.ratio, r.pass
            ));
            if worst.as_ref().is_none_or(|w| r.ratio > w.ratio) {
                worst = Some(r);
            }
        }
        per_potential.push(json!({ "potential": v, "max_ratio": max_ratio }));
    }
    let collapse = free_collapse_gap()?;
    let mut report = Report::new(c.command.theorem(), params_json(&p, c.seed));
    if let Some(w) = &worst {
        report = report.sides(w.lhs, w.bound_constant * w.rhs_sum, w.bound_constant);
    }
    report.pass = failures == 0 && collapse <= OBSERVABILITY_TOLERANCE;
    report.diagnostics = json!({
        "grid": spec,
        "failures": failures,
        "per_potential": per_potential,
        "worst": worst,
        "free_collapse_relative_gap": collapse,
    });
    Ok(Outcome {
        report,
        files: vec![("data.csv".into(), csv)],
    })
}

// --------------------------------------------------------- counterexample

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    #[serde(default = "default_t_final", rename = "T")]
    pub t_final: f64,
    #[serde(default = "one", rename = "N")]
    pub n: usize,
    #[serde(default = "one")]
    pub dim: usize,
    /// also run the evolution against the closed form
    #[serde(default = "yes")]
    pub pipeline: bool,
}

fn default_t_final() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

fn counterexample(c: &RunConfig) -> Result<Outcome> {
    let p: CounterexampleParams = parse(&c.params)?;
    check_dim(p.dim, &[1, 2])?;
    let r = check_epsilon_necessity(p.t_final, p.n, p.dim)?;
    let pipeline = if p.pipeline {
        Some(counterexample_pipeline(p.t_final, p.n, p.dim)?)
    } else {
        None
    };
    let cx = crate::observability::build_counterexample(p.t_final, p.n, p.dim)?;
    let lattice = largest_window(cx.u_t.spec(), p.n)?;
    let mut csv = String::from("n,x,u_final\n");
    for (i, v) in cx
        .u_t
        .sample_on_lattice(&lattice)?
        .values()
        .iter()
        .enumerate()
    {
        let n: Vec<String> = lattice.index(i).iter().map(|k| k.to_string()).collect();
        let x: Vec<String> = lattice.point(i).iter().map(|k| k.to_string()).collect();
        csv.push_str(&format!("{},{},{v}\n", n.join(" "), x.join(" ")));
    }
    let mut report =
        Report::new(c.command.theorem(), params_json(&p, c.seed)).sides(r.lhs, r.rhs, 1.0);
    report.pass = r.pass && pipeline.as_ref().is_none_or(|q| q.pass);
    report.diagnostics = json!({
        "necessity": r,
        "pipeline": pipeline,
        "pipeline_tolerance": PIPELINE_TOLERANCE,
    });
    Ok(Outcome {
        report,
        files: vec![("data.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------- harnack

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackParams {
    #[serde(default = "one")]
    pub dim: usize,
    /// one `M`, or 1, 5 and 20 when absent
    #[serde(default, rename = "M")]
    pub m: Option<f64>,
    /// one time, or 0.5 and 1 when absent
    #[serde(default)]
    pub t: Option<f64>,
    /// step of the search for the first `M` that breaks the cube constant
    #[serde(default = "default_harnack_step")]
    pub step: f64,
    #[serde(default = "default_harnack_max")]
    pub max_m: f64,
}

fn default_harnack_step() -> f64 {
    0.25
}
fn default_harnack_max() -> f64 {
    400.0
}

fn harnack(c: &RunConfig) -> Result<Outcome> {
    let p: HarnackParams = parse(&c.params)?;
    if p.dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let ms = p.m.map(|m| vec![m]).unwrap_or_else(|| vec![1.0, 5.0, 20.0]);
    let ts = p.t.map(|t| vec![t]).unwrap_or_else(|| vec![0.5, 1.0]);
    let mut csv = String::from("M,t,u_at_x0,u_at_origin,ratio,growth_floor,growth_holds,harnack_constant,harnack_violated\n");
    let mut growth_ok = true;
    let mut thresholds = Vec::new();
    let mut witness_ok = true;
    let mut rows = Vec::new();
    let push = |r: &crate::observability::HarnackReport, csv: &mut String| {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.m,
            r.t,
            r.u_at_x0,
            r.u_at_origin,
            r.ratio,
            r.growth_floor,
            r.growth_holds,
            r.harnack_constant,
            r.harnack_violated
        ));
    };
    for &t in &ts {
        for &m in &ms {
            let r = harnack_counterexample(m, t, p.dim)?;
            growth_ok &= r.growth_holds;
            push(&r, &mut csv);
            rows.push(r);
        }
        match harnack_threshold(t, p.dim, p.step, p.max_m)? {
            Some(m) => {
                let r = harnack_counterexample(m, t, p.dim)?;
                witness_ok &= r.harnack_violated && r.growth_holds;
                push(&r, &mut csv);
                thresholds.push(json!({ "t": t, "M": m, "ratio": r.ratio, "harnack_constant": r.harnack_constant }));
            }
            None => {
                witness_ok = false;
                thresholds.push(json!({ "t": t, "M": null }));
            }
        }
    }
    let pipeline = if p.dim == 1 {
        let spec = default_pipeline_grid();
        ts.iter()
            .map(|&t| harnack_pipeline(2.0, t, spec))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let pipeline_ok = pipeline.iter().all(|q| q.sup_error <= PIPELINE_TOLERANCE);
    let mut report = Report::new(c.command.theorem(), params_json(&p, c.seed));
    if let Some(r) = rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)) {
        report = report.sides(r.u_at_x0, r.u_at_origin, r.harnack_constant);
    }
    report.pass = growth_ok && witness_ok && pipeline_ok;
    report.diagnostics = json!({
        "growth_holds_everywhere": growth_ok,
        "thresholds": thresholds,
        "pipeline": pipeline,
        "rows": rows,
    });
    Ok(Outcome {
        report,
        files: vec![("data.csv".into(), csv)],
    })
}

// ---------------------------------------------------------- kernel bounds

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBoundParams {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    /// one time, or 0.25, 0.5, 1 and 2 when absent
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_centers")]
    pub sources: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

/// `[-16, 16]` with 1025 nodes, or `[-12, 12]^2` with 161 per axis.
pub fn kernel_grid(d: usize) -> Result<GridSpec> {
    match d {
        1 => GridSpec::new(1, 16.0, 1025),
        _ => GridSpec::new(d, 12.0, 161),
    }
}

fn kernel_bounds(c: &RunConfig) -> Result<Outcome> {
    let p: KernelBoundParams = parse(&c.params)?;
    check_dim(p.dim, &[1, 2])?;
    let family = p
        .potential
        .map(|v| vec![v])
        .unwrap_or_else(default_potential_family);
    let times =
        p.t.map(|t| vec![t])
            .unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0]);
    let spec = kernel_grid(p.dim)?;
    let mut rng = stream(c.seed, &[0x6b62, p.dim as u64]);
    let sources: Vec<Vec<f64>> = (0..p.sources)
        .map(|_| (0..p.dim).map(|_| rng.gen_range(-3.0..=3.0)).collect())
        .collect();
    let mut csv =
        String::from("potential,t,source,lower_margin,upper_margin,checked_points,violations\n");
    let mut total = 0;
    let mut reports = Vec::new();
    let mut min_margin = f64::INFINITY;
    for v in &family {
        let pot = Potential::from_spec(*v);
        let bounds = suggest_bounds_for_bounded_potential(pot.sup_bound(), p.dim)?;
        let r = check_two_sided_bounds(&pot, &bounds, &times, &sources, &spec, p.steps)?;
        total += r.total_violations;
        let label = serde_json::to_string(v)?.replace(',', ";");
        for e in &r.entries {
            min_margin = min_margin.min(e.lower_margin.min(e.upper_margin));
            let src: Vec<String> = e.source.iter().map(|x| x.to_string()).collect();
            csv.push_str(&format!(
                "\"{label}\",{},{},{},{},{},{}\n",
                e.t,
                src.join(" "),
                e.lower_margin,
                e.upper_margin,
                e.checked_points,
                e.violations
            ));
        }
        reports.push(json!({ "potential": v, "report": r }));
    }
    let mut report = Report::new(c.command.theorem(), params_json(&p, c.seed));
    report.ratio = Some(min_margin);
    report.pass = total == 0;
    report.diagnostics = json!({
        "grid": spec,
        "total_violations": total,
        "min_margin": min_margin,
        "margin": "min over checked points of K/lower and upper/K; >= 1 means no violation",
        "potentials": reports,
    });
    Ok(Outcome {
        report,
        files: vec![("data.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------- control

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_control_half_width")]
    pub half_width: usize,
    /// nodes per axis, `2 L n + 1` for some integer `n`; 20 per unit when absent
    #[serde(default)]
    pub points_per_axis: Option<usize>,
    #[serde(default = "default_t_final", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_ladder: Option<Vec<f64>>,
    /// window radius in lattice units; `ceil(L) - 2` when absent
    #[serde(default)]
    pub lattice_radius: Option<usize>,
    #[serde(default = "one", rename = "N")]
    pub n: usize,
    /// random mixed-sign datum drawn from the run seed when absent
    #[serde(default)]
    pub y0: Option<DatumSpec>,
    /// pointwise tolerance for `min y(T) >= -delta max(1, max |y(T)|)`
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub solver: Option<MinimizeOptions>,
}

fn default_control_half_width() -> usize {
    10
}
fn default_tau() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    1e-2
}
fn default_probes() -> usize {
    50
}

/// Everything the control command checks, for one problem.
#[derive(Debug, Clone, Serialize)]
pub struct ControlSummary {
    pub control_norm: f64,
    pub min_final_value: f64,
    pub weak_form_pass: bool,
    pub pointwise_pass: bool,
    pub converged: bool,
    pub duality_max_error: f64,
    pub duality_pass: bool,
    /// worst `value / scale` of the optimality inequality over the probes
    pub euler_worst: f64,
    pub euler_pass: bool,
    pub uniqueness: crate::control::UniquenessCheck,
    pub chain_pass: bool,
    pub gradient_check_worst: f64,
    pub gradient_pass: bool,
    pub pass: bool,
}

/// Relative tolerance of the finite-difference gradient check.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;

/// Problem, ladder and checks for the control command.
pub fn solve_control(
    p: &ControlParams,
    seed: u64,
) -> Result<(
    ControlProblem,
    Vec<crate::control::LadderRung>,
    ControlSummary,
)> {
    check_dim(p.dim, &[1, 2])?;
    if p.n == 0 || p.half_width == 0 {
        return Err(Error::Config("N and half_width must be positive".into()));
    }
    let spec = match p.points_per_axis {
        Some(m) => GridSpec::new(p.dim, p.half_width as f64, m)?,
        None => GridSpec::with_resolution(p.dim, p.half_width, 20)?,
    };
    let radius = p
        .lattice_radius
        .unwrap_or(p.half_width.saturating_sub(2) * p.n);
    let window = LatticeWindow::new(p.dim, radius, p.n)?;
    let ladder = match (&p.epsilon_ladder, p.epsilon) {
        (Some(l), _) => l.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => DEFAULT_LADDER.to_vec(),
    };
    let datum = p.y0.clone().unwrap_or(DatumSpec::RandomMixed { seed });
    let y0 = datum.sample(spec)?;
    let first = *ladder
        .first()
        .ok_or_else(|| Error::Config("epsilon ladder is empty".into()))?;
    let base = ControlProblem::new(y0, p.t_final, p.tau, first, window)?;
    let options = p.solver.unwrap_or_default();
    let rungs = solve_ladder(&base, &ladder, &options)?;
    let last = &rungs.last().expect("nonempty ladder").result;
    let problem = base.with_epsilon(last.epsilon)?;
    let v = synthesize_control(&problem, last)?;

    let probes = random_probes(&spec, p.probes, seed);
    let sign = verify_sign_controllability(&problem, last, p.delta, &probes)?;
    let mut duality_max_error = 0.0_f64;
    let mut duality_pass = true;
    let mut euler_worst = f64::INFINITY;
    let mut euler_pass = true;
    for psi in &probes {
        let dc = duality_identity(&problem, &v, psi)?;
        duality_max_error = duality_max_error.max(dc.error);
        duality_pass &= dc.pass;
        let e = euler_inequality(&problem, last, psi)?;
        euler_pass &= e.pass;
        if e.scale > 0.0 {
            euler_worst = euler_worst.min(e.value / e.scale);
        }
    }
    let uniqueness = uniqueness_check(&problem, last, &options, seed)?;
    let chain_pass = rungs.iter().all(|r| r.chain.pass()) && norm_chain(&problem, last)?.pass();
    let directions = crate::control::random_directions(&spec, 10, seed);
    let at = probes
        .first()
        .cloned()
        .unwrap_or_else(|| GridFunction::constant(spec, 1.0));
    let gradient_check_worst = crate::control::gradient_check(&problem, &at, &directions, 1e-5)?;
    let gradient_pass = gradient_check_worst <= GRADIENT_TOLERANCE;
    let converged = rungs.iter().all(|r| r.result.converged);
    let pass = sign.weak_form_pass
        && converged
        && duality_pass
        && euler_pass
        && uniqueness.pass
        && chain_pass
        && gradient_pass;
    let summary = ControlSummary {
        control_norm: v.l2_norm(),
        min_final_value: apply_control(&problem, &v)?.min(),
        weak_form_pass: sign.weak_form_pass,
        pointwise_pass: sign.pointwise_pass,
        converged,
        duality_max_error,
        duality_pass,
        euler_worst,
        euler_pass,
        uniqueness,
        chain_pass,
        gradient_check_worst,
        gradient_pass,
        pass,
    };
    Ok((problem, rungs, summary))
}

fn control(c: &RunConfig) -> Result<Outcome> {
    let p: ControlParams = parse(&c.params)?;
    let (problem, rungs, summary) = solve_control(&p, c.seed)?;
    let last = &rungs.last().expect("nonempty ladder").result;
    let sign = verify_sign_controllability(
        &problem,
        last,
        p.delta,
        &random_probes(problem.spec(), p.probes, c.seed),
    )?;

    let mut data = String::from("epsilon,control_norm,min_final_value,objective,iterations,kkt_residual,converged,uniform_bound\n");
    let mut trace = String::from("epsilon,iteration,objective\n");
    for r in &rungs {
        let m = &r.result;
        data.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.epsilon,
            m.control_norm,
            m.min_final_value,
            m.objective,
            m.iterations,
            m.kkt_residual,
            m.converged,
            r.chain.uniform_bound
        ));
        for (k, f) in m.objective_trace.iter().enumerate() {
            trace.push_str(&format!("{},{k},{f}\n", m.epsilon));
        }
    }
    let mut control_csv = String::from("index,value\n");
    for (i, v) in last.v.values().iter().enumerate() {
        let n: Vec<String> = problem
            .window()
            .index(i)
            .iter()
            .map(|k| k.to_string())
            .collect();
        control_csv.push_str(&format!("{},{v}\n", n.join(" ")));
    }
    let chain = &rungs.last().expect("nonempty ladder").chain;
    let mut report = Report::new(c.command.theorem(), params_json(&p, c.seed)).sides(
        summary.control_norm,
        chain.uniform_bound,
        2.0 * chain.observability_root,
    );
    report.pass = summary.pass;
    report.diagnostics = json!({
        "control_norm": summary.control_norm,
        "min_final_value": summary.min_final_value,
        "objective_trace_path": "objective_trace.csv",
        "control_path": "control.csv",
        "pass": summary.pass,
        "checks": summary,
        "sign": sign,
        "ladder": rungs.iter().map(|r| json!({
            "epsilon": r.result.epsilon,
            "objective": r.result.objective,
            "iterations": r.result.iterations,
            "kkt_residual": r.result.kkt_residual,
            "stop": r.result.stop,
            "converged": r.result.converged,
            "chain": r.chain,
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        report,
        files: vec![
            ("data.csv".into(), data),
            ("objective_trace.csv".into(), trace),
            ("control.csv".into(), control_csv),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command, params: Value) -> RunConfig {
        RunConfig::new(command, params, 7, "unused").unwrap()
    }

    #[test]
    fn every_command_explains_itself() {
        for c in Command::ALL {
            assert!(c.explain().len() > 100, "{}", c.name());
            let json = serde_json::to_value(c).unwrap();
            assert_eq!(json, json!(c.name()));
        }
    }

    #[test]
    fn unknown_parameters_are_usage_errors() {
        let e = execute(&config(Command::VerifyLemmas, json!({ "sampels": 3 }))).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert_eq!(exit_code_for(&e), 2);
        let bad_dim = execute(&config(Command::Control, json!({ "dim": 4 }))).unwrap_err();
        assert_eq!(exit_code_for(&bad_dim), 2);
    }

    #[test]
    fn lemma_command_is_deterministic() {
        let c = config(Command::VerifyLemmas, json!({ "dim": 2, "samples": 50 }));
        let a = execute(&c).unwrap();
        let b = execute(&c).unwrap();
        assert!(a.report.pass);
        assert_eq!(a.files, b.files);
        let strip = |r: &Report| crate::report::comparable(&r.to_json().unwrap()).unwrap();
        assert_eq!(strip(&a.report), strip(&b.report));
        assert_eq!(a.files[0].1.lines().count(), 51);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"dim": 1, "samples": 10, "seed": 3}"#).unwrap();
        let f = Flags {
            config: Some(path),
            samples: Some(20),
            out: dir.path().into(),
            ..Default::default()
        };
        let c = RunConfig::from_flags(Command::VerifyLemmas, f).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.params["samples"], json!(20));
        assert!(!c.params.contains_key("seed"));
    }

    #[test]
    fn numerical_health_maps_to_three() {
        let e = Error::Truncation {
            message: "x".into(),
            required_radius: None,
        };
        assert_eq!(exit_code_for(&e), 3);
        assert_eq!(exit_code_for(&Error::NotConverged("x".into())), 3);
    }

    #[test]
    fn failed_run_still_writes_a_report() {
        let dir = tempfile::tempdir().unwrap();
        let c =
            RunConfig::new(Command::Counterexample, json!({ "T": -1.0 }), 0, dir.path()).unwrap();
        assert_eq!(run(&c), 2);
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["pass"], json!(false));
        assert!(v["diagnostics"]["error"].is_string());
    }

    #[test]
    fn observability_grid_is_aligned() {
        for n in [1, 2, 4] {
            let spec = observability_grid(1, n).unwrap();
            assert!(spec.aligned_with(&largest_window(&spec, n).unwrap()));
        }
    }
}
