//! Lattice observability inequalities and the examples that bound their reach.
//!
//! For nonnegative data the `L^2` mass of a heat solution at time `t` is
//! controlled by the sum of its squared values on the integer lattice:
//!
//! ```text
//! int u(t,x)^2 dx <= 36^d e^{2d/t} sum_{n in Z^d} u(t,n)^2
//! ```
//!
//! The submodules hold the sign-changing counterexample ([`counterexample`]),
//! its extended-precision evolution ([`precise`]) and the equal-time Harnack
//! failure ([`harnack`]).

pub mod counterexample;
pub mod harnack;
pub mod precise;

pub use counterexample::{
    build_counterexample, build_counterexample_on, check_epsilon_necessity, counterexample_grid,
    counterexample_pipeline, final_state_1d, initial_state_1d, Counterexample,
    EpsilonNecessityReport, FrequencyWindow, PipelineReport, PIPELINE_TOLERANCE,
};
pub use harnack::{
    default_pipeline_grid, harnack_constant, harnack_counterexample, harnack_pipeline,
    harnack_solution, harnack_threshold, HarnackPipelineReport, HarnackReport,
};

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LatticeWindow};
use crate::kernel::{
    heat_evolve, potential_evolve, suggest_bounds_for_bounded_potential, Evolved, KernelBounds,
    Potential, TruncationCheck,
};

/// Slack on `ratio <= 1`.
pub const OBSERVABILITY_TOLERANCE: f64 = 1e-9;
/// Lattice points outside the window may carry at most this fraction of the sum.
pub const WINDOW_TAIL_TOLERANCE: f64 = 1e-12;
/// Nodes below this fraction of `max |u0|` are ignored when locating the datum.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;
/// Strang substeps used by [`check_observability_potential`].
pub const DEFAULT_SPLITTING_STEPS: usize = 32;

#[derive(Debug, Clone, Serialize)]
pub struct TruncationDiagnostics {
    /// box-boundary check of the evolved field(s)
    pub boundary: TruncationCheck,
    /// bound on the squared lattice values outside the window
    pub window_tail_bound: f64,
    pub window_radius: usize,
    /// smallest radius meeting the tail rule, if one was found
    pub required_radius: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingOracle {
    /// ratio of the rescaled problem checked with `N = 1`
    pub rescaled_ratio: f64,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservabilityReport {
    pub dim: usize,
    /// time of the integral
    pub t: f64,
    /// time of the lattice samples
    pub lattice_time: f64,
    pub spacing_inverse: usize,
    /// `int u(t)^2`
    pub lhs: f64,
    /// `sum_n u(lattice_time, n/N)^2`
    pub rhs_sum: f64,
    pub bound_constant: f64,
    /// `lhs / (bound_constant * rhs_sum)`; 0 when both sides vanish
    pub ratio: f64,
    pub pass: bool,
    /// the datum was nonpositive and has been negated
    pub negated: bool,
    pub truncation: TruncationDiagnostics,
    pub scaling: Option<ScalingOracle>,
}

/// `36^d e^{2d/t}`.
pub fn observability_constant_free(d: usize, t: f64) -> Result<f64> {
    positive_time(t)?;
    let d = d as f64;
    Ok(36f64.powf(d) * (2.0 * d / t).exp())
}

/// `N^{-d} 36^d e^{2d/(N^2 t)}`, the free constant transported by the parabolic
/// scaling `w(s,y) = u(s/N^2, y/N)`.
pub fn observability_constant_scaled(d: usize, t: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain(
            "lattice spacing inverse N must be positive".into(),
        ));
    }
    let nf = n as f64;
    Ok(nf.powf(-(d as f64)) * observability_constant_free(d, nf * nf * t)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialConstant {
    pub constant: f64,
    /// time `c4 t / c2` at which the lattice is sampled
    pub lattice_time: f64,
}

/// Constant for `int u(t)^2 <= C sum_n u(s,n)^2`, `s = c4 t / c2`, for
/// solutions of `u_t = Delta u + V u` whose kernel obeys the two-sided bounds:
///
/// ```text
/// C = (c4 pi)^d e^{2 c3 (2 - c2/c4)} (36 c4/c2)^d e^{2 c3 (t+1)} e^{2 c1 (s+1)} e^{8d/(c2 s)}
/// ```
pub fn observability_constant_potential(
    bounds: &KernelBounds,
    d: usize,
    t: f64,
) -> Result<PotentialConstant> {
    positive_time(t)?;
    let KernelBounds { c1, c2, c3, c4 } = *bounds;
    let df = d as f64;
    let s = c4 * t / c2;
    let log = df * (c4 * PI).ln()
        + 2.0 * c3 * (2.0 - c2 / c4)
        + df * (36.0 * c4 / c2).ln()
        + 2.0 * c3 * (t + 1.0)
        + 2.0 * c1 * (s + 1.0)
        + 8.0 * df / (c2 * s);
    Ok(PotentialConstant {
        constant: log.exp(),
        lattice_time: s,
    })
}

fn positive_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Accepts `u0 >= 0` or `u0 <= 0` (returned negated); rejects mixed signs.
pub(crate) fn one_signed(u0: &GridFunction) -> Result<(GridFunction, bool)> {
    let (hi, lo) = (u0.max().max(0.0), (-u0.min()).max(0.0));
    if lo <= SUPPORT_THRESHOLD * hi || hi == 0.0 && lo == 0.0 {
        Ok((u0.clone(), false))
    } else if hi <= SUPPORT_THRESHOLD * lo {
        Ok((u0.scaled(-1.0), true))
    } else {
        Err(Error::Hypothesis(format!(
            "datum changes sign (max {hi:e}, min {:e}); the inequality needs one-signed data",
            -lo
        )))
    }
}

/// Gaussian tail bound for lattice values outside a window.
///
/// With `S` the bounding box of the datum, `|u(t,x)| <= a (4 pi t)^{-d/2} ||u0||_1
/// e^{-dist(x,S)^2/(4t)}`, where `a` bounds any extra amplification (1 for the
/// free flow). Summing the square over lattice points beyond radius `R`
/// factorizes by axis.
#[derive(Debug, Clone)]
pub struct WindowTail {
    prefactor: f64,
    t: f64,
    spacing_inverse: usize,
    support: Vec<(f64, f64)>,
}

impl WindowTail {
    pub fn new(
        u0: &GridFunction,
        t: f64,
        spacing_inverse: usize,
        amplification: f64,
    ) -> Result<Self> {
        let spec = u0.spec();
        let d = spec.dim();
        let peak = u0.max_abs();
        let mut support = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for (i, &v) in u0.values().iter().enumerate() {
            if v.abs() > SUPPORT_THRESHOLD * peak && v != 0.0 {
                for (k, x) in spec.point(i).into_iter().enumerate() {
                    support[k].0 = support[k].0.min(x);
                    support[k].1 = support[k].1.max(x);
                }
            }
        }
        let l1 = u0.map(f64::abs).integral()?;
        let prefactor = (amplification * l1).powi(2) * (4.0 * PI * t).powf(-(d as f64));
        Ok(Self {
            prefactor,
            t,
            spacing_inverse,
            support,
        })
    }

    /// Bound on `sum_{n outside window of radius R} u(t, n/N)^2`.
    pub fn bound(&self, radius: usize) -> f64 {
        if self.prefactor == 0.0 {
            return 0.0;
        }
        let r = radius as i64;
        let mut inside = Vec::with_capacity(self.support.len());
        let mut outside = Vec::with_capacity(self.support.len());
        for &(a, b) in &self.support {
            let term = |n: i64| {
                let p = n as f64 / self.spacing_inverse as f64;
                let dist = (a - p).max(p - b).max(0.0);
                (-dist * dist / (2.0 * self.t)).exp()
            };
            inside.push((-r..=r).map(term).sum::<f64>());
            let mut out = 0.0;
            for dir in [1i64, -1] {
                let mut n = dir * (r + 1);
                loop {
                    let v = term(n);
                    out += v;
                    let p = n as f64 / self.spacing_inverse as f64;
                    if (p > b && dir > 0 || p < a && dir < 0)
                        && v <= 1e-30 * out.max(f64::MIN_POSITIVE)
                    {
                        break;
                    }
                    n += dir;
                }
            }
            outside.push(out);
        }
        // prod(B + O) - prod(B), expanded to avoid cancellation
        let d = inside.len();
        let mut total = 0.0;
        for k in 0..d {
            let before: f64 = inside[..k].iter().product();
            let after: f64 = (k + 1..d).map(|j| inside[j] + outside[j]).product();
            total += before * outside[k] * after;
        }
        self.prefactor * total
    }

    /// Smallest radius whose tail is at most `target`.
    pub fn required_radius(&self, target: f64) -> Option<usize> {
        (0..=100_000usize).find(|&r| self.bound(r) <= target)
    }
}

fn window_diagnostics(
    tail: &WindowTail,
    w: &LatticeWindow,
    rhs_sum: f64,
    boundary: TruncationCheck,
) -> Result<TruncationDiagnostics> {
    let target = WINDOW_TAIL_TOLERANCE * rhs_sum;
    let window_tail_bound = tail.bound(w.radius());
    let required_radius = tail.required_radius(target);
    if window_tail_bound > target {
        return Err(Error::Truncation {
            message: format!(
                "lattice window of radius {} misses up to {window_tail_bound:e} of the sum {rhs_sum:e}",
                w.radius()
            ),
            required_radius,
        });
    }
    Ok(TruncationDiagnostics {
        boundary,
        window_tail_bound,
        window_radius: w.radius(),
        required_radius,
    })
}

fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn lattice_sum(u: &GridFunction, w: &LatticeWindow) -> Result<f64> {
    Ok(u.sample_on_lattice(w)?.norm_squared())
}

fn core_check(
    u0: &GridFunction,
    t: f64,
    w: &LatticeWindow,
    constant: f64,
) -> Result<ObservabilityReport> {
    positive_time(t)?;
    if w.dim() != u0.spec().dim() {
        return Err(Error::Shape("window and grid dimensions differ".into()));
    }
    let (u0, negated) = one_signed(u0)?;
    let Evolved { field, truncation } = heat_evolve(&u0, t)?;
    let lhs = field.l2_norm()?.powi(2);
    let rhs_sum = lattice_sum(&field, w)?;
    let tail = WindowTail::new(&u0, t, w.spacing_inverse(), 1.0)?;
    let truncation = window_diagnostics(&tail, w, rhs_sum, truncation)?;
    let ratio = ratio_of(lhs, constant * rhs_sum);
    Ok(ObservabilityReport {
        dim: w.dim(),
        t,
        lattice_time: t,
        spacing_inverse: w.spacing_inverse(),
        lhs,
        rhs_sum,
        bound_constant: constant,
        ratio,
        pass: ratio <= 1.0 + OBSERVABILITY_TOLERANCE,
        negated,
        truncation,
        scaling: None,
    })
}

/// Checks `int u(t)^2 <= 36^d e^{2d/t} sum_n u(t,n)^2` for one-signed data.
pub fn check_observability_free(
    u0: &GridFunction,
    t: f64,
    w: &LatticeWindow,
) -> Result<ObservabilityReport> {
    if w.spacing_inverse() != 1 {
        return Err(Error::Precondition(
            "the unscaled check uses the integer lattice (N = 1)".into(),
        ));
    }
    core_check(u0, t, w, observability_constant_free(w.dim(), t)?)
}

/// Checks the inequality on the lattice `Z^d / N` and cross-checks it against
/// the rescaled problem: the same nodal values on a box `N` times larger,
/// evolved for `N^2 t` and checked on `Z^d`.
pub fn check_observability_scaled(
    u0: &GridFunction,
    t: f64,
    w: &LatticeWindow,
) -> Result<ObservabilityReport> {
    let n = w.spacing_inverse();
    let d = w.dim();
    let mut report = core_check(u0, t, w, observability_constant_scaled(d, t, n)?)?;
    let spec = u0.spec();
    let stretched =
        crate::grid::GridSpec::new(d, spec.half_width() * n as f64, spec.points_per_axis())?;
    let w0 = GridFunction::from_values(stretched, u0.values().to_vec())?;
    let unit = LatticeWindow::new(d, w.radius(), 1)?;
    let nf = n as f64;
    let rescaled = check_observability_free(&w0, nf * nf * t, &unit)?;
    let relative_difference = if report.ratio == rescaled.ratio {
        0.0
    } else {
        (report.ratio - rescaled.ratio).abs() / report.ratio.abs().max(rescaled.ratio.abs())
    };
    report.scaling = Some(ScalingOracle {
        rescaled_ratio: rescaled.ratio,
        relative_difference,
    });
    Ok(report)
}

/// Checks `int u(t)^2 <= C sum_n u(s,n)^2` for `u_t = Delta u + V u`, with the
/// kernel bounds suggested for `|V| <= M` and the lattice sampled at
/// `s = c4 t / c2`.
pub fn check_observability_potential(
    u0: &GridFunction,
    v: &Potential,
    t: f64,
    w: &LatticeWindow,
) -> Result<ObservabilityReport> {
    check_observability_potential_with(u0, v, t, w, DEFAULT_SPLITTING_STEPS)
}

pub fn check_observability_potential_with(
    u0: &GridFunction,
    v: &Potential,
    t: f64,
    w: &LatticeWindow,
    steps: usize,
) -> Result<ObservabilityReport> {
    positive_time(t)?;
    let d = w.dim();
    if d != u0.spec().dim() {
        return Err(Error::Shape("window and grid dimensions differ".into()));
    }
    let bounds = suggest_bounds_for_bounded_potential(v.sup_bound(), d)?;
    let PotentialConstant {
        constant,
        lattice_time,
    } = observability_constant_potential(&bounds, d, t)?;
    let (u0, negated) = one_signed(&u0.clone())?;
    let at_t = potential_evolve(&u0, v, t, steps)?;
    let at_s = if lattice_time == t {
        at_t.clone()
    } else {
        potential_evolve(&u0, v, lattice_time, steps)?
    };
    let lhs = at_t.field.l2_norm()?.powi(2);
    let rhs_sum = lattice_sum(&at_s.field, w)?;
    let amplification = (v.sup_bound() * lattice_time).exp();
    let tail = WindowTail::new(&u0, lattice_time, w.spacing_inverse(), amplification)?;
    let boundary = TruncationCheck {
        boundary_ratio: at_t
            .truncation
            .boundary_ratio
            .max(at_s.truncation.boundary_ratio),
        warning: at_t.truncation.warning || at_s.truncation.warning,
    };
    let truncation = window_diagnostics(&tail, w, rhs_sum, boundary)?;
    let ratio = ratio_of(lhs, constant * rhs_sum);
    Ok(ObservabilityReport {
        dim: d,
        t,
        lattice_time,
        spacing_inverse: w.spacing_inverse(),
        lhs,
        rhs_sum,
        bound_constant: constant,
        ratio,
        pass: ratio <= 1.0 + OBSERVABILITY_TOLERANCE,
        negated,
        truncation,
        scaling: None,
    })
}

/// Largest window that fits inside the grid box with one node to spare.
pub fn largest_window(
    spec: &crate::grid::GridSpec,
    spacing_inverse: usize,
) -> Result<LatticeWindow> {
    let reach = (spec.half_width() - spec.spacing()) * spacing_inverse as f64;
    LatticeWindow::new(spec.dim(), reach.floor().max(0.0) as usize, spacing_inverse)
}
