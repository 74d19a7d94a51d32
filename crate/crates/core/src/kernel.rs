//! Heat semigroups on the grid.
//!
//! The free flow is realized as trapezoidal quadrature of the convolution with
//! `K(t,x,y) = (4 pi t)^(-d/2) exp(-|x-y|^2 / 4t)`. Because the kernel and the
//! trapezoidal weights both factor over the axes, the `d`-dimensional sum is
//! evaluated as `d` one-dimensional passes; [`heat_evolve_direct`] keeps the
//! unfactored `O(m^(2d))` sum as a reference.
//!
//! Potentials are bounded continuous functions; `e^{t(Delta+V)}` is
//! approximated by Strang splitting.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// Boundary-to-peak ratio above which a flow is flagged as truncated.
pub const TRUNCATION_TOLERANCE: f64 = 1e-14;

/// Smallest positive constant used where a bound constant would be zero.
pub const TINY_CONSTANT: f64 = 1e-12;

pub fn free_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    if x.len() != y.len() {
        return Err(Error::Shape("points of different dimension".into()));
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((4.0 * PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// One-dimensional free kernel at separation `r`.
#[inline]
pub(crate) fn kernel_1d(t: f64, r: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5) * (-r * r / (4.0 * t)).exp()
}

/// Boundary diagnostics attached to every evolved field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCheck {
    /// max |u| on the box boundary divided by max |u| overall (0 for u = 0).
    pub boundary_ratio: f64,
    pub warning: bool,
}

impl TruncationCheck {
    pub fn of(f: &GridFunction) -> Self {
        let spec = f.spec();
        let last = spec.points_per_axis() - 1;
        let peak = f.max_abs();
        let mut boundary = 0.0_f64;
        let mut idx = vec![0usize; spec.dim()];
        for &v in f.values() {
            if idx.iter().any(|&i| i == 0 || i == last) {
                boundary = boundary.max(v.abs());
            }
            spec.advance(&mut idx);
        }
        let boundary_ratio = if peak > 0.0 { boundary / peak } else { 0.0 };
        Self {
            boundary_ratio,
            warning: boundary_ratio > TRUNCATION_TOLERANCE,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            boundary_ratio: self.boundary_ratio.max(other.boundary_ratio),
            warning: self.warning || other.warning,
        }
    }
}

/// An evolved field plus the truncation diagnostics of input and output.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub field: GridFunction,
    pub truncation: TruncationCheck,
}

/// The discrete free heat operator for a fixed grid and time, reusable across
/// many applications.
#[derive(Debug, Clone)]
pub struct HeatPropagator {
    spec: GridSpec,
    t: f64,
    // m x m, row i holds K(t, x_i - x_j) w_j
    matrix: Vec<f64>,
}

impl HeatPropagator {
    pub fn new(spec: GridSpec, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("heat flow needs t > 0, got {t}")));
        }
        let m = spec.points_per_axis();
        let h = spec.spacing();
        let w = spec.axis_weights();
        let by_offset: Vec<f64> = (0..m).map(|k| kernel_1d(t, k as f64 * h)).collect();
        let mut matrix = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                matrix[i * m + j] = by_offset[i.abs_diff(j)] * w[j];
            }
        }
        Ok(Self { spec, t, matrix })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.spec() != &self.spec {
            return Err(Error::Shape(
                "propagator and field live on different grids".into(),
            ));
        }
        let mut values = u.values().to_vec();
        for axis in 0..self.spec.dim() {
            values = self.axis_pass(&values, axis);
        }
        GridFunction::from_values(self.spec, values)
    }

    fn axis_pass(&self, input: &[f64], axis: usize) -> Vec<f64> {
        let m = self.spec.points_per_axis();
        let d = self.spec.dim();
        let stride = m.pow((d - 1 - axis) as u32);
        let outer = m.pow(axis as u32);
        let mut out = vec![0.0; input.len()];
        let mut line = vec![0.0; m];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * m * stride + s;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = input[base + j * stride];
                }
                for i in 0..m {
                    let row = &self.matrix[i * m..(i + 1) * m];
                    out[base + i * stride] = row.iter().zip(&line).map(|(k, v)| k * v).sum();
                }
            }
        }
        out
    }
}

/// Free heat flow `e^{t Delta} u0` by convolution quadrature.
pub fn heat_evolve(u0: &GridFunction, t: f64) -> Result<Evolved> {
    let field = HeatPropagator::new(*u0.spec(), t)?.apply(u0)?;
    let truncation = TruncationCheck::of(u0).merge(TruncationCheck::of(&field));
    Ok(Evolved { field, truncation })
}

/// Unfactored `O(m^(2d))` tensor-product quadrature; reference for
/// [`heat_evolve`].
pub fn heat_evolve_direct(u0: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat flow needs t > 0, got {t}")));
    }
    let spec = *u0.spec();
    let w = spec.weights();
    let points: Vec<Vec<f64>> = (0..spec.len()).map(|i| spec.point(i)).collect();
    let values = points
        .iter()
        .map(|x| {
            points
                .iter()
                .zip(&w)
                .zip(u0.values())
                .map(|((y, wj), uj)| free_kernel(t, x, y).map(|k| k * wj * uj))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::from_values(spec, values)
}

/// Built-in bounded potentials, as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant {
        c: f64,
    },
    /// `amplitude * prod_i cos(frequency * x_i)`
    Cosine {
        amplitude: f64,
        frequency: f64,
    },
    /// `-depth * exp(-|x|^2 / width^2)`
    GaussianWell {
        depth: f64,
        width: f64,
    },
}

impl PotentialSpec {
    pub fn sup_bound(&self) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { c } => c.abs(),
            PotentialSpec::Cosine { amplitude, .. } => amplitude.abs(),
            PotentialSpec::GaussianWell { depth, .. } => depth.abs(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant { c } => c,
            PotentialSpec::Cosine {
                amplitude,
                frequency,
            } => amplitude * x.iter().map(|xi| (frequency * xi).cos()).product::<f64>(),
            PotentialSpec::GaussianWell { depth, width } => {
                let r2: f64 = x.iter().map(|xi| xi * xi).sum();
                -depth * (-r2 / (width * width)).exp()
            }
        }
    }
}

type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum PotentialKind {
    Builtin(PotentialSpec),
    Custom(PotentialFn),
}

/// A bounded potential `V` with a caller-certified bound `|V| <= M`.
#[derive(Clone)]
pub struct Potential {
    kind: PotentialKind,
    sup_bound: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Builtin(spec) => write!(f, "Potential({spec:?})"),
            PotentialKind::Custom(_) => write!(f, "Potential(custom, M = {})", self.sup_bound),
        }
    }
}

impl Potential {
    pub fn zero() -> Self {
        Self::from_spec(PotentialSpec::Zero)
    }

    pub fn from_spec(spec: PotentialSpec) -> Self {
        Self {
            sup_bound: spec.sup_bound(),
            kind: PotentialKind::Builtin(spec),
        }
    }

    pub fn custom(
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        sup_bound: f64,
    ) -> Result<Self> {
        if !(sup_bound >= 0.0 && sup_bound.is_finite()) {
            return Err(Error::Domain(format!(
                "sup bound must be finite and >= 0, got {sup_bound}"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Custom(Arc::new(f)),
            sup_bound,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Builtin(spec) => spec.eval(x),
            PotentialKind::Custom(f) => f(x),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn spec(&self) -> Option<PotentialSpec> {
        match &self.kind {
            PotentialKind::Builtin(spec) => Some(*spec),
            PotentialKind::Custom(_) => None,
        }
    }

    /// Samples `V` on the grid, checking finiteness and the certified bound.
    pub fn sample(&self, spec: &GridSpec) -> Result<GridFunction> {
        let slack = 1e-12 * (1.0 + self.sup_bound);
        let mut bad = None;
        let f = GridFunction::from_fn(*spec, |x| {
            let v = self.eval(x);
            if bad.is_none() && !(v.is_finite() && v.abs() <= self.sup_bound + slack) {
                bad = Some((x.to_vec(), v));
            }
            if v.is_finite() {
                v
            } else {
                0.0
            }
        });
        match bad {
            Some((x, v)) => Err(Error::Precondition(format!(
                "potential value {v} at {x:?} exceeds the certified bound {}",
                self.sup_bound
            ))),
            None => Ok(f),
        }
    }
}

/// `e^{t(Delta + V)} u0` by Strang splitting with `steps` substeps.
pub fn potential_evolve(u0: &GridFunction, v: &Potential, t: f64, steps: usize) -> Result<Evolved> {
    if steps == 0 {
        return Err(Error::Domain(
            "Strang splitting needs at least one step".into(),
        ));
    }
    let spec = *u0.spec();
    let dt = t / steps as f64;
    let heat = HeatPropagator::new(spec, dt)?;
    let vg = v.sample(&spec)?;
    let half: Vec<f64> = vg.values().iter().map(|&x| (0.5 * dt * x).exp()).collect();
    let full: Vec<f64> = vg.values().iter().map(|&x| (dt * x).exp()).collect();

    let multiply = |f: &GridFunction, by: &[f64]| {
        GridFunction::from_raw(
            spec,
            f.values().iter().zip(by).map(|(a, b)| a * b).collect(),
        )
    };
    let mut u = multiply(u0, &half);
    for step in 0..steps {
        u = heat.apply(&u)?;
        u = multiply(&u, if step + 1 == steps { &half } else { &full });
    }
    let field = GridFunction::from_values(spec, u.into_values())?;
    let truncation = TruncationCheck::of(u0).merge(TruncationCheck::of(&field));
    Ok(Evolved { field, truncation })
}

/// Approximate kernel column `x -> K_V(t, x, y)`.
#[derive(Debug, Clone)]
pub struct KernelColumn {
    pub field: GridFunction,
    pub sigma: f64,
    /// Set when the surrogate width is not small against `sqrt(t)` or is
    /// under-resolved by the grid.
    pub width_warning: bool,
    pub truncation: TruncationCheck,
}

/// Default width of the narrow Gaussian standing in for `delta_y`.
pub fn default_surrogate_width(spec: &GridSpec, t: f64) -> f64 {
    (4.0 * spec.spacing()).min(t.sqrt() / 10.0)
}

pub fn kernel_column(
    v: &Potential,
    t: f64,
    y: &[f64],
    steps: usize,
    spec: &GridSpec,
) -> Result<KernelColumn> {
    kernel_column_with_width(v, t, y, steps, spec, default_surrogate_width(spec, t))
}

/// The surrogate is the free kernel at time `sigma^2` centred at `y`; it is
/// then run for the remaining time `t - sigma^2`, so for `V = 0` the column is
/// the free kernel at time `t` up to quadrature error.
pub fn kernel_column_with_width(
    v: &Potential,
    t: f64,
    y: &[f64],
    steps: usize,
    spec: &GridSpec,
    sigma: f64,
) -> Result<KernelColumn> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel column needs t > 0, got {t}")));
    }
    if !spec.contains(y) {
        return Err(Error::Domain(format!(
            "source {y:?} lies outside the grid box"
        )));
    }
    let s2 = sigma * sigma;
    if !(sigma > 0.0) || s2 >= t {
        return Err(Error::Domain(format!(
            "surrogate width {sigma} incompatible with t = {t}"
        )));
    }
    let width_warning = sigma > t.sqrt() / 5.0 || sigma < 2.0 * spec.spacing();
    let surrogate = GridFunction::from_fn(*spec, |x| free_kernel(s2, x, y).unwrap_or(0.0));
    let evolved = potential_evolve(&surrogate, v, t - s2, steps)?;
    Ok(KernelColumn {
        field: evolved.field,
        sigma,
        width_warning,
        truncation: evolved.truncation,
    })
}

/// Constants of a two-sided Gaussian kernel estimate
/// `t^{-d/2} e^{-c1(t+1)} e^{-|x-y|^2/(c2 t)} <= K <= t^{-d/2} e^{c3(t+1)} e^{-|x-y|^2/(c4 t)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl KernelBounds {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        if [c1, c2, c3, c4]
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(Error::Domain(
                "kernel bound constants must be positive".into(),
            ));
        }
        if c2 > c4 {
            return Err(Error::Domain(format!(
                "kernel bounds need c2 <= c4, got {c2} > {c4}"
            )));
        }
        Ok(Self { c1, c2, c3, c4 })
    }

    pub fn lower(&self, d: usize, t: f64, r2: f64) -> f64 {
        t.powf(-(d as f64) / 2.0) * (-self.c1 * (t + 1.0)).exp() * (-r2 / (self.c2 * t)).exp()
    }

    pub fn upper(&self, d: usize, t: f64, r2: f64) -> f64 {
        t.powf(-(d as f64) / 2.0) * (self.c3 * (t + 1.0)).exp() * (-r2 / (self.c4 * t)).exp()
    }
}

/// Two-sided constants valid for every potential with `|V| <= M` in dimension
/// `d`, from `e^{-Mt} K_0 <= K_V <= e^{Mt} K_0`.
///
/// The envelopes carry `t^{-d/2}` rather than `(4 pi t)^{-d/2}`, so the lower
/// constant must absorb `(d/2) ln(4 pi)`; the upper side needs only `c3 = M`.
pub fn suggest_bounds_for_bounded_potential(m: f64, d: usize) -> Result<KernelBounds> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!(
            "potential bound must be finite and >= 0, got {m}"
        )));
    }
    let c1 = m + 0.5 * d as f64 * (4.0 * PI).ln();
    KernelBounds::new(c1, 4.0, m.max(TINY_CONSTANT), 4.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelBoundEntry {
    pub t: f64,
    pub source: Vec<f64>,
    /// min over checked points of K / lower envelope (>= 1 means no violation)
    pub lower_margin: f64,
    /// min over checked points of upper envelope / K
    pub upper_margin: f64,
    pub checked_points: usize,
    pub violations: usize,
    pub width_warning: bool,
    pub truncation_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelBoundsReport {
    pub bounds: KernelBounds,
    pub envelope_floor: f64,
    pub tested_times: Vec<f64>,
    pub tested_sources: Vec<Vec<f64>>,
    pub entries: Vec<KernelBoundEntry>,
    pub total_violations: usize,
    /// The estimate is certified only on the tested (t, source) pairs.
    pub scope: String,
}

impl KernelBoundsReport {
    pub fn pass(&self) -> bool {
        self.total_violations == 0
    }
}

/// Envelope values below this are not checked.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

pub fn check_two_sided_bounds(
    v: &Potential,
    bounds: &KernelBounds,
    times: &[f64],
    sources: &[Vec<f64>],
    spec: &GridSpec,
    steps: usize,
) -> Result<KernelBoundsReport> {
    if let Some(t) = times.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::Domain(format!(
            "kernel bound times must be positive, got {t}"
        )));
    }
    let d = spec.dim();
    let jobs: Vec<(f64, &Vec<f64>)> = times
        .iter()
        .flat_map(|&t| sources.iter().map(move |y| (t, y)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(t, y)| {
            let col = kernel_column(v, t, y, steps, spec)?;
            let mut lower_margin = f64::INFINITY;
            let mut upper_margin = f64::INFINITY;
            let mut checked = 0;
            let mut violations = 0;
            for (i, &k) in col.field.values().iter().enumerate() {
                let x = spec.point(i);
                let r2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let lo = bounds.lower(d, t, r2);
                if lo <= ENVELOPE_FLOOR {
                    continue;
                }
                let hi = bounds.upper(d, t, r2);
                checked += 1;
                lower_margin = lower_margin.min(k / lo);
                upper_margin = upper_margin.min(hi / k);
                if k < lo || k > hi {
                    violations += 1;
                }
            }
            Ok(KernelBoundEntry {
                t,
                source: y.clone(),
                lower_margin,
                upper_margin,
                checked_points: checked,
                violations,
                width_warning: col.width_warning,
                truncation_warning: col.truncation.warning,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_violations = entries.iter().map(|e| e.violations).sum();
    Ok(KernelBoundsReport {
        bounds: *bounds,
        envelope_floor: ENVELOPE_FLOOR,
        tested_times: times.to_vec(),
        tested_sources: sources.to_vec(),
        entries,
        total_violations,
        scope: "sampled (t, source) pairs only; no claim for untested times".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_line() -> GridSpec {
        GridSpec::new(1, 12.0, 2049).unwrap()
    }

    fn gaussian(spec: GridSpec, s: f64) -> GridFunction {
        GridFunction::from_fn(spec, |x| {
            (-x.iter().map(|v| v * v).sum::<f64>() / (4.0 * s)).exp()
        })
    }

    #[test]
    fn kernel_normalization_and_symmetry() {
        let t = 1.0 / (4.0 * PI);
        assert!((free_kernel(t, &[0.3], &[0.3]).unwrap() - 1.0).abs() < 1e-15);
        let a = free_kernel(0.7, &[0.1, -2.0], &[1.5, 0.25]).unwrap();
        let b = free_kernel(0.7, &[1.5, 0.25], &[0.1, -2.0]).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            free_kernel(0.0, &[0.0], &[0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            free_kernel(-1.0, &[0.0], &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kernel_integrates_to_one() {
        let spec = standard_line();
        let k = GridFunction::from_fn(spec, |y| free_kernel(0.8, &[0.5], y).unwrap());
        assert!((k.integral().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_convolution_closed_form() {
        let spec = standard_line();
        let (s, t) = (1.0, 1.0);
        let u = heat_evolve(&gaussian(spec, s), t).unwrap();
        let exact = GridFunction::from_fn(spec, |x| {
            (s / (s + t)).sqrt() * (-x[0] * x[0] / (4.0 * (s + t))).exp()
        });
        assert!(u.field.sup_distance(&exact).unwrap() <= 1e-8);
    }

    #[test]
    fn zero_stays_zero() {
        let u = heat_evolve(&GridFunction::zeros(standard_line()), 2.0).unwrap();
        assert_eq!(u.field.max_abs(), 0.0);
        assert!(!u.truncation.warning);
    }

    #[test]
    fn semigroup_law() {
        let spec = standard_line();
        let u0 = GridFunction::from_fn(spec, |x| {
            (-(x[0] - 1.0).powi(2)).exp() + 0.5 * (-(x[0] + 2.0).powi(2) / 0.5).exp()
        });
        let once = heat_evolve(&u0, 0.7).unwrap().field;
        let twice = heat_evolve(&heat_evolve(&u0, 0.3).unwrap().field, 0.4)
            .unwrap()
            .field;
        assert!(once.sup_distance(&twice).unwrap() <= 1e-7);
    }

    #[test]
    fn separable_passes_match_direct_sum() {
        let spec = GridSpec::new(2, 3.0, 25).unwrap();
        let u0 = GridFunction::from_fn(spec, |x| (-(x[0] - 0.3).powi(2) - 2.0 * x[1] * x[1]).exp());
        let fast = heat_evolve(&u0, 0.4).unwrap().field;
        let slow = heat_evolve_direct(&u0, 0.4).unwrap();
        assert!(fast.sup_distance(&slow).unwrap() < 1e-13);
    }

    #[test]
    fn flow_preserves_sign_and_mass() {
        let spec = GridSpec::new(2, 20.0, 201).unwrap();
        let u0 = GridFunction::from_fn(spec, |x| {
            (-(x[0] * x[0] + (x[1] - 1.0).powi(2)) / 0.4).exp()
        });
        let u = heat_evolve(&u0, 1.5).unwrap().field;
        assert!(u.min() >= -1e-14 * u.max());
        let (m0, m1) = (u0.integral().unwrap(), u.integral().unwrap());
        assert!((m0 - m1).abs() <= 1e-10 * m0);
    }

    #[test]
    fn truncation_is_flagged() {
        let spec = GridSpec::new(1, 3.0, 121).unwrap();
        let u = heat_evolve(&gaussian(spec, 0.5), 2.0).unwrap();
        assert!(u.truncation.warning);
    }

    #[test]
    fn zero_potential_matches_free_flow() {
        let spec = standard_line();
        let u0 = gaussian(spec, 0.5);
        let free = heat_evolve(&u0, 1.0).unwrap().field;
        let split = potential_evolve(&u0, &Potential::zero(), 1.0, 7)
            .unwrap()
            .field;
        assert!(free.sup_distance(&split).unwrap() <= 1e-10);
    }

    #[test]
    fn constant_potential_commutes() {
        let spec = standard_line();
        let u0 = gaussian(spec, 0.5);
        let c = 0.8;
        let v = Potential::from_spec(PotentialSpec::Constant { c });
        let free = heat_evolve(&u0, 1.0).unwrap().field.scaled(c.exp());
        let split = potential_evolve(&u0, &v, 1.0, 5).unwrap().field;
        assert!(free.sup_distance(&split).unwrap() <= 1e-8);
    }

    #[test]
    fn strang_splitting_is_second_order() {
        let spec = GridSpec::new(1, 12.0, 1025).unwrap();
        let u0 = gaussian(spec, 0.5);
        let v = Potential::from_spec(PotentialSpec::Cosine {
            amplitude: 1.0,
            frequency: 1.0,
        });
        let reference = potential_evolve(&u0, &v, 1.0, 256).unwrap().field;
        let err = |k| {
            potential_evolve(&u0, &v, 1.0, k)
                .unwrap()
                .field
                .sup_distance(&reference)
                .unwrap()
        };
        let ratio = err(8) / err(16);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn potential_exceeding_its_bound_is_rejected() {
        let v = Potential::custom(|x| 2.0 * x[0], 1.0).unwrap();
        let spec = GridSpec::new(1, 2.0, 11).unwrap();
        assert!(matches!(v.sample(&spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn free_column_matches_kernel() {
        let spec = GridSpec::new(1, 12.0, 2049).unwrap();
        let t = 0.5;
        let col = kernel_column(&Potential::zero(), t, &[1.0], 4, &spec).unwrap();
        assert!(!col.width_warning);
        for (i, &k) in col.field.values().iter().enumerate() {
            let exact = free_kernel(t, &spec.point(i), &[1.0]).unwrap();
            if exact > 1e-12 {
                assert!((k - exact).abs() <= 1e-8 * exact, "x = {:?}", spec.point(i));
            }
        }
    }

    #[test]
    fn free_columns_reflect() {
        let spec = GridSpec::new(1, 8.0, 1025).unwrap();
        let a = kernel_column(&Potential::zero(), 1.0, &[1.5], 2, &spec)
            .unwrap()
            .field;
        let b = kernel_column(&Potential::zero(), 1.0, &[-1.5], 2, &spec)
            .unwrap()
            .field;
        let m = spec.points_per_axis();
        for i in 0..m {
            let (x, y) = (a.values()[i], b.values()[m - 1 - i]);
            assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn feynman_kac_sandwich() {
        let spec = GridSpec::new(1, 12.0, 1025).unwrap();
        let m = 1.5;
        let v = Potential::from_spec(PotentialSpec::Cosine {
            amplitude: m,
            frequency: 1.3,
        });
        let t = 0.75;
        let col = kernel_column(&v, t, &[0.4], 64, &spec).unwrap();
        for (i, &k) in col.field.values().iter().enumerate() {
            let k0 = free_kernel(t, &spec.point(i), &[0.4]).unwrap();
            if k0 > 1e-12 {
                assert!(k >= (-m * t).exp() * k0 && k <= (m * t).exp() * k0);
            }
        }
    }

    #[test]
    fn suggested_bounds() {
        let b0 = suggest_bounds_for_bounded_potential(0.0, 1).unwrap();
        assert_eq!((b0.c2, b0.c3, b0.c4), (4.0, TINY_CONSTANT, 4.0));
        assert!((b0.c1 - 0.5 * (4.0 * PI).ln()).abs() < 1e-15);
        let b5 = suggest_bounds_for_bounded_potential(5.0, 2).unwrap();
        assert!((b5.c1 - (5.0 + (4.0 * PI).ln())).abs() < 1e-14);
        assert_eq!(b5.c3, 5.0);
        assert!(suggest_bounds_for_bounded_potential(-1.0, 1).is_err());
        assert!(KernelBounds::new(1.0, 5.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn unnormalized_envelope_fails_below() {
        // (delta, 4, delta, 4) leaves out the (4 pi)^{-d/2} of the free kernel,
        // so its lower envelope sits above K_0 near the diagonal.
        let spec = GridSpec::new(1, 12.0, 1025).unwrap();
        let naive = KernelBounds::new(1e-3, 4.0, 1e-3, 4.0).unwrap();
        let r = check_two_sided_bounds(&Potential::zero(), &naive, &[1.0], &[vec![0.0]], &spec, 2)
            .unwrap();
        assert!(r.total_violations > 0);
        assert!(r.entries[0].upper_margin >= 1.0);
    }

    #[test]
    fn two_sided_bounds_hold_for_constant_potential() {
        let spec = GridSpec::new(1, 16.0, 1025).unwrap();
        let v = Potential::from_spec(PotentialSpec::Constant { c: -0.7 });
        let b = suggest_bounds_for_bounded_potential(0.7, 1).unwrap();
        let r =
            check_two_sided_bounds(&v, &b, &[0.5, 1.5], &[vec![0.0], vec![2.0]], &spec, 8).unwrap();
        assert!(r.pass(), "{r:?}");
        assert_eq!(r.entries.len(), 4);
        assert!(r.entries.iter().all(|e| e.checked_points > 0));
    }

    #[test]
    fn potential_spec_round_trips_through_json() {
        let spec: PotentialSpec =
            serde_json::from_str(r#"{"kind":"cosine","amplitude":1.0,"frequency":2.0}"#).unwrap();
        assert_eq!(
            spec,
            PotentialSpec::Cosine {
                amplitude: 1.0,
                frequency: 2.0
            }
        );
        let well: PotentialSpec =
            serde_json::from_str(r#"{"kind":"gaussian_well","depth":-3.0,"width":1.0}"#).unwrap();
        assert_eq!(well.sup_bound(), 3.0);
        let zero: PotentialSpec = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert_eq!(zero, PotentialSpec::Zero);
    }
}
