//! Impulsive lattice control into the nonnegative cone.
//!
//! The state follows the heat flow from `y0`, receives a kick `sum_n v_n delta_{n/N}`
//! at time `tau`, and should be nonnegative at time `T`. The control is read
//! off the minimizer of the dual functional over nonnegative terminal data
//!
//! ```text
//! F(phi_T) = 1/2 |S phi_T|^2 + <y0, phi(0)> + eps ||phi_T||,   v = S phi_T_hat
//! ```
//!
//! where `phi(t) = e^{(T-t) Delta} phi_T` and `S` samples `phi(tau)` on the
//! lattice window. At the minimizer the final state is `y(T) = S* S phi_hat + e^{T Delta} y0`,
//! and `<y(T), psi> + eps ||psi|| >= 0` for every `psi >= 0`.
//!
//! Everything is discrete: functions live on a [`GridSpec`], inner products
//! are trapezoidal, `S*` is the exact adjoint of `S` in that inner product,
//! and the cone is the set of nodewise nonnegative grid functions.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{weighted_dot, GridFunction, GridSpec, LatticeVector, LatticeWindow};
use crate::kernel::{free_kernel, heat_evolve, kernel_1d};
use crate::observability::observability_constant_free;
use crate::random::{bumps_on_grid, random_bumps, stream, Bump};

/// Relative tolerance on `phi_T >= 0` before a cone violation is raised.
pub const CONE_TOLERANCE: f64 = 1e-14;

/// Initial datum as read from a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DatumSpec {
    /// `amplitude * exp(-|x - center|^2 / (4 width))`
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    Bumps {
        bumps: Vec<BumpSpec>,
    },
    /// A wide positive background with narrow negative dents, drawn from `seed`.
    RandomMixed {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl DatumSpec {
    pub fn sample(&self, spec: GridSpec) -> Result<GridFunction> {
        let d = spec.dim();
        let bumps: Vec<Bump> = match self {
            DatumSpec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                vec![Bump {
                    amplitude: *amplitude,
                    center: center.clone(),
                    width: *width,
                }]
            }
            DatumSpec::Bumps { bumps } => bumps
                .iter()
                .map(|b| Bump {
                    amplitude: b.amplitude,
                    center: b.center.clone(),
                    width: b.width,
                })
                .collect(),
            DatumSpec::RandomMixed { seed } => return Ok(random_mixed_datum(spec, *seed)),
        };
        for b in &bumps {
            if b.center.len() != d {
                return Err(Error::Config(format!(
                    "bump centre {:?} does not have dimension {d}",
                    b.center
                )));
            }
            if !(b.width > 0.0) || !b.amplitude.is_finite() {
                return Err(Error::Config(
                    "bump widths must be positive and amplitudes finite".into(),
                ));
            }
        }
        GridFunction::from_values(spec, bumps_on_grid(spec, &bumps).into_values())
    }
}

/// Background `exp(-|x|^2/(4 s_b))`, `s_b in [0.3, 1]`, minus one to three dents
/// of width `s in [0.02, 0.2]` centred in `[-1.5, 1.5]^d` whose total mass is
/// `0.8..1.5` times the background mass.
pub fn random_mixed_datum(spec: GridSpec, seed: u64) -> GridFunction {
    let d = spec.dim();
    let mut rng = stream(seed, &[0x006d_6978_6564]);
    let sb: f64 = rng.gen_range(0.3..1.0);
    let mass = |s: f64| (4.0 * PI * s).powf(d as f64 / 2.0);
    let background = Bump {
        amplitude: 1.0,
        center: vec![0.0; d],
        width: sb,
    };
    let count = rng.gen_range(1..=3);
    let total = rng.gen_range(0.8..1.5) * mass(sb);
    let dents: Vec<Bump> = (0..count)
        .map(|_| {
            let s = rng.gen_range(0.02..0.2);
            Bump {
                amplitude: -total / count as f64 / mass(s),
                center: (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                width: s,
            }
        })
        .collect();
    GridFunction::from_fn(spec, |x| {
        background.eval(x) + dents.iter().map(|b| b.eval(x)).sum::<f64>()
    })
}

/// Separable sampling operator `S` and its weighted adjoint.
#[derive(Debug, Clone)]
struct Operators {
    m: usize,
    side: usize,
    dim: usize,
    // side x m, K(T - tau, x_i - p_r) w_i
    sample: Vec<f64>,
    // m x side, K(T - tau, x_i - p_r)
    spread: Vec<f64>,
    weights: Vec<f64>,
    g0: Vec<f64>,
}

/// Contracts axis `axis` of a row-major tensor with a `rows x shape[axis]` matrix.
fn contract(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &[f64],
    rows: usize,
) -> (Vec<f64>, Vec<usize>) {
    let cols = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            let row = &mat[r * cols..(r + 1) * cols];
            let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
            for (c, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let src = &data[(o * cols + c) * inner..(o * cols + c + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }
    let mut shape = shape.to_vec();
    shape[axis] = rows;
    (out, shape)
}

impl Operators {
    fn new(spec: &GridSpec, window: &LatticeWindow, lag: f64, g0: Vec<f64>) -> Self {
        let m = spec.points_per_axis();
        let side = 2 * window.radius() + 1;
        let xs = spec.axis_coordinates();
        let ws = spec.axis_weights();
        let ps: Vec<f64> = (0..side)
            .map(|r| (r as f64 - window.radius() as f64) / window.spacing_inverse() as f64)
            .collect();
        let mut sample = vec![0.0; side * m];
        let mut spread = vec![0.0; m * side];
        for (r, p) in ps.iter().enumerate() {
            for i in 0..m {
                let k = kernel_1d(lag, xs[i] - p);
                sample[r * m + i] = k * ws[i];
                spread[i * side + r] = k;
            }
        }
        Self {
            m,
            side,
            dim: spec.dim(),
            sample,
            spread,
            weights: spec.weights(),
            g0,
        }
    }

    fn s(&self, phi: &[f64]) -> Vec<f64> {
        let mut data = phi.to_vec();
        let mut shape = vec![self.m; self.dim];
        for axis in 0..self.dim {
            (data, shape) = contract(&data, &shape, axis, &self.sample, self.side);
        }
        data
    }

    fn s_adjoint(&self, c: &[f64]) -> Vec<f64> {
        let mut data = c.to_vec();
        let mut shape = vec![self.side; self.dim];
        for axis in 0..self.dim {
            (data, shape) = contract(&data, &shape, axis, &self.spread, self.m);
        }
        data
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_dot(&self.weights, a, b)
    }
}

/// `y0`, horizon `T`, impulse time `tau`, penalty `eps` and the lattice window.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    y0: GridFunction,
    t_final: f64,
    tau: f64,
    epsilon: f64,
    window: LatticeWindow,
    ops: std::sync::Arc<Operators>,
}

impl ControlProblem {
    /// Lattice points must be grid nodes so that sampling is exact and the
    /// discrete adjoint of `S` is the kernel sum used by [`apply_control`].
    pub fn new(
        y0: GridFunction,
        t_final: f64,
        tau: f64,
        epsilon: f64,
        window: LatticeWindow,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau < t_final && t_final.is_finite()) {
            return Err(Error::Domain(format!(
                "need 0 < tau < T, got tau = {tau}, T = {t_final}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "penalty eps must be positive, got {epsilon}"
            )));
        }
        let spec = *y0.spec();
        if window.dim() != spec.dim() {
            return Err(Error::Shape("window and grid dimensions differ".into()));
        }
        if !spec.aligned_with(&window) {
            return Err(Error::Precondition(
                "lattice points of the window must be grid nodes".into(),
            ));
        }
        let g0 = heat_evolve(&y0, t_final)?.field.into_values();
        let ops = Operators::new(&spec, &window, t_final - tau, g0);
        Ok(Self {
            y0,
            t_final,
            tau,
            epsilon,
            window,
            ops: std::sync::Arc::new(ops),
        })
    }

    /// Default window radius `ceil(L) - 2` on the integer lattice.
    pub fn default_window(spec: &GridSpec) -> Result<LatticeWindow> {
        let r = (spec.half_width().ceil() as i64 - 2).max(0) as usize;
        LatticeWindow::new(spec.dim(), r, 1)
    }

    /// Same data with another penalty, sharing the precomputed operators.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "penalty eps must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }

    pub fn y0(&self) -> &GridFunction {
        &self.y0
    }

    pub fn spec(&self) -> &GridSpec {
        self.y0.spec()
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    /// Smoothing of `eps ||phi||`: `sigma = 1e-8 (1 + ||y0||)`.
    pub fn sigma(&self) -> f64 {
        1e-8 * (1.0 + self.y0.l2_norm().unwrap_or(0.0))
    }

    /// `e^{T Delta} y0`, the representer of `phi_T -> <y0, phi(0)>`.
    pub fn free_final_state(&self) -> GridFunction {
        GridFunction::from_raw(*self.spec(), self.ops.g0.clone())
    }

    /// `S phi_T`: `phi(tau)` at the window points.
    pub fn sample_operator(&self, phi_t: &GridFunction) -> Result<LatticeVector> {
        phi_t.check_same_grid(&self.y0)?;
        LatticeVector::new(self.window, self.ops.s(phi_t.values()))
    }

    /// `S* c = sum_n c_n K(T - tau, ., n/N)` on the grid.
    pub fn sample_adjoint(&self, c: &LatticeVector) -> Result<GridFunction> {
        if *c.window() != self.window {
            return Err(Error::Shape(
                "control vector lives on another window".into(),
            ));
        }
        GridFunction::from_values(*self.spec(), self.ops.s_adjoint(c.values()))
    }

    fn smooth_value(&self, phi: &[f64], sigma: f64) -> (f64, Vec<f64>) {
        let sphi = self.ops.s(phi);
        let quad = 0.5 * sphi.iter().map(|v| v * v).sum::<f64>();
        let lin = self.ops.dot(&self.ops.g0, phi);
        let norm2 = self.ops.dot(phi, phi);
        (
            quad + lin + self.epsilon * (norm2 + sigma * sigma).sqrt(),
            sphi,
        )
    }

    fn smooth_gradient(&self, phi: &[f64], sphi: &[f64], sigma: f64) -> Vec<f64> {
        let mut g = self.ops.s_adjoint(sphi);
        let scale = self.epsilon / (self.ops.dot(phi, phi) + sigma * sigma).sqrt();
        for ((gi, g0), p) in g.iter_mut().zip(&self.ops.g0).zip(phi) {
            *gi += g0 + scale * p;
        }
        g
    }
}

/// `phi(t) = e^{(T - t) Delta} phi_T`, the backward adjoint flow.
pub fn adjoint_solve(phi_t: &GridFunction, t_final: f64, t: f64) -> Result<GridFunction> {
    if !(t >= 0.0 && t <= t_final) {
        return Err(Error::Domain(format!(
            "adjoint time {t} outside [0, {t_final}]"
        )));
    }
    if t == t_final {
        return Ok(phi_t.clone());
    }
    Ok(heat_evolve(phi_t, t_final - t)?.field)
}

fn check_cone(phi: &GridFunction) -> Result<()> {
    if phi.min() < -CONE_TOLERANCE * phi.max_abs() {
        return Err(Error::ConeViolation(format!(
            "terminal datum has minimum {:e}",
            phi.min()
        )));
    }
    Ok(())
}

/// The three terms of `F`, computed through the adjoint flow on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalTerms {
    pub quadratic: f64,
    pub linear: f64,
    pub penalty: f64,
}

impl FunctionalTerms {
    pub fn value(&self) -> f64 {
        self.quadratic + self.linear + self.penalty
    }
}

pub fn functional_terms(p: &ControlProblem, phi_t: &GridFunction) -> Result<FunctionalTerms> {
    check_cone(phi_t)?;
    let at_tau = adjoint_solve(phi_t, p.t_final, p.tau)?;
    let at_zero = adjoint_solve(phi_t, p.t_final, 0.0)?;
    Ok(FunctionalTerms {
        quadratic: 0.5 * at_tau.sample_on_lattice(&p.window)?.norm_squared(),
        linear: p.y0.inner(&at_zero)?,
        penalty: p.epsilon * phi_t.l2_norm()?,
    })
}

/// `F(phi_T) = 1/2 |S phi_T|^2 + <y0, phi(0)> + eps ||phi_T||`.
pub fn functional_f(p: &ControlProblem, phi_t: &GridFunction) -> Result<f64> {
    Ok(functional_terms(p, phi_t)?.value())
}

/// Representer of the derivative of `F_sigma`, in which `eps ||phi||` becomes
/// `eps sqrt(||phi||^2 + sigma^2)`:
/// `S* S phi + e^{T Delta} y0 + eps phi / sqrt(||phi||^2 + sigma^2)`.
pub fn functional_gradient(
    p: &ControlProblem,
    phi_t: &GridFunction,
    sigma: f64,
) -> Result<GridFunction> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "smoothing must be positive, got {sigma}"
        )));
    }
    phi_t.check_same_grid(&p.y0)?;
    let sphi = p.ops.s(phi_t.values());
    GridFunction::from_values(*p.spec(), p.smooth_gradient(phi_t.values(), &sphi, sigma))
}

/// Value of `F_sigma`.
pub fn functional_smoothed(p: &ControlProblem, phi_t: &GridFunction, sigma: f64) -> Result<f64> {
    phi_t.check_same_grid(&p.y0)?;
    Ok(p.smooth_value(phi_t.values(), sigma).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// stop when `||min(phi, grad)||` falls below this times `||e^{T Delta} y0||`
    pub kkt_tolerance: f64,
    /// stop when the objective improves by less than `stagnation_tolerance`
    /// (relative) over this many iterations
    pub stagnation_window: usize,
    pub stagnation_tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            kkt_tolerance: 1e-7,
            stagnation_window: 5_000,
            stagnation_tolerance: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Kkt,
    Stagnation,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub epsilon: f64,
    pub phi_t_hat: GridFunction,
    /// `F_sigma` after each accepted iteration; non-increasing
    pub objective_trace: Vec<f64>,
    /// unsmoothed `F` at the minimizer
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub kkt_target: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub restarts: usize,
    pub v: LatticeVector,
    pub final_state: GridFunction,
    pub min_final_value: f64,
    pub control_norm: f64,
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn kkt_residual(p: &ControlProblem, x: &[f64], g: &[f64]) -> f64 {
    let r: Vec<f64> = x.iter().zip(g).map(|(a, b)| a.min(*b)).collect();
    p.ops.dot(&r, &r).sqrt()
}

/// Minimizes `F_sigma` over the cone by monotone accelerated projected
/// gradient with backtracking and function-value restarts, from `phi = 0`.
pub fn minimize_f(p: &ControlProblem, options: &MinimizeOptions) -> Result<MinimizeResult> {
    minimize_f_from(p, &GridFunction::zeros(*p.spec()), options)
}

pub fn minimize_f_from(
    p: &ControlProblem,
    init: &GridFunction,
    options: &MinimizeOptions,
) -> Result<MinimizeResult> {
    init.check_same_grid(&p.y0)?;
    let sigma = p.sigma();
    let n = init.values().len();
    let mut x = init.values().to_vec();
    project(&mut x);
    let (mut fx, _) = p.smooth_value(&x, sigma);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    // 1 / ||S||^2 estimated by a few power iterations
    let mut step = 1.0 / operator_norm_squared(p).max(f64::MIN_POSITIVE);
    let g0_norm = p.ops.dot(&p.ops.g0, &p.ops.g0).sqrt();
    let kkt_target = options.kkt_tolerance * g0_norm.max(f64::MIN_POSITIVE);
    let mut trace = vec![fx];
    let mut restarts = 0;
    let mut kkt = f64::INFINITY;
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut z = vec![0.0; n];

    for k in 0..options.max_iters {
        iterations = k + 1;
        let (fy, sy) = p.smooth_value(&y, sigma);
        let gy = p.smooth_gradient(&y, &sy, sigma);
        let fz = loop {
            for i in 0..n {
                z[i] = y[i] - step * gy[i];
            }
            project(&mut z);
            let (fz, _) = p.smooth_value(&z, sigma);
            let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy + p.ops.dot(&gy, &diff) + p.ops.dot(&diff, &diff) / (2.0 * step);
            if fz <= model + 1e-14 * fy.abs().max(fz.abs()) || step < 1e-300 {
                break fz;
            }
            step *= 0.5;
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let x_old = std::mem::take(&mut x);
        if fz <= fx {
            x = z.clone();
            fx = fz;
            for i in 0..n {
                y[i] =
                    x[i] + (t / t_next) * (z[i] - x[i]) + ((t - 1.0) / t_next) * (x[i] - x_old[i]);
            }
            t = t_next;
        } else {
            // restart from the best point
            x = x_old;
            y.copy_from_slice(&x);
            t = 1.0;
            restarts += 1;
        }
        trace.push(fx);
        step *= 1.2;

        if k % 10 == 9 {
            let (_, sx) = p.smooth_value(&x, sigma);
            let gx = p.smooth_gradient(&x, &sx, sigma);
            kkt = kkt_residual(p, &x, &gx);
            if kkt <= kkt_target {
                stop = StopReason::Kkt;
                break;
            }
        }
        let w = options.stagnation_window;
        if w > 0 && trace.len() > w {
            let past = trace[trace.len() - 1 - w];
            if past - fx <= options.stagnation_tolerance * fx.abs().max(f64::MIN_POSITIVE) {
                stop = StopReason::Stagnation;
                break;
            }
        }
    }
    let (_, sx) = p.smooth_value(&x, sigma);
    kkt = kkt.min(kkt_residual(p, &x, &p.smooth_gradient(&x, &sx, sigma)));
    let converged = kkt <= kkt_target;
    let phi_t_hat = GridFunction::from_values(*p.spec(), x)?;
    let objective = functional_f(p, &phi_t_hat)?;
    let v = p.sample_operator(&phi_t_hat)?;
    let final_state = apply_control(p, &v)?;
    Ok(MinimizeResult {
        epsilon: p.epsilon,
        objective_trace: trace,
        objective,
        iterations,
        kkt_residual: kkt,
        kkt_target,
        converged,
        stop,
        restarts,
        min_final_value: final_state.min(),
        control_norm: v.l2_norm(),
        v,
        final_state,
        phi_t_hat,
    })
}

/// `||S||^2 = ||S S*||` in the weighted metric, by power iteration.
fn operator_norm_squared(p: &ControlProblem) -> f64 {
    let len = p.window.len();
    let mut c = vec![1.0 / (len as f64).sqrt(); len];
    let mut lambda = 0.0;
    for _ in 0..50 {
        let next = p.ops.s(&p.ops.s_adjoint(&c));
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        c = next.into_iter().map(|v| v / norm).collect();
    }
    lambda
}

/// `v = S phi_T_hat`; refuses an unconverged minimizer.
pub fn synthesize_control(p: &ControlProblem, r: &MinimizeResult) -> Result<LatticeVector> {
    if !r.converged {
        return Err(Error::NotConverged(format!(
            "minimizer stopped ({:?}) with KKT residual {:e} above {:e}",
            r.stop, r.kkt_residual, r.kkt_target
        )));
    }
    p.sample_operator(&r.phi_t_hat)
}

/// `y(T; v) = e^{T Delta} y0 + sum_n v_n K(T - tau, ., n/N)`, with the kernel
/// evaluated in closed form at every node.
pub fn apply_control(p: &ControlProblem, v: &LatticeVector) -> Result<GridFunction> {
    if *v.window() != p.window {
        return Err(Error::Shape(
            "control vector lives on another window".into(),
        ));
    }
    let spec = *p.spec();
    let lag = p.t_final - p.tau;
    let sources: Vec<(Vec<f64>, f64)> = v
        .values()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| (p.window.point(i), *c))
        .collect();
    let values: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let x = spec.point(i);
            let kick: f64 = sources
                .iter()
                .map(|(n, c)| c * free_kernel(lag, &x, n).unwrap_or(0.0))
                .sum();
            p.ops.g0[i] + kick
        })
        .collect();
    GridFunction::from_values(spec, values)
}

/// Nonnegative Gaussian probes: amplitude in `[0.1, 1]`, width in `[0.05, 1]`,
/// centre in `[-(L-2), L-2]^d`.
pub fn random_probes(spec: &GridSpec, count: usize, seed: u64) -> Vec<GridFunction> {
    let reach = (spec.half_width() - 2.0).max(0.5);
    (0..count)
        .map(|i| {
            let mut rng = stream(seed, &[0x7072_6f62, i as u64]);
            let b = random_bumps(&mut rng, spec.dim(), 1, reach);
            bumps_on_grid(*spec, &b)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeCheck {
    /// value of the inequality, `>= 0` in exact arithmetic
    pub value: f64,
    /// sum of absolute values of its terms
    pub scale: f64,
    pub pass: bool,
}

/// Relative slack on the variational and weak-form inequalities.
pub const INEQUALITY_TOLERANCE: f64 = 1e-6;
/// Absolute slack on the duality identity, relative to `max(1, |terms|)`.
pub const DUALITY_TOLERANCE: f64 = 1e-7;

fn probe_check(terms: &[f64]) -> ProbeCheck {
    let value: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    ProbeCheck {
        value,
        scale,
        pass: value >= -INEQUALITY_TOLERANCE * scale,
    }
}

/// Euler inequality at the minimizer:
/// `<S phi_hat, S psi> + <y0, psi(0)> + eps ||psi|| >= 0` for `psi >= 0`.
pub fn euler_inequality(
    p: &ControlProblem,
    r: &MinimizeResult,
    psi: &GridFunction,
) -> Result<ProbeCheck> {
    check_cone(psi)?;
    let at_tau = adjoint_solve(psi, p.t_final, p.tau)?.sample_on_lattice(&p.window)?;
    let at_zero = adjoint_solve(psi, p.t_final, 0.0)?;
    Ok(probe_check(&[
        r.v.dot(&at_tau)?,
        p.y0.inner(&at_zero)?,
        p.epsilon * psi.l2_norm()?,
    ]))
}

/// Weak nonnegativity `<y(T; v), psi> + eps ||psi|| >= 0`. The scale counts
/// the free and kicked parts of `y(T)` separately, since they cancel.
pub fn weak_form(p: &ControlProblem, v: &LatticeVector, psi: &GridFunction) -> Result<ProbeCheck> {
    check_cone(psi)?;
    let y_t = apply_control(p, v)?;
    let free = p.free_final_state().inner(psi)?;
    let kicked = y_t.inner(psi)? - free;
    let penalty = p.epsilon * psi.l2_norm()?;
    let value = y_t.inner(psi)? + penalty;
    let scale = free.abs() + kicked.abs() + penalty;
    Ok(ProbeCheck {
        value,
        scale,
        pass: value >= -INEQUALITY_TOLERANCE * scale,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityCheck {
    /// `<y(T; v), phi_T> - <y0, phi(0)>`
    pub lhs: f64,
    /// `<v, S phi_T>`
    pub rhs: f64,
    pub error: f64,
    pub pass: bool,
}

/// `<y(T; v), phi_T> - <y0, phi(0)> = <v, phi(tau)|_lattice>`, each side from
/// its own code path.
pub fn duality_identity(
    p: &ControlProblem,
    v: &LatticeVector,
    phi_t: &GridFunction,
) -> Result<DualityCheck> {
    let y_t = apply_control(p, v)?;
    let lhs = y_t.inner(phi_t)? - p.y0.inner(&adjoint_solve(phi_t, p.t_final, 0.0)?)?;
    let rhs = v.dot(&adjoint_solve(phi_t, p.t_final, p.tau)?.sample_on_lattice(&p.window)?)?;
    let error = (lhs - rhs).abs();
    Ok(DualityCheck {
        lhs,
        rhs,
        error,
        pass: error <= DUALITY_TOLERANCE * lhs.abs().max(rhs.abs()).max(1.0),
    })
}

/// The explicit control bound chain.
#[derive(Debug, Clone, Serialize)]
pub struct NormChain {
    pub control_norm: f64,
    pub y0_norm: f64,
    /// `||phi_hat(0)||`
    pub phi_zero_norm: f64,
    /// `||phi_hat(tau)||`
    pub phi_tau_norm: f64,
    /// `(sum over all lattice points in the box of phi_hat(tau, n)^2)^{1/2}`
    pub phi_tau_lattice_norm: f64,
    /// `6^d e^{d/(T - tau)}`
    pub observability_root: f64,
    /// `||v||^2 <= 2 ||y0|| ||phi_hat(0)||`
    pub energy_ok: bool,
    /// `||phi_hat(0)|| <= ||phi_hat(tau)||`
    pub monotone_ok: bool,
    /// `||phi_hat(tau)|| <= 6^d e^{d/(T-tau)} ||phi_hat(tau)|_lattice||`
    pub observability_ok: bool,
    /// `2 * 6^d e^{d/(T - tau)} ||y0||`
    pub uniform_bound: f64,
    pub uniform_ok: bool,
}

impl NormChain {
    pub fn pass(&self) -> bool {
        self.energy_ok && self.monotone_ok && self.observability_ok && self.uniform_ok
    }
}

const CHAIN_SLACK: f64 = 1e-9;

pub fn norm_chain(p: &ControlProblem, r: &MinimizeResult) -> Result<NormChain> {
    let d = p.spec().dim();
    let lag = p.t_final - p.tau;
    let phi_tau = adjoint_solve(&r.phi_t_hat, p.t_final, p.tau)?;
    let phi_zero = adjoint_solve(&r.phi_t_hat, p.t_final, 0.0)?;
    let full = crate::observability::largest_window(p.spec(), p.window.spacing_inverse())?;
    let phi_tau_lattice_norm = phi_tau.sample_on_lattice(&full)?.l2_norm();
    let y0_norm = p.y0.l2_norm()?;
    let (phi_zero_norm, phi_tau_norm) = (phi_zero.l2_norm()?, phi_tau.l2_norm()?);
    let control_norm = r.v.l2_norm();
    let observability_root = observability_constant_free(d, lag)?.sqrt();
    let uniform_bound = 2.0 * observability_root * y0_norm;
    // F_sigma(phi_hat) <= F_sigma(0) = eps sigma bounds the energy slack
    let energy_slack = 2.0 * p.epsilon * p.sigma();
    Ok(NormChain {
        control_norm,
        y0_norm,
        phi_zero_norm,
        phi_tau_norm,
        phi_tau_lattice_norm,
        observability_root,
        energy_ok: control_norm.powi(2)
            <= (2.0 * y0_norm * phi_zero_norm + energy_slack) * (1.0 + CHAIN_SLACK),
        monotone_ok: phi_zero_norm <= phi_tau_norm * (1.0 + CHAIN_SLACK),
        observability_ok: phi_tau_norm
            <= observability_root * phi_tau_lattice_norm * (1.0 + CHAIN_SLACK),
        uniform_bound,
        uniform_ok: control_norm <= uniform_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub epsilon: f64,
    pub min_final_value: f64,
    pub max_abs_final: f64,
    /// `-eps max(phi_hat) / ||phi_hat||`, the floor implied by the optimality system
    pub theoretical_floor: Option<f64>,
    pub delta: f64,
    /// `min >= -delta max(1, max |y(T)|)`; a policy check at finite eps
    pub pointwise_pass: bool,
    pub probes: usize,
    pub weak_form_worst: f64,
    /// weak form for every probe, the guaranteed statement at finite eps
    pub weak_form_pass: bool,
}

/// Final-state sign checks for the control of a minimizer.
pub fn verify_sign_controllability(
    p: &ControlProblem,
    r: &MinimizeResult,
    delta: f64,
    probes: &[GridFunction],
) -> Result<SignReport> {
    let y_t = apply_control(p, &r.v)?;
    let min_final_value = y_t.min();
    let max_abs_final = y_t.max_abs();
    let phi_norm = r.phi_t_hat.l2_norm()?;
    let theoretical_floor = (phi_norm > 0.0).then(|| -p.epsilon * r.phi_t_hat.max() / phi_norm);
    let mut worst = f64::INFINITY;
    let mut all = true;
    let mut with_minimizer: Vec<&GridFunction> = probes.iter().collect();
    if phi_norm > 0.0 {
        with_minimizer.push(&r.phi_t_hat);
    }
    for psi in &with_minimizer {
        let c = weak_form(p, &r.v, psi)?;
        all &= c.pass;
        if c.scale > 0.0 {
            worst = worst.min(c.value / c.scale);
        }
    }
    Ok(SignReport {
        epsilon: p.epsilon,
        min_final_value,
        max_abs_final,
        theoretical_floor,
        delta,
        pointwise_pass: min_final_value >= -delta * max_abs_final.max(1.0),
        probes: with_minimizer.len(),
        weak_form_worst: worst,
        weak_form_pass: all,
    })
}

pub const DEFAULT_LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone)]
pub struct LadderRung {
    pub result: MinimizeResult,
    pub chain: NormChain,
}

/// Solves for each penalty in decreasing order, warm-starting each rung from
/// the previous minimizer. The last rung carries the returned control.
pub fn solve_ladder(
    base: &ControlProblem,
    ladder: &[f64],
    options: &MinimizeOptions,
) -> Result<Vec<LadderRung>> {
    if ladder.is_empty() {
        return Err(Error::Domain("penalty ladder is empty".into()));
    }
    let mut rungs: Vec<LadderRung> = Vec::with_capacity(ladder.len());
    let mut start = GridFunction::zeros(*base.spec());
    for &eps in ladder {
        let p = base.with_epsilon(eps)?;
        let result = minimize_f_from(&p, &start, options)?;
        start = result.phi_t_hat.clone();
        let chain = norm_chain(&p, &result)?;
        rungs.push(LadderRung { result, chain });
    }
    Ok(rungs)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessCheck {
    pub objective_from_zero: f64,
    pub objective_from_random: f64,
    pub objective_gap: f64,
    /// `||phi_a - phi_b|| / max(||phi_a||, ||phi_b||)`
    pub minimizer_gap: f64,
    pub pass: bool,
}

pub const UNIQUENESS_OBJECTIVE_TOLERANCE: f64 = 1e-8;

/// Re-solves from a random nonnegative start and compares with `r`.
pub fn uniqueness_check(
    p: &ControlProblem,
    r: &MinimizeResult,
    options: &MinimizeOptions,
    seed: u64,
) -> Result<UniquenessCheck> {
    let spec = *p.spec();
    let mut rng = stream(seed, &[0x756e_6971]);
    let bumps = random_bumps(&mut rng, spec.dim(), 3, spec.half_width() / 2.0);
    let scale = r.phi_t_hat.max_abs().max(1.0);
    let init = bumps_on_grid(spec, &bumps).scaled(scale);
    let other = minimize_f_from(p, &init, options)?;
    let objective_gap = (other.objective - r.objective).abs();
    let diff = other.phi_t_hat.axpy(-1.0, &r.phi_t_hat)?.l2_norm()?;
    let denom = other.phi_t_hat.l2_norm()?.max(r.phi_t_hat.l2_norm()?);
    let minimizer_gap = if denom > 0.0 { diff / denom } else { 0.0 };
    Ok(UniquenessCheck {
        objective_from_zero: r.objective,
        objective_from_random: other.objective,
        objective_gap,
        minimizer_gap,
        pass: objective_gap <= UNIQUENESS_OBJECTIVE_TOLERANCE * r.objective.abs().max(1.0),
    })
}

/// Directional derivatives of `F_sigma` by central differences against the
/// gradient, at `phi`; returns the worst relative discrepancy.
pub fn gradient_check(
    p: &ControlProblem,
    phi: &GridFunction,
    directions: &[GridFunction],
    step: f64,
) -> Result<f64> {
    let sigma = p.sigma();
    let grad = functional_gradient(p, phi, sigma)?;
    let mut worst = 0.0_f64;
    for dir in directions {
        let plus = phi.axpy(step, dir)?;
        let minus = phi.axpy(-step, dir)?;
        let fd = (functional_smoothed(p, &plus, sigma)? - functional_smoothed(p, &minus, sigma)?)
            / (2.0 * step);
        let exact = grad.inner(dir)?;
        worst = worst.max((fd - exact).abs() / exact.abs().max(fd.abs()).max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Random directions with standard normal nodal values.
pub fn random_directions(spec: &GridSpec, count: usize, seed: u64) -> Vec<GridFunction> {
    (0..count)
        .map(|i| {
            let mut rng = stream(seed, &[0x0064_6972, i as u64]);
            GridFunction::from_fn(*spec, |_| crate::random::standard_normal(&mut rng))
        })
        .collect()
}
