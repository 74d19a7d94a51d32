//! Sign-changing data whose solution vanishes on the whole lattice.
//!
//! Fix `T > 0`, `N >= 1` and `f(x) = (4 pi (T+1))^{-1/2} e^{-x^2/(4(T+1))}`, so
//! `f^(xi) = e^{-(T+1) xi^2}`. The datum with
//!
//! ```text
//! u0^(xi) = e^{T xi^2} (f^(xi - N pi) - f^(xi + N pi)) / (2i)
//! ```
//!
//! (per axis, multiplied over axes) evolves to `u(T,x) = prod_i sin(N pi x_i) f(x_i)`,
//! which is zero at every point of `Z^d / N` yet has positive `L^2` norm.
//! Completing the square gives the real-space datum per axis:
//!
//! ```text
//! u0(x) = A / (2 sqrt(pi)) e^{-x^2/4} sin(c x),   A = e^{T(T+1) N^2 pi^2},  c = (T+1) N pi
//! ```
//!
//! The amplitude `A` makes the forward evolution a catastrophic cancellation
//! in double precision; [`counterexample_pipeline`] runs it in extended
//! precision via [`super::precise`].

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::kernel::heat_evolve;

use super::{largest_window, precise};

/// Half-width of a unit Gaussian `e^{-xi^2}` down to `1e-16` of its peak.
pub fn gaussian_reach() -> f64 {
    (16.0 * 10f64.ln()).sqrt()
}

/// `ln A = T (T+1) N^2 pi^2`.
pub fn log_amplitude(t_final: f64, n: usize) -> f64 {
    let a = n as f64 * PI;
    t_final * (t_final + 1.0) * a * a
}

/// Frequency `c = (T+1) N pi` carried by the datum.
pub fn datum_frequency(t_final: f64, n: usize) -> f64 {
    (t_final + 1.0) * n as f64 * PI
}

/// Truncated frequency range `[-xi_max, xi_max]` for the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyWindow {
    pub xi_max: f64,
}

impl FrequencyWindow {
    /// Smallest window holding both shifted Gaussians down to `1e-16`.
    pub fn adequate(t_final: f64, n: usize) -> Self {
        Self {
            xi_max: datum_frequency(t_final, n) + gaussian_reach(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub t_final: f64,
    pub n: usize,
    pub dim: usize,
    /// datum from the inverse Fourier transform
    pub u0: GridFunction,
    /// `prod_i sin(N pi x_i) f(x_i)`
    pub u_t: GridFunction,
    pub window: FrequencyWindow,
}

fn validate(t_final: f64, n: usize, d: usize) -> Result<()> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::Domain("N and d must be positive".into()));
    }
    Ok(())
}

/// Per-axis final state `sin(N pi x) f(x)`.
pub fn final_state_1d(t_final: f64, n: usize, x: f64) -> f64 {
    let s = t_final + 1.0;
    (n as f64 * PI * x).sin() * (4.0 * PI * s).powf(-0.5) * (-x * x / (4.0 * s)).exp()
}

/// Per-axis datum in closed form.
pub fn initial_state_1d(t_final: f64, n: usize, x: f64) -> f64 {
    let c = datum_frequency(t_final, n);
    (log_amplitude(t_final, n) - x * x / 4.0).exp() / (2.0 * PI.sqrt()) * (c * x).sin()
}

/// Per-axis datum by trapezoidal quadrature of the inverse transform
/// `(2 pi)^{-1} int u0^(xi) e^{i x xi} dxi` over the window. The cosine part
/// integrates an odd function over a symmetric range and is dropped.
fn inverse_transform_1d(t_final: f64, n: usize, xs: &[f64], window: FrequencyWindow) -> Vec<f64> {
    let c = datum_frequency(t_final, n);
    let log_a = log_amplitude(t_final, n);
    let reach = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    // aliasing of the oscillation e^{i x xi} stays below e^{-40} relative
    let step = 2.0 * PI / (2.0 * reach + 30.0);
    let count = (2.0 * window.xi_max / step).ceil() as usize;
    let dxi = 2.0 * window.xi_max / count as f64;
    let spectrum: Vec<(f64, f64)> = (0..=count)
        .map(|k| {
            let xi = -window.xi_max + k as f64 * dxi;
            let weight = if k == 0 || k == count { 0.5 * dxi } else { dxi };
            let g = 0.5 * ((log_a - (xi - c).powi(2)).exp() - (log_a - (xi + c).powi(2)).exp());
            (xi, weight * g)
        })
        .collect();
    xs.iter()
        .map(|&x| {
            spectrum
                .iter()
                .map(|&(xi, wg)| wg * (xi * x).sin())
                .sum::<f64>()
                / (2.0 * PI)
        })
        .collect()
}

/// Grid used for the double-precision construction: box `[-20, 20]^d`,
/// spacing `1/(8N)`, aligned with `Z^d / N`.
pub fn counterexample_grid(t_final: f64, n: usize, d: usize) -> Result<GridSpec> {
    validate(t_final, n, d)?;
    GridSpec::with_resolution(d, 20, 8 * n)
}

pub fn build_counterexample(t_final: f64, n: usize, d: usize) -> Result<Counterexample> {
    let spec = counterexample_grid(t_final, n, d)?;
    build_counterexample_on(spec, t_final, n, FrequencyWindow::adequate(t_final, n))
}

pub fn build_counterexample_on(
    spec: GridSpec,
    t_final: f64,
    n: usize,
    window: FrequencyWindow,
) -> Result<Counterexample> {
    let d = spec.dim();
    validate(t_final, n, d)?;
    let needed = FrequencyWindow::adequate(t_final, n).xi_max;
    if window.xi_max < needed {
        return Err(Error::Truncation {
            message: format!(
                "frequency window {} cuts the shifted Gaussians; need at least {needed}",
                window.xi_max
            ),
            required_radius: None,
        });
    }
    let peak_log = d as f64 * (log_amplitude(t_final, n) - (2.0 * PI.sqrt()).ln());
    if peak_log > 700.0 {
        return Err(Error::Domain(format!(
            "datum amplitude e^{peak_log:.1} overflows double precision"
        )));
    }
    let xs = spec.axis_coordinates();
    let u0_axis = inverse_transform_1d(t_final, n, &xs, window);
    let ut_axis: Vec<f64> = xs.iter().map(|&x| final_state_1d(t_final, n, x)).collect();
    let m = spec.points_per_axis();
    let product = |axis: &[f64]| {
        let mut idx = vec![0usize; d];
        let mut out = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            out.push(idx.iter().map(|&i| axis[i]).product::<f64>());
            spec.advance(&mut idx);
        }
        debug_assert_eq!(axis.len(), m);
        out
    };
    Ok(Counterexample {
        t_final,
        n,
        dim: d,
        u0: GridFunction::from_values(spec, product(&u0_axis))?,
        u_t: GridFunction::from_values(spec, product(&ut_axis))?,
        window,
    })
}

/// Failure of `int |u(T)|^2 <= N^{-d} sum_n |u(T, n/N)|^2` for sign-changing data.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonNecessityReport {
    pub t_final: f64,
    pub n: usize,
    pub dim: usize,
    /// `||u(T)||^2`
    pub lhs: f64,
    /// `N^{-d} sum_n u(T, n/N)^2` over the window
    pub rhs: f64,
    /// lhs / rhs
    pub ratio: f64,
    /// `max_n |u(T, n/N)| / max |u(T)|`
    pub lattice_to_peak: f64,
    /// `(0.1 (4 pi (T+1))^{-1/4})^{2d}`, a floor for `lhs`
    pub lhs_floor: f64,
    pub window_radius: usize,
    pub pass: bool,
}

pub const ZERO_SET_TOLERANCE: f64 = 1e-10;
pub const NECESSITY_RATIO: f64 = 1e10;

pub fn check_epsilon_necessity(t_final: f64, n: usize, d: usize) -> Result<EpsilonNecessityReport> {
    let ce = build_counterexample(t_final, n, d)?;
    necessity_of(&ce)
}

pub(crate) fn necessity_of(ce: &Counterexample) -> Result<EpsilonNecessityReport> {
    let spec = *ce.u_t.spec();
    let w = largest_window(&spec, ce.n)?;
    let samples = ce.u_t.sample_on_lattice(&w)?;
    let lhs = ce.u_t.l2_norm()?.powi(2);
    let rhs = (ce.n as f64).powf(-(ce.dim as f64)) * samples.norm_squared();
    let lattice_max = samples.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let lattice_to_peak = lattice_max / ce.u_t.max_abs();
    let lhs_floor = (0.1 * (4.0 * PI * (ce.t_final + 1.0)).powf(-0.25)).powi(2 * ce.dim as i32);
    let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
    Ok(EpsilonNecessityReport {
        t_final: ce.t_final,
        n: ce.n,
        dim: ce.dim,
        lhs,
        rhs,
        ratio,
        lattice_to_peak,
        lhs_floor,
        window_radius: w.radius(),
        pass: lattice_to_peak <= ZERO_SET_TOLERANCE && ratio >= NECESSITY_RATIO && lhs >= lhs_floor,
    })
}

/// Evolved datum against the closed-form final state.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub t_final: f64,
    pub n: usize,
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub precision_bits: usize,
    /// sup over grid nodes of |evolved - closed form|, extended precision
    pub sup_error: f64,
    /// max relative gap between the Fourier-quadrature datum and its closed form
    pub datum_relative_error: f64,
    /// a priori double-precision round-off bound `eps * sup (e^{T Delta} |u0|)`
    pub f64_cancellation_bound: f64,
    /// sup error of the double-precision evolution, when the bound allows it
    pub f64_sup_error: Option<f64>,
    pub pass: bool,
}

pub const PIPELINE_TOLERANCE: f64 = 1e-6;

/// Grid for the evolution: the datum tail `A e^{-L^2/4}` and the quadrature
/// aliasing `A e^{-(2 pi/h - c)^2 T/(T+1)}` are both held below `e^{-40}`, with
/// `h = 1/(N j)` so that lattice points are nodes.
pub fn pipeline_grid(t_final: f64, n: usize, d: usize) -> Result<GridSpec> {
    validate(t_final, n, d)?;
    let budget = log_amplitude(t_final, n) + 40.0;
    let half_width = (4.0 * budget).sqrt().ceil().max(12.0) as usize;
    let needed = datum_frequency(t_final, n) + (budget * (t_final + 1.0) / t_final).sqrt();
    let j = (needed / (2.0 * PI * n as f64)).floor() as usize + 1;
    GridSpec::with_resolution(d, half_width, n * j)
}

pub fn counterexample_pipeline(t_final: f64, n: usize, d: usize) -> Result<PipelineReport> {
    let spec = pipeline_grid(t_final, n, d)?;
    let window = FrequencyWindow::adequate(t_final, n);
    let ce = build_counterexample_on(spec, t_final, n, window)?;

    let closed: Vec<f64> = spec
        .axis_coordinates()
        .iter()
        .map(|&x| initial_state_1d(t_final, n, x))
        .collect();
    let fourier: Vec<f64> = inverse_transform_1d(t_final, n, &spec.axis_coordinates(), window);
    let scale = closed.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let datum_relative_error = closed
        .iter()
        .zip(&fourier)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;

    let evolved = precise::evolve_counterexample(t_final, n, &spec)?;
    let sup_error = evolved.field.sup_distance(&ce.u_t)?;

    let magnitude = heat_evolve(&ce.u0.map(f64::abs), t_final)?.field.max();
    let f64_cancellation_bound = f64::EPSILON * magnitude;
    let f64_sup_error = if f64_cancellation_bound < 0.1 * PIPELINE_TOLERANCE {
        Some(heat_evolve(&ce.u0, t_final)?.field.sup_distance(&ce.u_t)?)
    } else {
        None
    };
    let pass =
        sup_error <= PIPELINE_TOLERANCE && f64_sup_error.is_none_or(|e| e <= PIPELINE_TOLERANCE);
    Ok(PipelineReport {
        t_final,
        n,
        dim: d,
        half_width: spec.half_width(),
        points_per_axis: spec.points_per_axis(),
        precision_bits: evolved.precision_bits,
        sup_error,
        datum_relative_error,
        f64_cancellation_bound,
        f64_sup_error,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `||sin(a x) f(x)||^2 = (1 - e^{-2 a^2 (T+1)}) / (2 sqrt(8 pi (T+1)))`.
    fn norm_squared_1d(t: f64, n: usize) -> f64 {
        let a = n as f64 * PI;
        (1.0 - (-2.0 * a * a * (t + 1.0)).exp()) / (2.0 * (8.0 * PI * (t + 1.0)).sqrt())
    }

    #[test]
    fn fourier_datum_matches_closed_form() {
        for (t, n) in [(1.0, 1usize), (0.5, 3), (1.0, 2)] {
            let spec = counterexample_grid(t, n, 1).unwrap();
            let ce = build_counterexample_on(spec, t, n, FrequencyWindow::adequate(t, n)).unwrap();
            let scale = (log_amplitude(t, n)).exp();
            for (i, x) in spec.axis_coordinates().into_iter().enumerate() {
                let gap = (ce.u0.values()[i] - initial_state_1d(t, n, x)).abs();
                assert!(gap <= 1e-12 * scale, "T={t} N={n} x={x}: {gap:e}");
            }
        }
    }

    #[test]
    fn narrow_frequency_window_is_rejected() {
        let spec = counterexample_grid(1.0, 1, 1).unwrap();
        let tight = FrequencyWindow {
            xi_max: datum_frequency(1.0, 1) + 1.0,
        };
        assert!(matches!(
            build_counterexample_on(spec, 1.0, 1, tight),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn final_state_norm_matches_oracle() {
        for (t, n, d) in [(1.0, 1usize, 1usize), (0.5, 3, 1), (1.0, 2, 2), (4.0, 1, 1)] {
            let ce = build_counterexample(t, n, d).unwrap();
            let norm2 = ce.u_t.l2_norm().unwrap().powi(2);
            let oracle = norm_squared_1d(t, n).powi(d as i32);
            assert!(
                (norm2 / oracle - 1.0).abs() < 1e-10,
                "{t} {n} {d}: {norm2} vs {oracle}"
            );
            assert!(norm2.sqrt() >= (0.1 * (4.0 * PI * (t + 1.0)).powf(-0.25)).powi(d as i32));
        }
    }

    #[test]
    fn final_state_vanishes_on_lattice() {
        for (t, n, d) in [(1.0, 1usize, 1usize), (0.5, 3, 1), (1.0, 2, 2)] {
            let r = check_epsilon_necessity(t, n, d).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.lattice_to_peak <= ZERO_SET_TOLERANCE);
            assert!(r.ratio > 1e10);
        }
    }

    #[test]
    fn pipeline_grid_is_lattice_aligned() {
        for (t, n, d) in [(1.0, 1usize, 1usize), (0.5, 3, 1), (1.0, 2, 2)] {
            let spec = pipeline_grid(t, n, d).unwrap();
            let w = largest_window(&spec, n).unwrap();
            assert!(spec.aligned_with(&w));
        }
    }

    #[test]
    fn double_precision_pipeline_for_mild_amplitude() {
        let r = counterexample_pipeline(1.0, 1, 1).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.f64_sup_error.is_some());
        assert!(r.datum_relative_error < 1e-12);
    }
}
