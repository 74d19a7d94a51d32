//! Equal-time Harnack comparison fails for the lattice problem.
//!
//! The datum `u0 = (4 pi)^{-(d-1)/2} 1{M <= x_1 <= M+1} e^{-|x'|^2/4}` evolves to
//!
//! ```text
//! u_M(t,x) = (1/2) [erfc((M - x_1)/(2 sqrt t)) - erfc((M + 1 - x_1)/(2 sqrt t))]
//!            * (4 pi (t+1))^{-(d-1)/2} e^{-|x'|^2/(4(t+1))}
//! ```
//!
//! and at `x0 = (1, 0, .., 0)` grows against the origin like `e^{(M - 1/4)/(4t)}`,
//! so no bound `u(t,x0) <= 2^{d-1} e^{d/t} u(t,0)` survives large `M`.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::kernel::heat_evolve;

/// Closed-form `u_M(t, x)`.
pub fn harnack_solution(m: f64, t: f64, x: &[f64]) -> f64 {
    let s = 2.0 * t.sqrt();
    let along = 0.5 * (erfc((m - x[0]) / s) - erfc((m + 1.0 - x[0]) / s));
    let r2: f64 = x[1..].iter().map(|v| v * v).sum();
    let across = (4.0 * PI * (t + 1.0)).powf(-((x.len() - 1) as f64) / 2.0)
        * (-r2 / (4.0 * (t + 1.0))).exp();
    along * across
}

/// `2^{d-1} e^{d/t}`.
pub fn harnack_constant(d: usize, t: f64) -> f64 {
    2f64.powi(d as i32 - 1) * (d as f64 / t).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub m: f64,
    pub t: f64,
    pub dim: usize,
    pub u_at_x0: f64,
    pub u_at_origin: f64,
    /// `u(t,x0) / u(t,0)`
    pub ratio: f64,
    /// `(1/2) e^{(M - 1/4)/(4t)}`
    pub growth_floor: f64,
    /// `ratio >= growth_floor`
    pub growth_holds: bool,
    pub harnack_constant: f64,
    /// `ratio > harnack_constant`
    pub harnack_violated: bool,
}

fn validate(m: f64, t: f64, d: usize) -> Result<()> {
    if !(m > 0.0 && m.is_finite() && t > 0.0 && t.is_finite()) || d == 0 {
        return Err(Error::Domain(format!(
            "need M > 0, t > 0, d >= 1; got M = {m}, t = {t}, d = {d}"
        )));
    }
    Ok(())
}

pub fn harnack_counterexample(m: f64, t: f64, d: usize) -> Result<HarnackReport> {
    validate(m, t, d)?;
    let mut x0 = vec![0.0; d];
    x0[0] = 1.0;
    let u_at_x0 = harnack_solution(m, t, &x0);
    let u_at_origin = harnack_solution(m, t, &vec![0.0; d]);
    if !(u_at_origin > 0.0) {
        return Err(Error::Domain(format!(
            "u_M(t,0) underflows for M = {m}, t = {t}"
        )));
    }
    let ratio = u_at_x0 / u_at_origin;
    let growth_floor = 0.5 * ((m - 0.25) / (4.0 * t)).exp();
    let harnack_constant = harnack_constant(d, t);
    Ok(HarnackReport {
        m,
        t,
        dim: d,
        u_at_x0,
        u_at_origin,
        ratio,
        growth_floor,
        growth_holds: ratio >= growth_floor,
        harnack_constant,
        harnack_violated: ratio > harnack_constant,
    })
}

/// Smallest `M` on the grid `step, 2 step, ..` up to `max_m` where the ratio
/// exceeds the Harnack constant.
pub fn harnack_threshold(t: f64, d: usize, step: f64, max_m: f64) -> Result<Option<f64>> {
    let count = (max_m / step).floor() as usize;
    for k in 1..=count {
        let m = k as f64 * step;
        if harnack_counterexample(m, t, d)?.harnack_violated {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackPipelineReport {
    pub m: f64,
    pub t: f64,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub sup_error: f64,
}

/// Evolves the one-dimensional indicator datum on a grid with nodes at `M`
/// and `M + 1` (value 1/2 there) and compares with the closed form.
pub fn harnack_pipeline(m: f64, t: f64, spec: GridSpec) -> Result<HarnackPipelineReport> {
    validate(m, t, 1)?;
    if spec.dim() != 1 {
        return Err(Error::Shape("the pipeline check is one-dimensional".into()));
    }
    if spec.node_index(m).is_none() || spec.node_index(m + 1.0).is_none() {
        return Err(Error::Precondition(format!(
            "M = {m} and M + 1 must be grid nodes"
        )));
    }
    let u0 = GridFunction::from_fn(spec, |x| {
        let near = |a: f64| (x[0] - a).abs() < 1e-9;
        if near(m) || near(m + 1.0) {
            0.5
        } else if x[0] > m && x[0] < m + 1.0 {
            1.0
        } else {
            0.0
        }
    });
    let u = heat_evolve(&u0, t)?.field;
    let exact = GridFunction::from_fn(spec, |x| harnack_solution(m, t, x));
    Ok(HarnackPipelineReport {
        m,
        t,
        half_width: spec.half_width(),
        points_per_axis: spec.points_per_axis(),
        sup_error: u.sup_distance(&exact)?,
    })
}

/// Grid for [`harnack_pipeline`] at `M = 2`: `[-6, 6]` with spacing `1/512`.
pub fn default_pipeline_grid() -> GridSpec {
    GridSpec::with_resolution(1, 6, 512).expect("static grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint-rule oracle for the one-dimensional integral.
    fn quadrature(m: f64, t: f64, x: f64) -> f64 {
        let k = 200_000;
        let dy = 1.0 / k as f64;
        (0..k)
            .map(|i| {
                let y = m + (i as f64 + 0.5) * dy;
                (4.0 * PI * t).powf(-0.5) * (-(x - y).powi(2) / (4.0 * t)).exp() * dy
            })
            .sum()
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for (m, t, x) in [
            (1.0, 1.0, 0.0),
            (1.0, 0.5, 1.0),
            (5.0, 1.0, 1.0),
            (2.0, 0.3, 2.5),
        ] {
            let a = harnack_solution(m, t, &[x]);
            let b = quadrature(m, t, x);
            assert!((a - b).abs() <= 1e-9 * b, "{m} {t} {x}: {a} vs {b}");
        }
    }

    #[test]
    fn transverse_factor() {
        let a = harnack_solution(1.0, 1.0, &[0.0, 0.0]);
        let b = harnack_solution(1.0, 1.0, &[0.0]);
        assert!((a - b / (8.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn growth_inequality_holds() {
        for m in [1.0, 5.0, 20.0] {
            for t in [0.5, 1.0] {
                for d in 1..=3 {
                    let r = harnack_counterexample(m, t, d).unwrap();
                    assert!(r.growth_holds, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn harnack_fails_for_large_m() {
        let r = harnack_counterexample(20.0, 1.0, 1).unwrap();
        assert!(r.harnack_violated && r.ratio > harnack_constant(1, 1.0));
        let m = harnack_threshold(1.0, 1, 0.25, 50.0).unwrap().unwrap();
        assert!(m > 1.0 && m < 20.0);
        assert!(
            !harnack_counterexample(m - 0.25, 1.0, 1)
                .unwrap()
                .harnack_violated
        );
    }

    #[test]
    fn ratio_independent_of_dimension() {
        let a = harnack_counterexample(3.0, 0.7, 1).unwrap().ratio;
        let b = harnack_counterexample(3.0, 0.7, 3).unwrap().ratio;
        assert!((a / b - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pipeline_matches_closed_form() {
        let r = harnack_pipeline(2.0, 0.5, default_pipeline_grid()).unwrap();
        assert!(r.sup_error <= 1e-6, "{r:?}");
    }
}
