//! Gaussian suprema over cubes versus lattice sums.
//!
//! For a cube `Q_2(k)` of side 2 centred at an integer point `k`, the 3^d
//! lattice points `n` with `n - k in {-1, 0, 1}^d` control the supremum of
//! `exp(-a |x - y|^2)` over the cube with explicit constants depending on
//! where `y` sits relative to the larger cube `Q_4(k)`. Indices range over
//! `Z^d`; negative entries are expected.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LatticeWindow};
use crate::kernel::heat_evolve;

/// Relative slack when comparing the two sides of a lemma.
pub const LEMMA_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeQuery {
    a: f64,
    y: Vec<f64>,
    center: Vec<i64>,
}

impl CubeQuery {
    pub fn new(a: f64, y: Vec<f64>, center: Vec<i64>) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!(
                "Gaussian sharpness must be positive, got {a}"
            )));
        }
        if y.is_empty() || y.len() != center.len() {
            return Err(Error::Shape(
                "y and the cube centre must share a positive dimension".into(),
            ));
        }
        Ok(Self { a, y, center })
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        self.y.iter().zip(&self.center).map(|(y, k)| y - *k as f64)
    }

    pub fn regime(&self) -> Regime {
        if self.offsets().any(|o| o.abs() > 2.0) {
            Regime::Outside
        } else {
            Regime::Inside
        }
    }
}

/// Position of `y` relative to `Q_4(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Inside,
    Outside,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Inside => "inside",
            Regime::Outside => "outside",
        }
    }
}

/// `sum_{n - k in {-1,0,1}^d} exp(-a |n - y|^2)`, using the product structure.
pub fn lattice_gauss_sum(q: &CubeQuery) -> f64 {
    q.offsets()
        .map(|o| {
            [-1.0, 0.0, 1.0]
                .iter()
                .map(|n: &f64| (-q.a * (n - o) * (n - o)).exp())
                .sum::<f64>()
        })
        .product()
}

/// Maximizer of `exp(-a|x - y|^2)` over `Q_2(k)`: each coordinate of `y`
/// clamped to `[k_i - 1, k_i + 1]`.
/// `ln` of [`lattice_gauss_sum`], finite even when the sum underflows.
pub fn lattice_gauss_log_sum(q: &CubeQuery) -> f64 {
    q.offsets()
        .map(|o| {
            let e = [-1.0, 0.0, 1.0].map(|n: f64| -q.a * (n - o) * (n - o));
            let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            top + e.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
        })
        .sum()
}

pub fn cube_maximizer(q: &CubeQuery) -> Vec<f64> {
    q.y.iter()
        .zip(&q.center)
        .map(|(y, &k)| y.clamp(k as f64 - 1.0, k as f64 + 1.0))
        .collect()
}

pub fn cube_gauss_sup(q: &CubeQuery) -> f64 {
    cube_gauss_log_sup(q).exp()
}

pub fn cube_gauss_log_sup(q: &CubeQuery) -> f64 {
    let x = cube_maximizer(q);
    let r2: f64 = x.iter().zip(&q.y).map(|(a, b)| (a - b) * (a - b)).sum();
    -q.a * r2
}

/// Independent oracle for [`cube_gauss_sup`]: maximize over a grid of about
/// `points` nodes covering the cube, then repeatedly re-grid around the best
/// node until the box has shrunk below `1e-9`. Uses only function values.
pub fn dense_grid_sup(q: &CubeQuery, points: usize) -> f64 {
    dense_grid_log_sup(q, points).exp()
}

pub fn dense_grid_log_sup(q: &CubeQuery, points: usize) -> f64 {
    let d = q.dim();
    let per_axis = ((points as f64).powf(1.0 / d as f64).round() as usize).max(3);
    let f = |x: &[f64]| {
        let r2: f64 = x.iter().zip(&q.y).map(|(a, b)| (a - b) * (a - b)).sum();
        -q.a * r2
    };
    let cube_lo: Vec<f64> = q.center.iter().map(|&k| k as f64 - 1.0).collect();
    let cube_hi: Vec<f64> = q.center.iter().map(|&k| k as f64 + 1.0).collect();
    let mut lo = cube_lo.clone();
    let mut hi = cube_hi.clone();
    let mut best = f64::NEG_INFINITY;
    let mut arg = lo.clone();
    let mut n = per_axis;
    loop {
        let step: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) / (n - 1) as f64)
            .collect();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        for _ in 0..n.pow(d as u32) {
            for k in 0..d {
                x[k] = if idx[k] == n - 1 {
                    hi[k]
                } else {
                    lo[k] + idx[k] as f64 * step[k]
                };
            }
            let v = f(&x);
            if v > best {
                best = v;
                arg.copy_from_slice(&x);
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        if step.iter().all(|s| *s < 1e-9) {
            break;
        }
        for k in 0..d {
            lo[k] = (arg[k] - step[k]).max(cube_lo[k]);
            hi[k] = (arg[k] + step[k]).min(cube_hi[k]);
        }
        // later rounds only need to bracket a unimodal maximum
        n = 9.min(per_axis).max(5);
    }
    best
}

/// Which cube comparison is being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `y` outside `Q_4(k)`: constant `2^{d-1} e^{(d-1)a/2}`
    Outside,
    /// `y` inside `Q_4(k)`: constant `e^{4ad}`
    Inside,
    /// any `y`: constant `2^{d-1} e^{4ad}`
    Around,
}

impl Lemma {
    pub fn constant(&self, d: usize, a: f64) -> f64 {
        let d = d as f64;
        match self {
            Lemma::Outside => 2f64.powf(d - 1.0) * ((d - 1.0) * a / 2.0).exp(),
            Lemma::Inside => (4.0 * a * d).exp(),
            Lemma::Around => 2f64.powf(d - 1.0) * (4.0 * a * d).exp(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Lemma::Outside => "outside",
            Lemma::Inside => "inside",
            Lemma::Around => "around",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub lemma: Lemma,
    pub lhs: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    /// lhs / rhs, computed as `exp(ln_lhs - ln_rhs)`
    pub ratio: f64,
    pub pass: bool,
    /// For the outside regime: the partial lattice sum over the coordinates
    /// with `|y_i - k_i| < 1`, and the lower bound `2^{-j} e^{-aj/2}` it must
    /// dominate (`j` = number of such coordinates).
    pub theta: Option<(f64, f64)>,
}

fn bound_check(lemma: Lemma, q: &CubeQuery) -> BoundCheck {
    let ln_lhs = cube_gauss_log_sup(q);
    let ln_rhs = lemma.constant(q.dim(), q.a).ln() + lattice_gauss_log_sum(q);
    BoundCheck {
        lemma,
        lhs: ln_lhs.exp(),
        rhs: ln_rhs.exp(),
        ln_lhs,
        ln_rhs,
        ratio: (ln_lhs - ln_rhs).exp(),
        pass: ln_lhs <= ln_rhs + LEMMA_TOLERANCE,
        theta: (lemma == Lemma::Outside).then(|| theta_diagnostic(q)),
    }
}

/// Re-derives the product over near coordinates used to prove the outside
/// constant; returns `(theta, 2^{-j} e^{-a j / 2})`.
fn theta_diagnostic(q: &CubeQuery) -> (f64, f64) {
    let near: Vec<f64> = q.offsets().filter(|o| o.abs() < 1.0).collect();
    let theta = near
        .iter()
        .map(|o| {
            [-1.0, 0.0, 1.0]
                .iter()
                .map(|n: &f64| (-q.a * (n - o) * (n - o)).exp())
                .sum::<f64>()
        })
        .product();
    let j = near.len() as f64;
    (theta, 2f64.powf(-j) * (-q.a * j / 2.0).exp())
}

pub fn verify_lemma_out(q: &CubeQuery) -> Result<BoundCheck> {
    if q.regime() != Regime::Outside {
        return Err(Error::Precondition(format!(
            "y = {:?} must lie in the complement of Q_4({:?})",
            q.y, q.center
        )));
    }
    Ok(bound_check(Lemma::Outside, q))
}

pub fn verify_lemma_inside(q: &CubeQuery) -> Result<BoundCheck> {
    if q.regime() != Regime::Inside {
        return Err(Error::Precondition(format!(
            "y = {:?} must lie in Q_4({:?})",
            q.y, q.center
        )));
    }
    Ok(bound_check(Lemma::Inside, q))
}

pub fn verify_lemma_around(q: &CubeQuery) -> BoundCheck {
    bound_check(Lemma::Around, q)
}

/// Random query: `a` log-uniform on `[1e-2, 50]`, `y` uniform on `[-6, 6]^d`,
/// centre uniform in `{-2, .., 2}^d`.
pub fn random_query(rng: &mut impl Rng, d: usize) -> CubeQuery {
    let a = (rng.gen_range(1e-2f64.ln()..50f64.ln())).exp();
    let y = (0..d).map(|_| rng.gen_range(-6.0..6.0)).collect();
    let center = (0..d).map(|_| rng.gen_range(-2i64..=2)).collect();
    CubeQuery { a, y, center }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub dim: usize,
    pub a: f64,
    pub y: Vec<f64>,
    pub center: Vec<i64>,
    pub regime: Regime,
    /// regime-specific lemma (outside or inside)
    pub regime_check: BoundCheck,
    pub around_check: BoundCheck,
    pub oracle_sup: f64,
    /// `|oracle - closed form|` on the sup, measured relative to the sup
    pub oracle_gap: f64,
}

impl SweepRow {
    pub fn pass(&self, oracle_tolerance: f64) -> bool {
        self.regime_check.pass && self.around_check.pass && self.oracle_gap <= oracle_tolerance
    }
}

/// `|e^x - e^y| / max(e^x, e^y)`, well defined when both underflow.
pub fn relative_gap(ln_x: f64, ln_y: f64) -> f64 {
    -(-(ln_x - ln_y).abs()).exp_m1()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub dim: usize,
    pub samples: usize,
    pub outside_samples: usize,
    pub inside_samples: usize,
    pub regime_violations: usize,
    pub around_violations: usize,
    pub max_oracle_gap: f64,
    pub oracle_disagreements: usize,
    pub max_ratio_outside: f64,
    pub max_ratio_inside: f64,
    pub max_ratio_around: f64,
}

/// Dense-grid oracle size.
pub const ORACLE_POINTS: usize = 10_000;
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Checks `samples` random queries in dimension `d`. Query `i` is drawn from
/// its own generator seeded by `(seed, d, i)`, so results do not depend on
/// scheduling.
pub fn lemma_sweep(d: usize, samples: usize, seed: u64) -> Vec<SweepRow> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::random::stream(seed, &[d as u64, i as u64]);
            let q = random_query(&mut rng, d);
            let regime = q.regime();
            let regime_check = match regime {
                Regime::Outside => bound_check(Lemma::Outside, &q),
                Regime::Inside => bound_check(Lemma::Inside, &q),
            };
            let around_check = verify_lemma_around(&q);
            let ln_oracle = dense_grid_log_sup(&q, ORACLE_POINTS);
            let oracle_sup = ln_oracle.exp();
            SweepRow {
                index: i,
                dim: d,
                a: q.a,
                y: q.y.clone(),
                center: q.center.clone(),
                regime,
                oracle_gap: relative_gap(ln_oracle, regime_check.ln_lhs),
                regime_check,
                around_check,
                oracle_sup,
            }
        })
        .collect()
}

pub fn summarize(d: usize, rows: &[SweepRow]) -> SweepSummary {
    let by = |r: Regime| rows.iter().filter(move |row| row.regime == r);
    let max_ratio = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, f64::max);
    SweepSummary {
        dim: d,
        samples: rows.len(),
        outside_samples: by(Regime::Outside).count(),
        inside_samples: by(Regime::Inside).count(),
        regime_violations: rows.iter().filter(|r| !r.regime_check.pass).count(),
        around_violations: rows.iter().filter(|r| !r.around_check.pass).count(),
        max_oracle_gap: rows.iter().map(|r| r.oracle_gap).fold(0.0, f64::max),
        oracle_disagreements: rows
            .iter()
            .filter(|r| r.oracle_gap > ORACLE_TOLERANCE)
            .count(),
        max_ratio_outside: max_ratio(&mut by(Regime::Outside).map(|r| r.regime_check.ratio)),
        max_ratio_inside: max_ratio(&mut by(Regime::Inside).map(|r| r.regime_check.ratio)),
        max_ratio_around: max_ratio(&mut rows.iter().map(|r| r.around_check.ratio)),
    }
}

/// CSV header and rows: `dim, a, y_0..y_{d-1}, regime, lhs, rhs, ratio, pass`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let d = rows.first().map_or(1, |r| r.dim);
    let mut out = String::from("dim,a,");
    for k in 0..d {
        out.push_str(&format!("y{k},"));
    }
    out.push_str("regime,lhs,rhs,ratio,pass\n");
    for r in rows {
        let c = &r.regime_check;
        out.push_str(&format!("{},{:e}", r.dim, r.a));
        for y in &r.y {
            out.push_str(&format!(",{y:e}"));
        }
        out.push_str(&format!(
            ",{},{:e},{:e},{:e},{}\n",
            r.regime.as_str(),
            c.lhs,
            c.rhs,
            c.ratio,
            c.pass && r.around_check.pass
        ));
    }
    out
}

/// Realized sides of `u(t,x) <= 2^{d-1} e^{d/t} sum_{n in Q_2(k)} u(t,n)` for
/// `x in Q_2(k)`.
#[derive(Debug, Clone, Serialize)]
pub struct PointwiseBoundReport {
    pub t: f64,
    pub center: Vec<i64>,
    pub max_in_cube: f64,
    pub lattice_sum: f64,
    pub constant: f64,
    /// max_in_cube / (constant * lattice_sum); 0 when both sides vanish
    pub ratio: f64,
    pub pass: bool,
    pub truncation_warning: bool,
}

/// Largest negative value tolerated in data that must be nonnegative,
/// relative to the maximum.
pub const SIGN_TOLERANCE: f64 = 1e-14;

pub(crate) fn check_nonnegative(u0: &GridFunction) -> Result<()> {
    let floor = -SIGN_TOLERANCE * u0.max().max(0.0);
    if u0.min() < floor {
        return Err(Error::Hypothesis(format!(
            "initial datum must be nonnegative; minimum {} below {}",
            u0.min(),
            floor
        )));
    }
    Ok(())
}

pub fn pointwise_solution_bound(
    u0: &GridFunction,
    t: f64,
    k: &[i64],
    w: &LatticeWindow,
) -> Result<PointwiseBoundReport> {
    Ok(pointwise_solution_bounds(u0, t, &[k.to_vec()], w)?.remove(0))
}

/// [`pointwise_solution_bound`] for several cube centres, evolving once.
pub fn pointwise_solution_bounds(
    u0: &GridFunction,
    t: f64,
    centers: &[Vec<i64>],
    w: &LatticeWindow,
) -> Result<Vec<PointwiseBoundReport>> {
    let spec = *u0.spec();
    let d = spec.dim();
    if w.dim() != d || centers.iter().any(|k| k.len() != d) {
        return Err(Error::Shape(
            "cube centre, window and grid dimensions differ".into(),
        ));
    }
    check_nonnegative(u0)?;
    let mut all_positions = Vec::with_capacity(centers.len());
    for k in centers {
        let positions = cube_lattice(k)
            .map(|n| {
                let scaled: Vec<i64> = n
                    .iter()
                    .map(|&ni| ni * w.spacing_inverse() as i64)
                    .collect();
                w.position(&scaled).ok_or_else(|| {
                    Error::Precondition(format!("lattice point {n:?} lies outside the window"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if k.iter()
            .any(|&ki| (ki.abs() + 1) as f64 > spec.half_width())
        {
            return Err(Error::Precondition(format!(
                "cube Q_2({k:?}) leaves the grid box"
            )));
        }
        all_positions.push(positions);
    }
    let evolved = heat_evolve(u0, t)?;
    let u = &evolved.field;
    let samples = u.sample_on_lattice(w)?;
    let constant = 2f64.powi(d as i32 - 1) * (d as f64 / t).exp();
    Ok(centers
        .iter()
        .zip(&all_positions)
        .map(|(k, positions)| {
            let lattice_sum: f64 = positions.iter().map(|&p| samples.values()[p]).sum();
            let mut max_in_cube = 0.0_f64;
            for (i, &v) in u.values().iter().enumerate() {
                let x = spec.point(i);
                if x.iter()
                    .zip(k)
                    .all(|(xi, &ki)| (xi - ki as f64).abs() <= 1.0 + 1e-12)
                {
                    max_in_cube = max_in_cube.max(v);
                }
            }
            let rhs = constant * lattice_sum;
            let ratio = if rhs > 0.0 {
                max_in_cube / rhs
            } else if max_in_cube > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            PointwiseBoundReport {
                t,
                center: k.clone(),
                max_in_cube,
                lattice_sum,
                constant,
                ratio,
                pass: max_in_cube <= rhs * (1.0 + LEMMA_TOLERANCE),
                truncation_warning: evolved.truncation.warning,
            }
        })
        .collect())
}

/// The 3^d integer points of `Q_2(k)`.
fn cube_lattice(k: &[i64]) -> impl Iterator<Item = Vec<i64>> + '_ {
    let d = k.len();
    (0..3usize.pow(d as u32)).map(move |mut c| {
        let mut n = k.to_vec();
        for nk in n.iter_mut().rev() {
            *nk += (c % 3) as i64 - 1;
            c /= 3;
        }
        n
    })
}
