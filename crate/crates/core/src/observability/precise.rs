//! Extended-precision trapezoidal heat evolution for the counterexample.
//!
//! The datum has amplitude `A^d` while the solution at time `T` is `O(1)`, so
//! every quadrature sum cancels about `d ln A / ln 2` bits. The same
//! tensor-product trapezoidal rule as [`crate::kernel::HeatPropagator`] is run
//! here with nodes, weights, kernel and datum all formed in a binary floating
//! format wide enough to absorb that loss.

use astro_float::{BigFloat, Consts, RoundingMode};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

use super::counterexample::{datum_frequency, log_amplitude};

const RM: RoundingMode = RoundingMode::ToEven;

/// Output of the extended-precision evolution, rounded to `f64`.
#[derive(Debug, Clone)]
pub struct PreciseEvolution {
    pub field: GridFunction,
    pub precision_bits: usize,
}

/// Bits needed to carry `ln_cancellation` nats of cancellation plus a full
/// double-precision result, rounded up to whole words.
pub fn precision_for(ln_cancellation: f64) -> usize {
    let bits = ln_cancellation.max(0.0) / std::f64::consts::LN_2 + 53.0 + 64.0;
    64 * (bits / 64.0).ceil() as usize
}

struct Ctx {
    p: usize,
    cc: Consts,
}

impl Ctx {
    fn new(p: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::CorruptData(format!("constant cache: {e:?}")))?;
        Ok(Self { p, cc })
    }

    fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    fn int(&self, k: i64) -> BigFloat {
        BigFloat::from_i64(k, self.p)
    }

    fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, RM)
    }

    fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(self.p, RM, &mut self.cc)
    }

    fn sin(&mut self, x: &BigFloat) -> BigFloat {
        x.sin(self.p, RM, &mut self.cc)
    }

    fn sqrt(&self, x: &BigFloat) -> BigFloat {
        x.sqrt(self.p, RM)
    }
}

fn mul(a: &BigFloat, b: &BigFloat, p: usize) -> BigFloat {
    a.mul(b, p, RM)
}

fn add(a: &BigFloat, b: &BigFloat, p: usize) -> BigFloat {
    a.add(b, p, RM)
}

fn div(a: &BigFloat, b: &BigFloat, p: usize) -> BigFloat {
    a.div(b, p, RM)
}

pub(crate) fn to_f64(x: &BigFloat) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    let s = format!("{x}");
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::CorruptData(format!("extended result {s} is not a finite double")))
}

/// Node coordinates `-L + i h`, `h = 2L/(m-1)`, and trapezoidal weights.
fn axis(ctx: &Ctx, spec: &GridSpec) -> (Vec<BigFloat>, BigFloat, Vec<BigFloat>) {
    let p = ctx.p;
    let m = spec.points_per_axis();
    let l = ctx.num(spec.half_width());
    let h = div(&mul(&ctx.int(2), &l, p), &ctx.int(m as i64 - 1), p);
    let xs = (0..m)
        .map(|i| add(&l.neg(), &mul(&ctx.int(i as i64), &h, p), p))
        .collect();
    let half = div(&h, &ctx.int(2), p);
    let ws = (0..m)
        .map(|i| {
            if i == 0 || i + 1 == m {
                half.clone()
            } else {
                h.clone()
            }
        })
        .collect();
    (xs, h, ws)
}

/// Row-major `m x m` matrix of `K(t, x_i - x_j) w_j`.
fn kernel_matrix(ctx: &mut Ctx, spec: &GridSpec, t: f64) -> Vec<BigFloat> {
    let p = ctx.p;
    let m = spec.points_per_axis();
    let (_, h, ws) = axis(ctx, spec);
    let four_t = mul(&ctx.int(4), &ctx.num(t), p);
    let pi = ctx.pi();
    let norm = div(&ctx.int(1), &ctx.sqrt(&mul(&four_t, &pi, p)), p);
    let by_offset: Vec<BigFloat> = (0..m)
        .map(|k| {
            let r = mul(&ctx.int(k as i64), &h, p);
            let e = div(&mul(&r, &r, p), &four_t, p).neg();
            mul(&norm, &ctx.exp(&e), p)
        })
        .collect();
    let mut matrix = Vec::with_capacity(m * m);
    for i in 0..m {
        for (j, w) in ws.iter().enumerate() {
            matrix.push(mul(&by_offset[i.abs_diff(j)], w, p));
        }
    }
    matrix
}

/// One pass of the axis-`k` matrix over a row-major `m^d` array.
fn axis_pass(
    values: &[BigFloat],
    matrix: &[BigFloat],
    m: usize,
    d: usize,
    k: usize,
    p: usize,
) -> Vec<BigFloat> {
    let stride = m.pow((d - 1 - k) as u32);
    let zero = BigFloat::from_f64(0.0, p);
    (0..values.len())
        .into_par_iter()
        .map(|flat| {
            let i = (flat / stride) % m;
            let base = flat - i * stride;
            let row = &matrix[i * m..(i + 1) * m];
            let mut acc = zero.clone();
            for (j, kij) in row.iter().enumerate() {
                acc = add(&acc, &mul(kij, &values[base + j * stride], p), p);
            }
            acc
        })
        .collect()
}

/// Per-axis datum `A/(2 sqrt(pi)) e^{-x^2/4} sin(c x)` at extended precision.
fn datum_axis(ctx: &mut Ctx, spec: &GridSpec, t_final: f64, n: usize) -> Vec<BigFloat> {
    let p = ctx.p;
    let (xs, _, _) = axis(ctx, spec);
    let pi = ctx.pi();
    let npi = mul(&ctx.int(n as i64), &pi, p);
    let tf = ctx.num(t_final);
    let tp1 = add(&tf, &ctx.int(1), p);
    let c = mul(&tp1, &npi, p);
    let log_a = mul(&mul(&tf, &tp1, p), &mul(&npi, &npi, p), p);
    let front = div(&ctx.int(1), &mul(&ctx.int(2), &ctx.sqrt(&pi), p), p);
    xs.iter()
        .map(|x| {
            let e = add(&log_a, &div(&mul(x, x, p), &ctx.int(4), p).neg(), p);
            let s = ctx.sin(&mul(&c, x, p));
            mul(&mul(&front, &ctx.exp(&e), p), &s, p)
        })
        .collect()
}

/// `e^{T Delta} u0` for the counterexample datum on `spec`, returned in `f64`.
pub fn evolve_counterexample(t_final: f64, n: usize, spec: &GridSpec) -> Result<PreciseEvolution> {
    let d = spec.dim();
    let m = spec.points_per_axis();
    debug_assert!(datum_frequency(t_final, n) > 0.0);
    let p = precision_for(d as f64 * log_amplitude(t_final, n));
    let mut ctx = Ctx::new(p)?;
    let per_axis = datum_axis(&mut ctx, spec, t_final, n);
    let mut values = Vec::with_capacity(spec.len());
    let mut idx = vec![0usize; d];
    for _ in 0..spec.len() {
        let mut v = per_axis[idx[0]].clone();
        for &i in &idx[1..] {
            v = mul(&v, &per_axis[i], p);
        }
        values.push(v);
        spec.advance(&mut idx);
    }
    let matrix = kernel_matrix(&mut ctx, spec, t_final);
    for k in 0..d {
        values = axis_pass(&values, &matrix, m, d, k, p);
    }
    let out = values.iter().map(to_f64).collect::<Result<Vec<_>>>()?;
    Ok(PreciseEvolution {
        field: GridFunction::from_values(*spec, out)?,
        precision_bits: p,
    })
}

/// The same evolution for an arbitrary `f64` datum, used to check this module
/// against the double-precision propagator.
pub fn evolve_precise(u0: &GridFunction, t: f64, precision_bits: usize) -> Result<GridFunction> {
    let spec = *u0.spec();
    let (d, m, p) = (spec.dim(), spec.points_per_axis(), precision_bits);
    let mut ctx = Ctx::new(p)?;
    let matrix = kernel_matrix(&mut ctx, &spec, t);
    let mut values: Vec<BigFloat> = u0
        .values()
        .iter()
        .map(|&v| BigFloat::from_f64(v, p))
        .collect();
    for k in 0..d {
        values = axis_pass(&values, &matrix, m, d, k, p);
    }
    let out = values.iter().map(to_f64).collect::<Result<Vec<_>>>()?;
    GridFunction::from_values(spec, out)
}
