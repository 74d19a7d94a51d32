//! Uniform grids on the truncated box `[-L, L]^d`.
//!
//! Values are stored in row-major order: the first axis varies slowest, the
//! last axis fastest, so the flat index of the node `(i_0, .., i_{d-1})` is
//! `sum_k i_k * m^(d-1-k)`. Lattice windows use the same convention for their
//! index tuples `n in [-R, R]^d`.
//!
//! All integrals are tensor-product trapezoidal sums, which are spectrally
//! accurate for Gaussians that have decayed at the box boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance (in units of the spacing) under which a coordinate is
/// treated as lying exactly on a grid node.
const NODE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("grid dimension must be at least 1".into()));
        }
        if points_per_axis < 2 {
            return Err(Error::Domain(
                "a grid needs at least 2 points per axis".into(),
            ));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Domain(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
        })
    }

    /// Grid on `[-L, L]^d` with spacing `1 / nodes_per_unit`, so that every
    /// point of `Z^d / nodes_per_unit` inside the box is a node.
    pub fn with_resolution(dim: usize, half_width: usize, nodes_per_unit: usize) -> Result<Self> {
        if nodes_per_unit == 0 {
            return Err(Error::Domain("resolution must be positive".into()));
        }
        Self::new(dim, half_width as f64, 2 * half_width * nodes_per_unit + 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis - 1) as f64
    }

    /// Number of nodes, `m^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        let m1 = (self.points_per_axis - 1) as f64;
        // symmetric formula keeps x_i = -x_{m-1-i} exactly
        self.half_width * (2.0 * i as f64 - m1) / m1
    }

    pub fn axis_coordinates(&self) -> Vec<f64> {
        (0..self.points_per_axis)
            .map(|i| self.coordinate(i))
            .collect()
    }

    /// Trapezoidal weights along one axis (`h/2` at both ends, `h` inside).
    pub fn axis_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let m = self.points_per_axis;
        (0..m)
            .map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h })
            .collect()
    }

    /// Full tensor-product quadrature weights, one per node.
    pub fn weights(&self) -> Vec<f64> {
        let w1 = self.axis_weights();
        let mut out = vec![1.0; self.len()];
        let mut idx = vec![0usize; self.dim];
        for w in out.iter_mut() {
            *w = idx.iter().map(|&i| w1[i]).product();
            self.advance(&mut idx);
        }
        out
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut idx = vec![0usize; self.dim];
        for k in (0..self.dim).rev() {
            idx[k] = flat % m;
            flat /= m;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.coordinate(i))
            .collect()
    }

    /// Row-major odometer step; wraps to all zeros after the last node.
    pub(crate) fn advance(&self, idx: &mut [usize]) {
        for k in (0..self.dim).rev() {
            idx[k] += 1;
            if idx[k] < self.points_per_axis {
                return;
            }
            idx[k] = 0;
        }
    }

    /// Node index for coordinate `x` if `x` sits on a node.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let s = (x + self.half_width) / self.spacing();
        let r = s.round();
        if (s - r).abs() <= NODE_SNAP && r >= 0.0 && r <= (self.points_per_axis - 1) as f64 {
            Some(r as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = 1e-12 * self.half_width;
        x.len() == self.dim && x.iter().all(|&xi| xi.abs() <= self.half_width + tol)
    }

    /// True when every point of `window` is a grid node.
    pub fn aligned_with(&self, window: &LatticeWindow) -> bool {
        window.dim() == self.dim
            && (-(window.radius() as i64)..=window.radius() as i64).all(|n| {
                self.node_index(n as f64 / window.spacing_inverse() as f64)
                    .is_some()
            })
    }
}

/// Half width `L` large enough that heat kernels issued from `sources` and run
/// for time `t` (plus an optional initial Gaussian time `width_time`, for data
/// of the form `exp(-|x-c|^2 / (4 s))`) have decayed below `1e-14` of their
/// peak on the boundary of `[-L, L]^d`.
pub fn required_half_width(t: f64, width_time: f64, sources: &[Vec<f64>]) -> f64 {
    let reach = sources
        .iter()
        .flat_map(|c| c.iter().map(|x| x.abs()))
        .fold(0.0_f64, f64::max);
    reach + (4.0 * (t + width_time) * 1e14_f64.ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Shape(format!(
                "expected {} values for the grid, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::CorruptData(format!("non-finite value at node {i}")));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self {
            values: vec![c; spec.len()],
            spec,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let x1 = spec.axis_coordinates();
        let mut idx = vec![0usize; spec.dim];
        let mut x = vec![0.0; spec.dim];
        let mut values = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            for (xk, &ik) in x.iter_mut().zip(&idx) {
                *xk = x1[ik];
            }
            values.push(f(&x));
            spec.advance(&mut idx);
        }
        Self { spec, values }
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Self {
            spec: self.spec,
            values,
        })
    }

    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Trapezoidal integral of the values.
    pub fn integral(&self) -> Result<f64> {
        self.check_finite()?;
        Ok(self
            .spec
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum())
    }

    /// `sqrt(int f^2)` by the trapezoidal rule.
    pub fn l2_norm(&self) -> Result<f64> {
        self.check_finite()?;
        Ok(weighted_dot(&self.spec.weights(), &self.values, &self.values).sqrt())
    }

    /// Trapezoidal approximation of `int f g`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        self.check_finite()?;
        other.check_finite()?;
        Ok(weighted_dot(
            &self.spec.weights(),
            &self.values,
            &other.values,
        ))
    }

    /// Multilinear interpolation at an arbitrary point of the box. Exact at nodes.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let spec = &self.spec;
        if !spec.contains(x) {
            return Err(Error::Domain(format!(
                "point {x:?} lies outside the grid box"
            )));
        }
        let h = spec.spacing();
        let last = spec.points_per_axis - 1;
        // per-axis (lower node, upper weight); upper weight 0 means exact node
        let mut cells = Vec::with_capacity(spec.dim);
        for &xi in x {
            match spec.node_index(xi) {
                Some(i) => cells.push((i, 0.0)),
                None => {
                    let s = ((xi + spec.half_width) / h).clamp(0.0, last as f64);
                    let i0 = (s.floor() as usize).min(last - 1);
                    cells.push((i0, s - i0 as f64));
                }
            }
        }
        let active: Vec<usize> = (0..spec.dim).filter(|&k| cells[k].1 != 0.0).collect();
        let mut idx: Vec<usize> = cells.iter().map(|c| c.0).collect();
        let mut acc = 0.0;
        for corner in 0..(1usize << active.len()) {
            let mut weight = 1.0;
            for (bit, &k) in active.iter().enumerate() {
                let (i0, frac) = cells[k];
                if corner >> bit & 1 == 1 {
                    idx[k] = i0 + 1;
                    weight *= frac;
                } else {
                    idx[k] = i0;
                    weight *= 1.0 - frac;
                }
            }
            acc += weight * self.values[spec.flat_index(&idx)];
        }
        Ok(acc)
    }

    /// Values at the lattice points `n / N` of `window`; this is the adjoint of
    /// the Dirac-comb control operator.
    pub fn sample_on_lattice(&self, window: &LatticeWindow) -> Result<LatticeVector> {
        if window.dim() != self.spec.dim {
            return Err(Error::Shape(format!(
                "window dimension {} does not match grid dimension {}",
                window.dim(),
                self.spec.dim
            )));
        }
        let reach = window.radius() as f64 / window.spacing_inverse() as f64;
        if reach > self.spec.half_width * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "lattice window reaches {reach} but the grid box is [-{0}, {0}]",
                self.spec.half_width
            )));
        }
        let values = (0..window.len())
            .map(|i| self.interpolate(&window.point(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticeVector {
            window: *window,
            values,
        })
    }

    pub(crate) fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Shape(
                "grid functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::CorruptData(format!("non-finite value at node {i}"))),
            None => Ok(()),
        }
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

pub fn l2_norm_grid(f: &GridFunction) -> Result<f64> {
    f.l2_norm()
}

pub fn inner_product_grid(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.inner(g)
}

pub fn sample_on_lattice(f: &GridFunction, w: &LatticeWindow) -> Result<LatticeVector> {
    f.sample_on_lattice(w)
}

/// Lattice points `n / N` with `|n_i| <= R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeWindow {
    dim: usize,
    radius: usize,
    spacing_inverse: usize,
}

impl LatticeWindow {
    pub fn new(dim: usize, radius: usize, spacing_inverse: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("lattice dimension must be at least 1".into()));
        }
        if spacing_inverse == 0 {
            return Err(Error::Domain(
                "lattice spacing inverse N must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            radius,
            spacing_inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn spacing_inverse(&self) -> usize {
        self.spacing_inverse
    }

    /// `(2R + 1)^d`.
    pub fn len(&self) -> usize {
        (2 * self.radius + 1).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer index tuple `n` of entry `i`.
    pub fn index(&self, mut i: usize) -> Vec<i64> {
        let side = 2 * self.radius + 1;
        let mut n = vec![0i64; self.dim];
        for k in (0..self.dim).rev() {
            n[k] = (i % side) as i64 - self.radius as i64;
            i /= side;
        }
        n
    }

    /// Entry position of index tuple `n`, if inside the window.
    pub fn position(&self, n: &[i64]) -> Option<usize> {
        let r = self.radius as i64;
        if n.len() != self.dim || n.iter().any(|&ni| ni.abs() > r) {
            return None;
        }
        let side = 2 * r + 1;
        Some(n.iter().fold(0i64, |acc, &ni| acc * side + ni + r) as usize)
    }

    /// Spatial location `n / N` of entry `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let inv = self.spacing_inverse as f64;
        self.index(i).into_iter().map(|n| n as f64 / inv).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    window: LatticeWindow,
    values: Vec<f64>,
}

impl LatticeVector {
    pub fn new(window: LatticeWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::Shape(format!(
                "window holds {} points, got {} values",
                window.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptData("non-finite lattice value".into()));
        }
        Ok(Self { window, values })
    }

    pub fn zeros(window: LatticeWindow) -> Self {
        Self {
            values: vec![0.0; window.len()],
            window,
        }
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &LatticeVector) -> Result<f64> {
        if self.window != other.window {
            return Err(Error::Shape(
                "lattice vectors live on different windows".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }
}
