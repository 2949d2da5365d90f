//! Reference-element machinery on `[-1, 1]` and `[-1, 1]^2`.
//!
//! The 1D basis is the L²-orthonormal Legendre family
//! `p_m(t) = sqrt((2m + 1) / 2) P_m(t)`. Cell and edge bases used by the
//! solver are these functions pulled back through the affine cell map and
//! rescaled by the Jacobian, so that they are orthonormal in physical L².

use crate::error::{HdgError, Result};

pub const MAX_GAUSS_POINTS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates `f` over `[a, b]` with the rule mapped affinely.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.iter().map(|(t, w)| w * f(mid + half * t)).sum::<f64>()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for m in 1..n {
        let mf = m as f64;
        let p_next = ((2.0 * mf + 1.0) * x * p - mf * p_prev) / (mf + 1.0);
        // P'_{m+1} = P'_{m-1} + (2m + 1) P_m
        let d_next = d_prev + (2.0 * mf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Gauss–Legendre rule with `n` points on `[-1, 1]`.
pub fn gauss_rule(n: usize) -> Result<QuadRule1D> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return Err(HdgError::Quadrature(format!(
            "{n} points requested, supported range is 1..={MAX_GAUSS_POINTS}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Newton iteration from the Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule1D { nodes, weights })
}

/// Layers narrower than this many widths away from a cell are ignored.
const LAYER_REACH: f64 = 40.0;

/// Rule on `[-1, 1]` for the physical interval `[a, b]` that resolves a
/// boundary layer `exp(-(1 - x) / width)` at `x = 1`.
///
/// When the interval is wider than the layer and close enough to feel it,
/// `[a, b]` is split at `b - width * 2^j` and each piece gets a `points`-point
/// Gauss rule; otherwise this is the plain Gauss rule.
pub fn graded_rule(a: f64, b: f64, width: f64, points: usize) -> Result<QuadRule1D> {
    let base = gauss_rule(points)?;
    let h = b - a;
    if !(h > 0.0) {
        return Err(HdgError::Degenerate(format!("interval [{a}, {b}]")));
    }
    if !(width > 0.0) || h <= 2.0 * width || 1.0 - b > LAYER_REACH * width {
        return Ok(base);
    }
    // Breakpoints in reference coordinates, right to left.
    let mut breaks = vec![1.0];
    let mut d = width;
    while d < h {
        breaks.push(1.0 - 2.0 * d / h);
        d *= 2.0;
    }
    breaks.push(-1.0);
    let mut nodes = Vec::with_capacity(points * (breaks.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2).rev() {
        let (lo, hi) = (pair[1], pair[0]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (t, w) in base.iter() {
            nodes.push(mid + half * t);
            weights.push(half * w);
        }
    }
    Ok(QuadRule1D { nodes, weights })
}

/// Orthonormal Legendre basis of degree `k` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Basis1D {
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct BasisTable {
    /// `values[m][q]` is `p_m` at point `q`.
    pub values: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    /// Set when any point lies outside `[-1, 1]`.
    pub extrapolated: bool,
}

impl Basis1D {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, m: usize, t: f64) -> f64 {
        let (p, _) = legendre_with_derivative(m, t);
        p * norm_factor(m)
    }

    pub fn derivative(&self, m: usize, t: f64) -> f64 {
        let (_, d) = legendre_with_derivative(m, t);
        d * norm_factor(m)
    }

    /// Values and derivatives of every basis function at `t`, written into
    /// the provided slices (each of length `degree + 1`).
    pub fn eval_into(&self, t: f64, values: &mut [f64], derivs: &mut [f64]) {
        let (mut p_prev, mut p) = (1.0, t);
        let (mut d_prev, mut d) = (0.0, 1.0);
        values[0] = norm_factor(0);
        derivs[0] = 0.0;
        if self.degree == 0 {
            return;
        }
        values[1] = p * norm_factor(1);
        derivs[1] = d * norm_factor(1);
        for m in 1..self.degree {
            let mf = m as f64;
            let p_next = ((2.0 * mf + 1.0) * t * p - mf * p_prev) / (mf + 1.0);
            let d_next = d_prev + (2.0 * mf + 1.0) * p;
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
            values[m + 1] = p * norm_factor(m + 1);
            derivs[m + 1] = d * norm_factor(m + 1);
        }
    }

    pub fn values_at(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut d = vec![0.0; self.len()];
        self.eval_into(t, &mut v, &mut d);
        v
    }

    pub fn eval(&self, points: &[f64]) -> BasisTable {
        let n = self.len();
        let mut values = vec![vec![0.0; points.len()]; n];
        let mut derivatives = vec![vec![0.0; points.len()]; n];
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; n];
        for (q, &t) in points.iter().enumerate() {
            self.eval_into(t, &mut v, &mut d);
            for m in 0..n {
                values[m][q] = v[m];
                derivatives[m][q] = d[m];
            }
        }
        let extrapolated = points.iter().any(|t| t.abs() > 1.0);
        BasisTable {
            values,
            derivatives,
            extrapolated,
        }
    }
}

#[inline]
fn norm_factor(m: usize) -> f64 {
    ((2 * m + 1) as f64 / 2.0).sqrt()
}

/// Tensor-product `Q^k` basis `phi_{mn}(s, t) = p_m(s) p_n(t)`.
///
/// Functions are indexed `a = m + (k + 1) n`.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    pub degree: usize,
    pub line: Basis1D,
}

/// Values and reference derivatives of a tensor basis at the points of a
/// tensor quadrature rule. Point index `q = qx + nq * qy`.
#[derive(Debug, Clone)]
pub struct TensorTable {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub d_s: Vec<Vec<f64>>,
    pub d_t: Vec<Vec<f64>>,
}

impl TensorBasis {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            line: Basis1D::new(degree),
        }
    }

    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize) -> usize {
        m + (self.degree + 1) * n
    }

    /// `(m, n)` of function `a`.
    #[inline]
    pub fn degrees(&self, a: usize) -> (usize, usize) {
        (a % (self.degree + 1), a / (self.degree + 1))
    }

    /// Values of all basis functions at `(s, t)`.
    pub fn values_at(&self, s: f64, t: f64, out: &mut [f64]) {
        let p = self.degree + 1;
        let vs = self.line.values_at(s);
        let vt = self.line.values_at(t);
        for n in 0..p {
            for m in 0..p {
                out[m + p * n] = vs[m] * vt[n];
            }
        }
    }

    pub fn table(&self, rule: &QuadRule1D) -> TensorTable {
        let p = self.degree + 1;
        let nq = rule.len();
        let line = self.line.eval(&rule.nodes);
        let mut points = Vec::with_capacity(nq * nq);
        let mut weights = Vec::with_capacity(nq * nq);
        for qy in 0..nq {
            for qx in 0..nq {
                points.push((rule.nodes[qx], rule.nodes[qy]));
                weights.push(rule.weights[qx] * rule.weights[qy]);
            }
        }
        let mut values = vec![vec![0.0; nq * nq]; p * p];
        let mut d_s = vec![vec![0.0; nq * nq]; p * p];
        let mut d_t = vec![vec![0.0; nq * nq]; p * p];
        for n in 0..p {
            for m in 0..p {
                let a = m + p * n;
                for qy in 0..nq {
                    for qx in 0..nq {
                        let q = qx + nq * qy;
                        values[a][q] = line.values[m][qx] * line.values[n][qy];
                        d_s[a][q] = line.derivatives[m][qx] * line.values[n][qy];
                        d_t[a][q] = line.values[m][qx] * line.derivatives[n][qy];
                    }
                }
            }
        }
        TensorTable {
            points,
            weights,
            values,
            d_s,
            d_t,
        }
    }
}

/// Axis-aligned cell `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeom {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMap {
    pub point: (f64, f64),
    /// `hx * hy / 4`
    pub jacobian: f64,
    /// `2 / hx`, the factor in `d/dx = (2 / hx) d/ds`.
    pub ds_dx: f64,
    pub dt_dy: f64,
}

impl CellGeom {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0) || !(y1 > y0) {
            return Err(HdgError::Degenerate(format!(
                "cell ({x0}, {x1}) x ({y0}, {y1}) has nonpositive width"
            )));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn hx(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn hy(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn jacobian(&self) -> f64 {
        0.25 * self.hx() * self.hy()
    }

    #[inline]
    pub fn to_physical(&self, s: f64, t: f64) -> (f64, f64) {
        (
            self.x0 + 0.5 * (s + 1.0) * self.hx(),
            self.y0 + 0.5 * (t + 1.0) * self.hy(),
        )
    }

    #[inline]
    pub fn to_reference(&self, x: f64, y: f64) -> (f64, f64) {
        (
            2.0 * (x - self.x0) / self.hx() - 1.0,
            2.0 * (y - self.y0) / self.hy() - 1.0,
        )
    }

    pub fn map(&self, s: f64, t: f64) -> CellMap {
        CellMap {
            point: self.to_physical(s, t),
            jacobian: self.jacobian(),
            ds_dx: 2.0 / self.hx(),
            dt_dy: 2.0 / self.hy(),
        }
    }
}

/// Affine map of a reference point into a cell; rejects zero-width cells.
pub fn map_to_cell(cell: (f64, f64, f64, f64), s: f64, t: f64) -> Result<CellMap> {
    let geom = CellGeom::new(cell.0, cell.1, cell.2, cell.3)?;
    Ok(geom.map(s, t))
}
