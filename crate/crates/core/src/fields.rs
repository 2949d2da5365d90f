//! Discrete HDG fields and pointwise evaluators for `(r, w, mu)` triples.

use crate::mesh::ShishkinMesh;
use crate::problem::{ExactSolution, ProblemSpec};
use crate::reference::TensorBasis;

/// Coefficients of `(q, u, û)` in the physically orthonormal bases.
///
/// Cell blocks hold `(k+1)^2` coefficients each; every edge (boundary
/// included) holds `k+1` trace coefficients, and boundary traces stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFields {
    pub k: usize,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub u: Vec<f64>,
    pub trace: Vec<f64>,
}

pub type SolutionFields = DiscreteFields;
pub type ProjectedFields = DiscreteFields;

impl DiscreteFields {
    pub fn zeros(mesh: &ShishkinMesh, k: usize) -> Self {
        let m = (k + 1) * (k + 1);
        let nc = mesh.num_cells();
        Self {
            k,
            q1: vec![0.0; nc * m],
            q2: vec![0.0; nc * m],
            u: vec![0.0; nc * m],
            trace: vec![0.0; mesh.num_edges() * (k + 1)],
        }
    }

    pub fn cell_dofs(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }

    pub fn edge_dofs(&self) -> usize {
        self.k + 1
    }

    pub fn q1_cell(&self, cell: usize) -> &[f64] {
        let m = self.cell_dofs();
        &self.q1[cell * m..(cell + 1) * m]
    }

    pub fn q2_cell(&self, cell: usize) -> &[f64] {
        let m = self.cell_dofs();
        &self.q2[cell * m..(cell + 1) * m]
    }

    pub fn u_cell(&self, cell: usize) -> &[f64] {
        let m = self.cell_dofs();
        &self.u[cell * m..(cell + 1) * m]
    }

    pub fn trace_edge(&self, edge: usize) -> &[f64] {
        let p = self.edge_dofs();
        &self.trace[edge * p..(edge + 1) * p]
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.k == other.k
            && self.q1.len() == other.q1.len()
            && self.u.len() == other.u.len()
            && self.trace.len() == other.trace.len()
    }

    /// `self - other`, coefficientwise.
    pub fn difference(&self, other: &Self) -> Self {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a - b).collect();
        Self {
            k: self.k,
            q1: sub(&self.q1, &other.q1),
            q2: sub(&self.q2, &other.q2),
            u: sub(&self.u, &other.u),
            trace: sub(&self.trace, &other.trace),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let s = |a: &[f64]| a.iter().map(|v| alpha * v).collect();
        Self {
            k: self.k,
            q1: s(&self.q1),
            q2: s(&self.q2),
            u: s(&self.u),
            trace: s(&self.trace),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.q1
            .iter()
            .chain(&self.q2)
            .chain(&self.u)
            .chain(&self.trace)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A triple `(r, w, mu)` that can be evaluated pointwise: `r` and `w` per
/// cell, `mu` per edge.
pub trait FieldTriple {
    fn flux(&self, cell: usize, x: f64, y: f64) -> [f64; 2];
    fn scalar(&self, cell: usize, x: f64, y: f64) -> f64;
    fn trace(&self, edge: usize, x: f64, y: f64) -> f64;

    /// `w|_K - mu` at a point of an edge of `cell`.
    fn jump(&self, cell: usize, edge: usize, x: f64, y: f64) -> f64 {
        self.scalar(cell, x, y) - self.trace(edge, x, y)
    }
}

impl<T: FieldTriple + ?Sized> FieldTriple for &T {
    fn flux(&self, cell: usize, x: f64, y: f64) -> [f64; 2] {
        (**self).flux(cell, x, y)
    }

    fn scalar(&self, cell: usize, x: f64, y: f64) -> f64 {
        (**self).scalar(cell, x, y)
    }

    fn trace(&self, edge: usize, x: f64, y: f64) -> f64 {
        (**self).trace(edge, x, y)
    }

    fn jump(&self, cell: usize, edge: usize, x: f64, y: f64) -> f64 {
        (**self).jump(cell, edge, x, y)
    }
}

/// Piecewise-polynomial triple backed by [`DiscreteFields`].
pub struct DiscreteTriple<'a> {
    mesh: &'a ShishkinMesh,
    basis: TensorBasis,
    fields: &'a DiscreteFields,
}

impl<'a> DiscreteTriple<'a> {
    pub fn new(mesh: &'a ShishkinMesh, fields: &'a DiscreteFields) -> Self {
        Self {
            mesh,
            basis: TensorBasis::new(fields.k),
            fields,
        }
    }

    fn cell_values(&self, cell: usize, x: f64, y: f64, out: &mut [f64]) {
        let g = self.mesh.cell_geom(cell);
        let (s, t) = g.to_reference(x, y);
        self.basis.values_at(s, t, out);
        let scale = 1.0 / g.jacobian().sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
    }

    fn combine(values: &[f64], coeffs: &[f64]) -> f64 {
        values.iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }
}

const MAX_LOCAL: usize = 64;

impl FieldTriple for DiscreteTriple<'_> {
    fn flux(&self, cell: usize, x: f64, y: f64) -> [f64; 2] {
        let mut v = [0.0; MAX_LOCAL];
        let v = &mut v[..self.basis.len()];
        self.cell_values(cell, x, y, v);
        [
            Self::combine(v, self.fields.q1_cell(cell)),
            Self::combine(v, self.fields.q2_cell(cell)),
        ]
    }

    fn scalar(&self, cell: usize, x: f64, y: f64) -> f64 {
        let mut v = [0.0; MAX_LOCAL];
        let v = &mut v[..self.basis.len()];
        self.cell_values(cell, x, y, v);
        Self::combine(v, self.fields.u_cell(cell))
    }

    fn trace(&self, edge: usize, x: f64, y: f64) -> f64 {
        let r = self.mesh.edge_parameter(edge, x, y);
        let scale = 1.0 / (0.5 * self.mesh.edge_length(edge)).sqrt();
        let vals = self.basis.line.values_at(r);
        scale * Self::combine(&vals, self.fields.trace_edge(edge))
    }
}

/// `(q, u, u|_E)` of an exact solution.
pub struct ExactTriple<'a> {
    epsilon: f64,
    exact: &'a ExactSolution,
}

impl<'a> ExactTriple<'a> {
    pub fn new(spec: &'a ProblemSpec, exact: &'a ExactSolution) -> Self {
        Self {
            epsilon: spec.epsilon,
            exact,
        }
    }
}

impl FieldTriple for ExactTriple<'_> {
    fn flux(&self, _cell: usize, x: f64, y: f64) -> [f64; 2] {
        self.exact.q(self.epsilon, x, y)
    }

    fn scalar(&self, _cell: usize, x: f64, y: f64) -> f64 {
        self.exact.u(x, y)
    }

    fn trace(&self, _edge: usize, x: f64, y: f64) -> f64 {
        self.exact.u(x, y)
    }

    fn jump(&self, _cell: usize, _edge: usize, _x: f64, _y: f64) -> f64 {
        0.0
    }
}

/// `a - b` for two triples.
pub struct Difference<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: FieldTriple, B: FieldTriple> FieldTriple for Difference<A, B> {
    fn flux(&self, cell: usize, x: f64, y: f64) -> [f64; 2] {
        let (p, q) = (self.a.flux(cell, x, y), self.b.flux(cell, x, y));
        [p[0] - q[0], p[1] - q[1]]
    }

    fn scalar(&self, cell: usize, x: f64, y: f64) -> f64 {
        self.a.scalar(cell, x, y) - self.b.scalar(cell, x, y)
    }

    fn trace(&self, edge: usize, x: f64, y: f64) -> f64 {
        self.a.trace(edge, x, y) - self.b.trace(edge, x, y)
    }

    fn jump(&self, cell: usize, edge: usize, x: f64, y: f64) -> f64 {
        self.a.jump(cell, edge, x, y) - self.b.jump(cell, edge, x, y)
    }
}

/// Multiplies every component of a triple by a constant.
pub struct Scaled<A> {
    pub inner: A,
    pub alpha: f64,
}

impl<A: FieldTriple> FieldTriple for Scaled<A> {
    fn flux(&self, cell: usize, x: f64, y: f64) -> [f64; 2] {
        let f = self.inner.flux(cell, x, y);
        [self.alpha * f[0], self.alpha * f[1]]
    }

    fn scalar(&self, cell: usize, x: f64, y: f64) -> f64 {
        self.alpha * self.inner.scalar(cell, x, y)
    }

    fn trace(&self, edge: usize, x: f64, y: f64) -> f64 {
        self.alpha * self.inner.trace(edge, x, y)
    }

    fn jump(&self, cell: usize, edge: usize, x: f64, y: f64) -> f64 {
        self.alpha * self.inner.jump(cell, edge, x, y)
    }
}

/// Triple given by closures; handy for norm checks on analytic data.
pub struct FnTriple<R, W, M> {
    pub r: R,
    pub w: W,
    pub mu: M,
}

impl<R, W, M> FieldTriple for FnTriple<R, W, M>
where
    R: Fn(f64, f64) -> [f64; 2],
    W: Fn(f64, f64) -> f64,
    M: Fn(f64, f64) -> f64,
{
    fn flux(&self, _cell: usize, x: f64, y: f64) -> [f64; 2] {
        (self.r)(x, y)
    }

    fn scalar(&self, _cell: usize, x: f64, y: f64) -> f64 {
        (self.w)(x, y)
    }

    fn trace(&self, _edge: usize, x: f64, y: f64) -> f64 {
        (self.mu)(x, y)
    }
}
