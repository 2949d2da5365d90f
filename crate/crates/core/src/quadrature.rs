//! Quadrature for data and error integrals.
//!
//! Matrix entries only involve polynomials and smooth coefficients, so plain
//! Gauss rules integrate them. Source terms, exact solutions and errors carry
//! the layer functions `exp(-β₁(1 - x)/eps)` and `exp(-β₂(1 - y)/eps)`,
//! which are invisible to a few Gauss points on a coarse cell next to the
//! transition point. With layer grading on, every such interval gets a
//! composite rule refined geometrically toward `x = 1` (or `y = 1`).

use crate::error::Result;
use crate::mesh::LocalEdge;
use crate::problem::ProblemSpec;
use crate::reference::{gauss_rule, graded_rule, CellGeom, QuadRule1D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorQuadrature {
    pub points: usize,
    /// Layer widths `eps/β₁`, `eps/β₂`; `None` means plain Gauss rules.
    pub widths: Option<[f64; 2]>,
}

impl ErrorQuadrature {
    pub fn plain(points: usize) -> Self {
        Self { points, widths: None }
    }

    pub fn layer(points: usize, spec: &ProblemSpec) -> Self {
        Self {
            points,
            widths: Some([
                spec.epsilon / spec.beta_lower[0],
                spec.epsilon / spec.beta_lower[1],
            ]),
        }
    }

    pub fn new(points: usize, spec: &ProblemSpec, graded: bool) -> Self {
        if graded {
            Self::layer(points, spec)
        } else {
            Self::plain(points)
        }
    }

    fn rule(&self, a: f64, b: f64, axis: usize) -> Result<QuadRule1D> {
        match self.widths {
            Some(w) => graded_rule(a, b, w[axis], self.points),
            None => gauss_rule(self.points),
        }
    }

    /// Reference rules in `s` and `t` for `cell`.
    pub fn cell_rules(&self, cell: &CellGeom) -> Result<[QuadRule1D; 2]> {
        Ok([
            self.rule(cell.x0, cell.x1, 0)?,
            self.rule(cell.y0, cell.y1, 1)?,
        ])
    }

    /// Rule in the ascending edge parameter of `side` of `cell`.
    pub fn side_rule(&self, cell: &CellGeom, side: LocalEdge) -> Result<QuadRule1D> {
        match side {
            LocalEdge::Bottom | LocalEdge::Top => self.rule(cell.x0, cell.x1, 0),
            LocalEdge::Left | LocalEdge::Right => self.rule(cell.y0, cell.y1, 1),
        }
    }

    /// Rule for the segment from `start` to `end` (axis aligned, ascending).
    pub fn segment_rule(&self, start: (f64, f64), end: (f64, f64)) -> Result<QuadRule1D> {
        if start.1 == end.1 {
            self.rule(start.0, end.0, 0)
        } else {
            self.rule(start.1, end.1, 1)
        }
    }
}
