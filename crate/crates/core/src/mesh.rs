//! Piecewise-uniform Shishkin mesh on the unit square, refined towards
//! `x = 1` and `y = 1`.

use std::fmt::Write as _;

use crate::error::{HdgError, Result};
use crate::reference::CellGeom;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConfig {
    /// Cells per direction; divisible by 4.
    pub n: usize,
    pub epsilon: f64,
    pub sigma: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl MeshConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 4 != 0 {
            return Err(HdgError::InvalidMesh(format!(
                "N = {} must be a positive multiple of 4",
                self.n
            )));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HdgError::InvalidMesh(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// One of the four Shishkin subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Smooth,
    XLayer,
    YLayer,
    CornerLayer,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Smooth,
        Region::XLayer,
        Region::YLayer,
        Region::CornerLayer,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Smooth => "smooth",
            Region::XLayer => "x-layer",
            Region::YLayer => "y-layer",
            Region::CornerLayer => "corner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// `x = const`, parameterized by ascending `y`.
    Vertical,
    /// `y = const`, parameterized by ascending `x`.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub axis: Axis,
    /// Node index of the constant coordinate.
    pub line: usize,
    /// Zero-based interval index along the edge direction.
    pub segment: usize,
    /// Left/right cells for vertical edges, below/above for horizontal ones.
    pub cells: [Option<usize>; 2],
    /// Position among the interior edges; `None` on the boundary.
    pub trace_index: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.trace_index.is_none()
    }
}

/// Local edge slots of a cell, in the order used throughout the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalEdge {
    Bottom = 0,
    Right = 1,
    Top = 2,
    Left = 3,
}

impl LocalEdge {
    pub const ALL: [LocalEdge; 4] = [
        LocalEdge::Bottom,
        LocalEdge::Right,
        LocalEdge::Top,
        LocalEdge::Left,
    ];

    pub fn normal(self) -> [f64; 2] {
        match self {
            LocalEdge::Bottom => [0.0, -1.0],
            LocalEdge::Right => [1.0, 0.0],
            LocalEdge::Top => [0.0, 1.0],
            LocalEdge::Left => [-1.0, 0.0],
        }
    }

    /// Reference point `(s, t)` on this side at edge parameter `r`.
    #[inline]
    pub fn reference_point(self, r: f64) -> (f64, f64) {
        match self {
            LocalEdge::Bottom => (r, -1.0),
            LocalEdge::Right => (1.0, r),
            LocalEdge::Top => (r, 1.0),
            LocalEdge::Left => (-1.0, r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGeometry {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub length: f64,
    pub axis: Axis,
    /// Adjacent cells with the outward normal each one sees.
    pub sides: Vec<(usize, [f64; 2])>,
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct ShishkinMesh {
    pub config: MeshConfig,
    pub x_nodes: Vec<f64>,
    pub y_nodes: Vec<f64>,
    pub tau_x: f64,
    pub tau_y: f64,
    pub edges: Vec<Edge>,
    /// Global edge ids per cell, indexed by [`LocalEdge`].
    pub cell_edges: Vec<[usize; 4]>,
    pub n_interior_edges: usize,
    /// `epsilon > 1/N`; the mesh is still built.
    pub assumption_warning: bool,
}

fn transition_point(sigma: f64, epsilon: f64, beta: f64, n: usize) -> f64 {
    (sigma * epsilon / beta * (n as f64).ln()).min(0.5)
}

fn shishkin_nodes(n: usize, tau: f64) -> Vec<f64> {
    let half = n / 2;
    let nf = n as f64;
    let coarse = 2.0 * (1.0 - tau) / nf;
    let fine = 2.0 * tau / nf;
    (0..=n)
        .map(|i| {
            if i <= half {
                coarse * i as f64
            } else if i == n {
                1.0
            } else {
                1.0 - tau + fine * (i - half) as f64
            }
        })
        .collect()
}

impl ShishkinMesh {
    pub fn build(cfg: MeshConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let tau_x = transition_point(cfg.sigma, cfg.epsilon, cfg.beta1, n);
        let tau_y = transition_point(cfg.sigma, cfg.epsilon, cfg.beta2, n);
        let mut x_nodes = shishkin_nodes(n, tau_x);
        let mut y_nodes = shishkin_nodes(n, tau_y);
        // The coarse branch gives 2(1 - tau)/N * N/2, which may differ from
        // 1 - tau in the last bit; pin the transition node.
        x_nodes[n / 2] = 1.0 - tau_x;
        y_nodes[n / 2] = 1.0 - tau_y;

        let assumption_warning = cfg.epsilon > 1.0 / n as f64;
        if assumption_warning {
            log::warn!(
                "epsilon = {} exceeds 1/N = {}; layer assumption not met",
                cfg.epsilon,
                1.0 / n as f64
            );
        }

        let cell_id = |i: usize, j: usize| i + n * j;
        let mut edges = Vec::with_capacity(2 * n * (n + 1));
        let mut cell_edges = vec![[usize::MAX; 4]; n * n];
        let mut n_interior = 0usize;
        let mut push = |edge: Edge, edges: &mut Vec<Edge>| {
            let id = edges.len();
            let mut e = edge;
            if e.cells[0].is_some() && e.cells[1].is_some() {
                e.trace_index = Some(n_interior);
                n_interior += 1;
            }
            edges.push(e);
            id
        };
        // Row-by-row ordering keeps the trace matrix banded.
        for row in 0..=n {
            for seg in 0..n {
                let below = (row > 0).then(|| cell_id(seg, row - 1));
                let above = (row < n).then(|| cell_id(seg, row));
                let id = push(
                    Edge {
                        axis: Axis::Horizontal,
                        line: row,
                        segment: seg,
                        cells: [below, above],
                        trace_index: None,
                    },
                    &mut edges,
                );
                if let Some(c) = below {
                    cell_edges[c][LocalEdge::Top as usize] = id;
                }
                if let Some(c) = above {
                    cell_edges[c][LocalEdge::Bottom as usize] = id;
                }
            }
            if row < n {
                for line in 0..=n {
                    let left = (line > 0).then(|| cell_id(line - 1, row));
                    let right = (line < n).then(|| cell_id(line, row));
                    let id = push(
                        Edge {
                            axis: Axis::Vertical,
                            line,
                            segment: row,
                            cells: [left, right],
                            trace_index: None,
                        },
                        &mut edges,
                    );
                    if let Some(c) = left {
                        cell_edges[c][LocalEdge::Right as usize] = id;
                    }
                    if let Some(c) = right {
                        cell_edges[c][LocalEdge::Left as usize] = id;
                    }
                }
            }
        }

        Ok(Self {
            config: cfg,
            x_nodes,
            y_nodes,
            tau_x,
            tau_y,
            edges,
            cell_edges,
            n_interior_edges: n_interior,
            assumption_warning,
        })
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn num_cells(&self) -> usize {
        self.config.n * self.config.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Flat id of the cell `K_ij` with one-based `i, j`.
    pub fn cell_id(&self, i: usize, j: usize) -> Result<usize> {
        let n = self.n();
        if i == 0 || j == 0 || i > n || j > n {
            return Err(HdgError::OutOfRange(format!("cell ({i}, {j}) with N = {n}")));
        }
        Ok((i - 1) + n * (j - 1))
    }

    /// One-based `(i, j)` of a flat cell id.
    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        let n = self.n();
        (cell % n + 1, cell / n + 1)
    }

    pub fn cell_geom(&self, cell: usize) -> CellGeom {
        let n = self.n();
        let (i, j) = (cell % n, cell / n);
        CellGeom {
            x0: self.x_nodes[i],
            x1: self.x_nodes[i + 1],
            y0: self.y_nodes[j],
            y1: self.y_nodes[j + 1],
        }
    }

    pub fn classify_cell(&self, i: usize, j: usize) -> Result<Region> {
        self.cell_id(i, j)?;
        let half = self.n() / 2;
        Ok(match (i > half, j > half) {
            (false, false) => Region::Smooth,
            (true, false) => Region::XLayer,
            (false, true) => Region::YLayer,
            (true, true) => Region::CornerLayer,
        })
    }

    pub fn region_of(&self, cell: usize) -> Region {
        let (i, j) = self.cell_ij(cell);
        self.classify_cell(i, j).expect("cell id in range")
    }

    /// Endpoints `(a, b)` of the edge parameter interval, and the fixed coordinate.
    pub fn edge_span(&self, edge: usize) -> (f64, f64, f64) {
        let e = &self.edges[edge];
        match e.axis {
            Axis::Vertical => (
                self.y_nodes[e.segment],
                self.y_nodes[e.segment + 1],
                self.x_nodes[e.line],
            ),
            Axis::Horizontal => (
                self.x_nodes[e.segment],
                self.x_nodes[e.segment + 1],
                self.y_nodes[e.line],
            ),
        }
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let (a, b, _) = self.edge_span(edge);
        b - a
    }

    /// Physical point at parameter `r` in `[-1, 1]` along the edge.
    #[inline]
    pub fn edge_point(&self, edge: usize, r: f64) -> (f64, f64) {
        let (a, b, c) = self.edge_span(edge);
        let s = a + 0.5 * (r + 1.0) * (b - a);
        match self.edges[edge].axis {
            Axis::Vertical => (c, s),
            Axis::Horizontal => (s, c),
        }
    }

    /// Edge parameter in `[-1, 1]` of a physical point on the edge.
    #[inline]
    pub fn edge_parameter(&self, edge: usize, x: f64, y: f64) -> f64 {
        let (a, b, _) = self.edge_span(edge);
        let s = match self.edges[edge].axis {
            Axis::Vertical => y,
            Axis::Horizontal => x,
        };
        2.0 * (s - a) / (b - a) - 1.0
    }

    pub fn edge_geometry(&self, edge: usize) -> Result<EdgeGeometry> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| HdgError::OutOfRange(format!("edge {edge} of {}", self.edges.len())))?;
        let (a, b, c) = self.edge_span(edge);
        let (start, end) = match e.axis {
            Axis::Vertical => ((c, a), (c, b)),
            Axis::Horizontal => ((a, c), (b, c)),
        };
        let (first, second) = match e.axis {
            Axis::Vertical => ([1.0, 0.0], [-1.0, 0.0]),
            Axis::Horizontal => ([0.0, 1.0], [0.0, -1.0]),
        };
        let mut sides = Vec::with_capacity(2);
        if let Some(c0) = e.cells[0] {
            sides.push((c0, first));
        }
        if let Some(c1) = e.cells[1] {
            sides.push((c1, second));
        }
        Ok(EdgeGeometry {
            start,
            end,
            length: b - a,
            axis: e.axis,
            sides,
            boundary: e.is_boundary(),
        })
    }

    /// Plain-text listing of nodes, cells and edges.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let cfg = &self.config;
        let _ = writeln!(
            out,
            "# shishkin mesh N={} epsilon={:e} sigma={} beta1={} beta2={}",
            cfg.n, cfg.epsilon, cfg.sigma, cfg.beta1, cfg.beta2
        );
        let _ = writeln!(out, "tau_x {:.16e}", self.tau_x);
        let _ = writeln!(out, "tau_y {:.16e}", self.tau_y);
        if self.assumption_warning {
            let _ = writeln!(out, "# warning: epsilon > 1/N");
        }
        let _ = writeln!(out, "[x_nodes]");
        for (i, x) in self.x_nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {x:.16e}");
        }
        let _ = writeln!(out, "[y_nodes]");
        for (j, y) in self.y_nodes.iter().enumerate() {
            let _ = writeln!(out, "{j} {y:.16e}");
        }
        let _ = writeln!(out, "[cells] id i j x0 x1 y0 y1 region");
        for c in 0..self.num_cells() {
            let (i, j) = self.cell_ij(c);
            let g = self.cell_geom(c);
            let _ = writeln!(
                out,
                "{c} {i} {j} {:.16e} {:.16e} {:.16e} {:.16e} {}",
                g.x0,
                g.x1,
                g.y0,
                g.y1,
                self.region_of(c).label()
            );
        }
        let _ = writeln!(out, "[edges] id axis line segment cell0 cell1 trace");
        let fmt = |c: Option<usize>| c.map_or("-".to_string(), |v| v.to_string());
        for (id, e) in self.edges.iter().enumerate() {
            let axis = match e.axis {
                Axis::Vertical => "v",
                Axis::Horizontal => "h",
            };
            let _ = writeln!(
                out,
                "{id} {axis} {} {} {} {} {}",
                e.line,
                e.segment,
                fmt(e.cells[0]),
                fmt(e.cells[1]),
                fmt(e.trace_index)
            );
        }
        out
    }
}
