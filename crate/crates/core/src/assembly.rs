//! HDG discretization: per-cell local systems, static condensation onto
//! interior-edge traces, global solve and local recovery.
//!
//! Cell unknowns are ordered `(q1, q2, u)`, each a block of `(k+1)^2`
//! coefficients. Trace unknowns on a cell are ordered by [`LocalEdge`],
//! `k+1` coefficients per edge. Local equations per cell `K`:
//!
//! ```text
//! (i)   eps^-1 (q, r) - (u, div r) + <û, r.n>                          = 0
//! (ii) -(q + βu, ∇w) + ((c - div β) u, w) + <q.n + β.n û + τ(u - û), w> = (f, w)
//! (iii)                                     <q.n + β.n û + τ(u - û), μ> (summed over cells)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{HdgError, Result};
use crate::fields::{DiscreteFields, FieldTriple};
use crate::mesh::{LocalEdge, ShishkinMesh};
use crate::problem::ProblemSpec;
use crate::quadrature::ErrorQuadrature;
use crate::reference::{gauss_rule, Basis1D, CellGeom, QuadRule1D, TensorBasis, TensorTable};
use crate::sparse::{CooBuilder, SolveOutcome, SolverOptions, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdgConfig {
    pub k: usize,
    pub tau: f64,
    /// Gauss points per direction for matrix entries; default `k + 2`.
    pub quad_assembly: Option<usize>,
    /// Gauss points per direction for loads, projections and error norms;
    /// default `k + 4`.
    pub quad_error: Option<usize>,
    /// Grade the error quadrature toward the outflow layers (see
    /// [`ErrorQuadrature`]).
    pub layer_quadrature: bool,
    pub solver: SolverOptions,
}

impl HdgConfig {
    pub fn new(k: usize, tau: f64) -> Self {
        Self {
            k,
            tau,
            quad_assembly: None,
            quad_error: None,
            layer_quadrature: true,
            solver: SolverOptions::default(),
        }
    }

    pub fn assembly_points(&self) -> usize {
        self.quad_assembly.unwrap_or(self.k + 2)
    }

    pub fn error_points(&self) -> usize {
        self.quad_error.unwrap_or(self.k + 4)
    }

    pub fn cell_dofs(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }

    pub fn error_quadrature(&self, spec: &ProblemSpec) -> ErrorQuadrature {
        ErrorQuadrature::new(self.error_points(), spec, self.layer_quadrature)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(HdgError::InvalidConfig(format!("degree k = {} must be >= 1", self.k)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(HdgError::InvalidConfig(format!("tau = {} must be positive", self.tau)));
        }
        for (what, n) in [("assembly", self.assembly_points()), ("error", self.error_points())] {
            if n < self.k + 1 {
                return Err(HdgError::Quadrature(format!(
                    "{what} quadrature with {n} points is below k + 1 = {}",
                    self.k + 1
                )));
            }
            gauss_rule(n)?;
        }
        Ok(())
    }
}

/// Minimum of `tau - β.n / 2` over the edge quadrature points of every cell
/// side, with its location.
pub fn stabilization_margin(
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    tau: f64,
    points: usize,
) -> Result<(f64, f64, f64)> {
    let rule = gauss_rule(points)?;
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for cell in 0..mesh.num_cells() {
        let g = mesh.cell_geom(cell);
        for side in LocalEdge::ALL {
            let nrm = side.normal();
            for &r in &rule.nodes {
                let (s, t) = side.reference_point(r);
                let (x, y) = g.to_physical(s, t);
                let b = spec.beta(x, y);
                let m = tau - 0.5 * (b[0] * nrm[0] + b[1] * nrm[1]);
                if m < worst.0 {
                    worst = (m, x, y);
                }
            }
        }
    }
    Ok(worst)
}

pub fn check_stabilization(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<f64> {
    let (margin, x, y) = stabilization_margin(mesh, spec, cfg.tau, cfg.assembly_points())?;
    if margin > 0.0 {
        Ok(margin)
    } else {
        Err(HdgError::Stabilization { margin, x, y })
    }
}

/// Basis tables on the reference cell and on its four sides for one rule.
#[derive(Debug, Clone)]
pub struct ReferenceTables {
    pub k: usize,
    pub rule: QuadRule1D,
    pub cell: TensorTable,
    /// Cell basis at the edge points of each side: `side[e][a][g]`.
    pub side: [Vec<Vec<f64>>; 4],
    /// Edge basis at the edge points: `edge[b][g]`.
    pub edge: Vec<Vec<f64>>,
}

impl ReferenceTables {
    pub fn new(k: usize, points: usize) -> Result<Self> {
        let rule = gauss_rule(points)?;
        let basis = TensorBasis::new(k);
        let cell = basis.table(&rule);
        let m = basis.len();
        let side = LocalEdge::ALL.map(|e| {
            let mut tab = vec![vec![0.0; rule.len()]; m];
            let mut buf = vec![0.0; m];
            for (g, &r) in rule.nodes.iter().enumerate() {
                let (s, t) = e.reference_point(r);
                basis.values_at(s, t, &mut buf);
                for a in 0..m {
                    tab[a][g] = buf[a];
                }
            }
            tab
        });
        let edge = Basis1D::new(k).eval(&rule.nodes).values;
        Ok(Self {
            k,
            rule,
            cell,
            side,
            edge,
        })
    }

    pub fn cell_dofs(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }
}

fn side_length(g: &CellGeom, e: LocalEdge) -> f64 {
    match e {
        LocalEdge::Bottom | LocalEdge::Top => g.hx(),
        LocalEdge::Left | LocalEdge::Right => g.hy(),
    }
}

/// Dense blocks of one cell's local problem.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    /// `3m x 3m` coupling of `(q1, q2, u)` in equations (i)-(ii).
    pub interior: DMatrix<f64>,
    /// `3m x 4p` trace coupling in equations (i)-(ii).
    pub interior_trace: DMatrix<f64>,
    /// `4p x 3m` flux moments of `(q, u)` against each side's trace basis.
    pub flux_interior: DMatrix<f64>,
    /// `4p x 4p` flux moments of the trace itself (block diagonal by side).
    pub flux_trace: DMatrix<f64>,
    /// Right-hand side of (i)-(ii): zero on the `q` rows, `(f, w)` on `u`.
    pub load: DVector<f64>,
}

impl LocalSystem {
    /// The `eps^-1 (q, r)` block.
    pub fn mass_block(&self, m: usize) -> DMatrix<f64> {
        self.interior.view((0, 0), (m, m)).into_owned()
    }
}

/// Assembles the local matrices of `cell` with the assembly rule and the load
/// with the error quadrature.
pub fn local_matrices(
    mesh: &ShishkinMesh,
    cell: usize,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
    tables: &ReferenceTables,
    load_quad: &ErrorQuadrature,
) -> Result<LocalSystem> {
    let k = cfg.k;
    let p = k + 1;
    let m = p * p;
    let eps = spec.epsilon;
    let tau = cfg.tau;
    let g = mesh.cell_geom(cell);
    let jac = g.jacobian();
    let sj = jac.sqrt();
    let (dx, dy) = (2.0 / g.hx(), 2.0 / g.hy());

    let mut interior = DMatrix::<f64>::zeros(3 * m, 3 * m);
    let mut interior_trace = DMatrix::<f64>::zeros(3 * m, 4 * p);
    let mut flux_interior = DMatrix::<f64>::zeros(4 * p, 3 * m);
    let mut flux_trace = DMatrix::<f64>::zeros(4 * p, 4 * p);
    let mut load = DVector::<f64>::zeros(3 * m);

    let tab = &tables.cell;
    let nq = tab.weights.len();
    let mut phi = vec![0.0; m];
    let mut phx = vec![0.0; m];
    let mut phy = vec![0.0; m];
    for q in 0..nq {
        let (s, t) = tab.points[q];
        let (x, y) = g.to_physical(s, t);
        let w = tab.weights[q] * jac;
        let b = spec.beta(x, y);
        let react = spec.c(x, y) - spec.div_beta(x, y);
        for a in 0..m {
            phi[a] = tab.values[a][q] / sj;
            phx[a] = dx * tab.d_s[a][q] / sj;
            phy[a] = dy * tab.d_t[a][q] / sj;
        }
        for a in 0..m {
            let conv = b[0] * phx[a] + b[1] * phy[a];
            for bb in 0..m {
                let mass = w * phi[bb] * phi[a];
                interior[(a, bb)] += mass / eps;
                interior[(m + a, m + bb)] += mass / eps;
                interior[(a, 2 * m + bb)] -= w * phi[bb] * phx[a];
                interior[(m + a, 2 * m + bb)] -= w * phi[bb] * phy[a];
                interior[(2 * m + a, bb)] -= w * phi[bb] * phx[a];
                interior[(2 * m + a, m + bb)] -= w * phi[bb] * phy[a];
                interior[(2 * m + a, 2 * m + bb)] += w * phi[bb] * (react * phi[a] - conv);
            }
        }
    }

    add_load(&mut load.as_mut_slice()[2 * m..], spec, &g, k, load_quad)?;

    for side in LocalEdge::ALL {
        let e = side as usize;
        let nrm = side.normal();
        let len = side_length(&g, side);
        let half = 0.5 * len;
        let se = half.sqrt();
        let cell_tab = &tables.side[e];
        for (gq, (&r, &wr)) in tables.rule.nodes.iter().zip(&tables.rule.weights).enumerate() {
            let (s, t) = side.reference_point(r);
            let (x, y) = g.to_physical(s, t);
            let w = wr * half;
            let b = spec.beta(x, y);
            let bn = b[0] * nrm[0] + b[1] * nrm[1];
            for a in 0..m {
                phi[a] = cell_tab[a][gq] / sj;
            }
            for a in 0..m {
                for bb in 0..m {
                    let mm = w * phi[bb] * phi[a];
                    interior[(2 * m + a, bb)] += nrm[0] * mm;
                    interior[(2 * m + a, m + bb)] += nrm[1] * mm;
                    interior[(2 * m + a, 2 * m + bb)] += tau * mm;
                }
                for bb in 0..p {
                    let psi = tables.edge[bb][gq] / se;
                    let col = e * p + bb;
                    interior_trace[(a, col)] += w * psi * phi[a] * nrm[0];
                    interior_trace[(m + a, col)] += w * psi * phi[a] * nrm[1];
                    interior_trace[(2 * m + a, col)] += w * (bn - tau) * psi * phi[a];
                }
            }
            for c in 0..p {
                let psi_c = tables.edge[c][gq] / se;
                let row = e * p + c;
                for bb in 0..m {
                    let mm = w * phi[bb] * psi_c;
                    flux_interior[(row, bb)] += nrm[0] * mm;
                    flux_interior[(row, m + bb)] += nrm[1] * mm;
                    flux_interior[(row, 2 * m + bb)] += tau * mm;
                }
                for bb in 0..p {
                    let psi_b = tables.edge[bb][gq] / se;
                    flux_trace[(row, e * p + bb)] += w * (bn - tau) * psi_b * psi_c;
                }
            }
        }
    }

    Ok(LocalSystem {
        interior,
        interior_trace,
        flux_interior,
        flux_trace,
        load,
    })
}

/// Adds `(f, φ_a)` over `g` to `out[a]`.
fn add_load(out: &mut [f64], spec: &ProblemSpec, g: &CellGeom, k: usize, quad: &ErrorQuadrature) -> Result<()> {
    let p = k + 1;
    let [rs, rt] = quad.cell_rules(g)?;
    let basis = Basis1D::new(k);
    let ls = basis.eval(&rs.nodes).values;
    let lt = basis.eval(&rt.nodes).values;
    let scale = g.jacobian() / g.jacobian().sqrt();
    for (qy, (&t, &wt)) in rt.nodes.iter().zip(&rt.weights).enumerate() {
        for (qx, (&sv, &ws)) in rs.nodes.iter().zip(&rs.weights).enumerate() {
            let (x, y) = g.to_physical(sv, t);
            let fw = spec.f(x, y) * ws * wt * scale;
            if fw == 0.0 {
                continue;
            }
            for n in 0..p {
                let fy = fw * lt[n][qy];
                for m in 0..p {
                    out[m + p * n] += fy * ls[m][qx];
                }
            }
        }
    }
    Ok(())
}

/// Maps local traces to interior unknowns: `x = base - map * lambda`.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub base: DVector<f64>,
    pub map: DMatrix<f64>,
}

impl Recovery {
    pub fn apply(&self, traces: &DVector<f64>) -> DVector<f64> {
        &self.base - &self.map * traces
    }
}

#[derive(Debug, Clone)]
pub struct Condensed {
    /// `flux_trace - flux_interior * interior^-1 * interior_trace`.
    pub schur: DMatrix<f64>,
    /// `-flux_interior * interior^-1 * load`.
    pub schur_rhs: DVector<f64>,
    pub recovery: Recovery,
}

const PIVOT_TOL: f64 = 1e-13;

/// Statically condenses one cell. `ij` only labels the error.
pub fn condense(local: &LocalSystem, ij: (usize, usize)) -> Result<Condensed> {
    let n = local.interior.nrows();
    // Row equilibration before factorizing; the eps^-1 rows and the
    // convection rows differ by many orders of magnitude.
    let mut a = local.interior.clone();
    let mut rhs = DMatrix::<f64>::zeros(n, 1 + local.interior_trace.ncols());
    for i in 0..n {
        let scale = a.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return Err(HdgError::SingularCell {
                i: ij.0,
                j: ij.1,
                pivot: 0.0,
            });
        }
        let inv = 1.0 / scale;
        a.row_mut(i).scale_mut(inv);
        rhs[(i, 0)] = local.load[i] * inv;
        for c in 0..local.interior_trace.ncols() {
            rhs[(i, 1 + c)] = local.interior_trace[(i, c)] * inv;
        }
    }
    let lu = a.lu();
    let u = lu.u();
    let pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(u[(i, i)].abs()));
    if !(pivot > PIVOT_TOL) {
        return Err(HdgError::SingularCell {
            i: ij.0,
            j: ij.1,
            pivot,
        });
    }
    let sol = lu.solve(&rhs).ok_or(HdgError::SingularCell {
        i: ij.0,
        j: ij.1,
        pivot,
    })?;
    let base = sol.column(0).into_owned();
    let map = sol.columns(1, local.interior_trace.ncols()).into_owned();
    let schur = &local.flux_trace - &local.flux_interior * &map;
    let schur_rhs = -(&local.flux_interior * &base);
    Ok(Condensed {
        schur,
        schur_rhs,
        recovery: Recovery { base, map },
    })
}

/// Condensed global system over interior-edge traces.
#[derive(Debug, Clone)]
pub struct TraceSystem {
    pub k: usize,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub recovery: Vec<Recovery>,
}

/// Global row/column of local trace slot `(side, b)` in `cell`, if interior.
#[inline]
fn global_trace_dof(mesh: &ShishkinMesh, cell: usize, side: usize, b: usize, p: usize) -> Option<usize> {
    mesh.edges[mesh.cell_edges[cell][side]].trace_index.map(|t| t * p + b)
}

fn validate_inputs(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<()> {
    cfg.validate()?;
    let mc = &mesh.config;
    if mc.epsilon != spec.epsilon {
        return Err(HdgError::InvalidConfig(format!(
            "mesh epsilon {} differs from problem epsilon {}",
            mc.epsilon, spec.epsilon
        )));
    }
    if mc.beta1 != spec.beta_lower[0] || mc.beta2 != spec.beta_lower[1] {
        return Err(HdgError::InvalidConfig(format!(
            "mesh beta bounds ({}, {}) differ from problem bounds {:?}",
            mc.beta1, mc.beta2, spec.beta_lower
        )));
    }
    check_stabilization(mesh, spec, cfg)?;
    Ok(())
}

pub fn build_trace_system(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<TraceSystem> {
    validate_inputs(mesh, spec, cfg)?;
    let p = cfg.k + 1;
    let dim = mesh.n_interior_edges * p;
    let tables = ReferenceTables::new(cfg.k, cfg.assembly_points())?;
    let load_quad = cfg.error_quadrature(spec);
    let mut coo = CooBuilder::with_capacity(dim, mesh.num_cells() * 16 * p * p);
    let mut rhs = vec![0.0; dim];
    let mut recovery = Vec::with_capacity(mesh.num_cells());
    for cell in 0..mesh.num_cells() {
        let local = local_matrices(mesh, cell, spec, cfg, &tables, &load_quad)?;
        let cond = condense(&local, mesh.cell_ij(cell))?;
        for se in 0..4 {
            for c in 0..p {
                let Some(row) = global_trace_dof(mesh, cell, se, c, p) else {
                    continue;
                };
                rhs[row] += cond.schur_rhs[se * p + c];
                for sf in 0..4 {
                    for b in 0..p {
                        if let Some(col) = global_trace_dof(mesh, cell, sf, b, p) {
                            coo.push(row, col, cond.schur[(se * p + c, sf * p + b)]);
                        }
                    }
                }
            }
        }
        recovery.push(cond.recovery);
    }
    Ok(TraceSystem {
        k: cfg.k,
        matrix: coo.finalize(),
        rhs,
        recovery,
    })
}

#[derive(Debug, Clone)]
pub struct HdgSolution {
    pub fields: DiscreteFields,
    pub trace_dim: usize,
    pub nnz: usize,
    pub solve: SolveOutcome,
}

impl TraceSystem {
    /// Solves for the traces and recovers `(q, u)` on every cell.
    pub fn solve(&self, mesh: &ShishkinMesh, opts: &SolverOptions) -> Result<(DiscreteFields, SolveOutcome)> {
        let outcome = self.matrix.solve_with(&self.rhs, opts)?;
        let fields = self.recover(mesh, &outcome.x)?;
        Ok((fields, outcome))
    }

    pub fn recover(&self, mesh: &ShishkinMesh, traces: &[f64]) -> Result<DiscreteFields> {
        let p = self.k + 1;
        let m = p * p;
        if traces.len() != mesh.n_interior_edges * p {
            return Err(HdgError::Dimension(format!(
                "{} trace values for {} interior edges",
                traces.len(),
                mesh.n_interior_edges
            )));
        }
        let mut fields = DiscreteFields::zeros(mesh, self.k);
        for (e, edge) in mesh.edges.iter().enumerate() {
            if let Some(t) = edge.trace_index {
                fields.trace[e * p..(e + 1) * p].copy_from_slice(&traces[t * p..(t + 1) * p]);
            }
        }
        let mut lam = DVector::<f64>::zeros(4 * p);
        for (cell, rec) in self.recovery.iter().enumerate() {
            for se in 0..4 {
                for b in 0..p {
                    lam[se * p + b] = global_trace_dof(mesh, cell, se, b, p).map_or(0.0, |g| traces[g]);
                }
            }
            let x = rec.apply(&lam);
            for a in 0..m {
                fields.q1[cell * m + a] = x[a];
                fields.q2[cell * m + a] = x[m + a];
                fields.u[cell * m + a] = x[2 * m + a];
            }
        }
        Ok(fields)
    }
}

pub fn assemble_and_solve(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<HdgSolution> {
    let system = build_trace_system(mesh, spec, cfg)?;
    let (fields, solve) = system.solve(mesh, &cfg.solver)?;
    Ok(HdgSolution {
        fields,
        trace_dim: system.matrix.dim(),
        nnz: system.matrix.nnz(),
        solve,
    })
}

/// Values of `B(trial; test)` for every discrete basis test function, or of
/// the load `F`, laid out like the unknowns: per cell `(q1, q2, u)` blocks,
/// then interior-edge trace blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVector {
    pub k: usize,
    pub cell: Vec<f64>,
    pub trace: Vec<f64>,
}

impl DiscreteVector {
    pub fn zeros(mesh: &ShishkinMesh, k: usize) -> Self {
        let m = (k + 1) * (k + 1);
        Self {
            k,
            cell: vec![0.0; 3 * m * mesh.num_cells()],
            trace: vec![0.0; (k + 1) * mesh.n_interior_edges],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.cell.iter().chain(&self.trace).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| a - b).collect();
        Self {
            k: self.k,
            cell: d(&self.cell, &other.cell),
            trace: d(&self.trace, &other.trace),
        }
    }

    /// Pairing with the coefficients of a discrete test triple.
    pub fn dot_fields(&self, mesh: &ShishkinMesh, test: &DiscreteFields) -> f64 {
        let p = self.k + 1;
        let m = p * p;
        let mut s = 0.0;
        for cell in 0..mesh.num_cells() {
            let blk = &self.cell[3 * m * cell..3 * m * (cell + 1)];
            for a in 0..m {
                s += blk[a] * test.q1[cell * m + a]
                    + blk[m + a] * test.q2[cell * m + a]
                    + blk[2 * m + a] * test.u[cell * m + a];
            }
        }
        for (e, edge) in mesh.edges.iter().enumerate() {
            if let Some(t) = edge.trace_index {
                for b in 0..p {
                    s += self.trace[t * p + b] * test.trace[e * p + b];
                }
            }
        }
        s
    }
}

/// Evaluates `B(trial; test)` against every basis test function, with the
/// rules chosen by `quad` on every cell and side.
pub fn bilinear_vector(
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
    trial: &dyn FieldTriple,
    quad: &ErrorQuadrature,
) -> Result<DiscreteVector> {
    let k = cfg.k;
    let p = k + 1;
    let m = p * p;
    let basis = TensorBasis::new(k);
    let line = Basis1D::new(k);
    let eps = spec.epsilon;
    let tau = cfg.tau;
    let mut out = DiscreteVector::zeros(mesh, k);
    let mut phi = vec![0.0; m];
    let mut psi = vec![0.0; p];
    let mut dpsi = vec![0.0; p];
    for cell in 0..mesh.num_cells() {
        let g = mesh.cell_geom(cell);
        let jac = g.jacobian();
        let sj = jac.sqrt();
        let (dx, dy) = (2.0 / g.hx(), 2.0 / g.hy());
        let blk = &mut out.cell[3 * m * cell..3 * m * (cell + 1)];
        let [rs, rt] = quad.cell_rules(&g)?;
        let ts = line.eval(&rs.nodes);
        let tt = line.eval(&rt.nodes);
        for (qy, (&t, &wt)) in rt.nodes.iter().zip(&rt.weights).enumerate() {
            for (qx, (&sv, &ws)) in rs.nodes.iter().zip(&rs.weights).enumerate() {
                let (x, y) = g.to_physical(sv, t);
                let w = ws * wt * jac / sj;
                let qv = trial.flux(cell, x, y);
                let uv = trial.scalar(cell, x, y);
                let b = spec.beta(x, y);
                let react = spec.c(x, y) - spec.div_beta(x, y);
                for n in 0..p {
                    for mm in 0..p {
                        let a = mm + p * n;
                        let ph = ts.values[mm][qx] * tt.values[n][qy];
                        let phx = dx * ts.derivatives[mm][qx] * tt.values[n][qy];
                        let phy = dy * ts.values[mm][qx] * tt.derivatives[n][qy];
                        blk[a] += w * (qv[0] * ph / eps - uv * phx);
                        blk[m + a] += w * (qv[1] * ph / eps - uv * phy);
                        blk[2 * m + a] +=
                            w * (-(qv[0] + b[0] * uv) * phx - (qv[1] + b[1] * uv) * phy + react * uv * ph);
                    }
                }
            }
        }
        for side in LocalEdge::ALL {
            let edge_id = mesh.cell_edges[cell][side as usize];
            let trace_row = mesh.edges[edge_id].trace_index;
            let nrm = side.normal();
            let half = 0.5 * side_length(&g, side);
            let se = half.sqrt();
            let rule = quad.side_rule(&g, side)?;
            for (&r, &wr) in rule.nodes.iter().zip(&rule.weights) {
                let (sv, t) = side.reference_point(r);
                let (x, y) = g.to_physical(sv, t);
                let w = wr * half;
                let qv = trial.flux(cell, x, y);
                let uh = trial.trace(edge_id, x, y);
                let jump = trial.jump(cell, edge_id, x, y);
                let b = spec.beta(x, y);
                let bn = b[0] * nrm[0] + b[1] * nrm[1];
                let flux = qv[0] * nrm[0] + qv[1] * nrm[1] + bn * uh + tau * jump;
                basis.values_at(sv, t, &mut phi);
                for a in 0..m {
                    let ph = phi[a] / sj;
                    blk[a] += w * uh * ph * nrm[0];
                    blk[m + a] += w * uh * ph * nrm[1];
                    blk[2 * m + a] += w * flux * ph;
                }
                if let Some(tr) = trace_row {
                    line.eval_into(r, &mut psi, &mut dpsi);
                    for c in 0..p {
                        out.trace[tr * p + c] -= w * flux * psi[c] / se;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `F(w) = (f, w)` on the `u` rows, zero elsewhere.
pub fn load_vector(mesh: &ShishkinMesh, spec: &ProblemSpec, k: usize, quad: &ErrorQuadrature) -> Result<DiscreteVector> {
    let m = (k + 1) * (k + 1);
    let mut out = DiscreteVector::zeros(mesh, k);
    for cell in 0..mesh.num_cells() {
        let g = mesh.cell_geom(cell);
        add_load(&mut out.cell[3 * m * cell + 2 * m..3 * m * (cell + 1)], spec, &g, k, quad)?;
    }
    Ok(out)
}

/// `max |B((q - q_h, u - u_h, u - û_h); test)|` over all basis test
/// functions.
pub fn galerkin_residual(
    fields: &DiscreteFields,
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
) -> Result<f64> {
    use crate::fields::{Difference, DiscreteTriple, ExactTriple};
    let exact = spec.exact()?;
    let err = Difference {
        a: ExactTriple::new(spec, exact),
        b: DiscreteTriple::new(mesh, fields),
    };
    Ok(bilinear_vector(mesh, spec, cfg, &err, &cfg.error_quadrature(spec))?.max_abs())
}

/// Residual of all three equation families for a computed solution:
/// `max |B(w_h; test) - F(test)|`.
pub fn discrete_residual(
    fields: &DiscreteFields,
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
) -> Result<f64> {
    use crate::fields::DiscreteTriple;
    let trial = DiscreteTriple::new(mesh, fields);
    let b = bilinear_vector(mesh, spec, cfg, &trial, &ErrorQuadrature::plain(cfg.assembly_points()))?;
    let f = load_vector(mesh, spec, cfg.k, &cfg.error_quadrature(spec))?;
    Ok(b.sub(&f).max_abs())
}
