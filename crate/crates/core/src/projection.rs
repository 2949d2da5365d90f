//! Local L² projections onto `Q^k` per cell and `P^k` per edge.
//!
//! Both bases are orthonormal in physical L², so a projection's
//! coefficients are just the quadrature inner products with the basis.

use crate::assembly::HdgConfig;
use crate::error::{HdgError, Result};
use crate::fields::{Difference, DiscreteTriple, ExactTriple, ProjectedFields};
use crate::mesh::ShishkinMesh;
use crate::norms::{convergence_rate, energy_norm};
use crate::problem::ProblemSpec;
use crate::quadrature::ErrorQuadrature;
use crate::reference::{Basis1D, CellGeom, QuadRule1D, TensorBasis};

/// Coefficients of the `Q^k` projection of `u` on `cell` with a
/// `rule`-by-`rule` tensor quadrature.
pub fn project_cell_scalar(
    u: impl Fn(f64, f64) -> f64,
    cell: &CellGeom,
    k: usize,
    rule: &QuadRule1D,
) -> Result<Vec<f64>> {
    project_cell_scalar_with(u, cell, k, rule, rule)
}

/// As [`project_cell_scalar`] with separate rules in `s` and `t`.
pub fn project_cell_scalar_with(
    u: impl Fn(f64, f64) -> f64,
    cell: &CellGeom,
    k: usize,
    rule_s: &QuadRule1D,
    rule_t: &QuadRule1D,
) -> Result<Vec<f64>> {
    if !(cell.hx() > 0.0 && cell.hy() > 0.0) {
        return Err(HdgError::Degenerate(format!("cell {cell:?}")));
    }
    let basis = TensorBasis::new(k);
    let m = basis.len();
    let jac = cell.jacobian();
    let scale = jac / jac.sqrt();
    let ls = basis.line.eval(&rule_s.nodes).values;
    let lt = basis.line.eval(&rule_t.nodes).values;
    let mut coeffs = vec![0.0; m];
    for (qy, &t) in rule_t.nodes.iter().enumerate() {
        for (qx, &s) in rule_s.nodes.iter().enumerate() {
            let (x, y) = cell.to_physical(s, t);
            let w = rule_s.weights[qx] * rule_t.weights[qy] * scale * u(x, y);
            for a in 0..m {
                let (i, j) = basis.degrees(a);
                coeffs[a] += w * ls[i][qx] * lt[j][qy];
            }
        }
    }
    Ok(coeffs)
}

/// Coefficients of the `P^k` projection of `z` on the segment from `start`
/// to `end`, parameterized from `start`.
pub fn project_edge(
    z: impl Fn(f64, f64) -> f64,
    start: (f64, f64),
    end: (f64, f64),
    k: usize,
    rule: &QuadRule1D,
) -> Result<Vec<f64>> {
    let len = ((end.0 - start.0).powi(2) + (end.1 - start.1).powi(2)).sqrt();
    if !(len > 0.0) {
        return Err(HdgError::Degenerate(format!("edge {start:?} -> {end:?}")));
    }
    let half = 0.5 * len;
    let scale = half / half.sqrt();
    let line = Basis1D::new(k).eval(&rule.nodes).values;
    let mut coeffs = vec![0.0; k + 1];
    for (g, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let lam = 0.5 * (r + 1.0);
        let x = start.0 + lam * (end.0 - start.0);
        let y = start.1 + lam * (end.1 - start.1);
        let zw = w * scale * z(x, y);
        for (b, c) in coeffs.iter_mut().enumerate() {
            *c += zw * line[b][g];
        }
    }
    Ok(coeffs)
}

/// `(Π₁q, Π₂u, Pu)` of the exact solution on the whole mesh.
pub fn project_exact(
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    k: usize,
    quad: &ErrorQuadrature,
) -> Result<ProjectedFields> {
    let exact = spec.exact()?;
    let eps = spec.epsilon;
    let mut out = ProjectedFields::zeros(mesh, k);
    let m = (k + 1) * (k + 1);
    let p = k + 1;
    for cell in 0..mesh.num_cells() {
        let g = mesh.cell_geom(cell);
        let [rs, rt] = quad.cell_rules(&g)?;
        let u = project_cell_scalar_with(|x, y| exact.u(x, y), &g, k, &rs, &rt)?;
        let q1 = project_cell_scalar_with(|x, y| exact.q(eps, x, y)[0], &g, k, &rs, &rt)?;
        let q2 = project_cell_scalar_with(|x, y| exact.q(eps, x, y)[1], &g, k, &rs, &rt)?;
        out.u[cell * m..(cell + 1) * m].copy_from_slice(&u);
        out.q1[cell * m..(cell + 1) * m].copy_from_slice(&q1);
        out.q2[cell * m..(cell + 1) * m].copy_from_slice(&q2);
    }
    for e in 0..mesh.num_edges() {
        let geo = mesh.edge_geometry(e)?;
        if geo.boundary {
            continue;
        }
        let rule = quad.segment_rule(geo.start, geo.end)?;
        let c = project_edge(|x, y| exact.u(x, y), geo.start, geo.end, k, &rule)?;
        out.trace[e * p..(e + 1) * p].copy_from_slice(&c);
    }
    Ok(out)
}

/// `|||(q - Π₁q, u - Π₂u, u - Pu)|||` for the exact solution.
pub fn projection_error(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<f64> {
    let exact = spec.exact()?;
    let proj = project_exact(mesh, spec, cfg.k, &cfg.error_quadrature(spec))?;
    let eta = Difference {
        a: ExactTriple::new(spec, exact),
        b: DiscreteTriple::new(mesh, &proj),
    };
    Ok(energy_norm(&eta, mesh, spec, cfg, cfg.error_points())?.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionStudyRow {
    pub n: usize,
    pub eta: f64,
    /// Rate to the next row, if there is one with `2N`.
    pub rate: Option<f64>,
}

/// `|||η|||` on a sequence of Shishkin meshes with `sigma`, plus rates
/// between consecutive doublings.
pub fn projection_error_study(
    spec: &ProblemSpec,
    ns: &[usize],
    sigma: f64,
    cfg: &HdgConfig,
) -> Result<Vec<ProjectionStudyRow>> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mesh = ShishkinMesh::build(crate::mesh::MeshConfig {
            n,
            epsilon: spec.epsilon,
            sigma,
            beta1: spec.beta_lower[0],
            beta2: spec.beta_lower[1],
        })?;
        rows.push(ProjectionStudyRow {
            n,
            eta: projection_error(&mesh, spec, cfg)?,
            rate: None,
        });
    }
    for i in 0..rows.len().saturating_sub(1) {
        if rows[i + 1].n == 2 * rows[i].n && rows[i + 1].eta > 0.0 && rows[i].eta > 0.0 {
            rows[i].rate = Some(convergence_rate(rows[i].eta, rows[i + 1].eta, rows[i].n)?);
        }
    }
    Ok(rows)
}
