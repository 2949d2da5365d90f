//! Energy norm, L² errors and convergence rates.

use crate::assembly::HdgConfig;
use crate::error::{HdgError, Result};
use crate::fields::{DiscreteFields, DiscreteTriple, FieldTriple};
use crate::mesh::{LocalEdge, Region, ShishkinMesh};
use crate::problem::ProblemSpec;
use crate::quadrature::ErrorQuadrature;

/// Squared contributions of the three energy-norm terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyNorm {
    pub value: f64,
    /// `eps^-1 ||r||^2`
    pub flux_sq: f64,
    /// `||(c - div β/2)^{1/2} w||^2`
    pub reaction_sq: f64,
    /// `||(τ - β.n/2)^{1/2} (w - mu)||^2` over all cell boundaries.
    pub jump_sq: f64,
    /// Total squared norm attributed to the cells of each region
    /// (a cell's boundary terms count towards its own region).
    pub region_sq: [f64; 4],
}

/// The energy norm of `triple`, integrated with `points` Gauss points per
/// direction on cells and edges (per piece when `cfg.layer_quadrature`
/// grades the rules).
///
/// Interior edges are visited once from each adjacent cell, with that
/// cell's outward normal in the weight `τ - β.n/2`.
pub fn energy_norm(
    triple: &dyn FieldTriple,
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
    points: usize,
) -> Result<EnergyNorm> {
    let quad = ErrorQuadrature::new(points, spec, cfg.layer_quadrature);
    let eps = spec.epsilon;
    let tau = cfg.tau;
    let mut out = EnergyNorm::default();
    for cell in 0..mesh.num_cells() {
        let g = mesh.cell_geom(cell);
        let jac = g.jacobian();
        let (mut fl, mut re, mut ju) = (0.0, 0.0, 0.0);
        let [rs, rt] = quad.cell_rules(&g)?;
        for (&t, &wt) in rt.nodes.iter().zip(&rt.weights) {
            for (&s, &ws) in rs.nodes.iter().zip(&rs.weights) {
                let (x, y) = g.to_physical(s, t);
                let w = ws * wt * jac;
                let r = triple.flux(cell, x, y);
                let u = triple.scalar(cell, x, y);
                fl += w * (r[0] * r[0] + r[1] * r[1]);
                re += w * spec.reaction_weight(x, y) * u * u;
            }
        }
        for side in LocalEdge::ALL {
            let edge = mesh.cell_edges[cell][side as usize];
            let nrm = side.normal();
            let half = 0.5 * mesh.edge_length(edge);
            let rule = quad.side_rule(&g, side)?;
            for (&r, &wr) in rule.nodes.iter().zip(&rule.weights) {
                let (s, t) = side.reference_point(r);
                let (x, y) = g.to_physical(s, t);
                let b = spec.beta(x, y);
                let weight = tau - 0.5 * (b[0] * nrm[0] + b[1] * nrm[1]);
                if weight < 0.0 {
                    return Err(HdgError::Stabilization { margin: weight, x, y });
                }
                let d = triple.jump(cell, edge, x, y);
                ju += wr * half * weight * d * d;
            }
        }
        let fl = fl / eps;
        out.flux_sq += fl;
        out.reaction_sq += re;
        out.jump_sq += ju;
        out.region_sq[mesh.region_of(cell).index()] += fl + re + ju;
    }
    out.value = (out.flux_sq + out.reaction_sq + out.jump_sq).sqrt();
    Ok(out)
}

/// `|||(Π₁q - q_h, Π₂u - u_h, Pu - û_h)|||` from coefficient differences.
pub fn supercloseness_norm(
    fields: &DiscreteFields,
    projected: &DiscreteFields,
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
) -> Result<EnergyNorm> {
    if !fields.same_layout(projected) {
        return Err(HdgError::Dimension(format!(
            "solution (k = {}) and projection (k = {}) use different bases",
            fields.k, projected.k
        )));
    }
    let diff = projected.difference(fields);
    energy_norm(&DiscreteTriple::new(mesh, &diff), mesh, spec, cfg, cfg.error_points())
}

/// `(||u - u_h||, ||q - q_h||)` over the mesh.
pub fn l2_errors(triple: &dyn FieldTriple, mesh: &ShishkinMesh, quad: &ErrorQuadrature) -> Result<(f64, f64)> {
    let (mut eu, mut eq) = (0.0, 0.0);
    for cell in 0..mesh.num_cells() {
        let g = mesh.cell_geom(cell);
        let jac = g.jacobian();
        let [rs, rt] = quad.cell_rules(&g)?;
        for (&t, &wt) in rt.nodes.iter().zip(&rt.weights) {
            for (&s, &ws) in rs.nodes.iter().zip(&rs.weights) {
                let (x, y) = g.to_physical(s, t);
                let w = ws * wt * jac;
                let u = triple.scalar(cell, x, y);
                let r = triple.flux(cell, x, y);
                eu += w * u * u;
                eq += w * (r[0] * r[0] + r[1] * r[1]);
            }
        }
    }
    Ok((eu.sqrt(), eq.sqrt()))
}

/// Shishkin-scaled rate between meshes with `N` and `2N` cells per
/// direction: `ln(e_N / e_2N) / ln(2 ln(2N) / ln(4N))`.
pub fn convergence_rate(e_n: f64, e_2n: f64, n: usize) -> Result<f64> {
    if !(e_n > 0.0) || !(e_2n > 0.0) {
        return Err(HdgError::Rate(format!("errors ({e_n}, {e_2n}) must be positive")));
    }
    if n < 4 {
        return Err(HdgError::Rate(format!("N = {n} below 4")));
    }
    let nf = n as f64;
    let denom = (2.0 * (2.0 * nf).ln() / (4.0 * nf).ln()).ln();
    Ok((e_n / e_2n).ln() / denom)
}

/// Plain rate `log2(e_N / e_2N)`.
pub fn dyadic_rate(e_n: f64, e_2n: f64) -> Result<f64> {
    if !(e_n > 0.0) || !(e_2n > 0.0) {
        return Err(HdgError::Rate(format!("errors ({e_n}, {e_2n}) must be positive")));
    }
    Ok((e_n / e_2n).log2())
}

pub fn region_label(i: usize) -> &'static str {
    Region::ALL[i].label()
}
