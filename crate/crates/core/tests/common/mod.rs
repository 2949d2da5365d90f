#![allow(dead_code)]

use std::sync::Arc;

use hdg_shishkin::assembly::{bilinear_vector, load_vector, HdgConfig};
use hdg_shishkin::fields::{DiscreteFields, DiscreteTriple};
use hdg_shishkin::mesh::{MeshConfig, ShishkinMesh};
use hdg_shishkin::problem::ProblemSpec;
use hdg_shishkin::quadrature::ErrorQuadrature;
use nalgebra::{DMatrix, DVector};

pub fn mesh_for(spec: &ProblemSpec, n: usize, sigma: f64) -> ShishkinMesh {
    ShishkinMesh::build(MeshConfig {
        n,
        epsilon: spec.epsilon,
        sigma,
        beta1: spec.beta_lower[0],
        beta2: spec.beta_lower[1],
    })
    .unwrap()
}

/// Number of global unknowns of the uncondensed system.
pub fn monolithic_dim(mesh: &ShishkinMesh, k: usize) -> usize {
    let p = k + 1;
    3 * p * p * mesh.num_cells() + p * mesh.n_interior_edges
}

/// Unit vector `j` of the monolithic unknown layout as discrete fields.
fn unit_fields(mesh: &ShishkinMesh, k: usize, j: usize) -> DiscreteFields {
    let p = k + 1;
    let m = p * p;
    let cells = 3 * m * mesh.num_cells();
    let mut f = DiscreteFields::zeros(mesh, k);
    if j < cells {
        let (cell, r) = (j / (3 * m), j % (3 * m));
        let slot = cell * m + r % m;
        match r / m {
            0 => f.q1[slot] = 1.0,
            1 => f.q2[slot] = 1.0,
            _ => f.u[slot] = 1.0,
        }
    } else {
        let t = (j - cells) / p;
        let b = (j - cells) % p;
        let e = mesh.edges.iter().position(|e| e.trace_index == Some(t)).unwrap();
        f.trace[e * p + b] = 1.0;
    }
    f
}

/// Full uncondensed matrix and load, one column per unknown, built by
/// testing the bilinear form against every basis function.
pub fn monolithic_system(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> (DMatrix<f64>, DVector<f64>) {
    let dim = monolithic_dim(mesh, cfg.k);
    let plain = ErrorQuadrature::plain(cfg.assembly_points());
    let mut a = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let unit = unit_fields(mesh, cfg.k, j);
        let col = bilinear_vector(mesh, spec, cfg, &DiscreteTriple::new(mesh, &unit), &plain).unwrap();
        for (i, v) in col.cell.iter().chain(&col.trace).enumerate() {
            a[(i, j)] = *v;
        }
    }
    let f = load_vector(mesh, spec, cfg.k, &cfg.error_quadrature(spec)).unwrap();
    let b = DVector::from_iterator(dim, f.cell.iter().chain(&f.trace).copied());
    (a, b)
}

/// Dense LU solve of the uncondensed system, unpacked into fields.
pub fn dense_solve(mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> DiscreteFields {
    let (a, b) = monolithic_system(mesh, spec, cfg);
    let x = a.lu().solve(&b).expect("monolithic system is singular");
    let p = cfg.k + 1;
    let m = p * p;
    let mut f = DiscreteFields::zeros(mesh, cfg.k);
    for cell in 0..mesh.num_cells() {
        for r in 0..m {
            f.q1[cell * m + r] = x[3 * m * cell + r];
            f.q2[cell * m + r] = x[3 * m * cell + m + r];
            f.u[cell * m + r] = x[3 * m * cell + 2 * m + r];
        }
    }
    let cells = 3 * m * mesh.num_cells();
    for (e, edge) in mesh.edges.iter().enumerate() {
        if let Some(t) = edge.trace_index {
            for b in 0..p {
                f.trace[e * p + b] = x[cells + t * p + b];
            }
        }
    }
    f
}

/// Largest coefficient difference relative to the largest coefficient.
pub fn relative_gap(a: &DiscreteFields, b: &DiscreteFields) -> f64 {
    a.difference(b).max_abs() / a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE)
}

/// Copy of `spec` with the source replaced by zero.
pub fn homogeneous(spec: &ProblemSpec) -> ProblemSpec {
    let mut s = spec.clone();
    s.f = Arc::new(|_, _| 0.0);
    s
}
