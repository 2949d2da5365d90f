mod common;

use std::sync::Arc;

use hdg_shishkin::assembly::{condense, galerkin_residual, local_matrices, HdgConfig, ReferenceTables};
use hdg_shishkin::mesh::{LocalEdge, MeshConfig, ShishkinMesh};
use hdg_shishkin::problem::{paper_problem, ExactSolution, ProblemSpec};
use hdg_shishkin::quadrature::ErrorQuadrature;
use hdg_shishkin::reference::{gauss_rule, Basis1D, TensorBasis};
use hdg_shishkin::{assemble_and_solve, DiscreteFields};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform 4x4 mesh (tau clamps at 1/2).
fn uniform_mesh() -> ShishkinMesh {
    ShishkinMesh::build(MeshConfig {
        n: 4,
        epsilon: 0.5,
        sigma: 1.0,
        beta1: 1.0,
        beta2: 1.0,
    })
    .unwrap()
}

fn constant_coefficients(epsilon: f64, beta: [f64; 2]) -> ProblemSpec {
    let exact = ExactSolution {
        u: Arc::new(|x, y| x * y),
        grad_u: Arc::new(|x, y| [y, x]),
        laplacian_u: Arc::new(|_, _| 0.0),
    };
    ProblemSpec::manufactured(
        "constant",
        epsilon,
        Arc::new(move |_, _| beta),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 1.0),
        exact,
        [1.0, 1.0],
        1.0,
    )
    .unwrap()
}

#[test]
fn flux_mass_block_matches_direct_quadrature() {
    let mesh = uniform_mesh();
    let spec = constant_coefficients(1.0, [1.0, 1.0]);
    let k = 1;
    let cfg = HdgConfig::new(k, 3.0);
    let tables = ReferenceTables::new(k, cfg.assembly_points()).unwrap();
    let cell = 5;
    let local = local_matrices(&mesh, cell, &spec, &cfg, &tables, &ErrorQuadrature::plain(6)).unwrap();
    let g = mesh.cell_geom(cell);
    let basis = TensorBasis::new(k);
    let m = basis.len();
    let rule = gauss_rule(12).unwrap();
    let mut phi = vec![0.0; m];
    let mut oracle = vec![vec![0.0; m]; m];
    for (t, wt) in rule.iter() {
        for (s, ws) in rule.iter() {
            basis.values_at(s, t, &mut phi);
            for a in 0..m {
                for b in 0..m {
                    // Physical basis = reference basis / sqrt(J); dx = J ds dt.
                    oracle[a][b] += ws * wt * phi[a] * phi[b] / spec.epsilon;
                }
            }
        }
    }
    // The q1 and q2 diagonal blocks together form an 8x8 identity.
    for blk in 0..2 {
        for a in 0..m {
            for b in 0..m {
                let got = local.interior[(blk * m + a, blk * m + b)];
                assert!((got - oracle[a][b]).abs() < 1e-13);
                assert!((got - if a == b { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }
    assert!((g.jacobian() - g.area() / 4.0).abs() < 1e-15);
}

#[test]
fn stabilization_rows_match_direct_quadrature() {
    let mesh = uniform_mesh();
    let spec = constant_coefficients(1.0, [0.0, 0.0]);
    let k = 2;
    let p = k + 1;
    let cfg = HdgConfig::new(k, 3.0);
    let tables = ReferenceTables::new(k, cfg.assembly_points()).unwrap();
    let cell = 6;
    let local = local_matrices(&mesh, cell, &spec, &cfg, &tables, &ErrorQuadrature::plain(6)).unwrap();
    let g = mesh.cell_geom(cell);
    let basis = TensorBasis::new(k);
    let line = Basis1D::new(k);
    let m = basis.len();
    let rule = gauss_rule(12).unwrap();
    let mut phi = vec![0.0; m];
    for side in LocalEdge::ALL {
        let e = side as usize;
        let len = match side {
            LocalEdge::Bottom | LocalEdge::Top => g.hx(),
            LocalEdge::Left | LocalEdge::Right => g.hy(),
        };
        let half = 0.5 * len;
        for c in 0..p {
            for b in 0..m {
                let mut want = 0.0;
                for (r, w) in rule.iter() {
                    let (s, t) = side.reference_point(r);
                    basis.values_at(s, t, &mut phi);
                    let psi = line.value(c, r) / half.sqrt();
                    want += w * half * 3.0 * psi * phi[b] / g.jacobian().sqrt();
                }
                let got = local.flux_interior[(e * p + c, 2 * m + b)];
                assert!((got - want).abs() < 1e-12, "side {e} c {c} b {b}: {got} vs {want}");
            }
            // Trace-trace block: -tau times the identity edge mass.
            for b in 0..p {
                let want = if b == c { -3.0 } else { 0.0 };
                assert!((local.flux_trace[(e * p + c, e * p + b)] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn zero_source_gives_zero_load() {
    let mesh = uniform_mesh();
    let mut spec = constant_coefficients(0.5, [1.0, 1.0]);
    spec.f = Arc::new(|_, _| 0.0);
    let cfg = HdgConfig::new(2, 3.0);
    let tables = ReferenceTables::new(2, cfg.assembly_points()).unwrap();
    for cell in 0..mesh.num_cells() {
        let local = local_matrices(&mesh, cell, &spec, &cfg, &tables, &cfg.error_quadrature(&spec)).unwrap();
        assert_eq!(local.load.amax(), 0.0);
    }
}

#[test]
fn cell_without_traces_recovers_dense_interior_solve() {
    let spec = paper_problem(1e-2).unwrap();
    let mesh = common::mesh_for(&spec, 4, 2.0);
    for k in [1, 2] {
        let cfg = HdgConfig::new(k, 3.0);
        let tables = ReferenceTables::new(k, cfg.assembly_points()).unwrap();
        for cell in [0, 7, 15] {
            let local = local_matrices(&mesh, cell, &spec, &cfg, &tables, &cfg.error_quadrature(&spec)).unwrap();
            let cond = condense(&local, mesh.cell_ij(cell)).unwrap();
            let x = cond.recovery.apply(&DVector::zeros(4 * (k + 1)));
            let dense = local.interior.clone().lu().solve(&local.load).unwrap();
            let gap = (&x - &dense).amax() / dense.amax();
            assert!(gap < 1e-12, "k={k} cell {cell}: {gap:e}");
        }
    }
}

#[test]
fn pure_diffusion_schur_is_definite() {
    let mesh = uniform_mesh();
    let spec = constant_coefficients(0.3, [0.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in [1, 2] {
        let cfg = HdgConfig::new(k, 3.0);
        let tables = ReferenceTables::new(k, cfg.assembly_points()).unwrap();
        for cell in 0..mesh.num_cells() {
            let local = local_matrices(&mesh, cell, &spec, &cfg, &tables, &ErrorQuadrature::plain(6)).unwrap();
            let cond = condense(&local, mesh.cell_ij(cell)).unwrap();
            // Flux rows are written as <flux, mu>, so the trace operator is
            // -schur in the usual positive convention.
            for _ in 0..20 {
                let x = DVector::from_fn(4 * (k + 1), |_, _| rng.gen_range(-1.0..1.0));
                let v = -(x.transpose() * &cond.schur * &x)[(0, 0)];
                assert!(v >= -1e-12, "k={k} cell {cell}: {v}");
            }
        }
    }
}

#[test]
fn galerkin_residual_detects_perturbation() {
    let spec = paper_problem(1e-2).unwrap();
    let mesh = common::mesh_for(&spec, 8, 2.0);
    let cfg = HdgConfig::new(1, 3.0);
    let sol = assemble_and_solve(&mesh, &spec, &cfg).unwrap();
    let base = galerkin_residual(&sol.fields, &mesh, &spec, &cfg).unwrap();
    assert!(base < 1e-8, "{base:e}");
    let mut bumped = sol.fields.clone();
    bumped.u[20] += 1e-3;
    let r = galerkin_residual(&bumped, &mesh, &spec, &cfg).unwrap();
    assert!(r > 1e-4, "{r:e}");
}

#[test]
fn zero_fields_with_zero_source_have_zero_residual() {
    let mut spec = paper_problem(1e-2).unwrap();
    spec.f = Arc::new(|_, _| 0.0);
    let exact = ExactSolution {
        u: Arc::new(|_, _| 0.0),
        grad_u: Arc::new(|_, _| [0.0, 0.0]),
        laplacian_u: Arc::new(|_, _| 0.0),
    };
    spec.exact = Some(exact);
    let mesh = common::mesh_for(&spec, 4, 2.0);
    let cfg = HdgConfig::new(1, 3.0);
    let zero = DiscreteFields::zeros(&mesh, 1);
    assert_eq!(galerkin_residual(&zero, &mesh, &spec, &cfg).unwrap(), 0.0);
}
