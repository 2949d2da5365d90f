mod common;

use hdg_shishkin::assembly::{assemble_and_solve, HdgConfig};
use hdg_shishkin::fields::{Difference, DiscreteTriple, ExactTriple};
use hdg_shishkin::norms::{energy_norm, supercloseness_norm};
use hdg_shishkin::problem::paper_problem;
use hdg_shishkin::projection::{project_exact, projection_error};
use hdg_shishkin::study::{diagnostics_for, run_diagnostics, run_single, run_sweep, Mode, StudyConfig};

fn cfg(k: usize, eps: &[f64], ns: &[usize], mode: Mode) -> StudyConfig {
    StudyConfig {
        ks: vec![k],
        epsilons: eps.to_vec(),
        ns: ns.to_vec(),
        mode,
        ..StudyConfig::default()
    }
}

#[test]
fn sweep_csv_is_reproducible() {
    let c = cfg(1, &[1e-4, 1e-6], &[4, 8, 16], Mode::Both);
    let a = run_sweep(&c).unwrap();
    let b = run_sweep(&c).unwrap();
    assert_eq!(a.tables.len(), 2);
    for (x, y) in a.tables.iter().zip(&b.tables) {
        assert_eq!(x.to_csv().unwrap(), y.to_csv().unwrap());
        assert_eq!(x.to_markdown(), y.to_markdown());
    }
    let dir = tempdir();
    let files = a.write(&dir).unwrap();
    assert_eq!(files.len(), 4);
    let csv = std::fs::read_to_string(dir.join("k1_true-error.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("hdg-sweep-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn single_n_sweep_has_no_rates() {
    let r = run_sweep(&cfg(1, &[1e-6], &[8], Mode::TrueError)).unwrap();
    let t = &r.tables[0];
    assert_eq!(t.rate(0, 0), None);
    assert!(t.to_markdown().contains("---"));
    let csv = t.to_csv().unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains(",,,ok"), "{row}");
}

#[test]
fn refinement_is_monotone_with_bounded_rates() {
    for (k, ns) in [(1, vec![8, 16, 32, 64, 128]), (2, vec![8, 16, 32, 64])] {
        for eps in [1e-5, 1e-8] {
            let r = run_sweep(&cfg(k, &[eps], &ns, Mode::TrueError)).unwrap();
            let t = &r.tables[0];
            let e: Vec<f64> = ns.iter().map(|&n| t.error(n, eps).unwrap()).collect();
            assert!(e.windows(2).all(|w| w[1] < w[0]), "k={k} eps={eps:e}: {e:?}");
            let rates: Vec<f64> = (0..ns.len() - 1).map(|i| t.rate(i, 0).unwrap()).collect();
            assert!(rates.iter().all(|&p| p <= (k + 1) as f64), "{rates:?}");
            assert!(rates.windows(2).all(|w| w[1] >= w[0] - 0.05), "k={k}: {rates:?}");
        }
    }
}

#[test]
fn error_is_bounded_by_projection_and_supercloseness() {
    for (k, n, eps) in [(1, 8, 1e-2), (1, 32, 1e-6), (2, 16, 1e-8)] {
        let spec = paper_problem(eps).unwrap();
        let mesh = common::mesh_for(&spec, n, (k + 1) as f64);
        let hdg = HdgConfig::new(k, 3.0);
        let sol = assemble_and_solve(&mesh, &spec, &hdg).unwrap();
        let exact = spec.exact().unwrap();
        let err = Difference {
            a: ExactTriple::new(&spec, exact),
            b: DiscreteTriple::new(&mesh, &sol.fields),
        };
        let e = energy_norm(&err, &mesh, &spec, &hdg, hdg.error_points()).unwrap().value;
        let eta = projection_error(&mesh, &spec, &hdg).unwrap();
        let proj = project_exact(&mesh, &spec, k, &hdg.error_quadrature(&spec)).unwrap();
        let xi = supercloseness_norm(&sol.fields, &proj, &mesh, &spec, &hdg).unwrap().value;
        assert!(e <= eta + xi + 1e-10, "k={k} N={n}: {e:e} > {eta:e} + {xi:e}");
        assert_eq!(supercloseness_norm(&proj, &proj, &mesh, &spec, &hdg).unwrap().value, 0.0);
    }
}

#[test]
fn region_breakdown_sums_to_energy_error() {
    let r = run_single(&cfg(1, &[1e-6], &[16], Mode::Both)).unwrap();
    let total = r.energy_error.unwrap().powi(2);
    let parts: f64 = r.region_sq.unwrap().iter().sum();
    assert!((parts - total).abs() <= 1e-12 * total);
    assert!(r.supercloseness_error.unwrap() > 0.0);
    assert!(r.l2_error_u.unwrap() > 0.0 && r.l2_error_q.unwrap() > 0.0);
}

#[test]
fn diagnostics_pass_on_moderate_case() {
    for k in [1, 2] {
        let rep = run_diagnostics(&cfg(k, &[1e-2], &[8], Mode::TrueError)).unwrap();
        assert!(rep.pass(), "k={k}\n{}", rep.to_key_value());
        for name in ["assumptions", "stabilization", "galerkin_residual", "discrete_residual", "flux_continuity", "coercivity", "quadrature"] {
            assert!(rep.get(name).is_some(), "{name}");
        }
    }
}

#[test]
fn weak_tau_fails_stabilization() {
    let mut c = cfg(1, &[1e-2], &[8], Mode::TrueError);
    c.tau = 0.1;
    let rep = run_diagnostics(&c).unwrap();
    assert!(!rep.pass());
    assert!(!rep.get("stabilization").unwrap().pass);
    assert!(!rep.get("galerkin_residual").unwrap().pass);
}

#[test]
fn misdeclared_beta_bound_fails_assumptions() {
    let mut spec = paper_problem(1e-2).unwrap();
    let mesh = common::mesh_for(&spec, 8, 2.0);
    spec.beta_lower[0] = 3.0;
    let rep = diagnostics_for(&spec, &mesh, &HdgConfig::new(1, 3.0), None);
    assert!(!rep.get("assumptions").unwrap().pass);
}

#[test]
fn run_single_rejects_lists() {
    assert!(run_single(&cfg(1, &[1e-6, 1e-8], &[8], Mode::TrueError)).is_err());
    assert!(run_single(&cfg(1, &[1e-6], &[6], Mode::TrueError)).is_err());
}
