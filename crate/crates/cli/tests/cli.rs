use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdg-study"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn solve_prints_report() {
    let o = run(&["solve", "--k", "1", "--eps", "1e-6", "--n", "8", "--mode", "both"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let e: f64 = value(&text, "energy_error").unwrap().parse().unwrap();
    assert!(e > 0.0 && e < 1.0);
    assert!(value(&text, "supercloseness_error").is_some());
    assert!(text.contains("region_sq.corner"));
}

#[test]
fn sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tables");
    let o = run(&[
        "sweep", "--k", "1", "--eps", "1e-6", "--eps", "1e-8", "--n", "4", "--n", "8", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("k1_true-error.csv")).unwrap();
    assert!(csv.starts_with("k,mode,epsilon,n,error,rate,dyadic_rate,status"));
    assert_eq!(csv.lines().count(), 5);
    let md = std::fs::read_to_string(out.join("k1_true-error.md")).unwrap();
    assert!(md.contains("---"));
    assert!(stdout(&o).contains("k = 1, true-error"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(&cfg, "# base\nk = 2\neps = 1e-4\nn = 4\nmode = true-error\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--n", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value(&text, "k").as_deref(), Some("2"));
    assert_eq!(value(&text, "n").as_deref(), Some("8"));
    assert_eq!(value(&text, "epsilon").as_deref(), Some("1e-4"));
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "k = 1\nbogus = 2\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn strict_diagnose_with_weak_tau_exits_2() {
    let args = ["diagnose", "--k", "1", "--eps", "1e-2", "--n", "8", "--tau", "0.1"];
    let lax = run(&args);
    assert_eq!(lax.status.code(), Some(0));
    assert!(stdout(&lax).contains("stabilization"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(2));
}

#[test]
fn strict_diagnose_passes_on_moderate_case() {
    let o = run(&["diagnose", "--k", "1", "--eps", "1e-2", "--n", "8", "--strict"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn weak_tau_solve_fails() {
    let o = run(&["solve", "--k", "1", "--eps", "1e-2", "--n", "8", "--tau", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_n_is_rejected() {
    let o = run(&["solve", "--k", "1", "--eps", "1e-2", "--n", "6"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn mesh_dump_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mesh.txt");
    let o = run(&["mesh-dump", "--eps", "0.01", "--n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("[x_nodes]"));
    assert!(text.contains("tau_x 2.7725887222397"));
}
