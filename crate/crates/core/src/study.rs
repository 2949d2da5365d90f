//! Convergence studies: single runs, sweeps over `(k, eps, N)`, table
//! emission and the diagnostic suite.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    assemble_and_solve, bilinear_vector, discrete_residual, galerkin_residual, load_vector, stabilization_margin,
    HdgConfig,
};
use crate::error::{HdgError, Result};
use crate::fields::{Difference, DiscreteFields, DiscreteTriple, ExactTriple};
use crate::mesh::{MeshConfig, ShishkinMesh};
use crate::norms::{convergence_rate, dyadic_rate, energy_norm, l2_errors, supercloseness_norm};
use crate::problem::{problem_by_name, verify_assumptions, ProblemSpec, PAPER_PROBLEM};
use crate::projection::project_exact;
use crate::quadrature::ErrorQuadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TrueError,
    Supercloseness,
    Both,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::TrueError => "true-error",
            Mode::Supercloseness => "supercloseness",
            Mode::Both => "both",
        }
    }

    fn wants_true(self) -> bool {
        matches!(self, Mode::TrueError | Mode::Both)
    }

    fn wants_super(self) -> bool {
        matches!(self, Mode::Supercloseness | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = HdgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "true-error" | "true" | "energy" => Ok(Mode::TrueError),
            "supercloseness" | "super" => Ok(Mode::Supercloseness),
            "both" => Ok(Mode::Both),
            other => Err(HdgError::InvalidConfig(format!("unknown mode '{other}'"))),
        }
    }
}

/// Largest `N` in the default grid for degree `k`.
pub fn default_max_n(k: usize) -> usize {
    if k <= 1 {
        128
    } else {
        64
    }
}

/// `4, 8, ..., max_n`.
pub fn default_ns(max_n: usize) -> Vec<usize> {
    std::iter::successors(Some(4usize), |n| Some(n * 2))
        .take_while(|&n| n <= max_n)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub problem: String,
    pub ks: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// Empty means the default grid for each `k`, capped by `max_n`.
    pub ns: Vec<usize>,
    /// `None` means `k + 1`.
    pub sigma: Option<f64>,
    pub tau: f64,
    pub quad_assembly: Option<usize>,
    pub quad_error: Option<usize>,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub mode: Mode,
    pub diagnostics: bool,
    pub strict: bool,
    pub max_n: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            problem: PAPER_PROBLEM.to_string(),
            ks: vec![1],
            epsilons: vec![1e-6],
            ns: Vec::new(),
            sigma: None,
            tau: 3.0,
            quad_assembly: None,
            quad_error: None,
            tol: 1e-12,
            out: None,
            mode: Mode::TrueError,
            diagnostics: false,
            strict: false,
            max_n: None,
        }
    }
}

impl StudyConfig {
    pub fn sigma_for(&self, k: usize) -> f64 {
        self.sigma.unwrap_or((k + 1) as f64)
    }

    pub fn ns_for(&self, k: usize) -> Vec<usize> {
        if self.ns.is_empty() {
            default_ns(self.max_n.unwrap_or_else(|| default_max_n(k)))
        } else {
            let mut ns = self.ns.clone();
            ns.sort_unstable();
            ns.dedup();
            ns
        }
    }

    pub fn hdg_config(&self, k: usize) -> HdgConfig {
        let mut cfg = HdgConfig::new(k, self.tau);
        cfg.quad_assembly = self.quad_assembly;
        cfg.quad_error = self.quad_error;
        cfg.solver.tol = self.tol;
        cfg
    }

    /// Hard errors for unusable settings.
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.epsilons.is_empty() {
            return Err(HdgError::InvalidConfig("k and eps lists must be nonempty".into()));
        }
        for &k in &self.ks {
            self.hdg_config(k).validate()?;
            for n in self.ns_for(k) {
                if n == 0 || n % 4 != 0 {
                    return Err(HdgError::InvalidConfig(format!("N = {n} is not a positive multiple of 4")));
                }
                if let Some(cap) = self.max_n {
                    if n > cap {
                        return Err(HdgError::InvalidConfig(format!("N = {n} exceeds max-n {cap}")));
                    }
                }
            }
        }
        for &eps in &self.epsilons {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(HdgError::InvalidConfig(format!("eps = {eps} outside (0, 1]")));
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(HdgError::InvalidConfig(format!("sigma = {s} must be positive")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(HdgError::InvalidConfig(format!("tol = {} must be positive", self.tol)));
        }
        Ok(())
    }

    /// Soft problems that do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for &k in &self.ks {
            let s = self.sigma_for(k);
            if s < (k + 1) as f64 {
                out.push(format!(
                    "sigma = {s} < k + 1 = {}: take sigma >= k + 1 on a Shishkin mesh",
                    k + 1
                ));
            }
        }
        out
    }
}

fn build_mesh(spec: &ProblemSpec, n: usize, sigma: f64) -> Result<ShishkinMesh> {
    ShishkinMesh::build(MeshConfig {
        n,
        epsilon: spec.epsilon,
        sigma,
        beta1: spec.beta_lower[0],
        beta2: spec.beta_lower[1],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub problem: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub sigma: f64,
    pub tau: f64,
    pub quad_assembly: usize,
    pub quad_error: usize,
    pub energy_error: Option<f64>,
    pub supercloseness_error: Option<f64>,
    pub l2_error_u: Option<f64>,
    pub l2_error_q: Option<f64>,
    /// Squared true-error norm per region (smooth, x-layer, y-layer, corner).
    pub region_sq: Option<[f64; 4]>,
    pub trace_dim: usize,
    pub nnz: usize,
    pub relative_residual: f64,
    pub diagnostics: Option<DiagnosticReport>,
}

impl ErrorReport {
    /// Key-value text, one `key = value` per line.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:e}"));
        let _ = writeln!(s, "problem = {}", self.problem);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "epsilon = {:e}", self.epsilon);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "quad_assembly = {}", self.quad_assembly);
        let _ = writeln!(s, "quad_error = {}", self.quad_error);
        let _ = writeln!(s, "trace_dim = {}", self.trace_dim);
        let _ = writeln!(s, "nnz = {}", self.nnz);
        let _ = writeln!(s, "relative_residual = {:e}", self.relative_residual);
        let _ = writeln!(s, "energy_error = {}", opt(self.energy_error));
        let _ = writeln!(s, "supercloseness_error = {}", opt(self.supercloseness_error));
        let _ = writeln!(s, "l2_error_u = {}", opt(self.l2_error_u));
        let _ = writeln!(s, "l2_error_q = {}", opt(self.l2_error_q));
        if let Some(r) = self.region_sq {
            for (i, v) in r.iter().enumerate() {
                let _ = writeln!(s, "region_sq.{} = {v:e}", crate::norms::region_label(i));
            }
        }
        if let Some(d) = &self.diagnostics {
            s.push_str(&d.to_key_value());
        }
        s
    }
}

/// Solves one `(k, eps, N)` instance and measures the requested norms.
pub fn run_case(cfg: &StudyConfig, k: usize, epsilon: f64, n: usize) -> Result<ErrorReport> {
    let spec = problem_by_name(&cfg.problem, epsilon)?;
    let hdg = cfg.hdg_config(k);
    hdg.validate()?;
    let sigma = cfg.sigma_for(k);
    let mesh = build_mesh(&spec, n, sigma)?;
    let sol = assemble_and_solve(&mesh, &spec, &hdg)?;
    let points = hdg.error_points();
    let mut report = ErrorReport {
        problem: spec.name.clone(),
        n,
        k,
        epsilon,
        sigma,
        tau: hdg.tau,
        quad_assembly: hdg.assembly_points(),
        quad_error: points,
        energy_error: None,
        supercloseness_error: None,
        l2_error_u: None,
        l2_error_q: None,
        region_sq: None,
        trace_dim: sol.trace_dim,
        nnz: sol.nnz,
        relative_residual: sol.solve.relative_residual,
        diagnostics: None,
    };
    let exact = spec.exact()?;
    if cfg.mode.wants_true() {
        let err = Difference {
            a: ExactTriple::new(&spec, exact),
            b: DiscreteTriple::new(&mesh, &sol.fields),
        };
        let e = energy_norm(&err, &mesh, &spec, &hdg, points)?;
        let (lu, lq) = l2_errors(&err, &mesh, &hdg.error_quadrature(&spec))?;
        report.energy_error = Some(e.value);
        report.region_sq = Some(e.region_sq);
        report.l2_error_u = Some(lu);
        report.l2_error_q = Some(lq);
    }
    if cfg.mode.wants_super() {
        let proj = project_exact(&mesh, &spec, k, &hdg.error_quadrature(&spec))?;
        report.supercloseness_error = Some(supercloseness_norm(&sol.fields, &proj, &mesh, &spec, &hdg)?.value);
    }
    if cfg.diagnostics {
        report.diagnostics = Some(diagnostics_for(&spec, &mesh, &hdg, Some(&sol.fields)));
    }
    Ok(report)
}

/// `run_case` for a config that names exactly one `k`, `eps` and `N`.
pub fn run_single(cfg: &StudyConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let k = single(&cfg.ks, "k")?;
    let eps = single(&cfg.epsilons, "eps")?;
    let n = single(&cfg.ns, "N")?;
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    run_case(cfg, k, eps, n)
}

fn single<T: Copy>(v: &[T], what: &str) -> Result<T> {
    match v {
        [x] => Ok(*x),
        _ => Err(HdgError::InvalidConfig(format!(
            "a single run needs exactly one {what} value, got {}",
            v.len()
        ))),
    }
}

/// One table of errors for a fixed `k` and norm: rows are `N`, columns are
/// `eps` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub k: usize,
    /// `TrueError` or `Supercloseness`.
    pub mode: Mode,
    pub epsilons: Vec<f64>,
    pub ns: Vec<usize>,
    /// `errors[row][col]`; failed cells hold the error message.
    pub errors: Vec<Vec<std::result::Result<f64, String>>>,
}

impl SweepTable {
    pub fn error(&self, n: usize, epsilon: f64) -> Option<f64> {
        let r = self.ns.iter().position(|&m| m == n)?;
        let c = self.epsilons.iter().position(|&e| e == epsilon)?;
        self.errors[r][c].as_ref().ok().copied()
    }

    /// Rate between row `r` and `r + 1`, if both succeeded and `N` doubles.
    pub fn rate(&self, r: usize, c: usize) -> Option<f64> {
        let (a, b) = self.pair(r, c)?;
        convergence_rate(a, b, self.ns[r]).ok()
    }

    pub fn dyadic(&self, r: usize, c: usize) -> Option<f64> {
        let (a, b) = self.pair(r, c)?;
        dyadic_rate(a, b).ok()
    }

    fn pair(&self, r: usize, c: usize) -> Option<(f64, f64)> {
        if r + 1 >= self.ns.len() || self.ns[r + 1] != 2 * self.ns[r] {
            return None;
        }
        let a = *self.errors[r][c].as_ref().ok()?;
        let b = *self.errors[r + 1][c].as_ref().ok()?;
        Some((a, b))
    }

    pub fn failures(&self) -> usize {
        self.errors.iter().flatten().filter(|e| e.is_err()).count()
    }

    pub fn file_stem(&self) -> String {
        format!("k{}_{}", self.k, self.mode.label())
    }

    /// Long-format CSV with full precision and both rates.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "mode", "epsilon", "n", "error", "rate", "dyadic_rate", "status"])?;
        for (c, eps) in self.epsilons.iter().enumerate() {
            for (r, n) in self.ns.iter().enumerate() {
                let (err, status) = match &self.errors[r][c] {
                    Ok(v) => (format!("{v:e}"), "ok".to_string()),
                    Err(msg) => (String::new(), format!("error: {msg}")),
                };
                let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
                w.write_record([
                    self.k.to_string(),
                    self.mode.label().to_string(),
                    format!("{eps:e}"),
                    n.to_string(),
                    err,
                    opt(self.rate(r, c)),
                    opt(self.dyadic(r, c)),
                    status,
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| HdgError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| HdgError::InvalidConfig(e.to_string()))
    }

    /// Aligned markdown with `(e_h, p_h)` column pairs per `eps`, matching the
    /// layout of published convergence tables.
    pub fn to_markdown(&self) -> String {
        let mut cols: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["N".to_string()];
        for eps in &self.epsilons {
            header.push(format!("e_h ({})", sci(*eps, 0)));
            header.push("p_h".to_string());
        }
        cols.push(header);
        for (r, n) in self.ns.iter().enumerate() {
            let mut row = vec![n.to_string()];
            for c in 0..self.epsilons.len() {
                row.push(match &self.errors[r][c] {
                    Ok(v) => sci(*v, 3),
                    Err(_) => "ERR".to_string(),
                });
                row.push(if r + 1 == self.ns.len() {
                    "---".to_string()
                } else {
                    self.rate(r, c).map_or(String::new(), |p| format!("{p:.2}"))
                });
            }
            cols.push(row);
        }
        let width: Vec<usize> = (0..cols[0].len())
            .map(|j| cols.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let line = |r: &[String]| {
            let cells: Vec<String> = r.iter().zip(&width).map(|(s, w)| format!("{s:>w$}")).collect();
            format!("| {} |\n", cells.join(" | "))
        };
        let mut s = format!("k = {}, {}\n\n", self.k, self.mode.label());
        s.push_str(&line(&cols[0]));
        let rule: Vec<String> = width.iter().map(|w| format!("{}:", "-".repeat(w.saturating_sub(1).max(2)))).collect();
        s.push_str(&format!("| {} |\n", rule.join(" | ")));
        for r in &cols[1..] {
            s.push_str(&line(r));
        }
        s
    }
}

/// `1.188e-1`, `8.442e+0` style scientific notation.
pub fn sci(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub tables: Vec<SweepTable>,
    pub reports: Vec<ErrorReport>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        // A failed solve shows up once per requested norm.
        self.tables.iter().map(SweepTable::failures).max().unwrap_or(0)
    }

    /// Writes `<stem>.csv` and `<stem>.md` per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let csv = dir.join(format!("{}.csv", t.file_stem()));
            std::fs::write(&csv, t.to_csv()?)?;
            let md = dir.join(format!("{}.md", t.file_stem()));
            std::fs::write(&md, t.to_markdown())?;
            written.push(csv);
            written.push(md);
        }
        Ok(written)
    }
}

/// Runs every `(k, eps, N)` cell in order. A failing cell is recorded in
/// the tables and does not stop the sweep.
pub fn run_sweep(cfg: &StudyConfig) -> Result<SweepResult> {
    cfg.validate()?;
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    let mut tables = Vec::new();
    let mut reports = Vec::new();
    for &k in &cfg.ks {
        let ns = cfg.ns_for(k);
        let mut true_rows = Vec::with_capacity(ns.len());
        let mut super_rows = Vec::with_capacity(ns.len());
        for &n in &ns {
            let mut t_row = Vec::with_capacity(cfg.epsilons.len());
            let mut s_row = Vec::with_capacity(cfg.epsilons.len());
            for &eps in &cfg.epsilons {
                log::info!("solving k = {k}, eps = {eps:e}, N = {n}");
                match run_case(cfg, k, eps, n) {
                    Ok(rep) => {
                        t_row.push(rep.energy_error.ok_or_else(|| "not computed".to_string()));
                        s_row.push(rep.supercloseness_error.ok_or_else(|| "not computed".to_string()));
                        reports.push(rep);
                    }
                    Err(e) => {
                        log::error!("k = {k}, eps = {eps:e}, N = {n}: {e}");
                        t_row.push(Err(e.to_string()));
                        s_row.push(Err(e.to_string()));
                    }
                }
            }
            true_rows.push(t_row);
            super_rows.push(s_row);
        }
        let mk = |mode, errors| SweepTable {
            k,
            mode,
            epsilons: cfg.epsilons.clone(),
            ns: ns.clone(),
            errors,
        };
        if cfg.mode.wants_true() {
            tables.push(mk(Mode::TrueError, true_rows));
        }
        if cfg.mode.wants_super() {
            tables.push(mk(Mode::Supercloseness, super_rows));
        }
    }
    Ok(SweepResult { tables, reports })
}

pub const GALERKIN_TOL: f64 = 1e-8;
pub const FLUX_TOL: f64 = 1e-9;
pub const DISCRETE_RESIDUAL_TOL: f64 = 1e-9;
pub const COERCIVITY_TOL: f64 = 1e-10;
pub const QUADRATURE_TOL: f64 = 1e-3;
pub const COERCIVITY_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticEntry {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticReport {
    pub entries: Vec<DiagnosticEntry>,
}

impl DiagnosticReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&DiagnosticEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn push(&mut self, name: &'static str, value: f64, threshold: f64, pass: bool, detail: impl Into<String>) {
        self.entries.push(DiagnosticEntry {
            name,
            value,
            threshold,
            pass,
            detail: detail.into(),
        });
    }

    fn fail(&mut self, name: &'static str, detail: impl Into<String>) {
        self.push(name, f64::NAN, f64::NAN, false, detail);
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "diag.{} = {} value={:e} threshold={:e}{}",
                e.name,
                if e.pass { "pass" } else { "fail" },
                e.value,
                e.threshold,
                if e.detail.is_empty() { String::new() } else { format!(" ({})", e.detail) }
            );
        }
        s
    }
}

/// Diagnostics for the single `(k, eps, N)` case named by `cfg`.
pub fn run_diagnostics(cfg: &StudyConfig) -> Result<DiagnosticReport> {
    cfg.validate()?;
    let k = single(&cfg.ks, "k")?;
    let eps = single(&cfg.epsilons, "eps")?;
    let n = single(&cfg.ns, "N")?;
    let spec = problem_by_name(&cfg.problem, eps)?;
    let mesh = build_mesh(&spec, n, cfg.sigma_for(k))?;
    Ok(diagnostics_for(&spec, &mesh, &cfg.hdg_config(k), None))
}

/// Assumption and stabilization checks, then (when the problem admits a
/// solve) Galerkin orthogonality, discrete residual, flux continuity,
/// coercivity sampling and quadrature robustness. Failures are entries,
/// never errors.
pub fn diagnostics_for(
    spec: &ProblemSpec,
    mesh: &ShishkinMesh,
    cfg: &HdgConfig,
    solved: Option<&DiscreteFields>,
) -> DiagnosticReport {
    let mut rep = DiagnosticReport::default();
    let a = verify_assumptions(spec, 101);
    let worst = a.beta_margin[0].min(a.beta_margin[1]).min(a.coercivity_margin);
    rep.push(
        "assumptions",
        worst,
        -1e-12,
        a.pass,
        format!(
            "beta margin ({:.3e}, {:.3e}), min c - div(beta)/2 = {:.6}, c0 = {}",
            a.beta_margin[0], a.beta_margin[1], a.min_reaction_weight, spec.c0
        ),
    );
    let stable = match stabilization_margin(mesh, spec, cfg.tau, cfg.assembly_points()) {
        Ok((margin, x, y)) => {
            rep.push("stabilization", margin, 0.0, margin > 0.0, format!("min tau - beta.n/2 at ({x:.4}, {y:.4})"));
            margin > 0.0
        }
        Err(e) => {
            rep.fail("stabilization", e.to_string());
            false
        }
    };
    if !stable {
        for name in ["galerkin_residual", "discrete_residual", "flux_continuity", "coercivity", "quadrature"] {
            rep.fail(name, "skipped: stabilization condition violated");
        }
        return rep;
    }

    let owned;
    let fields = match solved {
        Some(f) => f,
        None => match assemble_and_solve(mesh, spec, cfg) {
            Ok(s) => {
                owned = s.fields;
                &owned
            }
            Err(e) => {
                for name in ["galerkin_residual", "discrete_residual", "flux_continuity", "quadrature"] {
                    rep.fail(name, format!("solve failed: {e}"));
                }
                coercivity_entry(&mut rep, mesh, spec, cfg);
                return rep;
            }
        },
    };

    let load_scale = load_vector(mesh, spec, cfg.k, &cfg.error_quadrature(spec))
        .map(|f| f.max_abs().max(1.0))
        .unwrap_or(1.0);
    match galerkin_residual(fields, mesh, spec, cfg) {
        Ok(r) => {
            let v = r / load_scale;
            rep.push("galerkin_residual", v, GALERKIN_TOL, v <= GALERKIN_TOL, format!("unscaled {r:.3e}"));
        }
        Err(e) => rep.fail("galerkin_residual", e.to_string()),
    }
    match discrete_residual(fields, mesh, spec, cfg) {
        Ok(r) => {
            let v = r / load_scale;
            rep.push("discrete_residual", v, DISCRETE_RESIDUAL_TOL, v <= DISCRETE_RESIDUAL_TOL, "");
        }
        Err(e) => rep.fail("discrete_residual", e.to_string()),
    }
    match flux_continuity(fields, mesh, spec, cfg) {
        Ok(v) => rep.push("flux_continuity", v, FLUX_TOL, v <= FLUX_TOL, ""),
        Err(e) => rep.fail("flux_continuity", e.to_string()),
    }
    coercivity_entry(&mut rep, mesh, spec, cfg);
    match quadrature_delta(fields, mesh, spec, cfg) {
        Ok(v) => rep.push("quadrature", v, QUADRATURE_TOL, v < QUADRATURE_TOL, "relative change with +2 points"),
        Err(e) => rep.fail("quadrature", e.to_string()),
    }
    rep
}

fn coercivity_entry(rep: &mut DiagnosticReport, mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) {
    match coercivity_margin(mesh, spec, cfg, COERCIVITY_SAMPLES, 0x5eed) {
        Ok(v) => rep.push("coercivity", v, -COERCIVITY_TOL, v >= -COERCIVITY_TOL, "min (B(x,x) - |||x|||^2) / |||x|||^2"),
        Err(e) => rep.fail("coercivity", e.to_string()),
    }
}

/// Largest two-sided numerical-flux moment over interior edges.
pub fn flux_continuity(fields: &DiscreteFields, mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<f64> {
    let trial = DiscreteTriple::new(mesh, fields);
    let b = bilinear_vector(mesh, spec, cfg, &trial, &ErrorQuadrature::plain(cfg.assembly_points()))?;
    Ok(b.trace.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Random discrete triple with zero boundary traces.
pub fn random_triple(mesh: &ShishkinMesh, k: usize, rng: &mut impl Rng) -> DiscreteFields {
    let mut f = DiscreteFields::zeros(mesh, k);
    for v in f.q1.iter_mut().chain(f.q2.iter_mut()).chain(f.u.iter_mut()) {
        *v = rng.gen_range(-1.0..1.0);
    }
    let p = k + 1;
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.trace_index.is_some() {
            for b in 0..p {
                f.trace[e * p + b] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    f
}

/// `min (B(x, x) - |||x|||^2) / |||x|||^2` over `samples` random triples.
pub fn coercivity_margin(
    mesh: &ShishkinMesh,
    spec: &ProblemSpec,
    cfg: &HdgConfig,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = cfg.error_points();
    let quad = cfg.error_quadrature(spec);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let xi = random_triple(mesh, cfg.k, &mut rng);
        let t = DiscreteTriple::new(mesh, &xi);
        let bxx = bilinear_vector(mesh, spec, cfg, &t, &quad)?.dot_fields(mesh, &xi);
        let nn = energy_norm(&t, mesh, spec, cfg, points)?.value.powi(2);
        worst = worst.min((bxx - nn) / nn);
    }
    Ok(worst)
}

/// Relative change of the true energy error when the error quadrature gains
/// two points per direction.
pub fn quadrature_delta(fields: &DiscreteFields, mesh: &ShishkinMesh, spec: &ProblemSpec, cfg: &HdgConfig) -> Result<f64> {
    let exact = spec.exact()?;
    let err = Difference {
        a: ExactTriple::new(spec, exact),
        b: DiscreteTriple::new(mesh, fields),
    };
    let base = cfg.error_points();
    let e0 = energy_norm(&err, mesh, spec, cfg, base)?.value;
    let e1 = energy_norm(&err, mesh, spec, cfg, base + 2)?.value;
    Ok((e1 - e0).abs() / e0.max(f64::MIN_POSITIVE))
}
