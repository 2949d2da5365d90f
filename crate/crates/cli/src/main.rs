use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hdg_shishkin::config::apply_config;
use hdg_shishkin::mesh::{MeshConfig, ShishkinMesh};
use hdg_shishkin::problem::problem_by_name;
use hdg_shishkin::study::{run_diagnostics, run_single, run_sweep, Mode, StudyConfig};

/// HDG convergence studies on Shishkin meshes.
#[derive(Parser, Debug)]
#[command(name = "hdg-study", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one (k, eps, N) case and print its error report.
    Solve(StudyArgs),
    /// Run a convergence sweep and write CSV and markdown tables.
    Sweep(StudyArgs),
    /// Run the diagnostic suite on one case.
    Diagnose(StudyArgs),
    /// Print mesh nodes, transition points and edge counts.
    MeshDump(StudyArgs),
}

#[derive(Args, Debug, Default)]
struct StudyArgs {
    /// key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Polynomial degree (repeatable).
    #[arg(long)]
    k: Vec<usize>,
    /// Perturbation parameter (repeatable).
    #[arg(long)]
    eps: Vec<f64>,
    /// Cells per direction (repeatable).
    #[arg(long)]
    n: Vec<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// true-error, supercloseness or both.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    quad_assembly: Option<usize>,
    #[arg(long)]
    quad_error: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory (sweep) or file (solve, diagnose, mesh-dump).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when a validation check fails.
    #[arg(long)]
    strict: bool,
    /// Largest N allowed; also extends the default grid.
    #[arg(long)]
    max_n: Option<usize>,
    /// Attach diagnostics to solve reports.
    #[arg(long)]
    diagnostics: bool,
}

impl StudyArgs {
    fn resolve(&self) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            apply_config(&mut cfg, &text).with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(p) = &self.problem {
            cfg.problem = p.clone();
        }
        if !self.k.is_empty() {
            cfg.ks = self.k.clone();
        }
        if !self.eps.is_empty() {
            cfg.epsilons = self.eps.clone();
        }
        if !self.n.is_empty() {
            cfg.ns = self.n.clone();
        }
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if self.quad_assembly.is_some() {
            cfg.quad_assembly = self.quad_assembly;
        }
        if self.quad_error.is_some() {
            cfg.quad_error = self.quad_error;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.strict |= self.strict;
        if self.max_n.is_some() {
            cfg.max_n = self.max_n;
        }
        cfg.diagnostics |= self.diagnostics;
        Ok(cfg)
    }
}

enum Outcome {
    Ok,
    SolverFailure,
    ValidationFailure,
}

fn emit(cfg: &StudyConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validation_outcome(cfg: &StudyConfig, failed: bool) -> Outcome {
    if failed && cfg.strict {
        Outcome::ValidationFailure
    } else {
        Outcome::Ok
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let report = match run_single(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(Outcome::SolverFailure);
                }
            };
            emit(&cfg, &report.to_key_value())?;
            let failed = report.diagnostics.as_ref().is_some_and(|d| !d.pass()) || !cfg.warnings().is_empty();
            Ok(validation_outcome(&cfg, failed))
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let result = run_sweep(&cfg)?;
            for t in &result.tables {
                println!("{}", t.to_markdown());
            }
            if let Some(dir) = &cfg.out {
                for p in result.write(dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            if result.failures() > 0 {
                eprintln!("{} sweep cell(s) failed", result.failures());
                return Ok(Outcome::SolverFailure);
            }
            Ok(validation_outcome(&cfg, !cfg.warnings().is_empty()))
        }
        Command::Diagnose(args) => {
            let cfg = args.resolve()?;
            let report = run_diagnostics(&cfg)?;
            emit(&cfg, &report.to_key_value())?;
            Ok(validation_outcome(&cfg, !report.pass()))
        }
        Command::MeshDump(args) => {
            let cfg = args.resolve()?;
            let k = cfg.ks.first().copied().unwrap_or(1);
            let n = *cfg.ns.first().context("mesh-dump needs --n")?;
            let eps = cfg.epsilons.first().copied().context("mesh-dump needs --eps")?;
            let spec = problem_by_name(&cfg.problem, eps)?;
            let mesh = ShishkinMesh::build(MeshConfig {
                n,
                epsilon: eps,
                sigma: cfg.sigma_for(k),
                beta1: spec.beta_lower[0],
                beta2: spec.beta_lower[1],
            })?;
            emit(&cfg, &mesh.dump())?;
            Ok(validation_outcome(&cfg, mesh.assumption_warning))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::SolverFailure) => ExitCode::from(1),
        Ok(Outcome::ValidationFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<hdg_shishkin::HdgError>(),
                    Some(
                        hdg_shishkin::HdgError::InvalidConfig(_)
                            | hdg_shishkin::HdgError::Config { .. }
                            | hdg_shishkin::HdgError::InvalidMesh(_)
                            | hdg_shishkin::HdgError::InvalidProblem(_)
                            | hdg_shishkin::HdgError::Stabilization { .. }
                    )
                )
            });
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
