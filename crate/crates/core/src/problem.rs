//! Problem instances `-eps Δu + β·∇u + c u = f` on the unit square with
//! homogeneous Dirichlet data.

use std::fmt;
use std::sync::Arc;

use crate::error::{HdgError, Result};

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Closed-form exact solution with first derivatives and Laplacian.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub grad_u: VectorField,
    pub laplacian_u: ScalarField,
}

impl ExactSolution {
    pub fn u(&self, x: f64, y: f64) -> f64 {
        (self.u)(x, y)
    }

    pub fn grad_u(&self, x: f64, y: f64) -> [f64; 2] {
        (self.grad_u)(x, y)
    }

    pub fn laplacian_u(&self, x: f64, y: f64) -> f64 {
        (self.laplacian_u)(x, y)
    }

    /// Flux `q = -eps ∇u`.
    pub fn q(&self, epsilon: f64, x: f64, y: f64) -> [f64; 2] {
        let g = self.grad_u(x, y);
        [-epsilon * g[0], -epsilon * g[1]]
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub epsilon: f64,
    pub beta: VectorField,
    pub div_beta: ScalarField,
    pub c: ScalarField,
    pub f: ScalarField,
    /// Componentwise lower bounds of `beta`.
    pub beta_lower: [f64; 2],
    /// Lower bound for `c - div(beta)/2`.
    pub c0: f64,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("epsilon", &self.epsilon)
            .field("beta_lower", &self.beta_lower)
            .field("c0", &self.c0)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    #[inline]
    pub fn beta(&self, x: f64, y: f64) -> [f64; 2] {
        (self.beta)(x, y)
    }

    #[inline]
    pub fn div_beta(&self, x: f64, y: f64) -> f64 {
        (self.div_beta)(x, y)
    }

    #[inline]
    pub fn c(&self, x: f64, y: f64) -> f64 {
        (self.c)(x, y)
    }

    #[inline]
    pub fn f(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    /// `c - div(beta) / 2`, the reaction weight in the energy norm.
    #[inline]
    pub fn reaction_weight(&self, x: f64, y: f64) -> f64 {
        self.c(x, y) - 0.5 * self.div_beta(x, y)
    }

    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact.as_ref().ok_or(HdgError::MissingExact)
    }

    /// Builds a problem whose source is `L u` for the given exact solution.
    #[allow(clippy::too_many_arguments)]
    pub fn manufactured(
        name: impl Into<String>,
        epsilon: f64,
        beta: VectorField,
        div_beta: ScalarField,
        c: ScalarField,
        exact: ExactSolution,
        beta_lower: [f64; 2],
        c0: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(HdgError::InvalidProblem(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        let f: ScalarField = {
            let (beta, c, exact) = (beta.clone(), c.clone(), exact.clone());
            Arc::new(move |x, y| {
                let g = exact.grad_u(x, y);
                let b = beta(x, y);
                -epsilon * exact.laplacian_u(x, y) + b[0] * g[0] + b[1] * g[1] + c(x, y) * exact.u(x, y)
            })
        };
        Ok(Self {
            name: name.into(),
            epsilon,
            beta,
            div_beta,
            c,
            f,
            beta_lower,
            c0,
            exact: Some(exact),
        })
    }
}

/// Names accepted by [`problem_by_name`].
pub const PAPER_PROBLEM: &str = "paper-sec5";
pub const POLYNOMIAL_PROBLEM: &str = "poly-bubble";

pub fn problem_by_name(name: &str, epsilon: f64) -> Result<ProblemSpec> {
    match name {
        PAPER_PROBLEM => paper_problem(epsilon),
        POLYNOMIAL_PROBLEM => polynomial_problem(epsilon),
        other => Err(HdgError::InvalidProblem(format!("unknown problem '{other}'"))),
    }
}

fn layered_beta() -> (VectorField, ScalarField) {
    (
        Arc::new(|x, y| [2.0 - x, 3.0 - y * y * y]),
        Arc::new(|_x, y| -1.0 - 3.0 * y * y),
    )
}

/// Layered test problem with `beta = (2 - x, 3 - y^3)`, `c = 1` and exact
/// solution `y^3 sin(x) (1 - e^{-(1-x)/eps}) (1 - e^{-2(1-y)/eps})`.
pub fn paper_problem(epsilon: f64) -> Result<ProblemSpec> {
    if !(epsilon > 0.0) || epsilon > 1.0 {
        return Err(HdgError::InvalidProblem(format!(
            "epsilon = {epsilon} must lie in (0, 1]"
        )));
    }
    let eps = epsilon;
    // u = g(x) h(y), g = sin x (1 - ex), h = y^3 (1 - ey),
    // ex = e^{-(1-x)/eps}, ey = e^{-2(1-y)/eps}.
    let parts = move |x: f64, y: f64| {
        let ex = (-(1.0 - x) / eps).exp();
        let ey = (-2.0 * (1.0 - y) / eps).exp();
        let (s, c) = x.sin_cos();
        let a = 1.0 - ex;
        let da = -ex / eps;
        let dda = -ex / (eps * eps);
        let b = 1.0 - ey;
        let db = -2.0 * ey / eps;
        let ddb = -4.0 * ey / (eps * eps);
        let g = s * a;
        let dg = c * a + s * da;
        let ddg = -s * a + 2.0 * c * da + s * dda;
        let y2 = y * y;
        let h = y2 * y * b;
        let dh = 3.0 * y2 * b + y2 * y * db;
        let ddh = 6.0 * y * b + 6.0 * y2 * db + y2 * y * ddb;
        (g, dg, ddg, h, dh, ddh)
    };
    let exact = ExactSolution {
        u: Arc::new(move |x, y| {
            let (g, _, _, h, _, _) = parts(x, y);
            g * h
        }),
        grad_u: Arc::new(move |x, y| {
            let (g, dg, _, h, dh, _) = parts(x, y);
            [dg * h, g * dh]
        }),
        laplacian_u: Arc::new(move |x, y| {
            let (g, _, ddg, h, _, ddh) = parts(x, y);
            ddg * h + g * ddh
        }),
    };
    let (beta, div_beta) = layered_beta();
    ProblemSpec::manufactured(
        PAPER_PROBLEM,
        epsilon,
        beta,
        div_beta,
        Arc::new(|_, _| 1.0),
        exact,
        [1.0, 2.0],
        1.5,
    )
}

/// Same coefficients as [`paper_problem`] with the `Q^2` bubble
/// `u = x(1-x) y(1-y)` as exact solution.
pub fn polynomial_problem(epsilon: f64) -> Result<ProblemSpec> {
    let exact = ExactSolution {
        u: Arc::new(|x, y| x * (1.0 - x) * y * (1.0 - y)),
        grad_u: Arc::new(|x, y| {
            [
                (1.0 - 2.0 * x) * y * (1.0 - y),
                x * (1.0 - x) * (1.0 - 2.0 * y),
            ]
        }),
        laplacian_u: Arc::new(|x, y| -2.0 * y * (1.0 - y) - 2.0 * x * (1.0 - x)),
    };
    let (beta, div_beta) = layered_beta();
    ProblemSpec::manufactured(
        POLYNOMIAL_PROBLEM,
        epsilon,
        beta,
        div_beta,
        Arc::new(|_, _| 1.0),
        exact,
        [1.0, 2.0],
        1.5,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `min(beta_i - beta_lower_i)` over the sample grid.
    pub beta_margin: [f64; 2],
    /// `min(c - div(beta)/2)` over the sample grid.
    pub min_reaction_weight: f64,
    /// `min(c - div(beta)/2) - c0`.
    pub coercivity_margin: f64,
    pub samples: usize,
    pub pass: bool,
}

const ASSUMPTION_SLACK: f64 = -1e-12;

/// Samples the coefficient assumptions on a uniform `samples x samples` grid
/// of the closed square.
pub fn verify_assumptions(spec: &ProblemSpec, samples: usize) -> AssumptionReport {
    let samples = samples.max(2);
    let mut beta_margin = [f64::INFINITY; 2];
    let mut min_reaction = f64::INFINITY;
    for j in 0..samples {
        let y = j as f64 / (samples - 1) as f64;
        for i in 0..samples {
            let x = i as f64 / (samples - 1) as f64;
            let b = spec.beta(x, y);
            beta_margin[0] = beta_margin[0].min(b[0] - spec.beta_lower[0]);
            beta_margin[1] = beta_margin[1].min(b[1] - spec.beta_lower[1]);
            min_reaction = min_reaction.min(spec.reaction_weight(x, y));
        }
    }
    let coercivity_margin = min_reaction - spec.c0;
    let pass = beta_margin[0] >= ASSUMPTION_SLACK
        && beta_margin[1] >= ASSUMPTION_SLACK
        && coercivity_margin >= ASSUMPTION_SLACK
        && spec.c0 > 0.0
        && spec.beta_lower.iter().all(|&b| b > 0.0);
    AssumptionReport {
        beta_margin,
        min_reaction_weight: min_reaction,
        coercivity_margin,
        samples: samples * samples,
        pass,
    }
}

/// `-eps Δu + β·∇u + c u - f` at a point.
pub fn pde_residual(spec: &ProblemSpec, x: f64, y: f64) -> Result<f64> {
    let exact = spec.exact()?;
    let g = exact.grad_u(x, y);
    let b = spec.beta(x, y);
    Ok(-spec.epsilon * exact.laplacian_u(x, y) + b[0] * g[0] + b[1] * g[1]
        + spec.c(x, y) * exact.u(x, y)
        - spec.f(x, y))
}
