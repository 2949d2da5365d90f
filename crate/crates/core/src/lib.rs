//! Hybridizable discontinuous Galerkin solver for
//! `-eps Δu + β·∇u + cu = f` on the unit square, discretized on
//! two-dimensional Shishkin meshes, with the error measurements needed for
//! convergence studies.

pub mod assembly;
pub mod config;
pub mod error;
pub mod fields;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod projection;
pub mod quadrature;
pub mod reference;
pub mod sparse;
pub mod study;

pub use assembly::{assemble_and_solve, HdgConfig, HdgSolution};
pub use error::{HdgError, Result};
pub use fields::{DiscreteFields, FieldTriple};
pub use mesh::{MeshConfig, Region, ShishkinMesh};
pub use norms::{convergence_rate, dyadic_rate, energy_norm, EnergyNorm};
pub use problem::{paper_problem, polynomial_problem, problem_by_name, ProblemSpec};
pub use sparse::{SolverOptions, SparseMatrix};
pub use study::{run_single, run_sweep, Mode, StudyConfig};
