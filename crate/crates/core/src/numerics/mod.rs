//! Bundled numerical kernels: sparse symmetric eigensolver, convex QP
//! solver, and nonlinear local solver, behind solver-agnostic problem
//! descriptions.
//!
//! All solvers are reentrant pure procedures on their inputs; multiple
//! instances may run concurrently on disjoint problems.

mod eigen;
mod ldl;
mod nlp;
mod qp;
mod sparse;

pub use eigen::{smallest_eigenpairs, EigenError};
pub use nlp::{solve_nlp, NlpError, NlpOptions, NlpProblem};
pub use qp::{solve_qp, QpError, QpProblem};
pub use sparse::{SparseMatrix, SparseSymMatrix};

/// Termination status shared by the QP and NLP solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    NumericalFailure,
}

/// Solution record returned by the QP and NLP solvers.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Worst first-order optimality/feasibility residual at `x`.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Diagnostic message for non-optimal exits.
    pub message: Option<String>,
}
