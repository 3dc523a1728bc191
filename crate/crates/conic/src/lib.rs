//! Interior-point solver for conic programs with nonnegative and
//! semidefinite cones, including complex Hermitian matrix variables via
//! their real symmetric embedding.
//!
//! Build a [`ConicProblem`] with scalar blocks, matrix variables, linear
//! rows and linear matrix inequalities, then call [`solve_conic`].

mod cholesky;
mod ipm;
pub mod layout;
pub mod problem;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use cholesky::{BlockCholesky, BlockPattern};
pub use layout::{realify, Field, MatrixLayout, SymEntry};
pub use problem::{Block, BlockKind, ConicProblem, Lmi, MatrixVar, Row, Sense};

#[derive(Debug, Error, PartialEq)]
pub enum ConicError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Termination status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// Certified by a dual improving ray.
    Infeasible,
    /// Certified by a primal improving ray.
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Feasibility and relative-gap tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
    /// Relative static diagonal shift of the normal equations.
    pub regularization: f64,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
    /// Tolerance the best iterate must meet to be reported optimal when
    /// the method stalls before reaching `tol`.
    pub reduced_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            step_fraction: 0.99,
            regularization: 1e-15,
            verbose: false,
            reduced_tol: 1e-5,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: Status,
    /// Primal values of all variables.
    pub x: Vec<f64>,
    /// Multiplier per user row (nonnegative for satisfied inequalities in
    /// their stated sense).
    pub row_duals: Vec<f64>,
    /// Dual matrix per LMI, in the real embedding.
    pub lmi_duals: Vec<DMatrix<f64>>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Absolute complementarity gap `s^T z`.
    pub gap: f64,
    pub relative_gap: Option<f64>,
    pub iterations: usize,
    pub message: String,
}

impl ConicSolution {
    fn empty(status: Status, n: usize, iterations: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            row_duals: Vec::new(),
            lmi_duals: Vec::new(),
            objective: f64::NAN,
            dual_objective: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            gap: f64::NAN,
            relative_gap: None,
            iterations,
            message: String::new(),
        }
    }

    fn with_metrics(mut self, pres: f64, dres: f64, gap: f64, relgap: Option<f64>) -> Self {
        self.primal_residual = pres;
        self.dual_residual = dres;
        self.gap = gap;
        self.relative_gap = relgap;
        self
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: usize) -> f64 {
        self.x[var]
    }

    /// Value of a matrix variable.
    pub fn matrix(&self, v: &MatrixVar) -> DMatrix<Complex64> {
        let k = v.layout.num_coords();
        v.layout.matrix_of(&self.x[v.offset..v.offset + k])
    }
}

/// Solves `problem` with the given settings.
pub fn solve_conic(problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution, ConicError> {
    problem.validate()?;
    Ok(ipm::solve(problem, settings))
}
