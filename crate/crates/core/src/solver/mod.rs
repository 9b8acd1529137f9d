//! Dense solvers for problems constrained by `A x >= g`.
//!
//! * [`solve_lp`] minimises `c'x` with a two-phase simplex run on the dual
//!   standard form `max g'y, A'y = c, y >= 0`.
//! * [`solve_qp_identity`] computes the Euclidean projection of a point onto
//!   `{x : A x >= g}` with the Goldfarb-Idnani dual active-set method.
//!
//! Both report a [`SolveStatus`] rather than failing; only malformed input
//! is an `Err`.

#![allow(clippy::needless_range_loop)]

mod linalg;
mod lp;
mod qp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linalg::{Lu, Matrix};
pub use lp::solve_lp;
pub use qp::solve_qp_identity;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in problem data")]
    NonFinite,
}

/// Row-major `m x d` constraint matrix with right-hand side, read as `A x >= g`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    matrix: Matrix,
    rhs: Vec<f64>,
}

impl LinearConstraints {
    pub fn new(matrix: Matrix, rhs: Vec<f64>) -> Result<Self, SolverError> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(SolverError::Dimension("constraint matrix is empty".into()));
        }
        if matrix.rows() != rhs.len() {
            return Err(SolverError::Dimension(format!(
                "{} rows but rhs has {} entries",
                matrix.rows(),
                rhs.len()
            )));
        }
        if !matrix.data().iter().chain(&rhs).all(|v| v.is_finite()) {
            return Err(SolverError::NonFinite);
        }
        Ok(LinearConstraints { matrix, rhs })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], rhs: Vec<f64>) -> Result<Self, SolverError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SolverError::Dimension("ragged constraint rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        LinearConstraints::new(Matrix::from_vec(rows.len(), cols, data), rhs)
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    /// Slacks `A x - g`.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|i| linalg::dot(self.row(i), x) - self.rhs[i])
            .collect()
    }

    /// `max(0, max_i (g_i - A_i x))`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.slacks(x).into_iter().fold(0.0, |m, s| m.max(-s))
    }

    fn rhs_scale(&self) -> f64 {
        1.0 + self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    RankDeficient,
    Unbounded,
    MaxIterations,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::RankDeficient => "RankDeficient",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::Infeasible => "Infeasible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Feasibility tolerance, scaled by `1 + ||g||_inf`.
    pub feasibility: f64,
    /// KKT stationarity / optimality tolerance.
    pub optimality: f64,
    /// Iteration cap; `None` means `50 (d + m)`.
    pub max_iterations: Option<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-8,
            optimality: 1e-7,
            max_iterations: None,
        }
    }
}

impl Tolerances {
    pub(crate) fn iteration_cap(&self, d: usize, m: usize) -> usize {
        self.max_iterations.unwrap_or(50 * (d + m))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub x: Vec<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub max_constraint_violation: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Lagrange multipliers, one per constraint row (empty when not optimal).
    pub multipliers: Vec<f64>,
    /// For `Unbounded`: a direction `r` with `A r >= 0` and `c'r < 0`.
    pub ray: Option<Vec<f64>>,
}

impl SolverReport {
    pub(crate) fn failed(d: usize, status: SolveStatus, iterations: usize) -> Self {
        SolverReport {
            x: vec![0.0; d],
            status,
            objective: f64::NAN,
            max_constraint_violation: f64::NAN,
            kkt_residual: f64::NAN,
            iterations,
            multipliers: Vec::new(),
            ray: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
