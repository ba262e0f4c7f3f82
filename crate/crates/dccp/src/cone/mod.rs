//! Canonicalization of DCP problems to cone programs over the zero,
//! nonnegative, and second-order cones, and recovery of solutions on the
//! original variables.
//!
//! The standard form is `minimize c'v subject to b - A v in K` with `K` an
//! ordered product of cone blocks. Each nonlinear atom is replaced by its
//! graph implementation (epigraph or hypograph variables plus cone rows);
//! tightness at the optimum follows from the DCP monotonicity conditions.

mod affine;
mod canon;
mod dump;

pub use dump::{parse_triplets, write_triplets, DumpError};

use crate::expr::{evaluate, Assignment, EvalError, Shape, VarId, Variable};
use crate::solver::{self, ConeSolution, SolveStatus};
use crate::sparse::CscMatrix;
use crate::transform::{Problem, Sense};
use std::collections::BTreeMap;
use thiserror::Error;

/// One block of the cone product, dimensioned in rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeBlock {
    Zero(usize),
    Nonneg(usize),
    /// `(t, u)` with `|u|_2 <= t`; dimension counts `t`.
    SecondOrder(usize),
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match self {
            ConeBlock::Zero(d) | ConeBlock::Nonneg(d) | ConeBlock::SecondOrder(d) => *d,
        }
    }
}

/// Sparse cone program data: `minimize c'v  s.t.  b - A v in K`.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<ConeBlock>,
    /// Index ranges of the original variables inside `v`.
    pub var_map: BTreeMap<VarId, (usize, Shape)>,
}

impl ConeProgram {
    pub fn nvars(&self) -> usize {
        self.c.len()
    }

    pub fn nrows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) {
        assert_eq!(self.a.ncols(), self.c.len());
        assert_eq!(self.a.nrows(), self.b.len());
        let cone_rows: usize = self.cones.iter().map(ConeBlock::dim).sum();
        assert_eq!(cone_rows, self.b.len(), "cone dimensions must cover all rows");
        assert!(self.cones.iter().all(|c| c.dim() >= 1));
    }
}

/// Maps a cone-program primal vector back to an assignment on the original
/// variables (graph auxiliaries dropped).
#[derive(Debug, Clone)]
pub struct Recovery {
    vars: Vec<(Variable, usize)>,
    nvars: usize,
    maximize: bool,
}

impl Recovery {
    pub fn is_maximize(&self) -> bool {
        self.maximize
    }

    /// Objective of the original problem given the cone program's optimum.
    pub fn original_objective(&self, cone_objective: f64) -> f64 {
        if self.maximize {
            -cone_objective
        } else {
            cone_objective
        }
    }
}

#[derive(Debug, Error)]
pub enum CanonError {
    #[error("problem does not satisfy the DCP rules")]
    NotDcp,
    #[error("primal vector has dimension {got}, cone program has {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("constant subexpression could not be evaluated: {0}")]
    Eval(#[from] EvalError),
}

/// Extract the original-variable assignment from a cone primal vector.
pub fn recover(r: &Recovery, v: &[f64]) -> Result<Assignment, CanonError> {
    if v.len() != r.nvars {
        return Err(CanonError::DimensionMismatch { got: v.len(), want: r.nvars });
    }
    let mut a = Assignment::new();
    for (var, offset) in &r.vars {
        let shape = var.shape();
        let m = nalgebra::DMatrix::from_column_slice(
            shape.rows(),
            shape.cols(),
            &v[*offset..offset + shape.size()],
        );
        a.set(var, m);
    }
    Ok(a)
}

/// Canonicalize a DCP problem into an equivalent cone program.
pub fn canonicalize(p: &Problem) -> Result<(ConeProgram, Recovery), CanonError> {
    canon::canonicalize(p)
}

/// Outcome of a direct DCP solve.
#[derive(Debug, Clone)]
pub struct DcpSolution {
    pub assignment: Assignment,
    pub objective: f64,
    pub cone: ConeSolution,
}

#[derive(Debug, Error)]
pub enum DcpSolveError {
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("cone solver did not reach the requested tolerance")]
    MaxIter,
}

/// Canonicalize and solve a DCP problem with the embedded cone solver.
pub fn solve_dcp(p: &Problem, tol: f64, max_iter: usize) -> Result<DcpSolution, DcpSolveError> {
    solve_dcp_accept(p, tol, max_iter, tol)
}

/// Like [`solve_dcp`], but when the solver runs out of iterations its best
/// iterate is still accepted if every KKT residual is within `accept_tol`.
/// The CCP driver uses this: subproblems only need accuracy well below the
/// slack tolerance, and near-boundary linearizations can produce programs
/// whose last digits are out of reach.
pub fn solve_dcp_accept(
    p: &Problem,
    tol: f64,
    max_iter: usize,
    accept_tol: f64,
) -> Result<DcpSolution, DcpSolveError> {
    let (cp, rec) = canonicalize(p)?;
    let sol = solver::solve_cone(&cp, tol, max_iter);
    match sol.status {
        SolveStatus::Optimal => {
            let assignment = recover(&rec, &sol.x).expect("solver returned consistent dimensions");
            let objective = rec.original_objective(sol.objective);
            Ok(DcpSolution { assignment, objective, cone: sol })
        }
        SolveStatus::MaxIter if sol.residuals.max() <= accept_tol => {
            let assignment = recover(&rec, &sol.x).expect("solver returned consistent dimensions");
            let objective = rec.original_objective(sol.objective);
            Ok(DcpSolution { assignment, objective, cone: sol })
        }
        SolveStatus::Infeasible => Err(DcpSolveError::Infeasible),
        SolveStatus::Unbounded => Err(DcpSolveError::Unbounded),
        SolveStatus::MaxIter => Err(DcpSolveError::MaxIter),
    }
}

/// Evaluate the original objective at a recovered assignment; used by tests
/// to cross-check cone optimum against direct evaluation.
pub fn objective_at(p: &Problem, a: &Assignment) -> Result<f64, EvalError> {
    Ok(evaluate(p.objective(), a)?[(0, 0)])
}

/// `maximize` problems canonicalize by negating the objective.
pub(crate) fn minimize_form(p: &Problem) -> (crate::expr::Expr, bool) {
    match p.sense() {
        Sense::Minimize => (p.objective().clone(), false),
        Sense::Maximize => (-p.objective(), true),
    }
}

pub(crate) fn recovery(vars: Vec<(Variable, usize)>, nvars: usize, maximize: bool) -> Recovery {
    Recovery { vars, nvars, maximize }
}
