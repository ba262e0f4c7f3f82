//! Disciplined convex-concave programming.
//!
//! This crate provides an expression DSL with DCP curvature verification,
//! domain-aware linearization, canonicalization of disciplined problems to
//! second-order cone programs, an embedded primal-dual interior-point solver,
//! and the penalty convex-concave procedure for problems whose objective and
//! constraint sides have known curvature but violate the DCP position rules.
//!
//! Typical use builds a [`transform::Problem`] from [`expr`] expressions and
//! hands it to [`ccp::solve_dccp`]; problems that already satisfy the DCP
//! rules can be solved directly through [`cone::solve_dcp`].

pub mod ccp;
pub mod cone;
pub mod domain;
pub mod expr;
pub mod sample;
pub mod solver;
pub mod sparse;
pub mod transform;

pub use expr::{
    Assignment, Curvature, Expr, Parameter, Shape, Sign, VarId, Variable,
};
pub use transform::{Constraint, Problem, RelOp, Sense};
