//! Numeric evaluation of expressions at an assignment.

use super::{Assignment, Atom, Expr, Kind, Node};
use nalgebra::DMatrix;
use std::collections::HashMap;
use thiserror::Error;

/// Points within this distance of a domain boundary are treated as inside;
/// cone solutions satisfy hard constraints only up to solver tolerance.
pub const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("domain violation in {atom}: argument entry {value} outside domain")]
    DomainViolation { atom: &'static str, value: f64 },
    #[error("assignment does not cover variable {name}")]
    MissingVariable { name: String },
}

/// Value of `e` at `a`. Fails if `a` misses a variable or lies outside the
/// domain of some subexpression (beyond [`DOMAIN_TOL`]).
pub fn evaluate(e: &Expr, a: &Assignment) -> Result<DMatrix<f64>, EvalError> {
    let mut memo: HashMap<*const Node, DMatrix<f64>> = HashMap::new();
    eval_rec(e, a, &mut memo)
}

pub(crate) fn eval_rec(
    e: &Expr,
    a: &Assignment,
    memo: &mut HashMap<*const Node, DMatrix<f64>>,
) -> Result<DMatrix<f64>, EvalError> {
    let key = &*e.0 as *const Node;
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let value = match &e.0.kind {
        Kind::Var(v) => a
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::MissingVariable { name: v.name().to_string() })?,
        Kind::Const(m) => m.clone(),
        Kind::Param(p) => p.value(),
        Kind::Call(atom, children) => {
            let mut vals = Vec::with_capacity(children.len());
            for c in children {
                vals.push(eval_rec(c, a, memo)?);
            }
            eval_atom(atom, &vals)?
        }
    };
    memo.insert(key, value.clone());
    Ok(value)
}

fn eval_atom(atom: &Atom, vals: &[DMatrix<f64>]) -> Result<DMatrix<f64>, EvalError> {
    Ok(match atom {
        Atom::Add => &vals[0] + &vals[1],
        Atom::Negate => -&vals[0],
        Atom::Scale(a) => &vals[0] * *a,
        Atom::MatMul => &vals[0] * &vals[1],
        Atom::Sum => DMatrix::from_element(1, 1, vals[0].iter().sum()),
        Atom::Transpose => vals[0].transpose(),
        Atom::HStack => {
            let rows = vals[0].nrows();
            let cols = vals.iter().map(|v| v.ncols()).sum();
            let mut out = DMatrix::zeros(rows, cols);
            let mut off = 0;
            for v in vals {
                out.view_mut((0, off), (rows, v.ncols())).copy_from(v);
                off += v.ncols();
            }
            out
        }
        Atom::VStack => {
            let cols = vals[0].ncols();
            let rows = vals.iter().map(|v| v.nrows()).sum();
            let mut out = DMatrix::zeros(rows, cols);
            let mut off = 0;
            for v in vals {
                out.view_mut((off, 0), (v.nrows(), cols)).copy_from(v);
                off += v.nrows();
            }
            out
        }
        Atom::Reshape { rows, cols } => {
            DMatrix::from_column_slice(*rows, *cols, vals[0].as_slice())
        }
        Atom::Trace => DMatrix::from_element(1, 1, vals[0].trace()),
        Atom::Index { rows, cols } => {
            let mut out = DMatrix::zeros(rows.len(), cols.len());
            for (oi, &i) in rows.iter().enumerate() {
                for (oj, &j) in cols.iter().enumerate() {
                    out[(oi, oj)] = vals[0][(i, j)];
                }
            }
            out
        }
        Atom::Broadcast { rows, cols } => DMatrix::from_element(*rows, *cols, vals[0][(0, 0)]),
        Atom::Square => vals[0].map(|x| x * x),
        Atom::Abs => vals[0].map(f64::abs),
        Atom::Norm1 => DMatrix::from_element(1, 1, vals[0].iter().map(|x| x.abs()).sum()),
        Atom::Norm2 => DMatrix::from_element(1, 1, vals[0].iter().map(|x| x * x).sum::<f64>().sqrt()),
        Atom::NormInf => DMatrix::from_element(
            1,
            1,
            vals[0].iter().map(|x| x.abs()).fold(0.0, f64::max),
        ),
        Atom::MaxEntries => DMatrix::from_element(
            1,
            1,
            vals[0].iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        Atom::MinEntries => DMatrix::from_element(
            1,
            1,
            vals[0].iter().copied().fold(f64::INFINITY, f64::min),
        ),
        Atom::Maximum => elementwise_fold(vals, f64::max),
        Atom::Minimum => elementwise_fold(vals, f64::min),
        Atom::Pos => vals[0].map(|x| x.max(0.0)),
        Atom::SumSquares => DMatrix::from_element(1, 1, vals[0].iter().map(|x| x * x).sum()),
        Atom::Sqrt => {
            let mut out = vals[0].clone();
            for x in out.iter_mut() {
                if *x < -DOMAIN_TOL {
                    return Err(EvalError::DomainViolation { atom: "sqrt", value: *x });
                }
                *x = x.max(0.0).sqrt();
            }
            out
        }
    })
}

fn elementwise_fold(vals: &[DMatrix<f64>], f: fn(f64, f64) -> f64) -> DMatrix<f64> {
    let mut out = vals[0].clone();
    for v in &vals[1..] {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = f(*o, *x);
        }
    }
    out
}
