//! (Sub/super)gradients of expressions via the chain rule.
//!
//! Every gradient is a Jacobian of the column-major flattening: for an
//! expression of k scalar entries and a variable of n scalar entries, the
//! returned matrix is `k x n`. At kinks the minimum-norm subgradient is
//! chosen for norms and `abs` at the origin, and ties in max/min atoms are
//! broken by uniformly averaging the active selectors, keeping iterate
//! sequences reproducible.

use super::eval::{eval_rec, EvalError};
use super::{Assignment, Atom, Expr, Kind, Node, VarId};
use nalgebra::DMatrix;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GradError {
    #[error("no subgradient or supergradient of {atom} exists at the evaluation point")]
    NotDifferentiable { atom: &'static str },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Jacobians of `e` with respect to every variable it contains, at `a`.
pub fn gradient(e: &Expr, a: &Assignment) -> Result<BTreeMap<VarId, DMatrix<f64>>, GradError> {
    let mut vals: HashMap<*const Node, DMatrix<f64>> = HashMap::new();
    let mut memo: HashMap<*const Node, BTreeMap<VarId, DMatrix<f64>>> = HashMap::new();
    grad_rec(e, a, &mut vals, &mut memo)
}

fn grad_rec(
    e: &Expr,
    a: &Assignment,
    vals: &mut HashMap<*const Node, DMatrix<f64>>,
    memo: &mut HashMap<*const Node, BTreeMap<VarId, DMatrix<f64>>>,
) -> Result<BTreeMap<VarId, DMatrix<f64>>, GradError> {
    let key = &*e.0 as *const Node;
    if let Some(g) = memo.get(&key) {
        return Ok(g.clone());
    }
    let grads = match &e.0.kind {
        Kind::Var(v) => {
            let n = v.shape().size();
            let mut m = BTreeMap::new();
            m.insert(v.id(), DMatrix::identity(n, n));
            m
        }
        Kind::Const(_) | Kind::Param(_) => BTreeMap::new(),
        Kind::Call(atom, children) => {
            let child_vals: Vec<DMatrix<f64>> = children
                .iter()
                .map(|c| eval_rec(c, a, vals))
                .collect::<Result<_, _>>()?;
            let locals = local_jacobians(atom, &child_vals, e.size())?;
            let mut acc: BTreeMap<VarId, DMatrix<f64>> = BTreeMap::new();
            for (child, local) in children.iter().zip(locals) {
                if child.curvature().is_constant() {
                    continue;
                }
                let child_grads = grad_rec(child, a, vals, memo)?;
                for (var, jac) in child_grads {
                    let term = &local * &jac;
                    acc.entry(var)
                        .and_modify(|g| *g += &term)
                        .or_insert(term);
                }
            }
            acc
        }
    };
    memo.insert(key, grads.clone());
    Ok(grads)
}

/// Jacobian of the atom's output w.r.t. each child, at the given child values.
fn local_jacobians(
    atom: &Atom,
    vals: &[DMatrix<f64>],
    out_size: usize,
) -> Result<Vec<DMatrix<f64>>, GradError> {
    Ok(match atom {
        Atom::Add => vec![DMatrix::identity(out_size, out_size); 2],
        Atom::Negate => vec![-DMatrix::<f64>::identity(out_size, out_size)],
        Atom::Scale(a) => vec![DMatrix::identity(out_size, out_size) * *a],
        Atom::MatMul => {
            // out = A * B: d vec(out) = (B' (x) I) d vec(A) + (I (x) A) d vec(B)
            let a = &vals[0];
            let b = &vals[1];
            vec![kron_right_identity(b, a.nrows()), kron_left_identity(a, b.ncols())]
        }
        Atom::Sum => vec![DMatrix::from_element(1, vals[0].len(), 1.0)],
        Atom::Transpose => {
            let (r, c) = (vals[0].nrows(), vals[0].ncols());
            let mut j = DMatrix::zeros(r * c, r * c);
            for i in 0..r {
                for k in 0..c {
                    // out(k, i) = in(i, k)
                    j[(k + i * c, i + k * r)] = 1.0;
                }
            }
            vec![j]
        }
        Atom::HStack => {
            let mut out = Vec::with_capacity(vals.len());
            let mut off = 0;
            for v in vals {
                let sz = v.len();
                let mut j = DMatrix::zeros(out_size, sz);
                for t in 0..sz {
                    j[(off + t, t)] = 1.0;
                }
                off += sz;
                out.push(j);
            }
            out
        }
        Atom::VStack => {
            let total_rows: usize = vals.iter().map(|v| v.nrows()).sum();
            let cols = vals[0].ncols();
            let mut out = Vec::with_capacity(vals.len());
            let mut row_off = 0;
            for v in vals {
                let (r, _) = (v.nrows(), v.ncols());
                let mut j = DMatrix::zeros(out_size, r * cols);
                for jj in 0..cols {
                    for ii in 0..r {
                        j[(row_off + ii + jj * total_rows, ii + jj * r)] = 1.0;
                    }
                }
                row_off += r;
                out.push(j);
            }
            out
        }
        Atom::Reshape { .. } => vec![DMatrix::identity(out_size, out_size)],
        Atom::Trace => {
            let n = vals[0].nrows();
            let mut j = DMatrix::zeros(1, n * n);
            for i in 0..n {
                j[(0, i + i * n)] = 1.0;
            }
            vec![j]
        }
        Atom::Index { rows, cols } => {
            let (r, _) = (vals[0].nrows(), vals[0].ncols());
            let mut j = DMatrix::zeros(out_size, vals[0].len());
            for (oj, &cj) in cols.iter().enumerate() {
                for (oi, &ri) in rows.iter().enumerate() {
                    j[(oi + oj * rows.len(), ri + cj * r)] = 1.0;
                }
            }
            vec![j]
        }
        Atom::Broadcast { .. } => vec![DMatrix::from_element(out_size, 1, 1.0)],
        Atom::Square => vec![diag_map(&vals[0], |x| 2.0 * x)],
        Atom::Abs => vec![diag_map(&vals[0], sign0)],
        Atom::Norm1 => {
            let j = DMatrix::from_fn(1, vals[0].len(), |_, t| sign0(vals[0].as_slice()[t]));
            vec![j]
        }
        Atom::Norm2 => {
            let norm = vals[0].iter().map(|x| x * x).sum::<f64>().sqrt();
            let j = if norm == 0.0 {
                // 0 is the minimum-norm element of the subdifferential.
                DMatrix::zeros(1, vals[0].len())
            } else {
                DMatrix::from_fn(1, vals[0].len(), |_, t| vals[0].as_slice()[t] / norm)
            };
            vec![j]
        }
        Atom::NormInf => {
            let v = &vals[0];
            let m = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let j = if m == 0.0 {
                DMatrix::zeros(1, v.len())
            } else {
                let active: Vec<usize> =
                    (0..v.len()).filter(|&t| v.as_slice()[t].abs() == m).collect();
                let w = 1.0 / active.len() as f64;
                let mut j = DMatrix::zeros(1, v.len());
                for &t in &active {
                    j[(0, t)] = w * sign0(v.as_slice()[t]);
                }
                j
            };
            vec![j]
        }
        Atom::MaxEntries => vec![selector_row(&vals[0], true)],
        Atom::MinEntries => vec![selector_row(&vals[0], false)],
        Atom::Maximum => elementwise_selectors(vals, true),
        Atom::Minimum => elementwise_selectors(vals, false),
        Atom::Pos => vec![diag_map(&vals[0], |x| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                0.0
            } else {
                0.5
            }
        })],
        Atom::SumSquares => {
            vec![DMatrix::from_fn(1, vals[0].len(), |_, t| 2.0 * vals[0].as_slice()[t])]
        }
        Atom::Sqrt => {
            // Differentiable only strictly inside the domain; on the boundary
            // no supergradient exists.
            if vals[0].iter().any(|&x| x <= 0.0) {
                return Err(GradError::NotDifferentiable { atom: "sqrt" });
            }
            vec![diag_map(&vals[0], |x| 0.5 / x.sqrt())]
        }
    })
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn diag_map(v: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = v.len();
    let mut j = DMatrix::zeros(n, n);
    for t in 0..n {
        j[(t, t)] = f(v.as_slice()[t]);
    }
    j
}

/// Row Jacobian of max_entries / min_entries: uniform weight on the argmax set.
fn selector_row(v: &DMatrix<f64>, max: bool) -> DMatrix<f64> {
    let target = if max {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let active: Vec<usize> = (0..v.len()).filter(|&t| v.as_slice()[t] == target).collect();
    let w = 1.0 / active.len() as f64;
    let mut j = DMatrix::zeros(1, v.len());
    for &t in &active {
        j[(0, t)] = w;
    }
    j
}

/// Per-child diagonal Jacobians for elementwise maximum/minimum, averaging
/// over children tied at the extreme value.
fn elementwise_selectors(vals: &[DMatrix<f64>], max: bool) -> Vec<DMatrix<f64>> {
    let n = vals[0].len();
    let mut weights = vec![vec![0.0; n]; vals.len()];
    for t in 0..n {
        let target = vals
            .iter()
            .map(|v| v.as_slice()[t])
            .fold(if max { f64::NEG_INFINITY } else { f64::INFINITY }, if max { f64::max } else { f64::min });
        let active: Vec<usize> =
            (0..vals.len()).filter(|&k| vals[k].as_slice()[t] == target).collect();
        let w = 1.0 / active.len() as f64;
        for &k in &active {
            weights[k][t] = w;
        }
    }
    weights
        .into_iter()
        .map(|ws| {
            let mut j = DMatrix::zeros(n, n);
            for (t, w) in ws.into_iter().enumerate() {
                j[(t, t)] = w;
            }
            j
        })
        .collect()
}

/// `(B^T (x) I_m) : d vec(A B) / d vec(A)` for `A` of `m` rows.
fn kron_right_identity(b: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let (k, n) = (b.nrows(), b.ncols());
    let mut j = DMatrix::zeros(m * n, m * k);
    for jj in 0..n {
        for kk in 0..k {
            let w = b[(kk, jj)];
            if w != 0.0 {
                for ii in 0..m {
                    j[(ii + jj * m, ii + kk * m)] = w;
                }
            }
        }
    }
    j
}

/// `(I_n (x) A) : d vec(A B) / d vec(B)` for `B` of `n` columns.
fn kron_left_identity(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (m, k) = (a.nrows(), a.ncols());
    let mut j = DMatrix::zeros(m * n, k * n);
    for block in 0..n {
        for kk in 0..k {
            for ii in 0..m {
                let w = a[(ii, kk)];
                if w != 0.0 {
                    j[(ii + block * m, kk + block * k)] = w;
                }
            }
        }
    }
    j
}
