//! The canonicalizer: walks expression trees bottom-up, replacing each atom
//! with affine combinations or its graph implementation over fresh auxiliary
//! variables, and assembles the cone program rows.
//!
//! Ordering is deterministic: original variables in declaration order,
//! auxiliaries in post-order of first use, rows in emission order.

use super::affine::AffForm;
use super::{CanonError, ConeBlock, ConeProgram, Recovery};
use crate::expr::{evaluate, Assignment, Atom, Expr, Kind, Shape};
use crate::sparse::CscMatrix;
use crate::transform::{is_dcp, Problem, RelOp};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

struct Builder {
    nvars: usize,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<ConeBlock>,
    nrows: usize,
}

impl Builder {
    fn alloc(&mut self, k: usize) -> usize {
        let off = self.nvars;
        self.nvars += k;
        off
    }

    /// Emit `expr in block` where `expr = F v + g` is the stacked affine
    /// form: rows `A = -F`, `b = g`, so the slack `b - A v` equals the form.
    fn add_block(&mut self, kind: fn(usize) -> ConeBlock, form: &AffForm) {
        let k = form.len();
        for (t, row) in form.rows.iter().enumerate() {
            for &(col, v) in row {
                self.triplets.push((self.nrows + t, col, -v));
            }
            self.b.push(form.consts[t]);
        }
        self.nrows += k;
        self.cones.push(kind(k));
    }

    /// Nonneg rows, one scalar at a time is wasteful; emit as one block.
    fn add_nonneg(&mut self, form: &AffForm) {
        self.add_block(ConeBlock::Nonneg, form);
    }

    fn add_zero(&mut self, form: &AffForm) {
        self.add_block(ConeBlock::Zero, form);
    }

    fn add_soc(&mut self, form: &AffForm) {
        self.add_block(ConeBlock::SecondOrder, form);
    }

}

pub(super) fn canonicalize(p: &Problem) -> Result<(ConeProgram, Recovery), CanonError> {
    if !is_dcp(p) {
        return Err(CanonError::NotDcp);
    }
    let (objective, maximize) = super::minimize_form(p);

    // Original variables first, in declaration order.
    let variables = {
        let mut vars = objective.variables();
        for c in p.constraints() {
            vars.extend(c.variables());
        }
        vars
    };
    let mut var_offsets: BTreeMap<crate::expr::VarId, (usize, Shape)> = BTreeMap::new();
    let mut nvars = 0;
    let mut var_list = Vec::new();
    for (id, var) in &variables {
        var_offsets.insert(*id, (nvars, var.shape()));
        var_list.push((var.clone(), nvars));
        nvars += var.shape().size();
    }

    let mut cx = Canonicalizer {
        builder: Builder { nvars, triplets: Vec::new(), b: Vec::new(), cones: Vec::new(), nrows: 0 },
        var_offsets,
    };

    // Objective first, then constraints in problem order.
    let obj_form = cx.canon(&objective)?;
    debug_assert_eq!(obj_form.len(), 1);

    for c in p.constraints() {
        let lhs = cx.canon(c.lhs())?;
        let rhs = cx.canon(c.rhs())?;
        match c.relop() {
            // rhs - lhs in the cone.
            RelOp::Eq => {
                let diff = rhs.add(&lhs.scale(-1.0));
                cx.builder.add_zero(&diff);
            }
            RelOp::Le => {
                let diff = rhs.add(&lhs.scale(-1.0));
                cx.builder.add_nonneg(&diff);
            }
            RelOp::Ge => {
                let diff = lhs.add(&rhs.scale(-1.0));
                cx.builder.add_nonneg(&diff);
            }
        }
    }

    // Cost vector; a nonzero constant offset rides on a fresh variable pinned
    // to 1 so the cone optimum equals the problem optimum.
    let mut c = vec![0.0; cx.builder.nvars];
    for &(col, v) in &obj_form.rows[0] {
        c[col] += v;
    }
    let offset = obj_form.consts[0];
    if offset != 0.0 {
        let w = cx.builder.alloc(1);
        c.push(offset);
        let pin = AffForm { rows: vec![vec![(w, 1.0)]], consts: vec![-1.0] };
        cx.builder.add_zero(&pin);
    }

    let b = cx.builder;
    let a = CscMatrix::from_triplets(b.nrows, b.nvars, &b.triplets);
    let mut c = c;
    c.resize(b.nvars, 0.0);
    let cp = ConeProgram { c, a, b: b.b, cones: b.cones, var_map: cx.var_offsets.clone() };
    cp.validate();
    let total_vars = cp.nvars();
    Ok((cp, super::recovery(var_list, total_vars, maximize)))
}

struct Canonicalizer {
    builder: Builder,
    var_offsets: BTreeMap<crate::expr::VarId, (usize, Shape)>,
}

impl Canonicalizer {
    fn canon(&mut self, e: &Expr) -> Result<AffForm, CanonError> {
        if e.curvature().is_constant() {
            let value = evaluate(e, &Assignment::new())?;
            return Ok(AffForm::constant(&value));
        }
        match &e.0.kind {
            Kind::Var(v) => {
                let (off, shape) = self.var_offsets[&v.id()];
                Ok(AffForm::variable(off, shape.size()))
            }
            Kind::Const(m) => Ok(AffForm::constant(m)),
            Kind::Param(p) => Ok(AffForm::constant(&p.value())),
            Kind::Call(atom, children) => self.canon_call(e, atom, children),
        }
    }

    fn canon_call(&mut self, e: &Expr, atom: &Atom, children: &[Expr]) -> Result<AffForm, CanonError> {
        match atom {
            Atom::Add => {
                let a = self.canon(&children[0])?;
                let b = self.canon(&children[1])?;
                Ok(a.add(&b))
            }
            Atom::Negate => Ok(self.canon(&children[0])?.scale(-1.0)),
            Atom::Scale(alpha) => Ok(self.canon(&children[0])?.scale(*alpha)),
            Atom::MatMul => {
                let (lhs, rhs) = (&children[0], &children[1]);
                if lhs.curvature().is_constant() {
                    let m = evaluate(lhs, &Assignment::new())?;
                    let x = self.canon(rhs)?;
                    Ok(matmul_const_left(&m, &x, rhs.rows(), rhs.cols()))
                } else if rhs.curvature().is_constant() {
                    let m = evaluate(rhs, &Assignment::new())?;
                    let x = self.canon(lhs)?;
                    Ok(matmul_const_right(&x, &m, lhs.rows(), lhs.cols()))
                } else {
                    Err(CanonError::NotDcp)
                }
            }
            Atom::Sum => {
                let x = self.canon(&children[0])?;
                Ok(x.weighted_sum(|_| 1.0))
            }
            Atom::Transpose => {
                let x = self.canon(&children[0])?;
                let (r, c) = (children[0].rows(), children[0].cols());
                // out(j,i): column-major index over (c, r).
                Ok(x.select((0..r * c).map(|t| {
                    let (i_out, j_out) = (t % c, t / c);
                    // out(i_out, j_out) = in(j_out, i_out)
                    j_out + i_out * r
                })))
            }
            Atom::HStack => {
                let parts: Vec<AffForm> =
                    children.iter().map(|ch| self.canon(ch)).collect::<Result<_, _>>()?;
                Ok(AffForm::stack(&parts))
            }
            Atom::VStack => {
                let parts: Vec<AffForm> =
                    children.iter().map(|ch| self.canon(ch)).collect::<Result<_, _>>()?;
                let cols = e.cols();
                // Column-major output: walk each output column through every
                // part's corresponding column.
                let mut rows = Vec::with_capacity(e.size());
                let mut consts = Vec::with_capacity(e.size());
                for j in 0..cols {
                    for (k, ch) in children.iter().enumerate() {
                        let r = ch.rows();
                        for i in 0..r {
                            let local = i + j * r;
                            rows.push(parts[k].rows[local].clone());
                            consts.push(parts[k].consts[local]);
                        }
                    }
                }
                Ok(AffForm { rows, consts })
            }
            Atom::Reshape { .. } => self.canon(&children[0]),
            Atom::Trace => {
                let x = self.canon(&children[0])?;
                let n = children[0].rows();
                Ok(x.weighted_sum(|t| if t % n == t / n { 1.0 } else { 0.0 }))
            }
            Atom::Index { rows, cols } => {
                let x = self.canon(&children[0])?;
                let r = children[0].rows();
                let mut order = Vec::with_capacity(rows.len() * cols.len());
                for &j in cols {
                    for &i in rows {
                        order.push(i + j * r);
                    }
                }
                Ok(x.select(order.into_iter()))
            }
            Atom::Broadcast { rows, cols } => {
                let x = self.canon(&children[0])?;
                Ok(x.select(std::iter::repeat(0).take(rows * cols)))
            }

            Atom::Square => {
                let x = self.canon(&children[0])?;
                let k = x.len();
                let t = self.builder.alloc(k);
                for i in 0..k {
                    self.emit_square_epigraph(&x.select(std::iter::once(i)), t + i);
                }
                Ok(AffForm::variable(t, k))
            }
            Atom::SumSquares => {
                let x = self.canon(&children[0])?;
                let t = self.builder.alloc(1);
                self.emit_square_epigraph(&x, t);
                Ok(AffForm::variable(t, 1))
            }
            Atom::Abs => {
                let x = self.canon(&children[0])?;
                let k = x.len();
                let t = self.builder.alloc(k);
                let tf = AffForm::variable(t, k);
                self.builder.add_nonneg(&tf.add(&x.scale(-1.0)));
                self.builder.add_nonneg(&tf.add(&x));
                Ok(tf)
            }
            Atom::Norm1 => {
                let x = self.canon(&children[0])?;
                let k = x.len();
                let u = self.builder.alloc(k);
                let uf = AffForm::variable(u, k);
                self.builder.add_nonneg(&uf.add(&x.scale(-1.0)));
                self.builder.add_nonneg(&uf.add(&x));
                Ok(uf.weighted_sum(|_| 1.0))
            }
            Atom::Norm2 => {
                let x = self.canon(&children[0])?;
                let t = self.builder.alloc(1);
                let tf = AffForm::variable(t, 1);
                self.builder.add_soc(&AffForm::stack(&[tf.clone(), x]));
                Ok(tf)
            }
            Atom::NormInf => {
                let x = self.canon(&children[0])?;
                let t = self.builder.alloc(1);
                let tf = AffForm::variable(t, 1);
                let k = x.len();
                let t_rep = tf.select(std::iter::repeat(0).take(k));
                self.builder.add_nonneg(&t_rep.add(&x.scale(-1.0)));
                self.builder.add_nonneg(&t_rep.add(&x));
                Ok(tf)
            }
            Atom::MaxEntries => {
                let x = self.canon(&children[0])?;
                let t = self.builder.alloc(1);
                let tf = AffForm::variable(t, 1);
                let t_rep = tf.select(std::iter::repeat(0).take(x.len()));
                self.builder.add_nonneg(&t_rep.add(&x.scale(-1.0)));
                Ok(tf)
            }
            Atom::MinEntries => {
                let x = self.canon(&children[0])?;
                let t = self.builder.alloc(1);
                let tf = AffForm::variable(t, 1);
                let t_rep = tf.select(std::iter::repeat(0).take(x.len()));
                self.builder.add_nonneg(&x.add(&t_rep.scale(-1.0)));
                Ok(tf)
            }
            Atom::Maximum => {
                let k = e.size();
                let t = self.builder.alloc(k);
                let tf = AffForm::variable(t, k);
                for ch in children {
                    let x = self.canon(ch)?;
                    self.builder.add_nonneg(&tf.add(&x.scale(-1.0)));
                }
                Ok(tf)
            }
            Atom::Minimum => {
                let k = e.size();
                let t = self.builder.alloc(k);
                let tf = AffForm::variable(t, k);
                for ch in children {
                    let x = self.canon(ch)?;
                    self.builder.add_nonneg(&x.add(&tf.scale(-1.0)));
                }
                Ok(tf)
            }
            Atom::Pos => {
                let x = self.canon(&children[0])?;
                let k = x.len();
                let t = self.builder.alloc(k);
                let tf = AffForm::variable(t, k);
                self.builder.add_nonneg(&tf.add(&x.scale(-1.0)));
                self.builder.add_nonneg(&tf);
                Ok(tf)
            }
            Atom::Sqrt => {
                let x = self.canon(&children[0])?;
                let k = x.len();
                let t = self.builder.alloc(k);
                for i in 0..k {
                    // t_i^2 <= x_i via |(2 t_i, 1 - x_i)| <= 1 + x_i.
                    let xi = x.select(std::iter::once(i));
                    let ti = AffForm::variable(t + i, 1);
                    let head = xi.add(&AffForm::constant(&DMatrix::from_element(1, 1, 1.0)));
                    let mid = ti.scale(2.0);
                    let tail = xi.scale(-1.0).add(&AffForm::constant(&DMatrix::from_element(1, 1, 1.0)));
                    self.builder.add_soc(&AffForm::stack(&[head, mid, tail]));
                }
                Ok(AffForm::variable(t, k))
            }
        }
    }

    /// `|x|^2 <= t` for affine `x` via `|(2x, 1-t)| <= 1+t`.
    fn emit_square_epigraph(&mut self, x: &AffForm, t_col: usize) {
        let tf = AffForm::variable(t_col, 1);
        let one = AffForm::constant(&DMatrix::from_element(1, 1, 1.0));
        let head = tf.add(&one);
        let mid = x.scale(2.0);
        let tail = tf.scale(-1.0).add(&one);
        self.builder.add_soc(&AffForm::stack(&[head, mid, tail]));
    }
}

/// `vec(M X)` as affine form given `vec(X)` rows; `M` is `p x r`, `X` is `r x c`.
fn matmul_const_left(m: &DMatrix<f64>, x: &AffForm, r: usize, c: usize) -> AffForm {
    let p = m.nrows();
    debug_assert_eq!(m.ncols(), r);
    debug_assert_eq!(x.len(), r * c);
    x.combine_rows(p * c, |t| {
        let (i, j) = (t % p, t / p);
        (0..r)
            .filter_map(|kk| {
                let w = m[(i, kk)];
                (w != 0.0).then_some((kk + j * r, w))
            })
            .collect()
    })
}

/// `vec(X M)` as affine form; `X` is `r x c`, `M` is `c x q`.
fn matmul_const_right(x: &AffForm, m: &DMatrix<f64>, r: usize, c: usize) -> AffForm {
    let q = m.ncols();
    debug_assert_eq!(m.nrows(), c);
    debug_assert_eq!(x.len(), r * c);
    x.combine_rows(r * q, |t| {
        let (i, j) = (t % r, t / r);
        (0..c)
            .filter_map(|kk| {
                let w = m[(kk, j)];
                (w != 0.0).then_some((i + kk * r, w))
            })
            .collect()
    })
}
