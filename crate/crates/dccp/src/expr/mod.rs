//! Immutable expression trees with DCP curvature and sign inference.
//!
//! Expressions are built from variables, constants, parameters, and the atom
//! library in [`atom`]. Shape, curvature, and sign are inferred eagerly at
//! construction, so queries are O(1) and shared subtrees are inferred once.
//! Nodes are reference-counted and immutable; parameters carry interior
//! mutability for their numeric value only, which never affects curvature.

mod assignment;
mod atom;
mod eval;
mod grad;
mod shape;
#[cfg(test)]
mod tests;

pub use assignment::Assignment;
pub use atom::{Atom, Monotonicity};
pub use eval::{evaluate, EvalError, DOMAIN_TOL};
pub use grad::{gradient, GradError};
pub use shape::{Curvature, Shape, Sign};

use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Opaque identifier of a variable (assigned in declaration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u64);

/// Opaque identifier of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub u64);

/// An optimization variable. Cloning shares the underlying identity.
#[derive(Clone)]
pub struct Variable(Arc<VarInner>);

struct VarInner {
    id: VarId,
    name: String,
    shape: Shape,
    /// Optional user-supplied starting value consumed by the CCP driver.
    initial: RwLock<Option<DMatrix<f64>>>,
}

impl Variable {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Variable(Arc::new(VarInner {
            id: VarId(fresh_id()),
            name: name.into(),
            shape: Shape::new(rows, cols),
            initial: RwLock::new(None),
        }))
    }

    pub fn scalar(name: impl Into<String>) -> Self {
        Variable::new(name, 1, 1)
    }

    pub fn vector(name: impl Into<String>, n: usize) -> Self {
        Variable::new(name, n, 1)
    }

    pub fn id(&self) -> VarId {
        self.0.id
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn shape(&self) -> Shape {
        self.0.shape
    }

    /// Record a starting value used instead of randomized initialization.
    pub fn set_initial(&self, value: DMatrix<f64>) {
        assert_eq!(
            (value.nrows(), value.ncols()),
            (self.shape().rows(), self.shape().cols()),
            "initial value shape mismatch for variable {}",
            self.name()
        );
        *self.0.initial.write().unwrap() = Some(value);
    }

    pub fn clear_initial(&self) {
        *self.0.initial.write().unwrap() = None;
    }

    pub fn initial(&self) -> Option<DMatrix<f64>> {
        self.0.initial.read().unwrap().clone()
    }

    /// Leaf expression referring to this variable.
    pub fn expr(&self) -> Expr {
        Expr::from_kind(Kind::Var(self.clone()))
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Variable({}, id={}, {})", self.name(), self.id().0, self.shape())
    }
}

/// A constant whose numeric value can be replaced without rebuilding the
/// expression, used for linearization points and penalty weights.
#[derive(Clone)]
pub struct Parameter(Arc<ParamInner>);

struct ParamInner {
    id: ParamId,
    shape: Shape,
    value: RwLock<DMatrix<f64>>,
}

impl Parameter {
    pub fn new(value: DMatrix<f64>) -> Self {
        Parameter(Arc::new(ParamInner {
            id: ParamId(fresh_id()),
            shape: Shape::new(value.nrows(), value.ncols()),
            value: RwLock::new(value),
        }))
    }

    pub fn scalar(value: f64) -> Self {
        Parameter::new(DMatrix::from_element(1, 1, value))
    }

    pub fn id(&self) -> ParamId {
        self.0.id
    }

    pub fn shape(&self) -> Shape {
        self.0.shape
    }

    pub fn value(&self) -> DMatrix<f64> {
        self.0.value.read().unwrap().clone()
    }

    pub fn set(&self, value: DMatrix<f64>) {
        assert_eq!(
            (value.nrows(), value.ncols()),
            (self.shape().rows(), self.shape().cols()),
            "parameter value shape mismatch"
        );
        *self.0.value.write().unwrap() = value;
    }

    pub fn set_scalar(&self, value: f64) {
        self.set(DMatrix::from_element(1, 1, value));
    }

    pub fn expr(&self) -> Expr {
        Expr::from_kind(Kind::Param(self.clone()))
    }
}

impl fmt::Debug for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Parameter(id={}, {})", self.id().0, self.shape())
    }
}

pub(crate) enum Kind {
    Var(Variable),
    Const(DMatrix<f64>),
    Param(Parameter),
    Call(Atom, Vec<Expr>),
}

pub(crate) struct Node {
    pub(crate) kind: Kind,
    shape: Shape,
    curvature: Curvature,
    sign: Sign,
}

/// An immutable expression. Cloning is cheap (shared node).
#[derive(Clone)]
pub struct Expr(pub(crate) Arc<Node>);

impl Expr {
    pub(crate) fn from_kind(kind: Kind) -> Expr {
        let (shape, curvature, sign) = match &kind {
            Kind::Var(v) => (v.shape(), Curvature::Affine, Sign::Unknown),
            Kind::Const(m) => (
                Shape::new(m.nrows(), m.ncols()),
                Curvature::Constant,
                sign_of_matrix(m),
            ),
            Kind::Param(p) => (p.shape(), Curvature::Constant, Sign::Unknown),
            Kind::Call(atom, children) => {
                let shapes: Vec<Shape> = children.iter().map(|c| c.shape()).collect();
                let shape = atom.shape(&shapes);
                let curvature = infer_curvature(atom, children);
                let sign = infer_sign(atom, children);
                (shape, curvature, sign)
            }
        };
        Expr(Arc::new(Node { kind, shape, curvature, sign }))
    }

    fn call(atom: Atom, children: Vec<Expr>) -> Expr {
        Expr::from_kind(Kind::Call(atom, children))
    }

    pub fn shape(&self) -> Shape {
        self.0.shape
    }

    pub fn rows(&self) -> usize {
        self.0.shape.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.shape.cols()
    }

    pub fn size(&self) -> usize {
        self.0.shape.size()
    }

    pub fn is_scalar(&self) -> bool {
        self.0.shape.is_scalar()
    }

    /// Inferred DCP curvature.
    pub fn curvature(&self) -> Curvature {
        self.0.curvature
    }

    /// Inferred elementwise sign.
    pub fn sign(&self) -> Sign {
        self.0.sign
    }

    pub fn is_affine(&self) -> bool {
        self.curvature().is_affine()
    }

    pub fn is_constant(&self) -> bool {
        self.curvature().is_constant()
    }

    /// All variables appearing in the tree, keyed by declaration id.
    pub fn variables(&self) -> BTreeMap<VarId, Variable> {
        let mut out = BTreeMap::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeMap<VarId, Variable>) {
        match &self.0.kind {
            Kind::Var(v) => {
                out.entry(v.id()).or_insert_with(|| v.clone());
            }
            Kind::Const(_) | Kind::Param(_) => {}
            Kind::Call(_, children) => {
                for c in children {
                    c.collect_variables(out);
                }
            }
        }
    }

    /// Structural equality: same tree up to shared leaf identities.
    pub fn structural_eq(&self, other: &Expr) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        match (&self.0.kind, &other.0.kind) {
            (Kind::Var(a), Kind::Var(b)) => a.id() == b.id(),
            (Kind::Param(a), Kind::Param(b)) => a.id() == b.id(),
            (Kind::Const(a), Kind::Const(b)) => a == b,
            (Kind::Call(aa, ac), Kind::Call(ba, bc)) => {
                aa == ba && ac.len() == bc.len() && ac.iter().zip(bc).all(|(x, y)| x.structural_eq(y))
            }
            _ => false,
        }
    }

    /// Broadcast a scalar expression to `shape`; non-scalars must already match.
    pub fn broadcast_to(&self, shape: Shape) -> Expr {
        if self.shape() == shape {
            self.clone()
        } else if self.is_scalar() {
            Expr::call(
                Atom::Broadcast { rows: shape.rows(), cols: shape.cols() },
                vec![self.clone()],
            )
        } else {
            panic!("cannot broadcast {} to {}", self.shape(), shape);
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::Var(v) => write!(f, "{}", v.name()),
            Kind::Const(m) => {
                if m.nrows() == 1 && m.ncols() == 1 {
                    write!(f, "{}", m[(0, 0)])
                } else {
                    write!(f, "const{}x{}", m.nrows(), m.ncols())
                }
            }
            Kind::Param(p) => write!(f, "param{}", p.id().0),
            Kind::Call(atom, children) => {
                write!(f, "{}(", atom.name())?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{:?}", c)?;
                }
                write!(f, ")")
            }
        }
    }
}

fn sign_of_matrix(m: &DMatrix<f64>) -> Sign {
    let any_pos = m.iter().any(|&x| x > 0.0);
    let any_neg = m.iter().any(|&x| x < 0.0);
    match (any_pos, any_neg) {
        (false, false) => Sign::Zero,
        (true, false) => Sign::Positive,
        (false, true) => Sign::Negative,
        (true, true) => Sign::Unknown,
    }
}

/// Elementwise sign of a constant-curvature child's current value, used by
/// data-dependent monotonicity (matmul by a constant or parameter).
fn const_value_sign(e: &Expr) -> Option<Sign> {
    match &e.0.kind {
        Kind::Const(m) => Some(sign_of_matrix(m)),
        // Parameter values change between solves; never assume a sign.
        Kind::Param(_) => Some(Sign::Unknown),
        _ => {
            if e.curvature().is_constant() {
                Some(e.sign())
            } else {
                None
            }
        }
    }
}

/// The DCP composition rule: an expression is convex if the atom is convex
/// and every argument is affine, or convex where the atom is nondecreasing,
/// or concave where the atom is nonincreasing (symmetrically for concave).
fn infer_curvature(atom: &Atom, children: &[Expr]) -> Curvature {
    let curvs: Vec<Curvature> = children.iter().map(|c| c.curvature()).collect();
    if curvs.iter().all(|c| c.is_constant()) {
        return Curvature::Constant;
    }
    let base = atom.base_curvature(&curvs);
    if base == Curvature::Unknown {
        return Curvature::Unknown;
    }
    let signs: Vec<Sign> = children.iter().map(|c| c.sign()).collect();
    let const_sign = |i: usize| const_value_sign(&children[i]);

    let arg_ok = |i: usize, want_convex: bool| -> bool {
        let c = curvs[i];
        if c.is_affine() {
            return true;
        }
        let mono = atom.monotonicity(i, &signs, &const_sign);
        if want_convex {
            (c == Curvature::Convex && mono == Monotonicity::Nondecreasing)
                || (c == Curvature::Concave && mono == Monotonicity::Nonincreasing)
        } else {
            (c == Curvature::Concave && mono == Monotonicity::Nondecreasing)
                || (c == Curvature::Convex && mono == Monotonicity::Nonincreasing)
        }
    };

    let convex_ok = base.is_convex() && (0..children.len()).all(|i| arg_ok(i, true));
    let concave_ok = base.is_concave() && (0..children.len()).all(|i| arg_ok(i, false));
    match (convex_ok, concave_ok) {
        (true, true) => Curvature::Affine,
        (true, false) => Curvature::Convex,
        (false, true) => Curvature::Concave,
        (false, false) => Curvature::Unknown,
    }
}

fn infer_sign(atom: &Atom, children: &[Expr]) -> Sign {
    let signs: Vec<Sign> = children.iter().map(|c| c.sign()).collect();
    let const_sign = |i: usize| const_value_sign(&children[i]);
    atom.sign(&signs, &const_sign)
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// Scalar constant.
pub fn constant(value: f64) -> Expr {
    Expr::from_kind(Kind::Const(DMatrix::from_element(1, 1, value)))
}

/// Matrix constant.
pub fn constant_matrix(value: DMatrix<f64>) -> Expr {
    Expr::from_kind(Kind::Const(value))
}

/// Column-vector constant.
pub fn constant_vector(values: &[f64]) -> Expr {
    Expr::from_kind(Kind::Const(DMatrix::from_column_slice(values.len(), 1, values)))
}

pub fn zeros(rows: usize, cols: usize) -> Expr {
    constant_matrix(DMatrix::zeros(rows, cols))
}

fn unary(atom: Atom, e: &Expr) -> Expr {
    Expr::call(atom, vec![e.clone()])
}

pub fn square(e: &Expr) -> Expr {
    unary(Atom::Square, e)
}

pub fn abs(e: &Expr) -> Expr {
    unary(Atom::Abs, e)
}

pub fn norm1(e: &Expr) -> Expr {
    unary(Atom::Norm1, e)
}

pub fn norm2(e: &Expr) -> Expr {
    unary(Atom::Norm2, e)
}

pub fn norm_inf(e: &Expr) -> Expr {
    unary(Atom::NormInf, e)
}

pub fn max_entries(e: &Expr) -> Expr {
    unary(Atom::MaxEntries, e)
}

pub fn min_entries(e: &Expr) -> Expr {
    unary(Atom::MinEntries, e)
}

pub fn pos(e: &Expr) -> Expr {
    unary(Atom::Pos, e)
}

pub fn sum_squares(e: &Expr) -> Expr {
    unary(Atom::SumSquares, e)
}

pub fn sqrt(e: &Expr) -> Expr {
    unary(Atom::Sqrt, e)
}

pub fn sum(e: &Expr) -> Expr {
    unary(Atom::Sum, e)
}

pub fn transpose(e: &Expr) -> Expr {
    unary(Atom::Transpose, e)
}

pub fn trace(e: &Expr) -> Expr {
    assert_eq!(e.rows(), e.cols(), "trace: expression must be square");
    unary(Atom::Trace, e)
}

pub fn reshape(e: &Expr, rows: usize, cols: usize) -> Expr {
    unary(Atom::Reshape { rows, cols }, e)
}

/// Column-major flattening to a vector.
pub fn vec_of(e: &Expr) -> Expr {
    reshape(e, e.size(), 1)
}

/// Elementwise maximum; scalars broadcast against the common shape.
pub fn maximum(args: &[Expr]) -> Expr {
    nary_elementwise(Atom::Maximum, args)
}

/// Elementwise minimum; scalars broadcast against the common shape.
pub fn minimum(args: &[Expr]) -> Expr {
    nary_elementwise(Atom::Minimum, args)
}

fn nary_elementwise(atom: Atom, args: &[Expr]) -> Expr {
    assert!(args.len() >= 2, "{}: needs at least two arguments", atom.name());
    let shape = args
        .iter()
        .map(|a| a.shape())
        .find(|s| !s.is_scalar())
        .unwrap_or(Shape::scalar());
    let children = args.iter().map(|a| a.broadcast_to(shape)).collect();
    Expr::call(atom, children)
}

pub fn hstack(args: &[Expr]) -> Expr {
    assert!(!args.is_empty());
    if args.len() == 1 {
        return args[0].clone();
    }
    Expr::call(Atom::HStack, args.to_vec())
}

pub fn vstack(args: &[Expr]) -> Expr {
    assert!(!args.is_empty());
    if args.len() == 1 {
        return args[0].clone();
    }
    Expr::call(Atom::VStack, args.to_vec())
}

/// Submatrix selection: `e[rows, cols]`.
pub fn index(e: &Expr, rows: &[usize], cols: &[usize]) -> Expr {
    Expr::call(Atom::Index { rows: rows.to_vec(), cols: cols.to_vec() }, vec![e.clone()])
}

/// Single row of a matrix expression, as a `1 x cols` expression.
pub fn row(e: &Expr, i: usize) -> Expr {
    index(e, &[i], &(0..e.cols()).collect::<Vec<_>>())
}

/// Single column of a matrix expression.
pub fn col(e: &Expr, j: usize) -> Expr {
    index(e, &(0..e.rows()).collect::<Vec<_>>(), &[j])
}

/// Single entry as a scalar expression.
pub fn entry(e: &Expr, i: usize, j: usize) -> Expr {
    index(e, &[i], &[j])
}

/// Matrix product; at least one side should be constant for DCP curvature.
pub fn matmul(a: &Expr, b: &Expr) -> Expr {
    Expr::call(Atom::MatMul, vec![a.clone(), b.clone()])
}

pub fn scale(a: f64, e: &Expr) -> Expr {
    unary(Atom::Scale(a), e)
}

pub fn neg(e: &Expr) -> Expr {
    unary(Atom::Negate, e)
}

pub fn add(a: &Expr, b: &Expr) -> Expr {
    let (a, b) = broadcast_pair(a, b);
    Expr::call(Atom::Add, vec![a, b])
}

pub fn sub(a: &Expr, b: &Expr) -> Expr {
    let (a, b) = broadcast_pair(a, b);
    Expr::call(Atom::Add, vec![a, neg(&b)])
}

fn broadcast_pair(a: &Expr, b: &Expr) -> (Expr, Expr) {
    if a.shape() == b.shape() {
        (a.clone(), b.clone())
    } else if a.is_scalar() {
        (a.broadcast_to(b.shape()), b.clone())
    } else if b.is_scalar() {
        (a.clone(), b.broadcast_to(a.shape()))
    } else {
        panic!("shape mismatch: {} vs {}", a.shape(), b.shape());
    }
}

// ---------------------------------------------------------------------------
// Operator overloading
// ---------------------------------------------------------------------------

macro_rules! impl_binop {
    ($trait_:ident, $method:ident, $fun:path) => {
        impl std::ops::$trait_ for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $fun(self, rhs)
            }
        }
        impl std::ops::$trait_ for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $fun(&self, &rhs)
            }
        }
        impl std::ops::$trait_<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $fun(&self, rhs)
            }
        }
        impl std::ops::$trait_<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $fun(self, &rhs)
            }
        }
        impl std::ops::$trait_<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $fun(&self, &constant(rhs))
            }
        }
        impl std::ops::$trait_<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $fun(self, &constant(rhs))
            }
        }
        impl std::ops::$trait_<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $fun(&constant(self), &rhs)
            }
        }
        impl std::ops::$trait_<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $fun(&constant(self), rhs)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(&self)
    }
}

impl std::ops::Mul<f64> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        scale(rhs, self)
    }
}

impl std::ops::Mul<f64> for Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        scale(rhs, &self)
    }
}

impl std::ops::Mul<&Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        scale(self, rhs)
    }
}

impl std::ops::Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        scale(self, &rhs)
    }
}

impl std::ops::Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        matmul(self, rhs)
    }
}

impl std::ops::Mul<Expr> for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        matmul(&self, &rhs)
    }
}

impl std::ops::Div<f64> for &Expr {
    type Output = Expr;
    fn div(self, rhs: f64) -> Expr {
        assert!(rhs != 0.0, "division by zero");
        scale(1.0 / rhs, self)
    }
}

impl std::ops::Div<f64> for Expr {
    type Output = Expr;
    fn div(self, rhs: f64) -> Expr {
        &self / rhs
    }
}

impl From<&Variable> for Expr {
    fn from(v: &Variable) -> Expr {
        v.expr()
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        constant(x)
    }
}
