//! The atom library: every non-leaf node kind together with its shape,
//! curvature, monotonicity, and sign rules. Evaluation and gradient rules
//! live in `eval` and `grad`; domain rules in the `domain` module.

use super::shape::{Curvature, Shape, Sign};

/// Per-argument monotonicity of an atom, possibly conditional on the
/// argument's sign (resolved before composition-rule checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    Neither,
}

/// Identifier of a non-leaf operation in the expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    // Affine atoms.
    Add,
    Negate,
    Scale(f64),
    /// Matrix product of two expressions; curvature is only known when at
    /// least one side is constant.
    MatMul,
    Sum,
    Transpose,
    HStack,
    VStack,
    Reshape { rows: usize, cols: usize },
    Trace,
    /// Submatrix selection by explicit row and column index lists.
    Index { rows: Vec<usize>, cols: Vec<usize> },
    /// Replicate a scalar into the given shape.
    Broadcast { rows: usize, cols: usize },

    // Convex atoms.
    Square,
    Abs,
    Norm1,
    Norm2,
    NormInf,
    MaxEntries,
    Maximum,
    Pos,
    SumSquares,

    // Concave atoms.
    Sqrt,
    MinEntries,
    Minimum,
}

impl Atom {
    pub fn name(&self) -> &'static str {
        match self {
            Atom::Add => "add",
            Atom::Negate => "negate",
            Atom::Scale(_) => "scale",
            Atom::MatMul => "matmul",
            Atom::Sum => "sum",
            Atom::Transpose => "transpose",
            Atom::HStack => "hstack",
            Atom::VStack => "vstack",
            Atom::Reshape { .. } => "reshape",
            Atom::Trace => "trace",
            Atom::Index { .. } => "index",
            Atom::Broadcast { .. } => "broadcast",
            Atom::Square => "square",
            Atom::Abs => "abs",
            Atom::Norm1 => "norm1",
            Atom::Norm2 => "norm2",
            Atom::NormInf => "norm_inf",
            Atom::MaxEntries => "max_entries",
            Atom::Maximum => "maximum",
            Atom::Pos => "pos",
            Atom::SumSquares => "sum_squares",
            Atom::Sqrt => "sqrt",
            Atom::MinEntries => "min_entries",
            Atom::Minimum => "minimum",
        }
    }

    /// Output shape given child shapes; panics on malformed input since
    /// builders validate shapes at construction time.
    pub fn shape(&self, children: &[Shape]) -> Shape {
        match self {
            Atom::Add => {
                assert_eq!(children.len(), 2);
                assert_eq!(
                    children[0], children[1],
                    "add: shape mismatch {} vs {}",
                    children[0], children[1]
                );
                children[0]
            }
            Atom::Negate | Atom::Scale(_) => children[0],
            Atom::MatMul => {
                assert_eq!(children.len(), 2);
                let (a, b) = (children[0], children[1]);
                assert_eq!(
                    a.cols(),
                    b.rows(),
                    "matmul: inner dimensions disagree ({} vs {})",
                    a,
                    b
                );
                Shape::new(a.rows(), b.cols())
            }
            Atom::Sum | Atom::Trace | Atom::Norm1 | Atom::Norm2 | Atom::NormInf
            | Atom::MaxEntries | Atom::MinEntries | Atom::SumSquares => Shape::scalar(),
            Atom::Transpose => Shape::new(children[0].cols(), children[0].rows()),
            Atom::HStack => {
                let rows = children[0].rows();
                assert!(children.iter().all(|s| s.rows() == rows), "hstack: row mismatch");
                Shape::new(rows, children.iter().map(|s| s.cols()).sum())
            }
            Atom::VStack => {
                let cols = children[0].cols();
                assert!(children.iter().all(|s| s.cols() == cols), "vstack: column mismatch");
                Shape::new(children.iter().map(|s| s.rows()).sum(), cols)
            }
            Atom::Reshape { rows, cols } => {
                assert_eq!(children[0].size(), rows * cols, "reshape: size mismatch");
                Shape::new(*rows, *cols)
            }
            Atom::Index { rows, cols } => {
                assert!(!rows.is_empty() && !cols.is_empty(), "index: empty selection");
                assert!(rows.iter().all(|&i| i < children[0].rows()), "index: row out of range");
                assert!(cols.iter().all(|&j| j < children[0].cols()), "index: column out of range");
                Shape::new(rows.len(), cols.len())
            }
            Atom::Broadcast { rows, cols } => {
                assert!(children[0].is_scalar(), "broadcast: argument must be scalar");
                Shape::new(*rows, *cols)
            }
            Atom::Square | Atom::Abs | Atom::Pos | Atom::Sqrt => children[0],
            Atom::Maximum | Atom::Minimum => {
                assert!(children.len() >= 2);
                let s = children[0];
                assert!(children.iter().all(|c| *c == s), "maximum/minimum: shape mismatch");
                s
            }
        }
    }

    /// Intrinsic curvature of the atom itself, before composition rules.
    /// `child_curvatures` is consulted only by data-dependent atoms (matmul).
    pub fn base_curvature(&self, child_curvatures: &[Curvature]) -> Curvature {
        match self {
            Atom::Add
            | Atom::Negate
            | Atom::Scale(_)
            | Atom::Sum
            | Atom::Transpose
            | Atom::HStack
            | Atom::VStack
            | Atom::Reshape { .. }
            | Atom::Trace
            | Atom::Index { .. }
            | Atom::Broadcast { .. } => Curvature::Affine,
            Atom::MatMul => {
                if child_curvatures.iter().any(|c| c.is_constant()) {
                    Curvature::Affine
                } else {
                    // Product of two non-constant expressions.
                    Curvature::Unknown
                }
            }
            Atom::Square
            | Atom::Abs
            | Atom::Norm1
            | Atom::Norm2
            | Atom::NormInf
            | Atom::MaxEntries
            | Atom::Maximum
            | Atom::Pos
            | Atom::SumSquares => Curvature::Convex,
            Atom::Sqrt | Atom::MinEntries | Atom::Minimum => Curvature::Concave,
        }
    }

    /// Monotonicity in argument `arg`, given the argument signs and, for
    /// data-dependent atoms, the constant values of sibling arguments.
    ///
    /// `const_entry_sign` reports the elementwise sign of a sibling constant
    /// (None when that sibling is not constant-valued).
    pub fn monotonicity(
        &self,
        arg: usize,
        child_signs: &[Sign],
        const_entry_sign: &dyn Fn(usize) -> Option<Sign>,
    ) -> Monotonicity {
        match self {
            Atom::Add
            | Atom::Sum
            | Atom::Transpose
            | Atom::HStack
            | Atom::VStack
            | Atom::Reshape { .. }
            | Atom::Trace
            | Atom::Index { .. }
            | Atom::Broadcast { .. }
            | Atom::MaxEntries
            | Atom::Maximum
            | Atom::Pos
            | Atom::Sqrt
            | Atom::MinEntries
            | Atom::Minimum => Monotonicity::Nondecreasing,
            Atom::Negate => Monotonicity::Nonincreasing,
            Atom::Scale(a) => {
                if *a >= 0.0 {
                    Monotonicity::Nondecreasing
                } else {
                    Monotonicity::Nonincreasing
                }
            }
            Atom::MatMul => {
                // Monotone in the non-constant side iff the constant side has
                // uniform entry sign.
                let other = 1 - arg;
                match const_entry_sign(other) {
                    Some(s) if s.is_nonneg() => Monotonicity::Nondecreasing,
                    Some(s) if s.is_nonpos() => Monotonicity::Nonincreasing,
                    _ => Monotonicity::Neither,
                }
            }
            // Sign-restricted monotonicity: nondecreasing on the nonnegative
            // range, nonincreasing on the nonpositive range.
            Atom::Square | Atom::Abs | Atom::Norm1 | Atom::Norm2 | Atom::NormInf
            | Atom::SumSquares => {
                let s = child_signs[arg];
                if s.is_nonneg() {
                    Monotonicity::Nondecreasing
                } else if s.is_nonpos() {
                    Monotonicity::Nonincreasing
                } else {
                    Monotonicity::Neither
                }
            }
        }
    }

    /// Elementwise sign rule. `const_entry_sign` is as in [`Atom::monotonicity`].
    pub fn sign(&self, child_signs: &[Sign], const_entry_sign: &dyn Fn(usize) -> Option<Sign>) -> Sign {
        match self {
            Atom::Add => child_signs[0].add(&child_signs[1]),
            Atom::Negate => child_signs[0].negate(),
            Atom::Scale(a) => {
                if *a == 0.0 {
                    Sign::Zero
                } else if *a > 0.0 {
                    child_signs[0]
                } else {
                    child_signs[0].negate()
                }
            }
            Atom::MatMul => {
                let lhs = const_entry_sign(0).unwrap_or(child_signs[0]);
                let rhs = const_entry_sign(1).unwrap_or(child_signs[1]);
                lhs.mul(&rhs)
            }
            Atom::Sum | Atom::Trace | Atom::Transpose | Atom::Reshape { .. }
            | Atom::Index { .. } | Atom::Broadcast { .. } | Atom::MaxEntries
            | Atom::MinEntries => child_signs[0],
            Atom::HStack | Atom::VStack => {
                child_signs.iter().fold(Sign::Zero, |acc, s| acc.join(s))
            }
            Atom::Square | Atom::Abs | Atom::Norm1 | Atom::Norm2 | Atom::NormInf
            | Atom::SumSquares | Atom::Pos | Atom::Sqrt => Sign::Positive,
            Atom::Maximum => {
                if child_signs.iter().any(|s| s.is_nonneg()) {
                    Sign::Positive
                } else if child_signs.iter().all(|s| s.is_nonpos()) {
                    Sign::Negative
                } else {
                    Sign::Unknown
                }
            }
            Atom::Minimum => {
                if child_signs.iter().any(|s| s.is_nonpos()) {
                    Sign::Negative
                } else if child_signs.iter().all(|s| s.is_nonneg()) {
                    Sign::Positive
                } else {
                    Sign::Unknown
                }
            }
        }
    }
}
