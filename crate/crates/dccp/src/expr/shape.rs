use std::fmt;

/// Dimensions of an expression value. Scalars are `1x1`, column vectors `n x 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    rows: usize,
    cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "shape dimensions must be >= 1");
        Shape { rows, cols }
    }

    pub fn scalar() -> Self {
        Shape { rows: 1, cols: 1 }
    }

    pub fn vector(n: usize) -> Self {
        Shape::new(n, 1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of scalar entries.
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// DCP curvature classification of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Curvature {
    Constant,
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Curvature {
    /// Constant and affine expressions qualify as convex.
    pub fn is_convex(&self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine | Curvature::Convex)
    }

    pub fn is_concave(&self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine | Curvature::Concave)
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Curvature::Constant)
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Curvature::Unknown)
    }
}

/// Elementwise sign over-approximation: `Positive` means every entry is >= 0
/// at any in-domain point, `Negative` means <= 0, `Zero` means identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Zero,
    Positive,
    Negative,
    Unknown,
}

impl Sign {
    pub fn is_nonneg(&self) -> bool {
        matches!(self, Sign::Zero | Sign::Positive)
    }

    pub fn is_nonpos(&self) -> bool {
        matches!(self, Sign::Zero | Sign::Negative)
    }

    pub fn negate(&self) -> Sign {
        match self {
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Unknown => Sign::Unknown,
        }
    }

    /// Sign of a sum of two quantities.
    pub fn add(&self, other: &Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, s) | (s, Sign::Zero) => *s,
            (Sign::Positive, Sign::Positive) => Sign::Positive,
            (Sign::Negative, Sign::Negative) => Sign::Negative,
            _ => Sign::Unknown,
        }
    }

    /// Sign of a product of two quantities.
    pub fn mul(&self, other: &Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (Sign::Unknown, _) | (_, Sign::Unknown) => Sign::Unknown,
            (Sign::Positive, Sign::Positive) | (Sign::Negative, Sign::Negative) => Sign::Positive,
            _ => Sign::Negative,
        }
    }

    /// Tightest sign covering both inputs (used when entries are pooled, e.g. stacking).
    pub fn join(&self, other: &Sign) -> Sign {
        if self == other {
            return *self;
        }
        match (self, other) {
            (Sign::Zero, s) | (s, Sign::Zero) => *s,
            _ => Sign::Unknown,
        }
    }
}
