//! Seeded random expression generation over the atom library, used by the
//! property-based verification of curvature soundness, gradient correctness,
//! and linearization bounds.

use crate::domain::{contains, domain};
use crate::expr::{self, Assignment, Expr, Shape, Variable};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// A generated expression together with the variable pool it draws from.
pub struct SampledExpr {
    pub expr: Expr,
    pub vars: Vec<Variable>,
}

/// Random expression of the given shape. Curvature is whatever falls out of
/// the composition; callers filter on `expr.curvature()` as needed.
pub fn sample_expr(rng: &mut impl Rng, shape: Shape, depth: usize) -> SampledExpr {
    let mut pool = VarPool::default();
    let expr = gen(rng, shape, depth, &mut pool);
    SampledExpr { expr, vars: pool.vars }
}

#[derive(Default)]
struct VarPool {
    vars: Vec<Variable>,
}

impl VarPool {
    fn get(&mut self, rng: &mut impl Rng, shape: Shape) -> Variable {
        let mut matching: Vec<&Variable> =
            self.vars.iter().filter(|v| v.shape() == shape).collect();
        // Reuse an existing variable half the time to exercise shared leaves.
        if !matching.is_empty() && rng.random_bool(0.5) {
            let i = rng.random_range(0..matching.len());
            return matching.swap_remove(i).clone();
        }
        let v = Variable::new(format!("v{}", self.vars.len()), shape.rows(), shape.cols());
        self.vars.push(v.clone());
        v
    }
}

fn gauss_matrix(rng: &mut impl Rng, shape: Shape) -> DMatrix<f64> {
    DMatrix::from_fn(shape.rows(), shape.cols(), |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gen(rng: &mut impl Rng, shape: Shape, depth: usize, pool: &mut VarPool) -> Expr {
    if depth == 0 {
        return if rng.random_bool(0.75) {
            pool.get(rng, shape).expr()
        } else {
            expr::constant_matrix(gauss_matrix(rng, shape))
        };
    }
    let d = depth - 1;
    // Elementwise and shape-preserving choices work for any shape; scalar
    // shapes additionally admit the reduction atoms.
    let scalar_only = shape.is_scalar();
    let choice = if scalar_only { rng.random_range(0..14) } else { rng.random_range(0..10) };
    match choice {
        0 => gen(rng, shape, d, pool) + gen(rng, shape, d, pool),
        1 => expr::scale(rng.random_range(-2.0..2.0), &gen(rng, shape, d, pool)),
        2 => -gen(rng, shape, d, pool),
        3 => expr::square(&gen(rng, shape, d, pool)),
        4 => expr::abs(&gen(rng, shape, d, pool)),
        5 => expr::pos(&gen(rng, shape, d, pool)),
        6 => expr::sqrt(&gen(rng, shape, d, pool)),
        7 => expr::maximum(&[gen(rng, shape, d, pool), gen(rng, shape, d, pool)]),
        8 => expr::minimum(&[gen(rng, shape, d, pool), gen(rng, shape, d, pool)]),
        9 => {
            // Affine wrapper: index into a larger generated expression.
            let big = Shape::new(shape.rows() + 1, shape.cols());
            let inner = gen(rng, big, d, pool);
            expr::index(
                &inner,
                &(0..shape.rows()).collect::<Vec<_>>(),
                &(0..shape.cols()).collect::<Vec<_>>(),
            )
        }
        10 => expr::norm1(&gen(rng, Shape::vector(3), d, pool)),
        11 => expr::norm2(&gen(rng, Shape::vector(3), d, pool)),
        12 => expr::sum(&gen(rng, Shape::vector(3), d, pool)),
        13 => {
            let inner = gen(rng, Shape::vector(3), d, pool);
            if rng.random_bool(0.5) {
                expr::max_entries(&inner)
            } else {
                expr::min_entries(&inner)
            }
        }
        _ => unreachable!(),
    }
}

/// Gaussian point over the expression's variables.
pub fn sample_point(rng: &mut impl Rng, vars: &[Variable], scale: f64) -> Assignment {
    let mut a = Assignment::new();
    for v in vars {
        a.set(v, gauss_matrix(rng, v.shape()) * scale);
    }
    a
}

/// Rejection-sample a point strictly inside the domain of `e`: entries of
/// every sqrt argument bounded away from zero. Returns None after `tries`.
pub fn sample_in_domain(
    rng: &mut impl Rng,
    e: &Expr,
    vars: &[Variable],
    tries: usize,
) -> Option<Assignment> {
    let dom = domain(e);
    for _ in 0..tries {
        let a = sample_point(rng, vars, 1.0);
        if dom.is_empty() || strictly_inside(&dom, &a) {
            return Some(a);
        }
    }
    None
}

fn strictly_inside(dom: &crate::domain::DomainConstraints, a: &Assignment) -> bool {
    // Negative tolerance demands an interior margin well above DOMAIN_TOL,
    // so gradients exist at the sampled point.
    contains(dom, a, -1e-3)
}
