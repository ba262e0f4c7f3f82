//! Domains of expressions as lists of convex constraints.
//!
//! The domain of a composition is the atom's own domain rule applied to its
//! children plus, recursively, the domains of the children. In the atom
//! library only `sqrt` restricts its argument; every other atom contributes
//! nothing. Domains are represented by their closures (`x >= 0`, not
//! `x > 0`): cone programs cannot express open sets, and interiority is the
//! CCP driver's job via damping.

use crate::expr::{evaluate, Assignment, Atom, Expr, Kind};
use crate::transform::{Constraint, RelOp};

/// Convex constraints whose intersection is the closure of an expression's
/// domain.
#[derive(Debug, Clone, Default)]
pub struct DomainConstraints {
    constraints: Vec<Constraint>,
}

impl DomainConstraints {
    pub fn empty() -> Self {
        DomainConstraints::default()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    /// Append with structural deduplication, so deep compositions sharing a
    /// subexpression do not repeat its domain.
    pub fn push(&mut self, c: Constraint) {
        if !self.constraints.iter().any(|existing| existing.structural_eq(&c)) {
            self.constraints.push(c);
        }
    }

    pub fn merge(&mut self, other: &DomainConstraints) {
        for c in &other.constraints {
            self.push(c.clone());
        }
    }

    pub fn into_constraints(self) -> Vec<Constraint> {
        self.constraints
    }
}

/// Convex constraints describing the closure of the domain of `e`.
pub fn domain(e: &Expr) -> DomainConstraints {
    let mut out = DomainConstraints::empty();
    collect_domain(e, &mut out);
    out
}

fn collect_domain(e: &Expr, out: &mut DomainConstraints) {
    if let Kind::Call(atom, children) = &e.0.kind {
        if let Atom::Sqrt = atom {
            let arg = &children[0];
            out.push(Constraint::new(
                arg.clone(),
                RelOp::Ge,
                crate::expr::zeros(arg.rows(), arg.cols()),
            ));
        }
        for c in children {
            collect_domain(c, out);
        }
    }
}

/// True iff every constraint residual at `a` is within `tol` of feasibility.
/// Points where a residual cannot even be evaluated count as outside.
pub fn contains(d: &DomainConstraints, a: &Assignment, tol: f64) -> bool {
    d.constraints.iter().all(|c| {
        let lhs = evaluate(c.lhs(), a);
        let rhs = evaluate(c.rhs(), a);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => {
                let diff = &l - &r;
                match c.relop() {
                    RelOp::Le => diff.iter().all(|&x| x <= tol),
                    RelOp::Ge => diff.iter().all(|&x| x >= -tol),
                    RelOp::Eq => diff.iter().all(|&x| x.abs() <= tol),
                }
            }
            _ => false,
        }
    })
}
