//! Problem-level verification and the convexifying transformations behind
//! the penalty convex-concave procedure: non-affine equality splitting,
//! domain-restricted linearization, and per-constraint relaxation with
//! slack variables.

use crate::domain::{contains, domain, DomainConstraints};
use crate::expr::{
    self, evaluate, gradient, reshape, vec_of, Assignment, EvalError, Expr, GradError,
    Parameter, Shape, VarId, Variable, DOMAIN_TOL,
};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Relational operator of a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Eq,
    Le,
    Ge,
}

impl RelOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Le => "<=",
            RelOp::Ge => ">=",
        }
    }
}

/// A relational constraint between two expressions of equal shape
/// (scalars broadcast at construction).
#[derive(Debug, Clone)]
pub struct Constraint {
    lhs: Expr,
    relop: RelOp,
    rhs: Expr,
}

impl Constraint {
    pub fn new(lhs: Expr, relop: RelOp, rhs: Expr) -> Self {
        let (lhs, rhs) = if lhs.shape() == rhs.shape() {
            (lhs, rhs)
        } else if lhs.is_scalar() {
            let shape = rhs.shape();
            (lhs.broadcast_to(shape), rhs)
        } else if rhs.is_scalar() {
            let shape = lhs.shape();
            (lhs, rhs.broadcast_to(shape))
        } else {
            panic!("constraint shape mismatch: {} vs {}", lhs.shape(), rhs.shape());
        };
        Constraint { lhs, relop, rhs }
    }

    pub fn lhs(&self) -> &Expr {
        &self.lhs
    }

    pub fn rhs(&self) -> &Expr {
        &self.rhs
    }

    pub fn relop(&self) -> RelOp {
        self.relop
    }

    pub fn shape(&self) -> Shape {
        self.lhs.shape()
    }

    /// Satisfies the DCP position rules: affine `=`, convex `<=` concave,
    /// concave `>=` convex.
    pub fn is_dcp(&self) -> bool {
        match self.relop {
            RelOp::Eq => self.lhs.is_affine() && self.rhs.is_affine(),
            RelOp::Le => self.lhs.curvature().is_convex() && self.rhs.curvature().is_concave(),
            RelOp::Ge => self.lhs.curvature().is_concave() && self.rhs.curvature().is_convex(),
        }
    }

    /// Both sides have known (non-Unknown) curvature.
    pub fn is_dccp(&self) -> bool {
        self.lhs.curvature().is_known() && self.rhs.curvature().is_known()
    }

    pub fn structural_eq(&self, other: &Constraint) -> bool {
        self.relop == other.relop
            && self.lhs.structural_eq(&other.lhs)
            && self.rhs.structural_eq(&other.rhs)
    }

    /// Worst-case residual at `a`: 0 when satisfied, positive otherwise.
    pub fn violation(&self, a: &Assignment) -> Result<f64, EvalError> {
        let l = evaluate(&self.lhs, a)?;
        let r = evaluate(&self.rhs, a)?;
        let diff = &l - &r;
        Ok(match self.relop {
            RelOp::Le => diff.iter().copied().fold(0.0, f64::max),
            RelOp::Ge => diff.iter().map(|x| -x).fold(0.0, f64::max),
            RelOp::Eq => diff.iter().map(|x| x.abs()).fold(0.0, f64::max),
        })
    }

    pub fn variables(&self) -> BTreeMap<VarId, Variable> {
        let mut vars = self.lhs.variables();
        vars.extend(self.rhs.variables());
        vars
    }
}

impl Expr {
    pub fn le(&self, rhs: impl Into<Expr>) -> Constraint {
        Constraint::new(self.clone(), RelOp::Le, rhs.into())
    }

    pub fn ge(&self, rhs: impl Into<Expr>) -> Constraint {
        Constraint::new(self.clone(), RelOp::Ge, rhs.into())
    }

    pub fn eq_to(&self, rhs: impl Into<Expr>) -> Constraint {
        Constraint::new(self.clone(), RelOp::Eq, rhs.into())
    }
}

/// Optimization sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// An optimization problem over a scalar objective.
#[derive(Debug, Clone)]
pub struct Problem {
    sense: Sense,
    objective: Expr,
    constraints: Vec<Constraint>,
}

impl Problem {
    pub fn new(sense: Sense, objective: Expr, constraints: Vec<Constraint>) -> Self {
        assert!(objective.is_scalar(), "objective must be scalar, got {}", objective.shape());
        Problem { sense, objective, constraints }
    }

    pub fn minimize(objective: Expr) -> Self {
        Problem::new(Sense::Minimize, objective, Vec::new())
    }

    pub fn maximize(objective: Expr) -> Self {
        Problem::new(Sense::Maximize, objective, Vec::new())
    }

    pub fn subject_to(mut self, constraints: impl IntoIterator<Item = Constraint>) -> Self {
        self.constraints.extend(constraints);
        self
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// All variables in declaration order.
    pub fn variables(&self) -> BTreeMap<VarId, Variable> {
        let mut vars = self.objective.variables();
        for c in &self.constraints {
            vars.extend(c.variables());
        }
        vars
    }

    /// Largest constraint violation at `a` (0 when feasible). Domains count:
    /// a point outside some expression's domain is reported as infinite.
    pub fn max_violation(&self, a: &Assignment) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation(a).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// The DCP curvature conditions for a whole problem.
pub fn is_dcp(p: &Problem) -> bool {
    let obj_ok = match p.sense() {
        Sense::Minimize => p.objective().curvature().is_convex(),
        Sense::Maximize => p.objective().curvature().is_concave(),
    };
    obj_ok && p.constraints().iter().all(Constraint::is_dcp)
}

/// Every curvature in the problem is known, though the DCP position rules
/// need not hold. Includes DCP problems as a special case.
pub fn is_dccp(p: &Problem) -> bool {
    p.objective().curvature().is_known() && p.constraints().iter().all(Constraint::is_dccp)
}

/// Replace each non-affine equality `l = r` by the pair `l <= r`, `l >= r`.
/// Affine equalities pass through unchanged.
pub fn split_equalities(p: &Problem) -> Problem {
    let mut constraints = Vec::with_capacity(p.constraints().len());
    for c in p.constraints() {
        if c.relop() == RelOp::Eq && !(c.lhs().is_affine() && c.rhs().is_affine()) {
            constraints.push(Constraint::new(c.lhs().clone(), RelOp::Le, c.rhs().clone()));
            constraints.push(Constraint::new(c.lhs().clone(), RelOp::Ge, c.rhs().clone()));
        } else {
            constraints.push(c.clone());
        }
    }
    Problem::new(p.sense(), p.objective().clone(), constraints)
}

/// First-order expansion of an expression around a point, with the domain of
/// the original expression carried alongside as convex constraints.
///
/// The expansion point's value and Jacobians are embedded as parameters, so
/// the same affine expression can be re-centered each iteration via
/// [`LinearizedExpression::update`] without rebuilding anything.
#[derive(Debug, Clone)]
pub struct LinearizedExpression {
    source: Expr,
    affine: Expr,
    domain: DomainConstraints,
    /// None when the source was already affine and returned unchanged.
    handles: Option<LinHandles>,
}

#[derive(Debug, Clone)]
struct LinHandles {
    value: Parameter,
    /// Per variable: Jacobian parameter and expansion-point parameter.
    terms: Vec<(Variable, Parameter, Parameter)>,
}

impl LinearizedExpression {
    /// The parameter-affine expansion.
    pub fn affine(&self) -> &Expr {
        &self.affine
    }

    /// Domain of the source expression, to be enforced as hard constraints.
    pub fn domain(&self) -> &DomainConstraints {
        &self.domain
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    /// Re-center the expansion at `z`: recompute the source's value and
    /// Jacobians and store them into the embedded parameters.
    pub fn update(&self, z: &Assignment) -> Result<(), GradError> {
        let Some(handles) = &self.handles else {
            return Ok(());
        };
        let value = evaluate(&self.source, z)?;
        let grads = gradient(&self.source, z)?;
        // Stage everything before mutating so a failure leaves parameters
        // consistent at the previous expansion point.
        let k = self.source.size();
        let mut staged = Vec::with_capacity(handles.terms.len());
        for (var, jac_param, point_param) in &handles.terms {
            let n = var.shape().size();
            let jac = grads
                .get(&var.id())
                .cloned()
                .unwrap_or_else(|| DMatrix::zeros(k, n));
            let point = z
                .get(var)
                .cloned()
                .expect("expansion point must cover all variables of the source");
            staged.push((jac_param, jac, point_param, point));
        }
        handles.value.set(DMatrix::from_column_slice(k, 1, value.as_slice()));
        for (jac_param, jac, point_param, point) in staged {
            jac_param.set(jac);
            point_param.set(point);
        }
        Ok(())
    }
}

/// Domain-restricted linearization of `e` at `z`:
/// `e(z) + sum_v J_v(z) (vec(v) - vec(z_v))` paired with `domain(e)`.
///
/// Affine expressions are their own linearization and carry no domain.
/// Fails when `z` lies outside the domain of `e` or no (sub/super)gradient
/// exists there.
pub fn linearize(e: &Expr, z: &Assignment) -> Result<LinearizedExpression, GradError> {
    assert!(
        e.curvature().is_known(),
        "cannot linearize an expression of unknown curvature"
    );
    if e.is_affine() {
        return Ok(LinearizedExpression {
            source: e.clone(),
            affine: e.clone(),
            domain: DomainConstraints::empty(),
            handles: None,
        });
    }

    let dom = domain(e);
    if !contains(&dom, z, DOMAIN_TOL) {
        // Match the evaluation error the caller would see.
        let _ = evaluate(e, z)?;
    }
    let value = evaluate(e, z)?;
    let grads = gradient(e, z)?;

    let k = e.size();
    let value_param = Parameter::new(DMatrix::from_column_slice(k, 1, value.as_slice()));
    let mut affine_vec = value_param.expr();
    let mut terms = Vec::new();
    for (id, var) in e.variables() {
        let n = var.shape().size();
        let jac = grads.get(&id).cloned().unwrap_or_else(|| DMatrix::zeros(k, n));
        let point = z.get(&var).cloned().expect("expansion point must cover all variables");
        let jac_param = Parameter::new(jac);
        let point_param = Parameter::new(point);
        let delta = vec_of(&var.expr()) - vec_of(&point_param.expr());
        affine_vec = affine_vec + jac_param.expr() * delta;
        terms.push((var, jac_param, point_param));
    }
    let affine = reshape(&affine_vec, e.rows(), e.cols());
    debug_assert!(affine.is_affine());

    Ok(LinearizedExpression {
        source: e.clone(),
        affine,
        domain: dom,
        handles: Some(LinHandles { value: value_param, terms }),
    })
}

/// Result of convexifying one side of a constraint.
struct ConvexifiedSide {
    expr: Expr,
    linearization: Option<LinearizedExpression>,
}

fn convexify_side(
    e: &Expr,
    z: &Assignment,
    needs_convex: bool,
) -> Result<ConvexifiedSide, GradError> {
    let ok = if needs_convex {
        e.curvature().is_convex()
    } else {
        e.curvature().is_concave()
    };
    if ok {
        return Ok(ConvexifiedSide { expr: e.clone(), linearization: None });
    }
    let lin = linearize(e, z)?;
    Ok(ConvexifiedSide { expr: lin.affine().clone(), linearization: Some(lin) })
}

/// Replace each side of `c` that violates the DCP position rule by its
/// linearization at `z`; the linearizations' domain constraints are returned
/// alongside. Already-DCP constraints come back structurally unchanged.
pub fn convexify_constraint(
    c: &Constraint,
    z: &Assignment,
) -> Result<(Vec<Constraint>, DomainConstraints), GradError> {
    let (constraint, doms, _) = convexify_with_handles(c, z)?;
    Ok((vec![constraint], doms))
}

fn convexify_with_handles(
    c: &Constraint,
    z: &Assignment,
) -> Result<(Constraint, DomainConstraints, Vec<LinearizedExpression>), GradError> {
    assert!(c.is_dccp(), "constraint sides must have known curvature");
    let mut doms = DomainConstraints::empty();
    let mut lins = Vec::new();
    let (lhs, rhs) = match c.relop() {
        RelOp::Eq => {
            assert!(
                c.lhs().is_affine() && c.rhs().is_affine(),
                "non-affine equality constraints must be split before convexification"
            );
            (c.lhs().clone(), c.rhs().clone())
        }
        RelOp::Le => {
            let l = convexify_side(c.lhs(), z, true)?;
            let r = convexify_side(c.rhs(), z, false)?;
            for side in [&l, &r] {
                if let Some(lin) = &side.linearization {
                    doms.merge(lin.domain());
                    lins.push(lin.clone());
                }
            }
            (l.expr, r.expr)
        }
        RelOp::Ge => {
            let l = convexify_side(c.lhs(), z, false)?;
            let r = convexify_side(c.rhs(), z, true)?;
            for side in [&l, &r] {
                if let Some(lin) = &side.linearization {
                    doms.merge(lin.domain());
                    lins.push(lin.clone());
                }
            }
            (l.expr, r.expr)
        }
    };
    Ok((Constraint::new(lhs, c.relop(), rhs), doms, lins))
}

/// The convex restriction solved at each CCP iteration: a DCP problem in
/// minimize form whose linearization points and penalty weight are parameters.
#[derive(Debug)]
pub struct PenaltySubproblem {
    base: Problem,
    slacks: Vec<Variable>,
    tau: Parameter,
    linearizations: Vec<LinearizedExpression>,
    /// Sense of the original problem (the base is always minimize-form).
    original_sense: Sense,
}

impl PenaltySubproblem {
    /// The DCP-compliant minimize-form problem.
    pub fn base(&self) -> &Problem {
        &self.base
    }

    pub fn slacks(&self) -> &[Variable] {
        &self.slacks
    }

    pub fn tau(&self) -> f64 {
        self.tau.value()[(0, 0)]
    }

    pub fn set_tau(&self, tau: f64) {
        self.tau.set_scalar(tau);
    }

    pub fn linearizations(&self) -> &[LinearizedExpression] {
        &self.linearizations
    }

    pub fn original_sense(&self) -> Sense {
        self.original_sense
    }

    /// True when no side of the problem needed linearization, i.e. the input
    /// was already DCP and one solve is exact.
    pub fn is_exact(&self) -> bool {
        self.linearizations.is_empty()
    }

    /// Re-center every linearization at `z`.
    pub fn update(&self, z: &Assignment) -> Result<(), GradError> {
        for lin in &self.linearizations {
            lin.update(z)?;
        }
        Ok(())
    }

    /// Largest slack value in `a` (0 when there are no slacks).
    pub fn max_slack(&self, a: &Assignment) -> f64 {
        self.slacks
            .iter()
            .filter_map(|s| a.get(s))
            .flat_map(|m| m.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Build the penalty subproblem of Algorithm-style penalty CCP at expansion
/// point `z` with penalty weight `tau`:
///
/// * sides violating the DCP position rules are linearized;
/// * each constraint that required linearization is relaxed by a fresh
///   nonnegative slack (one scalar per constraint entry), and `tau * sum` of
///   all slacks is added to the minimize-form objective;
/// * the domains of all linearized expressions become hard constraints.
///
/// The input must be DCCP and equality-split; the output passes [`is_dcp`].
pub fn build_penalty_subproblem(
    p: &Problem,
    z: &Assignment,
    tau: f64,
) -> Result<PenaltySubproblem, GradError> {
    assert!(is_dccp(p), "penalty subproblem requires a DCCP problem");

    // Canonical minimize form.
    let (objective, original_sense) = match p.sense() {
        Sense::Minimize => (p.objective().clone(), Sense::Minimize),
        Sense::Maximize => (-p.objective(), Sense::Maximize),
    };

    let mut hard_domain = DomainConstraints::empty();
    let mut linearizations = Vec::new();

    let mut objective = if objective.curvature().is_convex() {
        objective
    } else {
        let lin = linearize(&objective, z)?;
        hard_domain.merge(lin.domain());
        let affine = lin.affine().clone();
        linearizations.push(lin);
        affine
    };

    let tau_param = Parameter::scalar(tau);
    let mut slacks = Vec::new();
    let mut constraints = Vec::new();
    for (i, c) in p.constraints().iter().enumerate() {
        let (conv, doms, lins) = convexify_with_handles(c, z)?;
        hard_domain.merge(&doms);
        if lins.is_empty() {
            constraints.push(conv);
            continue;
        }
        linearizations.extend(lins);
        let shape = conv.shape();
        let slack = Variable::new(format!("slack{i}"), shape.rows(), shape.cols());
        let relaxed = match conv.relop() {
            RelOp::Le => Constraint::new(
                conv.lhs().clone(),
                RelOp::Le,
                conv.rhs() + &slack.expr(),
            ),
            RelOp::Ge => Constraint::new(
                conv.lhs() + &slack.expr(),
                RelOp::Ge,
                conv.rhs().clone(),
            ),
            RelOp::Eq => unreachable!("affine equalities are never linearized"),
        };
        constraints.push(relaxed);
        constraints.push(slack.expr().ge(expr::zeros(shape.rows(), shape.cols())));
        objective = objective + tau_param.expr() * expr::sum(&slack.expr());
        slacks.push(slack);
    }

    for c in hard_domain.into_constraints() {
        constraints.push(c);
    }

    let base = Problem::new(Sense::Minimize, objective, constraints);
    debug_assert!(is_dcp(&base), "penalty subproblem must be DCP");
    Ok(PenaltySubproblem {
        base,
        slacks,
        tau: tau_param,
        linearizations,
        original_sense,
    })
}
