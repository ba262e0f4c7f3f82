//! The penalty convex-concave procedure: iteratively linearize the sides of
//! a DCCP problem that violate the DCP position rules, solve the resulting
//! convex restriction with slack-penalized constraints, and grow the penalty
//! weight until the slacks vanish.
//!
//! Boundary handling follows the domain-restricted linearization: domains of
//! linearized expressions are hard constraints of every subproblem, and when
//! a gradient fails to exist at a subproblem solution the step is damped
//! toward the previous (interior) iterate, keeping every iterate inside the
//! domain.

use crate::cone::{solve_dcp_accept, DcpSolveError};
use crate::domain::{domain, DomainConstraints};
use crate::expr::{evaluate, norm2, vec_of, Assignment, Expr, Variable};
use crate::transform::{
    build_penalty_subproblem, is_dccp, split_equalities, Problem, RelOp, Sense,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// KKT tolerances for the convex subproblems and projections: ask for the
/// solver default, but keep any iterate within `SUBPROBLEM_ACCEPT` of it.
/// CCP only needs accuracy well below `tol_slack`, and near-boundary
/// linearizations can produce programs whose last digits are unreachable.
const SUBPROBLEM_TOL: f64 = 1e-8;
const SUBPROBLEM_ACCEPT: f64 = 1e-4;
const SUBPROBLEM_MAX_ITER: usize = 200;

/// Algorithm parameters. The defaults are chosen to solve the example
/// gallery robustly at desk scale; all are overridable from the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CcpParams {
    /// Initial penalty weight on constraint slacks.
    pub tau0: f64,
    /// Penalty growth factor per iteration (> 1).
    pub mu: f64,
    /// Penalty cap.
    pub tau_max: f64,
    /// Damping factor in (0, 1) applied when a gradient is missing.
    pub alpha: f64,
    pub max_iter: usize,
    /// Gaussian samples averaged by the randomized initialization.
    pub k_ini: usize,
    pub restarts: usize,
    /// Relative change of the penalized objective below which to stop.
    pub tol_obj: f64,
    /// Largest slack value allowed at convergence.
    pub tol_slack: f64,
    pub rng_seed: u64,
}

impl Default for CcpParams {
    fn default() -> Self {
        CcpParams {
            tau0: 0.005,
            mu: 1.2,
            tau_max: 1e8,
            alpha: 0.8,
            max_iter: 100,
            k_ini: 10,
            restarts: 1,
            tol_obj: 1e-4,
            tol_slack: 1e-3,
            rng_seed: 0,
        }
    }
}

impl CcpParams {
    pub fn validate(&self) {
        assert!(self.tau0 > 0.0 && self.tau_max > 0.0 && self.tau0 <= self.tau_max);
        assert!(self.mu >= 1.0, "penalty growth factor must be >= 1");
        assert!(self.alpha > 0.0 && self.alpha < 1.0);
        assert!(self.max_iter >= 1 && self.k_ini >= 1 && self.restarts >= 1);
    }
}

/// One row of the solve trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Original objective at the iterate; NaN when the iterate is outside
    /// the domain of the objective.
    pub objective: f64,
    /// Minimize-form objective of the penalty subproblem at its solution.
    pub penalized_objective: f64,
    pub max_slack: f64,
    pub tau: f64,
    pub damped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CcpStatus {
    Converged,
    MaxIterations,
    InitializationFailed,
    SubproblemFailed,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: CcpStatus,
    pub assignment: Assignment,
    pub trace: Vec<IterationRecord>,
    pub best_restart: usize,
}

#[derive(Debug, Error)]
pub enum CcpError {
    #[error("problem is not DCCP: some expression has unknown curvature")]
    NotDccp,
}

/// `min(mu * tau, tau_max)`.
pub fn tau_update(tau: f64, mu: f64, tau_max: f64) -> f64 {
    (mu * tau).min(tau_max)
}

/// Damped step `alpha * candidate + (1 - alpha) * previous`.
pub fn damp(x_prev: &Assignment, x_candidate: &Assignment, alpha: f64) -> Assignment {
    x_candidate.lerp(x_prev, alpha)
}

/// Domains of every expression the penalty subproblem will linearize; this
/// is the set the randomized initialization projects onto.
pub fn linearization_domains(p: &Problem) -> DomainConstraints {
    let mut out = DomainConstraints::empty();
    let mut add_if = |e: &Expr, ok: bool| {
        if !ok {
            out.merge(&domain(e));
        }
    };
    match p.sense() {
        Sense::Minimize => add_if(p.objective(), p.objective().curvature().is_convex()),
        Sense::Maximize => add_if(p.objective(), p.objective().curvature().is_concave()),
    }
    for c in p.constraints() {
        match c.relop() {
            RelOp::Eq => {}
            RelOp::Le => {
                add_if(c.lhs(), c.lhs().curvature().is_convex());
                add_if(c.rhs(), c.rhs().curvature().is_concave());
            }
            RelOp::Ge => {
                add_if(c.lhs(), c.lhs().curvature().is_concave());
                add_if(c.rhs(), c.rhs().curvature().is_convex());
            }
        }
    }
    out
}

/// Randomized initialization: draw `k_ini` standard-Gaussian points per
/// variable, project each onto the linearization domain by a cone solve, and
/// average the projections. With a full domain the projections are the draws
/// themselves.
pub fn initialize(p: &Problem, k_ini: usize, rng: &mut impl Rng) -> Result<Assignment, CcpStatus> {
    let vars: Vec<Variable> = p.variables().into_values().collect();
    let dom = linearization_domains(p);

    let mut sums: Vec<nalgebra::DMatrix<f64>> = vars
        .iter()
        .map(|v| nalgebra::DMatrix::zeros(v.shape().rows(), v.shape().cols()))
        .collect();
    for _ in 0..k_ini {
        let mut draw = Assignment::new();
        for var in &vars {
            let shape = var.shape();
            let m = nalgebra::DMatrix::from_fn(shape.rows(), shape.cols(), |_, _| {
                rng.sample::<f64, _>(StandardNormal)
            });
            draw.set(var, m);
        }
        let projected = if dom.is_empty() { draw } else { project(&vars, &dom, &draw)? };
        for (var, acc) in vars.iter().zip(&mut sums) {
            *acc += projected.get(var).unwrap();
        }
    }
    let mut out = Assignment::new();
    let scale = 1.0 / k_ini as f64;
    for (var, acc) in vars.iter().zip(sums) {
        out.set(var, acc * scale);
    }
    Ok(out)
}

/// Euclidean projection of `draw` onto the domain constraints.
fn project(
    vars: &[Variable],
    dom: &DomainConstraints,
    draw: &Assignment,
) -> Result<Assignment, CcpStatus> {
    let diffs: Vec<Expr> = vars
        .iter()
        .map(|v| {
            let target = crate::expr::constant_matrix(draw.get(v).unwrap().clone());
            vec_of(&(v.expr() - target))
        })
        .collect();
    let objective = norm2(&crate::expr::vstack(&diffs));
    let problem = Problem::minimize(objective).subject_to(dom.constraints().to_vec());
    match solve_dcp_accept(&problem, SUBPROBLEM_TOL, SUBPROBLEM_MAX_ITER, SUBPROBLEM_ACCEPT) {
        Ok(sol) => {
            let mut out = Assignment::new();
            for v in vars {
                out.set(v, sol.assignment.get(v).unwrap().clone());
            }
            Ok(out)
        }
        Err(DcpSolveError::Infeasible | DcpSolveError::Unbounded | DcpSolveError::MaxIter) => {
            Err(CcpStatus::InitializationFailed)
        }
        Err(DcpSolveError::Canon(_)) => Err(CcpStatus::InitializationFailed),
    }
}

/// Run penalty CCP on a DCCP problem.
pub fn solve_dccp(p: &Problem, params: &CcpParams) -> Result<SolveResult, CcpError> {
    params.validate();
    if !is_dccp(p) {
        return Err(CcpError::NotDccp);
    }
    let split = split_equalities(p);

    let runs: Vec<RestartOutcome> = (0..params.restarts)
        .into_par_iter()
        .map(|r| run_restart(p, &split, params, r as u64))
        .collect();

    // Feasible-then-lowest-objective; all-infeasible picks the smallest max
    // slack and reports MaxIterations (a structural failure stays visible).
    let minimize_form = |obj: f64| match p.sense() {
        Sense::Minimize => obj,
        Sense::Maximize => -obj,
    };
    let mut best_feasible: Option<(usize, f64)> = None;
    for (i, run) in runs.iter().enumerate() {
        if run.feasible {
            let score = minimize_form(run.objective);
            if best_feasible.map_or(true, |(_, s)| score < s) {
                best_feasible = Some((i, score));
            }
        }
    }
    let chosen = match best_feasible {
        Some((i, _)) => i,
        None => {
            let mut idx = 0;
            let mut best_slack = f64::INFINITY;
            for (i, run) in runs.iter().enumerate() {
                if run.final_slack < best_slack {
                    best_slack = run.final_slack;
                    idx = i;
                }
            }
            idx
        }
    };
    let run = &runs[chosen];
    let status = if run.feasible {
        run.status
    } else if run.status == CcpStatus::SubproblemFailed
        || run.status == CcpStatus::InitializationFailed
    {
        run.status
    } else {
        CcpStatus::MaxIterations
    };
    Ok(SolveResult {
        status,
        assignment: run.assignment.clone(),
        trace: run.trace.clone(),
        best_restart: chosen,
    })
}

struct RestartOutcome {
    status: CcpStatus,
    assignment: Assignment,
    trace: Vec<IterationRecord>,
    feasible: bool,
    objective: f64,
    final_slack: f64,
}

fn failed_outcome(status: CcpStatus) -> RestartOutcome {
    RestartOutcome {
        status,
        assignment: Assignment::new(),
        trace: Vec::new(),
        feasible: false,
        objective: f64::NAN,
        final_slack: f64::INFINITY,
    }
}

fn run_restart(original: &Problem, split: &Problem, params: &CcpParams, stream: u64) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    rng.set_stream(stream);
    let vars = split.variables();

    // Initialization with redraw on boundary starts: if the gradients needed
    // at x0 do not exist, fresh Gaussians are drawn (up to 5 rounds).
    // User-supplied starting values take over on the first restart; later
    // restarts explore from fresh randomized points.
    let use_initials = stream == 0;
    let mut subproblem = None;
    let mut x = Assignment::new();
    for _round in 0..5 {
        let generic = match initialize(split, params.k_ini, &mut rng) {
            Ok(a) => a,
            Err(status) => return failed_outcome(status),
        };
        let mut x0 = generic;
        if use_initials {
            for var in vars.values() {
                if let Some(init) = var.initial() {
                    x0.set(var, init);
                }
            }
        }
        match build_penalty_subproblem(split, &x0, params.tau0) {
            Ok(sp) => {
                subproblem = Some(sp);
                x = x0;
                break;
            }
            Err(_) => continue,
        }
    }
    let Some(subproblem) = subproblem else {
        return failed_outcome(CcpStatus::InitializationFailed);
    };

    let mut tau = params.tau0;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut status = CcpStatus::MaxIterations;
    let mut prev_penalized: Option<f64> = None;

    for k in 0..params.max_iter {
        subproblem.set_tau(tau);
        let sol = match solve_dcp_accept(subproblem.base(), SUBPROBLEM_TOL, SUBPROBLEM_MAX_ITER, SUBPROBLEM_ACCEPT) {
            Ok(sol) => sol,
            Err(DcpSolveError::MaxIter) if k > 0 => {
                // Numerically degraded subproblem after useful progress:
                // keep the current iterate; the feasibility checks below
                // decide whether it counts.
                break;
            }
            Err(_) => {
                status = CcpStatus::SubproblemFailed;
                break;
            }
        };
        let mut candidate = Assignment::new();
        for var in vars.values() {
            candidate.set(var, sol.assignment.get(var).unwrap().clone());
        }
        let max_slack = subproblem.max_slack(&sol.assignment);
        let penalized = sol.objective;

        // Damp toward the previous (interior) iterate until the gradients
        // needed for the next convexification exist.
        let mut damped = false;
        let mut accepted = candidate;
        let mut ok = subproblem.update(&accepted).is_ok();
        if !subproblem.is_exact() {
            let mut attempts = 0;
            while !ok && attempts < 20 {
                accepted = damp(&x, &accepted, params.alpha);
                damped = true;
                ok = subproblem.update(&accepted).is_ok();
                attempts += 1;
            }
            if !ok {
                status = CcpStatus::SubproblemFailed;
                break;
            }
        }
        x = accepted;

        let objective = evaluate(original.objective(), &x).map_or(f64::NAN, |m| m[(0, 0)]);
        trace.push(IterationRecord { k, objective, penalized_objective: penalized, max_slack, tau, damped });

        if subproblem.is_exact() {
            status = CcpStatus::Converged;
            break;
        }
        if let Some(prev) = prev_penalized {
            let small_change = (penalized - prev).abs() <= params.tol_obj * (1.0 + prev.abs());
            if small_change && max_slack <= params.tol_slack {
                // Declare convergence only when the iterate is genuinely
                // feasible for the original constraints.
                if split.max_violation(&x) <= params.tol_slack + 1e-6 {
                    status = CcpStatus::Converged;
                    break;
                }
            }
        }
        prev_penalized = Some(penalized);
        tau = tau_update(tau, params.mu, params.tau_max);
    }

    let feasible = !trace.is_empty()
        && trace.last().map_or(false, |r| r.max_slack <= params.tol_slack)
        && split.max_violation(&x) <= params.tol_slack + 1e-6;
    let objective = evaluate(original.objective(), &x).map_or(f64::NAN, |m| m[(0, 0)]);
    let final_slack = trace.last().map_or(f64::INFINITY, |r| r.max_slack);
    RestartOutcome { status, assignment: x, trace, feasible, objective, final_slack }
}
