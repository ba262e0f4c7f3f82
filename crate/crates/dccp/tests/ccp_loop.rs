//! End-to-end penalty CCP runs and the driver's unit operations.

use approx::assert_relative_eq;
use dccp::ccp::{damp, initialize, solve_dccp, tau_update, CcpParams, CcpStatus};
use dccp::expr::{self as ex, Assignment, Variable};
use dccp::transform::Problem;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn tau_update_examples() {
    assert_eq!(tau_update(1.0, 2.0, 5.0), 2.0);
    assert_eq!(tau_update(4.0, 2.0, 5.0), 5.0);
    assert_eq!(tau_update(5.0, 2.0, 5.0), 5.0, "fixed point at the cap");
}

#[test]
fn damp_examples() {
    let x = Variable::scalar("x");
    let mut prev = Assignment::new();
    prev.set_scalar(&x, 0.0);
    let mut cand = Assignment::new();
    cand.set_scalar(&x, 1.0);
    assert_relative_eq!(damp(&prev, &cand, 0.5).scalar(&x).unwrap(), 0.5);
    assert_relative_eq!(damp(&prev, &prev, 0.3).scalar(&x).unwrap(), 0.0);
    assert_relative_eq!(damp(&prev, &cand, 0.999).scalar(&x).unwrap(), 0.999);
}

#[test]
fn initialize_full_domain_averages_raw_draws() {
    // With a full domain the projection is the identity, so the result is
    // the mean of k_ini Gaussian draws: near zero for many draws.
    let x = Variable::vector("x", 4);
    let p = Problem::minimize(ex::sum(&x.expr()));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = initialize(&p, 200, &mut rng).unwrap();
    let v = a.get(&x).unwrap();
    assert!(v.iter().all(|e| e.abs() < 0.25), "mean of 200 draws should be small: {v}");
}

#[test]
fn initialize_projects_onto_nonneg_domain() {
    // Domain {x >= 0} from a linearized sqrt objective: projections clamp,
    // so the average is the mean of clamped Gaussians (~0.4), never negative.
    let x = Variable::scalar("x");
    let p = Problem::minimize(ex::sqrt(&x.expr())).subject_to([x.expr().ge(-1.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = initialize(&p, 50, &mut rng).unwrap();
    let v = a.scalar(&x).unwrap();
    assert!(v > 0.0, "average of clamped draws is positive, got {v}");
    assert!((v - 0.4).abs() < 0.2, "E[max(g,0)] ~ 0.4, got {v}");
}

#[test]
fn initialize_projects_onto_unit_disk() {
    // Domain |x|_2 <= 1 via sqrt(1 - sum_squares(x)) appearing in a
    // linearized position; analytic projection of z is z/max(1, |z|).
    let x = Variable::vector("x", 2);
    let inner = 1.0 - ex::sum_squares(&x.expr());
    let p = Problem::minimize(ex::sqrt(&inner));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // Compare against a by-hand projection of the same draws.
    let a = initialize(&p, 8, &mut rng).unwrap();
    let mut rng2 = ChaCha8Rng::seed_from_u64(7);
    let mut sum = [0.0f64; 2];
    for _ in 0..8 {
        use rand::Rng;
        let z = [
            rng2.sample::<f64, _>(rand_distr::StandardNormal),
            rng2.sample::<f64, _>(rand_distr::StandardNormal),
        ];
        let norm = (z[0] * z[0] + z[1] * z[1]).sqrt();
        let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
        sum[0] += z[0] * scale;
        sum[1] += z[1] * scale;
    }
    let v = a.get(&x).unwrap();
    assert!((v[(0, 0)] - sum[0] / 8.0).abs() < 1e-5, "{} vs {}", v[(0, 0)], sum[0] / 8.0);
    assert!((v[(1, 0)] - sum[1] / 8.0).abs() < 1e-5);
}

#[test]
fn sqrt_pathology_converges_to_boundary_from_interior() {
    let x = Variable::scalar("x");
    x.set_initial(nalgebra::DMatrix::from_element(1, 1, 1.0));
    let p = Problem::minimize(ex::sqrt(&x.expr())).subject_to([x.expr().ge(-1.0)]);
    let result = solve_dccp(&p, &CcpParams::default()).unwrap();
    x.clear_initial();

    assert_eq!(result.status, CcpStatus::Converged);
    let xf = result.assignment.scalar(&x).unwrap();
    assert!(xf.abs() <= 1e-4, "limit at the boundary, got {xf}");
    // The recorded objective was evaluable at every iterate (no domain
    // violations), and every iterate stayed nonnegative.
    for rec in &result.trace {
        assert!(!rec.objective.is_nan(), "objective evaluable at iterate {}", rec.k);
    }
}

#[test]
fn dcp_problem_takes_exact_path() {
    let x = Variable::scalar("x");
    let p = Problem::minimize(ex::square(&x.expr())).subject_to([x.expr().ge(1.0)]);
    let result = solve_dccp(&p, &CcpParams::default()).unwrap();
    assert_eq!(result.status, CcpStatus::Converged);
    assert_eq!(result.trace.len(), 1, "one effective iteration");
    assert_relative_eq!(result.assignment.scalar(&x).unwrap(), 1.0, epsilon = 1e-6);
    assert_eq!(result.trace[0].max_slack, 0.0);
}

#[test]
fn boolean_ls_two_variables_exact() {
    // A = I2, y = (1, -1): global optimum x = (1, -1) with objective 0,
    // verified by enumerating all four sign vectors.
    let x = Variable::vector("x", 2);
    let y = ex::constant_vector(&[1.0, -1.0]);
    let p = Problem::minimize(ex::norm2(&(y - x.expr())))
        .subject_to([ex::square(&x.expr()).eq_to(1.0)]);
    let params = CcpParams { restarts: 3, rng_seed: 1, ..Default::default() };
    let result = solve_dccp(&p, &params).unwrap();
    assert_eq!(result.status, CcpStatus::Converged);
    let v = result.assignment.get(&x).unwrap();
    assert!((v[(0, 0)] - 1.0).abs() < 1e-3, "x0 = {}", v[(0, 0)]);
    assert!((v[(1, 0)] + 1.0).abs() < 1e-3, "x1 = {}", v[(1, 0)]);
}

#[test]
fn tau_trace_is_monotone_and_capped() {
    let x = Variable::vector("x", 2);
    let p = Problem::minimize(ex::sum(&x.expr()))
        .subject_to([ex::norm2(&x.expr()).ge(1.0), ex::norm_inf(&x.expr()).le(2.0)]);
    let params = CcpParams { tau0: 1.0, mu: 3.0, tau_max: 10.0, rng_seed: 3, ..Default::default() };
    let result = solve_dccp(&p, &params).unwrap();
    let taus: Vec<f64> = result.trace.iter().map(|r| r.tau).collect();
    assert!(taus.windows(2).all(|w| w[1] >= w[0]));
    assert!(taus.iter().all(|&t| t <= 10.0));
}

#[test]
fn reproducible_given_seed() {
    let x = Variable::vector("x", 3);
    let p = Problem::minimize(ex::sum(&x.expr()))
        .subject_to([ex::norm2(&x.expr()).ge(1.0), ex::norm_inf(&x.expr()).le(2.0)]);
    let params = CcpParams { restarts: 2, rng_seed: 11, ..Default::default() };
    let a = solve_dccp(&p, &params).unwrap();
    let b = solve_dccp(&p, &params).unwrap();
    assert_eq!(a.best_restart, b.best_restart);
    assert_eq!(a.trace.len(), b.trace.len());
    for (ra, rb) in a.trace.iter().zip(&b.trace) {
        assert_eq!(ra.penalized_objective, rb.penalized_objective);
        assert_eq!(ra.max_slack, rb.max_slack);
    }
    assert_eq!(a.assignment, b.assignment);
}

#[test]
fn fixed_tau_penalized_objective_is_nonincreasing() {
    // With mu = 1 the subproblem is a majorization-minimization scheme, so
    // its objective cannot increase beyond solver tolerance.
    let x = Variable::vector("x", 2);
    let p = Problem::minimize(ex::sum(&x.expr()))
        .subject_to([ex::norm2(&x.expr()).ge(1.0), ex::norm_inf(&x.expr()).le(2.0)]);
    let params = CcpParams { mu: 1.0, tau0: 1.0, max_iter: 30, rng_seed: 4, ..Default::default() };
    let result = solve_dccp(&p, &params).unwrap();
    let pens: Vec<f64> = result.trace.iter().map(|r| r.penalized_objective).collect();
    assert!(pens.len() >= 2, "needs at least two iterations, got {}", pens.len());
    for w in pens.windows(2) {
        assert!(w[1] <= w[0] + 1e-7, "penalized objective increased: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn feasibility_at_convergence() {
    let x = Variable::vector("x", 2);
    let p = Problem::minimize(ex::sum(&x.expr()))
        .subject_to([ex::norm2(&x.expr()).ge(1.0), ex::norm_inf(&x.expr()).le(2.0)]);
    let params = CcpParams { rng_seed: 8, ..Default::default() };
    let result = solve_dccp(&p, &params).unwrap();
    if result.status == CcpStatus::Converged {
        assert!(p.max_violation(&result.assignment) <= params.tol_slack + 1e-6);
    }
}

#[test]
fn non_dccp_input_is_rejected() {
    let x = Variable::scalar("x");
    let p = Problem::minimize(ex::sqrt(&ex::square(&x.expr())));
    assert!(solve_dccp(&p, &CcpParams::default()).is_err());
}

#[test]
fn maximize_convex_objective() {
    // maximize |x|_2 over the box [-1, 1]^2: optimum sqrt(2) at a corner.
    let x = Variable::vector("x", 2);
    let p = Problem::maximize(ex::norm2(&x.expr()))
        .subject_to([ex::norm_inf(&x.expr()).le(1.0)]);
    let params = CcpParams { restarts: 5, rng_seed: 2, ..Default::default() };
    let result = solve_dccp(&p, &params).unwrap();
    assert_eq!(result.status, CcpStatus::Converged);
    let v = result.assignment.get(&x).unwrap();
    let norm = (v[(0, 0)].powi(2) + v[(1, 0)].powi(2)).sqrt();
    assert!(norm > 1.35, "corner norm sqrt(2), got {norm}");
}
