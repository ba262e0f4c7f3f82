//! Acceptance suite: one test per shipped criterion, each printing a PASS
//! line with the measured numbers (run with `--nocapture` to see them).

mod common;

use common::{infeasible_socp, planted_feasible_socp, subgradient_oracle, unbounded_socp};
use dccp::ccp::{initialize, solve_dccp, CcpParams, CcpStatus};
use dccp::cone::solve_dcp;
use dccp::expr::{self as ex, evaluate, gradient, Assignment, Curvature, Expr, Shape, Variable};
use dccp::sample::{sample_expr, sample_in_domain};
use dccp::solver::{kkt_residuals, solve_cone, SolveStatus};
use dccp::transform::{build_penalty_subproblem, is_dcp, split_equalities, Problem};
use dccp_cli::examples::{boolean_ls, default_spec, path_planning, run_example};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

/// Reduced-scale parameter sets used where a criterion runs "every example"
/// and the instance size is not pinned by the criterion itself.
fn small_scale(name: &str) -> Vec<(&'static str, f64)> {
    match name {
        "circle-packing" => vec![("n", 8.0)],
        "boolean-ls" => vec![("n", 12.0), ("m", 12.0)],
        "path-planning" => vec![("n", 20.0), ("obstacles", 3.0)],
        "collision-avoidance" => vec![("horizon", 30.0), ("d_min", 0.3)],
        "sparse-recovery" => vec![("n", 30.0), ("m", 20.0), ("cardinality", 5.0)],
        "phase-retrieval" => vec![("n", 8.0), ("m", 24.0)],
        "filter-design" => {
            vec![("n", 8.0), ("grid", 40.0), ("l_pass", 8.0), ("l_stop", 12.0)]
        }
        "sparse-singular-vectors" => vec![("n", 20.0), ("mu", 2.0)],
        _ => unreachable!(),
    }
}

#[test]
fn criterion_01_sqrt_pathology() {
    // minimize sqrt(x) s.t. x >= -1 from x0 = 1: the solution is the domain
    // boundary x = 0, approached through interior iterates.
    let start = Instant::now();
    let x = Variable::scalar("x");
    x.set_initial(DMatrix::from_element(1, 1, 1.0));
    let p = Problem::minimize(ex::sqrt(&x.expr())).subject_to([x.expr().ge(-1.0)]);
    let result = solve_dccp(&p, &CcpParams::default()).unwrap();
    x.clear_initial();
    let elapsed = start.elapsed();

    assert_eq!(result.status, CcpStatus::Converged);
    let xf = result.assignment.scalar(&x).unwrap();
    assert!(xf.abs() <= 1e-4, "final x = {xf}");
    for rec in &result.trace {
        assert!(
            !rec.objective.is_nan(),
            "iterate {} left the objective domain (DomainViolation)",
            rec.k
        );
    }
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");

    // Replicate the iterate sequence through the public operations to check
    // nonnegativity of every iterate directly.
    let x2 = Variable::scalar("x2");
    let p2 = Problem::minimize(ex::sqrt(&x2.expr())).subject_to([x2.expr().ge(-1.0)]);
    let split = split_equalities(&p2);
    let mut point = Assignment::new();
    point.set_scalar(&x2, 1.0);
    let sp = build_penalty_subproblem(&split, &point, 0.005).unwrap();
    let mut iterates = vec![1.0];
    for _ in 0..40 {
        let sol = solve_dcp(sp.base(), 1e-8, 200).unwrap();
        let mut cand = Assignment::new();
        cand.set_scalar(&x2, sol.assignment.scalar(&x2).unwrap());
        let mut tries = 0;
        while sp.update(&cand).is_err() && tries < 20 {
            cand = dccp::ccp::damp(&point, &cand, 0.8);
            tries += 1;
        }
        assert!(tries < 20, "damping exhausted");
        point = cand;
        let xv = point.scalar(&x2).unwrap();
        iterates.push(xv);
        if xv.abs() <= 1e-6 {
            break;
        }
    }
    assert!(
        iterates.iter().all(|&v| v >= 0.0),
        "an iterate left the domain: {iterates:?}"
    );
    assert!(iterates.last().unwrap().abs() <= 1e-4);
    println!(
        "PASS criterion 1: sqrt pathology converged to {:.2e} in {:?}, {} interior iterates",
        xf,
        elapsed,
        iterates.len()
    );
}

#[test]
fn criterion_02_linearization_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut pairs = 0usize;
    let mut checked_points = 0usize;
    while pairs < 1000 {
        let sampled = sample_expr(&mut rng, Shape::scalar(), 3);
        let curv = sampled.expr.curvature();
        if !(curv == Curvature::Convex || curv == Curvature::Concave) {
            continue;
        }
        let Some(z) = sample_in_domain(&mut rng, &sampled.expr, &sampled.vars, 50) else {
            continue;
        };
        let Ok(lin) = dccp::transform::linearize(&sampled.expr, &z) else {
            continue;
        };
        // Exactness at the expansion point to 1e-12.
        let at_z = evaluate(lin.affine(), &z).unwrap()[(0, 0)];
        let src_z = evaluate(&sampled.expr, &z).unwrap()[(0, 0)];
        assert!(
            (at_z - src_z).abs() <= 1e-12 * (1.0 + src_z.abs()),
            "expansion-point mismatch: {at_z} vs {src_z}"
        );
        // Global bound over 100 sampled in-domain points.
        let mut seen = 0;
        for _ in 0..300 {
            if seen >= 100 {
                break;
            }
            let Some(a) = sample_in_domain(&mut rng, &sampled.expr, &sampled.vars, 10) else {
                continue;
            };
            let (Ok(g), Ok(ghat)) = (evaluate(&sampled.expr, &a), evaluate(lin.affine(), &a))
            else {
                continue;
            };
            let (g, ghat) = (g[(0, 0)], ghat[(0, 0)]);
            let slack = 1e-9 * (1.0 + g.abs());
            match curv {
                Curvature::Convex => assert!(
                    ghat <= g + slack,
                    "linearization above a convex function: {ghat} > {g}"
                ),
                Curvature::Concave => assert!(
                    ghat >= g - slack,
                    "linearization below a concave function: {ghat} < {g}"
                ),
                _ => unreachable!(),
            }
            seen += 1;
        }
        if seen > 0 {
            pairs += 1;
            checked_points += seen;
        }
    }
    println!("PASS criterion 2: {pairs} linearizations sound on {checked_points} sampled points");
}

#[test]
fn criterion_03_subproblem_dcp_for_every_example() {
    let mut cases = 0;
    for name in dccp_cli::examples::EXAMPLE_NAMES {
        for seed in 0..3u64 {
            let mut spec = default_spec(name).unwrap();
            spec.seed = seed;
            for (k, v) in small_scale(name) {
                spec.set_param(k, v);
            }
            let problem = dccp_cli::examples::build_problem(&spec).unwrap();
            assert!(dccp::transform::is_dccp(&problem), "{name} must be DCCP");
            let split = split_equalities(&problem);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut built = None;
            for _ in 0..5 {
                let z = initialize(&split, 3, &mut rng).expect("initialization");
                if let Ok(sp) = build_penalty_subproblem(&split, &z, 1.0) {
                    built = Some(sp);
                    break;
                }
            }
            let sp = built.expect("subproblem construction");
            assert!(is_dcp(sp.base()), "{name} seed {seed}: subproblem not DCP");
            cases += 1;
        }
    }
    println!("PASS criterion 3: {cases}/{cases} example subproblems are DCP");
}

#[test]
fn criterion_04_gradient_checks_all_atoms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let n = 4;

    // Expression builders paired with kink-avoiding point samplers.
    type Case = (&'static str, Box<dyn Fn(&Expr) -> Expr>, bool);
    let spread = |rng: &mut ChaCha8Rng| -> DMatrix<f64> {
        // Entries bounded away from 0 and from each other, so max/min/abs
        // selections are locally smooth.
        loop {
            let m = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut vals: Vec<f64> = m.iter().copied().collect();
            vals.sort_by(f64::total_cmp);
            let min_gap = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let min_abs = m.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            let near_pair = m
                .iter()
                .map(|v| (v.abs() - 0.25).abs())
                .fold(f64::INFINITY, f64::min);
            if min_gap > 1e-2 && min_abs > 1e-2 && near_pair > 1e-2 {
                return m;
            }
        }
    };

    let c_mat = DMatrix::from_fn(3, n, |i, j| ((i * n + j) as f64 * 0.37).sin());
    let cases: Vec<Case> = vec![
        ("add", Box::new(|x| x + ex::constant_vector(&[0.3, -0.1, 0.7, 0.2])), false),
        ("negate", Box::new(|x| -x), false),
        ("scale", Box::new(|x| 1.7 * x), false),
        ("matmul", Box::new(move |x| ex::constant_matrix(c_mat.clone()) * x.clone()), false),
        ("sum", Box::new(|x| ex::sum(x)), false),
        ("transpose", Box::new(|x| ex::transpose(x)), false),
        ("hstack", Box::new(|x| ex::hstack(&[x.clone(), 2.0 * x])), false),
        ("vstack", Box::new(|x| ex::vstack(&[x.clone(), -x])), false),
        ("reshape", Box::new(|x| ex::reshape(x, 2, 2)), false),
        ("trace", Box::new(|x| ex::trace(&ex::matmul(x, &ex::transpose(x)))), false),
        ("index", Box::new(|x| ex::index(x, &[1, 3], &[0])), false),
        ("broadcast", Box::new(|x| ex::index(x, &[0], &[0]).broadcast_to(Shape::new(3, 2))), false),
        ("square", Box::new(|x| ex::square(x)), false),
        ("abs", Box::new(|x| ex::abs(x)), false),
        ("norm1", Box::new(|x| ex::norm1(x)), false),
        ("norm2", Box::new(|x| ex::norm2(x)), false),
        ("norm_inf", Box::new(|x| ex::norm_inf(x)), false),
        ("max_entries", Box::new(|x| ex::max_entries(x)), false),
        ("maximum", Box::new(|x| ex::maximum(&[x.clone(), ex::constant(0.25)])), false),
        ("pos", Box::new(|x| ex::pos(x)), false),
        ("sum_squares", Box::new(|x| ex::sum_squares(x)), false),
        ("sqrt", Box::new(|x| ex::sqrt(x)), true),
        ("min_entries", Box::new(|x| ex::min_entries(x)), false),
        ("minimum", Box::new(|x| ex::minimum(&[x.clone(), ex::constant(-0.25)])), false),
    ];

    let h = 1e-6;
    for (name, build, positive) in &cases {
        let var = Variable::vector("x", n);
        let e = build(&var.expr());
        for _ in 0..100 {
            let mut m = spread(&mut rng);
            if *positive {
                m = m.map(|v| v.abs() + 0.1);
            }
            let mut a = Assignment::new();
            a.set(&var, m.clone());
            let g = gradient(&e, &a).unwrap_or_else(|err| panic!("{name}: {err}"));
            let jac = g
                .get(&var.id())
                .cloned()
                .unwrap_or_else(|| DMatrix::zeros(e.size(), n));
            for t in 0..n {
                let eval_at = |delta: f64| {
                    let mut mm = m.clone();
                    mm[(t, 0)] += delta;
                    let mut aa = Assignment::new();
                    aa.set(&var, mm);
                    evaluate(&e, &aa).unwrap()
                };
                let plus = eval_at(h);
                let minus = eval_at(-h);
                for r in 0..e.size() {
                    let fd = (plus.as_slice()[r] - minus.as_slice()[r]) / (2.0 * h);
                    let an = jac[(r, t)];
                    let rel = (fd - an).abs() / (1.0 + fd.abs());
                    assert!(rel < 1e-5, "{name}: entry ({r},{t}) fd {fd} vs analytic {an}");
                }
            }
        }
    }
    println!("PASS criterion 4: {} atoms match central differences at 100 points each", cases.len());
}

#[test]
fn criterion_05_cone_solver_against_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst_gap = 0.0f64;
    for trial in 0..100 {
        let planted = planted_feasible_socp(&mut rng);
        let sol = solve_cone(&planted.cp, 1e-6, 200);
        assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial} not optimal");
        let residuals = kkt_residuals(&planted.cp, &sol.x, &sol.z).unwrap();
        assert!(residuals.max() <= 1e-6, "trial {trial}: residuals {residuals:?}");

        let rho = 1.5 * planted.dual_norm + 0.5;
        let oracle = subgradient_oracle(&planted.cp, planted.optimal_value, rho, 2_000_000);
        assert!(
            (oracle - planted.optimal_value).abs() <= 5e-5 * (1.0 + planted.optimal_value.abs()),
            "trial {trial}: oracle {oracle} failed to certify planted optimum {}",
            planted.optimal_value
        );
        let gap = (sol.objective - oracle).abs() / (1.0 + oracle.abs());
        worst_gap = worst_gap.max(gap);
        assert!(
            gap <= 1e-4,
            "trial {trial}: solver {} vs oracle {oracle}",
            sol.objective
        );
    }

    for trial in 0..20 {
        let cp = infeasible_socp(&mut rng);
        let sol = solve_cone(&cp, 1e-6, 200);
        assert_eq!(sol.status, SolveStatus::Infeasible, "trial {trial}");
        // Certificate: y in K*, A'y ~ 0, b'y < 0.
        let y = &sol.z;
        let aty = cp.a.matvec_t(y);
        let aty_norm: f64 = aty.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ynorm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(aty_norm <= 1e-6 * (1.0 + ynorm), "trial {trial}: A'y = {aty_norm}");
        let by: f64 = cp.b.iter().zip(y).map(|(a, b)| a * b).sum();
        assert!(by < 0.0, "trial {trial}: b'y = {by}");
        let mut off = 0;
        for block in &cp.cones {
            let d = dccp::solver::dual_cone_distance(block, &y[off..off + block.dim()]);
            assert!(d <= 1e-6 * (1.0 + ynorm), "trial {trial}: dual-cone distance {d}");
            off += block.dim();
        }
    }

    for trial in 0..20 {
        let cp = unbounded_socp(&mut rng);
        let sol = solve_cone(&cp, 1e-6, 200);
        assert_eq!(sol.status, SolveStatus::Unbounded, "trial {trial}");
        // Certificate: -A x in K, c'x < 0.
        let cx: f64 = cp.c.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
        assert!(cx < 0.0, "trial {trial}: c'x = {cx}");
        let ax = cp.a.matvec(&sol.x);
        let neg_ax: Vec<f64> = ax.iter().map(|v| -v).collect();
        let xnorm: f64 = sol.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut off = 0;
        for block in &cp.cones {
            let d = dccp::solver::cone_distance(block, &neg_ax[off..off + block.dim()]);
            assert!(d <= 1e-6 * (1.0 + xnorm), "trial {trial}: cone distance {d}");
            off += block.dim();
        }
    }
    println!(
        "PASS criterion 5: 100 SOCPs optimal at <=1e-6 KKT, worst oracle gap {worst_gap:.2e}; 20+20 certificates valid"
    );
}

#[test]
fn criterion_06_boolean_ls_vs_exhaustive_oracle() {
    let mut within = 0;
    for seed in 0..20u64 {
        let mut spec = default_spec("boolean-ls").unwrap();
        spec.seed = seed;
        spec.set_param("n", 16.0);
        spec.set_param("m", 16.0);
        spec.set_param("snr", 17.0);
        spec.ccp.restarts = 3;
        spec.ccp.rng_seed = seed;
        let built = boolean_ls::build(&spec);
        let result = solve_dccp(&built.problem, &spec.ccp).unwrap();
        let xv = result.assignment.get(&built.x).expect("solution");

        // Entries are +-1 exactly after the 1e-6 tolerance check and rounding.
        let max_dev = xv.iter().map(|&v| (v.abs() - 1.0).abs()).fold(0.0, f64::max);
        assert!(max_dev <= 1e-6, "seed {seed}: |x| deviates from 1 by {max_dev:.2e}");
        let rounded: Vec<f64> = xv.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        assert!(rounded.iter().all(|v| v.abs() == 1.0));

        let (_, oracle_obj) = boolean_ls::exhaustive_oracle(&built.a, &built.y);
        let x_mat = DMatrix::from_column_slice(16, 1, &rounded);
        let dccp_obj: f64 =
            (&built.y - &built.a * x_mat).iter().map(|v| v * v).sum::<f64>().sqrt();
        if dccp_obj <= 1.10 * oracle_obj + 1e-9 {
            within += 1;
        }
    }
    assert!(within >= 14, "only {within}/20 within 10% of the global optimum");
    println!("PASS criterion 6: {within}/20 instances within 10% of the exhaustive optimum");
}

#[test]
fn criterion_07_circle_packing() {
    let start = Instant::now();
    let spec = default_spec("circle-packing").unwrap();
    assert_eq!(spec.param_usize("n"), 14);
    assert_eq!(spec.ccp.restarts, 5);
    let out = run_example(&spec).unwrap();
    let elapsed = start.elapsed();

    let pairwise = out.report.feasibility["pairwise_distance"];
    let coverage = out.report.metrics["coverage_fraction"];
    assert!(pairwise <= 1e-4, "pairwise violation {pairwise}");
    assert!(coverage >= 0.65, "coverage {coverage}");
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 7: coverage {coverage:.3} (>= 0.65), pairwise violation {pairwise:.1e}, {elapsed:?}"
    );
}

#[test]
fn criterion_08_sparse_recovery_sqrt_vs_l1() {
    let mut sqrt_successes = 0;
    let mut l1_successes = 0;
    for seed in 0..20u64 {
        let mut spec = default_spec("sparse-recovery").unwrap();
        spec.seed = seed;
        spec.ccp.rng_seed = seed;
        spec.set_param("n", 40.0);
        spec.set_param("m", 30.0);
        spec.set_param("cardinality", 8.0);
        let out = run_example(&spec).unwrap();
        if out.report.metrics.get("sqrt_success").copied() == Some(1.0) {
            sqrt_successes += 1;
        }
        if out.report.metrics.get("l1_success").copied() == Some(1.0) {
            l1_successes += 1;
        }
    }
    assert!(
        sqrt_successes >= l1_successes,
        "sqrt {sqrt_successes}/20 vs l1 {l1_successes}/20"
    );
    println!(
        "PASS criterion 8: sqrt recovery {sqrt_successes}/20 >= l1 recovery {l1_successes}/20 (threshold 0.01)"
    );
}

#[test]
fn criterion_09_path_planning() {
    let dist = ((path_planning::END[0] - path_planning::START[0]).powi(2)
        + (path_planning::END[1] - path_planning::START[1]).powi(2))
    .sqrt();
    for seed in 0..3u64 {
        let mut spec = default_spec("path-planning").unwrap();
        spec.seed = seed;
        spec.ccp.rng_seed = seed;
        let out = run_example(&spec).unwrap();
        let r = &out.report;
        assert!(r.feasibility["obstacles"] <= 1e-4, "seed {seed}: obstacles {:?}", r.feasibility);
        assert!(
            r.feasibility["segment_length"] <= 1e-6,
            "seed {seed}: segments {:?}",
            r.feasibility
        );
        let l = r.metrics["path_length"];
        assert!(l >= dist - 1e-6, "seed {seed}: L = {l} below straight-line {dist}");
    }

    // Zero-obstacle control: exactly the straight segment.
    let mut spec = default_spec("path-planning").unwrap();
    spec.set_param("obstacles", 0.0);
    let out = run_example(&spec).unwrap();
    let l = out.report.metrics["path_length"];
    assert!((l - dist).abs() <= 1e-5, "control case L = {l}, expected {dist}");
    println!("PASS criterion 9: 3 layouts feasible to 1e-4; control L = {l:.6} = |a-b|");
}

#[test]
fn criterion_10_phase_retrieval() {
    let mut successes = 0;
    for seed in 0..10u64 {
        let mut spec = default_spec("phase-retrieval").unwrap();
        spec.seed = seed;
        spec.ccp.rng_seed = seed;
        spec.set_param("n", 16.0);
        spec.set_param("m", 48.0);
        let out = run_example(&spec).unwrap();
        let residual = out.report.feasibility["magnitudes"];
        if residual <= 1e-3 {
            successes += 1;
        }
    }
    assert!(successes >= 7, "only {successes}/10 seeds recovered");
    println!("PASS criterion 10: {successes}/10 seeds satisfy ||x*a_k| - y_k| <= 1e-3 for all k");
}

#[test]
fn criterion_11_fixed_tau_descent() {
    for name in dccp_cli::examples::EXAMPLE_NAMES {
        let mut spec = default_spec(name).unwrap();
        for (k, v) in small_scale(name) {
            spec.set_param(k, v);
        }
        spec.ccp.mu = 1.0;
        spec.ccp.tau0 = 1.0;
        spec.ccp.max_iter = 25;
        spec.ccp.restarts = 1;
        let out = run_example(&spec).unwrap();
        let pens: Vec<f64> =
            out.report.trace.iter().map(|r| r.penalized_objective).collect();
        assert!(pens.len() >= 2, "{name}: trace too short ({} rows)", pens.len());
        for w in pens.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-7 * (1.0 + w[0].abs()),
                "{name}: penalized objective increased {} -> {}",
                w[0],
                w[1]
            );
        }
    }
    println!("PASS criterion 11: penalized objective nonincreasing (mu = 1) on all 8 examples");
}

#[test]
fn criterion_12_deterministic_reports() {
    for name in ["boolean-ls", "path-planning"] {
        let mut spec = default_spec(name).unwrap();
        spec.seed = 7;
        spec.ccp.rng_seed = 7;
        for (k, v) in small_scale(name) {
            spec.set_param(k, v);
        }
        let a = run_example(&spec).unwrap().report.to_json();
        let b = run_example(&spec).unwrap().report.to_json();
        assert_eq!(a, b, "{name}: reports differ between identical runs");
    }
    println!("PASS criterion 12: identical specs produce byte-identical JSON reports");
}
