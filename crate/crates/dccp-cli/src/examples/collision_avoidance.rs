//! Fuel-optimal control of linear systems whose outputs must keep a minimum
//! mutual distance at every step: minimize total l1 input effort subject to
//! dynamics, endpoint states, input bounds, and `|y_t^i - y_t^j|_2 >= d_min`
//! (nonconvex).
//!
//! The double-integrator-with-drag system matrices are fixed constants.
//! Start positions are seeded uniformly in a box whose half-width grows
//! with the horizon (so the input bound keeps them reachable), velocities
//! uniformly in (-0.1, 0.1); each system's end position is its reflected
//! start, which makes every pair of nominal paths cross near the origin and
//! keeps the distance constraints active. Layouts are redrawn until every
//! pair of systems is separated by 1.1 `d_min` at both ends.

use super::{ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use crate::svg::Canvas;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Expr, Variable};
use dccp::transform::Problem;
use nalgebra::DMatrix;
use rand::Rng;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    let mut spec = ExampleSpec::new(
        "collision-avoidance",
        0,
        &[("systems", 2.0), ("horizon", 100.0), ("d_min", 0.6), ("f_max", 0.5)],
    );
    spec.ccp.restarts = 1;
    spec
}

pub fn system_matrices() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.1, 0.0,
        0.0, 1.0, 0.0, 0.1,
        0.0, 0.0, 0.95, 0.0,
        0.0, 0.0, 0.0, 0.95,
    ]);
    let b = DMatrix::from_row_slice(4, 2, &[
        0.0, 0.0,
        0.0, 0.0,
        0.1, 0.0,
        0.0, 0.1,
    ]);
    let c = DMatrix::from_row_slice(2, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    ]);
    (a, b, c)
}

pub struct Built {
    pub problem: Problem,
    pub states: Vec<Vec<Variable>>,
    pub inputs: Vec<Vec<Variable>>,
    pub c_mat: DMatrix<f64>,
    pub d_min: f64,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n_sys = spec.param_usize("systems");
    let horizon = spec.param_usize("horizon");
    let d_min = spec.param("d_min");
    let f_max = spec.param("f_max");
    let mut rng = spec.data_rng();

    let (a_mat, b_mat, c_mat) = system_matrices();
    let a_c = ex::constant_matrix(a_mat);
    let b_c = ex::constant_matrix(b_mat);
    let c_c = ex::constant_matrix(c_mat.clone());

    let mut states = Vec::new();
    let mut inputs = Vec::new();
    let mut constraints = Vec::new();
    let mut cost: Option<Expr> = None;

    // Reachable endpoint box: with the 0.95 drag the per-axis speed limit
    // is 2 f_max; an accelerate-brake profile covers roughly
    // 0.04 * v_peak * T, and the reflected endpoints double the distance.
    let v_peak = 2.0 * f_max * (1.0 - 0.95f64.powf(horizon as f64 / 2.0));
    let half_width = 0.02 * v_peak * horizon as f64;
    let endpoints = {
        let mut endpoints: Vec<(DMatrix<f64>, DMatrix<f64>)> = Vec::new();
        let point = |rng: &mut rand_chacha::ChaCha8Rng| {
            DMatrix::from_column_slice(4, 1, &[
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
            ])
        };
        let separated = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let dx = a[(0, 0)] - b[(0, 0)];
            let dy = a[(1, 0)] - b[(1, 0)];
            (dx * dx + dy * dy).sqrt() >= 1.1 * d_min
        };
        let mut attempts = 0;
        'outer: loop {
            attempts += 1;
            assert!(
                attempts < 10_000,
                "cannot place {n_sys} systems {d_min} apart in a box of half-width \
                 {half_width:.2}; lower d_min or increase the horizon"
            );
            endpoints.clear();
            for _ in 0..n_sys {
                let start = point(&mut rng);
                let mut end = point(&mut rng);
                // Swap sides so the nominal paths cross.
                end[(0, 0)] = -start[(0, 0)];
                end[(1, 0)] = -start[(1, 0)];
                endpoints.push((start, end));
            }
            for i in 0..n_sys {
                for j in i + 1..n_sys {
                    if !separated(&endpoints[i].0, &endpoints[j].0)
                        || !separated(&endpoints[i].1, &endpoints[j].1)
                    {
                        continue 'outer;
                    }
                }
            }
            break endpoints;
        }
    };

    for i in 0..n_sys {
        let xs: Vec<Variable> =
            (0..=horizon).map(|t| Variable::new(format!("x{i}_{t}"), 4, 1)).collect();
        let us: Vec<Variable> =
            (0..horizon).map(|t| Variable::new(format!("u{i}_{t}"), 2, 1)).collect();

        let (x_init, x_end) = endpoints[i].clone();
        constraints.push(xs[0].expr().eq_to(ex::constant_matrix(x_init)));
        constraints.push(xs[horizon].expr().eq_to(ex::constant_matrix(x_end)));

        for t in 0..horizon {
            constraints.push(
                xs[t + 1]
                    .expr()
                    .eq_to(a_c.clone() * xs[t].expr() + b_c.clone() * us[t].expr()),
            );
            constraints.push(ex::norm_inf(&us[t].expr()).le(f_max));
            let term = ex::norm1(&us[t].expr());
            cost = Some(match cost {
                None => term,
                Some(acc) => acc + term,
            });
        }
        states.push(xs);
        inputs.push(us);
    }

    for t in 0..=horizon {
        for i in 0..n_sys {
            for j in i + 1..n_sys {
                let yi = c_c.clone() * states[i][t].expr();
                let yj = c_c.clone() * states[j][t].expr();
                constraints.push(ex::norm2(&(yi - yj)).ge(d_min));
            }
        }
    }

    Built {
        problem: Problem::minimize(cost.expect("horizon >= 1")).subject_to(constraints),
        states,
        inputs,
        c_mat,
        d_min,
    }
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp)?;
    let wall = start.elapsed();

    let mut report = base_report("collision-avoidance", spec, &built.problem, &result, wall);

    // Recompute family-wise violations from the final assignment.
    let mut dyn_viol = 0.0f64;
    let mut input_viol = 0.0f64;
    let mut dist_viol = 0.0f64;
    for c in built.problem.constraints() {
        let v = c.violation(&result.assignment).unwrap_or(f64::INFINITY);
        match c.relop() {
            dccp::transform::RelOp::Eq => dyn_viol = dyn_viol.max(v),
            dccp::transform::RelOp::Le => input_viol = input_viol.max(v),
            dccp::transform::RelOp::Ge => dist_viol = dist_viol.max(v),
        }
    }
    report.feasibility.insert("dynamics_endpoints".into(), dyn_viol);
    report.feasibility.insert("input_bound".into(), input_viol);
    report.feasibility.insert("min_distance".into(), dist_viol);

    let mut min_dist = f64::INFINITY;
    let horizon = built.states[0].len() - 1;
    for t in 0..=horizon {
        for i in 0..built.states.len() {
            for j in i + 1..built.states.len() {
                let (Some(xi), Some(xj)) = (
                    result.assignment.get(&built.states[i][t]),
                    result.assignment.get(&built.states[j][t]),
                ) else {
                    continue;
                };
                let yi = &built.c_mat * xi;
                let yj = &built.c_mat * xj;
                let d = ((yi[(0, 0)] - yj[(0, 0)]).powi(2) + (yi[(1, 0)] - yj[(1, 0)]).powi(2)).sqrt();
                min_dist = min_dist.min(d);
            }
        }
    }
    report.metrics.insert("fuel".into(), report.final_objective.unwrap_or(f64::NAN));
    report.metrics.insert("min_pairwise_distance".into(), min_dist);
    report.metrics.insert("d_min".into(), built.d_min);

    let svg = render(&built, &result.assignment);
    Ok(RunOutput { report, svg: Some(svg) })
}

fn render(built: &Built, a: &dccp::expr::Assignment) -> String {
    let mut pts_all = Vec::new();
    for xs in &built.states {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .filter_map(|x| a.get(x).map(|v| (v[(0, 0)], v[(1, 0)])))
            .collect();
        pts_all.push(pts);
    }
    let (mut lo, mut hi) = (-6.0f64, 6.0f64);
    for pts in &pts_all {
        for &(x, y) in pts {
            lo = lo.min(x.min(y) - 1.0);
            hi = hi.max(x.max(y) + 1.0);
        }
    }
    let mut c = Canvas::new(420.0, 420.0, lo, hi, lo, hi);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (k, pts) in pts_all.iter().enumerate() {
        c.polyline(pts, colors[k % colors.len()], 1.5);
        if let Some(&(x, y)) = pts.first() {
            c.dot(x, y, 4.0, colors[k % colors.len()]);
        }
    }
    c.finish()
}
