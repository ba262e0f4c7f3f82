//! Shortest path between two points avoiding circular obstacles. The arc is
//! discretized into `n` segments of common length bound `L/n`; obstacle
//! avoidance `|x_i - p_j|_2 >= r_j` is the nonconvex part.
//!
//! Endpoints are fixed at a = (0,0), b = (10,10). Obstacles are seeded:
//! centers U(2,8)^2, radii U(0.4,1.2), redrawn while covering an endpoint.

use super::{ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use crate::svg::Canvas;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::{Constraint, Problem};
use rand::Rng;
use std::time::Instant;

pub const START: [f64; 2] = [0.0, 0.0];
pub const END: [f64; 2] = [10.0, 10.0];

pub fn default_spec() -> ExampleSpec {
    let mut spec =
        ExampleSpec::new("path-planning", 0, &[("n", 50.0), ("obstacles", 6.0)]);
    spec.ccp.restarts = 5;
    spec
}

pub struct Built {
    pub problem: Problem,
    pub points: Vec<Variable>,
    pub length: Variable,
    pub obstacles: Vec<([f64; 2], f64)>,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let m = spec.param_usize("obstacles");
    let mut rng = spec.data_rng();

    let mut obstacles = Vec::with_capacity(m);
    while obstacles.len() < m {
        let c = [rng.random_range(2.0..8.0), rng.random_range(2.0..8.0)];
        let r = rng.random_range(0.4..1.2);
        let covers = |p: &[f64; 2]| {
            ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() <= r + 0.2
        };
        if !covers(&START) && !covers(&END) {
            obstacles.push((c, r));
        }
    }

    let points: Vec<Variable> =
        (0..=n).map(|i| Variable::new(format!("x{i}"), 2, 1)).collect();
    let length = Variable::scalar("L");

    let mut constraints = vec![
        points[0].expr().eq_to(ex::constant_vector(&START)),
        points[n].expr().eq_to(ex::constant_vector(&END)),
    ];
    for i in 1..=n {
        constraints.push(
            ex::norm2(&(points[i].expr() - points[i - 1].expr()))
                .le(length.expr() / n as f64),
        );
    }
    for i in 1..=n {
        for (c, r) in &obstacles {
            constraints.push(ex::norm2(&(points[i].expr() - ex::constant_vector(c))).ge(*r));
        }
    }
    Built {
        problem: Problem::minimize(length.expr()).subject_to(constraints),
        points,
        length,
        obstacles,
    }
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    // A straight-line initial path is the natural starting point; restarts
    // beyond the first fall back to the randomized initialization.
    let n = built.points.len() - 1;
    for (i, p) in built.points.iter().enumerate() {
        let t = i as f64 / n as f64;
        p.set_initial(nalgebra::DMatrix::from_column_slice(2, 1, &[
            START[0] + t * (END[0] - START[0]),
            START[1] + t * (END[1] - START[1]),
        ]));
    }
    let dist = ((END[0] - START[0]).powi(2) + (END[1] - START[1]).powi(2)).sqrt();
    built.length.set_initial(nalgebra::DMatrix::from_element(1, 1, dist));

    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp);
    for p in &built.points {
        p.clear_initial();
    }
    built.length.clear_initial();
    let result = result?;
    let wall = start.elapsed();

    let mut report = base_report("path-planning", spec, &built.problem, &result, wall);

    let endpoint_viol = built.problem.constraints()[..2]
        .iter()
        .map(|c: &Constraint| c.violation(&result.assignment).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let segment_viol = built.problem.constraints()[2..2 + n]
        .iter()
        .map(|c| c.violation(&result.assignment).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let obstacle_viol = built.problem.constraints()[2 + n..]
        .iter()
        .map(|c| c.violation(&result.assignment).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    report.feasibility.insert("endpoints".into(), endpoint_viol);
    report.feasibility.insert("segment_length".into(), segment_viol);
    report.feasibility.insert("obstacles".into(), obstacle_viol);

    let l = report.final_objective.unwrap_or(f64::NAN);
    report.metrics.insert("path_length".into(), l);
    report.metrics.insert("straight_line_distance".into(), dist);
    report.metrics.insert("detour_ratio".into(), l / dist);

    let svg = render(&built, &result.assignment);
    Ok(RunOutput { report, svg: Some(svg) })
}

fn render(built: &Built, a: &dccp::expr::Assignment) -> String {
    let mut c = Canvas::new(420.0, 420.0, -1.0, 11.0, -1.0, 11.0);
    for (center, r) in &built.obstacles {
        c.circle(center[0], center[1], *r, "#d62728", "#ff9896aa");
    }
    let pts: Vec<(f64, f64)> = built
        .points
        .iter()
        .filter_map(|p| a.get(p).map(|v| (v[(0, 0)], v[(1, 0)])))
        .collect();
    c.polyline(&pts, "#1f77b4", 2.0);
    c.dot(START[0], START[1], 4.0, "#2ca02c");
    c.dot(END[0], END[1], 4.0, "#2ca02c");
    c.finish()
}
