//! Pack `n` circles with given radii into the smallest enclosing square:
//! minimize the largest `|c_i|_inf + r_i` subject to pairwise non-overlap
//! `|c_i - c_j|_2 >= r_i + r_j` (nonconvex).
//!
//! Radii are seeded draws from U(0.3, 1.0); the source problem fixes n = 14
//! but publishes no radii.

use super::{ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use crate::svg::Canvas;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::{Constraint, Problem};
use rand::Rng;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    let mut spec = ExampleSpec::new("circle-packing", 0, &[("n", 14.0)]);
    spec.ccp.restarts = 5;
    spec
}

pub struct Built {
    pub problem: Problem,
    pub centers: Vec<Variable>,
    pub radii: Vec<f64>,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let mut rng = spec.data_rng();
    let radii: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.0)).collect();

    let centers: Vec<Variable> =
        (0..n).map(|i| Variable::new(format!("c{i}"), 2, 1)).collect();

    let per_circle: Vec<_> = centers
        .iter()
        .zip(&radii)
        .map(|(c, &r)| ex::norm_inf(&c.expr()) + r)
        .collect();
    let objective = ex::max_entries(&ex::vstack(&per_circle));

    let mut constraints = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            constraints.push(
                ex::norm2(&(centers[i].expr() - centers[j].expr())).ge(radii[i] + radii[j]),
            );
        }
    }
    Built { problem: Problem::minimize(objective).subject_to(constraints), centers, radii }
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp)?;
    let wall = start.elapsed();

    let mut report = base_report("circle-packing", spec, &built.problem, &result, wall);

    let viol = built
        .problem
        .constraints()
        .iter()
        .map(|c: &Constraint| c.violation(&result.assignment).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    report.feasibility.insert("pairwise_distance".into(), viol);

    let l = report.final_objective.unwrap_or(f64::NAN);
    let area: f64 = built.radii.iter().map(|r| std::f64::consts::PI * r * r).sum();
    let coverage = area / (4.0 * l * l);
    report.metrics.insert("half_side".into(), l);
    report.metrics.insert("coverage_fraction".into(), coverage);

    let svg = render(&built, &result.assignment, l);
    Ok(RunOutput { report, svg: Some(svg) })
}

fn render(built: &Built, a: &dccp::expr::Assignment, l: f64) -> String {
    let bound = if l.is_finite() { l * 1.1 } else { 10.0 };
    let mut c = Canvas::new(420.0, 420.0, -bound, bound, -bound, bound);
    c.rect(-l, -l, l, l, "#333");
    for (var, &r) in built.centers.iter().zip(&built.radii) {
        if let Some(v) = a.get(var) {
            c.circle(v[(0, 0)], v[(1, 0)], r, "#1f77b4", "#aec7e855");
        }
    }
    c.finish()
}
