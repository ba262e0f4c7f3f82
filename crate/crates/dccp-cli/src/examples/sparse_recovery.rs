//! Sparse nonnegative recovery from underdetermined measurements: minimize
//! the sum of square roots of the entries subject to `A x = y`. The
//! nonnegativity of `x` is implicit in the objective's domain, which the
//! domain-restricted linearization turns into hard constraints. The convex
//! l1 baseline (minimize sum of entries with explicit `x >= 0`) is solved
//! alongside for comparison.
//!
//! Data: `A` i.i.d. standard Gaussian, support uniform, nonzero values
//! |N(0, 100)|, `y = A x0`.

use super::{gaussian_matrix, ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use crate::svg::Canvas;
use dccp::ccp::solve_dccp;
use dccp::cone::solve_dcp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::Problem;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    ExampleSpec::new(
        "sparse-recovery",
        0,
        &[("n", 100.0), ("m", 70.0), ("cardinality", 35.0)],
    )
}

pub struct Built {
    pub problem: Problem,
    pub x: Variable,
    pub truth: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let m = spec.param_usize("m");
    let card = spec.param_usize("cardinality");
    let mut rng = spec.data_rng();

    let a = gaussian_matrix(&mut rng, m, n);
    let mut support: Vec<usize> = (0..n).collect();
    support.shuffle(&mut rng);
    let mut truth = DMatrix::zeros(n, 1);
    for &i in support.iter().take(card) {
        truth[(i, 0)] = (10.0 * rng.sample::<f64, _>(StandardNormal)).abs();
    }
    let y = &a * &truth;

    let x = Variable::vector("x", n);
    let problem = Problem::minimize(ex::sum(&ex::sqrt(&x.expr()))).subject_to([
        (ex::constant_matrix(a.clone()) * x.expr()).eq_to(ex::constant_matrix(y.clone())),
    ]);
    Built { problem, x, truth, a, y }
}

/// Convex baseline: minimize the entry sum over `A x = y`, `x >= 0`.
pub fn l1_baseline(built: &Built) -> Option<DMatrix<f64>> {
    let n = built.truth.nrows();
    let x = Variable::vector("x_l1", n);
    let p = Problem::minimize(ex::sum(&x.expr())).subject_to([
        (ex::constant_matrix(built.a.clone()) * x.expr())
            .eq_to(ex::constant_matrix(built.y.clone())),
        x.expr().ge(ex::zeros(n, 1)),
    ]);
    solve_dcp(&p, 1e-8, 100).ok().map(|sol| sol.assignment.get(&x).unwrap().clone())
}

pub fn relative_error(x: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let num: f64 = (x - truth).iter().map(|v| v * v).sum::<f64>().sqrt();
    let den: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    // The source formulation starts from the all-ones point.
    let n = built.truth.nrows();
    built.x.set_initial(DMatrix::from_element(n, 1, 1.0));
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp);
    built.x.clear_initial();
    let result = result?;
    let wall = start.elapsed();

    let mut report = base_report("sparse-recovery", spec, &built.problem, &result, wall);
    report.feasibility.insert(
        "measurements".into(),
        built.problem.constraints()[0].violation(&result.assignment).unwrap_or(f64::INFINITY),
    );

    let sqrt_err = result
        .assignment
        .get(&built.x)
        .map(|x| relative_error(x, &built.truth))
        .unwrap_or(f64::INFINITY);
    report.metrics.insert("sqrt_relative_error".into(), sqrt_err);
    report.metrics.insert("sqrt_success".into(), f64::from(sqrt_err < 0.01));

    if let Some(l1) = l1_baseline(&built) {
        let e = relative_error(&l1, &built.truth);
        report.metrics.insert("l1_relative_error".into(), e);
        report.metrics.insert("l1_success".into(), f64::from(e < 0.01));
    }

    let svg = result.assignment.get(&built.x).map(|x| render(x, &built.truth));
    Ok(RunOutput { report, svg })
}

fn render(x: &DMatrix<f64>, truth: &DMatrix<f64>) -> String {
    let hi = truth.iter().chain(x.iter()).fold(1.0f64, |m, v| m.max(*v)) * 1.05;
    let mut c = Canvas::new(420.0, 420.0, -0.05 * hi, hi, -0.05 * hi, hi);
    c.line(0.0, 0.0, hi, hi, "#999", 1.0);
    for i in 0..truth.nrows() {
        c.dot(truth[(i, 0)], x[(i, 0)], 3.0, "#1f77b4");
    }
    c.text(hi * 0.05, hi * 0.95, "recovered vs true entries");
    c.finish()
}
