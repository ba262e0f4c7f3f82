//! Sparse singular vectors: minimize (or maximize) `|A x|_2` over the
//! nonconvex set `|x|_2 = 1`, `|x|_1 <= mu`, where `mu` in [1, sqrt(n)]
//! controls sparsity.
//!
//! Data: `A` with i.i.d. standard Gaussian entries.

use super::{gaussian_matrix, ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::Problem;
use nalgebra::DMatrix;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    let mut spec = ExampleSpec::new(
        "sparse-singular-vectors",
        0,
        &[("n", 100.0), ("mu", 3.0), ("maximize", 0.0)],
    );
    spec.ccp.restarts = 3;
    spec
}

pub struct Built {
    pub problem: Problem,
    pub x: Variable,
    pub a: DMatrix<f64>,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let mu = spec.param("mu");
    let maximize = spec.param("maximize") != 0.0;
    let mut rng = spec.data_rng();

    let a = gaussian_matrix(&mut rng, n, n);
    let x = Variable::vector("x", n);
    let objective = ex::norm2(&(ex::constant_matrix(a.clone()) * x.expr()));
    let constraints = [
        ex::norm2(&x.expr()).eq_to(1.0),
        ex::norm1(&x.expr()).le(mu),
    ];
    let problem = if maximize {
        Problem::maximize(objective).subject_to(constraints)
    } else {
        Problem::minimize(objective).subject_to(constraints)
    };
    Built { problem, x, a }
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp)?;
    let wall = start.elapsed();

    let mut report =
        base_report("sparse-singular-vectors", spec, &built.problem, &result, wall);
    for (i, name) in ["unit_norm", "l1_bound"].iter().enumerate() {
        report.feasibility.insert(
            (*name).into(),
            built.problem.constraints()[i].violation(&result.assignment).unwrap_or(f64::INFINITY),
        );
    }

    if let Some(x) = result.assignment.get(&built.x) {
        let sigma: f64 = (&built.a * x).iter().map(|v| v * v).sum::<f64>().sqrt();
        let card = x.iter().filter(|v| v.abs() > 1e-3).count();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        report.metrics.insert("sigma".into(), sigma);
        report.metrics.insert("cardinality".into(), card as f64);
        report.metrics.insert("l1_norm".into(), l1);
    }
    // Reference extreme singular values of the instance.
    let svd = built.a.clone().svd(false, false);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    report.metrics.insert("sigma_min".into(), smin);
    report.metrics.insert("sigma_max".into(), smax);

    Ok(RunOutput { report, svg: None })
}
