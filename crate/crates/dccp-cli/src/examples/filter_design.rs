//! Lowpass magnitude filter design: find impulse-response coefficients
//! whose frequency-response magnitude stays inside passband limits while
//! minimizing the stopband bound `U_stop`. The passband lower bounds
//! `|H(w_l)| >= L_pass` are the nonconvex constraints.
//!
//! Frequencies are `w_l = pi l / N`, `l = 0..N-1`; passband is
//! `l < l_pass`, transition `l_pass <= l < l_stop`, stopband `l >= l_stop`.

use super::{ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use crate::svg::curve_plot;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::Problem;
use nalgebra::DMatrix;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    let mut spec = ExampleSpec::new(
        "filter-design",
        0,
        &[
            ("n", 10.0),
            ("grid", 100.0),
            ("l_pass", 20.0),
            ("l_stop", 30.0),
            ("pass_lower", 0.9),
            ("pass_upper", 1.1),
        ],
    );
    spec.ccp.restarts = 3;
    spec
}

/// Real/imaginary response matrix at frequency `w`: row 0 is cos(w k),
/// row 1 is -sin(w k), k = 1..=n, so `E h = (Re H(w), Im H(w))`.
pub fn response_matrix(w: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2, n, |r, k| {
        let kw = w * (k + 1) as f64;
        if r == 0 {
            kw.cos()
        } else {
            -kw.sin()
        }
    })
}

pub struct Built {
    pub problem: Problem,
    pub h: Variable,
    pub u_stop: Variable,
    pub omegas: Vec<f64>,
    pub l_pass: usize,
    pub l_stop: usize,
    pub pass_lower: f64,
    pub pass_upper: f64,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let grid = spec.param_usize("grid");
    let l_pass = spec.param_usize("l_pass");
    let l_stop = spec.param_usize("l_stop");
    let pass_lower = spec.param("pass_lower");
    let pass_upper = spec.param("pass_upper");

    let omegas: Vec<f64> = (0..grid)
        .map(|l| std::f64::consts::PI * l as f64 / (grid - 1) as f64)
        .collect();

    let h = Variable::vector("h", n);
    let u_stop = Variable::scalar("U_stop");

    let mut constraints = Vec::new();
    for (l, &w) in omegas.iter().enumerate() {
        let mag = ex::norm2(&(ex::constant_matrix(response_matrix(w, n)) * h.expr()));
        if l < l_pass {
            constraints.push(mag.clone().ge(pass_lower));
        }
        if l < l_stop {
            constraints.push(mag.le(pass_upper));
        } else {
            constraints.push(mag.le(u_stop.expr()));
        }
    }

    Built {
        problem: Problem::minimize(u_stop.expr()).subject_to(constraints),
        h,
        u_stop,
        omegas,
        l_pass,
        l_stop,
        pass_lower,
        pass_upper,
    }
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp)?;
    let wall = start.elapsed();

    let mut report = base_report("filter-design", spec, &built.problem, &result, wall);

    // Family-wise violations recomputed from the magnitude response.
    let n = built.h.shape().rows();
    let hv = result.assignment.get(&built.h).cloned();
    let mags: Vec<f64> = match &hv {
        Some(h) => built
            .omegas
            .iter()
            .map(|&w| {
                let e = response_matrix(w, n) * h;
                (e[(0, 0)].powi(2) + e[(1, 0)].powi(2)).sqrt()
            })
            .collect(),
        None => Vec::new(),
    };
    let u_stop = report.final_objective.unwrap_or(f64::NAN);
    let mut pass_viol = 0.0f64;
    let mut stop_viol = 0.0f64;
    for (l, &m) in mags.iter().enumerate() {
        if l < built.l_pass {
            pass_viol = pass_viol.max(built.pass_lower - m).max(m - built.pass_upper);
        } else if l < built.l_stop {
            pass_viol = pass_viol.max(m - built.pass_upper);
        } else {
            stop_viol = stop_viol.max(m - u_stop);
        }
    }
    report.feasibility.insert("passband".into(), pass_viol.max(0.0));
    report.feasibility.insert("stopband".into(), stop_viol.max(0.0));
    report.metrics.insert("u_stop".into(), u_stop);
    report
        .metrics
        .insert("stopband_attenuation_db".into(), -20.0 * u_stop.log10());

    let svg = (!mags.is_empty()).then(|| {
        let pts: Vec<(f64, f64)> =
            built.omegas.iter().zip(&mags).map(|(&w, &m)| (w, m)).collect();
        curve_plot(
            "magnitude response",
            &[("|H|", "#1f77b4", pts)],
            &[
                (built.pass_lower, "#2ca02c"),
                (built.pass_upper, "#2ca02c"),
                (u_stop, "#d62728"),
            ],
        )
    });
    Ok(RunOutput { report, svg })
}
