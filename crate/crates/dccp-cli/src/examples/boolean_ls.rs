//! Boolean least squares: maximum-likelihood detection of a +-1 signal from
//! `y = A s + v`, posed as `minimize |y - A x|_2 s.t. square(x) == 1`.
//!
//! Data: `A` i.i.d. standard Gaussian, `s` uniform on {-1,1}^n, noise
//! variance `sigma^2 = n / snr`. The channel `(A, s)` depends on the seed
//! only, the noise also on the SNR, matching the sweep protocol where one
//! instance is re-measured at several SNR levels.

use super::{gaussian_matrix, ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::Problem;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    let mut spec = ExampleSpec::new("boolean-ls", 0, &[("n", 100.0), ("m", 100.0), ("snr", 17.0)]);
    spec.ccp.restarts = 3;
    spec
}

pub struct Built {
    pub problem: Problem,
    pub x: Variable,
    pub signal: Vec<f64>,
    pub a: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let m = spec.param_usize("m");
    let snr = spec.param("snr");
    let mut rng = spec.data_rng();

    let a = gaussian_matrix(&mut rng, m, n);
    let signal: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let sigma = (n as f64 / snr).sqrt();
    // Noise seeded by (seed, snr) so a sweep re-measures the same channel.
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ snr.to_bits());
    let s_vec = DMatrix::from_column_slice(n, 1, &signal);
    let mut y = &a * &s_vec;
    for v in y.iter_mut() {
        *v += sigma * noise_rng.sample::<f64, _>(StandardNormal);
    }

    let x = Variable::vector("x", n);
    let residual = ex::constant_matrix(y.clone()) - ex::constant_matrix(a.clone()) * x.expr();
    let problem = Problem::minimize(ex::norm2(&residual))
        .subject_to([ex::square(&x.expr()).eq_to(1.0)]);
    Built { problem, x, signal, a, y }
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp)?;
    let wall = start.elapsed();

    let mut report = base_report("boolean-ls", spec, &built.problem, &result, wall);
    report.feasibility.insert(
        "square_equals_one".into(),
        built.problem.constraints()[0].violation(&result.assignment).unwrap_or(f64::INFINITY),
    );

    if let Some(xv) = result.assignment.get(&built.x) {
        let rounded: Vec<f64> =
            xv.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let errors = rounded.iter().zip(&built.signal).filter(|(a, b)| a != b).count();
        report.metrics.insert("bit_error_rate".into(), errors as f64 / built.signal.len() as f64);
        let max_dev = xv.iter().map(|&v| (v.abs() - 1.0).abs()).fold(0.0, f64::max);
        report.metrics.insert("max_magnitude_deviation".into(), max_dev);
    }
    Ok(RunOutput { report, svg: None })
}

/// Exhaustive maximum-likelihood oracle over all 2^n sign vectors; the
/// objective increments are applied by single-coordinate flips in Gray-code
/// order. Usable up to n around 20.
pub fn exhaustive_oracle(a: &DMatrix<f64>, y: &DMatrix<f64>) -> (Vec<f64>, f64) {
    let n = a.ncols();
    assert!(n <= 24, "exhaustive search is exponential");
    let mut x = vec![1.0f64; n];
    let mut ax = a * DMatrix::from_element(n, 1, 1.0);
    let norm = |r: &DMatrix<f64>| -> f64 { r.iter().map(|v| v * v).sum::<f64>().sqrt() };
    let mut best = norm(&(&ax - y));
    let mut best_x = x.clone();
    let total = 1usize << n;
    for k in 1..total {
        // Gray code: bit that flips between k-1 and k.
        let bit = (k ^ (k >> 1)) ^ ((k - 1) ^ ((k - 1) >> 1));
        let j = bit.trailing_zeros() as usize;
        let delta = -2.0 * x[j];
        x[j] = -x[j];
        for i in 0..a.nrows() {
            ax[(i, 0)] += delta * a[(i, j)];
        }
        let obj = norm(&(&ax - y));
        if obj < best {
            best = obj;
            best_x = x.clone();
        }
    }
    (best_x, best)
}
