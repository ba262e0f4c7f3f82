//! Phase retrieval: recover a complex signal from the magnitudes of inner
//! products with known measurement vectors. Complex quantities are expanded
//! into real and imaginary parts: the signal is a `2 x n` variable, each
//! measurement introduces a 2-vector `z_k` with `z_k` an affine function of
//! the signal and `|z_k|_2 == y_k` (nonconvex after splitting).
//!
//! Data: signal and measurement entries i.i.d. standard Gaussian in both
//! real and imaginary parts.

use super::{gaussian_matrix, ExampleSpec, ExampleError, RunOutput};
use crate::report::base_report;
use crate::svg::Canvas;
use dccp::ccp::solve_dccp;
use dccp::expr::{self as ex, Variable};
use dccp::transform::Problem;
use nalgebra::DMatrix;
use rand::Rng;
use std::time::Instant;

pub fn default_spec() -> ExampleSpec {
    let mut spec = ExampleSpec::new("phase-retrieval", 0, &[("n", 128.0), ("m", 384.0)]);
    spec.ccp.restarts = 5;
    spec
}

pub struct Built {
    pub problem: Problem,
    pub x: Variable,
    pub z: Vec<Variable>,
    /// True signal, rows (re, im).
    pub truth: DMatrix<f64>,
    /// Measurement vectors, rows (re, im) per column k.
    pub a_re: DMatrix<f64>,
    pub a_im: DMatrix<f64>,
    pub magnitudes: Vec<f64>,
}

pub fn build(spec: &ExampleSpec) -> Built {
    let n = spec.param_usize("n");
    let m = spec.param_usize("m");
    let mut rng = spec.data_rng();

    let truth = gaussian_matrix(&mut rng, 2, n);
    let a_re = gaussian_matrix(&mut rng, n, m);
    let a_im = gaussian_matrix(&mut rng, n, m);

    // |x* a_k| via the real expansion used in the model below.
    let magnitudes: Vec<f64> = (0..m)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let (xr, xi) = (truth[(0, i)], truth[(1, i)]);
                let (ar, ai) = (a_re[(i, k)], a_im[(i, k)]);
                re += xr * ar + xi * ai;
                im += xi * ar - xr * ai;
            }
            (re * re + im * im).sqrt()
        })
        .collect();

    let x = Variable::new("x", 2, n);
    let rot = ex::constant_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    let mut constraints = Vec::new();
    let mut z_vars = Vec::new();
    for k in 0..m {
        let z = Variable::new(format!("z{k}"), 2, 1);
        let ar = ex::constant_matrix(DMatrix::from_column_slice(n, 1, a_re.column(k).as_slice()));
        let ai = ex::constant_matrix(DMatrix::from_column_slice(n, 1, a_im.column(k).as_slice()));
        constraints.push(ex::norm2(&z.expr()).eq_to(magnitudes[k]));
        constraints.push(
            z.expr()
                .eq_to(x.expr() * ar + rot.clone() * (x.expr() * ai)),
        );
        z_vars.push(z);
    }

    let problem = Problem::minimize(ex::constant(0.0)).subject_to(constraints);
    Built { problem, x, z: z_vars, truth, a_re, a_im, magnitudes }
}

/// `| |x* a_k| - y_k |` at the recovered signal, for every k.
pub fn magnitude_residuals(built: &Built, x: &DMatrix<f64>) -> Vec<f64> {
    let (n, m) = (built.a_re.nrows(), built.a_re.ncols());
    (0..m)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let (xr, xi) = (x[(0, i)], x[(1, i)]);
                let (ar, ai) = (built.a_re[(i, k)], built.a_im[(i, k)]);
                re += xr * ar + xi * ai;
                im += xi * ar - xr * ai;
            }
            ((re * re + im * im).sqrt() - built.magnitudes[k]).abs()
        })
        .collect()
}

/// Relative distance to the truth up to a global phase.
pub fn phase_aligned_error(truth: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let n = truth.ncols();
    // inner = <x, truth> over C^n with vectors (re, im) per column.
    let (mut ip_re, mut ip_im) = (0.0, 0.0);
    let (mut nx, mut nt) = (0.0, 0.0);
    for i in 0..n {
        let (ur, ui) = (x[(0, i)], x[(1, i)]);
        let (vr, vi) = (truth[(0, i)], truth[(1, i)]);
        ip_re += ur * vr + ui * vi;
        ip_im += ui * vr - ur * vi;
        nx += ur * ur + ui * ui;
        nt += vr * vr + vi * vi;
    }
    let ip = (ip_re * ip_re + ip_im * ip_im).sqrt();
    ((nx + nt - 2.0 * ip).max(0.0) / nt).sqrt()
}

pub fn run(spec: &ExampleSpec) -> Result<RunOutput, ExampleError> {
    let built = build(spec);
    // Seeded warm values for the magnitude variables, as in the source
    // formulation (uniform in [0,1)); the signal itself is initialized by
    // the generic randomized procedure.
    let mut rng = built_init_rng(spec);
    for z in &built.z {
        z.set_initial(DMatrix::from_fn(2, 1, |_, _| rng.random::<f64>()));
    }
    let start = Instant::now();
    let result = solve_dccp(&built.problem, &spec.ccp);
    for z in &built.z {
        z.clear_initial();
    }
    let result = result?;
    let wall = start.elapsed();

    let mut report = base_report("phase-retrieval", spec, &built.problem, &result, wall);
    report.feasibility.insert(
        "magnitudes".into(),
        result
            .assignment
            .get(&built.x)
            .map(|x| magnitude_residuals(&built, x).into_iter().fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY),
    );
    if let Some(x) = result.assignment.get(&built.x) {
        report
            .metrics
            .insert("phase_aligned_error".into(), phase_aligned_error(&built.truth, x));
    }

    let svg = result.assignment.get(&built.x).map(|x| render(&built, x));
    Ok(RunOutput { report, svg })
}

fn built_init_rng(spec: &ExampleSpec) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(u64::MAX - 1);
    rng
}

fn render(built: &Built, x: &DMatrix<f64>) -> String {
    // Recovered vs true entries after phase alignment (re and im series).
    let n = built.truth.ncols();
    let (mut ip_re, mut ip_im) = (0.0, 0.0);
    for i in 0..n {
        let (ur, ui) = (x[(0, i)], x[(1, i)]);
        let (vr, vi) = (built.truth[(0, i)], built.truth[(1, i)]);
        ip_re += ur * vr + ui * vi;
        ip_im += ui * vr - ur * vi;
    }
    let phi = ip_im.atan2(ip_re);
    let (cos, sin) = (phi.cos(), phi.sin());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pairs = Vec::with_capacity(2 * n);
    for i in 0..n {
        // Rotate x by -phi to align with the truth.
        let (ur, ui) = (x[(0, i)], x[(1, i)]);
        let ar = cos * ur + sin * ui;
        let ai = -sin * ur + cos * ui;
        pairs.push((built.truth[(0, i)], ar));
        pairs.push((built.truth[(1, i)], ai));
        for v in [built.truth[(0, i)], built.truth[(1, i)], ar, ai] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let mut c = Canvas::new(420.0, 420.0, lo - 0.3, hi + 0.3, lo - 0.3, hi + 0.3);
    c.line(lo, lo, hi, hi, "#999", 1.0);
    for (t, r) in pairs {
        c.dot(t, r, 2.5, "#1f77b4");
    }
    c.text(lo, hi, "recovered vs true (phase-aligned)");
    c.finish()
}
