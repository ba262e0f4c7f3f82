//! Embedded cone solver: a primal-dual interior-point method on the
//! homogeneous self-dual embedding, with Nesterov-Todd scaling, Mehrotra
//! predictor-corrector steps, and sparse LDL^T KKT solves with static
//! regularization and iterative refinement. Infeasible and unbounded
//! problems produce certificates. Fully deterministic: fixed ordering,
//! no randomized pivoting.

mod cones;
mod equil;
mod ldl;

use crate::cone::{ConeBlock, ConeProgram};
use crate::sparse::{dot, norm2, norm_inf};
use cones::Scaling;
pub use cones::{dist_to_cone as cone_distance, dist_to_dual_cone as dual_cone_distance};
use ldl::{rcm_order, LdlFactor};
use serde::Serialize;
use thiserror::Error;

/// Static diagonal regularization of the KKT matrix.
const STATIC_REG: f64 = 5e-8;
/// Iterative refinement rounds per KKT solve.
const IR_ROUNDS: usize = 3;
/// Fraction of the distance to the cone boundary taken each step.
const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

/// Scaled residuals certifying solution quality.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Solver output. On `Optimal`, `x`/`z`/`s` are the scaled primal, dual, and
/// slack. On `Infeasible`, `z` is a Farkas dual ray normalized to `b'z = -1`.
/// On `Unbounded`, `x` is an improving ray normalized to `c'x = -1`.
#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-8, max_iter: 100, verbose: false }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("vector has dimension {got}, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
}

/// Solve a cone program to the requested KKT tolerance.
pub fn solve_cone(cp: &ConeProgram, tol: f64, max_iter: usize) -> ConeSolution {
    solve_cone_with(cp, &SolverSettings { tol, max_iter, ..Default::default() })
}

/// The three scaled KKT residuals of a claimed primal/dual pair:
/// cone-distance primal feasibility, dual feasibility (stationarity plus
/// dual-cone distance), and relative duality gap.
pub fn kkt_residuals(
    cp: &ConeProgram,
    primal: &[f64],
    dual: &[f64],
) -> Result<Residuals, SolverError> {
    if primal.len() != cp.nvars() {
        return Err(SolverError::DimensionMismatch { got: primal.len(), want: cp.nvars() });
    }
    if dual.len() != cp.nrows() {
        return Err(SolverError::DimensionMismatch { got: dual.len(), want: cp.nrows() });
    }
    let blocks = block_offsets(&cp.cones);

    // Primal: distance of b - A v from the cone.
    let mut slack = cp.b.clone();
    cp.a.axpy(-1.0, primal, &mut slack);
    let mut dist2 = 0.0;
    for (block, off) in &blocks {
        let d = cones::dist_to_cone(block, &slack[*off..off + block.dim()]);
        dist2 += d * d;
    }
    let primal_res = dist2.sqrt() / (1.0 + norm2(&cp.b));

    // Dual: stationarity plus distance from the dual cone.
    let mut stat = cp.c.clone();
    cp.a.axpy_t(1.0, dual, &mut stat);
    let stat_res = norm2(&stat) / (1.0 + norm2(&cp.c));
    let mut ddist2 = 0.0;
    for (block, off) in &blocks {
        let d = cones::dist_to_dual_cone(block, &dual[*off..off + block.dim()]);
        ddist2 += d * d;
    }
    let dual_res = stat_res.max(ddist2.sqrt() / (1.0 + norm2(dual)));

    let pobj = dot(&cp.c, primal);
    let dobj = -dot(&cp.b, dual);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));

    Ok(Residuals { primal: primal_res, dual: dual_res, gap })
}

fn block_offsets(cones: &[ConeBlock]) -> Vec<(ConeBlock, usize)> {
    let mut out = Vec::with_capacity(cones.len());
    let mut off = 0;
    for c in cones {
        out.push((*c, off));
        off += c.dim();
    }
    out
}

pub fn solve_cone_with(cp_input: &ConeProgram, settings: &SolverSettings) -> ConeSolution {
    cp_input.validate();
    let n = cp_input.nvars();
    let m = cp_input.nrows();
    let tol = settings.tol;

    if m == 0 {
        // No constraints: optimal iff the cost is zero, else unbounded.
        let cnorm = norm2(&cp_input.c);
        return if cnorm == 0.0 {
            ConeSolution {
                status: SolveStatus::Optimal,
                x: vec![0.0; n],
                z: Vec::new(),
                s: Vec::new(),
                objective: 0.0,
                residuals: Residuals { primal: 0.0, dual: 0.0, gap: 0.0 },
                iterations: 0,
            }
        } else {
            let ray: Vec<f64> = cp_input.c.iter().map(|&v| -v / (cnorm * cnorm)).collect();
            ConeSolution {
                status: SolveStatus::Unbounded,
                x: ray,
                z: Vec::new(),
                s: Vec::new(),
                objective: f64::NEG_INFINITY,
                residuals: Residuals { primal: 0.0, dual: 0.0, gap: 0.0 },
                iterations: 0,
            }
        };
    }

    // All Newton computations run on Ruiz-equilibrated data; optimality and
    // certificate tests are evaluated on the original data.
    let eq = equil::equilibrate(cp_input);
    let cp = &eq.scaled;
    let blocks = block_offsets(&cp.cones);
    let nu: usize = cp.cones.iter().map(cones::degree).sum();
    let norm_b = norm2(&cp_input.b);
    let norm_c = norm2(&cp_input.c);

    // Fixed fill-reducing ordering from the (value-independent) KKT pattern.
    let kkt_n = n + m;
    let pattern = kkt_pattern(cp, &blocks, n);
    let perm = rcm_order(kkt_n, &pattern);
    let mut diag_sign = vec![1i8; kkt_n];
    for s in diag_sign.iter_mut().take(kkt_n).skip(n) {
        *s = -1;
    }

    // Homogeneous self-dual state.
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; m];
    let mut s = vec![0.0; m];
    for (block, off) in &blocks {
        cones::identity(block, &mut s[*off..off + block.dim()]);
        cones::identity(block, &mut z[*off..off + block.dim()]);
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut best: Option<(f64, ConeSolution)> = None;

    for iter in 0..settings.max_iter {
        // Residuals of the HSD system.
        let mut rx = cp.c.iter().map(|&v| v * tau).collect::<Vec<_>>();
        cp.a.axpy_t(1.0, &z, &mut rx);
        let mut rz = s.clone();
        cp.a.axpy(1.0, &x, &mut rz);
        for i in 0..m {
            rz[i] -= cp.b[i] * tau;
        }
        let cx = dot(&cp.c, &x);
        let bz = dot(&cp.b, &z);
        let rtau = kappa + cx + bz;

        // Optimality on the tau-normalized iterate in original coordinates.
        let inv_tau = 1.0 / tau;
        let xh: Vec<f64> = eq.unscale_x(&x).iter().map(|v| v * inv_tau).collect();
        let zh: Vec<f64> = eq.unscale_z(&z).iter().map(|v| v * inv_tau).collect();
        let sh: Vec<f64> = eq.unscale_s(&s).iter().map(|v| v * inv_tau).collect();
        let mut paff = cp_input.b.clone();
        cp_input.a.axpy(-1.0, &xh, &mut paff);
        for i in 0..m {
            paff[i] -= sh[i];
        }
        let pres = norm2(&paff) / (1.0 + norm_b);
        let mut daff = cp_input.c.clone();
        cp_input.a.axpy_t(1.0, &zh, &mut daff);
        let dres = norm2(&daff) / (1.0 + norm_c);
        let pobj = dot(&cp_input.c, &xh);
        let dobj = -dot(&cp_input.b, &zh);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));
        let residuals = Residuals { primal: pres, dual: dres, gap: relgap };

        if settings.verbose {
            eprintln!(
                "iter {iter:3}  pres {pres:9.2e}  dres {dres:9.2e}  gap {relgap:9.2e}  tau {tau:9.2e}  kappa {kappa:9.2e}"
            );
        }

        if !residuals.max().is_finite() {
            // Numerical breakdown; fall back to the best iterate seen.
            break;
        }
        if residuals.max() <= tol {
            return ConeSolution {
                status: SolveStatus::Optimal,
                x: xh,
                z: zh,
                s: sh,
                objective: pobj,
                residuals,
                iterations: iter,
            };
        }
        match &mut best {
            Some((score, sol)) if *score > residuals.max() => {
                *score = residuals.max();
                *sol = ConeSolution {
                    status: SolveStatus::MaxIter,
                    x: xh.clone(),
                    z: zh.clone(),
                    s: sh.clone(),
                    objective: pobj,
                    residuals,
                    iterations: iter,
                };
            }
            None => {
                best = Some((
                    residuals.max(),
                    ConeSolution {
                        status: SolveStatus::MaxIter,
                        x: xh.clone(),
                        z: zh.clone(),
                        s: sh.clone(),
                        objective: pobj,
                        residuals,
                        iterations: iter,
                    },
                ));
            }
            _ => {}
        }

        // Infeasibility certificates, validated on the original data.
        let zu = eq.unscale_z(&z);
        let bz_u = dot(&cp_input.b, &zu);
        if bz_u < -1e-12 {
            let scale = -1.0 / bz_u;
            let y: Vec<f64> = zu.iter().map(|v| v * scale).collect();
            let mut at_y = vec![0.0; n];
            cp_input.a.axpy_t(1.0, &y, &mut at_y);
            if norm2(&at_y) / (1.0 + norm_c) <= tol {
                return ConeSolution {
                    status: SolveStatus::Infeasible,
                    x: vec![0.0; n],
                    z: y,
                    s: vec![0.0; m],
                    objective: f64::INFINITY,
                    residuals,
                    iterations: iter,
                };
            }
        }
        let xu = eq.unscale_x(&x);
        let cx_u = dot(&cp_input.c, &xu);
        if cx_u < -1e-12 {
            let scale = -1.0 / cx_u;
            let xr: Vec<f64> = xu.iter().map(|v| v * scale).collect();
            let su = eq.unscale_s(&s);
            let sr: Vec<f64> = su.iter().map(|v| v * scale).collect();
            let mut ray_res = sr.clone();
            cp_input.a.axpy(1.0, &xr, &mut ray_res);
            if norm2(&ray_res) / (1.0 + norm_b) <= tol {
                return ConeSolution {
                    status: SolveStatus::Unbounded,
                    x: xr,
                    z: vec![0.0; m],
                    s: sr,
                    objective: f64::NEG_INFINITY,
                    residuals,
                    iterations: iter,
                };
            }
        }

        // Nesterov-Todd scalings and the scaled complementarity point.
        let scalings: Vec<Scaling> = blocks
            .iter()
            .map(|(block, off)| Scaling::compute(block, &s[*off..off + block.dim()], &z[*off..off + block.dim()]))
            .collect();
        let mut lambda = vec![0.0; m];
        for ((block, off), sc) in blocks.iter().zip(&scalings) {
            let lam = sc.lambda(&z[*off..off + block.dim()]);
            lambda[*off..off + block.dim()].copy_from_slice(&lam);
            let _ = block;
        }
        let mu = (dot(&s, &z) + tau * kappa) / (nu as f64 + 1.0);

        // Assemble and factor the KKT matrix.
        let factor = factor_kkt(cp, &blocks, &scalings, n, &perm, &diag_sign);
        let solve2 = |rx_in: &[f64], rz_in: &[f64]| -> (Vec<f64>, Vec<f64>) {
            solve_kkt(&factor, cp, &blocks, &scalings, n, rx_in, rz_in)
        };

        let (x1, z1) = solve2(&cp.c.iter().map(|v| -v).collect::<Vec<_>>(), &cp.b);
        let denom = dot(&cp.c, &x1) + dot(&cp.b, &z1) - kappa / tau;

        // Affine (predictor) direction: drive residuals and complementarity
        // to zero.
        let mut ds_comp = vec![0.0; m];
        for (block, off) in &blocks {
            let r = *off..off + block.dim();
            let mut ll = vec![0.0; block.dim()];
            cones::jordan_mul(block, &lambda[r.clone()], &lambda[r.clone()], &mut ll);
            for (t, v) in ll.into_iter().enumerate() {
                ds_comp[off + t] = -v;
            }
        }
        let dkappa_comp = -tau * kappa;
        let (_dx_a, dz_a, ds_a, dtau_a, dkappa_a) = newton_direction(
            cp, &blocks, &scalings, &lambda, &rx, &rz, rtau, 1.0, &ds_comp, dkappa_comp, tau,
            kappa, &x1, &z1, denom, &solve2,
        );

        let alpha_a = step_length(&blocks, &s, &z, &ds_a, &dz_a, tau, kappa, dtau_a, dkappa_a);

        // Centering weight from the predictor's progress.
        let mut num = dot_shift(&s, &ds_a, alpha_a, &z, &dz_a);
        num += (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkappa_a);
        let sigma = (num / (dot(&s, &z) + tau * kappa)).clamp(0.0, 1.0).powi(3);

        // Combined (corrector) direction.
        let eta = 1.0 - sigma;
        let mut ds_comb = vec![0.0; m];
        for ((block, off), sc) in blocks.iter().zip(&scalings) {
            let r = *off..off + block.dim();
            let d = block.dim();
            let mut ll = vec![0.0; d];
            cones::jordan_mul(block, &lambda[r.clone()], &lambda[r.clone()], &mut ll);
            // Mehrotra correction in scaled space.
            let mut ws = vec![0.0; d];
            sc.apply_w_inv(&ds_a[r.clone()], &mut ws);
            let mut wz = vec![0.0; d];
            sc.apply_w(&dz_a[r.clone()], &mut wz);
            let mut corr = vec![0.0; d];
            cones::jordan_mul(block, &ws, &wz, &mut corr);
            let mut e = vec![0.0; d];
            cones::identity(block, &mut e);
            for t in 0..d {
                ds_comb[off + t] = sigma * mu * e[t] - ll[t] - corr[t];
            }
        }
        let dkappa_comb = sigma * mu - tau * kappa - dtau_a * dkappa_a;
        let (dx, dz, ds, dtau, dkappa) = newton_direction(
            cp, &blocks, &scalings, &lambda, &rx, &rz, rtau, eta, &ds_comb, dkappa_comb, tau,
            kappa, &x1, &z1, denom, &solve2,
        );

        // Numerical breakdown in the KKT solve shows up as non-finite
        // directions; exit with the best iterate rather than poison the state.
        if !dtau.is_finite()
            || !dkappa.is_finite()
            || dx.iter().any(|v| !v.is_finite())
            || dz.iter().any(|v| !v.is_finite())
            || ds.iter().any(|v| !v.is_finite())
        {
            break;
        }
        let alpha = step_length(&blocks, &s, &z, &ds, &dz, tau, kappa, dtau, dkappa);
        if !alpha.is_finite() || alpha < 1e-10 {
            break;
        }
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for i in 0..m {
            z[i] += alpha * dz[i];
            s[i] += alpha * ds[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    best.map(|(_, sol)| sol).unwrap_or_else(|| ConeSolution {
        status: SolveStatus::MaxIter,
        x: vec![0.0; n],
        z: vec![0.0; m],
        s: vec![0.0; m],
        objective: f64::NAN,
        residuals: Residuals { primal: f64::INFINITY, dual: f64::INFINITY, gap: f64::INFINITY },
        iterations: 0,
    })
}

/// `(s + alpha ds)'(z + alpha dz)` without forming the shifted vectors.
fn dot_shift(s: &[f64], ds: &[f64], alpha: f64, z: &[f64], dz: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..s.len() {
        acc += (s[i] + alpha * ds[i]) * (z[i] + alpha * dz[i]);
    }
    acc
}

#[allow(clippy::too_many_arguments)]
fn newton_direction(
    cp: &ConeProgram,
    blocks: &[(ConeBlock, usize)],
    scalings: &[Scaling],
    lambda: &[f64],
    rx: &[f64],
    rz: &[f64],
    rtau: f64,
    eta: f64,
    ds_comp: &[f64],
    dkappa_comp: f64,
    tau: f64,
    kappa: f64,
    x1: &[f64],
    z1: &[f64],
    denom: f64,
    solve2: &impl Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64) {
    let n = cp.nvars();
    let m = cp.nrows();

    // W (lambda \ ds_comp), the slack contribution of the complementarity RHS.
    let mut wld = vec![0.0; m];
    for ((block, off), sc) in blocks.iter().zip(scalings) {
        let r = *off..off + block.dim();
        let d = block.dim();
        let mut q = vec![0.0; d];
        cones::jordan_div(block, &lambda[r.clone()], &ds_comp[r.clone()], &mut q);
        let mut wq = vec![0.0; d];
        sc.apply_w(&q, &mut wq);
        wld[r].copy_from_slice(&wq);
    }

    let rhs_x: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
    let rhs_z: Vec<f64> = (0..m).map(|i| -eta * rz[i] - wld[i]).collect();
    let (x2, z2) = solve2(&rhs_x, &rhs_z);

    let dtau = (-eta * rtau - dot(&cp.c, &x2) - dot(&cp.b, &z2) - dkappa_comp / tau) / denom;
    let dx: Vec<f64> = (0..n).map(|i| x2[i] + dtau * x1[i]).collect();
    let dz: Vec<f64> = (0..m).map(|i| z2[i] + dtau * z1[i]).collect();

    // ds = W(lambda \ ds_comp) - H dz, with H = W^2.
    let mut ds = vec![0.0; m];
    for ((block, off), sc) in blocks.iter().zip(scalings) {
        let r = *off..off + block.dim();
        let d = block.dim();
        let mut w1 = vec![0.0; d];
        sc.apply_w(&dz[r.clone()], &mut w1);
        let mut h_dz = vec![0.0; d];
        sc.apply_w(&w1, &mut h_dz);
        for t in 0..d {
            ds[off + t] = wld[off + t] - h_dz[t];
        }
        let _ = block;
    }
    let dkappa = (dkappa_comp - kappa * dtau) / tau;
    (dx, dz, ds, dtau, dkappa)
}

#[allow(clippy::too_many_arguments)]
fn step_length(
    blocks: &[(ConeBlock, usize)],
    s: &[f64],
    z: &[f64],
    ds: &[f64],
    dz: &[f64],
    tau: f64,
    kappa: f64,
    dtau: f64,
    dkappa: f64,
) -> f64 {
    let mut alpha = 1.0 / STEP_FRACTION;
    for (block, off) in blocks {
        let r = *off..off + block.dim();
        if let Some(a) = cones::max_step(block, &s[r.clone()], &ds[r.clone()]) {
            alpha = alpha.min(a);
        }
        if let Some(a) = cones::max_step(block, &z[r.clone()], &dz[r.clone()]) {
            alpha = alpha.min(a);
        }
    }
    if dtau < 0.0 {
        alpha = alpha.min(-tau / dtau);
    }
    if dkappa < 0.0 {
        alpha = alpha.min(-kappa / dkappa);
    }
    (STEP_FRACTION * alpha).min(1.0)
}

/// Sparsity pattern of the KKT upper triangle (value-independent).
fn kkt_pattern(cp: &ConeProgram, blocks: &[(ConeBlock, usize)], n: usize) -> Vec<(usize, usize)> {
    let mut pat = Vec::new();
    for i in 0..n + cp.nrows() {
        pat.push((i, i));
    }
    for (r, j, _) in cp.a.triplets() {
        pat.push((j, n + r));
    }
    for (block, off) in blocks {
        if let ConeBlock::SecondOrder(d) = block {
            for i in 0..*d {
                for j in i + 1..*d {
                    pat.push((n + off + i, n + off + j));
                }
            }
        }
    }
    pat
}

fn factor_kkt(
    cp: &ConeProgram,
    blocks: &[(ConeBlock, usize)],
    scalings: &[Scaling],
    n: usize,
    perm: &[usize],
    diag_sign: &[i8],
) -> LdlFactor {
    let m = cp.nrows();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        triplets.push((i, i, STATIC_REG));
    }
    for (r, j, v) in cp.a.triplets() {
        triplets.push((j, n + r, v));
    }
    // -H - delta I on the dual block.
    let mut h_triplets = Vec::new();
    for ((_block, off), sc) in blocks.iter().zip(scalings) {
        sc.h_upper_triplets(n + off, &mut h_triplets);
    }
    for (i, j, v) in h_triplets {
        triplets.push((i, j, -v));
    }
    for i in 0..m {
        triplets.push((n + i, n + i, -STATIC_REG));
    }
    LdlFactor::factor(n + m, &triplets, diag_sign, perm.to_vec())
}

/// Solve the (unregularized) KKT system with iterative refinement against
/// the regularized factorization.
fn solve_kkt(
    factor: &LdlFactor,
    cp: &ConeProgram,
    blocks: &[(ConeBlock, usize)],
    scalings: &[Scaling],
    n: usize,
    rx: &[f64],
    rz: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let m = cp.nrows();
    let mut rhs = Vec::with_capacity(n + m);
    rhs.extend_from_slice(rx);
    rhs.extend_from_slice(rz);

    let mut u = factor.solve(&rhs);
    let rhs_scale = 1.0 + norm_inf(&rhs);
    for _ in 0..IR_ROUNDS {
        let r = kkt_residual_vec(cp, blocks, scalings, n, &u, &rhs);
        if norm_inf(&r) <= 1e-14 * rhs_scale {
            break;
        }
        let du = factor.solve(&r);
        for i in 0..u.len() {
            u[i] += du[i];
        }
    }
    (u[..n].to_vec(), u[n..].to_vec())
}

/// `rhs - K0 u` where `K0 = [0 A'; A -H]`.
fn kkt_residual_vec(
    cp: &ConeProgram,
    blocks: &[(ConeBlock, usize)],
    scalings: &[Scaling],
    n: usize,
    u: &[f64],
    rhs: &[f64],
) -> Vec<f64> {
    let m = cp.nrows();
    let (ux, uz) = u.split_at(n);
    let mut out = rhs.to_vec();
    // x rows: rhs_x - A' uz
    let mut aty = vec![0.0; n];
    cp.a.axpy_t(1.0, uz, &mut aty);
    for i in 0..n {
        out[i] -= aty[i];
    }
    // z rows: rhs_z - A ux + H uz
    let mut ax = vec![0.0; m];
    cp.a.axpy(1.0, ux, &mut ax);
    for i in 0..m {
        out[n + i] -= ax[i];
    }
    for ((block, off), sc) in blocks.iter().zip(scalings) {
        let d = block.dim();
        let r = *off..off + d;
        let mut w1 = vec![0.0; d];
        sc.apply_w(&uz[r.clone()], &mut w1);
        let mut h_uz = vec![0.0; d];
        sc.apply_w(&w1, &mut h_uz);
        for t in 0..d {
            out[n + off + t] += h_uz[t];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CscMatrix;
    use std::collections::BTreeMap;

    fn program(
        c: Vec<f64>,
        rows: Vec<(Vec<f64>, f64)>,
        cones: Vec<ConeBlock>,
    ) -> ConeProgram {
        let m = rows.len();
        let n = c.len();
        let mut triplets = Vec::new();
        let mut b = Vec::new();
        for (i, (arow, bi)) in rows.into_iter().enumerate() {
            for (j, v) in arow.into_iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
            b.push(bi);
        }
        ConeProgram { c, a: CscMatrix::from_triplets(m, n, &triplets), b, cones, var_map: BTreeMap::new() }
    }

    #[test]
    fn lp_min_x_subject_to_x_ge_1() {
        // min x s.t. x >= 1:  s = b - A x = x - 1 in Nonneg.
        let cp = program(vec![1.0], vec![(vec![-1.0], -1.0)], vec![ConeBlock::Nonneg(1)]);
        let sol = solve_cone(&cp, 1e-8, 100);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7, "x = {}", sol.x[0]);
        assert!((sol.z[0] - 1.0).abs() < 1e-7, "dual = {}", sol.z[0]);
        assert!((sol.objective - 1.0).abs() < 1e-7);
        assert!(sol.residuals.max() <= 1e-8);
    }

    #[test]
    fn infeasible_lp_returns_farkas_certificate() {
        // min 0 s.t. x >= 1 and -x >= 0.
        let cp = program(
            vec![0.0],
            vec![(vec![-1.0], -1.0), (vec![1.0], 0.0)],
            vec![ConeBlock::Nonneg(1), ConeBlock::Nonneg(1)],
        );
        let sol = solve_cone(&cp, 1e-8, 100);
        assert_eq!(sol.status, SolveStatus::Infeasible);
        let y = &sol.z;
        assert!(y[0] >= -1e-9 && y[1] >= -1e-9, "certificate in dual cone");
        let aty = cp.a.matvec_t(y);
        assert!(aty[0].abs() < 1e-6, "A'y = {}", aty[0]);
        let by: f64 = cp.b.iter().zip(y).map(|(a, b)| a * b).sum();
        assert!((by + 1.0).abs() < 1e-6, "normalized b'y = {}", by);
    }

    #[test]
    fn unbounded_lp_returns_improving_ray() {
        // min -x s.t. x >= 0.
        let cp = program(vec![-1.0], vec![(vec![-1.0], 0.0)], vec![ConeBlock::Nonneg(1)]);
        let sol = solve_cone(&cp, 1e-8, 100);
        assert_eq!(sol.status, SolveStatus::Unbounded);
        let cx: f64 = cp.c.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
        assert!((cx + 1.0).abs() < 1e-6, "normalized c'x = {cx}");
        // -A x in K.
        let ax = cp.a.matvec(&sol.x);
        assert!(-ax[0] >= -1e-8);
    }

    #[test]
    fn socp_projection_onto_point() {
        // min t s.t. (t, x - (3,4)) in SOC: optimum t = 0 at x = (3,4).
        let cp = program(
            vec![1.0, 0.0, 0.0],
            vec![
                (vec![-1.0, 0.0, 0.0], 0.0),
                (vec![0.0, -1.0, 0.0], -3.0),
                (vec![0.0, 0.0, -1.0], -4.0),
            ],
            vec![ConeBlock::SecondOrder(3)],
        );
        let sol = solve_cone(&cp, 1e-8, 100);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.objective.abs() < 1e-6, "objective {}", sol.objective);
        assert!((sol.x[1] - 3.0).abs() < 1e-5 && (sol.x[2] - 4.0).abs() < 1e-5);
    }

    #[test]
    fn socp_with_equality_and_soc() {
        // min t s.t. (t, x) in SOC(3), x1 + x2 = 2. Optimum |x| with x1=x2=1.
        let cp = program(
            vec![1.0, 0.0, 0.0],
            vec![
                (vec![0.0, 1.0, 1.0], 2.0),
                (vec![-1.0, 0.0, 0.0], 0.0),
                (vec![0.0, -1.0, 0.0], 0.0),
                (vec![0.0, 0.0, -1.0], 0.0),
            ],
            vec![ConeBlock::Zero(1), ConeBlock::SecondOrder(3)],
        );
        let sol = solve_cone(&cp, 1e-8, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2f64.sqrt()).abs() < 1e-6, "objective {}", sol.objective);
        assert!((sol.x[1] - 1.0).abs() < 1e-5 && (sol.x[2] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn kkt_residuals_examples() {
        // Hand-built optimal pair for min x s.t. x >= 1.
        let cp = program(vec![1.0], vec![(vec![-1.0], -1.0)], vec![ConeBlock::Nonneg(1)]);
        let r = kkt_residuals(&cp, &[1.0], &[1.0]).unwrap();
        assert!(r.primal <= 1e-12 && r.dual <= 1e-12 && r.gap <= 1e-12);

        let r = kkt_residuals(&cp, &[1.0 + 1e-3], &[1.0]).unwrap();
        assert!(r.primal <= 1e-12, "interior point stays feasible");
        assert!(r.gap > 1e-4 && r.gap < 1e-2, "gap picks up the perturbation: {}", r.gap);

        // Perturbation that exits the cone shows up in the primal residual.
        let r = kkt_residuals(&cp, &[1.0 - 1e-3], &[1.0]).unwrap();
        assert!(r.primal > 1e-4 && r.primal < 1e-2, "primal residual {}", r.primal);

        // Zero vectors on an equality-constrained problem with b != 0.
        let cp = program(vec![1.0], vec![(vec![-1.0], -1.0)], vec![ConeBlock::Zero(1)]);
        let r = kkt_residuals(&cp, &[0.0], &[0.0]).unwrap();
        let expect = 1.0 / (1.0 + 1.0);
        assert!((r.primal - expect).abs() < 1e-12, "norm(b)/(1+norm(b)) = {}", r.primal);

        assert!(kkt_residuals(&cp, &[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn deterministic_across_runs() {
        let cp = program(
            vec![1.0, 2.0, 0.0],
            vec![
                (vec![0.0, 1.0, 1.0], 2.0),
                (vec![-1.0, 0.0, 0.0], 0.0),
                (vec![0.0, -1.0, 0.0], 0.0),
                (vec![0.0, 0.0, -1.0], 0.0),
            ],
            vec![ConeBlock::Zero(1), ConeBlock::SecondOrder(3)],
        );
        let a = solve_cone(&cp, 1e-8, 100);
        let b = solve_cone(&cp, 1e-8, 100);
        assert_eq!(a.x, b.x);
        assert_eq!(a.z, b.z);
        assert_eq!(a.iterations, b.iterations);
    }
}
