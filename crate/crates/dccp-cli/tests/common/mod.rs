//! Shared acceptance-test support: seeded cone-program generators with
//! known optima by construction, and a slow projected-subgradient oracle
//! that is independent of the interior-point implementation.

use dccp::cone::{ConeBlock, ConeProgram};
use dccp::sparse::CscMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

pub struct PlantedSocp {
    pub cp: ConeProgram,
    /// Exact optimal value from the planted complementary pair.
    pub optimal_value: f64,
    /// Norm of the planted dual multiplier (sets the exact-penalty weight).
    pub dual_norm: f64,
}

fn gauss(rng: &mut impl Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn random_blocks(rng: &mut impl Rng) -> Vec<ConeBlock> {
    let k = rng.random_range(2..=4);
    let mut blocks = Vec::with_capacity(k);
    for _ in 0..k {
        blocks.push(match rng.random_range(0..5) {
            0 => ConeBlock::Zero(rng.random_range(1..=2)),
            1 | 2 => ConeBlock::Nonneg(rng.random_range(1..=4)),
            _ => ConeBlock::SecondOrder(rng.random_range(3..=5)),
        });
    }
    blocks
}

/// Feasible bounded instance with a planted strictly complementary pair:
/// `b = A x* + s*`, `c = -A' z*`, so `c' x* = -z*' A x* = z*'(s* - b)`,
/// and with `s*' z* = 0` strong duality pins the optimum at `c' x*`.
pub fn planted_feasible_socp(rng: &mut impl Rng) -> PlantedSocp {
    let n = rng.random_range(4..=12);
    let blocks = random_blocks(rng);
    let m: usize = blocks.iter().map(ConeBlock::dim).sum();

    let x_star: Vec<f64> = (0..n).map(|_| gauss(rng)).collect();
    let mut s_star = vec![0.0; m];
    let mut z_star = vec![0.0; m];
    let mut any_dual = false;
    let mut off = 0;
    for block in &blocks {
        let d = block.dim();
        match block {
            ConeBlock::Zero(_) => {
                for t in 0..d {
                    z_star[off + t] = gauss(rng);
                }
                any_dual = true;
            }
            ConeBlock::Nonneg(_) => {
                for t in 0..d {
                    if rng.random_bool(0.5) {
                        s_star[off + t] = gauss(rng).abs() + 0.1;
                    } else {
                        z_star[off + t] = gauss(rng).abs() + 0.1;
                        any_dual = true;
                    }
                }
            }
            ConeBlock::SecondOrder(_) => {
                fn interior(rng: &mut impl Rng, out: &mut [f64]) {
                    let mut norm1 = 0.0;
                    for t in 1..out.len() {
                        out[t] = gauss(rng);
                        norm1 += out[t] * out[t];
                    }
                    out[0] = norm1.sqrt() + gauss(rng).abs() + 0.2;
                }
                // Strictly complementary planting keeps the instance
                // nondegenerate, which the subgradient oracle needs for its
                // Polyak steps to converge at a useful rate.
                if rng.random_bool(0.5) {
                    interior(rng, &mut s_star[off..off + d]);
                } else {
                    interior(rng, &mut z_star[off..off + d]);
                    any_dual = true;
                }
            }
        }
        off += d;
    }
    if !any_dual {
        // Degenerate c = 0; pin one dual coordinate instead.
        if let Some((i, _)) = blocks.iter().enumerate().find(|(_, b)| matches!(b, ConeBlock::Nonneg(_))) {
            let off: usize = blocks[..i].iter().map(ConeBlock::dim).sum();
            s_star[off] = 0.0;
            z_star[off] = 1.0;
        }
    }

    let mut triplets = Vec::new();
    for i in 0..m {
        for j in 0..n {
            triplets.push((i, j, gauss(rng)));
        }
    }
    let a = CscMatrix::from_triplets(m, n, &triplets);
    let mut b = a.matvec(&x_star);
    for (bi, si) in b.iter_mut().zip(&s_star) {
        *bi += si;
    }
    let mut c = vec![0.0; n];
    a.axpy_t(-1.0, &z_star, &mut c);
    let optimal_value: f64 = c.iter().zip(&x_star).map(|(a, b)| a * b).sum();
    let dual_norm = z_star.iter().map(|v| v * v).sum::<f64>().sqrt();

    PlantedSocp {
        cp: ConeProgram { c, a, b, cones: blocks, var_map: BTreeMap::new() },
        optimal_value,
        dual_norm,
    }
}

/// Primal-infeasible instance with a planted Farkas certificate
/// `y* in K*, A' y* = 0, b' y* = -1`.
pub fn infeasible_socp(rng: &mut impl Rng) -> ConeProgram {
    let n = rng.random_range(3..=8);
    let blocks = random_blocks(rng);
    let m: usize = blocks.iter().map(ConeBlock::dim).sum();

    // Strictly interior dual-cone point.
    let mut y = vec![0.0; m];
    let mut off = 0;
    for block in &blocks {
        let d = block.dim();
        match block {
            ConeBlock::Zero(_) => {
                for t in 0..d {
                    y[off + t] = gauss(rng);
                }
            }
            ConeBlock::Nonneg(_) => {
                for t in 0..d {
                    y[off + t] = gauss(rng).abs() + 0.3;
                }
            }
            ConeBlock::SecondOrder(_) => {
                let mut norm1 = 0.0;
                for t in 1..d {
                    y[off + t] = gauss(rng);
                    norm1 += y[off + t] * y[off + t];
                }
                y[off] = norm1.sqrt() + 0.3;
            }
        }
        off += d;
    }
    let ynorm2: f64 = y.iter().map(|v| v * v).sum();

    // Columns of A projected orthogonal to y.
    let mut triplets = Vec::new();
    for j in 0..n {
        let col: Vec<f64> = (0..m).map(|_| gauss(rng)).collect();
        let dot: f64 = col.iter().zip(&y).map(|(a, b)| a * b).sum();
        for (i, v) in col.into_iter().enumerate() {
            triplets.push((i, j, v - dot * y[i] / ynorm2));
        }
    }
    let a = CscMatrix::from_triplets(m, n, &triplets);

    let mut b: Vec<f64> = (0..m).map(|_| gauss(rng)).collect();
    let bty: f64 = b.iter().zip(&y).map(|(a, b)| a * b).sum();
    for (bi, yi) in b.iter_mut().zip(&y) {
        *bi -= (bty + 1.0) * yi / ynorm2;
    }

    let c: Vec<f64> = (0..n).map(|_| gauss(rng)).collect();
    ConeProgram { c, a, b, cones: blocks, var_map: BTreeMap::new() }
}

/// Unbounded (dual-infeasible) instance with a planted improving ray
/// `-A d in K, c' d = -1` and a feasible starting point.
pub fn unbounded_socp(rng: &mut impl Rng) -> ConeProgram {
    let n = rng.random_range(3..=8);
    let blocks = random_blocks(rng);
    let m: usize = blocks.iter().map(ConeBlock::dim).sum();

    let d_ray: Vec<f64> = (0..n).map(|_| gauss(rng)).collect();
    let dnorm2: f64 = d_ray.iter().map(|v| v * v).sum();

    // Cone point the ray pushes along.
    let mut s_ray = vec![0.0; m];
    let mut off = 0;
    for block in &blocks {
        let d = block.dim();
        match block {
            ConeBlock::Zero(_) => {}
            ConeBlock::Nonneg(_) => {
                for t in 0..d {
                    s_ray[off + t] = gauss(rng).abs();
                }
            }
            ConeBlock::SecondOrder(_) => {
                let mut norm1 = 0.0;
                for t in 1..d {
                    s_ray[off + t] = gauss(rng);
                    norm1 += s_ray[off + t] * s_ray[off + t];
                }
                s_ray[off] = norm1.sqrt() + gauss(rng).abs();
            }
        }
        off += d;
    }

    // Adjust A so that A d = -s_ray.
    let mut triplets = Vec::new();
    let mut a0_rows = vec![vec![0.0; n]; m];
    for (i, row) in a0_rows.iter_mut().enumerate() {
        for val in row.iter_mut() {
            *val = gauss(rng);
        }
        let ad: f64 = row.iter().zip(&d_ray).map(|(a, b)| a * b).sum();
        let corr = (ad + s_ray[i]) / dnorm2;
        for j in 0..n {
            triplets.push((i, j, row[j] - corr * d_ray[j]));
        }
    }
    let a = CscMatrix::from_triplets(m, n, &triplets);

    // Feasible b.
    let x0: Vec<f64> = (0..n).map(|_| gauss(rng)).collect();
    let mut s0 = vec![0.0; m];
    let mut off = 0;
    for block in &blocks {
        let d = block.dim();
        match block {
            ConeBlock::Zero(_) => {}
            ConeBlock::Nonneg(_) => {
                for t in 0..d {
                    s0[off + t] = gauss(rng).abs() + 0.1;
                }
            }
            ConeBlock::SecondOrder(_) => {
                let mut norm1 = 0.0;
                for t in 1..d {
                    s0[off + t] = gauss(rng);
                    norm1 += s0[off + t] * s0[off + t];
                }
                s0[off] = norm1.sqrt() + 0.2;
            }
        }
        off += d;
    }
    let mut b = a.matvec(&x0);
    for (bi, si) in b.iter_mut().zip(&s0) {
        *bi += si;
    }

    let mut c: Vec<f64> = (0..n).map(|_| gauss(rng)).collect();
    let cd: f64 = c.iter().zip(&d_ray).map(|(a, b)| a * b).sum();
    for (ci, di) in c.iter_mut().zip(&d_ray) {
        *ci -= (cd + 1.0) * di / dnorm2;
    }
    ConeProgram { c, a, b, cones: blocks, var_map: BTreeMap::new() }
}

fn project_block(block: &ConeBlock, u: &mut [f64]) {
    match block {
        ConeBlock::Zero(_) => u.fill(0.0),
        ConeBlock::Nonneg(_) => {
            for v in u.iter_mut() {
                *v = v.max(0.0);
            }
        }
        ConeBlock::SecondOrder(_) => {
            let n1: f64 = u[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if u[0] >= n1 {
                // inside
            } else if u[0] <= -n1 {
                u.fill(0.0);
            } else {
                let lam = (u[0] + n1) / 2.0;
                let scale = if n1 > 0.0 { lam / n1 } else { 0.0 };
                u[0] = lam;
                for v in u[1..].iter_mut() {
                    *v *= scale;
                }
            }
        }
    }
}

/// Euclidean distance of `b - A v` from the cone, with its gradient in `v`.
fn feasibility_gap(cp: &ConeProgram, v: &[f64]) -> (f64, Vec<f64>) {
    let mut r = cp.b.clone();
    cp.a.axpy(-1.0, v, &mut r);
    let mut proj = r.clone();
    let mut off = 0;
    for block in &cp.cones {
        project_block(block, &mut proj[off..off + block.dim()]);
        off += block.dim();
    }
    let diff: Vec<f64> = r.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let dist = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dist == 0.0 {
        return (0.0, vec![0.0; v.len()]);
    }
    // grad_v |r - proj(r)| = -A' (r - proj(r)) / dist
    let mut g = vec![0.0; v.len()];
    cp.a.axpy_t(-1.0 / dist, &diff, &mut g);
    (dist, g)
}

/// Exact-penalty subgradient oracle with Polyak steps: minimizes
/// `F(v) = c'v + rho * dist(b - Av, K)` where `rho` exceeds the planted dual
/// norm, so `min F = f*` with the same minimizers. Polyak steps use the
/// planted optimum as target, which comes from the instance construction and
/// never from the solver under test. Returns the best penalized value seen.
pub fn subgradient_oracle(cp: &ConeProgram, f_star: f64, rho: f64, max_iters: usize) -> f64 {
    let n = cp.nvars();
    let mut v = vec![0.0; n];
    let mut best = f64::INFINITY;
    for _ in 0..max_iters {
        let (dist, gd) = feasibility_gap(cp, &v);
        let fval: f64 = cp.c.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + rho * dist;
        best = best.min(fval);
        if fval - f_star <= 1e-6 * (1.0 + f_star.abs()) {
            break;
        }
        let mut g = cp.c.clone();
        for (gi, di) in g.iter_mut().zip(&gd) {
            *gi += rho * di;
        }
        let gnorm2: f64 = g.iter().map(|x| x * x).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let alpha = (fval - f_star) / gnorm2;
        for (vi, gi) in v.iter_mut().zip(&g) {
            *vi -= alpha * gi;
        }
    }
    best
}
