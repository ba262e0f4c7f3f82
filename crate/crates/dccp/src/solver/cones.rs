//! Per-block cone operations for the interior-point method: Nesterov-Todd
//! scalings, Jordan-algebra products, boundary step lengths, and Euclidean
//! distances to the cones.

use crate::cone::ConeBlock;

/// Nesterov-Todd scaling state for one cone block.
///
/// For nonnegative blocks `W = diag(w)`, `w_i = sqrt(s_i / z_i)`. For
/// second-order blocks `W = eta * Wbar(wbar)` with `wbar' J wbar = 1`.
/// Zero blocks carry no scaling: their slack is identically zero and their
/// dual is free.
pub enum Scaling {
    Zero { dim: usize },
    Nonneg { w: Vec<f64> },
    Soc { eta: f64, wbar: Vec<f64> },
}

impl Scaling {
    /// Compute the NT scaling point for strictly interior `s`, `z`.
    pub fn compute(block: &ConeBlock, s: &[f64], z: &[f64]) -> Scaling {
        match block {
            ConeBlock::Zero(d) => Scaling::Zero { dim: *d },
            ConeBlock::Nonneg(_) => Scaling::Nonneg {
                w: s.iter().zip(z).map(|(&si, &zi)| (si / zi).sqrt()).collect(),
            },
            ConeBlock::SecondOrder(d) => {
                let zeta_s = soc_resid(s).sqrt();
                let zeta_z = soc_resid(z).sqrt();
                let sbar: Vec<f64> = s.iter().map(|v| v / zeta_s).collect();
                let zbar: Vec<f64> = z.iter().map(|v| v / zeta_z).collect();
                let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                let mut wbar = vec![0.0; *d];
                wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                for i in 1..*d {
                    wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                }
                Scaling::Soc { eta: (zeta_s / zeta_z).sqrt(), wbar }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Scaling::Zero { dim } => *dim,
            Scaling::Nonneg { w } => w.len(),
            Scaling::Soc { wbar, .. } => wbar.len(),
        }
    }

    /// `out = W v` (zero for zero blocks).
    pub fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Zero { .. } => out.fill(0.0),
            Scaling::Nonneg { w } => {
                for i in 0..w.len() {
                    out[i] = w[i] * v[i];
                }
            }
            Scaling::Soc { eta, wbar } => {
                wbar_apply(wbar, v, out, 1.0);
                for o in out.iter_mut() {
                    *o *= *eta;
                }
            }
        }
    }

    /// `out = W^{-1} v` (zero for zero blocks).
    pub fn apply_w_inv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Zero { .. } => out.fill(0.0),
            Scaling::Nonneg { w } => {
                for i in 0..w.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { eta, wbar } => {
                wbar_apply(wbar, v, out, -1.0);
                for o in out.iter_mut() {
                    *o /= *eta;
                }
            }
        }
    }

    /// `lambda = W z` stored per block.
    pub fn lambda(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_w(z, &mut out);
        out
    }

    /// Upper-triangular entries of `H = W^2` offset by `row0` on both axes,
    /// appended to `triplets` (nothing for zero blocks).
    pub fn h_upper_triplets(&self, row0: usize, triplets: &mut Vec<(usize, usize, f64)>) {
        match self {
            Scaling::Zero { .. } => {}
            Scaling::Nonneg { w } => {
                for (i, &wi) in w.iter().enumerate() {
                    triplets.push((row0 + i, row0 + i, wi * wi));
                }
            }
            Scaling::Soc { eta, wbar } => {
                // H = eta^2 (2 wbar wbar' - J)
                let e2 = eta * eta;
                let d = wbar.len();
                for i in 0..d {
                    for j in i..d {
                        let mut v = 2.0 * wbar[i] * wbar[j];
                        if i == j {
                            v -= if i == 0 { 1.0 } else { -1.0 };
                        }
                        if v != 0.0 {
                            triplets.push((row0 + i, row0 + j, e2 * v));
                        }
                    }
                }
            }
        }
    }
}

fn wbar_apply(wbar: &[f64], v: &[f64], out: &mut [f64], flip: f64) {
    // Wbar v with wbar[1..] optionally negated (flip = -1 gives Wbar^{-1}).
    let d = wbar.len();
    let w0 = wbar[0];
    let mut dot1 = 0.0;
    for i in 1..d {
        dot1 += flip * wbar[i] * v[i];
    }
    out[0] = w0 * v[0] + dot1;
    let coef = v[0] + dot1 / (1.0 + w0);
    for i in 1..d {
        out[i] = v[i] + coef * flip * wbar[i];
    }
}

fn soc_resid(u: &[f64]) -> f64 {
    let n1: f64 = u[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    // Proportional floor keeps the normalized point representable when a
    // step lands numerically on the boundary; the caller's stall guard
    // handles the resulting loss of progress.
    let floor = 1e-28 * (u[0] * u[0]).max(1e-100);
    ((u[0] - n1) * (u[0] + n1)).max(floor)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jordan product `u o v` for one block.
pub fn jordan_mul(block: &ConeBlock, u: &[f64], v: &[f64], out: &mut [f64]) {
    match block {
        ConeBlock::Zero(_) => out.fill(0.0),
        ConeBlock::Nonneg(_) => {
            for i in 0..u.len() {
                out[i] = u[i] * v[i];
            }
        }
        ConeBlock::SecondOrder(_) => {
            out[0] = dot(u, v);
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
    }
}

/// Solve `lambda o u = d` for `u`.
pub fn jordan_div(block: &ConeBlock, lambda: &[f64], d: &[f64], out: &mut [f64]) {
    match block {
        ConeBlock::Zero(_) => out.fill(0.0),
        ConeBlock::Nonneg(_) => {
            for i in 0..d.len() {
                out[i] = d[i] / lambda[i];
            }
        }
        ConeBlock::SecondOrder(_) => {
            let l0 = lambda[0];
            let l1d1: f64 = lambda[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
            let det = lambda.iter().skip(1).map(|x| x * x).sum::<f64>();
            let det = l0 * l0 - det;
            let u0 = (l0 * d[0] - l1d1) / det;
            out[0] = u0;
            for i in 1..d.len() {
                out[i] = (d[i] - u0 * lambda[i]) / l0;
            }
        }
    }
}

/// The identity element of the block's Jordan algebra.
pub fn identity(block: &ConeBlock, out: &mut [f64]) {
    match block {
        ConeBlock::Zero(_) => out.fill(0.0),
        ConeBlock::Nonneg(_) => out.fill(1.0),
        ConeBlock::SecondOrder(_) => {
            out.fill(0.0);
            out[0] = 1.0;
        }
    }
}

/// Barrier degree contribution (0 for zero blocks, dim for nonneg, 1 per SOC).
pub fn degree(block: &ConeBlock) -> usize {
    match block {
        ConeBlock::Zero(_) => 0,
        ConeBlock::Nonneg(d) => *d,
        ConeBlock::SecondOrder(_) => 1,
    }
}

/// Largest step `alpha` keeping `u + alpha du` in the cone, `None` if
/// unbounded. `u` must be strictly interior.
pub fn max_step(block: &ConeBlock, u: &[f64], du: &[f64]) -> Option<f64> {
    match block {
        ConeBlock::Zero(_) => None,
        ConeBlock::Nonneg(_) => {
            let mut best: Option<f64> = None;
            for i in 0..u.len() {
                if du[i] < 0.0 {
                    let a = -u[i] / du[i];
                    best = Some(best.map_or(a, |b: f64| b.min(a)));
                }
            }
            best
        }
        ConeBlock::SecondOrder(_) => {
            // Smallest positive root of (u0+a d0)^2 - |u1+a d1|^2 = 0.
            let a = du[0] * du[0] - du[1..].iter().map(|x| x * x).sum::<f64>();
            let b = u[0] * du[0] - u[1..].iter().zip(&du[1..]).map(|(x, y)| x * y).sum::<f64>();
            let c = soc_resid(u);
            smallest_positive_root(a, b, c)
        }
    }
}

/// Smallest positive root of `a t^2 + 2 b t + c = 0` with `c > 0`,
/// or `None` when the quadratic stays positive for all `t >= 0`.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if a.abs() < 1e-300 {
        // Linear: c + 2 b t.
        return if b < 0.0 { Some(-c / (2.0 * b)) } else { None };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        // No real roots; positive everywhere since c > 0.
        return None;
    }
    let sq = disc.sqrt();
    // Stable root computation avoiding cancellation.
    let (r1, r2) = if b >= 0.0 {
        let q = -(b + sq);
        (q / a, c / q)
    } else {
        let q = -b + sq;
        (c / q, q / a)
    };
    let mut best: Option<f64> = None;
    for r in [r1, r2] {
        if r > 0.0 && r.is_finite() {
            best = Some(best.map_or(r, |b: f64| b.min(r)));
        }
    }
    best
}

/// Euclidean distance from `u` to the cone block.
pub fn dist_to_cone(block: &ConeBlock, u: &[f64]) -> f64 {
    match block {
        ConeBlock::Zero(_) => dot(u, u).sqrt(),
        ConeBlock::Nonneg(_) => u.iter().map(|&x| x.min(0.0).powi(2)).sum::<f64>().sqrt(),
        ConeBlock::SecondOrder(_) => {
            let n1 = u[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if u[0] >= n1 {
                0.0
            } else if u[0] <= -n1 {
                dot(u, u).sqrt()
            } else {
                (n1 - u[0]) / std::f64::consts::SQRT_2
            }
        }
    }
}

/// Distance to the dual cone (zero blocks have free duals).
pub fn dist_to_dual_cone(block: &ConeBlock, u: &[f64]) -> f64 {
    match block {
        ConeBlock::Zero(_) => 0.0,
        _ => dist_to_cone(block, u),
    }
}
