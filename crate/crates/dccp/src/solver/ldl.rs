//! Sparse LDL^T factorization of quasi-definite KKT matrices.
//!
//! Up-looking simplicial factorization over the upper-triangular pattern,
//! with a reverse Cuthill-McKee fill-reducing ordering fixed per sparsity
//! pattern and dynamic pivot regularization toward the expected inertia.
//! No numerical pivoting, so factorizations are deterministic.

use crate::sparse::CscMatrix;

/// Pivots smaller than this (or of the wrong sign) are replaced by the
/// signed floor; iterative refinement at the call site absorbs the error.
const DYN_PIVOT_FLOOR: f64 = 2e-8;

/// Reverse Cuthill-McKee ordering of a symmetric pattern given by upper
/// triangular triplets. Returns `perm` with `perm[new] = old`.
pub fn rcm_order(n: usize, upper: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in upper {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    // Deterministic start nodes: minimum degree, ties by index.
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.sort_by_key(|&v| (degree[v], v));
    for &start in &nodes {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Factorization P K P^T = L D L^T with unit lower-triangular L.
pub struct LdlFactor {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    /// perm[new] = old
    perm: Vec<usize>,
}

impl LdlFactor {
    /// Factor a symmetric matrix given by its upper-triangular triplets.
    /// `diag_sign[i]` is the expected pivot sign (+1/-1) in original indexing.
    pub fn factor(
        n: usize,
        upper_triplets: &[(usize, usize, f64)],
        diag_sign: &[i8],
        perm: Vec<usize>,
    ) -> LdlFactor {
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Permuted upper triangle.
        let permuted: Vec<(usize, usize, f64)> = upper_triplets
            .iter()
            .map(|&(i, j, v)| {
                let (pi, pj) = (iperm[i], iperm[j]);
                if pi <= pj {
                    (pi, pj, v)
                } else {
                    (pj, pi, v)
                }
            })
            .collect();
        let a = CscMatrix::from_triplets(n, n, &permuted);

        // Symbolic: elimination tree and column counts.
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (i, _) in a.col(k) {
                let mut i = i;
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }

        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut d = vec![0.0f64; n];
        let mut next = lp.clone();

        // Numeric up-looking pass.
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            let mut top = n;
            let mut dk = 0.0;
            for (i, v) in a.col(k) {
                if i == k {
                    dk = v;
                    continue;
                }
                y[i] = v;
                let mut len = 0;
                let mut ii = i;
                while flag[ii] != k {
                    stack[len] = ii;
                    len += 1;
                    flag[ii] = k;
                    ii = parent[ii];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = stack[len];
                }
            }
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                for p in lp[i]..next[i] {
                    y[li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                dk -= lki * yi;
                li[next[i]] = k;
                lx[next[i]] = lki;
                next[i] += 1;
            }
            let sign = diag_sign[perm[k]] as f64;
            if dk * sign < DYN_PIVOT_FLOOR {
                dk = sign * DYN_PIVOT_FLOOR;
            }
            d[k] = dk;
        }

        LdlFactor { n, lp, li, lx, d, perm }
    }

    /// Solve `K x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        // L y' = y
        for k in 0..n {
            let yk = y[k];
            if yk != 0.0 {
                for p in self.lp[k]..self.lp[k + 1] {
                    y[self.li[p]] -= self.lx[p] * yk;
                }
            }
        }
        for k in 0..n {
            y[k] /= self.d[k];
        }
        // L^T x = y
        for k in (0..n).rev() {
            let mut acc = y[k];
            for p in self.lp[k]..self.lp[k + 1] {
                acc -= self.lx[p] * y[self.li[p]];
            }
            y[k] = acc;
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
        x
    }
}
