//! Sparse affine forms over the growing cone-program variable vector:
//! each expression canonicalizes to `F v + g`, stored row-wise in
//! column-major entry order.

use nalgebra::DMatrix;

/// `k` scalar rows, each `sum(coeffs * v) + const`.
#[derive(Debug, Clone)]
pub struct AffForm {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub consts: Vec<f64>,
}

impl AffForm {
    pub fn constant(values: &DMatrix<f64>) -> AffForm {
        AffForm {
            rows: vec![Vec::new(); values.len()],
            consts: values.as_slice().to_vec(),
        }
    }

    /// One variable block occupying columns `offset..offset+k`.
    pub fn variable(offset: usize, k: usize) -> AffForm {
        AffForm {
            rows: (0..k).map(|t| vec![(offset + t, 1.0)]).collect(),
            consts: vec![0.0; k],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&self, other: &AffForm) -> AffForm {
        debug_assert_eq!(self.len(), other.len());
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| merge_terms(a.iter().chain(b.iter()).copied()))
            .collect();
        let consts = self.consts.iter().zip(&other.consts).map(|(a, b)| a + b).collect();
        AffForm { rows, consts }
    }

    pub fn scale(&self, alpha: f64) -> AffForm {
        AffForm {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(c, v)| (c, alpha * v)).collect())
                .collect(),
            consts: self.consts.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Select rows by index (used by index/transpose/stack reorderings).
    pub fn select(&self, indices: impl Iterator<Item = usize>) -> AffForm {
        let mut rows = Vec::new();
        let mut consts = Vec::new();
        for t in indices {
            rows.push(self.rows[t].clone());
            consts.push(self.consts[t]);
        }
        AffForm { rows, consts }
    }

    /// Single row: weighted sum of all rows.
    pub fn weighted_sum(&self, weights: impl Fn(usize) -> f64) -> AffForm {
        let mut terms = Vec::new();
        let mut c = 0.0;
        for (t, row) in self.rows.iter().enumerate() {
            let w = weights(t);
            if w != 0.0 {
                terms.extend(row.iter().map(|&(col, v)| (col, w * v)));
                c += w * self.consts[t];
            }
        }
        AffForm { rows: vec![merge_terms(terms.into_iter())], consts: vec![c] }
    }

    pub fn stack(parts: &[AffForm]) -> AffForm {
        let mut rows = Vec::new();
        let mut consts = Vec::new();
        for p in parts {
            rows.extend(p.rows.iter().cloned());
            consts.extend(p.consts.iter().copied());
        }
        AffForm { rows, consts }
    }

    /// Linear combination of rows: `out_t = sum_u M[t,u] * in_u` for a dense
    /// combination matrix applied on the left of the flattened form.
    pub fn combine_rows(&self, out_len: usize, terms: impl Fn(usize) -> Vec<(usize, f64)>) -> AffForm {
        let mut rows = Vec::with_capacity(out_len);
        let mut consts = Vec::with_capacity(out_len);
        for t in 0..out_len {
            let mut acc = Vec::new();
            let mut c = 0.0;
            for (u, w) in terms(t) {
                if w != 0.0 {
                    acc.extend(self.rows[u].iter().map(|&(col, v)| (col, w * v)));
                    c += w * self.consts[u];
                }
            }
            rows.push(merge_terms(acc.into_iter()));
            consts.push(c);
        }
        AffForm { rows, consts }
    }
}

fn merge_terms(terms: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = terms.collect();
    v.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (c, val) in v {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += val,
            _ => out.push((c, val)),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    out
}
