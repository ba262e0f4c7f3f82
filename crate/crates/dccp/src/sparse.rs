//! Minimal compressed-sparse-column matrices: just what canonicalization and
//! the interior-point solver need.

/// Sparse matrix in CSC format with sorted, deduplicated row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix { nrows, ncols, colptr: vec![0; ncols + 1], rowidx: Vec::new(), values: Vec::new() }
    }

    /// Build from (row, col, value) triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut ordered: Vec<(usize, usize, f64)> = triplets
            .iter()
            .copied()
            .inspect(|&(i, j, _)| {
                assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            })
            .collect();
        ordered.sort_by_key(|&(i, j, _)| (j, i));

        let mut colptr = vec![0usize; ncols + 1];
        let mut rowidx = Vec::with_capacity(ordered.len());
        let mut values: Vec<f64> = Vec::with_capacity(ordered.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &ordered {
            if last == Some((j, i)) {
                *values.last_mut().unwrap() += v;
            } else {
                rowidx.push(i);
                values.push(v);
                colptr[j + 1] += 1;
                last = Some((j, i));
            }
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        let mut m = CscMatrix { nrows, ncols, colptr, rowidx, values };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        let mut new_colptr = vec![0usize; self.ncols + 1];
        let mut k = 0;
        for j in 0..self.ncols {
            for t in self.colptr[j]..self.colptr[j + 1] {
                if self.values[t] != 0.0 {
                    self.rowidx[k] = self.rowidx[t];
                    self.values[k] = self.values[t];
                    k += 1;
                }
            }
            new_colptr[j + 1] = k;
        }
        self.rowidx.truncate(k);
        self.values.truncate(k);
        self.colptr = new_colptr;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rowidx.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |t| (self.rowidx[t], self.values[t]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.col(j).find(|&(r, _)| r == i).map_or(0.0, |(_, v)| v)
    }

    /// Iterate all entries as (row, col, value).
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    /// `y += alpha * A * x`
    pub fn axpy(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj != 0.0 {
                for t in self.colptr[j]..self.colptr[j + 1] {
                    y[self.rowidx[t]] += self.values[t] * xj;
                }
            }
        }
    }

    /// `y += alpha * A' * x`
    pub fn axpy_t(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for t in self.colptr[j]..self.colptr[j + 1] {
                acc += self.values[t] * x[self.rowidx[t]];
            }
            y[j] += alpha * acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.axpy(1.0, x, &mut y);
        y
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.axpy_t(1.0, x, &mut y);
        y
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
