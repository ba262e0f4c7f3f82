//! Ruiz equilibration of cone-program data. Rows belonging to one
//! second-order block share a scaling factor so cone membership is
//! preserved; zero and nonnegative rows scale independently.

use crate::cone::{ConeBlock, ConeProgram};
use crate::sparse::CscMatrix;

const RUIZ_ROUNDS: usize = 10;

/// Diagonal scalings: the solver works on
/// `min (sigma Dc c)' v  s.t.  Dr b - (Dr A Dc) v in K`.
pub struct Equilibration {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub sigma: f64,
    pub scaled: ConeProgram,
}

pub fn equilibrate(cp: &ConeProgram) -> Equilibration {
    let m = cp.nrows();
    let n = cp.nvars();
    let mut row = vec![1.0f64; m];
    let mut col = vec![1.0f64; n];

    // Row index -> block id for block-uniform SOC scaling.
    let mut block_of = vec![0usize; m];
    let mut soc_block = vec![false; cp.cones.len()];
    {
        let mut off = 0;
        for (k, cone) in cp.cones.iter().enumerate() {
            for r in off..off + cone.dim() {
                block_of[r] = k;
            }
            soc_block[k] = matches!(cone, ConeBlock::SecondOrder(_));
            off += cone.dim();
        }
    }

    for _ in 0..RUIZ_ROUNDS {
        let mut row_max = vec![0.0f64; m];
        let mut col_max = vec![0.0f64; n];
        for (i, j, v) in cp.a.triplets() {
            let s = (v * row[i] * col[j]).abs();
            row_max[i] = row_max[i].max(s);
            col_max[j] = col_max[j].max(s);
        }
        // SOC blocks take the block-wide maximum.
        let mut block_max = vec![0.0f64; cp.cones.len()];
        for i in 0..m {
            block_max[block_of[i]] = block_max[block_of[i]].max(row_max[i]);
        }
        for i in 0..m {
            let target = if soc_block[block_of[i]] { block_max[block_of[i]] } else { row_max[i] };
            if target > 0.0 {
                row[i] /= target.sqrt();
            }
        }
        for j in 0..n {
            if col_max[j] > 0.0 {
                col[j] /= col_max[j].sqrt();
            }
        }
    }

    // Cost scalar keeps the scaled objective O(1).
    let cmax = cp
        .c
        .iter()
        .zip(&col)
        .map(|(&ci, &dj)| (ci * dj).abs())
        .fold(0.0f64, f64::max);
    let sigma = if cmax > 0.0 { 1.0 / cmax.max(1e-8) } else { 1.0 };

    let triplets: Vec<(usize, usize, f64)> =
        cp.a.triplets().map(|(i, j, v)| (i, j, v * row[i] * col[j])).collect();
    let scaled = ConeProgram {
        c: cp.c.iter().zip(&col).map(|(&ci, &dj)| sigma * ci * dj).collect(),
        a: CscMatrix::from_triplets(m, n, &triplets),
        b: cp.b.iter().zip(&row).map(|(&bi, &di)| bi * di).collect(),
        cones: cp.cones.clone(),
        var_map: cp.var_map.clone(),
    };
    Equilibration { row, col, sigma, scaled }
}

impl Equilibration {
    /// Map a scaled primal iterate back to original coordinates.
    pub fn unscale_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.col).map(|(&v, &d)| v * d).collect()
    }

    /// Scaled slack `s~ = Dr s`.
    pub fn unscale_s(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.row).map(|(&v, &d)| v / d).collect()
    }

    /// Scaled dual `z~` corresponds to `z = Dr z~ / sigma`.
    pub fn unscale_z(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.row).map(|(&v, &d)| v * d / self.sigma).collect()
    }
}
