//! Symmetric positive definite band matrices and their Cholesky factors.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: entry `(k, k − d)` for `d ≤ width`.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricBand {
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, width: usize) -> Self {
        Self {
            n,
            width,
            data: vec![0.0; n * (width + 1)],
        }
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> usize {
        row * (self.width + 1) + (row - col)
    }

    /// Adds `v` to entry `(row, col)`, `col ≤ row`.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(col <= row && row - col <= self.width);
        let k = self.at(row, col);
        self.data[k] += v;
    }

    #[cfg(test)]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        if r - c > self.width {
            0.0
        } else {
            self.data[self.at(r, c)]
        }
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let w = self.width;
        let stride = w + 1;
        for k in 0..self.n {
            let first = k.saturating_sub(w);
            for j in first..=k {
                let lo = first.max(j.saturating_sub(w));
                let mut s = self.data[k * stride + (k - j)];
                for m in lo..j {
                    s -= self.data[k * stride + (k - m)] * self.data[j * stride + (j - m)];
                }
                if j < k {
                    self.data[k * stride + (k - j)] = s / self.data[j * stride];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::Domain(format!(
                            "Hessian is not positive definite at pivot {k} ({s})"
                        )));
                    }
                    self.data[k * stride] = s.sqrt();
                }
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    factor: SymmetricBand,
}

impl BandCholesky {
    pub fn solve(&self, b: &mut [f64]) {
        let f = &self.factor;
        let (w, stride) = (f.width, f.width + 1);
        for k in 0..f.n {
            let mut s = b[k];
            for m in k.saturating_sub(w)..k {
                s -= f.data[k * stride + (k - m)] * b[m];
            }
            b[k] = s / f.data[k * stride];
        }
        for k in (0..f.n).rev() {
            let mut s = b[k];
            for r in k + 1..(k + w + 1).min(f.n) {
                s -= f.data[r * stride + (r - k)] * b[r];
            }
            b[k] = s / f.data[k * stride];
        }
    }
}
