//! Dense row-major `f64` matrix with the handful of operations the engine needs.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Work threshold below which matmul stays single-threaded.
const PAR_FLOP_THRESHOLD: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("Matrix::from_vec", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dim("Matrix::from_rows", cols, format!("{} in row {i}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy the given rows into a new matrix, in the order given.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(indices.len(), self.cols);
        for (dst, &src) in indices.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// `self * other`. Rows of the output are computed independently, so the
    /// parallel and serial paths produce bit-identical results.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim("matmul", self.cols, other.rows));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(n, m);
        let work = n * k * m;

        let kernel = |(r, out_row): (usize, &mut [f64])| {
            let a_row = &self.data[r * k..(r + 1) * k];
            for (kk, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[kk * m..(kk + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };

        if work >= PAR_FLOP_THRESHOLD {
            out.data
                .par_chunks_mut(m)
                .enumerate()
                .for_each(|(r, row)| kernel((r, row)));
        } else {
            for (r, row) in out.data.chunks_mut(m).enumerate() {
                kernel((r, row));
            }
        }
        debug_assert!(out.is_finite());
        Ok(out)
    }

    pub fn add_row_vector(&mut self, bias: &[f64]) -> Result<()> {
        if bias.len() != self.cols {
            return Err(Error::dim("add_row_vector", self.cols, bias.len()));
        }
        for row in self.data.chunks_mut(self.cols) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Population standard deviation over every entry.
    pub fn std_all(&self) -> f64 {
        let n = self.data.len();
        if n == 0 {
            return 0.0;
        }
        let mean = self.data.iter().sum::<f64>() / n as f64;
        let var = self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        var.sqrt()
    }
}

/// Squared Euclidean distance between rows `i` and `j` of `m`.
///
/// Both the exhaustive and the kd-tree neighbor search call this, so equal
/// distances compare equal across the two paths.
#[inline]
pub fn row_sq_dist(m: &Matrix, i: usize, j: usize) -> f64 {
    let (a, b) = (m.row(i), m.row(j));
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_len() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn matmul_matches_naive_triple_loop() {
        let mut rng = crate::rng::seeded(42, 0);
        let a = crate::rng::uniform_matrix(&mut rng, 7, 5, -1.0, 1.0);
        let b = crate::rng::uniform_matrix(&mut rng, 5, 9, -1.0, 1.0);
        let c = a.matmul(&b).unwrap();
        for r in 0..7 {
            for m in 0..9 {
                let mut acc = 0.0;
                for k in 0..5 {
                    acc += a.get(r, k) * b.get(k, m);
                }
                assert!((c.get(r, m) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parallel_matmul_is_bit_identical_to_serial() {
        // Large enough to cross the parallel threshold.
        let mut rng = crate::rng::seeded(7, 0);
        let a = crate::rng::uniform_matrix(&mut rng, 64, 64, -1.0, 1.0);
        let b = crate::rng::uniform_matrix(&mut rng, 64, 64, -1.0, 1.0);
        let par = a.matmul(&b).unwrap();
        let mut serial = Matrix::zeros(64, 64);
        for r in 0..64 {
            for k in 0..64 {
                let av = a.get(r, k);
                for m in 0..64 {
                    let v = serial.get(r, m) + av * b.get(k, m);
                    serial.set(r, m, v);
                }
            }
        }
        assert_eq!(par.data(), serial.data());
    }

    #[test]
    fn transpose_roundtrip() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().get(2, 1), 6.0);
    }

    #[test]
    fn sq_dist_triangle() {
        let m = Matrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(row_sq_dist(&m, 0, 1), 25.0);
    }
}
