//! Dense vector helpers and a small row-major matrix.

use crate::error::{check_dims, Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// `a − b`
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `‖a − b‖²` without allocating.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `x + alpha * d`
pub fn add_scaled(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), d.len());
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
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

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dims("matrix-vector product", self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ r`
    pub fn tr_mul_vec(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_dims("transposed matrix-vector product", self.rows, r.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += ri * a;
            }
        }
        Ok(out)
    }

    /// Largest eigenvalue of `AᵀA` (that is `‖A‖₂²`) by power iteration.
    ///
    /// Starts from the all-ones vector and stops once the Rayleigh quotient
    /// changes by less than `rel_tol` relative, or after `max_iters` sweeps.
    pub fn gram_spectral_norm(&self, max_iters: usize, rel_tol: f64) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut estimate = 0.0;
        for _ in 0..max_iters {
            // dims are consistent by construction
            let av = self.mul_vec(&v).expect("dims");
            let w = self.tr_mul_vec(&av).expect("dims");
            let next = dot(&v, &w);
            let wn = norm(&w);
            if wn == 0.0 {
                return 0.0;
            }
            v = w.iter().map(|x| x / wn).collect();
            if (next - estimate).abs() <= rel_tol * next.abs() {
                return next;
            }
            estimate = next;
        }
        estimate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let a = Matrix::from_row_major(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(a.mul_vec(&[1., 0., -1.]).unwrap(), vec![-2., -2.]);
        assert_eq!(a.tr_mul_vec(&[1., 1.]).unwrap(), vec![5., 7., 9.]);
        assert!(a.mul_vec(&[1.]).is_err());
    }

    #[test]
    fn power_iteration_diagonal() {
        let a = Matrix::from_row_major(2, 2, vec![3., 0., 0., 1.]).unwrap();
        let l = a.gram_spectral_norm(1000, 1e-15);
        assert!((l - 9.0).abs() < 1e-9, "{l}");
    }
}
