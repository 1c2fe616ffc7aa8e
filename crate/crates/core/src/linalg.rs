//! Small dense linear-algebra helpers: Cholesky factorization of
//! symmetric positive-definite matrices and extremal eigenvalue
//! estimates. The systems involved are tiny (model dimension or agent
//! count), so a direct implementation is all that is needed.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: format!("Cholesky of a {}x{} matrix", a.nrows(), a.ncols()),
            });
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            l[(j, j)] = d.sqrt();
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / l[(j, j)];
            }
        }
        Ok(Self { l })
    }

    pub fn dimension(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `A x = b` using the stored factor.
    pub fn solve(&self, b: &ArrayView1<f64>) -> Array1<f64> {
        let n = self.dimension();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut y = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        let mut x = Array1::<f64>::zeros(n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Applies the factor `L` to a vector, so `L z` has covariance `A`
    /// when `z` is standard normal.
    pub fn apply_factor(&self, z: &ArrayView1<f64>) -> Array1<f64> {
        let n = self.dimension();
        assert_eq!(z.len(), n, "vector length mismatch");
        let mut out = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut s = 0.0;
            for k in 0..=i {
                s += self.l[(i, k)] * z[k];
            }
            out[i] = s;
        }
        out
    }
}

/// Largest eigenvalue of a symmetric matrix by power iteration.
pub fn largest_eigenvalue(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    if n == 0 {
        return 0.0;
    }
    // deterministic start with components along every axis
    let mut v = Array1::<f64>::from_shape_fn(n, |i| 1.0 + (i as f64) * 0.137);
    let norm = v.dot(&v).sqrt();
    v /= norm;
    let mut lambda = 0.0;
    for _ in 0..256 {
        let w = a.dot(&v);
        let nw = w.dot(&w).sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = w / nw;
        let next_lambda = next.dot(&a.dot(&next));
        if (next_lambda - lambda).abs() <= 1e-13 * next_lambda.abs().max(1.0) {
            return next_lambda;
        }
        lambda = next_lambda;
        v = next;
    }
    lambda
}

/// Smallest eigenvalue of an SPD matrix via inverse power iteration.
pub fn smallest_eigenvalue_spd(a: &Array2<f64>) -> Result<f64> {
    let chol = Cholesky::new(a)?;
    let n = a.nrows();
    let mut v = Array1::<f64>::from_shape_fn(n, |i| 1.0 - (i as f64) * 0.071);
    let norm = v.dot(&v).sqrt();
    v /= norm;
    let mut lambda = 0.0;
    for _ in 0..256 {
        let w = chol.solve(&v.view());
        let nw = w.dot(&w).sqrt();
        let next = w / nw;
        let next_lambda = next.dot(&a.dot(&next));
        if (next_lambda - lambda).abs() <= 1e-13 * next_lambda.abs().max(1.0) {
            return Ok(next_lambda);
        }
        lambda = next_lambda;
        v = next;
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let chol = Cholesky::new(&a).unwrap();
        let b = array![1.0, -2.0, 0.5];
        let x = chol.solve(&b.view());
        let r = a.dot(&x) - &b;
        assert!(r.dot(&r).sqrt() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(
            Cholesky::new(&a),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn eigenvalue_bounds_of_diagonal() {
        let a = array![[2.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 3.0]];
        assert_abs_diff_eq!(largest_eigenvalue(&a), 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(smallest_eigenvalue_spd(&a).unwrap(), 2.0, epsilon = 1e-10);
    }
}
