//! Dense complex Cholesky factorization for the Wiener interpolator.

use crate::error::{Error, Result};
use crate::math::{self, C64};
use alloc::vec;
use alloc::vec::Vec;

/// Lower-triangular factor `L` with `A = L Lᴴ`, row-major `n × n`.
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<C64>,
}

impl Cholesky {
    /// Factor a Hermitian positive-definite matrix given row-major.
    pub(crate) fn factor(a: &[C64], n: usize) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![C64::new(0.0, 0.0); n * n];
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for j in 0..n {
            let mut d = a[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                let condition = if min_pivot.is_finite() && d.abs() > 0.0 {
                    max_pivot / d.abs()
                } else {
                    f64::INFINITY
                };
                return Err(Error::SingularMatrix { condition });
            }
            min_pivot = min_pivot.min(d);
            max_pivot = max_pivot.max(d);
            let ljj = math::sqrt(d);
            l[j * n + j] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Cholesky { n, l })
    }

    /// Ratio of the largest to smallest pivot, a cheap conditioning proxy.
    #[cfg(test)]
    pub(crate) fn pivot_ratio(&self) -> f64 {
        let d: Vec<f64> = (0..self.n).map(|i| self.l[i * self.n + i].re).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        (max / min) * (max / min)
    }

    /// Solve `A x = b` in place.
    pub(crate) fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i].conj() * b[k];
            }
            b[i] = s / self.l[i * n + i].re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_hermitian_system() {
        // A = [[4, 1+i], [1-i, 3]]
        let a = [
            C64::new(4.0, 0.0),
            C64::new(1.0, 1.0),
            C64::new(1.0, -1.0),
            C64::new(3.0, 0.0),
        ];
        let ch = Cholesky::factor(&a, 2).unwrap();
        let x = [C64::new(1.0, -2.0), C64::new(0.5, 0.25)];
        let mut b = [a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]];
        ch.solve_in_place(&mut b);
        assert!((b[0] - x[0]).norm() < 1e-12);
        assert!((b[1] - x[1]).norm() < 1e-12);
        assert!(ch.pivot_ratio() >= 1.0);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = [
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        assert!(matches!(
            Cholesky::factor(&a, 2),
            Err(Error::SingularMatrix { .. })
        ));
    }
}
