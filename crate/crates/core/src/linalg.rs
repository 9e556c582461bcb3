//! Small dense solvers for the normal equations and filter design systems.

use crate::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n + col] = value;
    }

    pub fn add(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n + col] = self.data[row * self.n + col] + value;
    }

    pub fn max_abs_diagonal(&self) -> T {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(T::zero(), T::max)
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: SquareMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`, failing when a pivot drops to `rel_tol * max|a_ii|` or below.
    pub fn factor(a: &SquareMatrix<T>, rel_tol: T) -> Option<Self> {
        let n = a.size();
        let threshold = rel_tol * a.max_abs_diagonal();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut diag = a.get(j, j);
            for k in 0..j {
                diag = diag - l.get(j, k) * l.get(j, k);
            }
            if !(diag > threshold) || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s = s - l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        Some(Self { lower: l })
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.lower.size();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.lower.get(i, k) * y[k];
            }
            y[i] = s / self.lower.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.lower.get(k, i) * y[k];
            }
            y[i] = s / self.lower.get(i, i);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let mut a = SquareMatrix::zeros(3);
        let rows = [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        let x = [1.0, -2.0, 0.5];
        let b: Vec<f64> = rows.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let sol = Cholesky::factor(&a, 1e-12).unwrap().solve(&b);
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_singular_matrix() {
        let mut a = SquareMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        assert!(Cholesky::<f64>::factor(&a, 1e-10).is_none());
    }
}
