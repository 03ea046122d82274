use std::f64::consts::PI;

use super::matrix::{Matrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::dims("square matrix", format!("{}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let scale = a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= f64::EPSILON * scale * n as f64 || best == 0.0 {
                return Err(Error::SingularMatrix { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Lu { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.dim();
        assert_eq!(b.rows(), n, "LU solve: rhs has wrong row count");
        let mut x = Matrix::zeros(n, b.cols());
        for col in 0..b.cols() {
            let mut y: Vec<C64> = (0..n).map(|i| b[(self.perm[i], col)]).collect();
            for i in 0..n {
                let mut v = y[i];
                for k in 0..i {
                    v -= self.lu[(i, k)] * y[k];
                }
                y[i] = v;
            }
            for i in (0..n).rev() {
                let mut v = y[i];
                for k in (i + 1)..n {
                    v -= self.lu[(i, k)] * y[k];
                }
                y[i] = v / self.lu[(i, i)];
            }
            x.set_column(col, &y);
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        self.solve(&Matrix::identity(self.dim()))
    }

    /// Complex logarithm of the determinant (principal branch of the phase).
    pub fn log_det(&self) -> C64 {
        let mut acc = C64::new(0.0, if self.swaps % 2 == 1 { PI } else { 0.0 });
        for i in 0..self.dim() {
            acc += self.lu[(i, i)].ln();
        }
        let phase = acc.im.rem_euclid(2.0 * PI);
        C64::new(acc.re, if phase > PI { phase - 2.0 * PI } else { phase })
    }

    pub fn det(&self) -> C64 {
        let mut d = if self.swaps % 2 == 1 { -ONE } else { ONE };
        for i in 0..self.dim() {
            d *= self.lu[(i, i)];
        }
        d
    }
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    Ok(Lu::factor(a)?.inverse())
}

/// Solves `A X = B`.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(Lu::factor(a)?.solve(b))
}

/// Solves `X A = B`, i.e. returns `B A^{-1}`.
pub fn solve_right(b: &Matrix, a: &Matrix) -> Result<Matrix> {
    Ok(Lu::factor(&a.adjoint())?.solve(&b.adjoint()).adjoint())
}

/// `log det A` for a general square matrix.
pub fn log_det_general(a: &Matrix) -> Result<C64> {
    Ok(Lu::factor(a)?.log_det())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_multiplies_back() {
        let a = Matrix::from_fn(3, 3, |i, j| C64::new((i * 3 + j) as f64 + 1.0, (i as f64) - (j as f64)))
            .add_identity(4.0);
        let inv = inverse(&a).unwrap();
        let r = &(&a * &inv) - &Matrix::identity(3);
        assert!(r.frobenius() < 1e-12, "{}", r.frobenius());
    }

    #[test]
    fn log_det_matches_product_of_pivots() {
        let a = Matrix::from_real_rows(&[&[0.0, 2.0], &[3.0, 1.0]]);
        let lu = Lu::factor(&a).unwrap();
        assert!((lu.det() - C64::new(-6.0, 0.0)).norm() < 1e-14);
        let ld = lu.log_det();
        assert!((ld.re - 6f64.ln()).abs() < 1e-14);
        assert!((ld.im.abs() - PI).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(Lu::factor(&a), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn solve_right_matches_inverse() {
        let a = Matrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let b = Matrix::from_real_rows(&[&[1.0, 0.0], &[4.0, 5.0], &[1.0, 1.0]]);
        let x = solve_right(&b, &a).unwrap();
        let r = &(&x * &a) - &b;
        assert!(r.frobenius() < 1e-13);
    }
}
