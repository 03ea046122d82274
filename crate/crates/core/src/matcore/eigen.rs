//! Dense eigensolvers: cyclic Jacobi for Hermitian matrices, one-sided
//! Jacobi for the SVD, and Hessenberg + shifted QR for general matrices.

use super::lu::Lu;
use super::matrix::{HermMatrix, Matrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `M = U diag(values) U*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenH {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary, eigenvectors in columns.
    pub vectors: Matrix,
}

impl EigenH {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `U diag(f(values)) U*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let n = self.values.len();
        let scaled = Matrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * f(self.values[j]));
        HermMatrix::symmetrized(&scaled.mul_adj(&self.vectors))
    }

    pub fn reconstruct(&self) -> HermMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Unitary 2x2 rotation `G` (acting on columns `p`, `q`) that diagonalizes
/// the Hermitian block `[[app, apq], [conj(apq), aqq]]` under `G* A G`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    /// `e^{-i phi}` where `phi = arg(apq)`.
    phase: C64,
}

impl Rotation {
    fn new(app: f64, aqq: f64, apq: C64) -> Rotation {
        let abs = apq.norm();
        let phase = (apq / abs).conj();
        let theta = (aqq - app) / (2.0 * abs);
        let t = if theta == 0.0 {
            1.0
        } else {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let c = 1.0 / (t * t + 1.0).sqrt();
        Rotation { c, s: t * c, phase }
    }

    /// `A <- A G` on columns `p`, `q`.
    fn apply_right(&self, a: &mut Matrix, p: usize, q: usize) {
        let (c, s, e) = (self.c, self.s, self.phase);
        for k in 0..a.rows() {
            let akp = a[(k, p)];
            let akq = a[(k, q)];
            a[(k, p)] = akp * c - akq * e * s;
            a[(k, q)] = akp * s + akq * e * c;
        }
    }

    /// `A <- G* A` on rows `p`, `q`.
    fn apply_left_adjoint(&self, a: &mut Matrix, p: usize, q: usize) {
        let (c, s, e) = (self.c, self.s, self.phase.conj());
        for k in 0..a.cols() {
            let apk = a[(p, k)];
            let aqk = a[(q, k)];
            a[(p, k)] = apk * c - aqk * e * s;
            a[(q, k)] = apk * s + aqk * e * c;
        }
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
pub fn eig_herm(m: &HermMatrix) -> Result<EigenH> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let norm = a.frobenius();
    if norm > 0.0 {
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&a) <= 1e-16 * norm {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.norm() <= 1e-300 {
                        continue;
                    }
                    let rot = Rotation::new(a[(p, p)].re, a[(q, q)].re, apq);
                    rot.apply_right(&mut a, p, q);
                    rot.apply_left_adjoint(&mut a, p, q);
                    rot.apply_right(&mut v, p, q);
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(EigenH { values, vectors })
}

/// Thin singular value decomposition `A = U diag(s) V*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m x k` with `k = cols`; columns for zero singular values are zero.
    pub u: Matrix,
    /// Descending.
    pub s: Vec<f64>,
    /// `n x n` unitary.
    pub v: Matrix,
}

impl Svd {
    /// Numerical rank with the threshold `rel * s_max`.
    pub fn rank(&self, rel: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > rel * smax).count()
    }

    /// Columns of `V` spanning the numerical null space of `A`.
    pub fn null_space(&self, rel: f64) -> Matrix {
        let r = self.rank(rel);
        let idx: Vec<usize> = (r..self.v.cols()).collect();
        self.v.select_columns(&idx)
    }

    /// Columns of `U` spanning the numerical range of `A`.
    pub fn range(&self, rel: f64) -> Matrix {
        let r = self.rank(rel);
        let idx: Vec<usize> = (0..r).collect();
        self.u.select_columns(&idx)
    }

    pub fn condition(&self) -> f64 {
        match (self.s.first(), self.s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for k in 0..m {
                    alpha += w[(k, p)].norm_sqr();
                    beta += w[(k, q)].norm_sqr();
                    gamma += w[(k, p)].conj() * w[(k, q)];
                }
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let rot = Rotation::new(alpha, beta, gamma);
                rot.apply_right(&mut w, p, q);
                rot.apply_right(&mut v, p, q);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|k| w[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = Matrix::from_fn(m, n, |i, jj| {
        let j = order[jj];
        if norms[j] > 0.0 {
            w[(i, j)] / norms[j]
        } else {
            ZERO
        }
    });
    Ok(Svd {
        u,
        s,
        v: v.select_columns(&order),
    })
}

/// Eigenpairs of a general square matrix.
#[derive(Debug, Clone)]
pub struct EigenGeneral {
    pub values: Vec<C64>,
    /// Unit-norm right eigenvectors in columns.
    pub vectors: Matrix,
}

impl EigenGeneral {
    /// `max_k ||M v_k - lambda_k v_k||`.
    pub fn max_residual(&self, m: &Matrix) -> f64 {
        (0..self.values.len())
            .map(|k| pair_residual(m, self.values[k], &self.vectors.column(k)))
            .fold(0.0, f64::max)
    }
}

fn pair_residual(m: &Matrix, lambda: C64, v: &[C64]) -> f64 {
    let mv = m.mat_vec(v);
    mv.iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex Givens rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    fn new(a: C64, b: C64) -> Givens {
        let na = a.norm();
        let nb = b.norm();
        if nb == 0.0 {
            return Givens { c: 1.0, s: ZERO };
        }
        if na == 0.0 {
            return Givens { c: 0.0, s: ONE };
        }
        let rho = na.hypot(nb);
        Givens {
            c: na / rho,
            s: (a / na) * b.conj() / rho,
        }
    }

    /// Rows `k`, `k+1` of `h` are replaced by `G [row_k; row_k1]`.
    fn apply_left(&self, h: &mut Matrix, k: usize) {
        for j in 0..h.cols() {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * self.c + self.s * y;
            h[(k + 1, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// Columns `k`, `k+1` of `h` are replaced by `[col_k, col_k1] G*`.
    fn apply_right_adjoint(&self, h: &mut Matrix, k: usize) {
        for i in 0..h.rows() {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * self.c + y * self.s.conj();
            h[(i, k + 1)] = -self.s * x + y * self.c;
        }
    }
}

/// Householder reduction to upper Hessenberg form, `A = Q H Q*`.
fn hessenberg(a: &Matrix) -> (Matrix, Matrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm <= 1e-300 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = vec_norm(&v);
        if vnorm <= 1e-300 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v*) H
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * h[(k + 1 + t, j)]).sum();
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= vi * dot * 2.0;
            }
        }
        // H <- H (I - 2 v v*), Q <- Q (I - 2 v v*)
        for target in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = v.iter().enumerate().map(|(t, vi)| target[(i, k + 1 + t)] * vi).sum();
                for (t, vi) in v.iter().enumerate() {
                    target[(i, k + 1 + t)] -= dot * vi.conj() * 2.0;
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

fn wilkinson_shift(h: &Matrix, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur form `A = Z T Z*` by single-shift QR on the Hessenberg form.
fn schur(a: &Matrix) -> (Matrix, Matrix) {
    let n = a.rows();
    let (mut t, mut z) = hessenberg(a);
    if n < 2 {
        return (t, z);
    }
    let norm = a.frobenius().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 && total < 200 * n {
        let mut l = hi;
        while l > 0 {
            let mut s = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
            if s == 0.0 {
                s = norm;
            }
            if t[(l, l - 1)].norm() <= f64::EPSILON * s {
                t[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        let shift = if iter % 11 == 0 {
            t[(hi, hi)] + C64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(&t, hi)
        };
        for i in l..=hi {
            t[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let g = Givens::new(t[(k, k)], t[(k + 1, k)]);
            g.apply_left(&mut t, k);
            t[(k + 1, k)] = ZERO;
            rots.push(g);
        }
        for (off, g) in rots.iter().enumerate() {
            let k = l + off;
            g.apply_right_adjoint(&mut t, k);
            g.apply_right_adjoint(&mut z, k);
        }
        for i in l..=hi {
            t[(i, i)] += shift;
        }
    }
    (t, z)
}

/// Eigenvalues and right eigenvectors of a general square matrix.
///
/// Eigenvectors come from back substitution on the Schur factor, followed
/// by a few steps of inverse iteration when a pair's residual is poor.
pub fn eig_general(m: &Matrix) -> Result<EigenGeneral> {
    if !m.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let n = m.rows();
    let (t, z) = schur(m);
    let norm = m.frobenius();
    let small = (f64::EPSILON * t.frobenius()).max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for i in (0..k).rev() {
            let s: C64 = ((i + 1)..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[i] = -s / d;
            let ny = vec_norm(&y);
            if ny > 1e100 {
                for w in y.iter_mut() {
                    *w /= ny;
                }
            }
        }
        let mut x = z.mat_vec(&y);
        let nx = vec_norm(&x);
        for w in x.iter_mut() {
            *w /= nx;
        }
        if pair_residual(m, lambda, &x) > 1e-10 * norm.max(1e-300) {
            x = inverse_iteration(m, lambda, &x, norm).unwrap_or(x);
        }
        values.push(lambda);
        vectors.set_column(k, &x);
    }
    Ok(EigenGeneral { values, vectors })
}

fn inverse_iteration(m: &Matrix, lambda: C64, start: &[C64], norm: f64) -> Option<Vec<C64>> {
    let n = m.rows();
    let delta = C64::new(1e-10 * norm.max(1e-300), 0.0);
    let shifted = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            m[(i, j)] - lambda - delta
        } else {
            m[(i, j)]
        }
    });
    let lu = Lu::factor(&shifted).ok()?;
    let mut x = start.to_vec();
    for _ in 0..3 {
        let b = Matrix::from_columns(n, &[x.clone()]);
        let y = lu.solve(&b).column(0);
        let ny = vec_norm(&y);
        if !ny.is_finite() || ny == 0.0 {
            return None;
        }
        x = y.into_iter().map(|w| w / ny).collect();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm_from(m: Matrix) -> HermMatrix {
        HermMatrix::new(m).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eig_herm(&HermMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = herm_from(Matrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]));
        let e = eig_herm(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let mut m = Matrix::zeros(3, 3);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(-2.0, 0.0);
        m[(2, 2)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.3, 0.7);
        m[(1, 0)] = C64::new(0.3, -0.7);
        m[(1, 2)] = C64::new(-1.1, 0.2);
        m[(2, 1)] = C64::new(-1.1, -0.2);
        let h = herm_from(m);
        let e = eig_herm(&h).unwrap();
        let r = (&e.reconstruct().into_matrix() - h.as_matrix()).frobenius();
        assert!(r < 1e-13, "{r}");
        let uu = e.vectors.adj_mul(&e.vectors);
        assert!((&uu - &Matrix::identity(3)).frobenius() < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_of_rank_one() {
        let a = Matrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[0.0, 0.0]]);
        let s = svd(&a).unwrap();
        assert_eq!(s.rank(1e-12), 1);
        let k = s.null_space(1e-12);
        assert_eq!(k.cols(), 1);
        assert!((&a * &k).frobenius() < 1e-13);
    }

    #[test]
    fn general_diagonal_and_nilpotent() {
        let d = Matrix::diag_real(&[-1.0, -1.0]);
        let e = eig_general(&d).unwrap();
        assert!(e.values.iter().all(|l| (l + 1.0).norm() < 1e-14));

        let nil = Matrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = eig_general(&nil).unwrap();
        assert!(e.values.iter().all(|l| l.norm() < 1e-12));
        assert!(e.max_residual(&nil) <= 1e-8 * nil.frobenius());
    }

    #[test]
    fn general_rotation_has_complex_pair() {
        let r = Matrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let e = eig_general(&r).unwrap();
        let mut ims: Vec<f64> = e.values.iter().map(|l| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(e.max_residual(&r) < 1e-12);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(matches!(
            eig_general(&Matrix::zeros(2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
