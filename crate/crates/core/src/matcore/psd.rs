//! Functions of Hermitian matrices: log-det, inverse, square root, Loewner
//! comparison and the trace-capped PSD projection.

use super::eigen::{eig_herm, EigenH};
use super::matrix::{HermMatrix, Matrix, C64};
use crate::error::{Error, Result};
use crate::tol;

/// Sign pattern of a Hermitian difference `A - B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoewnerClass {
    /// Positive definite.
    PD,
    /// Positive semidefinite with a nontrivial kernel.
    PSD,
    ND,
    NSD,
    Indefinite,
    Zero,
}

impl LoewnerClass {
    pub fn label(self) -> &'static str {
        match self {
            LoewnerClass::PD => "PD",
            LoewnerClass::PSD => "PSD",
            LoewnerClass::ND => "ND",
            LoewnerClass::NSD => "NSD",
            LoewnerClass::Indefinite => "INDEFINITE",
            LoewnerClass::Zero => "ZERO",
        }
    }
}

fn require_pd(m: &HermMatrix) -> Result<EigenH> {
    let e = eig_herm(m)?;
    let threshold = tol::pd_threshold(m.frobenius());
    if e.values.is_empty() || e.min() > threshold {
        Ok(e)
    } else {
        Err(Error::NotPositiveDefinite {
            min_eig: e.min(),
            threshold,
        })
    }
}

/// Lower Cholesky factor `L` with `M = L L*`.
///
/// Cheaper than an eigendecomposition; fails only on a nonpositive pivot, so
/// it does not apply the relative definiteness threshold of [`logdet_pd`].
pub fn cholesky(m: &HermMatrix) -> Result<Matrix> {
    let n = m.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eig: d,
                threshold: 0.0,
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// `log det M` from the Cholesky factor.
pub fn logdet_chol(m: &HermMatrix) -> Result<f64> {
    let l = cholesky(m)?;
    Ok((0..m.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// `log det M` in nats for positive definite `M`.
pub fn logdet_pd(m: &HermMatrix) -> Result<f64> {
    Ok(require_pd(m)?.values.iter().map(|l| l.ln()).sum())
}

pub fn inv_pd(m: &HermMatrix) -> Result<HermMatrix> {
    Ok(require_pd(m)?.reconstruct_with(|l| 1.0 / l))
}

pub fn sqrt_pd(m: &HermMatrix) -> Result<HermMatrix> {
    Ok(require_pd(m)?.reconstruct_with(f64::sqrt))
}

/// Square root of a PSD matrix; small negative eigenvalues are clipped.
pub fn sqrt_psd(m: &HermMatrix) -> Result<HermMatrix> {
    Ok(eig_herm(m)?.reconstruct_with(|l| l.max(0.0).sqrt()))
}

pub fn is_pd(m: &HermMatrix) -> bool {
    require_pd(m).is_ok()
}

/// Classifies `A - B` by eigenvalue signs with a relative dead zone.
pub fn loewner_compare(a: &HermMatrix, b: &HermMatrix) -> Result<LoewnerClass> {
    if a.dim() != b.dim() {
        return Err(Error::dims(format!("dim {}", a.dim()), format!("dim {}", b.dim())));
    }
    let d = a.sub(b);
    let dn = d.frobenius();
    if dn <= tol::ZERO_TOL * a.frobenius().max(b.frobenius()).max(1.0) {
        return Ok(LoewnerClass::Zero);
    }
    Ok(classify_eigenvalues(&eig_herm(&d)?.values, tol::RANK_TOL * dn))
}

pub(crate) fn classify_eigenvalues(values: &[f64], dead: f64) -> LoewnerClass {
    let pos = values.iter().filter(|&&l| l > dead).count();
    let neg = values.iter().filter(|&&l| l < -dead).count();
    let n = values.len();
    match (pos, neg) {
        (0, 0) => LoewnerClass::Zero,
        (p, 0) if p == n => LoewnerClass::PD,
        (_, 0) => LoewnerClass::PSD,
        (0, q) if q == n => LoewnerClass::ND,
        (0, _) => LoewnerClass::NSD,
        _ => LoewnerClass::Indefinite,
    }
}

/// Eigenvalues (ascending) of `AB` for positive definite `A`, `B`, computed
/// from the similar Hermitian matrix `A^{1/2} B A^{1/2}`.
pub fn spd_product_eigs(a: &HermMatrix, b: &HermMatrix) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::dims(format!("dim {}", a.dim()), format!("dim {}", b.dim())));
    }
    require_pd(b)?;
    let root = sqrt_pd(a)?;
    let sandwich = HermMatrix::adj_congruence(root.as_matrix(), b);
    Ok(eig_herm(&sandwich)?.values)
}

/// Euclidean projection of `values` onto `{x >= 0, sum x <= cap}`.
pub fn project_capped_simplex(values: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    // Water level tau with sum max(v - tau, 0) = cap.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - cap) / (k + 1) as f64;
        if k + 1 == sorted.len() || sorted[k + 1] <= t {
            tau = t;
            break;
        }
    }
    values.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// Frobenius-nearest `K` with `K >= 0` and `Tr K <= p`.
pub fn project_psd_trace(m: &HermMatrix, p: f64) -> Result<HermMatrix> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::NonPositivePower(p));
    }
    let e = eig_herm(m)?;
    let projected = project_capped_simplex(&e.values, p);
    let n = projected.len();
    let u = &e.vectors;
    let scaled = Matrix::from_fn(n, n, |i, j| u[(i, j)] * projected[j]);
    Ok(HermMatrix::symmetrized(&scaled.mul_adj(u)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &HermMatrix, b: &HermMatrix, tol: f64) -> bool {
        (a.as_matrix() - b.as_matrix()).frobenius() <= tol
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(logdet_pd(&HermMatrix::identity(3)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((logdet_pd(&HermMatrix::diag(&[e, e])).unwrap() - 2.0).abs() < 1e-14);
        let m = HermMatrix::new(Matrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((logdet_pd(&m).unwrap() - 3f64.ln()).abs() < 1e-14);
        assert!(matches!(
            logdet_pd(&HermMatrix::diag(&[1.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn cholesky_matches_eigen_logdet() {
        let mut m = Matrix::identity(3).scale(2.0);
        m[(0, 2)] = C64::new(0.3, -0.4);
        m[(2, 0)] = C64::new(0.3, 0.4);
        m[(1, 2)] = C64::new(-0.5, 0.0);
        m[(2, 1)] = C64::new(-0.5, 0.0);
        let h = HermMatrix::new(m).unwrap();
        let l = cholesky(&h).unwrap();
        assert!((&l.mul_adj(&l) - h.as_matrix()).frobenius() < 1e-14);
        assert!((logdet_chol(&h).unwrap() - logdet_pd(&h).unwrap()).abs() < 1e-13);
        assert!(cholesky(&HermMatrix::diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn inverse_examples() {
        let inv = inv_pd(&HermMatrix::diag(&[2.0, 4.0])).unwrap();
        assert!(close(&inv, &HermMatrix::diag(&[0.5, 0.25]), 1e-15));
    }

    #[test]
    fn loewner_examples() {
        let i = HermMatrix::identity(2);
        assert_eq!(loewner_compare(&HermMatrix::diag(&[2.0, 2.0]), &i).unwrap(), LoewnerClass::PD);
        assert_eq!(
            loewner_compare(&HermMatrix::diag(&[2.0, 0.5]), &i).unwrap(),
            LoewnerClass::Indefinite
        );
        assert_eq!(loewner_compare(&i, &i).unwrap(), LoewnerClass::Zero);
        assert_eq!(
            loewner_compare(&HermMatrix::diag(&[1.0, 2.0]), &i).unwrap(),
            LoewnerClass::PSD
        );
        assert_eq!(loewner_compare(&i, &HermMatrix::diag(&[2.0, 2.0])).unwrap(), LoewnerClass::ND);
        assert!(loewner_compare(&i, &HermMatrix::identity(3)).is_err());
    }

    #[test]
    fn spd_product_diagonal() {
        let v = spd_product_eigs(&HermMatrix::diag(&[1.0, 2.0]), &HermMatrix::diag(&[3.0, 4.0])).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-14 && (v[1] - 8.0).abs() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let d = HermMatrix::diag(&[0.4, 0.4]);
        assert!(close(&project_psd_trace(&d, 1.0).unwrap(), &d, 1e-15));
        let p = project_psd_trace(&HermMatrix::diag(&[2.0, -1.0]), 1.0).unwrap();
        assert!(close(&p, &HermMatrix::diag(&[1.0, 0.0]), 1e-14));
        let p = project_psd_trace(&HermMatrix::identity(2), 1.0).unwrap();
        assert!(close(&p, &HermMatrix::diag(&[0.5, 0.5]), 1e-14));
    }

    #[test]
    fn capped_simplex_water_level() {
        let x = project_capped_simplex(&[3.0, 1.0, -2.0], 2.0);
        assert!((x[0] - 2.0).abs() < 1e-15 && x[1] == 0.0 && x[2] == 0.0);
        let x = project_capped_simplex(&[1.5, 1.0], 2.0);
        assert!((x[0] - 1.25).abs() < 1e-15 && (x[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn complex_sqrt_squares_back() {
        let mut m = Matrix::identity(2).scale(3.0);
        m[(0, 1)] = C64::new(0.5, 1.0);
        m[(1, 0)] = C64::new(0.5, -1.0);
        let h = HermMatrix::new(m).unwrap();
        let r = sqrt_pd(&h).unwrap();
        let sq = r.as_matrix() * r.as_matrix();
        assert!((&sq - h.as_matrix()).frobenius() < 1e-13);
    }
}
