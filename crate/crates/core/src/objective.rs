//! Scalar objectives: the secrecy rate, the conditional mutual information
//! bound `Ĩ(K, A)` in four algebraically equal forms, their gradients, and
//! Gaussian entropy identities.

use std::f64::consts::{E, PI};

use crate::channel::WiretapChannel;
use crate::error::{Error, Result};
use crate::matcore::{
    block2x2_inv, eig_herm, log_det_general, logdet_chol, logdet_pd, solve, HermMatrix, Matrix,
};
use crate::tol;

/// Transmit covariance: positive semidefinite with `Tr K <= P`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputCovariance {
    k: HermMatrix,
}

impl InputCovariance {
    /// Validates `k` against the power budget. Eigenvalues down to
    /// `-RANK_TOL * P` are clipped to zero.
    pub fn new(k: HermMatrix, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::NonPositivePower(power));
        }
        let e = eig_herm(&k)?;
        let floor = -tol::RANK_TOL * power.max(k.frobenius());
        let trace = k.trace_re();
        if e.min() < floor || trace > power + tol::TRACE_SLACK * power.max(1.0) {
            return Err(Error::InfeasibleCovariance {
                min_eig: e.min(),
                trace,
                power,
            });
        }
        let k = if e.min() < 0.0 {
            e.reconstruct_with(|l| l.max(0.0))
        } else {
            k
        };
        Ok(InputCovariance { k })
    }

    pub fn zeros(n: usize) -> Self {
        InputCovariance {
            k: HermMatrix::zeros(n),
        }
    }

    /// Wraps a matrix the caller already knows to be feasible, e.g. the
    /// output of `project_psd_trace`.
    pub(crate) fn from_projected(k: HermMatrix) -> Self {
        InputCovariance { k }
    }

    pub fn matrix(&self) -> &HermMatrix {
        &self.k
    }

    pub fn into_matrix(self) -> HermMatrix {
        self.k
    }

    pub fn trace(&self) -> f64 {
        self.k.trace_re()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_herm(&self.k).map(|e| e.values).unwrap_or_default()
    }
}

impl std::ops::Deref for InputCovariance {
    type Target = HermMatrix;

    fn deref(&self) -> &HermMatrix {
        &self.k
    }
}

/// Cross-covariance `A` between the two receivers' noises, `I - AA* ≻ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCorrelation {
    a: Matrix,
    min_eig: f64,
}

impl NoiseCorrelation {
    pub fn new(a: Matrix) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidMatrix("non-finite correlation entry".into()));
        }
        let gap = HermMatrix::identity(a.rows()).sub(&HermMatrix::symmetrized(&a.mul_adj(&a)));
        let min_eig = eig_herm(&gap)?.min();
        // The gap is a perturbation of I, so its scale never drops below 1.
        if min_eig <= tol::pd_threshold(gap.frobenius().max(1.0)) {
            return Err(Error::CorrelationInfeasible { min_eig });
        }
        Ok(NoiseCorrelation { a, min_eig })
    }

    /// `A` from its adjoint `X = A*`, the unknown of the Riccati equation.
    pub fn from_adjoint(x: &Matrix) -> Result<Self> {
        NoiseCorrelation::new(x.adjoint())
    }

    pub fn zeros(n_m: usize, n_e: usize) -> Self {
        NoiseCorrelation {
            a: Matrix::zeros(n_m, n_e),
            min_eig: 1.0,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    /// Smallest eigenvalue of `I - AA*`.
    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    fn check_dims(&self, ch: &WiretapChannel) -> Result<()> {
        if self.a.shape() != (ch.n_m(), ch.n_e()) {
            return Err(Error::dims(
                format!("A of shape {}x{}", ch.n_m(), ch.n_e()),
                format!("{}x{}", self.a.rows(), self.a.cols()),
            ));
        }
        Ok(())
    }
}

/// Algebraic form used to evaluate `Ĩ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TildeForm {
    /// `log det(I + H_s* C^{-1} H_s K) - log det(I + H_E K H_E*)` with the
    /// stacked channel `H_s` and joint noise covariance `C`.
    Joint,
    /// `log det(I + B K) - log det(I + H_E K H_E*)`.
    BForm,
    /// Schur complement of the joint output covariance against `K_Z`.
    Schur,
    /// `log det K_YZ - log det K_Z - log det K_ME`.
    Raw,
}

impl TildeForm {
    pub const ALL: [TildeForm; 4] = [TildeForm::Joint, TildeForm::BForm, TildeForm::Schur, TildeForm::Raw];
}

fn check_k(ch: &WiretapChannel, k: &HermMatrix) -> Result<()> {
    if k.dim() != ch.n() {
        return Err(Error::dims(format!("K of dim {}", ch.n()), format!("dim {}", k.dim())));
    }
    Ok(())
}

/// `I + H K H*`.
fn output_cov(h: &Matrix, k: &HermMatrix) -> HermMatrix {
    HermMatrix::congruence(h, k).add_identity(1.0)
}

/// Real part of `log det(I + X K)` for Hermitian PSD `X` and `K`; the
/// determinant is real and positive in exact arithmetic.
fn logdet_i_plus(x: &Matrix, k: &HermMatrix) -> Result<f64> {
    Ok(log_det_general(&(x * k.as_matrix()).add_identity(1.0))?.re)
}

/// `log det(I + H_M K H_M*) - log det(I + H_E K H_E*)`.
pub fn secrecy_rate(ch: &WiretapChannel, k: &HermMatrix) -> Result<f64> {
    check_k(ch, k)?;
    Ok(logdet_chol(&output_cov(ch.h_m(), k))? - logdet_chol(&output_cov(ch.h_e(), k))?)
}

/// `H* (I + H K H*)^{-1} H`.
fn info_gradient(h: &Matrix, k: &HermMatrix) -> Result<HermMatrix> {
    let x = solve(&output_cov(h, k), h)?;
    Ok(HermMatrix::symmetrized(&h.adj_mul(&x)))
}

/// Gradient of [`secrecy_rate`] in `K` with respect to `Re Tr(·* ·)`.
pub fn secrecy_grad(ch: &WiretapChannel, k: &HermMatrix) -> Result<HermMatrix> {
    check_k(ch, k)?;
    Ok(info_gradient(ch.h_m(), k)?.sub(&info_gradient(ch.h_e(), k)?))
}

/// `B(A) = (H_M - A H_E)* (I - AA*)^{-1} (H_M - A H_E) + H_E* H_E`.
pub fn b_of_a(ch: &WiretapChannel, a: &NoiseCorrelation) -> Result<HermMatrix> {
    a.check_dims(ch)?;
    let am = a.matrix();
    let d = ch.h_m() - &(am * ch.h_e());
    let gap = &Matrix::identity(ch.n_m()) - &am.mul_adj(am);
    let x = solve(&gap, &d)?;
    Ok(HermMatrix::symmetrized(&d.adj_mul(&x)).add(ch.gram_e()))
}

/// Joint noise covariance `K_ME = [[I, A], [A*, I]]`.
pub fn noise_cov(a: &Matrix) -> HermMatrix {
    let (m, e) = a.shape();
    HermMatrix::symmetrized(&Matrix::block2(
        &Matrix::identity(m),
        a,
        &a.adjoint(),
        &Matrix::identity(e),
    ))
}

/// Joint output covariance `K_YZ = H_s K H_s* + K_ME`.
pub fn joint_output_cov(ch: &WiretapChannel, k: &HermMatrix, a: &Matrix) -> HermMatrix {
    let hs = stacked(ch);
    HermMatrix::congruence(&hs, k).add(&noise_cov(a))
}

fn stacked(ch: &WiretapChannel) -> Matrix {
    Matrix::vstack(&[ch.h_m(), ch.h_e()])
}

/// `Ĩ(K, A)` evaluated in the requested form.
pub fn tilde_i(ch: &WiretapChannel, k: &HermMatrix, a: &NoiseCorrelation, form: TildeForm) -> Result<f64> {
    check_k(ch, k)?;
    a.check_dims(ch)?;
    let am = a.matrix();
    let kz = output_cov(ch.h_e(), k);
    match form {
        TildeForm::Joint => {
            let c = noise_cov(am);
            let (m, e) = (ch.n_m(), ch.n_e());
            let c_inv = block2x2_inv(
                &c.block(0, 0, m, m),
                &c.block(0, m, m, e),
                &c.block(m, 0, e, m),
                &c.block(m, m, e, e),
            )?;
            let hs = stacked(ch);
            let x = hs.adj_mul(&(&c_inv * &hs));
            Ok(logdet_i_plus(&x, k)? - logdet_chol(&kz)?)
        }
        TildeForm::BForm => {
            let b = b_of_a(ch, a)?;
            Ok(logdet_i_plus(&b, k)? - logdet_chol(&kz)?)
        }
        TildeForm::Schur => {
            let cross = &(ch.h_m() * k.as_matrix()).mul_adj(ch.h_e()) + am;
            let schur = output_cov(ch.h_m(), k).as_matrix() - &(&cross * &solve(kz.as_matrix(), &cross.adjoint())?);
            let gap = HermMatrix::identity(ch.n_m()).sub(&HermMatrix::symmetrized(&am.mul_adj(am)));
            Ok(logdet_chol(&HermMatrix::symmetrized(&schur))? - logdet_chol(&gap)?)
        }
        TildeForm::Raw => {
            let kyz = joint_output_cov(ch, k, am);
            Ok(logdet_chol(&kyz)? - logdet_chol(&kz)? - logdet_chol(&noise_cov(am))?)
        }
    }
}

/// Gradient of `Ĩ` in `K`: `H_s* K_YZ^{-1} H_s - H_E* K_Z^{-1} H_E`.
pub fn tilde_grad_k(ch: &WiretapChannel, k: &HermMatrix, a: &NoiseCorrelation) -> Result<HermMatrix> {
    check_k(ch, k)?;
    a.check_dims(ch)?;
    let hs = stacked(ch);
    let kyz = joint_output_cov(ch, k, a.matrix());
    let first = HermMatrix::symmetrized(&hs.adj_mul(&solve(&kyz, &hs)?));
    Ok(first.sub(&info_gradient(ch.h_e(), k)?))
}

/// Gradient of `Ĩ` in `A` with respect to `Re Tr(·* ·)`:
/// `2([K_YZ^{-1}]_12 - [K_ME^{-1}]_12)`.
pub fn tilde_grad_a(ch: &WiretapChannel, k: &HermMatrix, a: &NoiseCorrelation) -> Result<Matrix> {
    check_k(ch, k)?;
    a.check_dims(ch)?;
    let (m, e) = (ch.n_m(), ch.n_e());
    let kyz_inv = crate::matcore::inverse(&joint_output_cov(ch, k, a.matrix()))?;
    let kme_inv = crate::matcore::inverse(&noise_cov(a.matrix()))?;
    Ok((&kyz_inv.block(0, m, m, e) - &kme_inv.block(0, m, m, e)).scale(2.0))
}

/// Differential entropy `log det(πe K)` of a circularly symmetric complex
/// Gaussian vector.
pub fn gaussian_entropy(k: &HermMatrix) -> Result<f64> {
    Ok(logdet_pd(k)? + k.dim() as f64 * (PI * E).ln())
}

/// The rotation `(1/√2)[[I, -I], [I, I]]` mapping `(a, b)` to
/// `((a - b)/√2, (a + b)/√2)`.
fn sum_difference_rotation(half: usize) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let i = Matrix::identity(half).scale(s);
    Matrix::block2(&i, &i.scale(-1.0), &i, &i)
}

fn split_even(k: &HermMatrix) -> Result<usize> {
    if k.dim() % 2 != 0 || k.dim() == 0 {
        return Err(Error::dims("even joint dimension", format!("dim {}", k.dim())));
    }
    Ok(k.dim() / 2)
}

/// Covariance of `(a + b)/√2` given `(a - b)/√2` for jointly Gaussian
/// `(a, b)` with covariance `k_joint`.
pub fn conditional_cov_u(k_joint: &HermMatrix) -> Result<HermMatrix> {
    let h = split_even(k_joint)?;
    logdet_pd(k_joint)?;
    let s = HermMatrix::congruence(&sum_difference_rotation(h), k_joint);
    let s11 = s.block(0, 0, h, h);
    let s12 = s.block(0, h, h, h);
    let s22 = s.block(h, h, h, h);
    let sol = solve(&s11, &s12)?;
    Ok(HermMatrix::symmetrized(&(&s22 - &s12.adj_mul(&sol))))
}

/// `|h(X + a, X + b) - h(√2 X + U) - h((a - b)/√2)|` for Gaussian `X`
/// independent of `(a, b)`.
pub fn entropy_decomposition_check(k_joint: &HermMatrix, k_x: &HermMatrix) -> Result<f64> {
    let h = split_even(k_joint)?;
    if k_x.dim() != h {
        return Err(Error::dims(format!("K_X of dim {h}"), format!("dim {}", k_x.dim())));
    }
    let kx = k_x.as_matrix();
    let lhs_cov = k_joint.add(&HermMatrix::symmetrized(&Matrix::block2(kx, kx, kx, kx)));
    let lhs = gaussian_entropy(&lhs_cov)?;
    let k_u = conditional_cov_u(k_joint)?;
    let s = HermMatrix::congruence(&sum_difference_rotation(h), k_joint);
    let diff = HermMatrix::symmetrized(&s.block(0, 0, h, h));
    let rhs = gaussian_entropy(&k_x.scale(2.0).add(&k_u))? + gaussian_entropy(&diff)?;
    Ok((lhs - rhs).abs())
}
