//! Worst-case noise correlation for the converse.
//!
//! Stationary points of `Ĩ(K, ·)` solve the nonsymmetric algebraic Riccati
//! equation `0 = M21 + M22 X - X M11 - X M12 X` in `X = A*`, whose solutions
//! are graphs `[I; X]` of `n_M`-dimensional invariant subspaces of the
//! companion matrix `M`. This module assembles `M`, extracts its invariant
//! subspaces and builds feasible solutions (`I - AA* ≻ 0`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{classify, ChannelClass, WiretapChannel};
use crate::error::{Error, Result};
use crate::matcore::{eig_general, eig_herm, inverse, solve, svd, HermMatrix, Matrix, C64};
use crate::objective::NoiseCorrelation;
use crate::tol;

/// The companion matrix `M` of the Riccati equation at a given `K`.
#[derive(Debug, Clone)]
pub struct RiccatiProblem {
    m: Matrix,
    n_m: usize,
    n_e: usize,
    /// `(H_M K H_M* + I)^{-1}`.
    b_m: Matrix,
    /// Left factor `[-H_M; -H_E + H_E K H_M* B_M H_M]` of `F(M + I)`.
    left: Matrix,
    /// Right factor `(-K H_M*, K H_E*)` of `F(M + I)`.
    right: Matrix,
    /// `F = diag(H_M K H_M* + I, I)`.
    f: Matrix,
}

impl RiccatiProblem {
    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn n_m(&self) -> usize {
        self.n_m
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn m11(&self) -> Matrix {
        self.m.block(0, 0, self.n_m, self.n_m)
    }

    pub fn m12(&self) -> Matrix {
        self.m.block(0, self.n_m, self.n_m, self.n_e)
    }

    pub fn m21(&self) -> Matrix {
        self.m.block(self.n_m, 0, self.n_e, self.n_m)
    }

    pub fn m22(&self) -> Matrix {
        self.m.block(self.n_m, self.n_m, self.n_e, self.n_e)
    }

    /// `(H_M K H_M* + I)^{-1}`.
    pub fn b_m(&self) -> &Matrix {
        &self.b_m
    }

    /// `‖F (M + I) - left · right‖_F`.
    pub fn factorization_residual(&self) -> f64 {
        let lhs = &self.f * &self.m.add_identity(1.0);
        (&lhs - &(&self.left * &self.right)).frobenius()
    }

    /// `‖M21 + M22 X - X M11 - X M12 X‖_F`.
    pub fn residual_x(&self, x: &Matrix) -> f64 {
        let m11 = self.m11();
        let m12 = self.m12();
        let m21 = self.m21();
        let m22 = self.m22();
        let r = &(&m21 + &(&m22 * x)) - &(&(x * &m11) + &(&(x * &m12) * x));
        r.frobenius()
    }
}

/// Assembles `M` from the channel and `K`.
pub fn build_m(ch: &WiretapChannel, k: &HermMatrix) -> Result<RiccatiProblem> {
    if k.dim() != ch.n() {
        return Err(Error::dims(format!("K of dim {}", ch.n()), format!("dim {}", k.dim())));
    }
    let (hm, he) = (ch.h_m(), ch.h_e());
    let (n_m, n_e) = (ch.n_m(), ch.n_e());
    let km = k.as_matrix();
    let kym = HermMatrix::congruence(hm, k).add_identity(1.0);
    let b_m = inverse(&kym)?;
    let hkhm = (hm * km).mul_adj(hm);
    let m_ke = (hm * km).mul_adj(he); // H_M K H_E*
    let e_km = (he * km).mul_adj(hm); // H_E K H_M*
    let e_ke = (he * km).mul_adj(he); // H_E K H_E*

    let m11 = -&b_m;
    let m12 = -&(&b_m * &m_ke);
    let m21 = &e_km * &b_m;
    let m22 = &(-&e_ke).add_identity(-1.0) + &(&m21 * &m_ke);
    let m = Matrix::block2(&m11, &m12, &m21, &m22);

    let left = Matrix::vstack(&[&-hm, &(&-he + &(&(&e_km * &b_m) * hm))]);
    let right = Matrix::hstack(&[&-&km.mul_adj(hm), &km.mul_adj(he)]);
    let f = Matrix::block2(
        &hkhm.add_identity(1.0),
        &Matrix::zeros(n_m, n_e),
        &Matrix::zeros(n_e, n_m),
        &Matrix::identity(n_e),
    );
    Ok(RiccatiProblem {
        m,
        n_m,
        n_e,
        b_m,
        left,
        right,
        f,
    })
}

/// Riccati residual at the correlation `A` (the unknown is `X = A*`).
pub fn riccati_residual(ch: &WiretapChannel, k: &HermMatrix, a: &Matrix) -> Result<f64> {
    Ok(build_m(ch, k)?.residual_x(&a.adjoint()))
}

/// Orthonormal basis of `ker(M + I)` from the SVD of `M + I`.
pub fn eigenspace_minus_one(prob: &RiccatiProblem) -> Result<Matrix> {
    Ok(svd(&prob.m.add_identity(1.0))?.null_space(tol::RANK_TOL))
}

/// Eigenpair of `M` for `-1`: the eigenvector of the computed eigenvalue
/// closest to `-1` and its residual `‖M v + v‖ / ‖M‖_F`.
pub fn minus_one_eigenpair(prob: &RiccatiProblem) -> Result<(C64, f64)> {
    let e = eig_general(&prob.m)?;
    let (idx, lambda) = e
        .values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| (a.1 + 1.0).norm().total_cmp(&(b.1 + 1.0).norm()))
        .ok_or_else(|| Error::InvalidMatrix("empty companion matrix".into()))?;
    let v = e.vectors.column(idx);
    let mv = prob.m.mat_vec(&v);
    let r: f64 = mv.iter().zip(&v).map(|(a, b)| (a + b).norm_sqr()).sum::<f64>().sqrt();
    let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok((lambda, r / (vn * prob.m.frobenius().max(f64::MIN_POSITIVE))))
}

/// `H_E (H_M*H_M)^{-1} H_M*`: the main-form solution.
pub fn main_form(ch: &WiretapChannel) -> Result<Matrix> {
    Ok(ch.h_e() * &solve(ch.gram_m(), &ch.h_m().adjoint())?)
}

/// `H_E (H_E*H_E)^{-1} H_M*`: the eavesdropper-form solution.
pub fn eve_form(ch: &WiretapChannel) -> Result<Matrix> {
    Ok(ch.h_e() * &solve(ch.gram_e(), &ch.h_m().adjoint())?)
}

/// Residual `‖M S - S (S⁺ M S)‖_F` of the claim that `span(S)` is
/// `M`-invariant.
pub fn invariance_residual(m: &Matrix, s: &Matrix) -> Result<f64> {
    let ms = m * s;
    let coeff = solve(&s.adj_mul(s), &s.adj_mul(&ms))?;
    Ok((&ms - &(s * &coeff)).frobenius())
}

/// `[I; H_E (H_M*H_M)^{-1} H_M*]`, which spans an invariant subspace of `M`.
pub fn main_block(ch: &WiretapChannel) -> Result<Matrix> {
    Ok(Matrix::vstack(&[&Matrix::identity(ch.n_m()), &main_form(ch)?]))
}

/// `J = -(H_M K H_M* + I)^{-1} (H_M K H_E* H_E (H_M*H_M)^{-1} H_M* + I)`,
/// the action of `M` on the main block.
pub fn jordan_j(ch: &WiretapChannel, k: &HermMatrix) -> Result<Matrix> {
    let prob = build_m(ch, k)?;
    let hm = ch.h_m();
    let inner = (&(&(hm * k.as_matrix()).mul_adj(ch.h_e()) * &main_form(ch)?)).add_identity(1.0);
    Ok(-&(prob.b_m() * &inner))
}

/// Factor `U_X` with `K ≈ U_X U_X*`, keeping eigenvalues above
/// `RANK_TOL * scale`.
pub fn low_rank_factor(k: &HermMatrix, scale: f64) -> Result<Matrix> {
    let e = eig_herm(k)?;
    let threshold = tol::RANK_TOL * scale;
    let keep: Vec<usize> = (0..k.dim()).filter(|&j| e.values[j] > threshold).collect();
    let n = k.dim();
    Ok(Matrix::from_fn(n, keep.len(), |i, jj| {
        let j = keep[jj];
        e.vectors[(i, j)] * e.values[j].sqrt()
    }))
}

/// Basis blocks of the rank-deficient Jordan decomposition.
#[derive(Debug, Clone)]
pub struct JordanData {
    /// `K = U_X U_X*`, `n x r`.
    pub u_x: Matrix,
    /// `B_M H_M U_X`, spans a `J`-invariant subspace.
    pub z: Matrix,
    /// Orthonormal basis of the `-1` eigenspace of `J`.
    pub q: Matrix,
}

pub fn jordan_data(ch: &WiretapChannel, k: &HermMatrix) -> Result<JordanData> {
    let u_x = low_rank_factor(k, ch.power())?;
    let prob = build_m(ch, k)?;
    let z = &(prob.b_m() * ch.h_m()) * &u_x;
    let j = jordan_j(ch, k)?;
    let q = svd(&j.add_identity(1.0))?.null_space(tol::RANK_TOL);
    Ok(JordanData { u_x, z, q })
}

/// Which closed-form solution of the degraded cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradedForm {
    /// `A* = H_E (H_M*H_M)^{-1} H_M*`, for `H_M*H_M ≻ H_E*H_E`.
    Main,
    /// `A* = H_E (H_E*H_E)^{-1} H_M*`, for `H_E*H_E ≻ H_M*H_M`.
    Eve,
}

/// How a solution was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionFamily {
    Degraded(DegradedForm),
    /// `(C1 Z V, C2 W)(Z V, W)^{-1}` with the eavesdropper lift `C2` of `W`.
    LowRank,
    /// Invariant subspace `span[Z; C1 Z] ⊕ S` with `S` a general subspace
    /// of `ker(M + I)`.
    KernelCompletion,
    /// A kernel completion moved within the solution slice
    /// `{X : X H_M U_X = H_E U_X}` to satisfy the inner-max optimality test.
    SaddleRefined,
}

/// A constructed solution `X = A*` of the Riccati equation.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// `X = A*`, `n_E x n_M`.
    pub x: Matrix,
    /// `n_M x n_M` basis `[T1; T2]` of the invariant subspace, `X = T2 T1^{-1}`.
    pub basis: Matrix,
    pub v: Matrix,
    pub w: Matrix,
    pub residual: f64,
    /// Smallest eigenvalue of `I - AA*`.
    pub min_gap_eig: f64,
    pub feasible: bool,
    /// `‖A* H_M K - H_E K‖_F`.
    pub kernel_identity: f64,
    pub family: SolutionFamily,
    /// `U_X`, `Z` and the `-1` eigenspace of `J` at the `K` of the solution.
    pub jordan: Option<JordanData>,
}

impl RiccatiSolution {
    /// The correlation `A = X*`; fails when the solution is infeasible.
    pub fn correlation(&self) -> Result<NoiseCorrelation> {
        NoiseCorrelation::from_adjoint(&self.x)
    }

    pub fn a(&self) -> Matrix {
        self.x.adjoint()
    }

    /// Residual, feasibility and kernel identity all within tolerance.
    pub fn is_certifiable(&self) -> bool {
        self.feasible && self.residual <= tol::RICCATI_TOL && self.kernel_identity <= tol::RICCATI_TOL
    }
}

fn min_gap_eig(x: &Matrix) -> f64 {
    // I - AA* = I - X*X (n_M x n_M).
    let g = HermMatrix::identity(x.cols()).sub(&HermMatrix::gram(x));
    eig_herm(&g).map(|e| e.min()).unwrap_or(f64::NEG_INFINITY)
}

fn finish(
    ch: &WiretapChannel,
    k: &HermMatrix,
    prob: &RiccatiProblem,
    x: Matrix,
    basis: Matrix,
    v: Matrix,
    w: Matrix,
    family: SolutionFamily,
) -> RiccatiSolution {
    let residual = prob.residual_x(&x);
    let min_gap = min_gap_eig(&x);
    let feasible = NoiseCorrelation::from_adjoint(&x).is_ok();
    let km = k.as_matrix();
    let kernel_identity = (&(&(&x * ch.h_m()) * km) - &(ch.h_e() * km)).frobenius();
    RiccatiSolution {
        x,
        basis,
        v,
        w,
        residual,
        min_gap_eig: min_gap,
        feasible,
        kernel_identity,
        family,
        jordan: jordan_data(ch, k).ok(),
    }
}

/// `X = T2 T1^{-1}` with a condition-number guard on `T1`.
fn graph_of(basis: &Matrix, n_m: usize, n_e: usize) -> Result<Matrix> {
    let t1 = basis.block(0, 0, n_m, n_m);
    let t2 = basis.block(n_m, 0, n_e, n_m);
    let cond = svd(&t1)?.condition();
    if !(cond < tol::MAX_BASIS_COND) {
        return Err(Error::SingularBasis { cond });
    }
    crate::matcore::solve_right(&t2, &t1)
}

/// Closed-form solution of a degraded channel.
pub fn solve_a_degraded(ch: &WiretapChannel, k: &HermMatrix, which: DegradedForm) -> Result<RiccatiSolution> {
    let class = classify(ch);
    let (want, label) = match which {
        DegradedForm::Main => (ChannelClass::DegradedMain, "degraded-main"),
        DegradedForm::Eve => (ChannelClass::DegradedEve, "degraded-eavesdropper"),
    };
    if class != want {
        return Err(Error::WrongChannelClass {
            expected: label,
            found: class,
        });
    }
    let prob = build_m(ch, k)?;
    let x = match which {
        DegradedForm::Main => main_form(ch)?,
        DegradedForm::Eve => eve_form(ch)?,
    };
    let basis = Matrix::vstack(&[&Matrix::identity(ch.n_m()), &x]);
    let (v, w) = match which {
        DegradedForm::Main => (Matrix::identity(ch.n_m()), Matrix::zeros(ch.n_m(), 0)),
        DegradedForm::Eve => (Matrix::zeros(ch.n_m(), 0), Matrix::identity(ch.n_m())),
    };
    Ok(finish(ch, k, &prob, x, basis, v, w, SolutionFamily::Degraded(which)))
}

/// Rank-deficient solution `A* = (C1 Z V, C2 W)(Z V, W)^{-1}` with
/// `Z = B_M H_M U_X`, `C1` the main form and `C2` the eavesdropper form.
///
/// `w` is `n_M x (n_M - r)` and `v` is `r x r`.
pub fn solve_a_lowrank(ch: &WiretapChannel, k: &HermMatrix, w: &Matrix, v: &Matrix) -> Result<RiccatiSolution> {
    let (n, n_m, n_e) = (ch.n(), ch.n_m(), ch.n_e());
    let u_x = low_rank_factor(k, ch.power())?;
    let r = u_x.cols();
    if r >= n {
        return Err(Error::NotRankDeficient { rank: r, n });
    }
    if w.shape() != (n_m, n_m - r) || v.shape() != (r, r) {
        return Err(Error::dims(
            format!("W {}x{}, V {r}x{r}", n_m, n_m - r),
            format!(
                "W {}x{}, V {}x{}",
                w.rows(),
                w.cols(),
                v.rows(),
                v.cols()
            ),
        ));
    }
    let prob = build_m(ch, k)?;
    let zv = &(&(prob.b_m() * ch.h_m()) * &u_x) * v;
    let c1 = main_form(ch)?;
    let c2 = eve_form(ch)?;
    let top = Matrix::hstack(&[&zv, w]);
    let bottom = Matrix::hstack(&[&(&c1 * &zv), &(&c2 * w)]);
    let basis = Matrix::vstack(&[&top, &bottom]);
    let x = graph_of(&basis, n_m, n_e)?;
    Ok(finish(ch, k, &prob, x, basis, v.clone(), w.clone(), SolutionFamily::LowRank))
}

/// The indefinite form `Φ(t) = |t1|² - |t2|²` on `C^{n_M + n_E}`; an
/// invariant subspace gives a feasible `X` iff `Φ` is positive definite on it.
fn phi_gram(a: &Matrix, b: &Matrix, n_m: usize) -> Matrix {
    let mut jb = b.clone();
    for i in n_m..b.rows() {
        for j in 0..b.cols() {
            jb[(i, j)] = -jb[(i, j)];
        }
    }
    a.adj_mul(&jb)
}

/// Best `count`-dimensional subspace of `span(candidates)` to complete
/// `fixed` into a subspace where `Φ` is positive definite: the top
/// eigenvectors of the Schur complement of `Φ` against `fixed`.
///
/// Returns the chosen columns and the smallest retained eigenvalue.
fn schur_guided_completion(fixed: &Matrix, candidates: &Matrix, count: usize, n_m: usize) -> Result<(Matrix, f64)> {
    let cand = orthonormal_columns(candidates)?;
    let mut form = HermMatrix::symmetrized(&phi_gram(&cand, &cand, n_m));
    if fixed.cols() > 0 {
        let ff = phi_gram(fixed, fixed, n_m);
        let cf = phi_gram(&cand, fixed, n_m);
        let correction = &cf * &solve(&ff, &cf.adjoint())?;
        form = HermMatrix::symmetrized(&(form.as_matrix() - &correction));
    }
    let e = eig_herm(&form)?;
    let d = cand.cols();
    if count > d {
        return Err(Error::dims(format!("at least {count} candidate directions"), format!("{d}")));
    }
    let idx: Vec<usize> = ((d - count)..d).collect();
    let margin = if count == 0 { f64::INFINITY } else { e.values[d - count] };
    Ok((&cand * &e.vectors.select_columns(&idx), margin))
}

fn orthonormal_columns(a: &Matrix) -> Result<Matrix> {
    if a.cols() == 0 {
        return Ok(a.clone());
    }
    Ok(svd(a)?.range(1e-12))
}

/// Pieces shared by the rank-deficient constructions.
struct LowRankSetup {
    prob: RiccatiProblem,
    n_m: usize,
    n_e: usize,
    r: usize,
    u_x: Matrix,
    /// `[Z; C1 Z]`.
    t_z: Matrix,
    c2: Matrix,
}

fn low_rank_setup(ch: &WiretapChannel, k: &HermMatrix) -> Result<LowRankSetup> {
    let n = ch.n();
    let u_x = low_rank_factor(k, ch.power())?;
    let r = u_x.cols();
    if r >= n {
        return Err(Error::NotRankDeficient { rank: r, n });
    }
    let prob = build_m(ch, k)?;
    let z = &(prob.b_m() * ch.h_m()) * &u_x;
    let c1 = main_form(ch)?;
    let t_z = Matrix::vstack(&[&z, &(&c1 * &z)]);
    Ok(LowRankSetup {
        n_m: ch.n_m(),
        n_e: ch.n_e(),
        r,
        u_x,
        t_z,
        c2: eve_form(ch)?,
        prob,
    })
}

impl LowRankSetup {
    /// `ker(M + I) = ker(U_X* [-H_M*, H_E*])`, orthonormal.
    fn kernel(&self, ch: &WiretapChannel) -> Result<Matrix> {
        let row = Matrix::hstack(&[&-&(ch.h_m() * &self.u_x).adjoint(), &(ch.h_e() * &self.u_x).adjoint()]);
        let dim = self.n_m + self.n_e;
        if self.r == 0 {
            return Ok(Matrix::identity(dim));
        }
        let s = svd(&row)?;
        let idx: Vec<usize> = (self.r..dim).collect();
        Ok(s.v.select_columns(&idx))
    }

    fn from_completion(
        &self,
        ch: &WiretapChannel,
        k: &HermMatrix,
        completion: &Matrix,
        family: SolutionFamily,
    ) -> Result<RiccatiSolution> {
        let basis = Matrix::hstack(&[&self.t_z, completion]);
        let x = graph_of(&basis, self.n_m, self.n_e)?;
        let w = completion.block(0, 0, self.n_m, completion.cols());
        Ok(finish(ch, k, &self.prob, x, basis, Matrix::identity(self.r), w, family))
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Default number of candidates tried by [`feasibility_search`].
pub const FEASIBILITY_TRIES: usize = 256;

/// Which invariant subspaces a search may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchScope {
    /// Only `(C1 Z V, C2 W)(Z V, W)^{-1}`.
    LowRankFamily,
    /// The low-rank family first, then general completions inside
    /// `ker(M + I)`.
    Full,
}

/// Searches for a feasible rank-deficient Riccati solution.
///
/// Candidates, in order: `W` along the positive eigenvectors of
/// `I - H_M (H_E*H_E)^{-1} H_M*`; the best `W` for the exact feasibility
/// test within the `(C1 Z V, C2 W)` family; the best completion by a general
/// subspace of `ker(M + I)`; then seeded perturbations of that completion.
/// The first candidate that is feasible with residual and kernel identity
/// within `RICCATI_TOL` is returned.
pub fn feasibility_search(ch: &WiretapChannel, k: &HermMatrix, seed: u64, tries: usize) -> Result<RiccatiSolution> {
    feasibility_search_in(ch, k, seed, tries, SearchScope::Full)
}

/// [`feasibility_search`] restricted to `scope`. With
/// [`SearchScope::LowRankFamily`] the seeded phase perturbs `W` and scales
/// `V` instead of leaving the family.
pub fn feasibility_search_in(
    ch: &WiretapChannel,
    k: &HermMatrix,
    seed: u64,
    tries: usize,
    scope: SearchScope,
) -> Result<RiccatiSolution> {
    let setup = low_rank_setup(ch, k)?;
    let (n_m, r) = (setup.n_m, setup.r);
    let need = n_m - r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempt = 0usize;
    let accept = |s: &RiccatiSolution| s.is_certifiable();

    // Positive directions of I - H_M E^{-1} H_M*.
    let guided_w = {
        let q2 = HermMatrix::identity(n_m).sub(&HermMatrix::symmetrized(
            &(ch.h_m() * &solve(ch.gram_e(), &ch.h_m().adjoint())?),
        ));
        let e = eig_herm(&q2)?;
        let idx: Vec<usize> = (r..n_m).collect();
        e.vectors.select_columns(&idx)
    };
    if attempt < tries {
        attempt += 1;
        if let Ok(sol) = solve_a_lowrank(ch, k, &guided_w, &Matrix::identity(r)) {
            if accept(&sol) {
                return Ok(sol);
            }
        }
    }

    // Exact feasibility test within the family.
    let family_dirs = Matrix::vstack(&[&Matrix::identity(n_m), &setup.c2]);
    let family_w = schur_guided_completion(&setup.t_z, &family_dirs, need, n_m)
        .map(|(cols, _)| cols.block(0, 0, n_m, need))
        .unwrap_or_else(|_| guided_w.clone());
    if attempt < tries {
        attempt += 1;
        if let Ok(sol) = solve_a_lowrank(ch, k, &family_w, &Matrix::identity(r)) {
            if accept(&sol) {
                return Ok(sol);
            }
        }
    }

    if scope == SearchScope::LowRankFamily {
        let mut eps = 1e-3;
        while attempt < tries {
            attempt += 1;
            let w = &family_w + &gaussian_matrix(&mut rng, n_m, need).scale(eps);
            let s: f64 = rng.random_range(0.5..2.0);
            if let Ok(sol) = solve_a_lowrank(ch, k, &w, &Matrix::identity(r).scale(s)) {
                if accept(&sol) {
                    return Ok(sol);
                }
            }
            eps = (eps * 1.5).min(10.0);
        }
        return Err(Error::FeasibleNotFound { tries });
    }

    // General completion inside ker(M + I).
    let kernel = setup.kernel(ch)?;
    let (best, _) = schur_guided_completion(&setup.t_z, &kernel, need, n_m)?;
    if attempt < tries {
        attempt += 1;
        if let Ok(sol) = setup.from_completion(ch, k, &best, SolutionFamily::KernelCompletion) {
            if accept(&sol) {
                return Ok(sol);
            }
        }
    }

    // Seeded perturbations of the completion, within the kernel.
    let coords = kernel.adj_mul(&best);
    let mut eps = 1e-3;
    while attempt < tries {
        attempt += 1;
        let noise = gaussian_matrix(&mut rng, kernel.cols(), need).scale(eps);
        let cand = &kernel * &(&coords + &noise);
        if let Ok(sol) = setup.from_completion(ch, k, &cand, SolutionFamily::KernelCompletion) {
            if accept(&sol) {
                return Ok(sol);
            }
        }
        eps = (eps * 1.5).min(10.0);
    }
    Err(Error::FeasibleNotFound { tries })
}

/// Violation of the inner-max optimality test at `X` in the slice:
/// the largest eigenvalue of `N* (D* (I - XX*)^{-1} D - Ψ) N`, where
/// `D = H_E - X H_M`, `Ψ = λ I - ∇R(K)`, and `N` spans `ker K`.
///
/// `max_K Ĩ(K, A)` equals the secrecy rate at `K` exactly when this is `<= 0`.
pub fn inner_max_violation(ch: &WiretapChannel, k: &HermMatrix, x: &Matrix) -> Result<f64> {
    let test = kernel_test(ch, k)?;
    Ok(test.eigs(x)?.last().copied().unwrap_or(f64::NEG_INFINITY))
}

struct KernelTest {
    /// Orthonormal basis of `ker K`.
    n_k: Matrix,
    /// `N* Ψ N`.
    psi: Matrix,
    hm_n: Matrix,
    he_n: Matrix,
}

fn kernel_test(ch: &WiretapChannel, k: &HermMatrix) -> Result<KernelTest> {
    let e = eig_herm(k)?;
    let threshold = tol::RANK_TOL * ch.power();
    let idx: Vec<usize> = (0..k.dim()).filter(|&j| e.values[j] <= threshold).collect();
    let n_k = e.vectors.select_columns(&idx);
    let grad = crate::objective::secrecy_grad(ch, k)?;
    let lambda = crate::optimizer::multiplier_estimate(&grad, k);
    let psi_full = grad.scale(-1.0).add_identity(lambda);
    let psi = n_k.adj_mul(&(psi_full.as_matrix() * &n_k));
    Ok(KernelTest {
        hm_n: ch.h_m() * &n_k,
        he_n: ch.h_e() * &n_k,
        n_k,
        psi,
    })
}

impl KernelTest {
    fn eigs(&self, x: &Matrix) -> Result<Vec<f64>> {
        if self.n_k.cols() == 0 {
            return Ok(Vec::new());
        }
        let d = &self.he_n - &(x * &self.hm_n);
        let gap = &Matrix::identity(x.rows()) - &x.mul_adj(x);
        let lhs = d.adj_mul(&solve(&gap, &d)?);
        Ok(eig_herm(&HermMatrix::symmetrized(&(&lhs - &self.psi)))?.values)
    }
}

/// Moves a feasible rank-deficient solution within the slice
/// `X = X0 + Ξ N_h*`, `N_h ⊥ span(H_M U_X)`, to satisfy the inner-max test.
///
/// Every member of the slice solves the Riccati equation and satisfies the
/// kernel identity, so only feasibility and the test are tracked. Minimizes
/// `Σ max(μ_i + δ, 0)²` over the test eigenvalues `μ_i` by gradient descent
/// with finite-difference gradients and Armijo backtracking.
pub fn refine_for_saddle(ch: &WiretapChannel, k: &HermMatrix, start: &RiccatiSolution) -> Result<RiccatiSolution> {
    let test = kernel_test(ch, k)?;
    if test.n_k.cols() == 0 || !start.feasible {
        return Ok(start.clone());
    }
    let n_m = ch.n_m();
    let n_e = ch.n_e();
    let u_x = low_rank_factor(k, ch.power())?;
    let hu = ch.h_m() * &u_x;
    // Orthonormal complement of span(H_M U_X) in C^{n_M}.
    let n_h = if hu.cols() == 0 {
        Matrix::identity(n_m)
    } else {
        let s = svd(&hu.adjoint())?;
        let idx: Vec<usize> = (hu.cols()..n_m).collect();
        s.v.select_columns(&idx)
    };
    let q = n_h.cols();
    if q == 0 {
        return Ok(start.clone());
    }
    let scale = test.psi.frobenius().max(1.0);
    let delta = 1e-7 * scale;
    let objective = |xi: &[f64]| -> Option<f64> {
        let x = slice_point(&start.x, &n_h, xi, n_e, q);
        if min_gap_eig(&x) <= tol::pd_threshold(1.0) * 10.0 {
            return None;
        }
        let mu = test.eigs(&x).ok()?;
        Some(mu.iter().map(|m| (m + delta).max(0.0).powi(2)).sum())
    };
    let dim = 2 * n_e * q;
    let mut xi = vec![0.0; dim];
    let Some(mut fx) = objective(&xi) else {
        return Ok(start.clone());
    };
    let h = 1e-7;
    for _ in 0..2000 {
        if fx == 0.0 {
            break;
        }
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut xp = xi.clone();
            let mut xm = xi.clone();
            xp[i] += h;
            xm[i] -= h;
            match (objective(&xp), objective(&xm)) {
                (Some(a), Some(b)) => grad[i] = (a - b) / (2.0 * h),
                (Some(a), None) => grad[i] = (a - fx) / h,
                (None, Some(b)) => grad[i] = (fx - b) / h,
                (None, None) => {}
            }
        }
        let gn2: f64 = grad.iter().map(|g| g * g).sum();
        if gn2 == 0.0 {
            break;
        }
        let mut step = (fx / gn2).max(1e-12);
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = xi.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            if let Some(fc) = objective(&cand) {
                if fc <= fx - 1e-4 * step * gn2 {
                    xi = cand;
                    fx = fc;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let x = slice_point(&start.x, &n_h, &xi, n_e, q);
    let basis = Matrix::vstack(&[&Matrix::identity(n_m), &x]);
    let prob = build_m(ch, k)?;
    Ok(finish(
        ch,
        k,
        &prob,
        x,
        basis,
        start.v.clone(),
        start.w.clone(),
        SolutionFamily::SaddleRefined,
    ))
}

fn slice_point(x0: &Matrix, n_h: &Matrix, xi: &[f64], n_e: usize, q: usize) -> Matrix {
    let m = Matrix::from_fn(n_e, q, |i, j| {
        let idx = 2 * (i * q + j);
        C64::new(xi[idx], xi[idx + 1])
    });
    x0 + &m.mul_adj(n_h)
}
