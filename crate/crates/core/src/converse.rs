//! The converse end to end: minimize `Ĩ(K, ·)` over Riccati candidates,
//! check the saddle equality, and certify that the converse value matches
//! the achievable secrecy rate.

use crate::channel::{classify, ChannelClass, WiretapChannel};
use crate::error::{Error, Result};
use crate::matcore::{eig_herm, inv_pd, HermMatrix, Matrix};
use crate::objective::{b_of_a, secrecy_rate, tilde_grad_k, tilde_i, InputCovariance, NoiseCorrelation, TildeForm};
use crate::optimizer::{
    maximize_secrecy, oracle_search, polish_ascent, projected_gradient_ascent, rank_of, OptimizerOptions,
};
use crate::riccati::{
    feasibility_search, feasibility_search_in, refine_for_saddle, riccati_residual, solve_a_degraded,
    DegradedForm, RiccatiSolution, SearchScope, SolutionFamily, FEASIBILITY_TRIES,
};
use crate::tol;

/// Where a noise-correlation candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    DegradedMain,
    DegradedEve,
    LowRank,
    /// `A = 0`, an upper reference that is always feasible.
    Zero,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub source: CandidateSource,
    pub value: f64,
    pub correlation: NoiseCorrelation,
    pub riccati: Option<RiccatiSolution>,
}

/// Result of [`min_over_a`].
#[derive(Debug, Clone)]
pub struct MinOverA {
    pub value: f64,
    pub a_star: NoiseCorrelation,
    pub source: CandidateSource,
    /// The Riccati solution behind `a_star`, if any.
    pub riccati: Option<RiccatiSolution>,
    pub candidates: Vec<Candidate>,
    /// Riccati candidates whose values differ by more than `GAP_TOL`.
    pub disagreement: bool,
    /// Failure of the rank-deficient search, when it ran.
    pub search_error: Option<Error>,
}

const FORM: TildeForm = TildeForm::Schur;

/// Minimum of `Ĩ(K, A)` over the available feasible candidates: the
/// degraded closed forms when the class permits, a feasible rank-deficient
/// Riccati solution when `rank K < n`, and `A = 0`.
pub fn min_over_a(ch: &WiretapChannel, k: &HermMatrix, seed: u64, tries: usize) -> Result<MinOverA> {
    let class = classify(ch);
    let mut riccati = Vec::new();
    let mut search_error = None;
    match class {
        ChannelClass::DegradedMain => riccati.push((CandidateSource::DegradedMain, solve_a_degraded(ch, k, DegradedForm::Main)?)),
        ChannelClass::DegradedEve => riccati.push((CandidateSource::DegradedEve, solve_a_degraded(ch, k, DegradedForm::Eve)?)),
        _ => {}
    }
    if rank_of(k, ch.power()) < ch.n() && class != ChannelClass::DegradedEve {
        match feasibility_search(ch, k, seed, tries) {
            Ok(sol) => riccati.push((CandidateSource::LowRank, sol)),
            Err(e) => search_error = Some(e),
        }
    }

    let mut candidates = Vec::new();
    for (source, sol) in riccati {
        let Ok(a) = sol.correlation() else { continue };
        if let Ok(value) = tilde_i(ch, k, &a, FORM) {
            candidates.push(Candidate {
                source,
                value,
                correlation: a,
                riccati: Some(sol),
            });
        }
    }
    let zero = NoiseCorrelation::zeros(ch.n_m(), ch.n_e());
    if let Ok(value) = tilde_i(ch, k, &zero, FORM) {
        candidates.push(Candidate {
            source: CandidateSource::Zero,
            value,
            correlation: zero,
            riccati: None,
        });
    }

    let ric_values: Vec<f64> = candidates.iter().filter(|c| c.riccati.is_some()).map(|c| c.value).collect();
    let disagreement = ric_values.iter().any(|a| ric_values.iter().any(|b| (a - b).abs() > tol::GAP_TOL));
    let best = candidates
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .cloned()
        .ok_or(Error::NoFeasibleCandidate)?;
    Ok(MinOverA {
        value: best.value,
        a_star: best.correlation,
        source: best.source,
        riccati: best.riccati,
        candidates,
        disagreement,
        search_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleOptions {
    pub optimizer: OptimizerOptions,
    /// Seed of the Riccati feasibility search.
    pub seed: u64,
    pub feasibility_tries: usize,
    /// Samples of the oracle run on boundary channels.
    pub oracle_budget: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            optimizer: OptimizerOptions::default(),
            seed: 42,
            feasibility_tries: FEASIBILITY_TRIES,
            oracle_budget: 200_000,
        }
    }
}

/// Verdict of [`saddle_check`].
#[derive(Debug, Clone)]
pub struct SaddleReport {
    pub channel_class: ChannelClass,
    /// `max_K R(K)`.
    pub achievability: f64,
    /// `min_A Ĩ(K*, A)`, i.e. `max_K min_A Ĩ` at the achievability optimum.
    pub converse: f64,
    /// `converse - achievability`.
    pub gap: f64,
    pub k_star: InputCovariance,
    pub a_star: NoiseCorrelation,
    pub k_rank: usize,
    pub riccati_residual: f64,
    pub feasible: bool,
    /// `‖A* H_M K* - H_E K*‖_F`.
    pub kernel_identity: f64,
    /// `max_K Ĩ(K, A*)`, an upper bound on `min_A max_K Ĩ`.
    pub inner_max: f64,
    /// `inner_max - converse`: the duality gap of the pair `(K*, A*)`.
    pub saddle_gap: f64,
    pub source: CandidateSource,
    pub family: Option<SolutionFamily>,
    /// Oracle value, computed for boundary channels only.
    pub oracle: Option<f64>,
    pub optimizer_converged: bool,
    pub certified: bool,
    pub notices: Vec<String>,
}

/// `max_K Ĩ(K, A)` by projected gradient ascent from `start`; the problem
/// is concave in `K`.
pub fn inner_max(ch: &WiretapChannel, a: &NoiseCorrelation, start: &HermMatrix, opts: &OptimizerOptions) -> Result<f64> {
    let f = |k: &HermMatrix| tilde_i(ch, k, a, FORM);
    let g = |k: &HermMatrix| tilde_grad_k(ch, k, a);
    let run = projected_gradient_ascent(f, g, start, ch.power(), opts)?;
    let run = polish_ascent(f, g, run, ch.power(), opts)?;
    Ok(run.value.max(f(start)?))
}

/// Achievability, converse and the saddle-point check for one channel.
pub fn saddle_check(ch: &WiretapChannel, opts: &SaddleOptions) -> Result<SaddleReport> {
    let class = classify(ch);
    let mut notices = Vec::new();
    let opt = maximize_secrecy(ch, &opts.optimizer);
    if !opt.converged {
        notices.push("achievability optimizer did not converge".to_string());
    }
    let k = opt.k_star.matrix().clone();
    let mut min = min_over_a(ch, &k, opts.seed, opts.feasibility_tries)?;
    if let Some(e) = &min.search_error {
        notices.push(format!("rank-deficient search: {e}"));
    }
    if min.disagreement {
        notices.push("Riccati candidates disagree by more than the gap tolerance".to_string());
    }

    let mut upper = inner_max(ch, &min.a_star, &k, &opts.optimizer)?;
    // A Riccati solution that leaves room for the inner max is moved within
    // its solution slice until the inner max is pinned at K*.
    if upper > opt.value + tol::GAP_TOL {
        if let Some(sol) = min.riccati.as_ref().filter(|s| s.family != SolutionFamily::Degraded(DegradedForm::Main)) {
            let refined = refine_for_saddle(ch, &k, sol)?;
            if let Ok(a) = refined.correlation() {
                let value = tilde_i(ch, &k, &a, FORM)?;
                let refined_upper = inner_max(ch, &a, &k, &opts.optimizer)?;
                if refined.is_certifiable() && refined_upper < upper {
                    notices.push("noise correlation refined for the inner maximum".to_string());
                    upper = refined_upper;
                    min.value = value;
                    min.a_star = a;
                    min.riccati = Some(refined);
                }
            }
        }
    }

    let a_mat = min.a_star.matrix().clone();
    let residual = riccati_residual(ch, &k, &a_mat)?;
    let km = k.as_matrix();
    let kernel_identity = (&(&(&a_mat.adjoint() * ch.h_m()) * km) - &(ch.h_e() * km)).frobenius();
    let feasible = min.a_star.min_eig() > tol::pd_threshold(1.0) && residual <= tol::RICCATI_TOL;
    let gap = min.value - opt.value;
    let saddle_gap = upper - min.value;

    let oracle = if class == ChannelClass::Boundary {
        let v = oracle_search(ch, opts.oracle_budget, opts.seed);
        notices.push(format!(
            "boundary channel: certified only against the oracle (oracle {v:.9}, optimizer {:.9})",
            opt.value
        ));
        Some(v)
    } else {
        None
    };

    let certified = class != ChannelClass::Boundary
        && feasible
        && gap.abs() <= tol::GAP_TOL
        && upper <= opt.value + tol::GAP_TOL;
    if class != ChannelClass::Boundary && !certified {
        if !feasible {
            notices.push("no feasible Riccati correlation within tolerance".to_string());
        }
        if gap.abs() > tol::GAP_TOL {
            notices.push(format!("converse exceeds achievability by {gap:e}"));
        }
        if upper > opt.value + tol::GAP_TOL {
            notices.push(format!("inner maximum exceeds achievability by {:e}", upper - opt.value));
        }
    }

    Ok(SaddleReport {
        channel_class: class,
        achievability: opt.value,
        converse: min.value,
        gap,
        k_rank: opt.rank,
        k_star: opt.k_star,
        a_star: min.a_star,
        riccati_residual: residual,
        feasible,
        kernel_identity,
        inner_max: upper,
        saddle_gap,
        source: min.source,
        family: min.riccati.as_ref().map(|s| s.family),
        oracle,
        optimizer_converged: opt.converged,
        certified,
        notices,
    })
}

/// Residual of `(H_M* - H_E*A*)(I - AA*)^{-1}(H_M - A H_E) + H_E*H_E = H_M*H_M`
/// at the main-form `A`.
pub fn degraded_identity_check(ch: &WiretapChannel) -> Result<f64> {
    let sol = solve_a_degraded(ch, &HermMatrix::zeros(ch.n()), DegradedForm::Main)?;
    let b = b_of_a(ch, &sol.correlation()?)?;
    Ok((b.as_matrix() - ch.gram_m().as_matrix()).frobenius())
}

/// Outcome of [`lowrank_converse_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankReport {
    pub applicable: bool,
    pub rank: usize,
    pub n: usize,
    pub rank_deficient: bool,
    /// Numerical rank of `B(A)^{-1} - (H_E*H_E)^{-1}` at a low-rank-family
    /// Riccati `A`.
    pub difference_rank: Option<usize>,
    /// `n_M` minus the number of columns of `W`.
    pub bound: Option<usize>,
    pub confirmed: bool,
    pub notice: Option<String>,
}

/// Checks that `K*` is rank deficient and that `B(A)^{-1} - (H_E*H_E)^{-1}`
/// has rank at most `n_M - cols(W)` at a feasible low-rank-family solution.
pub fn lowrank_converse_check(ch: &WiretapChannel, k_star: &HermMatrix, seed: u64) -> LowRankReport {
    let n = ch.n();
    let rank = rank_of(k_star, ch.power());
    let mut report = LowRankReport {
        applicable: false,
        rank,
        n,
        rank_deficient: rank < n,
        difference_rank: None,
        bound: None,
        confirmed: false,
        notice: None,
    };
    let class = classify(ch);
    if class != ChannelClass::Indefinite {
        report.notice = Some(format!("skipped: channel class is {class}, not INDEFINITE"));
        return report;
    }
    report.applicable = true;
    if rank >= n {
        report.notice = Some("optimal covariance has full rank".to_string());
        return report;
    }
    let sol = match feasibility_search_in(ch, k_star, seed, FEASIBILITY_TRIES, SearchScope::LowRankFamily) {
        Ok(s) => s,
        Err(e) => {
            report.notice = Some(format!("no feasible low-rank-family solution: {e}"));
            return report;
        }
    };
    let diff = sol
        .correlation()
        .and_then(|a| b_of_a(ch, &a))
        .and_then(|b| Ok(inv_pd(&b)?.sub(&inv_pd(ch.gram_e())?)))
        .and_then(|d| Ok((d.frobenius(), eig_herm(&d)?.values)));
    match diff {
        Ok((scale, values)) => {
            let threshold = tol::RANK_TOL * scale.max(1.0);
            let r = values.iter().filter(|v| v.abs() > threshold).count();
            let bound = ch.n_m() - sol.w.cols();
            report.difference_rank = Some(r);
            report.bound = Some(bound);
            report.confirmed = r <= bound;
        }
        Err(e) => report.notice = Some(format!("difference rank unavailable: {e}")),
    }
    report
}

/// Secrecy rate at `K` next to `Ĩ` at the matrix `A`, for diagnostics.
pub fn matching_residual(ch: &WiretapChannel, k: &HermMatrix, a: &Matrix) -> Result<f64> {
    let a = NoiseCorrelation::new(a.clone())?;
    Ok((tilde_i(ch, k, &a, FORM)? - secrecy_rate(ch, k)?).abs())
}
