//! Achievability side: maximize the secrecy rate over
//! `{K ⪰ 0, Tr K <= P}` by multi-start projected gradient ascent, plus an
//! independent sampling oracle and KKT diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::WiretapChannel;
use crate::error::Result;
use crate::matcore::{eig_herm, project_psd_trace, HermMatrix, Matrix, C64, ZERO};
use crate::objective::{secrecy_grad, secrecy_rate, InputCovariance};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    pub step0: f64,
    pub tol_grad: f64,
    pub tol_value: f64,
    /// Random starts in addition to the scaled identity.
    pub restarts: usize,
    pub seed: u64,
    /// Run restarts on scoped threads. The result does not depend on it.
    pub parallel: bool,
    /// Refine the winning run with Barzilai-Borwein initial steps until the
    /// projected gradient falls below `tol_grad`.
    pub polish: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_iters: 5000,
            step0: 1.0,
            tol_grad: 1e-8,
            tol_value: 1e-10,
            restarts: 8,
            seed: 42,
            parallel: false,
            polish: true,
        }
    }
}

/// Best covariance found and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub k_star: InputCovariance,
    pub value: f64,
    pub rank: usize,
    pub trace: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Multiplier of the trace constraint, `Tr(∇R K) / Tr K`.
    pub multiplier: f64,
    /// Index of the winning start (0 is `(P/n) I`).
    pub start_index: usize,
}

/// Result of one projected-gradient run.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub k: HermMatrix,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Projected gradient ascent on `{K ⪰ 0, Tr K <= power}` with Armijo
/// backtracking (halving from `step0` at every iteration).
pub fn projected_gradient_ascent<F, G>(
    f: F,
    grad: G,
    start: &HermMatrix,
    power: f64,
    opts: &OptimizerOptions,
) -> Result<Ascent>
where
    F: Fn(&HermMatrix) -> Result<f64>,
    G: Fn(&HermMatrix) -> Result<HermMatrix>,
{
    let mut k = project_psd_trace(start, power)?;
    let mut value = f(&k)?;
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let g = grad(&k)?;
        let unit = project_psd_trace(&k.add(&g), power)?;
        if (unit.as_matrix() - k.as_matrix()).frobenius() <= opts.tol_grad {
            converged = true;
            break;
        }
        let mut step = opts.step0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = project_psd_trace(&k.add(&g.scale(step)), power)?;
            let d = cand.as_matrix() - k.as_matrix();
            let v = f(&cand)?;
            if v >= value + ARMIJO * g.inner(&d) {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            // No representable ascent step left.
            converged = true;
            break;
        };
        let change = v - value;
        k = cand;
        value = v;
        history.push(value);
        if change.abs() <= opts.tol_value * value.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        k,
        value,
        iterations,
        converged,
        history,
    })
}

/// Monotone projected gradient ascent whose trial step at every iteration
/// is the Barzilai-Borwein step `<s, s> / <s, -y>` (clamped), then halved
/// until the Armijo condition holds. Stops only on the projected-gradient
/// test, a failed line search, or the iteration cap.
pub fn polish_ascent<F, G>(f: F, grad: G, start: Ascent, power: f64, opts: &OptimizerOptions) -> Result<Ascent>
where
    F: Fn(&HermMatrix) -> Result<f64>,
    G: Fn(&HermMatrix) -> Result<HermMatrix>,
{
    let Ascent {
        mut k,
        mut value,
        mut iterations,
        mut history,
        ..
    } = start;
    let mut g = grad(&k)?;
    let mut step = opts.step0;
    let mut converged = false;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let unit = project_psd_trace(&k.add(&g), power)?;
        if (unit.as_matrix() - k.as_matrix()).frobenius() <= opts.tol_grad {
            converged = true;
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = project_psd_trace(&k.add(&g.scale(t)), power)?;
            let d = cand.as_matrix() - k.as_matrix();
            let v = f(&cand)?;
            if v >= value + ARMIJO * g.inner(&d) {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            converged = true;
            break;
        };
        let g_new = grad(&cand)?;
        let s = cand.as_matrix() - k.as_matrix();
        let y = g_new.as_matrix() - g.as_matrix();
        let sy = -s.inner(&y);
        step = if sy > 0.0 {
            (s.inner(&s) / sy).clamp(1e-6 * opts.step0, 1e6 * opts.step0)
        } else {
            opts.step0
        };
        k = cand;
        value = v;
        g = g_new;
        history.push(value);
    }
    Ok(Ascent {
        k,
        value,
        iterations,
        converged,
        history,
    })
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, trace: f64) -> HermMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = Matrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    });
    let k = HermMatrix::symmetrized(&g.mul_adj(&g));
    let t = k.trace_re();
    if t > 0.0 {
        k.scale(trace / t)
    } else {
        HermMatrix::identity(n).scale(trace / n as f64)
    }
}

/// Starting points: `(P/n) I`, then `restarts` seeded random PSD matrices.
pub fn starting_points(ch: &WiretapChannel, opts: &OptimizerOptions) -> Vec<HermMatrix> {
    let n = ch.n();
    let p = ch.power();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![HermMatrix::identity(n).scale(p / n as f64)];
    for _ in 0..opts.restarts {
        let u: f64 = rng.random_range(0.5..=1.0);
        starts.push(random_psd(&mut rng, n, u * p));
    }
    starts
}

/// Multiplier estimate `Tr(G K) / Tr K` (zero when `K = 0`).
pub fn multiplier_estimate(g: &HermMatrix, k: &HermMatrix) -> f64 {
    let t = k.trace_re();
    if t > 0.0 {
        g.inner(k) / t
    } else {
        0.0
    }
}

/// Eigenvalues of `K` above `RANK_TOL * scale`.
pub fn rank_of(k: &HermMatrix, scale: f64) -> usize {
    let threshold = tol::RANK_TOL * scale;
    eig_herm(k)
        .map(|e| e.values.iter().filter(|&&l| l > threshold).count())
        .unwrap_or(0)
}

fn ascend_secrecy(ch: &WiretapChannel, start: &HermMatrix, opts: &OptimizerOptions) -> Result<Ascent> {
    projected_gradient_ascent(
        |k| secrecy_rate(ch, k),
        |k| secrecy_grad(ch, k),
        start,
        ch.power(),
        opts,
    )
}

/// Maximizes the secrecy rate from the default starts.
pub fn maximize_secrecy(ch: &WiretapChannel, opts: &OptimizerOptions) -> Optimum {
    maximize_secrecy_from(ch, opts, &[])
}

/// Like [`maximize_secrecy`], with extra starting points appended after the
/// default ones (e.g. a warm start from a neighbouring power level).
pub fn maximize_secrecy_from(ch: &WiretapChannel, opts: &OptimizerOptions, extra: &[HermMatrix]) -> Optimum {
    let mut starts = starting_points(ch, opts);
    starts.extend(extra.iter().filter(|k| k.dim() == ch.n()).cloned());

    let runs: Vec<Option<Ascent>> = if opts.parallel && starts.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = starts
                .iter()
                .map(|s| scope.spawn(move || ascend_secrecy(ch, s, opts).ok()))
                .collect();
            handles.into_iter().map(|h| h.join().ok().flatten()).collect()
        })
    } else {
        starts.iter().map(|s| ascend_secrecy(ch, s, opts).ok()).collect()
    };

    // Highest value wins; near-ties go to the lowest index.
    let mut best: Option<(usize, Ascent)> = None;
    let mut total_iters = 0;
    for (idx, run) in runs.into_iter().enumerate() {
        let Some(run) = run else { continue };
        total_iters += run.iterations;
        let better = match &best {
            None => true,
            Some((_, b)) => run.value > b.value + 1e-12,
        };
        if better {
            best = Some((idx, run));
        }
    }

    let n = ch.n();
    let (start_index, run) = best.unwrap_or_else(|| {
        (
            0,
            Ascent {
                k: HermMatrix::zeros(n),
                value: 0.0,
                iterations: 0,
                converged: false,
                history: vec![0.0],
            },
        )
    });
    let before_polish = run.iterations;
    let run = if opts.polish {
        let fallback = run.clone();
        polish_ascent(
            |k| secrecy_rate(ch, k),
            |k| secrecy_grad(ch, k),
            run,
            ch.power(),
            opts,
        )
        .unwrap_or(fallback)
    } else {
        run
    };
    let run_iterations = run.iterations;
    let (k, value, converged) = if run.value < 0.0 {
        (HermMatrix::zeros(n), 0.0, run.converged)
    } else {
        (run.k, run.value, run.converged)
    };
    let multiplier = secrecy_grad(ch, &k)
        .map(|g| multiplier_estimate(&g, &k))
        .unwrap_or(0.0);
    Optimum {
        rank: rank_of(&k, ch.power()),
        trace: k.trace_re(),
        k_star: InputCovariance::from_projected(k),
        value,
        iterations: total_iters + (run_iterations - before_polish),
        converged,
        multiplier,
        start_index,
    }
}

/// Norm of the projection of `∇R(K) - λ I` onto the tangent cone of the PSD
/// cone at `K`: the full block on the range of `K`, the coupling blocks, and
/// the positive part of the block on its kernel.
pub fn kkt_residual(ch: &WiretapChannel, k: &HermMatrix, lambda: f64) -> Result<f64> {
    let g = secrecy_grad(ch, k)?.add_identity(-lambda);
    Ok(tangent_residual(&g, k, ch.power()))
}

pub(crate) fn tangent_residual(s: &HermMatrix, k: &HermMatrix, scale: f64) -> f64 {
    let Ok(e) = eig_herm(k) else {
        return f64::INFINITY;
    };
    let threshold = tol::RANK_TOL * scale;
    let r = e.values.iter().filter(|&&l| l > threshold).count();
    let n = k.dim();
    let st = HermMatrix::adj_congruence(&e.vectors, s);
    // eig_herm sorts ascending: kernel first, range last.
    let z = n - r;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i >= z || j >= z {
                acc += st[(i, j)].norm_sqr();
            }
        }
    }
    if z > 0 {
        let kernel = HermMatrix::symmetrized(&st.block(0, 0, z, z));
        if let Ok(ek) = eig_herm(&kernel) {
            acc += ek.values.iter().map(|l| l.max(0.0).powi(2)).sum::<f64>();
        }
    }
    acc.sqrt()
}

/// Gram-form evaluator `log det(I + G_M K) - log det(I + G_E K)` for small
/// dimensions, on stack arrays.
struct FastRate {
    n: usize,
    gm: [C64; 9],
    ge: [C64; 9],
}

impl FastRate {
    fn new(ch: &WiretapChannel) -> Option<Self> {
        let n = ch.n();
        if n > 3 {
            return None;
        }
        let mut gm = [ZERO; 9];
        let mut ge = [ZERO; 9];
        for i in 0..n {
            for j in 0..n {
                gm[i * 3 + j] = ch.gram_m()[(i, j)];
                ge[i * 3 + j] = ch.gram_e()[(i, j)];
            }
        }
        Some(FastRate { n, gm, ge })
    }

    fn det_i_plus(&self, g: &[C64; 9], k: &[C64; 9]) -> f64 {
        let n = self.n;
        let mut a = [ZERO; 9];
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { C64::new(1.0, 0.0) } else { ZERO };
                for l in 0..n {
                    s += g[i * 3 + l] * k[l * 3 + j];
                }
                a[i * 3 + j] = s;
            }
        }
        let d = match n {
            1 => a[0],
            2 => a[0] * a[4] - a[1] * a[3],
            _ => {
                a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                    + a[2] * (a[3] * a[7] - a[4] * a[6])
            }
        };
        d.re
    }

    fn value(&self, k: &[C64; 9]) -> f64 {
        (self.det_i_plus(&self.gm, k) / self.det_i_plus(&self.ge, k)).ln()
    }
}

/// `K = L L*` scaled into the power budget, from the real parameters of a
/// lower-triangular `L` (diagonal real, below-diagonal complex).
fn k_from_params(x: &[f64], n: usize, power: f64) -> Matrix {
    let mut l = Matrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        l[(i, i)] = C64::new(x[idx], 0.0);
        idx += 1;
        for j in 0..i {
            l[(i, j)] = C64::new(x[idx], x[idx + 1]);
            idx += 2;
        }
    }
    let k = l.mul_adj(&l);
    let t = k.trace().re;
    if t > power {
        k.scale(power / t)
    } else {
        k
    }
}

fn params_from_k(k: &Matrix, n: usize) -> Vec<f64> {
    // Cholesky of K + tiny ridge so rank-deficient points are representable.
    let ridge = HermMatrix::symmetrized(k).add_identity(1e-14 * k.trace().re.max(1e-300));
    let l = crate::matcore::cholesky(&ridge).unwrap_or_else(|_| Matrix::zeros(n, n));
    let mut x = Vec::with_capacity(n * n);
    for i in 0..n {
        x.push(l[(i, i)].re);
        for j in 0..i {
            x.push(l[(i, j)].re);
            x.push(l[(i, j)].im);
        }
    }
    x
}

fn pack(k: &Matrix) -> [C64; 9] {
    let n = k.rows();
    let mut out = [ZERO; 9];
    for i in 0..n {
        for j in 0..n {
            out[i * 3 + j] = k[(i, j)];
        }
    }
    out
}

/// Independent estimate of the capacity: best secrecy rate over `budget`
/// random feasible covariances, a deterministic eigen/rotation grid when
/// `n <= 2`, and a derivative-free compass polish of the best point.
pub fn oracle_search(ch: &WiretapChannel, budget: usize, seed: u64) -> f64 {
    let n = ch.n();
    let p = ch.power();
    let fast = FastRate::new(ch);
    let eval = |k: &Matrix| -> f64 {
        match &fast {
            Some(f) => f.value(&pack(k)),
            None => secrecy_rate(ch, &HermMatrix::symmetrized(k)).unwrap_or(f64::NEG_INFINITY),
        }
    };

    let mut best_k = Matrix::zeros(n, n);
    let mut best = 0.0;
    let consider = |k: Matrix, v: f64, best: &mut f64, best_k: &mut Matrix| {
        if v.is_finite() && v > *best {
            *best = v;
            *best_k = k;
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let u: f64 = rng.random();
        let k = random_psd(&mut rng, n, u * p).into_matrix();
        let v = eval(&k);
        consider(k, v, &mut best, &mut best_k);
    }

    if n == 2 {
        let steps = 24;
        for it in 0..=steps {
            let theta = std::f64::consts::FRAC_PI_2 * it as f64 / steps as f64;
            let (s, c) = theta.sin_cos();
            for ip in 0..(2 * steps) {
                let phi = std::f64::consts::PI * ip as f64 / steps as f64;
                let e = C64::from_polar(1.0, phi);
                let u1 = [C64::new(c, 0.0), e * s];
                let u2 = [-e.conj() * s, C64::new(c, 0.0)];
                for it2 in 0..=steps {
                    let mu1 = p * it2 as f64 / steps as f64;
                    for it3 in 0..=(steps - it2) {
                        let mu2 = p * it3 as f64 / steps as f64;
                        let k = Matrix::from_fn(2, 2, |i, j| {
                            u1[i] * u1[j].conj() * mu1 + u2[i] * u2[j].conj() * mu2
                        });
                        let v = eval(&k);
                        consider(k, v, &mut best, &mut best_k);
                    }
                }
            }
        }
    }

    // Compass search in the Cholesky parametrization.
    let mut x = params_from_k(&best_k, n);
    let mut fx = eval(&k_from_params(&x, n, p));
    let mut h = 0.1 * p.sqrt();
    while h > 1e-9 * p.sqrt().max(1e-300) {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] += sign * h;
                let fy = eval(&k_from_params(&y, n, p));
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best.max(fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(hm: f64, he: f64) -> WiretapChannel {
        WiretapChannel::new(Matrix::scalar(hm), Matrix::scalar(he), 1.0).unwrap()
    }

    #[test]
    fn scalar_degraded_main_uses_full_power() {
        let opt = maximize_secrecy(&scalar(2f64.sqrt(), 1.0), &OptimizerOptions::default());
        assert!((opt.value - 1.5f64.ln()).abs() < 1e-9, "{}", opt.value);
        assert!((opt.trace - 1.0).abs() < 1e-9);
        assert_eq!(opt.rank, 1);
        assert!((opt.multiplier - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_degraded_eve_is_zero() {
        let opt = maximize_secrecy(&scalar(1.0, 2f64.sqrt()), &OptimizerOptions::default());
        assert_eq!(opt.value, 0.0);
        assert_eq!(opt.rank, 0);
        assert!(opt.k_star.frobenius() == 0.0);
    }

    #[test]
    fn kkt_examples() {
        let ch = scalar(2f64.sqrt(), 1.0);
        assert!(kkt_residual(&ch, &HermMatrix::diag(&[1.0]), 1.0 / 6.0).unwrap() < 1e-12);
        let eve = scalar(1.0, 2f64.sqrt());
        assert!(kkt_residual(&eve, &HermMatrix::zeros(1), 0.0).unwrap() < 1e-12);
        // Off-optimal point has a residual.
        assert!(kkt_residual(&ch, &HermMatrix::diag(&[0.5]), 0.0).unwrap() > 1e-3);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_of(&HermMatrix::zeros(2), 1.0), 0);
        assert_eq!(rank_of(&HermMatrix::diag(&[1.0, 1e-15]), 1.0), 1);
        assert_eq!(rank_of(&HermMatrix::identity(3), 1.0), 3);
    }

    #[test]
    fn oracle_scalar() {
        let v = oracle_search(&scalar(2f64.sqrt(), 1.0), 10_000, 1);
        assert!((v - 1.5f64.ln()).abs() < 1e-4);
        assert!(oracle_search(&scalar(1.0, 2f64.sqrt()), 1000, 1) <= 1e-6);
    }

    #[test]
    fn ascent_history_is_monotone() {
        let ch = WiretapChannel::new(
            Matrix::diag_real(&[2f64.sqrt(), 1.0 / 2f64.sqrt()]),
            Matrix::identity(2),
            1.0,
        )
        .unwrap();
        let opts = OptimizerOptions::default();
        for s in starting_points(&ch, &opts) {
            let run = ascend_secrecy(&ch, &s, &opts).unwrap();
            assert!(run.history.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let ch = crate::channel::random_channel(5, 2, 2, 2, 1.0, None).unwrap();
        let seq = maximize_secrecy(&ch, &OptimizerOptions::default());
        let par = maximize_secrecy(
            &ch,
            &OptimizerOptions {
                parallel: true,
                ..OptimizerOptions::default()
            },
        );
        assert_eq!(seq, par);
    }
}
