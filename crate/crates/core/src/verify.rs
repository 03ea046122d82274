//! Seeded property suites over the algebraic identities: agreement of the
//! four `Ĩ` forms, the factorization of `F(M + I)`, the degraded-case
//! identity, the entropy decomposition and the SPD-product lemma.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{classify, matrix_rows, random_channel, serialize, ChannelClass, WiretapChannel};
use crate::converse::degraded_identity_check;
use crate::error::Result;
use crate::matcore::{spd_product_eigs, svd, HermMatrix, Matrix, C64};
use crate::objective::{entropy_decomposition_check, tilde_i, NoiseCorrelation, TildeForm};
use crate::riccati::build_m;

/// Seeded source of random channels, covariances and correlations.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// `rows x cols` matrix of independent `CN(0, 1)` entries.
    pub fn gaussian(&mut self, rows: usize, cols: usize) -> Matrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rng = &mut self.rng;
        Matrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re * s, im * s)
        })
    }

    /// Random channel of the given class (any class when `None`).
    pub fn channel(
        &mut self,
        n: usize,
        n_m: usize,
        n_e: usize,
        power: f64,
        class: Option<ChannelClass>,
    ) -> Result<WiretapChannel> {
        let seed = self.rng.random();
        random_channel(seed, n, n_m, n_e, power, class)
    }

    /// Random PSD `K` with `Tr K = u P`, `u` uniform in `[0.1, 1]`.
    pub fn covariance(&mut self, n: usize, power: f64) -> HermMatrix {
        let g = self.gaussian(n, n);
        let k = HermMatrix::symmetrized(&g.mul_adj(&g));
        let u = self.uniform(0.1, 1.0);
        k.scale(u * power / k.trace_re())
    }

    /// Random PSD `K` of rank `r` with `Tr K = P`.
    pub fn covariance_of_rank(&mut self, n: usize, r: usize, power: f64) -> HermMatrix {
        if r == 0 {
            return HermMatrix::zeros(n);
        }
        let g = self.gaussian(n, r);
        let k = HermMatrix::symmetrized(&g.mul_adj(&g));
        k.scale(power / k.trace_re())
    }

    /// Random positive definite matrix with eigenvalues bounded below.
    pub fn pd(&mut self, n: usize) -> HermMatrix {
        let g = self.gaussian(n, n);
        let floor = self.uniform(1e-3, 1.0);
        HermMatrix::symmetrized(&g.mul_adj(&g)).add_identity(floor)
    }

    /// Random correlation with spectral norm uniform in `[0, 0.95]`.
    pub fn correlation(&mut self, n_m: usize, n_e: usize) -> NoiseCorrelation {
        let g = self.gaussian(n_m, n_e);
        let top = svd(&g).ok().and_then(|s| s.s.first().copied()).unwrap_or(0.0);
        let rho = self.uniform(0.0, 0.95);
        let a = if top > 0.0 { g.scale(rho / top) } else { g };
        NoiseCorrelation::new(a).unwrap_or_else(|_| NoiseCorrelation::zeros(n_m, n_e))
    }
}

/// Sizes and tolerances of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Transmit dimension `n`; receiver dimensions are drawn from
    /// `{n, n + 1}`.
    pub dims: usize,
    pub instances: usize,
    /// Replaces every suite's tolerance.
    pub tol: Option<f64>,
    /// Fixed channel for the channel-dependent suites instead of sampled
    /// ones.
    pub channel: Option<WiretapChannel>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            dims: 2,
            instances: 100,
            tol: None,
            channel: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub tolerance: f64,
    pub passed: usize,
    pub failed: usize,
    /// Largest observed error measure.
    pub worst: f64,
    /// The first failing instance.
    pub first_failure: Option<Value>,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

struct Tally {
    result: SuiteResult,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            result: SuiteResult {
                name,
                tolerance,
                passed: 0,
                failed: 0,
                worst: 0.0,
                first_failure: None,
            },
        }
    }

    /// Records an error measure; `NaN` and errors count as failures.
    fn record(&mut self, measure: Result<f64>, dump: impl FnOnce() -> Value) {
        let (ok, value) = match measure {
            Ok(m) if m <= self.result.tolerance => (true, m),
            Ok(m) => (false, m),
            Err(_) => (false, f64::INFINITY),
        };
        if !value.is_nan() {
            self.result.worst = self.result.worst.max(value);
        }
        if ok {
            self.result.passed += 1;
        } else {
            self.result.failed += 1;
            if self.result.first_failure.is_none() {
                let mut d = dump();
                d["measure"] = json!(if value.is_finite() { Some(value) } else { None });
                self.result.first_failure = Some(d);
            }
        }
    }
}

fn channel_value(ch: &WiretapChannel) -> Value {
    serde_json::from_str(&serialize(ch)).unwrap_or(Value::Null)
}

fn receiver_dims(s: &mut Sampler, n: usize) -> (usize, usize) {
    (n + s.rng().random_range(0..=1), n + s.rng().random_range(0..=1))
}

/// The fixed channel, or a sampled one with receiver dimensions in
/// `{n, n + 1}`.
fn pick_channel(cfg: &VerifyConfig, s: &mut Sampler, class: Option<ChannelClass>) -> Option<WiretapChannel> {
    if let Some(ch) = &cfg.channel {
        return Some(ch.clone());
    }
    let (n_m, n_e) = receiver_dims(s, cfg.dims);
    let p = power(s);
    s.channel(cfg.dims, n_m, n_e, p, class).ok()
}

fn power(s: &mut Sampler) -> f64 {
    [0.5, 1.0, 4.0][s.rng().random_range(0..3)]
}

/// Largest pairwise relative difference of the four `Ĩ` forms.
pub fn form_spread(ch: &WiretapChannel, k: &HermMatrix, a: &NoiseCorrelation) -> Result<f64> {
    let values: Vec<f64> = TildeForm::ALL
        .iter()
        .map(|&f| tilde_i(ch, k, a, f))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, x) in values.iter().enumerate() {
        for y in &values[i + 1..] {
            let scale = x.abs().max(y.abs());
            let d = (x - y).abs();
            worst = worst.max(if d == 0.0 { 0.0 } else { d / scale });
        }
    }
    Ok(worst)
}

pub fn form_agreement(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = Sampler::new(cfg.seed);
    let mut t = Tally::new("form_agreement", cfg.tol.unwrap_or(1e-9));
    for i in 0..cfg.instances {
        let Some(ch) = pick_channel(cfg, &mut s, None) else { continue };
        let k = s.covariance(ch.n(), ch.power());
        let a = s.correlation(ch.n_m(), ch.n_e());
        t.record(form_spread(&ch, &k, &a), || {
            json!({"instance": i, "channel": channel_value(&ch), "K": matrix_rows(&k), "A": matrix_rows(a.matrix())})
        });
    }
    t.result
}

pub fn factorization(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = Sampler::new(cfg.seed.wrapping_add(1));
    let mut t = Tally::new("factorization", cfg.tol.unwrap_or(1e-9));
    for i in 0..cfg.instances {
        let Some(ch) = pick_channel(cfg, &mut s, None) else { continue };
        let r = s.rng().random_range(0..=ch.n());
        let k = s.covariance_of_rank(ch.n(), r, ch.power());
        t.record(build_m(&ch, &k).map(|m| m.factorization_residual()), || {
            json!({"instance": i, "channel": channel_value(&ch), "K": matrix_rows(&k)})
        });
    }
    t.result
}

pub fn degraded_identity(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = Sampler::new(cfg.seed.wrapping_add(2));
    let mut t = Tally::new("degraded_identity", cfg.tol.unwrap_or(1e-8));
    // A fixed channel outside the degraded-main class has nothing to check.
    let count = match &cfg.channel {
        Some(ch) if classify(ch) != ChannelClass::DegradedMain => 0,
        Some(_) => 1,
        None => cfg.instances,
    };
    for i in 0..count {
        let Some(ch) = pick_channel(cfg, &mut s, Some(ChannelClass::DegradedMain)) else { continue };
        t.record(degraded_identity_check(&ch), || {
            json!({"instance": i, "channel": channel_value(&ch)})
        });
    }
    t.result
}

pub fn entropy_decomposition(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = Sampler::new(cfg.seed.wrapping_add(3));
    let mut t = Tally::new("entropy_decomposition", cfg.tol.unwrap_or(1e-8));
    for i in 0..cfg.instances {
        let k_joint = s.pd(2 * cfg.dims);
        let k_x = s.covariance(cfg.dims, 1.0);
        t.record(entropy_decomposition_check(&k_joint, &k_x), || {
            json!({"instance": i, "K_joint": matrix_rows(&k_joint), "K_X": matrix_rows(&k_x)})
        });
    }
    t.result
}

/// Eigenvalues of `AB` for PD pairs must exceed the threshold (`0` by
/// default, i.e. strictly positive).
pub fn spd_lemma(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = Sampler::new(cfg.seed.wrapping_add(4));
    let threshold = cfg.tol.unwrap_or(0.0);
    let mut t = Tally::new("spd_lemma", 0.0);
    t.result.tolerance = threshold;
    for i in 0..cfg.instances {
        let a = s.pd(cfg.dims);
        let b = s.pd(cfg.dims);
        let measure = spd_product_eigs(&a, &b).map(|v| if v[0] > threshold { 0.0 } else { f64::INFINITY });
        t.record(measure, || json!({"instance": i, "A": matrix_rows(&a), "B": matrix_rows(&b)}));
    }
    t.result
}

/// Runs every suite.
pub fn run_all(cfg: &VerifyConfig) -> Vec<SuiteResult> {
    vec![
        form_agreement(cfg),
        factorization(cfg),
        degraded_identity(cfg),
        entropy_decomposition(cfg),
        spd_lemma(cfg),
    ]
}
