//! The problem instance `(H_M, H_E, P)`: validation, regime classification,
//! seeded random generation and the JSON file format.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matcore::{eig_herm, inv_pd, loewner_compare, sqrt_pd, HermMatrix, LoewnerClass, Matrix, C64};
use crate::tol;

/// Loewner-order regime of `H_M*H_M - H_E*H_E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelClass {
    /// The main receiver's Gram matrix strictly dominates.
    DegradedMain,
    /// The eavesdropper's Gram matrix strictly dominates.
    DegradedEve,
    Indefinite,
    /// Semidefinite with a kernel, or zero difference.
    Boundary,
}

impl ChannelClass {
    pub fn label(self) -> &'static str {
        match self {
            ChannelClass::DegradedMain => "DEGRADED_MAIN",
            ChannelClass::DegradedEve => "DEGRADED_EVE",
            ChannelClass::Indefinite => "INDEFINITE",
            ChannelClass::Boundary => "BOUNDARY",
        }
    }

    fn from_loewner(c: LoewnerClass) -> ChannelClass {
        match c {
            LoewnerClass::PD => ChannelClass::DegradedMain,
            LoewnerClass::ND => ChannelClass::DegradedEve,
            LoewnerClass::Indefinite => ChannelClass::Indefinite,
            LoewnerClass::PSD | LoewnerClass::NSD | LoewnerClass::Zero => ChannelClass::Boundary,
        }
    }
}

impl std::fmt::Display for ChannelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Validated wiretap channel. Both Gram matrices are positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct WiretapChannel {
    h_m: Matrix,
    h_e: Matrix,
    power: f64,
    gram_m: HermMatrix,
    gram_e: HermMatrix,
}

impl WiretapChannel {
    pub fn new(h_m: Matrix, h_e: Matrix, power: f64) -> Result<Self> {
        if h_m.cols() != h_e.cols() {
            return Err(Error::dims(
                format!("H_E with {} columns", h_m.cols()),
                format!("{} columns", h_e.cols()),
            ));
        }
        if h_m.cols() == 0 || h_m.rows() == 0 || h_e.rows() == 0 {
            return Err(Error::InvalidMatrix("empty channel matrix".into()));
        }
        if !h_m.is_finite() || !h_e.is_finite() {
            return Err(Error::InvalidMatrix("non-finite channel entry".into()));
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::NonPositivePower(power));
        }
        let gram_m = HermMatrix::gram(&h_m);
        let gram_e = HermMatrix::gram(&h_e);
        for (which, g) in [("main", &gram_m), ("eavesdropper", &gram_e)] {
            let min_eig = eig_herm(g)?.min();
            if min_eig <= tol::pd_threshold(g.frobenius()) {
                return Err(Error::RankDeficientChannel { which, min_eig });
            }
        }
        Ok(WiretapChannel {
            h_m,
            h_e,
            power,
            gram_m,
            gram_e,
        })
    }

    pub fn h_m(&self) -> &Matrix {
        &self.h_m
    }

    pub fn h_e(&self) -> &Matrix {
        &self.h_e
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Transmit antennas.
    pub fn n(&self) -> usize {
        self.h_m.cols()
    }

    pub fn n_m(&self) -> usize {
        self.h_m.rows()
    }

    pub fn n_e(&self) -> usize {
        self.h_e.rows()
    }

    /// `H_M* H_M`.
    pub fn gram_m(&self) -> &HermMatrix {
        &self.gram_m
    }

    /// `H_E* H_E`.
    pub fn gram_e(&self) -> &HermMatrix {
        &self.gram_e
    }

    /// Same matrices, different power budget.
    pub fn with_power(&self, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::NonPositivePower(power));
        }
        Ok(WiretapChannel {
            power,
            ..self.clone()
        })
    }

    /// Receivers exchanged: `(H_E, H_M, P)`.
    pub fn swapped(&self) -> Self {
        WiretapChannel {
            h_m: self.h_e.clone(),
            h_e: self.h_m.clone(),
            power: self.power,
            gram_m: self.gram_e.clone(),
            gram_e: self.gram_m.clone(),
        }
    }

    /// Eigenvalues (ascending) of `H_M*H_M - H_E*H_E`.
    pub fn gram_difference_eigs(&self) -> Vec<f64> {
        eig_herm(&self.gram_m.sub(&self.gram_e))
            .map(|e| e.values)
            .unwrap_or_default()
    }
}

/// Checks the positive-definite Gram and positive power assumptions.
pub fn validate(ch: &WiretapChannel) -> Result<()> {
    WiretapChannel::new(ch.h_m.clone(), ch.h_e.clone(), ch.power).map(|_| ())
}

pub fn classify(ch: &WiretapChannel) -> ChannelClass {
    // Dimensions match by construction.
    let c = loewner_compare(&ch.gram_m, &ch.gram_e).unwrap_or(LoewnerClass::Zero);
    ChannelClass::from_loewner(c)
}

/// Maximum number of draws `random_channel` makes before giving up.
pub const RANDOM_CHANNEL_TRIES: usize = 1000;

fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Generalized eigenvalues of the pencil `(G, E)`, ascending.
fn pencil_eigs(g: &HermMatrix, e: &HermMatrix) -> Result<Vec<f64>> {
    let root = sqrt_pd(&inv_pd(e)?)?;
    Ok(eig_herm(&HermMatrix::congruence(root.as_matrix(), g))?.values)
}

/// Scale factor `s^2` for `H_E` that lands `G - s^2 E` in the wanted class.
fn target_scale(gammas: &[f64], want: ChannelClass, u: f64) -> Option<f64> {
    let lo = *gammas.first()?;
    let hi = *gammas.last()?;
    match want {
        ChannelClass::DegradedMain => Some(lo * (0.2 + 0.6 * u)),
        ChannelClass::DegradedEve => Some(hi * (1.25 + u)),
        ChannelClass::Indefinite => {
            if hi <= lo * (1.0 + 1e-6) {
                return None;
            }
            // Interior point on a log scale, away from both ends.
            let t = 0.2 + 0.6 * u;
            Some((lo.ln() * (1.0 - t) + hi.ln() * t).exp())
        }
        ChannelClass::Boundary => Some(lo),
    }
}

/// Seeded random channel with i.i.d. standard complex normal entries.
///
/// With `want` set, `H_E` is rescaled so that the channel falls in the
/// requested class; every returned channel is post-checked by [`classify`].
pub fn random_channel(
    seed: u64,
    n: usize,
    n_m: usize,
    n_e: usize,
    power: f64,
    want: Option<ChannelClass>,
) -> Result<WiretapChannel> {
    if n == 0 || n_m == 0 || n_e == 0 {
        return Err(Error::InvalidMatrix("dimensions must be positive".into()));
    }
    if n_m < n || n_e < n {
        return Err(Error::dims(
            format!("n_M >= n and n_E >= n (n = {n})"),
            format!("n_M = {n_m}, n_E = {n_e}"),
        ));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::NonPositivePower(power));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_CHANNEL_TRIES {
        let h_m = complex_gaussian(&mut rng, n_m, n);
        let mut h_e = complex_gaussian(&mut rng, n_e, n);
        let u: f64 = rand::Rng::random(&mut rng);
        if let Some(want) = want {
            let g = HermMatrix::gram(&h_m);
            let e = HermMatrix::gram(&h_e);
            let Ok(gammas) = pencil_eigs(&g, &e) else {
                continue;
            };
            let Some(s2) = target_scale(&gammas, want, u) else {
                continue;
            };
            h_e = h_e.scale(s2.sqrt());
        }
        let Ok(ch) = WiretapChannel::new(h_m, h_e, power) else {
            continue;
        };
        match want {
            Some(w) if classify(&ch) != w => continue,
            _ => return Ok(ch),
        }
    }
    Err(Error::UnsatisfiableClass {
        want: want.unwrap_or(ChannelClass::Indefinite),
        tries: RANDOM_CHANNEL_TRIES,
    })
}

#[derive(Serialize)]
struct ChannelDoc {
    n: usize,
    #[serde(rename = "n_M")]
    n_m: usize,
    #[serde(rename = "n_E")]
    n_e: usize,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "H_M")]
    h_m: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "H_E")]
    h_e: Vec<Vec<[f64; 2]>>,
}

/// Rows of `[re, im]` pairs, the matrix encoding of the channel document.
pub fn matrix_rows(m: &Matrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Pretty-printed JSON document for the channel.
pub fn serialize(ch: &WiretapChannel) -> String {
    let doc = ChannelDoc {
        n: ch.n(),
        n_m: ch.n_m(),
        n_e: ch.n_e(),
        p: ch.power,
        h_m: matrix_rows(&ch.h_m),
        h_e: matrix_rows(&ch.h_e),
    };
    serde_json::to_string_pretty(&doc).expect("channel document serializes")
}

fn get<'v>(obj: &'v serde_json::Map<String, Value>, field: &str) -> Result<&'v Value> {
    obj.get(field)
        .ok_or_else(|| Error::schema(Some(field), "missing required field"))
}

fn get_count(obj: &serde_json::Map<String, Value>, field: &str) -> Result<usize> {
    get(obj, field)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::schema(Some(field), "expected a nonnegative integer"))
}

fn parse_matrix(v: &Value, field: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let outer = v
        .as_array()
        .ok_or_else(|| Error::schema(Some(field), "expected an array of rows"))?;
    if outer.len() != rows {
        return Err(Error::schema(
            Some(field),
            format!("expected {rows} rows, found {}", outer.len()),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in outer.iter().enumerate() {
        let entries = row
            .as_array()
            .ok_or_else(|| Error::schema(Some(field), format!("row {i} is not an array")))?;
        if entries.len() != cols {
            return Err(Error::schema(
                Some(field),
                format!("row {i}: expected {cols} entries, found {}", entries.len()),
            ));
        }
        for (j, z) in entries.iter().enumerate() {
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                Error::schema(Some(field), format!("entry ({i},{j}) must be a [re, im] pair"))
            })?;
            let part = |k: usize| {
                pair[k].as_f64().ok_or_else(|| {
                    Error::schema(Some(field), format!("entry ({i},{j}) has a non-numeric part"))
                })
            };
            data.push(C64::new(part(0)?, part(1)?));
        }
    }
    Matrix::from_vec(rows, cols, data)
}

/// Parses a channel document. Syntax and schema problems become
/// [`Error::Schema`]; a well-formed document describing an invalid channel
/// yields the corresponding validation error.
pub fn parse(text: &str) -> Result<WiretapChannel> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::schema(None, format!("line {} column {}: {e}", e.line(), e.column()))
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema(None, "top level must be an object"))?;
    let n = get_count(obj, "n")?;
    let n_m = get_count(obj, "n_M")?;
    let n_e = get_count(obj, "n_E")?;
    let p = get(obj, "P")?
        .as_f64()
        .ok_or_else(|| Error::schema(Some("P"), "expected a number"))?;
    let h_m = parse_matrix(get(obj, "H_M")?, "H_M", n_m, n)?;
    let h_e = parse_matrix(get(obj, "H_E")?, "H_E", n_e, n)?;
    WiretapChannel::new(h_m, h_e, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_channel(dm: &[f64], de: &[f64]) -> WiretapChannel {
        WiretapChannel::new(Matrix::diag_real(dm), Matrix::diag_real(de), 1.0).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&diag_channel(&[1.0, 1.0], &[1.0, 1.0])).is_ok());
        let wide = Matrix::from_real_rows(&[&[1.0, 0.0]]);
        assert!(matches!(
            WiretapChannel::new(wide, Matrix::identity(2), 1.0),
            Err(Error::RankDeficientChannel { which: "main", .. })
        ));
        assert!(matches!(
            WiretapChannel::new(Matrix::identity(2), Matrix::identity(2), 0.0),
            Err(Error::NonPositivePower(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let r2 = 2f64.sqrt();
        assert_eq!(classify(&diag_channel(&[r2, r2], &[1.0, 1.0])), ChannelClass::DegradedMain);
        assert_eq!(classify(&diag_channel(&[1.0, 1.0], &[r2, r2])), ChannelClass::DegradedEve);
        assert_eq!(
            classify(&diag_channel(&[r2, 1.0 / r2], &[1.0, 1.0])),
            ChannelClass::Indefinite
        );
        assert_eq!(classify(&diag_channel(&[r2, 1.0], &[1.0, 1.0])), ChannelClass::Boundary);
        assert_eq!(classify(&diag_channel(&[1.0], &[1.0])), ChannelClass::Boundary);
    }

    #[test]
    fn random_is_deterministic() {
        let a = random_channel(7, 2, 2, 2, 1.0, None).unwrap();
        let b = random_channel(7, 2, 2, 2, 1.0, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_channel(8, 2, 2, 2, 1.0, None).unwrap());
    }

    #[test]
    fn random_hits_every_class() {
        for want in [
            ChannelClass::DegradedMain,
            ChannelClass::DegradedEve,
            ChannelClass::Indefinite,
            ChannelClass::Boundary,
        ] {
            for seed in 0..5 {
                let ch = random_channel(seed, 3, 3, 4, 1.0, Some(want)).unwrap();
                assert_eq!(classify(&ch), want);
            }
        }
    }

    #[test]
    fn random_rejects_thin_receivers() {
        assert!(random_channel(0, 3, 2, 3, 1.0, None).is_err());
        assert!(matches!(
            random_channel(0, 1, 1, 1, 1.0, Some(ChannelClass::Indefinite)),
            Err(Error::UnsatisfiableClass { .. })
        ));
    }

    #[test]
    fn minimal_document() {
        let text = r#"{"n":1,"n_M":1,"n_E":1,"P":1.0,
            "H_M":[[[1.4142135623730951,0]]],"H_E":[[[1,0]]]}"#;
        let ch = parse(text).unwrap();
        assert_eq!(ch.h_m()[(0, 0)].re, 2f64.sqrt());
        assert_eq!(classify(&ch), ChannelClass::DegradedMain);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let text = r#"{"n":1,"n_M":1,"n_E":1,"H_M":[[[1,0]]],"H_E":[[[1,0]]]}"#;
        match parse(text) {
            Err(Error::Schema { field, .. }) => assert_eq!(field.as_deref(), Some("P")),
            other => panic!("unexpected {other:?}"),
        }
        let bad_shape = r#"{"n":2,"n_M":1,"n_E":1,"P":1,"H_M":[[[1,0]]],"H_E":[[[1,0]]]}"#;
        assert!(matches!(parse(bad_shape), Err(Error::Schema { .. })));
        match parse("{\n\"n\": 1,,\n}") {
            Err(Error::Schema { field: None, message }) => assert!(message.contains("line 2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ch = random_channel(3, 3, 3, 3, 2.5, None).unwrap();
        assert_eq!(parse(&serialize(&ch)).unwrap(), ch);
    }
}
