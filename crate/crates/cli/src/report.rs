//! Machine-readable output documents. Every document deserializes back into
//! itself, so JSON output can be consumed by other tools and diffed.

use serde::{Deserialize, Serialize};

use wiretap_core::channel::{matrix_rows, ChannelClass};
use wiretap_core::converse::SaddleReport;
use wiretap_core::optimizer::Optimum;
use wiretap_core::verify::SuiteResult;

pub type Rows = Vec<Vec<[f64; 2]>>;

pub fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityDoc {
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(rename = "C_S_nats")]
    pub nats: f64,
    #[serde(rename = "C_S_bits")]
    pub bits: f64,
    #[serde(rename = "K_star")]
    pub k_star: Rows,
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub trace: f64,
    pub iterations: usize,
    pub converged: bool,
    pub multiplier: f64,
    pub start_index: usize,
    pub kkt_residual: Option<f64>,
    /// Value of the sampling oracle, when a budget was given.
    pub oracle: Option<f64>,
}

impl CapacityDoc {
    pub fn new(power: f64, opt: &Optimum, kkt: Option<f64>, oracle: Option<f64>) -> Self {
        CapacityDoc {
            power,
            nats: opt.value,
            bits: bits(opt.value),
            k_star: matrix_rows(opt.k_star.matrix()),
            eigenvalues: opt.k_star.eigenvalues(),
            rank: opt.rank,
            trace: opt.trace,
            iterations: opt.iterations,
            converged: opt.converged,
            multiplier: opt.multiplier,
            start_index: opt.start_index,
            kkt_residual: kkt,
            oracle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyDoc {
    pub class: ChannelClass,
    pub gram_difference_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleDoc {
    pub channel_class: ChannelClass,
    pub achievability: f64,
    pub achievability_bits: f64,
    pub converse: f64,
    pub gap: f64,
    pub inner_max: f64,
    pub saddle_gap: f64,
    #[serde(rename = "K_star")]
    pub k_star: Rows,
    #[serde(rename = "A_star")]
    pub a_star: Rows,
    #[serde(rename = "K_rank")]
    pub k_rank: usize,
    pub riccati_residual: f64,
    pub kernel_identity: f64,
    pub feasible: bool,
    pub min_eig_gap: f64,
    pub source: String,
    pub family: Option<String>,
    pub oracle: Option<f64>,
    pub optimizer_converged: bool,
    pub certified: bool,
    pub notices: Vec<String>,
}

impl SaddleDoc {
    pub fn new(r: &SaddleReport) -> Self {
        SaddleDoc {
            channel_class: r.channel_class,
            achievability: r.achievability,
            achievability_bits: bits(r.achievability),
            converse: r.converse,
            gap: r.gap,
            inner_max: r.inner_max,
            saddle_gap: r.saddle_gap,
            k_star: matrix_rows(r.k_star.matrix()),
            a_star: matrix_rows(r.a_star.matrix()),
            k_rank: r.k_rank,
            riccati_residual: r.riccati_residual,
            kernel_identity: r.kernel_identity,
            feasible: r.feasible,
            min_eig_gap: r.a_star.min_eig(),
            source: format!("{:?}", r.source),
            family: r.family.map(|f| format!("{f:?}")),
            oracle: r.oracle,
            optimizer_converged: r.optimizer_converged,
            certified: r.certified,
            notices: r.notices.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteDoc {
    pub name: String,
    pub tolerance: f64,
    pub passed: usize,
    pub failed: usize,
    pub worst: f64,
    pub first_failure: Option<serde_json::Value>,
}

impl From<&SuiteResult> for SuiteDoc {
    fn from(r: &SuiteResult) -> Self {
        SuiteDoc {
            name: r.name.to_string(),
            tolerance: r.tolerance,
            passed: r.passed,
            failed: r.failed,
            worst: r.worst,
            first_failure: r.first_failure.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(rename = "C_S_nats")]
    pub nats: f64,
    pub rank: usize,
    pub trace: f64,
    pub converged: bool,
}

pub const SWEEP_HEADER: &str = "P,C_S_nats,rank,trace,converged";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.power, self.nats, self.rank, self.trace, self.converged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wiretap_core::channel::WiretapChannel;
    use wiretap_core::matcore::Matrix;
    use wiretap_core::optimizer::{maximize_secrecy, OptimizerOptions};

    #[test]
    fn capacity_doc_round_trips() {
        let ch = WiretapChannel::new(Matrix::scalar(2f64.sqrt()), Matrix::scalar(1.0), 1.0).unwrap();
        let opt = maximize_secrecy(&ch, &OptimizerOptions::default());
        let doc = CapacityDoc::new(1.0, &opt, Some(0.0), None);
        let back: CapacityDoc = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(doc, back);
        assert!((bits(doc.nats) - 1.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn sweep_row_csv_matches_header() {
        let row = SweepRow { power: 1.0, nats: 0.5, rank: 1, trace: 1.0, converged: true };
        assert_eq!(row.csv().split(',').count(), SWEEP_HEADER.split(',').count());
        let back: SweepRow = serde_json::from_str(&serde_json::to_string(&row).unwrap()).unwrap();
        assert_eq!(row, back);
    }
}
