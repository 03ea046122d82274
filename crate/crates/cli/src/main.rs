//! `wiretap`: secrecy capacity and converse certificates for Gaussian MIMO
//! wiretap channels.
//!
//! Exit codes: 0 success (or certified), 2 parse error, 3 validation error,
//! 4 uncertified saddle report, 5 verification failure.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use report::{bits, CapacityDoc, ClassifyDoc, SaddleDoc, SuiteDoc, SweepRow, SWEEP_HEADER};
use wiretap_core::channel::{classify, parse, WiretapChannel};
use wiretap_core::converse::{saddle_check, SaddleOptions};
use wiretap_core::optimizer::{kkt_residual, maximize_secrecy, maximize_secrecy_from, oracle_search, OptimizerOptions};
use wiretap_core::verify::{run_all, VerifyConfig};
use wiretap_core::Error;

#[derive(Debug, Parser)]
#[command(name = "wiretap", version, about = "Secrecy capacity of Gaussian MIMO wiretap channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Channel file (JSON with n, n_M, n_E, P, H_M, H_E).
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Random optimizer starts besides the scaled identity.
    #[arg(long, global = true)]
    restarts: Option<usize>,

    /// Oracle samples (capacity, saddle) or instances per suite (verify).
    #[arg(long, global = true)]
    budget: Option<usize>,

    /// Projected-gradient tolerance (capacity, saddle, sweep) or suite
    /// tolerance override (verify).
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Run optimizer restarts on threads; results are unchanged.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Secrecy capacity and optimal input covariance.
    Capacity,
    /// Loewner class of H_M*H_M - H_E*H_E.
    Classify,
    /// Achievability against the Riccati converse, with a certificate.
    Saddle,
    /// Seeded property suites over the algebraic identities.
    Verify {
        /// Transmit dimension of sampled instances.
        #[arg(long, default_value_t = 2)]
        dims: usize,
    },
    /// Secrecy capacity over log-spaced power levels.
    Sweep {
        #[arg(long)]
        pmin: f64,
        #[arg(long)]
        pmax: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
}

/// Failure categories, each with its exit code.
#[derive(Debug)]
enum Failure {
    Parse(String),
    Validation(String),
    Uncertified,
    Verify,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Uncertified => 4,
            Failure::Verify => 5,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema { .. } => Failure::Parse(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Parse(m) => eprintln!("error: {m}"),
                Failure::Validation(m) => eprintln!("invalid input: {m}"),
                Failure::Uncertified | Failure::Verify => {}
            }
            ExitCode::from(f.code())
        }
    }
}

fn load(cli: &Cli) -> Result<WiretapChannel, Failure> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| Failure::Parse("--input is required for this command".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    Ok(parse(&text)?)
}

fn optimizer_options(cli: &Cli) -> Result<OptimizerOptions, Failure> {
    let mut opts = OptimizerOptions {
        seed: cli.seed,
        parallel: cli.parallel,
        ..OptimizerOptions::default()
    };
    if let Some(r) = cli.restarts {
        opts.restarts = r;
    }
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Validation(format!("--tol must be positive, got {t}")));
        }
        opts.tol_grad = t;
    }
    Ok(opts)
}

fn json<T: serde::Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("output document serializes")
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Capacity => capacity(cli),
        Command::Classify => classify_cmd(cli),
        Command::Saddle => saddle(cli),
        Command::Verify { dims } => verify(cli, *dims),
        Command::Sweep { pmin, pmax, steps } => sweep(cli, *pmin, *pmax, *steps),
    }
}

fn capacity(cli: &Cli) -> Result<(), Failure> {
    let ch = load(cli)?;
    let opts = optimizer_options(cli)?;
    let opt = maximize_secrecy(&ch, &opts);
    let kkt = kkt_residual(&ch, opt.k_star.matrix(), opt.multiplier).ok();
    let oracle = cli.budget.map(|b| oracle_search(&ch, b, cli.seed));
    let doc = CapacityDoc::new(ch.power(), &opt, kkt, oracle);
    match cli.format {
        Format::Json => println!("{}", json(&doc)),
        Format::Csv => {
            println!("C_S_nats,C_S_bits,rank,trace,converged");
            println!("{},{},{},{},{}", doc.nats, doc.bits, doc.rank, doc.trace, doc.converged);
        }
        Format::Text => {
            println!("C_S = {:.6} nat ({:.6} bit)", doc.nats, doc.bits);
            println!("eigenvalues(K*) = {}", fmt_vec(&doc.eigenvalues));
            println!("rank = {}, trace = {:.6}, converged = {}", doc.rank, doc.trace, doc.converged);
            if let Some(o) = doc.oracle {
                println!("oracle = {o:.6} nat");
            }
        }
    }
    Ok(())
}

fn classify_cmd(cli: &Cli) -> Result<(), Failure> {
    let ch = load(cli)?;
    let doc = ClassifyDoc {
        class: classify(&ch),
        gram_difference_eigenvalues: ch.gram_difference_eigs(),
    };
    match cli.format {
        Format::Json => println!("{}", json(&doc)),
        Format::Csv => {
            println!("class,gram_difference_eigenvalues");
            let eigs: Vec<String> = doc.gram_difference_eigenvalues.iter().map(f64::to_string).collect();
            println!("{},{}", doc.class, eigs.join(";"));
        }
        Format::Text => {
            println!("{}", doc.class);
            println!("eigenvalues(H_M*H_M - H_E*H_E) = {}", fmt_vec(&doc.gram_difference_eigenvalues));
        }
    }
    Ok(())
}

fn saddle(cli: &Cli) -> Result<(), Failure> {
    let ch = load(cli)?;
    let mut opts = SaddleOptions {
        optimizer: optimizer_options(cli)?,
        seed: cli.seed,
        ..SaddleOptions::default()
    };
    if let Some(b) = cli.budget {
        opts.oracle_budget = b;
    }
    let r = saddle_check(&ch, &opts)?;
    let doc = SaddleDoc::new(&r);
    match cli.format {
        Format::Json => println!("{}", json(&doc)),
        Format::Csv => {
            println!("class,achievability,converse,gap,saddle_gap,K_rank,riccati_residual,feasible,certified");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                doc.channel_class,
                doc.achievability,
                doc.converse,
                doc.gap,
                doc.saddle_gap,
                doc.k_rank,
                doc.riccati_residual,
                doc.feasible,
                doc.certified
            );
        }
        Format::Text => {
            println!("class            {}", doc.channel_class);
            println!(
                "achievability    {:.6} nat ({:.6} bit)",
                doc.achievability,
                bits(doc.achievability)
            );
            println!("converse         {:.6} nat", doc.converse);
            println!("gap              {:.3e}", doc.gap);
            println!("max_K Ĩ(K, A*)   {:.6} nat (saddle gap {:.3e})", doc.inner_max, doc.saddle_gap);
            println!("rank(K*)         {}", doc.k_rank);
            println!("riccati residual {:.3e}", doc.riccati_residual);
            println!("feasible         {} (min eig I - AA* = {:.6})", doc.feasible, doc.min_eig_gap);
            if let Some(o) = doc.oracle {
                println!("oracle           {o:.6} nat");
            }
            println!("certified        {}", doc.certified);
            for n in &doc.notices {
                println!("notice: {n}");
            }
        }
    }
    if r.certified {
        Ok(())
    } else {
        Err(Failure::Uncertified)
    }
}

fn verify(cli: &Cli, dims: usize) -> Result<(), Failure> {
    if dims == 0 {
        return Err(Failure::Validation("--dims must be at least 1".into()));
    }
    let channel = match &cli.input {
        Some(_) => Some(load(cli)?),
        None => None,
    };
    let cfg = VerifyConfig {
        seed: cli.seed,
        dims,
        instances: cli.budget.unwrap_or(VerifyConfig::default().instances),
        tol: cli.tol,
        channel,
    };
    let results = run_all(&cfg);
    let docs: Vec<SuiteDoc> = results.iter().map(SuiteDoc::from).collect();
    match cli.format {
        Format::Json => println!("{}", json(&docs)),
        Format::Csv => {
            println!("suite,passed,failed,worst,tolerance");
            for d in &docs {
                println!("{},{},{},{},{}", d.name, d.passed, d.failed, d.worst, d.tolerance);
            }
        }
        Format::Text => {
            for d in &docs {
                let verdict = if d.failed == 0 { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {:<22} {:>5} passed {:>5} failed  worst {:.3e} (tol {:.1e})",
                    d.name, d.passed, d.failed, d.worst, d.tolerance
                );
            }
        }
    }
    match docs.iter().find(|d| d.failed > 0) {
        None => Ok(()),
        Some(d) => {
            if cli.format != Format::Json {
                println!("first failure in {}:", d.name);
                println!("{}", json(&d.first_failure));
            }
            Err(Failure::Verify)
        }
    }
}

/// `steps` log-spaced powers from `pmin` to `pmax`.
fn powers(pmin: f64, pmax: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![pmin];
    }
    let (lo, hi) = (pmin.ln(), pmax.ln());
    (0..steps)
        .map(|i| {
            if i == steps - 1 {
                pmax
            } else {
                (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp()
            }
        })
        .collect()
}

fn sweep(cli: &Cli, pmin: f64, pmax: f64, steps: usize) -> Result<(), Failure> {
    if !(pmin.is_finite() && pmin > 0.0) || !(pmax.is_finite() && pmax >= pmin) || steps == 0 {
        return Err(Failure::Validation(format!(
            "sweep needs 0 < pmin <= pmax and steps >= 1 (got pmin {pmin}, pmax {pmax}, steps {steps})"
        )));
    }
    let base = load(cli)?;
    let opts = optimizer_options(cli)?;
    let mut rows = Vec::with_capacity(steps);
    let mut warm = Vec::new();
    for p in powers(pmin, pmax, steps) {
        let ch = base.with_power(p)?;
        // The previous optimum stays feasible at a larger budget, which keeps
        // the series nondecreasing.
        let opt = maximize_secrecy_from(&ch, &opts, &warm);
        warm = vec![opt.k_star.matrix().clone()];
        rows.push(SweepRow {
            power: p,
            nats: opt.value,
            rank: opt.rank,
            trace: opt.trace,
            converged: opt.converged,
        });
    }
    match cli.format {
        Format::Json => println!("{}", json(&rows)),
        Format::Csv | Format::Text => {
            println!("{SWEEP_HEADER}");
            for r in &rows {
                println!("{}", r.csv());
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_are_log_spaced() {
        let p = powers(0.5, 2.0, 3);
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 1.0).abs() < 1e-15);
        assert_eq!(p[2], 2.0);
        assert_eq!(powers(1.0, 5.0, 1), vec![1.0]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::Schema { field: None, message: String::new() }).code(), 2);
        assert_eq!(Failure::from(Error::NonPositivePower(0.0)).code(), 3);
        assert_eq!(Failure::Uncertified.code(), 4);
        assert_eq!(Failure::Verify.code(), 5);
    }
}
