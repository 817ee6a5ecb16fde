use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use normdeflate::io::{self, DecompositionJson};
use normdeflate::{
    eigen_deflate, make_mixed_diagonal, op_norm_oracle, op_norm_power, run_deflation, verify, DeflationConfig, Error,
    SubspaceBasis, VerifyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "normdeflate", version, about = "Deflation representations of operators between normed spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the operator in a JSON file and print the decomposition.
    Decompose {
        input: PathBuf,
        /// Eigen-deflation (operator on a single space).
        #[arg(long)]
        eigen: bool,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check every invariant of a decomposition against its operator.
    Verify {
        decomposition: PathBuf,
        operator: PathBuf,
        /// Random vectors per sampled property.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Decompose the diagonal operator diag(alpha) on the mixed (k,1) space.
    Example {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k: usize,
        /// Comma-separated entries; random distinct magnitudes when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Option<Vec<f64>>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Operator norm by power iteration, with the exact or brute-force
    /// reference value when one is available.
    Norm {
        input: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone, Default)]
struct Opts {
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "rank-tol")]
    rank_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with any of: eigen, restarts, tol, rank_tol, seed, samples.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    eigen: Option<bool>,
    restarts: Option<usize>,
    tol: Option<f64>,
    rank_tol: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
}

enum Failure {
    Input(String),
    Numerical(String),
    Property(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidNorm(_)
            | Error::InvalidArgument(_)
            | Error::IndexOutOfRange { .. }
            | Error::TooManyFunctionals { .. } => Failure::Input(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_config(opts: &Opts) -> Result<ConfigFile, Failure> {
    match &opts.config {
        None => Ok(ConfigFile::default()),
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
    }
}

fn deflation_config(opts: &Opts, file: &ConfigFile) -> DeflationConfig {
    let mut cfg = DeflationConfig::default();
    if let Some(v) = opts.restarts.or(file.restarts) {
        cfg.power.restarts = v;
    }
    if let Some(v) = opts.tol.or(file.tol) {
        cfg.tol = v;
    }
    if let Some(v) = opts.rank_tol.or(file.rank_tol) {
        cfg.rank_tol = v;
    }
    if let Some(v) = opts.seed.or(file.seed) {
        cfg.power.seed = v;
    }
    cfg
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", io::to_json(value)?);
    Ok(())
}

fn decompose(input: &Path, eigen: bool, opts: &Opts) -> Result<(), Failure> {
    let file = load_config(opts)?;
    let cfg = deflation_config(opts, &file);
    let t = io::operator_from_json(&read(input)?)?;
    let dec = if eigen || file.eigen.unwrap_or(false) {
        eigen_deflate(&t, &cfg)?
    } else {
        run_deflation(&t, &cfg)?
    };
    for w in &dec.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    emit(&DecompositionJson::from_decomposition(&dec))
}

fn verify_cmd(dec_path: &Path, op_path: &Path, samples: Option<usize>, opts: &Opts) -> Result<(), Failure> {
    let file = load_config(opts)?;
    let cfg = deflation_config(opts, &file);
    let t = io::operator_from_json(&read(op_path)?)?;
    let dec = io::decomposition_from_json(&read(dec_path)?)?;
    let vcfg = VerifyConfig {
        samples: samples.or(file.samples).unwrap_or(VerifyConfig::default().samples),
        seed: cfg.power.seed,
        power: cfg.power,
    };
    let report = verify(&t, &dec, &vcfg)?;
    emit(&report)?;
    if report.all_pass {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|p| p.name.as_str()).collect();
        Err(Failure::Property(format!("failed: {}", names.join(", "))))
    }
}

/// Distinct magnitudes in (0.05, 1] with random signs.
fn random_alpha(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mags: Vec<f64> = (0..d).map(|i| 0.05 + 0.95 * (i + 1) as f64 / d as f64).collect();
    for i in (1..d).rev() {
        mags.swap(i, rng.gen_range(0..=i));
    }
    mags.into_iter()
        .map(|m| if rng.gen_bool(0.5) { m } else { -m })
        .collect()
}

#[derive(Serialize)]
struct GroundTruth {
    /// 1-based coordinate indices by descending `|alpha|` (ties: lowest index).
    order: Vec<usize>,
    lambda: Vec<f64>,
    /// `f_j = xi_j = e_{order[j]}`.
    functionals: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ExampleOutput {
    alpha: Vec<f64>,
    k: usize,
    decomposition: DecompositionJson,
    ground_truth: GroundTruth,
    verification: normdeflate::VerifyReport,
}

fn example(d: Option<usize>, k: usize, alpha: Option<Vec<f64>>, opts: &Opts) -> Result<(), Failure> {
    let file = load_config(opts)?;
    let cfg = deflation_config(opts, &file);
    let alpha = match (alpha, d) {
        (Some(a), Some(d)) if a.len() != d => {
            return Err(Failure::Input(format!("--d {d} but alpha has {} entries", a.len())))
        }
        (Some(a), _) => a,
        (None, Some(d)) => random_alpha(d, cfg.power.seed),
        (None, None) => return Err(Failure::Input("need --d or --alpha".into())),
    };
    let d = alpha.len();
    if d < 2 || alpha.iter().any(|a| !a.is_finite()) {
        return Err(Failure::Input("need at least two finite entries".into()));
    }
    let t = make_mixed_diagonal(&alpha, k)?;
    let dec = eigen_deflate(&t, &cfg)?;
    let mut order: Vec<usize> = (0..d).filter(|&i| alpha[i] != 0.0).collect();
    order.sort_by(|&a, &b| alpha[b].abs().total_cmp(&alpha[a].abs()).then(a.cmp(&b)));
    let truth = GroundTruth {
        lambda: order.iter().map(|&i| alpha[i]).collect(),
        functionals: order
            .iter()
            .map(|&i| (0..d).map(|j| if j == i { 1.0 } else { 0.0 }).collect())
            .collect(),
        order: order.iter().map(|i| i + 1).collect(),
    };
    let report = verify(
        &t,
        &dec,
        &VerifyConfig {
            seed: cfg.power.seed,
            power: cfg.power,
            ..Default::default()
        },
    )?;
    let pass = report.all_pass;
    emit(&ExampleOutput {
        alpha,
        k,
        decomposition: DecompositionJson::from_decomposition(&dec),
        ground_truth: truth,
        verification: report,
    })?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Property("verification failed".into()))
    }
}

#[derive(Serialize)]
struct NormOutput {
    value: f64,
    maximizer: Vec<f64>,
    certificate_gap: f64,
    restarts_used: usize,
    iterations: usize,
    oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_unavailable: Option<String>,
}

fn norm(input: &Path, opts: &Opts) -> Result<(), Failure> {
    let file = load_config(opts)?;
    let cfg = deflation_config(opts, &file);
    let t = io::operator_from_json(&read(input)?)?;
    let r = op_norm_power(&t, &SubspaceBasis::full(*t.source()), &cfg.power)?;
    let (oracle, oracle_unavailable) = match op_norm_oracle(&t) {
        Ok(v) => (Some(v), None),
        Err(Error::Unsupported(msg)) => (None, Some(msg)),
        Err(e) => return Err(e.into()),
    };
    emit(&NormOutput {
        value: r.value,
        maximizer: r.maximizer.entries().iter().copied().collect(),
        certificate_gap: r.certificate_gap,
        restarts_used: r.restarts_used,
        iterations: r.iterations,
        oracle,
        oracle_unavailable,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose { input, eigen, opts } => decompose(input, *eigen, opts),
        Command::Verify {
            decomposition,
            operator,
            samples,
            opts,
        } => verify_cmd(decomposition, operator, *samples, opts),
        Command::Example { d, k, alpha, opts } => example(*d, *k, alpha.clone(), opts),
        Command::Norm { input, opts } => norm(input, opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Input(m) => format!("input error: {m}"),
                Failure::Numerical(m) => format!("numerical failure: {m}"),
                Failure::Property(m) => format!("property check {m}"),
            };
            eprintln!("normdeflate: {msg}");
            ExitCode::from(f.code())
        }
    }
}
