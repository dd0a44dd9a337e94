//! Command-line front end: reads CSV designs and JSON packings, runs the
//! bound/certificate/simulation pipelines, and emits JSON or CSV artifacts.
//!
//! Exit codes: 0 success, 1 usage or parse problems, 2 numerical failure
//! (exhausted rejection sampling, non-convergence, too many trial failures).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use sparsebound::bounds::{full_report, NoiseKind, NoiseModel, ReportOptions, Risk};
use sparsebound::estimators::{
    mc_risk, packing_bayes_risk, random_sparse_signal, Estimator, LambdaRule,
};
use sparsebound::fano::{certificate, certificate_vs_closed_form};
use sparsebound::packing::{
    bernstein_empirical, beta_min, build_packing, empirical_moments, lemma_size, p1_bound,
    p2_bound, scatter_identity_check, verify_min_distance,
};
use sparsebound::rng;
use sparsebound::{DenseMatrix, PackingSet, SparseVector};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] sparsebound::Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "sparsebound",
    version,
    about = "Minimax lower bounds, packing certificates, and reference estimators for sparse recovery"
)]
struct Cli {
    /// Master seed; every run with the same seed is byte-identical.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the primary artifact here (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower-bound report for a design matrix (CSV, one row per line).
    Bound {
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, value_enum, default_value_t = NoiseArg::Measurement)]
        noise_model: NoiseArg,
        /// Packing JSON to back a Fano certificate in the report.
        #[arg(long)]
        packing: Option<PathBuf>,
        /// Override the packing moment bound used by the closed form.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        /// Enumerate all supports when C(n, k) is at most this; 0 disables.
        #[arg(long, default_value_t = 1_000_000)]
        bruteforce_cap: u64,
    },
    /// Build a separated packing by rejection sampling and verify it.
    Pack {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Point count, or "lemma" for ceil((n/k)^(k/4)).
        #[arg(long, default_value = "lemma")]
        size: String,
        /// Draw budget; default 100 times the size.
        #[arg(long)]
        max_attempts: Option<usize>,
    },
    /// Fano certificate for a design and a packing, with the closed form.
    Certify {
        matrix: PathBuf,
        packing: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Monte Carlo risk of an estimator on a design.
    Simulate {
        matrix: PathBuf,
        #[arg(long, value_enum)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Sparsity of the randomly drawn signal (ignored with --support).
        #[arg(long)]
        k: Option<usize>,
        /// Fixed signal support, comma-separated ascending indices.
        #[arg(long)]
        support: Option<String>,
        /// Norm of the signal (coordinates amplitude/sqrt(k)).
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Packing JSON: measure Bayes risk under its uniform prior.
        #[arg(long)]
        packing: Option<PathBuf>,
        /// Risk level M the packing prior is rescaled to; requires --packing.
        #[arg(long)]
        level: Option<f64>,
        /// l1 penalty: "universal" or a number.
        #[arg(long, default_value = "universal")]
        lambda: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_cycles: usize,
    },
    /// CSV table of bounds, certificates, and Lasso risk across m.
    Compare {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated list of row counts.
        #[arg(long)]
        m: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Noise draws per signal.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Random unit signals per row; the worst measured risk is reported.
        #[arg(long, default_value_t = 8)]
        signals: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
    },
    /// Empirical check of the matrix Bernstein tail bound.
    Bernstein {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum NoiseArg {
    Measurement,
    Signal,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum EstimatorArg {
    OracleLs,
    Lasso,
    Zero,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    let out = cli.out.clone();
    let quiet = cli.quiet;
    match cli.command {
        Command::Bound { matrix, k, sigma, noise_model, packing, beta, c0, bruteforce_cap } => {
            let a = load_matrix(&matrix)?;
            let p = packing.map(|path| load_packing(&path)).transpose()?;
            let kind = match noise_model {
                NoiseArg::Measurement => NoiseKind::Measurement,
                NoiseArg::Signal => NoiseKind::Signal,
            };
            let noise = NoiseModel::new(kind, sigma)?;
            let opts = ReportOptions {
                beta,
                c0,
                bruteforce_cap: if bruteforce_cap == 0 { None } else { Some(bruteforce_cap) },
            };
            let report = full_report(&a, k, &noise, p.as_ref(), &opts)?;
            emit(&out, &report.to_json_string()?)?;
            if !quiet {
                eprintln!(
                    "n = {}, m = {}, k = {k}: best lower bound {}",
                    report.n,
                    report.m,
                    risk_str(report.best_lower_bound)
                );
            }
            Ok(())
        }
        Command::Pack { n, k, size, max_attempts } => {
            let size = match size.as_str() {
                "lemma" => lemma_size(n, k)?,
                s => s
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("--size must be an integer or \"lemma\", got {s:?}")))?,
            };
            let (p, redraws) = build_packing(n, k, size, seed, max_attempts)?;
            let min_dist = verify_min_distance(&p)?;
            let moments = empirical_moments(&p)?;
            let residual = scatter_identity_check(&p)?;
            emit(&out, &p.to_json_string()?)?;
            if !quiet {
                let bmin = beta_min(n, size)?;
                eprintln!(
                    "packed {size} points in R^{n} (k = {k}, {redraws} redraws): \
                     min dist^2 {min_dist}, beta {:.6} (beta_min {bmin:.6}), \
                     p1 {:.3e}, p2(beta_min) {:.3e}, scatter residual {residual:.2e}",
                    moments.beta,
                    p1_bound(n, k, size)?,
                    p2_bound(n, size, bmin)?,
                );
            }
            Ok(())
        }
        Command::Certify { matrix, packing, sigma } => {
            let a = load_matrix(&matrix)?;
            let p = load_packing(&packing)?;
            let cmp = certificate_vs_closed_form(&a, &p, sigma)?;
            let json = serde_json::json!({
                "certificate": cmp.certificate.to_json(),
                "closed_form": {
                    "value": cmp.closed.value,
                    "vacuous": cmp.closed.vacuous,
                },
            });
            emit(&out, &pretty(&json)?)?;
            if !quiet {
                eprintln!(
                    "M_cert = {:.6e}{} vs closed form {:.6e}{}",
                    cmp.certificate.m_cert,
                    if cmp.certificate.vacuous { " (vacuous)" } else { "" },
                    cmp.closed.value,
                    if cmp.closed.vacuous { " (vacuous)" } else { "" },
                );
            }
            Ok(())
        }
        Command::Simulate {
            matrix,
            estimator,
            sigma,
            trials,
            k,
            support,
            amplitude,
            packing,
            level,
            lambda,
            tol,
            max_cycles,
        } => {
            let a = load_matrix(&matrix)?;
            let support = support.map(|s| parse_indices(&s)).transpose()?;
            let est = build_estimator(estimator, support.clone(), &lambda, tol, max_cycles)?;
            let run = match (packing, level) {
                (Some(path), Some(level)) => {
                    let p = load_packing(&path)?;
                    packing_bayes_risk(&a, &p, level, &est, sigma, trials, seed)?
                }
                (Some(_), None) => {
                    return Err(CliError::Usage("--packing requires --level".into()))
                }
                (None, Some(_)) => {
                    return Err(CliError::Usage("--level requires --packing".into()))
                }
                (None, None) => {
                    let x = fixed_signal(&a, k, support, amplitude, seed)?;
                    mc_risk(&a, &x, &est, sigma, trials, seed)?
                }
            };
            emit(&out, &run.to_json_string()?)?;
            if !quiet {
                eprintln!(
                    "{}: mean risk {} (se {}, {} trials, {} failed)",
                    run.estimator, run.mean_risk, run.std_error, run.trials, run.failures
                );
            }
            Ok(())
        }
        Command::Compare { n, k, m, sigma, trials, signals, amplitude } => {
            let ms = parse_indices(&m)?;
            if ms.is_empty() {
                return Err(CliError::Usage("--m needs at least one row count".into()));
            }
            let mut table = String::from("m,lower_bound,certificate,lasso_risk,oracle_rate,ds_rate\n");
            for &m in &ms {
                let mut design_rng = rng::stream(seed, m as u64);
                let stddev = (1.0 / n as f64).sqrt();
                let a = DenseMatrix::gaussian(m, n, stddev, &mut design_rng)?;
                let noise = NoiseModel::new(NoiseKind::Measurement, sigma)?;
                let report = full_report(&a, k, &noise, None, &ReportOptions::default())?;

                let (p, _) = build_packing(n, k, lemma_size(n, k)?, rng::derive(seed, m as u64), None)?;
                let cert = certificate(&a, &p, sigma)?;

                let mut signal_rng = rng::master(rng::derive(seed, 1_000_000 + m as u64));
                let mut worst = 0.0f64;
                for s in 0..signals {
                    let x = random_sparse_signal(n, k, amplitude, &mut signal_rng)?;
                    let run = mc_risk(
                        &a,
                        &x,
                        &Estimator::lasso_default(),
                        sigma,
                        trials,
                        rng::derive(seed, (m as u64) << 20 | s as u64),
                    )?;
                    worst = worst.max(run.mean_risk);
                }

                table.push_str(&format!(
                    "{m},{},{},{worst},{},{}\n",
                    risk_str(report.best_lower_bound),
                    cert.m_cert,
                    report.reference_oracle_rate,
                    report.reference_ds_rate,
                ));
                if !quiet {
                    eprintln!(
                        "m = {m}: bound {}, certificate {:.3e}, worst lasso risk {worst:.6}",
                        risk_str(report.best_lower_bound),
                        cert.m_cert
                    );
                }
            }
            emit(&out, &table)
        }
        Command::Bernstein { n, k, size, reps } => {
            let report = bernstein_empirical(n, k, size, reps, seed)?;
            let rows: Vec<serde_json::Value> = report
                .rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "t": r.t,
                        "empirical": r.empirical,
                        "analytic": r.analytic,
                    })
                })
                .collect();
            let json = serde_json::json!({
                "n": report.n,
                "k": report.k,
                "size": report.size,
                "reps": report.reps,
                "seed": report.seed,
                "rho_sq": report.rho_sq,
                "max_sample_norm": report.max_sample_norm,
                "rows": rows,
                "worst_mean_x_z": report.worst_mean_x_z(),
                "worst_mean_xsq_z": report.worst_mean_xsq_z(),
            });
            emit(&out, &pretty(&json)?)?;
            if !quiet {
                let worst = report
                    .rows
                    .iter()
                    .map(|r| r.empirical - r.analytic)
                    .fold(f64::NEG_INFINITY, f64::max);
                eprintln!(
                    "{} reps of {} draws: max sample norm {}, \
                     worst empirical-minus-analytic tail gap {worst:.4}",
                    report.reps, report.size, report.max_sample_norm
                );
            }
            Ok(())
        }
    }
}

fn build_estimator(
    kind: EstimatorArg,
    support: Option<Vec<usize>>,
    lambda: &str,
    tol: f64,
    max_cycles: usize,
) -> Result<Estimator> {
    Ok(match kind {
        EstimatorArg::OracleLs => Estimator::OracleLs { support },
        EstimatorArg::Zero => Estimator::Zero,
        EstimatorArg::Lasso => {
            let rule = match lambda {
                "universal" => LambdaRule::Universal,
                s => LambdaRule::Fixed(s.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("--lambda must be \"universal\" or a number, got {s:?}"))
                })?),
            };
            Estimator::Lasso { lambda: rule, tol, max_cycles }
        }
    })
}

/// Signal for plain simulation: values amplitude/sqrt(k) on a fixed support,
/// or a seeded random draw when only the sparsity is given.
fn fixed_signal(
    a: &DenseMatrix,
    k: Option<usize>,
    support: Option<Vec<usize>>,
    amplitude: f64,
    seed: u64,
) -> Result<SparseVector> {
    match support {
        Some(support) => {
            let value = amplitude / (support.len() as f64).sqrt();
            let values = vec![value; support.len()];
            Ok(SparseVector::new(a.cols(), support, values)?)
        }
        None => {
            let k = k.ok_or_else(|| {
                CliError::Usage("either --support or --k is needed to build a signal".into())
            })?;
            let mut rng = rng::master(rng::derive(seed, 1));
            Ok(random_sparse_signal(a.cols(), k, amplitude, &mut rng)?)
        }
    }
}

fn parse_indices(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad index {tok:?} in {text:?}")))
        })
        .collect()
}

fn risk_str(r: Risk) -> String {
    match r {
        Risk::Finite(v) => format!("{v}"),
        Risk::Unbounded => "unbounded".into(),
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(|e| CliError::Io(format!("serializing JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(DenseMatrix::from_csv(&text)?)
}

fn load_packing(path: &Path) -> Result<PackingSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(PackingSet::from_json_str(&text)?)
}

/// Full content to stdout, or an atomic write (temp file + rename) so a
/// failing run never leaves a partial artifact.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| CliError::Io(format!("creating temp file in {}: {e}", dir.display())))?;
            tmp.write_all(content.as_bytes())
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
            tmp.persist(path)
                .map_err(|e| CliError::Io(format!("renaming into {}: {e}", path.display())))?;
            Ok(())
        }
    }
}
