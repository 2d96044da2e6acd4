//! Command-line front end.
//!
//! Exit codes: 0 pass, 1 mismatch or failed check, 2 undersampled
//! estimate, 64 configuration or I/O error.

pub mod appendix;
pub mod presets;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::blocks::{analytic_relative_loss, PieceProbMode};
use crate::dist::{self, derive_seed, DistributionSpec};
use crate::error::{Error, Result};
use crate::loss::{
    self, cascade_compose, loss_from_estimates, AnalyticPart, Domain, EstimatedPart, LossReport,
    LossValue, Status,
};
use crate::pca;
use crate::quant::{estimate_dimension, EntropyCorrection, DEFAULT_SAMPLES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_UNDERSAMPLED: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;

/// Smallest sample count `analyze` and `estimate-dim` accept.
pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Parser)]
#[command(
    name = "infoloss",
    version,
    about = "Relative information loss of deterministic systems"
)]
pub struct Cli {
    /// Root seed; every random stream in the run derives from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Write the report here (atomically).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Omit run metadata (version, timestamp) so reports are byte-stable.
    #[arg(long, global = true)]
    pub no_meta: bool,
    /// Center data before PCA.
    #[arg(long, global = true)]
    pub center: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the piecewise loss formula with the dimension-ratio estimate.
    Analyze(AnalyzeArgs),
    /// Sample-covariance PCA on Gaussian data.
    PcaDemo(PcaDemoArgs),
    /// Sample-PCA loss as a function of n, as CSV.
    PcaCurve(PcaCurveArgs),
    /// Estimate the information dimension of a law.
    EstimateDim(EstimateArgs),
    /// Run the worked-construction self-checks.
    VerifyAppendices,
    /// Compose two stage losses.
    Cascade(CascadeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CorrectionArg {
    Plugin,
    MillerMadow,
}

impl From<CorrectionArg> for EntropyCorrection {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::Plugin => EntropyCorrection::Plugin,
            CorrectionArg::MillerMadow => EntropyCorrection::MillerMadow,
        }
    }
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Input law: stdnormal[:K], gauss2, gauss3, uniform[:K], dyadic-tail, or a JSON file.
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Comma-separated resolutions; defaults depend on the dimension.
    #[arg(long)]
    pub resolutions: Option<String>,
    #[arg(long, value_enum, default_value = "miller-madow")]
    pub correction: CorrectionArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// adder, clipper:<c>, project:<M>[:<N>], linear:<csv>, dyadic-folder, pca-sample[:<N>:<n>]
    #[arg(long)]
    pub block: String,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Monte Carlo draws for piece probabilities instead of box masses.
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PcaDemoArgs {
    #[arg(long)]
    pub dims: usize,
    #[arg(long)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct PcaCurveArgs {
    /// One or more input dimensions N.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20])]
    pub dims: Vec<usize>,
    /// Values of n; defaults to 1..=4N for each N.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DomainArg {
    Discrete,
    Continuous,
}

#[derive(Debug, Args)]
pub struct CascadeArgs {
    #[arg(long)]
    pub l1: f64,
    #[arg(long)]
    pub l2: f64,
    #[arg(long, value_enum, default_value = "continuous")]
    pub domain: DomainArg,
}

/// A validated `analyze` run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub block: String,
    pub spec: DistributionSpec,
    pub samples: usize,
    pub resolutions: Vec<u32>,
    pub seed: u64,
    pub tolerance: f64,
    pub correction: EntropyCorrection,
    pub piece_mode: PieceProbMode,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        check_samples(self.samples)?;
        let mut ladder = self.resolutions.clone();
        ladder.sort_unstable();
        ladder.dedup();
        if ladder.len() < 2 {
            return Err(Error::InvalidResolutions(
                "need at least two distinct resolutions".into(),
            ));
        }
        self.spec.validate()
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// Parse `std::env::args` and run.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(cli, a),
        Command::PcaDemo(a) => cmd_pca_demo(cli, a),
        Command::PcaCurve(a) => cmd_pca_curve(cli, a),
        Command::EstimateDim(a) => cmd_estimate_dim(cli, a),
        Command::VerifyAppendices => cmd_verify_appendices(cli),
        Command::Cascade(a) => cmd_cascade(cli, a),
    }
}

fn meta(cli: &Cli) -> Option<Value> {
    if cli.no_meta {
        return None;
    }
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Some(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "generated_unix": now,
    }))
}

/// Write `bytes` to a sibling temporary file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Emit a JSON report: to `--out` if given, to stdout under `--json`, and a
/// one-line `summary` otherwise.
fn emit(cli: &Cli, mut report: Value, summary: &str) -> Result<()> {
    if let (Some(m), Some(obj)) = (meta(cli), report.as_object_mut()) {
        obj.insert("meta".into(), m);
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    if let Some(path) = &cli.out {
        write_atomic(path, text.as_bytes())?;
    }
    if cli.json {
        print!("{text}");
    } else {
        println!("{summary}");
    }
    Ok(())
}

fn ladder_for(sampling: &SamplingArgs, dims: usize) -> Result<Vec<u32>> {
    match &sampling.resolutions {
        Some(text) => presets::parse_ladder(text),
        None => Ok(presets::default_ladder(dims)),
    }
}

/// Build the config for `analyze` from parsed arguments.
pub fn analyze_config(cli: &Cli, a: &AnalyzeArgs) -> Result<ExperimentConfig> {
    let spec = presets::parse_spec(&a.sampling.spec)?;
    let piece_mode = match a.mc_samples {
        Some(samples) => PieceProbMode::MonteCarlo {
            samples,
            seed: derive_seed(cli.seed, 1),
        },
        None => PieceProbMode::Analytic,
    };
    let config = ExperimentConfig {
        block: a.block.clone(),
        resolutions: ladder_for(&a.sampling, spec.dims())?,
        spec,
        samples: a.sampling.samples,
        seed: cli.seed,
        tolerance: a.tol,
        correction: a.sampling.correction.into(),
        piece_mode,
        out: cli.out.clone(),
    };
    config.validate()?;
    Ok(config)
}

/// Run one analysis and return the report with its exit code.
pub fn analyze(config: &ExperimentConfig) -> Result<(LossReport, i32)> {
    let block = presets::parse_block(&config.block, Some(config.spec.dims()))?;
    let analytic = analytic_relative_loss(&block, &config.spec, config.piece_mode)?;
    let x = dist::sample(&config.spec, config.samples, derive_seed(config.seed, 0))?;
    let y = block.apply(&x)?;
    let d_x = estimate_dimension(&x, &config.resolutions, config.correction)?;
    let d_y = estimate_dimension(&y, &config.resolutions, config.correction)?;
    let estimated = match loss_from_estimates(&d_x, &d_y) {
        Ok(l) => EstimatedPart {
            value: Some(l.value),
            stderr: l.stderr,
            error: None,
        },
        Err(e) => EstimatedPart {
            value: None,
            stderr: None,
            error: Some(e.to_string()),
        },
    };
    let pass = estimated
        .value
        .is_some_and(|v| (v - analytic.loss.value).abs() <= config.tolerance);
    let code = if d_x.undersampled || d_y.undersampled {
        EXIT_UNDERSAMPLED
    } else if pass {
        EXIT_PASS
    } else {
        EXIT_MISMATCH
    };
    let report = LossReport {
        block: block.name.clone(),
        spec: serde_json::to_value(&config.spec)?,
        analytic: AnalyticPart {
            value: analytic.loss.value,
            status: analytic.loss.status,
        },
        estimated,
        d_x,
        d_y,
        pass,
        tolerance: config.tolerance,
        pieces: analytic.pieces,
        meta: None,
    };
    Ok((report, code))
}

fn cmd_analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<i32> {
    let config = analyze_config(cli, a)?;
    let (report, code) = analyze(&config)?;
    let est = report
        .estimated
        .value
        .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    let summary = format!(
        "{}: analytic {:.5} ({}), estimated {est}, d(X) {:.3}, d(Y) {:.3}, {}{}",
        report.block,
        report.analytic.value,
        report.analytic.status,
        report.d_x.value,
        report.d_y.value,
        if report.pass { "PASS" } else { "FAIL" },
        if code == EXIT_UNDERSAMPLED {
            " (undersampled)"
        } else {
            ""
        },
    );
    emit(cli, serde_json::to_value(&report)?, &summary)?;
    Ok(code)
}

fn cmd_pca_demo(cli: &Cli, a: &PcaDemoArgs) -> Result<i32> {
    if a.dims == 0 || a.samples == 0 {
        return Err(Error::InvalidArgument(
            "need --dims >= 1 and --samples >= 1".into(),
        ));
    }
    let mut data = dist::sample(
        &DistributionSpec::standard_normal(a.dims),
        a.samples,
        derive_seed(cli.seed, 2),
    )?;
    if cli.center {
        data = pca::center(&data)?;
    }
    let (ymat, model) = pca::sample_pca(&data)?;
    let cov = pca::sample_covariance(&data);
    let rank = crate::linalg::numerical_rank(&cov, 1e-10);
    let max_offdiag = appendix::max_offdiag_covariance(
        a.dims,
        &crate::dist::SampleBatch::from_column_major(
            a.dims * a.samples,
            ymat.values().as_slice().to_vec(),
        )?,
    )?;
    let norm_error = data
        .samples()
        .zip(ymat.samples())
        .map(|(x, y)| {
            (x.iter().map(|v| v * v).sum::<f64>().sqrt()
                - y.iter().map(|v| v * v).sum::<f64>().sqrt())
            .abs()
        })
        .fold(0.0, f64::max);
    let (big_n, n) = (a.dims as u64, a.samples as u64);
    let loss = pca::sample_pca_loss(big_n, n)?;
    let full_rank = (big_n - 1) as f64 / (2 * n) as f64;
    let deficient = (2.0 * big_n as f64 - n as f64 - 1.0) / (2 * big_n) as f64;
    let graph = if n >= big_n && big_n >= 2 {
        let g = loss::pca_transfer_graph(big_n, n)?;
        let budget = loss::pca_budget(&g);
        Some(json!({ "graph": g, "budget": budget }))
    } else {
        None
    };
    let report = json!({
        "dims": a.dims,
        "samples": a.samples,
        "centered": cli.center,
        "model": model,
        "diagnostics": {
            "covariance_rank": rank,
            "orthogonality_error": model.orthogonality_error(),
            "max_offdiag_output_covariance": max_offdiag,
            "max_norm_change": norm_error,
        },
        "loss": loss,
        "loss_full_rank_formula": full_rank,
        "loss_rank_deficient_formula": deficient,
        "transfer": graph,
    });
    let summary = format!(
        "sample PCA N={} n={}: loss {:.5} ({}), covariance rank {rank}",
        a.dims, a.samples, loss.value, loss.status
    );
    emit(cli, report, &summary)?;
    Ok(EXIT_PASS)
}

/// Rows `(N, n, loss, status)` of the sample-PCA loss curve.
pub fn pca_curve_rows(dims: &[usize], n_list: &[usize]) -> Result<Vec<(usize, usize, LossValue)>> {
    let mut rows = Vec::new();
    for &big_n in dims {
        if big_n < 2 {
            return Err(Error::InvalidArgument(format!("need N >= 2, got {big_n}")));
        }
        let ns: Vec<usize> = if n_list.is_empty() {
            (1..=4 * big_n).collect()
        } else {
            n_list.to_vec()
        };
        for n in ns {
            rows.push((big_n, n, pca::sample_pca_loss(big_n as u64, n as u64)?));
        }
    }
    Ok(rows)
}

fn cmd_pca_curve(cli: &Cli, a: &PcaCurveArgs) -> Result<i32> {
    let rows = pca_curve_rows(&a.dims, &a.n_list)?;
    let mut text = String::from("N,n,loss,status\n");
    for (big_n, n, l) in &rows {
        text.push_str(&format!("{big_n},{n},{},{}\n", l.value, l.status));
    }
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(EXIT_PASS)
}

fn cmd_estimate_dim(cli: &Cli, a: &EstimateArgs) -> Result<i32> {
    let spec = presets::parse_spec(&a.sampling.spec)?;
    check_samples(a.sampling.samples)?;
    let ladder = ladder_for(&a.sampling, spec.dims())?;
    let batch = dist::sample(&spec, a.sampling.samples, derive_seed(cli.seed, 0))?;
    let d = estimate_dimension(&batch, &ladder, a.sampling.correction.into())?;
    let summary = format!(
        "d = {:.4} ± {:.4}{}",
        d.value,
        d.slope_stderr,
        if d.undersampled {
            " (undersampled)"
        } else {
            ""
        }
    );
    let code = if d.undersampled {
        EXIT_UNDERSAMPLED
    } else {
        EXIT_PASS
    };
    emit(cli, json!({ "spec": spec, "estimate": d }), &summary)?;
    Ok(code)
}

fn cmd_verify_appendices(cli: &Cli) -> Result<i32> {
    let checks = appendix::run_all(cli.seed)?;
    let failures: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    for name in &failures {
        eprintln!("check failed: {name}");
    }
    let summary = checks
        .iter()
        .map(|c| format!("{}: {}", c.name, if c.pass { "PASS" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join("\n");
    emit(
        cli,
        json!({ "checks": checks, "failures": failures }),
        &summary,
    )?;
    Ok(if failures.is_empty() {
        EXIT_PASS
    } else {
        EXIT_MISMATCH
    })
}

fn cmd_cascade(cli: &Cli, a: &CascadeArgs) -> Result<i32> {
    let domain = match a.domain {
        DomainArg::Discrete => Domain::Discrete,
        DomainArg::Continuous => Domain::Continuous,
    };
    let l = cascade_compose(
        LossValue::new(a.l1, Status::Proved)?,
        LossValue::new(a.l2, Status::Proved)?,
        domain,
    )?;
    emit(
        cli,
        json!({ "l1": a.l1, "l2": a.l2, "domain": domain, "loss": l }),
        &format!("cascade loss {} ({})", l.value, l.status),
    )?;
    Ok(EXIT_PASS)
}
