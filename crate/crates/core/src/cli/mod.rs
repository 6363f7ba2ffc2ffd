//! Command-line front end: JSON configs in, CSV or JSON artifacts out.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid config, 3 not certified,
//! 4 embedding not compact, 5 enumeration cap, 6 degenerate or infinite norm,
//! 7 linear solve failure, 8 i/o.

pub mod config;
pub mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::decomp::{decompose, q_const, weighted_contributions, weighted_norm, Anchor, DecompError, Mode};
use crate::epsdim::{self, DecayCertificate, DimensionModel, EnumOptions, EpsDimError};
use crate::equivalence::{check_conditions, default_alpha, product_weight_equivalence, EquivError, Outcome};
use crate::index::{IndexSet, IndexVector, SupportSet};
use crate::quad::{gauss_legendre, QuadratureRule};
use crate::regress::{fit_map, rmse, KernelSpec, RegressError, SampleSet};
use crate::sensitivity::{sobol_indices, total_index, truncation_bound, truncation_error, SensitivityError};
use crate::series::Sequence;
use crate::weights::{hat_transform, va_wa_condition, v_norm_defined, GammaModel, VNormStatus, VaWa, WeightError, WeightModel};

use config::{Dims, Format, Lambdas};
use output::{fmt_f64, json, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Epsilon-dimensions of a weight pair on an eps grid.
    Epsdim,
    /// The `a -> â` transform and the VaWa constant.
    Transform,
    /// ANOVA decomposition table.
    Anova,
    /// Anchored decomposition table.
    Anchored,
    /// ANOVA/anchored norm-equivalence certificate.
    Equiv,
    /// Weighted Sobol indices.
    Sobol,
    /// m-variate truncation errors and bounds.
    Truncate,
    /// Regularized least-squares fit from CSV samples.
    Regress,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "tensorsplit", version, about = "Weighted tensor-product decompositions from JSON configs")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON config for the subcommand.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub quad_order: usize,
    #[arg(long, default_value_t = 0.5)]
    pub anchor: f64,
    /// Enumeration cap for epsilon-dimensions.
    #[arg(long, default_value = "10_000_000", value_parser = parse_count)]
    pub cap: usize,
}

impl RunConfig {
    pub fn new(command: Command, config: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            config: config.into(),
            out: None,
            threads: None,
            quad_order: 32,
            anchor: 0.5,
            cap: epsdim::DEFAULT_CAP,
        }
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    let digits: String = s.chars().filter(|&c| c != '_').collect();
    digits.parse().map_err(|e| format!("{s}: {e}"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    EpsDim(#[from] EpsDimError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Regress(#[from] RegressError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn weight_code(e: &WeightError) -> i32 {
    match e {
        WeightError::NormDegenerate(_) => 6,
        WeightError::InvalidModel(_) | WeightError::Series(_) | WeightError::NotInSupport(_) => 2,
        WeightError::InclusionViolated(_) | WeightError::OracleUnavailable(_) => 1,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            CliError::Io(_) => 8,
            CliError::EpsDim(e) => match e {
                EpsDimError::InvalidEps(_) => 2,
                EpsDimError::NotCompact(_) => 4,
                EpsDimError::EnumerationCap { .. } => 5,
                EpsDimError::CertificateRequired(_) => 1,
                EpsDimError::Weight(w) => weight_code(w),
            },
            CliError::Weight(w) => weight_code(w),
            CliError::Decomp(e) => match e {
                DecompError::NormInfinite(_) => 6,
                DecompError::InvalidFunction(_) | DecompError::AnchorOutOfRange(_) => 2,
            },
            CliError::Equiv(e) => match e {
                EquivError::TailUnavailable(_) | EquivError::AlphaNotPositive(_) => 1,
                EquivError::QTildeOutOfRange(_) | EquivError::InvalidQ(_) => 2,
            },
            CliError::Sensitivity(e) => match e {
                SensitivityError::DegenerateDenominator | SensitivityError::GammaL1Violated { .. } => 6,
                SensitivityError::Decomp(d) => CliError::Decomp(d.clone()).exit_code(),
            },
            CliError::Regress(e) => match e {
                RegressError::KernelAsymmetric(_) | RegressError::SolveFailed(_) => 7,
                RegressError::InvalidSamples(_) | RegressError::InvalidLambda(_) => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config_invalid",
            4 => "not_compact",
            5 => "enumeration_cap",
            6 => "degenerate",
            7 => "solve_failed",
            8 => "io",
            _ => "error",
        }
    }

    fn details(&self) -> Option<serde_json::Value> {
        let w = match self {
            CliError::Weight(WeightError::NormDegenerate(w)) => w,
            CliError::EpsDim(EpsDimError::Weight(WeightError::NormDegenerate(w))) => w,
            _ => return None,
        };
        serde_json::to_value(w).ok()
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    exit_code: i32,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<serde_json::Value>,
}

/// Bytes to write plus the exit status they carry (nonzero for a "not certified" report).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    pub status: i32,
}

impl Artifact {
    fn ok(bytes: Vec<u8>) -> Self {
        Artifact { bytes, status: 0 }
    }
}

/// Reads `TENSORSPLIT_LOG` (error, warn, info, debug); warn by default.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("TENSORSPLIT_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs one subcommand, writes its artifact and returns the process exit code.
/// Errors are reported as JSON on stderr.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = execute(cfg).and_then(|art| {
        write_artifact(cfg.out.as_deref(), &art.bytes)?;
        Ok(art.status)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let report = ErrorReport {
                error: e.kind(),
                exit_code: e.exit_code(),
                message: e.to_string(),
                witness: e.details(),
            };
            if let Ok(bytes) = json(&report) {
                let _ = std::io::stderr().write_all(&bytes);
            }
            e.exit_code()
        }
    }
}

fn write_artifact(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Runs one subcommand and returns its artifact without writing it.
pub fn execute(cfg: &RunConfig) -> Result<Artifact, CliError> {
    match cfg.threads {
        Some(0) => Err(CliError::ConfigInvalid("--threads must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::ConfigInvalid(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cfg))
        }
        None => dispatch(cfg),
    }
}

struct Ctx {
    anchor: Anchor,
    rule: QuadratureRule,
    cap: usize,
    dir: PathBuf,
}

fn dispatch(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let start = Instant::now();
    let rule = gauss_legendre(cfg.quad_order).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let anchor = Anchor::new(cfg.anchor).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    if cfg.cap == 0 {
        return Err(CliError::ConfigInvalid("--cap must be positive".into()));
    }
    let text = fs::read_to_string(&cfg.config).map_err(|e| CliError::Io(format!("{}: {e}", cfg.config.display())))?;
    let ctx = Ctx {
        anchor,
        rule,
        cap: cfg.cap,
        dir: cfg.config.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let art = match cfg.command {
        Command::Epsdim => epsdim_cmd(&ctx, parse(&text)?),
        Command::Transform => transform_cmd(parse(&text)?),
        Command::Anova => decomp_cmd(&ctx, Mode::Anova, parse(&text)?),
        Command::Anchored => decomp_cmd(&ctx, Mode::Anchored, parse(&text)?),
        Command::Equiv => equiv_cmd(&ctx, parse(&text)?),
        Command::Sobol => sobol_cmd(&ctx, parse(&text)?),
        Command::Truncate => truncate_cmd(&ctx, parse(&text)?),
        Command::Regress => regress_cmd(&ctx, parse(&text)?),
    }?;
    log::info!("{:?} finished in {:.3} s", cfg.command, start.elapsed().as_secs_f64());
    Ok(art)
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
}

fn json_artifact<T: Serialize>(value: &T, status: i32) -> Result<Artifact, CliError> {
    let bytes = json(value).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Artifact { bytes, status })
}

fn epsdim_cmd(ctx: &Ctx, c: config::EpsDimConfig) -> Result<Artifact, CliError> {
    let a = WeightModel::try_from(c.a)?;
    let b = WeightModel::try_from(c.b)?;
    if c.eps.is_empty() {
        return Err(CliError::ConfigInvalid("'eps' must list at least one value".into()));
    }
    let dims = match c.dims {
        Dims::AllOne => DimensionModel::AllOne,
        Dims::Spline => DimensionModel::Spline,
    };
    let decay = c.certificate.map_or(DecayCertificate::Auto, |b| DecayCertificate::Box {
        max_coord: b.max_coord,
        max_level: b.max_level,
        monotone: b.monotone,
    });
    let opts = EnumOptions {
        cap: ctx.cap,
        allow_truncation: c.allow_truncation,
        restrict: None,
    };
    let mut csv = Csv::new(&["eps", "d", "n", "j_count", "d0", "truncated"])?;
    for &eps in &c.eps {
        let full = epsdim::eps_dimension(&a, &b, eps, &dims, decay, &opts)?;
        let d0 = full.max_coord();
        log::debug!("eps = {eps}: n = {}, |J| = {}", full.n, full.count());
        csv.row([
            fmt_f64(eps),
            String::new(),
            full.n.to_string(),
            full.count().to_string(),
            d0.to_string(),
            full.truncated.to_string(),
        ])?;
        for &d in &c.d {
            let (n, count, truncated) = if full.truncated {
                let r = epsdim::eps_dimension_restricted(&a, &b, eps, &dims, d, decay, &opts)?;
                (r.n, r.count(), r.truncated)
            } else {
                let set = full.index_set.restrict(d);
                (set.iter().map(|j| dims.dim(j)).sum(), set.len(), false)
            };
            csv.row([
                fmt_f64(eps),
                d.to_string(),
                n.to_string(),
                count.to_string(),
                d0.to_string(),
                truncated.to_string(),
            ])?;
        }
    }
    Ok(Artifact::ok(csv.finish()?))
}

#[derive(Serialize)]
struct TransformRow {
    index: IndexVector,
    a: f64,
    a_hat: f64,
    /// `â_j / a_j`.
    ratio: f64,
}

#[derive(Serialize)]
struct TransformReport {
    model: String,
    /// `sum_j a_j^{-1}` over the support.
    inverse_sum: f64,
    /// `None` when `sup_j a_j / â_j` is infinite.
    va_wa: Option<VaWa>,
    rows: Vec<TransformRow>,
}

fn transform_cmd(c: config::TransformConfig) -> Result<Artifact, CliError> {
    let a = WeightModel::try_from(c.a)?;
    let inverse_sum = match v_norm_defined(&a, &a)? {
        VNormStatus::Defined { inverse_sum } => inverse_sum,
        VNormStatus::Degenerate(w) => return Err(WeightError::NormDegenerate(Box::new(w)).into()),
    };
    let search = IndexSet::full_box(c.search.max_coord, c.search.max_level);
    let indices = c
        .indices
        .unwrap_or_else(|| search.iter().filter(|j| a.weight(j) > 0.0).cloned().collect());
    let rows = indices
        .into_iter()
        .map(|j| {
            let aj = a.weight(&j);
            let a_hat = hat_transform(&a, &j, &a)?;
            Ok(TransformRow {
                a: aj,
                a_hat,
                ratio: a_hat / aj,
                index: j,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let va_wa = va_wa_condition(&a, &search, &a)?;
    json_artifact(
        &TransformReport {
            model: a.name(),
            inverse_sum,
            va_wa,
            rows,
        },
        0,
    )
}

#[derive(Serialize)]
struct DecompRow {
    omega: SupportSet,
    term_norm: f64,
    weighted: f64,
    mean_err: f64,
}

#[derive(Serialize)]
struct DecompReport {
    mode: Mode,
    anchor: Anchor,
    weighted_norm: f64,
    rows: Vec<DecompRow>,
}

fn decomp_cmd(ctx: &Ctx, mode: Mode, c: config::DecompConfig) -> Result<Artifact, CliError> {
    let terms = decompose(&c.function, mode, ctx.anchor, &ctx.rule);
    let contributions = weighted_contributions(&terms, &c.gamma)?;
    let rows: Vec<DecompRow> = terms
        .iter()
        .zip(contributions)
        .map(|(t, r)| DecompRow {
            omega: r.omega,
            term_norm: r.term_norm,
            weighted: r.weighted,
            mean_err: t.mean_err,
        })
        .collect();
    match c.format {
        Format::Csv => {
            let mut csv = Csv::new(&["omega", "term_norm", "weighted"])?;
            for r in &rows {
                csv.row([r.omega.to_string(), fmt_f64(r.term_norm), fmt_f64(r.weighted)])?;
            }
            Ok(Artifact::ok(csv.finish()?))
        }
        Format::Json => json_artifact(
            &DecompReport {
                mode,
                anchor: ctx.anchor,
                weighted_norm: rows.iter().map(|r| r.weighted).sum::<f64>().sqrt(),
                rows,
            },
            0,
        ),
    }
}

#[derive(Serialize)]
struct EquivReport {
    anchor: Anchor,
    #[serde(flatten)]
    outcome: Outcome,
    /// For product weights: whether `sum_k sqrt(gamma_k)` converges.
    #[serde(skip_serializing_if = "Option::is_none")]
    product_equivalence: Option<bool>,
}

fn equiv_cmd(ctx: &Ctx, c: config::EquivConfig) -> Result<Artifact, CliError> {
    let q = c.q.unwrap_or_else(|| q_const(ctx.anchor));
    let alpha = match c.alpha {
        Some(a) => a,
        None => default_alpha(&c.gamma, c.q_tilde)?,
    };
    let outcome = check_conditions(&c.gamma, &alpha, q)?;
    let product_equivalence = match &c.gamma {
        GammaModel::Product(g) => Some(product_weight_equivalence(g)),
        _ => None,
    };
    let status = if outcome.certificate().is_some() { 0 } else { 3 };
    json_artifact(
        &EquivReport {
            anchor: ctx.anchor,
            outcome,
            product_equivalence,
        },
        status,
    )
}

fn sobol_cmd(ctx: &Ctx, c: config::SobolConfig) -> Result<Artifact, CliError> {
    let table = sobol_indices(&c.function, &c.gamma, c.mode, ctx.anchor, c.include_empty, &ctx.rule)?;
    let mut csv = Csv::new(&["omega", "s", "s_tot"])?;
    for (omega, s) in &table.per_omega {
        csv.row([omega.to_string(), fmt_f64(*s), fmt_f64(total_index(&table, omega))])?;
    }
    Ok(Artifact::ok(csv.finish()?))
}

fn truncate_cmd(ctx: &Ctx, c: config::TruncateConfig) -> Result<Artifact, CliError> {
    let f = &c.function;
    let ms = c.m.unwrap_or_else(|| (0..=f.dim() as usize).collect());
    let norm = weighted_norm(f, &c.gamma, c.mode, ctx.anchor, &ctx.rule)?;
    let mut csv = Csv::new(&["m", "error", "bound", "bound_ratio"])?;
    for m in ms {
        let error = truncation_error(f, m, c.mode, ctx.anchor, &ctx.rule);
        let bound = truncation_bound(&c.gamma, m, c.mode, ctx.anchor)? * norm;
        let ratio = if bound > 0.0 {
            error / bound
        } else if error == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        csv.row([m.to_string(), fmt_f64(error), fmt_f64(bound), fmt_f64(ratio)])?;
    }
    Ok(Artifact::ok(csv.finish()?))
}

/// Rows of a sample file: inputs and outputs.
pub type Rows = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Reads a CSV whose columns are named `x...` (inputs) and `y...` (outputs), in file order.
pub fn read_samples(path: &Path) -> Result<Rows, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| CliError::ConfigInvalid(e.to_string()))?.clone();
    let mut xcols = Vec::new();
    let mut ycols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        match h.chars().next() {
            Some('x') => xcols.push(i),
            Some('y') => ycols.push(i),
            _ => return Err(CliError::ConfigInvalid(format!("sample column '{h}' is neither x* nor y*"))),
        }
    }
    if xcols.is_empty() || ycols.is_empty() {
        return Err(CliError::ConfigInvalid("samples need at least one x and one y column".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        let get = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .parse()
                .map_err(|_| CliError::ConfigInvalid(format!("row {}: '{}' is not a number", line + 1, &rec[i])))
        };
        xs.push(xcols.iter().map(|&i| get(i)).collect::<Result<Vec<_>, _>>()?);
        ys.push(ycols.iter().map(|&i| get(i)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((xs, ys))
}

#[derive(Serialize)]
struct RegressReport {
    n_train: usize,
    n_test: usize,
    seed: u64,
    lambdas: Vec<f64>,
    jitter: f64,
    /// 0-based rows of the sample file used for training, in file order.
    train_rows: Vec<usize>,
    /// One row per training sample, one column per output.
    coefficients: Vec<Vec<f64>>,
    train_rmse: Vec<f64>,
    holdout_rmse: Option<Vec<f64>>,
}

fn regress_cmd(ctx: &Ctx, c: config::RegressConfig) -> Result<Artifact, CliError> {
    if !(0.0..1.0).contains(&c.holdout) {
        return Err(CliError::ConfigInvalid(format!("holdout fraction {} outside [0, 1)", c.holdout)));
    }
    let (xs, ys) = read_samples(&ctx.dir.join(&c.samples))?;
    let n = xs.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(c.seed));
    let n_test = ((c.holdout * n as f64).floor() as usize).min(n.saturating_sub(1));
    let mut test_rows = perm[..n_test].to_vec();
    let mut train_rows = perm[n_test..].to_vec();
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    let subset = |rows: &[usize]| {
        SampleSet::new(
            rows.iter().map(|&i| xs[i].clone()).collect(),
            rows.iter().map(|&i| ys[i].clone()).collect(),
        )
    };
    let train = subset(&train_rows)?;
    let kernel = match &c.kernel {
        Some(k) => k.build(ctx.anchor),
        None => KernelSpec::AnchoredH1 {
            anchor: ctx.anchor,
            gamma: Sequence::ones(),
        },
    };
    let lambdas = match c.lambda {
        Lambdas::Shared(v) => vec![v; train.outputs_len()],
        Lambdas::PerOutput(v) => v,
    };
    let model = fit_map(&train, &kernel, &lambdas)?;
    let holdout_rmse = if n_test > 0 {
        Some(rmse(&model, &subset(&test_rows)?))
    } else {
        None
    };
    let coefficients = model
        .coefficients
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    json_artifact(
        &RegressReport {
            n_train: train.len(),
            n_test,
            seed: c.seed,
            lambdas,
            jitter: model.jitter,
            train_rows,
            coefficients,
            train_rmse: rmse(&model, &train),
            holdout_rmse,
        },
        0,
    )
}
