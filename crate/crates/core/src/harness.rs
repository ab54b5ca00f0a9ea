//! Repeated experiments and their flat-file formats.
//!
//! Repetition `i` of any experiment is seeded with `SeedKey::new(seed).index(i)`
//! (a splitmix64 mix of the master seed and `i`), so runs are independent of
//! scheduling and results are reproducible bit for bit.

use crate::analytic::{tradeoff_subsampled, ClaimSpec, SgdCurve, TradeoffCurve};
use crate::auditor::{audit_curve, AuditParams, AuditReport};
use crate::baybox::baybox_estimate;
use crate::error::{Error, Result};
use crate::mechanisms::{Database, Mechanism, DEFAULT_RECORDS};
use crate::ptlr::{estimate_curve, uniform_error, CurveEstimate, EtaGrid, DEFAULT_H};
use crate::rng::SeedKey;
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Number of uniform `α` knots of an envelope band.
pub const ENVELOPE_KNOTS: usize = 1001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::parse(s, "format must be csv or json")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mechanism: Mechanism,
    /// Database size; the neighbouring pair is all zeros against a single one.
    pub records: usize,
    pub n1: usize,
    pub n1_grid: Vec<usize>,
    pub n2: usize,
    pub h: f64,
    pub gamma: f64,
    pub grid: EtaGrid,
    pub repetitions: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    /// Desk-scale defaults.
    pub fn new(mechanism: Mechanism) -> Self {
        RunConfig {
            mechanism,
            records: DEFAULT_RECORDS,
            n1: 100_000,
            n1_grid: vec![1_000, 10_000, 100_000],
            n2: 1_000_000,
            h: DEFAULT_H,
            gamma: 0.05,
            grid: EtaGrid::default(),
            repetitions: 100,
            seed: 0,
            output: None,
            format: OutputFormat::Csv,
        }
    }

    /// 1000 repetitions and the full `n1` grid.
    pub fn paper_scale(mut self) -> Self {
        self.repetitions = 1000;
        self.n1_grid = vec![100, 1_000, 10_000, 100_000, 1_000_000];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.h.is_nan() || self.h <= 0.0 {
            return Err(Error::invalid(format!("h must be positive, got {}", self.h)));
        }
        let (d, d2) = self.databases()?;
        self.mechanism.validate(&d)?;
        self.mechanism.validate(&d2)
    }

    pub fn databases(&self) -> Result<(Database, Database)> {
        Database::neighbors(self.records)
    }

    pub fn oracle(&self) -> Result<TradeoffCurve> {
        oracle_curve(&self.mechanism, self.records)
    }

    fn run_key(&self, i: usize) -> SeedKey {
        SeedKey::new(self.seed).index(i as u64)
    }

    fn audit_params(&self, i: usize) -> AuditParams {
        AuditParams {
            n1: self.n1,
            n2: self.n2,
            gamma: self.gamma,
            h: self.h,
            grid: self.grid.clone(),
            seed: self.run_key(i).0,
        }
    }
}

/// Exact trade-off curve of a mechanism on the neighbouring pair of size `r`.
pub fn oracle_curve(mech: &Mechanism, r: usize) -> Result<TradeoffCurve> {
    Ok(match mech {
        Mechanism::Gaussian(g) => TradeoffCurve::Gauss { mu: 1.0 / g.sigma() },
        Mechanism::Laplace(g) => TradeoffCurve::Laplace { eps: 1.0 / g.sigma() },
        Mechanism::Subsampled { inner, m } => tradeoff_subsampled(oracle_curve(inner, *m)?, *m, r)?,
        Mechanism::DpSgd(p) => TradeoffCurve::Sgd(SgdCurve::new(p, r)?),
    })
}

/// One curve estimate with `cfg.n1` samples and the master seed.
pub fn run_estimate(cfg: &RunConfig) -> Result<CurveEstimate> {
    cfg.validate()?;
    let (d, d2) = cfg.databases()?;
    estimate_curve(&cfg.mechanism, &d, &d2, cfg.n1, &cfg.grid, cfg.h, SeedKey::new(cfg.seed))
}

/// One audit with the master seed.
pub fn run_audit(cfg: &RunConfig, claim: &ClaimSpec) -> Result<AuditReport> {
    cfg.validate()?;
    let (d, d2) = cfg.databases()?;
    let curve = claim.resolve()?;
    let mut params = cfg.audit_params(0);
    params.seed = cfg.seed;
    audit_curve(&cfg.mechanism, &d, &d2, &curve, &claim.to_string(), &params)
}

/// Uniform errors of `cfg.repetitions` independent estimates at sample size `n1`.
pub fn uniform_errors(cfg: &RunConfig, n1: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    let oracle = cfg.oracle()?;
    let (d, d2) = cfg.databases()?;
    let label = format!("n1={n1}");
    (0..cfg.repetitions)
        .into_par_iter()
        .map(|i| {
            let key = cfg.run_key(i).child(&label);
            let est = estimate_curve(&cfg.mechanism, &d, &d2, n1, &cfg.grid, cfg.h, key)?;
            Ok(uniform_error(&est, &oracle))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub n1: usize,
    pub mse: f64,
}

/// Mean squared uniform error for every `n1` in `cfg.n1_grid`.
pub fn run_mse_experiment(cfg: &RunConfig) -> Result<Vec<MseRow>> {
    cfg.n1_grid
        .iter()
        .map(|&n1| {
            let errs = uniform_errors(cfg, n1)?;
            let mse = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
            Ok(MseRow { n1, mse })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub oracle: f64,
}

/// Pointwise range of the estimated curves over the repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBand {
    pub rows: Vec<EnvelopeRow>,
}

impl EnvelopeBand {
    pub fn max_width(&self) -> f64 {
        self.rows.iter().map(|r| r.upper - r.lower).fold(0.0, f64::max)
    }
}

pub fn run_envelope(cfg: &RunConfig) -> Result<EnvelopeBand> {
    if cfg.repetitions < 2 {
        return Err(Error::invalid("an envelope needs at least two repetitions"));
    }
    cfg.validate()?;
    let oracle = cfg.oracle()?;
    let (d, d2) = cfg.databases()?;
    let alphas: Vec<f64> = (0..ENVELOPE_KNOTS).map(|i| i as f64 / (ENVELOPE_KNOTS - 1) as f64).collect();
    let curves = (0..cfg.repetitions)
        .into_par_iter()
        .map(|i| {
            let est = estimate_curve(&cfg.mechanism, &d, &d2, cfg.n1, &cfg.grid, cfg.h, cfg.run_key(i))?;
            let view = est.curve();
            Ok(alphas.iter().map(|&a| view.eval(a)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let col = curves.iter().map(|c| c[j]);
            EnvelopeRow {
                alpha,
                lower: col.clone().fold(f64::INFINITY, f64::min),
                upper: col.clone().fold(f64::NEG_INFINITY, f64::max),
                mean: col.sum::<f64>() / curves.len() as f64,
                oracle: oracle.eval(alpha),
            }
        })
        .collect();
    Ok(EnvelopeBand { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    N1,
    N2,
    Gamma,
    H,
}

/// A parameter and the values it takes, e.g. `n2=10000,100000`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, list) = s.split_once('=').ok_or_else(|| Error::parse(s, "expected name=v1,v2,..."))?;
        let param = match name.trim().to_ascii_lowercase().as_str() {
            "n1" => SweepParam::N1,
            "n2" => SweepParam::N2,
            "gamma" => SweepParam::Gamma,
            "h" => SweepParam::H,
            other => return Err(Error::parse(s, format!("cannot sweep `{other}`"))),
        };
        let values = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|_| Error::parse(s, format!("`{v}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        let integral = matches!(param, SweepParam::N1 | SweepParam::N2);
        if integral && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::parse(s, "sample sizes must be whole numbers"));
        }
        Ok(Sweep { param, values })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParam,
    pub value: f64,
    pub runs: usize,
    pub violations: usize,
}

/// `cfg.repetitions` audits per sweep value. Repetition `i` uses the same
/// seed at every sweep value.
pub fn run_audit_sweep(cfg: &RunConfig, claim: &ClaimSpec, sweep: &Sweep) -> Result<Vec<SweepRow>> {
    Ok(run_audit_sweep_reports(cfg, claim, sweep)?
        .into_iter()
        .map(|(row, _)| row)
        .collect())
}

/// [`run_audit_sweep`] together with every report.
pub fn run_audit_sweep_reports(
    cfg: &RunConfig,
    claim: &ClaimSpec,
    sweep: &Sweep,
) -> Result<Vec<(SweepRow, Vec<AuditReport>)>> {
    if sweep.values.is_empty() {
        return Ok(Vec::new());
    }
    cfg.validate()?;
    let curve = claim.resolve()?;
    let label = claim.to_string();
    let (d, d2) = cfg.databases()?;
    sweep
        .values
        .iter()
        .map(|&value| {
            let reports = (0..cfg.repetitions)
                .into_par_iter()
                .map(|i| {
                    let mut p = cfg.audit_params(i);
                    match sweep.param {
                        SweepParam::N1 => p.n1 = value as usize,
                        SweepParam::N2 => p.n2 = value as usize,
                        SweepParam::Gamma => p.gamma = value,
                        SweepParam::H => p.h = value,
                    }
                    audit_curve(&cfg.mechanism, &d, &d2, &curve, &label, &p)
                })
                .collect::<Result<Vec<AuditReport>>>()?;
            let violations = reports.iter().filter(|r| r.verdict.is_violation()).count();
            Ok((SweepRow { parameter: sweep.param, value, runs: reports.len(), violations }, reports))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub stage: String,
    pub seconds: f64,
}

/// Mean wall-clock time of a curve estimate at `cfg.n1` and of a point
/// estimate at `cfg.n2` (threshold 1).
pub fn report_runtime(cfg: &RunConfig) -> Result<Vec<RuntimeRow>> {
    cfg.validate()?;
    let (d, d2) = cfg.databases()?;
    let (mut curve, mut point) = (0.0, 0.0);
    for i in 0..cfg.repetitions {
        let key = cfg.run_key(i);
        let t = Instant::now();
        estimate_curve(&cfg.mechanism, &d, &d2, cfg.n1, &cfg.grid, cfg.h, key)?;
        curve += t.elapsed().as_secs_f64();
        let t = Instant::now();
        baybox_estimate(&cfg.mechanism, &d, &d2, 1.0, cfg.n2, cfg.gamma, key)?;
        point += t.elapsed().as_secs_f64();
    }
    let reps = cfg.repetitions as f64;
    Ok(vec![
        RuntimeRow { stage: "estimate_curve".into(), seconds: curve / reps },
        RuntimeRow { stage: "baybox_estimate".into(), seconds: point / reps },
    ])
}

/// Writes `rows` as CSV with a header derived from the field names.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Opens `path` for writing, or standard output when `None`.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Writes table rows in the configured format.
pub fn emit_rows<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> Result<()> {
    let mut out = open_output(cfg.output.as_deref())?;
    match cfg.format {
        OutputFormat::Csv => write_csv(rows, &mut out)?,
        OutputFormat::Json => write_json(rows, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
