//! Reference mechanisms and the fixed pair of neighbouring databases.
//!
//! All mechanisms release a noisy summary of a database with records in
//! `[0, 1]`. Sampling is driven by a caller-supplied random stream, so a
//! mechanism value is immutable and can be shared freely between threads.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::analytic::claim::{regroup_inner, split_spec, Params};
use crate::error::{Error, Result};
use std::fmt;

/// Default number of participants.
pub const DEFAULT_RECORDS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Database {
    records: Vec<f64>,
}

impl Database {
    pub fn new(records: Vec<f64>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("database must contain at least one record"));
        }
        if let Some(bad) = records.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!("record {bad} outside [0, 1]")));
        }
        Ok(Database { records })
    }

    /// `D = (0, …, 0)` and `D' = (1, 0, …, 0)` with `r` records each.
    pub fn neighbors(r: usize) -> Result<(Database, Database)> {
        let d = Database::new(vec![0.0; r])?;
        let mut other = vec![0.0; r];
        other[0] = 1.0;
        Ok((d, Database::new(other)?))
    }

    pub fn records(&self) -> &[f64] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn summary_statistic(db: &Database) -> f64 {
    db.records.iter().sum()
}

/// Noise scale of the Gaussian and Laplace mechanisms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussParams {
    sigma: f64,
}

impl GaussParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(GaussParams { sigma })
    }

    /// The σ → 0 limit. Only available to tests.
    #[cfg(any(test, feature = "noiseless"))]
    pub fn noiseless() -> Self {
        GaussParams { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// DP-SGD on the quadratic loss `½(θ − x)²` over `Θ = ℝ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdParams {
    pub(crate) sigma: f64,
    pub(crate) rho: f64,
    pub(crate) tau: usize,
    pub(crate) m: usize,
    pub(crate) theta0: f64,
}

impl SgdParams {
    pub fn new(sigma: f64, rho: f64, tau: usize, m: usize, theta0: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid(format!("learning rate must lie in (0, 1), got {rho}")));
        }
        if tau == 0 {
            return Err(Error::invalid("iteration count must be at least 1"));
        }
        if m == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !theta0.is_finite() {
            return Err(Error::invalid("initial model must be finite"));
        }
        Ok(SgdParams { sigma, rho, tau, m, theta0 })
    }

    /// σ = 0.2, ρ = 0.2, τ = 10, m = 5, θ₀ = 0.
    pub fn reference() -> Self {
        SgdParams { sigma: 0.2, rho: 0.2, tau: 10, m: 5, theta0: 0.0 }
    }

    #[cfg(any(test, feature = "noiseless"))]
    pub fn noiseless(rho: f64, tau: usize, m: usize, theta0: f64) -> Self {
        SgdParams { sigma: 0.0, rho, tau, m, theta0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn tau(&self) -> usize {
        self.tau
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Variance of the final iterate on the all-zero database,
    /// `ρ²σ²(1 − (1 − ρ)^{2τ}) / (1 − (1 − ρ)²)`.
    pub fn output_variance(&self) -> f64 {
        let decay = (1.0 - self.rho) * (1.0 - self.rho);
        self.rho * self.rho * self.sigma * self.sigma * (1.0 - decay.powi(self.tau as i32))
            / (1.0 - decay)
    }
}

pub fn sample_gaussian<R: Rng + ?Sized>(db: &Database, p: &GaussParams, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    summary_statistic(db) + p.sigma * z
}

pub fn sample_laplace<R: Rng + ?Sized>(db: &Database, p: &GaussParams, rng: &mut R) -> f64 {
    summary_statistic(db) + p.sigma * laplace_noise(rng)
}

fn laplace_noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    if rng.random::<bool>() {
        e
    } else {
        -e
    }
}

/// Applies `inner` to a uniformly random subset of `m` records.
pub fn sample_subsampled<R: Rng + ?Sized>(
    db: &Database,
    m: usize,
    inner: &Mechanism,
    rng: &mut R,
) -> Result<f64> {
    check_batch(m, db.len())?;
    Ok(subsample_unchecked(db, m, inner, rng))
}

fn subsample_unchecked<R: Rng + ?Sized>(db: &Database, m: usize, inner: &Mechanism, rng: &mut R) -> f64 {
    let picked = index::sample(rng, db.len(), m);
    let reduced = Database {
        records: picked.iter().map(|i| db.records[i]).collect(),
    };
    inner.sample_scalar(&reduced, rng)
}

/// Runs `τ` noisy gradient steps `θ ← θ − ρ(mean_{i∈I}(θ − x_i) + Z)` with a
/// fresh batch `I` of `m` records and `Z ~ N(0, σ²)` per step.
pub fn sample_dpsgd<R: Rng + ?Sized>(db: &Database, p: &SgdParams, rng: &mut R) -> f64 {
    let mut theta = p.theta0;
    let inv_m = 1.0 / p.m as f64;
    for _ in 0..p.tau {
        let batch = index::sample(rng, db.len(), p.m);
        let mean_record: f64 = batch.iter().map(|i| db.records[i]).sum::<f64>() * inv_m;
        let z: f64 = StandardNormal.sample(rng);
        theta -= p.rho * ((theta - mean_record) + p.sigma * z);
    }
    theta
}

fn check_batch(m: usize, r: usize) -> Result<()> {
    if m == 0 || m >= r {
        return Err(Error::invalid(format!(
            "batch size must satisfy 1 <= m < r, got m = {m}, r = {r}"
        )));
    }
    Ok(())
}

/// One of the reference mechanisms.
#[derive(Clone, Debug, PartialEq)]
pub enum Mechanism {
    Gaussian(GaussParams),
    Laplace(GaussParams),
    Subsampled { inner: Box<Mechanism>, m: usize },
    DpSgd(SgdParams),
}

impl Mechanism {
    /// Identifier used on the command line.
    pub fn id(&self) -> &'static str {
        match self {
            Mechanism::Gaussian(_) => "gauss",
            Mechanism::Laplace(_) => "laplace",
            Mechanism::Subsampled { .. } => "subsample",
            Mechanism::DpSgd(_) => "dpsgd",
        }
    }

    /// Checks that the mechanism can run on `db`.
    pub fn validate(&self, db: &Database) -> Result<()> {
        match self {
            Mechanism::Gaussian(_) | Mechanism::Laplace(_) => Ok(()),
            Mechanism::Subsampled { inner, m } => {
                check_batch(*m, db.len())?;
                // the inner mechanism sees a database of m records
                match inner.as_ref() {
                    Mechanism::Subsampled { .. } | Mechanism::DpSgd(_) => Err(Error::invalid(
                        "subsampling supports Gaussian or Laplace inner mechanisms",
                    )),
                    _ => Ok(()),
                }
            }
            Mechanism::DpSgd(p) => check_batch(p.m, db.len()),
        }
    }

    /// One release. The output is a 1-vector so that vector-valued mechanisms
    /// fit the same interface.
    pub fn sample<R: Rng + ?Sized>(&self, db: &Database, rng: &mut R) -> [f64; 1] {
        [self.sample_scalar(db, rng)]
    }

    pub fn sample_scalar<R: Rng + ?Sized>(&self, db: &Database, rng: &mut R) -> f64 {
        match self {
            Mechanism::Gaussian(p) => sample_gaussian(db, p, rng),
            Mechanism::Laplace(p) => sample_laplace(db, p, rng),
            Mechanism::Subsampled { inner, m } => subsample_unchecked(db, *m, inner, rng),
            Mechanism::DpSgd(p) => sample_dpsgd(db, p, rng),
        }
    }

    /// `n` independent releases drawn from the chunked streams of `key`.
    pub fn sample_many(&self, db: &Database, n: usize, key: crate::rng::SeedKey) -> Vec<f64> {
        key.fill(n, |rng| self.sample_scalar(db, rng))
    }
}

impl Mechanism {
    /// Parses `gauss:sigma=1`, `laplace:sigma=1`,
    /// `subsample:inner=gauss,sigma=1,m=5` or
    /// `dpsgd:sigma=0.2,rho=0.2,tau=10,m=5,theta0=0`. Omitted values take the
    /// reference settings.
    pub fn parse(input: &str) -> Result<Self> {
        let (kind, pairs) = split_spec(input)?;
        let wrap = |e: Error| Error::parse(input, e.to_string());
        match kind.as_str() {
            "gauss" | "gaussian" | "laplace" => {
                let p = Params::new(input, pairs);
                p.reject_unknown(&["sigma"])?;
                let g = GaussParams::new(p.f64_or("sigma", Some(1.0))?).map_err(wrap)?;
                Ok(if kind == "laplace" { Mechanism::Laplace(g) } else { Mechanism::Gaussian(g) })
            }
            "subsample" => {
                let p = Params::new(input, regroup_inner(pairs));
                p.reject_unknown(&["inner", "m"])?;
                let inner = Mechanism::parse(p.raw("inner").unwrap_or("gauss:sigma=1"))?;
                if matches!(inner, Mechanism::Subsampled { .. } | Mechanism::DpSgd(_)) {
                    return Err(Error::parse(input, "inner mechanism must be gauss or laplace"));
                }
                let m = p.usize_or("m", Some(5))?;
                if m == 0 {
                    return Err(Error::parse(input, "`m` must be at least 1"));
                }
                Ok(Mechanism::Subsampled { inner: Box::new(inner), m })
            }
            "dpsgd" | "sgd" => {
                let p = Params::new(input, pairs);
                p.reject_unknown(&["sigma", "rho", "tau", "m", "theta0"])?;
                let r = SgdParams::reference();
                let params = SgdParams::new(
                    p.f64_or("sigma", Some(r.sigma))?,
                    p.f64_or("rho", Some(r.rho))?,
                    p.usize_or("tau", Some(r.tau))?,
                    p.usize_or("m", Some(r.m))?,
                    p.f64_or("theta0", Some(r.theta0))?,
                )
                .map_err(wrap)?;
                Ok(Mechanism::DpSgd(params))
            }
            other => Err(Error::parse(input, format!("unknown mechanism `{other}`"))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mechanism::Gaussian(g) => write!(f, "gauss:sigma={}", g.sigma),
            Mechanism::Laplace(g) => write!(f, "laplace:sigma={}", g.sigma),
            Mechanism::Subsampled { inner, m } => write!(f, "subsample:inner=({inner}),m={m}"),
            Mechanism::DpSgd(p) => write!(
                f,
                "dpsgd:sigma={},rho={},tau={},m={},theta0={}",
                p.sigma, p.rho, p.tau, p.m, p.theta0
            ),
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::parse(s)
    }
}
