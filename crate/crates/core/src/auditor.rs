//! Violation detection against a claimed trade-off curve.
//!
//! The estimated curve points at the threshold where the claim looks weakest;
//! a confidence square around a fresh estimate of that single point then
//! decides. A violation is reported only when the whole square lies strictly
//! below the claim.

use crate::analytic::{ClaimSpec, TradeoffCurve};
use crate::baybox::{baybox_estimate, TradeoffPointEstimate};
use crate::error::{Error, Result};
use crate::mechanisms::{Database, Mechanism};
use crate::ptlr::{estimate_curve, find_eta_star, gap_profile, EtaGrid, GapPoint, DEFAULT_H};
use crate::rng::SeedKey;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const INTERCEPT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "Violation")]
    Violation,
    #[serde(rename = "No Violation")]
    NoViolation,
}

impl Verdict {
    pub fn is_violation(self) -> bool {
        self == Verdict::Violation
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Violation => "Violation",
            Verdict::NoViolation => "No Violation",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditParams {
    pub n1: usize,
    pub n2: usize,
    pub gamma: f64,
    pub h: f64,
    pub grid: EtaGrid,
    pub seed: u64,
}

impl AuditParams {
    /// Default perturbation and threshold grid, seed 0.
    pub fn new(n1: usize, n2: usize, gamma: f64) -> Self {
        AuditParams { n1, n2, gamma, h: DEFAULT_H, grid: EtaGrid::default(), seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_grid(mut self, grid: EtaGrid) -> Self {
        self.grid = grid;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub mechanism: String,
    pub n1: usize,
    pub n2: usize,
    pub gamma: f64,
    pub h: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_steps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub claim: String,
    pub eta_star: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub width: f64,
    pub i_star: f64,
    pub verdict: Verdict,
    pub params: ReportParams,
    pub gap_profile: Vec<GapPoint>,
}

impl AuditReport {
    pub fn point(&self) -> TradeoffPointEstimate {
        TradeoffPointEstimate {
            eta: self.eta_star,
            alpha_tilde: self.alpha_tilde,
            beta_tilde: self.beta_tilde,
            n2: self.params.n2,
            gamma: self.params.gamma,
            width: self.width,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Smallest `i` with `claim(i) = level`; 0 when `level ≥ claim(0)` and 1 when
/// `level ≤ claim(1)`.
pub fn intercept(claim: &TradeoffCurve, level: f64) -> f64 {
    claim.inverse(level, INTERCEPT_TOL)
}

fn verdict_from_intercept(i_star: f64, point: &TradeoffPointEstimate) -> Verdict {
    if i_star > point.alpha_tilde + point.width {
        Verdict::Violation
    } else {
        Verdict::NoViolation
    }
}

/// Violation iff the upper-right corner of the square lies strictly below the
/// claim.
pub fn verdict_from_square(point: &TradeoffPointEstimate, claim: &TradeoffCurve) -> Verdict {
    let right = point.alpha_tilde + point.width;
    let top = point.beta_tilde + point.width;
    if right < 1.0 && top < claim.eval(right) {
        Verdict::Violation
    } else {
        Verdict::NoViolation
    }
}

/// Audits `mech` on `(d, d2)` against a parsed claim.
pub fn audit(mech: &Mechanism, d: &Database, d2: &Database, claim: &ClaimSpec, params: &AuditParams) -> Result<AuditReport> {
    let curve = claim.resolve()?;
    audit_curve(mech, d, d2, &curve, &claim.to_string(), params)
}

/// Audits against an arbitrary curve; `label` is echoed in the report.
pub fn audit_curve(
    mech: &Mechanism,
    d: &Database,
    d2: &Database,
    claim: &TradeoffCurve,
    label: &str,
    params: &AuditParams,
) -> Result<AuditReport> {
    if !(params.gamma > 0.0 && params.gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", params.gamma)));
    }
    let key = SeedKey::new(params.seed);
    let est = estimate_curve(mech, d, d2, params.n1, &params.grid, params.h, key.child("ptlr"))?;
    let eta_star = find_eta_star(claim, &est);
    let point = baybox_estimate(mech, d, d2, eta_star, params.n2, params.gamma, key.child("baybox"))?;
    let i_star = intercept(claim, point.beta_tilde + point.width);
    let thresholds = params.grid.thresholds();

    Ok(AuditReport {
        claim: label.to_string(),
        eta_star,
        alpha_tilde: point.alpha_tilde,
        beta_tilde: point.beta_tilde,
        width: point.width,
        i_star,
        verdict: verdict_from_intercept(i_star, &point),
        params: ReportParams {
            mechanism: mech.to_string(),
            n1: params.n1,
            n2: params.n2,
            gamma: params.gamma,
            h: params.h,
            eta_min: thresholds[0],
            eta_max: thresholds[thresholds.len() - 1],
            eta_steps: thresholds.len(),
            seed: params.seed,
        },
        gap_profile: gap_profile(claim, &est),
    })
}

/// The verdict rule applied to an existing point estimate.
pub fn decide(point: &TradeoffPointEstimate, claim: &TradeoffCurve) -> (f64, Verdict) {
    let i_star = intercept(claim, point.beta_tilde + point.width);
    (i_star, verdict_from_intercept(i_star, point))
}
