//! Closed-form trade-off curves and the sampled-curve representation.
//!
//! A trade-off curve maps a type-I error `α ∈ [0, 1]` to the smallest type-II
//! error achievable at that level. The closed forms below are exact for the
//! reference mechanisms on the neighbouring pair `D = (0, …, 0)`,
//! `D' = (1, 0, …, 0)` and serve as ground truth for estimation error and as
//! claims for the auditor.

pub(crate) mod claim;
mod symmetrize;

pub use claim::ClaimSpec;
pub use symmetrize::{lower_convex_hull, symmetrize, symmetrize_on};

use crate::error::{Error, Result};
use crate::mechanisms::SgdParams;
use crate::stats::{normal_cdf, normal_quantile, normal_sf};

/// Knots used when a closed-form curve is sampled onto a grid.
pub const DEFAULT_KNOTS: usize = 10_000;

/// Largest iteration count for which the DP-SGD curve is enumerated exactly.
pub const MAX_SGD_ITERATIONS: usize = 20;

/// `Φ(Φ⁻¹(1 − α) − μ)`, the curve of `N(0, 1)` against `N(μ, 1)`.
pub fn tradeoff_gauss(alpha: f64, mu: f64) -> f64 {
    if alpha <= 0.0 {
        return 1.0;
    }
    if alpha >= 1.0 {
        return 0.0;
    }
    // Φ⁻¹(1 − α) = −Φ⁻¹(α) avoids rounding 1 − α for tiny α
    normal_sf(normal_quantile(alpha) + mu)
}

/// Laplace mechanism with unit sensitivity and scale 1.
pub fn tradeoff_laplace(alpha: f64) -> f64 {
    tradeoff_laplace_eps(alpha, 1.0)
}

/// Curve of `Lap(0, 1)` against `Lap(ε, 1)`; equivalently noise scale `1/ε`.
pub fn tradeoff_laplace_eps(alpha: f64, eps: f64) -> f64 {
    let alpha = alpha.clamp(0.0, 1.0);
    let e_neg = (-eps).exp();
    if alpha < 0.5 * e_neg {
        1.0 - alpha / e_neg
    } else if alpha <= 0.5 {
        e_neg / (4.0 * alpha)
    } else {
        e_neg * (1.0 - alpha)
    }
}

/// `max{0, 1 − δ − e^ε α, e^{−ε}(1 − δ − α)}`.
pub fn f_eps_delta(alpha: f64, eps: f64, delta: f64) -> f64 {
    let a = 1.0 - delta - eps.exp() * alpha;
    let b = (-eps).exp() * (1.0 - delta - alpha);
    a.max(b).max(0.0)
}

/// Smallest δ for which the Gaussian mechanism with sensitivity `Δ` (unit
/// noise) is (ε, δ)-DP: `Φ(Δ/2 − ε/Δ) − e^ε Φ(−Δ/2 − ε/Δ)`.
pub fn optimal_delta_gauss(eps: f64, sensitivity: f64) -> f64 {
    let half = 0.5 * sensitivity;
    let shift = eps / sensitivity;
    let second = normal_cdf(-half - shift);
    let value = normal_cdf(half - shift) - if second > 0.0 { eps.exp() * second } else { 0.0 };
    value.max(0.0)
}

/// Errors of the likelihood-ratio test "reject if q/p > η" for `P = N(0, 1)`
/// and `Q = N(μ, 1)`.
pub fn lr_gauss_errors(eta: f64, mu: f64) -> (f64, f64) {
    if eta <= 0.0 {
        return (1.0, 0.0);
    }
    if eta == f64::INFINITY {
        return (0.0, 1.0);
    }
    let cut = eta.ln() / mu + 0.5 * mu;
    (normal_sf(cut), normal_cdf(cut - mu))
}

/// Mixture representation of the DP-SGD curve: `Σ_I w_I Φ(Φ⁻¹(1 − α) − μ_I/σ̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SgdCurve {
    shifts: Vec<f64>,
    weights: Vec<f64>,
}

impl SgdCurve {
    /// Enumerates every inclusion pattern `I ⊂ {1, …, τ}` of record 1 in the
    /// batches. Each step includes the record with probability `m/r`, which
    /// is ½ for the reference setting.
    pub fn new(p: &SgdParams, r: usize) -> Result<Self> {
        if p.tau > MAX_SGD_ITERATIONS {
            return Err(Error::invalid(format!(
                "exact DP-SGD curve needs 2^τ terms; τ = {} exceeds the cap of {MAX_SGD_ITERATIONS}",
                p.tau
            )));
        }
        if p.m >= r {
            return Err(Error::invalid(format!("batch size {} must be below r = {r}", p.m)));
        }
        let sigma_bar = p.output_variance().sqrt();
        let incl = p.m as f64 / r as f64;
        let step_shift: Vec<f64> = (1..=p.tau)
            .map(|t| p.rho * (1.0 - p.rho).powi((p.tau - t) as i32) / p.m as f64 / sigma_bar)
            .collect();
        let n = 1usize << p.tau;
        let mut shifts = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mask in 0..n {
            let mut shift = 0.0;
            let mut weight = 1.0;
            for (t, s) in step_shift.iter().enumerate() {
                if mask & (1 << t) != 0 {
                    shift += s;
                    weight *= incl;
                } else {
                    weight *= 1.0 - incl;
                }
            }
            shifts.push(shift);
            weights.push(weight);
        }
        Ok(SgdCurve { shifts, weights })
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return 1.0;
        }
        if alpha >= 1.0 {
            return 0.0;
        }
        let z = normal_quantile(alpha);
        self.shifts
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * normal_sf(z + s))
            .sum()
    }
}

/// DP-SGD curve for the neighbouring pair with `r` records.
pub fn tradeoff_sgd(alpha: f64, p: &SgdParams, r: usize) -> Result<f64> {
    Ok(SgdCurve::new(p, r)?.eval(alpha))
}

/// A trade-off curve on a grid of strictly increasing `α` knots with linear
/// interpolation in between and constant extension outside the knot range.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCurve {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    raw: bool,
}

impl SampledCurve {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::invalid("curve needs matching, non-empty alpha and beta columns"));
        }
        if alpha.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("alpha knots must be strictly increasing"));
        }
        if alpha.iter().chain(&beta).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("curve values must lie in [0, 1]"));
        }
        Ok(SampledCurve { alpha, beta, raw: false })
    }

    /// Builds a curve from arbitrary `(α, β)` points: sorts by `α` and keeps
    /// the smallest `β` among points sharing an `α`. Values are clamped to
    /// `[0, 1]`.
    pub fn from_points(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points
            .into_iter()
            .map(|(a, b)| (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0)))
            .collect();
        if pts.iter().any(|(a, b)| a.is_nan() || b.is_nan()) {
            return Err(Error::invalid("curve points must not be NaN"));
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        pts.dedup_by(|later, first| later.0 == first.0);
        let (alpha, beta) = pts.into_iter().unzip();
        SampledCurve::new(alpha, beta)
    }

    /// Marks the curve as an unconvexified estimate.
    pub fn into_raw(mut self) -> Self {
        self.raw = true;
        self
    }

    pub fn is_raw(&self) -> bool {
        self.raw
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn eval(&self, a: f64) -> f64 {
        let n = self.alpha.len();
        if a <= self.alpha[0] {
            return self.beta[0];
        }
        if a >= self.alpha[n - 1] {
            return self.beta[n - 1];
        }
        let i = self.alpha.partition_point(|&x| x <= a);
        let (a0, a1) = (self.alpha[i - 1], self.alpha[i]);
        let (b0, b1) = (self.beta[i - 1], self.beta[i]);
        b0 + (b1 - b0) * (a - a0) / (a1 - a0)
    }
}

/// A trade-off curve, either closed-form or sampled.
#[derive(Clone, Debug, PartialEq)]
pub enum TradeoffCurve {
    Gauss { mu: f64 },
    Laplace { eps: f64 },
    Sgd(SgdCurve),
    /// `(m/r)·T(α) + ((r − m)/r)·(1 − α)`, not symmetrised.
    Subsampled { base: Box<TradeoffCurve>, m: usize, r: usize },
    EpsDelta { eps: f64, delta: f64 },
    Sampled(SampledCurve),
}

impl TradeoffCurve {
    pub fn eval(&self, alpha: f64) -> f64 {
        match self {
            TradeoffCurve::Gauss { mu } => tradeoff_gauss(alpha, *mu),
            TradeoffCurve::Laplace { eps } => tradeoff_laplace_eps(alpha, *eps),
            TradeoffCurve::Sgd(c) => c.eval(alpha),
            TradeoffCurve::Subsampled { base, m, r } => {
                let a = alpha.clamp(0.0, 1.0);
                let w = *m as f64 / *r as f64;
                w * base.eval(a) + (1.0 - w) * (1.0 - a)
            }
            TradeoffCurve::EpsDelta { eps, delta } => f_eps_delta(alpha.clamp(0.0, 1.0), *eps, *delta),
            TradeoffCurve::Sampled(c) => c.eval(alpha),
        }
    }

    /// Samples the curve on `knots` uniform points of `[0, 1]`; a sampled
    /// curve is returned as is.
    pub fn to_sampled(&self, knots: usize) -> SampledCurve {
        if let TradeoffCurve::Sampled(c) = self {
            return c.clone();
        }
        let knots = knots.max(2);
        let alpha: Vec<f64> = (0..knots).map(|i| i as f64 / (knots - 1) as f64).collect();
        let beta = alpha.iter().map(|&a| self.eval(a).clamp(0.0, 1.0)).collect();
        SampledCurve { alpha, beta, raw: false }
    }

    /// Smallest `α` with `T(α) ≤ level`, by bisection to `tol`. The returned
    /// value is the left end of the final bracket, so it never overshoots the
    /// solution. Returns 0 if `level ≥ T(0)` and 1 if `level ≤ T(1)`.
    pub fn inverse(&self, level: f64, tol: f64) -> f64 {
        if level >= self.eval(0.0) {
            return 0.0;
        }
        if level <= self.eval(1.0) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) <= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }
}

/// Curve of a subsampled mechanism: `(m/r)·T + ((r − m)/r)·(1 − α)`.
pub fn tradeoff_subsampled(base: TradeoffCurve, m: usize, r: usize) -> Result<TradeoffCurve> {
    if m == 0 || m > r {
        return Err(Error::invalid(format!("need 1 <= m <= r, got m = {m}, r = {r}")));
    }
    Ok(TradeoffCurve::Subsampled { base: Box::new(base), m, r })
}
