//! Perturbed likelihood-ratio estimation of a whole trade-off curve.
//!
//! For densities `p`, `q` the test rejecting when `q(X)/p(X) > η + hU`, with
//! `U` uniform on `[−½, ½]`, has errors
//!
//! ```text
//! α_h(η) = ∫ p(t) · clamp((q(t)/p(t) − η)/h + ½, 0, 1) dt
//! β_h(η) = ∫ q(t) · (1 − clamp((q(t)/p(t) − η)/h + ½, 0, 1)) dt
//! ```
//!
//! Both integrals are piecewise linear in the ratio, so after tabulating the
//! densities once and sorting the quadrature nodes by ratio every threshold
//! costs two binary searches.

use crate::analytic::{lower_convex_hull, SampledCurve, TradeoffCurve};
use crate::density::{BandwidthRule, Density, DensityEstimate};
use crate::error::{Error, Result};
use crate::mechanisms::{Database, Mechanism};
use crate::rng::SeedKey;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const DEFAULT_H: f64 = 0.1;
pub const QUADRATURE_NODES: usize = 20_000;
pub const MIN_N1: usize = 100;

/// Strictly increasing positive thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaGrid {
    thresholds: Vec<f64>,
}

impl EtaGrid {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::invalid("threshold grid is empty"));
        }
        if thresholds.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("thresholds must be positive and finite"));
        }
        if thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("thresholds must be strictly increasing"));
        }
        Ok(EtaGrid { thresholds })
    }

    /// `steps` equidistant values in `(0, max]`.
    pub fn uniform(max: f64, steps: usize) -> Result<Self> {
        if !(max > 0.0 && max.is_finite()) || steps == 0 {
            return Err(Error::invalid(format!("need eta-max > 0 and eta-steps >= 1, got {max} and {steps}")));
        }
        EtaGrid::new((1..=steps).map(|i| max * i as f64 / steps as f64).collect())
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

impl Default for EtaGrid {
    fn default() -> Self {
        EtaGrid::uniform(15.0, 1000).expect("default grid is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Error pairs of the perturbed test along a threshold grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveEstimate {
    points: Vec<CurvePoint>,
}

impl CurveEstimate {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("curve estimate has no points"));
        }
        if points
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.alpha) || !(0.0..=1.0).contains(&p.beta) || p.eta.is_nan())
        {
            return Err(Error::invalid("curve points must have alpha and beta in [0, 1]"));
        }
        Ok(CurveEstimate { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn view_points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.alpha, p.beta)).collect();
        pts.push((0.0, 1.0));
        pts.push((1.0, 0.0));
        pts
    }

    /// Interpolated view keyed by `α̂`, anchored at `(0, 1)` and `(1, 0)`.
    pub fn curve(&self) -> SampledCurve {
        SampledCurve::from_points(self.view_points())
            .expect("estimate points lie in the unit square")
            .into_raw()
    }

    /// Lower convex envelope of the view.
    pub fn convexified(&self) -> SampledCurve {
        SampledCurve::from_points(lower_convex_hull(&self.view_points())).expect("hull lies in the unit square")
    }

    /// CSV with header `eta,alpha,beta`, numbers in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eta", "alpha", "beta"])?;
        for p in &self.points {
            w.write_record([p.eta.to_string(), p.alpha.to_string(), p.beta.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let points = r.deserialize().collect::<std::result::Result<Vec<CurvePoint>, _>>()?;
        CurveEstimate::new(points)
    }
}

/// Both densities tabulated on a common trapezoid grid, with nodes sorted by
/// likelihood ratio and prefix sums for the piecewise-linear error integrals.
pub struct RatioTable {
    ratio: Vec<f64>,
    cum_p: Vec<f64>,
    cum_pr: Vec<f64>,
    cum_q: Vec<f64>,
    cum_qr: Vec<f64>,
}

const NEGLIGIBLE: f64 = 1e-300;

impl RatioTable {
    /// Tabulates over the union of both supports.
    pub fn new<P: Density, Q: Density>(p: &P, q: &Q) -> Self {
        let (pl, ph) = p.support();
        let (ql, qh) = q.support();
        let (lo, hi) = (pl.min(ql), ph.max(qh));
        let n = QUADRATURE_NODES;
        let step = (hi - lo) / (n - 1) as f64;
        let (pv, qv) = rayon::join(|| p.tabulate(lo, step, n), || q.tabulate(lo, step, n));

        let mut nodes: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
        for j in 0..n {
            let (pj, qj) = (pv[j], qv[j]);
            if pj < NEGLIGIBLE && qj < NEGLIGIBLE {
                continue;
            }
            let ratio = if pj.min(qj) < 1e-250 {
                let t = lo + j as f64 * step;
                (q.ln_pdf(t) - p.ln_pdf(t)).exp()
            } else {
                qj / pj
            };
            let w = if j == 0 || j == n - 1 { 0.5 * step } else { step };
            nodes.push((ratio, w * pj, w * qj));
        }
        Self::from_masses(nodes)
    }

    /// From `(ratio, p-mass, q-mass)` triples; masses are normalised to one.
    pub fn from_masses(mut nodes: Vec<(f64, f64, f64)>) -> Self {
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tp: f64 = nodes.iter().map(|x| x.1).sum();
        let tq: f64 = nodes.iter().map(|x| x.2).sum();
        let len = nodes.len() + 1;
        let (mut cum_p, mut cum_pr, mut cum_q, mut cum_qr) =
            (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        let (mut sp, mut spr, mut sq, mut sqr) = (0.0, 0.0, 0.0, 0.0);
        for v in [&mut cum_p, &mut cum_pr, &mut cum_q, &mut cum_qr] {
            v.push(0.0);
        }
        for &(r, a, b) in &nodes {
            let (a, b) = (a / tp, b / tq);
            sp += a;
            sq += b;
            // only prefixes ending below a finite threshold are ever used
            spr += a * r;
            sqr += b * r;
            cum_p.push(sp);
            cum_pr.push(spr);
            cum_q.push(sq);
            cum_qr.push(sqr);
        }
        RatioTable { ratio: nodes.into_iter().map(|x| x.0).collect(), cum_p, cum_pr, cum_q, cum_qr }
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratio
    }

    /// `(α_h(η), β_h(η))`.
    pub fn errors(&self, eta: f64, h: f64) -> (f64, f64) {
        let lo = self.ratio.partition_point(|&r| r <= eta - 0.5 * h);
        let hi = self.ratio.partition_point(|&r| r <= eta + 0.5 * h);
        let n = self.ratio.len();
        let (p_win, q_win) = (self.cum_p[hi] - self.cum_p[lo], self.cum_q[hi] - self.cum_q[lo]);
        let (pr_win, qr_win) = (self.cum_pr[hi] - self.cum_pr[lo], self.cum_qr[hi] - self.cum_qr[lo]);
        let alpha = (self.cum_p[n] - self.cum_p[hi]) + pr_win / h + (0.5 - eta / h) * p_win;
        let beta = self.cum_q[lo] + (0.5 + eta / h) * q_win - qr_win / h;
        (alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0))
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("perturbation h must be positive, got {h}")))
    }
}

/// One point of the perturbed test.
pub fn ptlr_point<P: Density, Q: Density>(p: &P, q: &Q, eta: f64, h: f64) -> Result<(f64, f64)> {
    check_h(h)?;
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::invalid(format!("threshold must be non-negative, got {eta}")));
    }
    Ok(RatioTable::new(p, q).errors(eta, h))
}

/// Runs the perturbed test on every grid threshold for given densities.
pub fn curve_from_densities<P: Density, Q: Density>(p: &P, q: &Q, grid: &EtaGrid, h: f64) -> Result<CurveEstimate> {
    check_h(h)?;
    let table = RatioTable::new(p, q);
    let points = grid
        .thresholds()
        .iter()
        .map(|&eta| {
            let (alpha, beta) = table.errors(eta, h);
            CurvePoint { eta, alpha, beta }
        })
        .collect();
    CurveEstimate::new(points)
}

/// Samples `n1` outputs on each database, fits plug-in KDEs and runs the
/// perturbed test along `grid`.
pub fn estimate_curve(
    mech: &Mechanism,
    d: &Database,
    d2: &Database,
    n1: usize,
    grid: &EtaGrid,
    h: f64,
    key: SeedKey,
) -> Result<CurveEstimate> {
    let (p, q) = fit_pair(mech, d, d2, n1, key)?;
    curve_from_densities(&p, &q, grid, h)
}

/// The two density estimates behind [`estimate_curve`].
pub fn fit_pair(
    mech: &Mechanism,
    d: &Database,
    d2: &Database,
    n1: usize,
    key: SeedKey,
) -> Result<(DensityEstimate, DensityEstimate)> {
    if n1 < MIN_N1 {
        return Err(Error::invalid(format!("n1 must be at least {MIN_N1}, got {n1}")));
    }
    mech.validate(d)?;
    mech.validate(d2)?;
    let xs = mech.sample_many(d, n1, key.child("p"));
    let ys = mech.sample_many(d2, n1, key.child("q"));
    let (p, q) = rayon::join(
        || DensityEstimate::fit(&xs, BandwidthRule::PlugIn),
        || DensityEstimate::fit(&ys, BandwidthRule::PlugIn),
    );
    Ok((p?, q?))
}

/// `max |β̂ − T(α̂)|` over the grid points, together with the endpoints.
pub fn uniform_error(est: &CurveEstimate, oracle: &TradeoffCurve) -> f64 {
    let view = est.curve();
    let ends = [0.0, 1.0].map(|a| (view.eval(a) - oracle.eval(a)).abs());
    est.points
        .iter()
        .map(|p| (p.beta - oracle.eval(p.alpha)).abs())
        .chain(ends)
        .fold(0.0, f64::max)
}

/// `claim(α̂) − β̂` at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub eta: f64,
    pub alpha: f64,
    pub claim_beta: f64,
    pub est_beta: f64,
}

impl GapPoint {
    pub fn gap(&self) -> f64 {
        self.claim_beta - self.est_beta
    }
}

pub fn gap_profile(claim: &TradeoffCurve, est: &CurveEstimate) -> Vec<GapPoint> {
    est.points
        .iter()
        .map(|p| GapPoint { eta: p.eta, alpha: p.alpha, claim_beta: claim.eval(p.alpha), est_beta: p.beta })
        .collect()
}

/// Grid threshold maximising `claim(α̂) − β̂`; ties go to the smallest `η`.
pub fn find_eta_star(claim: &TradeoffCurve, est: &CurveEstimate) -> f64 {
    let mut best = (f64::NEG_INFINITY, est.points[0].eta);
    for g in gap_profile(claim, est) {
        if g.gap() > best.0 {
            best = (g.gap(), g.eta);
        }
    }
    best.1
}
