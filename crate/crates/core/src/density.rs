//! Gaussian kernel density estimation for scalar samples.

use crate::error::{Error, Result};
use crate::stats::normal_pdf;
use std::f64::consts::PI;

/// Kernel sums ignore centres more than this many bandwidths beyond the
/// nearest one; the neglected mass is below `n·e^{−50}` relative.
pub const WINDOW_BANDWIDTHS: f64 = 10.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A probability density on the real line.
pub trait Density: Sync {
    fn pdf(&self, t: f64) -> f64;

    fn ln_pdf(&self, t: f64) -> f64 {
        self.pdf(t).ln()
    }

    /// An interval outside of which the density is negligible.
    fn support(&self) -> (f64, f64);

    /// Values at `lo + j·step` for `j = 0..n`.
    fn tabulate(&self, lo: f64, step: f64, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.pdf(lo + j as f64 * step)).collect()
    }
}

/// Exact normal density, used as an oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalDensity {
    pub mean: f64,
    pub sd: f64,
}

impl Density for NormalDensity {
    fn pdf(&self, t: f64) -> f64 {
        normal_pdf((t - self.mean) / self.sd) / self.sd
    }

    fn ln_pdf(&self, t: f64) -> f64 {
        let z = (t - self.mean) / self.sd;
        -0.5 * z * z - (self.sd * crate::stats::sqrt_2pi()).ln()
    }

    fn support(&self) -> (f64, f64) {
        (self.mean - 12.0 * self.sd, self.mean + 12.0 * self.sd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BandwidthRule {
    /// Two-stage direct plug-in (Sheather–Jones type) on binned data.
    #[default]
    PlugIn,
    /// `1.06 · min(sd, IQR/1.349) · n^{−1/5}`.
    Silverman,
}

struct Spread {
    mean: f64,
    scale: f64,
}

fn spread(sorted: &[f64]) -> Result<Spread> {
    let n = sorted.len();
    if n < 2 {
        return Err(Error::invalid("bandwidth selection needs at least two samples"));
    }
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 || sorted[0] == sorted[n - 1] {
        return Err(Error::ZeroSpread);
    }
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let scale = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    Ok(Spread { mean, scale })
}

// linear interpolation between order statistics
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn select_bandwidth(samples: &[f64]) -> Result<f64> {
    select_bandwidth_with(samples, BandwidthRule::PlugIn)
}

pub fn select_bandwidth_with(samples: &[f64], rule: BandwidthRule) -> Result<f64> {
    let sorted = sorted_copy(samples);
    bandwidth_sorted(&sorted, rule)
}

fn bandwidth_sorted(sorted: &[f64], rule: BandwidthRule) -> Result<f64> {
    let s = spread(sorted)?;
    let n = sorted.len() as f64;
    let silverman = 1.06 * s.scale * n.powf(-0.2);
    match rule {
        BandwidthRule::Silverman => Ok(silverman),
        BandwidthRule::PlugIn => Ok(plug_in(sorted, &s).map_or(silverman, |h| h * s.scale)),
    }
}

const BINS: usize = 2048;

// Hermite polynomials He_4 and He_6
fn he4(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 - 6.0 * x2 + 3.0
}

fn he6(x: f64) -> f64 {
    let x2 = x * x;
    ((x2 - 15.0) * x2 + 45.0) * x2 - 15.0
}

/// Binned estimate of `ψ_r = ∫ f^{(r)} f` with pilot bandwidth `g`.
fn psi_binned(counts: &[f64], delta: f64, n: f64, g: f64, order: u32) -> f64 {
    let he = if order == 4 { he4 } else { he6 };
    let lmax = ((15.0 * g / delta).ceil() as usize).min(counts.len() - 1);
    let mut total = 0.0;
    for lag in 0..=lmax {
        let u = lag as f64 * delta / g;
        let kappa = he(u) * normal_pdf(u);
        let inner: f64 = counts[..counts.len() - lag]
            .iter()
            .zip(&counts[lag..])
            .map(|(a, b)| a * b)
            .sum();
        total += if lag == 0 { kappa * inner } else { 2.0 * kappa * inner };
    }
    total / (n * n * g.powi(order as i32 + 1))
}

/// Bandwidth for the standardised sample, or `None` when a functional
/// estimate has the wrong sign.
fn plug_in(sorted: &[f64], s: &Spread) -> Option<f64> {
    let n = sorted.len() as f64;
    let lo = (sorted[0] - s.mean) / s.scale;
    let hi = (sorted[sorted.len() - 1] - s.mean) / s.scale;
    let delta = (hi - lo) / (BINS - 1) as f64;
    let mut counts = vec![0.0; BINS];
    for &x in sorted {
        let pos = ((x - s.mean) / s.scale - lo) / delta;
        let j = (pos.floor() as usize).min(BINS - 2);
        let frac = pos - j as f64;
        counts[j] += 1.0 - frac;
        counts[j + 1] += frac;
    }

    let sqrt_pi = PI.sqrt();
    let psi8 = 105.0 / (32.0 * sqrt_pi);
    let g6 = (30.0 * INV_SQRT_2PI / (psi8 * n)).powf(1.0 / 9.0);
    let psi6 = psi_binned(&counts, delta, n, g6, 6);
    if psi6.is_nan() || psi6 >= 0.0 {
        return None;
    }
    let g4 = (6.0 * INV_SQRT_2PI / (-psi6 * n)).powf(1.0 / 7.0);
    let psi4 = psi_binned(&counts, delta, n, g4, 4);
    if !(psi4 > 0.0 && psi4.is_finite()) {
        return None;
    }
    Some((1.0 / (2.0 * sqrt_pi * psi4 * n)).powf(0.2))
}

/// Gaussian KDE `p̂(t) = (1/(n·b)) Σ φ((t − Xᵢ)/b)` over sorted centres.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    centers: Vec<f64>,
    bandwidth: f64,
    norm: f64,
}

pub fn fit_kde(samples: &[f64], b: f64) -> Result<DensityEstimate> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {b}")));
    }
    if samples.is_empty() {
        return Err(Error::invalid("cannot fit a density to zero samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let centers = sorted_copy(samples);
    let norm = INV_SQRT_2PI / (centers.len() as f64 * b);
    Ok(DensityEstimate { centers, bandwidth: b, norm })
}

pub fn eval_density(d: &DensityEstimate, t: f64) -> f64 {
    d.pdf(t)
}

impl DensityEstimate {
    /// Selects the bandwidth with `rule` and fits.
    pub fn fit(samples: &[f64], rule: BandwidthRule) -> Result<Self> {
        let sorted = sorted_copy(samples);
        let b = bandwidth_sorted(&sorted, rule)?;
        let norm = INV_SQRT_2PI / (sorted.len() as f64 * b);
        Ok(DensityEstimate { centers: sorted, bandwidth: b, norm })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Distance to the nearest centre and `Σ exp(−(dᵢ² − d₀²)/(2b²))` over
    /// centres within `d₀ + 10b`.
    fn relative_kernel_sum(&self, t: f64) -> (f64, f64) {
        let c = &self.centers;
        let b = self.bandwidth;
        let idx = c.partition_point(|&x| x < t);
        let d0 = match (idx.checked_sub(1).map(|i| t - c[i]), c.get(idx).map(|x| x - t)) {
            (Some(l), Some(r)) => l.min(r),
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("estimate has at least one centre"),
        };
        let reach = d0 + WINDOW_BANDWIDTHS * b;
        let from = c.partition_point(|&x| x < t - reach);
        let to = c.partition_point(|&x| x <= t + reach);
        let inv = 0.5 / (b * b);
        let sum = c[from..to]
            .iter()
            .map(|x| {
                let d = t - x;
                (-(d * d - d0 * d0) * inv).exp()
            })
            .sum();
        (d0, sum)
    }
}

impl Density for DensityEstimate {
    fn pdf(&self, t: f64) -> f64 {
        let (d0, sum) = self.relative_kernel_sum(t);
        let b = self.bandwidth;
        self.norm * (-0.5 * (d0 / b) * (d0 / b)).exp() * sum
    }

    /// `ln p̂(t)`, finite even where `p̂(t)` underflows.
    fn ln_pdf(&self, t: f64) -> f64 {
        let (d0, sum) = self.relative_kernel_sum(t);
        let b = self.bandwidth;
        self.norm.ln() - 0.5 * (d0 / b) * (d0 / b) + sum.ln()
    }

    fn support(&self) -> (f64, f64) {
        let pad = WINDOW_BANDWIDTHS * self.bandwidth;
        (self.centers[0] - pad, self.centers[self.centers.len() - 1] + pad)
    }

    /// Scatters every centre onto the nodes within `10b`. Along the grid the
    /// kernel `exp(−(kΔ − f)²/2b²)` factors into `A(f) · G_k · E(f)^k`, so
    /// each node costs two multiplications instead of an exponential. Nodes
    /// whose windowed sum is tiny are recomputed pointwise, which also covers
    /// nodes farther than `10b` from every centre.
    fn tabulate(&self, lo: f64, step: f64, n: usize) -> Vec<f64> {
        let b = self.bandwidth;
        if n == 0 {
            return Vec::new();
        }
        if step.is_nan() || step <= 0.0 {
            return (0..n).map(|j| self.pdf(lo + j as f64 * step)).collect();
        }
        let inv2b2 = 0.5 / (b * b);
        let w = (WINDOW_BANDWIDTHS * b / step).ceil() as usize;
        let gauss_k: Vec<f64> = (0..=w)
            .map(|k| {
                let d = k as f64 * step;
                (-d * d * inv2b2).exp()
            })
            .collect();

        let mut sums = vec![0.0f64; n];
        let last = n as i64 - 1;
        for &x in &self.centers {
            let j0 = ((x - lo) / step).round() as i64;
            let f = x - (lo + j0 as f64 * step);
            let amp = (-f * f * inv2b2).exp();
            let ratio = (step * f * 2.0 * inv2b2).exp();
            let inv_ratio = 1.0 / ratio;

            // nodes j0 + k, k = 0..=w
            let k_lo = (-j0).max(0);
            let k_hi = (last - j0).min(w as i64);
            if k_lo <= k_hi {
                let mut pw = ratio.powi(k_lo as i32);
                let start = (j0 + k_lo) as usize;
                let len = (k_hi - k_lo + 1) as usize;
                let out = &mut sums[start..start + len];
                let g = &gauss_k[k_lo as usize..k_lo as usize + len];
                for (o, gk) in out.iter_mut().zip(g) {
                    *o += amp * gk * pw;
                    pw *= ratio;
                }
            }
            // nodes j0 − k, k = 1..=w
            let k_lo = (j0 - last).max(1);
            let k_hi = j0.min(w as i64);
            if k_lo <= k_hi {
                let mut pw = inv_ratio.powi(k_lo as i32);
                for k in k_lo..=k_hi {
                    sums[(j0 - k) as usize] += amp * gauss_k[k as usize] * pw;
                    pw *= inv_ratio;
                }
            }
        }

        let floor = (-10.0f64).exp();
        sums.iter()
            .enumerate()
            .map(|(j, &s)| {
                if s < floor {
                    self.pdf(lo + j as f64 * step)
                } else {
                    self.norm * s
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedKey;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        SeedKey::new(seed).fill(n, |r| StandardNormal.sample(r))
    }

    #[test]
    fn plug_in_bandwidth_on_normal_draws() {
        let xs = normals(100_000, 1);
        let b = select_bandwidth(&xs).unwrap();
        assert!((0.05..=0.25).contains(&b), "b = {b}");
        let silverman = select_bandwidth_with(&xs, BandwidthRule::Silverman).unwrap();
        assert!((silverman - 0.106).abs() < 0.005);
    }

    #[test]
    fn bandwidth_is_scale_equivariant() {
        let xs = normals(5_000, 2);
        let doubled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let (b1, b2) = (select_bandwidth(&xs).unwrap(), select_bandwidth(&doubled).unwrap());
        assert!((b2 / b1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_edge_cases() {
        assert!(select_bandwidth(&[0.0, 1.0]).unwrap() > 0.0);
        assert!(matches!(select_bandwidth(&[3.0; 10]), Err(Error::ZeroSpread)));
        assert!(select_bandwidth(&[1.0]).is_err());
    }

    #[test]
    fn kde_examples() {
        let single = fit_kde(&[0.0], 1.0).unwrap();
        assert!((eval_density(&single, 0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);

        let sym = fit_kde(&[-1.0, 1.0], 1.0).unwrap();
        for x in [0.3, 0.7, 2.0] {
            assert!((sym.pdf(x) - sym.pdf(-x)).abs() < 1e-15);
        }

        let pair = fit_kde(&[0.0, 1.0], 1.0).unwrap();
        assert!((pair.pdf(0.5) - 0.352_065_326_764_299_5).abs() < 1e-12);
        assert_eq!(pair.pdf(0.123), pair.pdf(0.123));
        assert!(fit_kde(&[0.0], 0.0).is_err());
    }

    #[test]
    fn far_tail_is_tiny_but_log_finite() {
        let d = fit_kde(&normals(1_000, 3), 0.2).unwrap();
        let t = d.centers()[d.len() - 1] + 100.0 * d.bandwidth();
        assert!(d.pdf(t) < 1e-30);
        assert!(d.ln_pdf(t).is_finite());
        assert!(d.ln_pdf(t) < -4000.0);
    }

    #[test]
    fn kde_converges_to_normal_density() {
        let d = DensityEstimate::fit(&normals(1_000_000, 4), BandwidthRule::PlugIn).unwrap();
        let vals = d.tabulate(-4.0, 0.01, 801);
        let err = vals
            .iter()
            .enumerate()
            .map(|(j, v)| (v - normal_pdf(-4.0 + j as f64 * 0.01)).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "sup error {err}");
    }

    #[test]
    fn integrates_to_one() {
        let d = DensityEstimate::fit(&normals(2_000, 5), BandwidthRule::PlugIn).unwrap();
        let b = d.bandwidth();
        let (lo, hi) = (d.centers()[0] - 10.0 * b, d.centers()[d.len() - 1] + 10.0 * b);
        let n = 10_000;
        let step = (hi - lo) / (n - 1) as f64;
        let vals = d.tabulate(lo, step, n);
        let integral = step * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n - 1]));
        assert!((0.999..=1.001).contains(&integral), "integral {integral}");
    }

    #[test]
    fn tabulate_matches_pointwise() {
        let xs: Vec<f64> = normals(3_000, 6).into_iter().map(|x| x * 1.5 + 0.2).collect();
        let d = fit_kde(&xs, 0.07).unwrap();
        // grid wider than the data so the tail fallback is exercised
        let (lo, step, n) = (-12.0, 0.0031, 8_000);
        let grid = d.tabulate(lo, step, n);
        for (j, g) in grid.iter().enumerate() {
            let p = d.pdf(lo + j as f64 * step);
            assert!((g - p).abs() <= 1e-9 * p, "node {j}: {g} vs {p}");
        }
    }
}
