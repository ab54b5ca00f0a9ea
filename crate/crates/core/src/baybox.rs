//! Single trade-off point estimation through a Bayes classification problem.
//!
//! Mixing one hypothesis with an isolated symbol `⊥` moves the Bayes decision
//! boundary of the fair-coin problem to the level set `q/p = η`. A k-NN
//! classifier trained on draws from that problem is then evaluated on fresh
//! samples of both hypotheses, giving Monte-Carlo estimates of the type-I and
//! type-II errors of the likelihood-ratio test at `η`.

use crate::error::{Error, Result};
use crate::mechanisms::{Database, Mechanism};
use crate::rng::SeedKey;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MIN_N2: usize = 10_000;
pub const MIN_TRAINING: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observation {
    Value(f64),
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledSample {
    pub obs: Observation,
    pub label: u8,
}

/// Draws from `M(P, η)`: a base sample with probability `1/η`, else `⊥`.
pub fn sample_mixture<R, F>(base: F, eta: f64, rng: &mut R) -> Result<Observation>
where
    R: Rng + ?Sized,
    F: FnOnce(&mut R) -> f64,
{
    if eta.is_nan() || eta < 1.0 {
        return Err(Error::invalid(format!("mixture weight needs eta >= 1, got {eta}")));
    }
    Ok(mixture_draw(base, 1.0 / eta, rng))
}

fn mixture_draw<R, F>(base: F, keep: f64, rng: &mut R) -> Observation
where
    R: Rng + ?Sized,
    F: FnOnce(&mut R) -> f64,
{
    if rng.random::<f64>() < keep {
        Observation::Value(base(rng))
    } else {
        Observation::Bottom
    }
}

/// Binary decision rule on mechanism outputs; label 1 means "drawn from `Q`".
pub trait Classifier: Sync {
    fn classify(&self, x: f64) -> u8;
}

/// Builds a classifier from labelled training data.
pub trait Trainer {
    type Model: Classifier;
    fn train(&self, samples: &[LabeledSample]) -> Result<Self::Model>;
}

/// k-nearest-neighbour majority vote on the real line. `⊥` is at distance 0
/// from itself and infinitely far from every real value.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnModel {
    values: Vec<f64>,
    ones_before: Vec<u32>,
    bottom: [usize; 2],
    k: usize,
}

/// `⌊√n⌋`, raised to the next odd number when even.
pub fn default_k(n: usize) -> usize {
    let k = (n as f64).sqrt().floor() as usize;
    let k = if k * k > n { k - 1 } else { k };
    if k % 2 == 0 {
        k + 1
    } else {
        k
    }
}

pub fn knn_train(samples: &[LabeledSample]) -> Result<KnnModel> {
    if samples.len() < MIN_TRAINING {
        return Err(Error::invalid(format!(
            "k-NN needs at least {MIN_TRAINING} training points, got {}",
            samples.len()
        )));
    }
    KnnModel::with_k(samples, default_k(samples.len()))
}

impl KnnModel {
    pub fn with_k(samples: &[LabeledSample], k: usize) -> Result<Self> {
        if k == 0 || k > samples.len() {
            return Err(Error::invalid(format!("k = {k} is not in 1..={}", samples.len())));
        }
        if samples.iter().any(|s| s.label > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        if !(samples.iter().any(|s| s.label == 0) && samples.iter().any(|s| s.label == 1)) {
            return Err(Error::invalid("training set must contain both labels"));
        }
        let mut bottom = [0usize; 2];
        let mut reals = Vec::with_capacity(samples.len());
        for s in samples {
            match s.obs {
                Observation::Value(v) if v.is_finite() => reals.push((v, s.label)),
                Observation::Value(v) => return Err(Error::invalid(format!("training value {v} is not finite"))),
                Observation::Bottom => bottom[s.label as usize] += 1,
            }
        }
        reals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut ones_before = Vec::with_capacity(reals.len() + 1);
        let mut acc = 0u32;
        ones_before.push(0);
        for &(_, l) in &reals {
            acc += l as u32;
            ones_before.push(acc);
        }
        Ok(KnnModel { values: reals.into_iter().map(|x| x.0).collect(), ones_before, bottom, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn vote(&self, ones: usize, total: usize) -> u8 {
        u8::from(2 * ones > total)
    }

    /// Start of the `k` nearest sorted values to `t`; among equidistant
    /// candidates the smaller value wins.
    fn window(&self, t: f64, k: usize) -> usize {
        let a = &self.values;
        // moving right is better while the next value is strictly closer than the first
        let last = a.len() - k;
        let (mut lo, mut hi) = (0usize, last);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if t - a[mid] > a[mid + k] - t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn classify_obs(&self, obs: Observation) -> u8 {
        match obs {
            Observation::Value(t) => self.classify(t),
            Observation::Bottom => {
                let [zeros, ones] = self.bottom;
                if zeros + ones == 0 {
                    let ones = self.ones_before[self.values.len()] as usize;
                    self.vote(ones, self.values.len())
                } else {
                    self.vote(ones, zeros + ones)
                }
            }
        }
    }
}

impl Classifier for KnnModel {
    fn classify(&self, t: f64) -> u8 {
        let n = self.values.len();
        if n >= self.k {
            let i = self.window(t, self.k);
            let ones = (self.ones_before[i + self.k] - self.ones_before[i]) as usize;
            return self.vote(ones, self.k);
        }
        // all reals plus the remaining neighbours taken from ⊥, label 0 first
        let extra = self.k - n;
        let zeros_used = extra.min(self.bottom[0]);
        let ones = self.ones_before[n] as usize + (extra - zeros_used);
        self.vote(ones, self.k)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct KnnTrainer;

impl Trainer for KnnTrainer {
    type Model = KnnModel;
    fn train(&self, samples: &[LabeledSample]) -> Result<KnnModel> {
        knn_train(samples)
    }
}

/// A classifier that ignores training data.
#[derive(Clone, Debug)]
pub struct FixedRule<C>(pub C);

impl<C: Classifier + Clone> Trainer for FixedRule<C> {
    type Model = C;
    fn train(&self, _: &[LabeledSample]) -> Result<C> {
        Ok(self.0.clone())
    }
}

/// Threshold rule `1{x ≥ c}`, the Bayes rule for a location family with
/// increasing likelihood ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRule {
    pub cut: f64,
}

impl Classifier for ThresholdRule {
    fn classify(&self, x: f64) -> u8 {
        u8::from(x >= self.cut)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPointEstimate {
    pub eta: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub n2: usize,
    pub gamma: f64,
    pub width: f64,
}

/// Half-width of the confidence square,
/// `√(ln(4/γ)/(2n)) + 12·√(2c²·ln(4/γ)/n)` with `c = 2` on the real line.
pub fn confidence_width(gamma: f64, n: usize, d: usize) -> Result<f64> {
    if d != 1 {
        return Err(Error::invalid(format!("only one-dimensional outputs are supported, got d = {d}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let c = 2.0f64;
    let l = (4.0 / gamma).ln();
    let n = n as f64;
    Ok((l / (2.0 * n)).sqrt() + 12.0 * (2.0 * c * c * l / n).sqrt())
}

/// Draws the labelled training set of the classification problem whose Bayes
/// rule rejects exactly when `q/p > η`.
pub fn training_set(
    mech: &Mechanism,
    d: &Database,
    d2: &Database,
    eta: f64,
    n: usize,
    key: SeedKey,
) -> Vec<LabeledSample> {
    // η ≤ 1 thins P with keep probability η; otherwise Q with 1/η
    let (keep0, keep1) = if eta <= 1.0 { (eta, 1.0) } else { (1.0, 1.0 / eta) };
    key.fill(n, |r| {
        let label = u8::from(r.random::<bool>());
        let (db, keep) = if label == 0 { (d, keep0) } else { (d2, keep1) };
        let obs = if keep >= 1.0 {
            Observation::Value(mech.sample_scalar(db, r))
        } else {
            mixture_draw(|r| mech.sample_scalar(db, r), keep, r)
        };
        LabeledSample { obs, label }
    })
}

pub fn baybox_estimate(
    mech: &Mechanism,
    d: &Database,
    d2: &Database,
    eta: f64,
    n2: usize,
    gamma: f64,
    key: SeedKey,
) -> Result<TradeoffPointEstimate> {
    baybox_estimate_with(&KnnTrainer, mech, d, d2, eta, n2, gamma, key)
}

/// [`baybox_estimate`] with any classifier in place of k-NN.
#[allow(clippy::too_many_arguments)]
pub fn baybox_estimate_with<T: Trainer>(
    trainer: &T,
    mech: &Mechanism,
    d: &Database,
    d2: &Database,
    eta: f64,
    n2: usize,
    gamma: f64,
    key: SeedKey,
) -> Result<TradeoffPointEstimate> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if n2 < MIN_N2 {
        return Err(Error::invalid(format!("n2 must be at least {MIN_N2}, got {n2}")));
    }
    let width = confidence_width(gamma, n2, 1)?;
    mech.validate(d)?;
    mech.validate(d2)?;

    let train = training_set(mech, d, d2, eta, n2, key.child("train"));
    let model = trainer.train(&train)?;
    drop(train);

    let xs = mech.sample_many(d, n2, key.child("eval-p"));
    let cnt_alpha = xs.par_iter().filter(|&&x| model.classify(x) == 1).count();
    drop(xs);
    let ys = mech.sample_many(d2, n2, key.child("eval-q"));
    let cnt_beta = ys.par_iter().filter(|&&y| model.classify(y) == 1).count();

    Ok(TradeoffPointEstimate {
        eta,
        alpha_tilde: cnt_alpha as f64 / n2 as f64,
        beta_tilde: 1.0 - cnt_beta as f64 / n2 as f64,
        n2,
        gamma,
        width,
    })
}
