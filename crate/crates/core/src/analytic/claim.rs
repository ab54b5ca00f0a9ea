//! Claimed privacy curves given as short strings, e.g. `gauss:mu=0.5`.

use std::fmt;
use std::path::{Path, PathBuf};

use super::{symmetrize, tradeoff_subsampled, SampledCurve, SgdCurve, TradeoffCurve};
use crate::error::{Error, Result};
use crate::mechanisms::{SgdParams, DEFAULT_RECORDS};

#[derive(Clone, Debug, PartialEq)]
pub enum ClaimSpec {
    Gauss { mu: f64 },
    Laplace { sigma: f64 },
    Sgd { params: SgdParams, r: usize },
    /// Symmetrised curve of the subsampled `inner` claim.
    Subsample { inner: Box<ClaimSpec>, m: usize, r: usize },
    EpsDelta { eps: f64, delta: f64 },
    File(PathBuf),
}

/// Splits `kind:key=value,key=value` into its kind and key/value pairs.
/// Commas inside parentheses do not separate pairs, and a value wrapped in
/// one pair of parentheses is unwrapped.
pub(crate) fn split_spec(input: &str) -> Result<(String, Vec<(String, String)>)> {
    let input = input.trim();
    let (kind, rest) = match input.split_once(':') {
        Some((k, r)) => (k.trim().to_ascii_lowercase(), r),
        None => (input.to_ascii_lowercase(), ""),
    };
    let mut pairs = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = rest.as_bytes();
    for i in 0..=bytes.len() {
        let at_end = i == bytes.len();
        if !at_end {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                _ => {}
            }
            if depth < 0 {
                return Err(Error::parse(input, "unbalanced parentheses"));
            }
        }
        if at_end || (bytes[i] == b',' && depth == 0) {
            let token = rest[start..i].trim();
            start = i + 1;
            if token.is_empty() {
                continue;
            }
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::parse(input, format!("expected key=value, got `{token}`")))?;
            let v = v.trim();
            let v = v
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .unwrap_or(v);
            pairs.push((k.trim().to_ascii_lowercase(), v.to_string()));
        }
    }
    if depth != 0 {
        return Err(Error::parse(input, "unbalanced parentheses"));
    }
    Ok((kind, pairs))
}

/// Typed access to parsed key/value pairs.
pub(crate) struct Params<'a> {
    input: &'a str,
    pairs: Vec<(String, String)>,
}

impl<'a> Params<'a> {
    pub(crate) fn new(input: &'a str, pairs: Vec<(String, String)>) -> Self {
        Params { input, pairs }
    }

    pub(crate) fn raw(&self, key: &str) -> Option<&str> {
        self.pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub(crate) fn f64_or(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::parse(self.input, format!("`{key}` is not a number: `{v}`"))),
            None => default.ok_or_else(|| Error::parse(self.input, format!("missing `{key}`"))),
        }
    }

    pub(crate) fn usize_or(&self, key: &str, default: Option<usize>) -> Result<usize> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::parse(self.input, format!("`{key}` is not an integer: `{v}`"))),
            None => default.ok_or_else(|| Error::parse(self.input, format!("missing `{key}`"))),
        }
    }

    pub(crate) fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(Error::parse(self.input, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Reattaches the loose tokens of an unparenthesised `inner=` value, e.g.
/// `inner=sgd:sigma=0.2,rho=0.2,...,m=5,r=10`: the last `m` and `r` belong to
/// the outer spec and everything else after `inner` to the inner one.
pub(crate) fn regroup_inner(pairs: Vec<(String, String)>) -> Vec<(String, String)> {
    let Some(pos) = pairs.iter().position(|(k, _)| k == "inner") else {
        return pairs;
    };
    let last_m = pairs.iter().rposition(|(k, _)| k == "m");
    let last_r = pairs.iter().rposition(|(k, _)| k == "r");
    let mut inner = pairs[pos].1.clone();
    let mut outer = Vec::new();
    for (i, (k, v)) in pairs.into_iter().enumerate() {
        if i == pos {
            continue;
        }
        if i > pos && Some(i) != last_m && Some(i) != last_r {
            // `inner=gauss,mu=1` means `gauss:mu=1`
            inner.push(if inner.contains(':') { ',' } else { ':' });
            inner.push_str(&k);
            inner.push('=');
            inner.push_str(&v);
        } else {
            outer.push((k, v));
        }
    }
    outer.push(("inner".into(), inner));
    outer
}

fn positive(input: &str, name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(input, format!("`{name}` must be positive")))
    }
}

impl ClaimSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let trimmed = input.trim();
        if let Some(path) = trimmed.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::parse(input, "missing path"));
            }
            return Ok(ClaimSpec::File(PathBuf::from(path)));
        }
        let (kind, pairs) = split_spec(trimmed)?;
        match kind.as_str() {
            "gauss" => {
                let p = Params::new(input, pairs);
                p.reject_unknown(&["mu"])?;
                let mu = p.f64_or("mu", None)?;
                if !(mu >= 0.0 && mu.is_finite()) {
                    return Err(Error::parse(input, "`mu` must be non-negative"));
                }
                Ok(ClaimSpec::Gauss { mu })
            }
            "laplace" => {
                let p = Params::new(input, pairs);
                p.reject_unknown(&["sigma"])?;
                let sigma = positive(input, "sigma", p.f64_or("sigma", Some(1.0))?)?;
                Ok(ClaimSpec::Laplace { sigma })
            }
            "sgd" | "dpsgd" => {
                let p = Params::new(input, pairs);
                p.reject_unknown(&["sigma", "rho", "tau", "m", "r", "theta0"])?;
                let params = SgdParams::new(
                    p.f64_or("sigma", None)?,
                    p.f64_or("rho", None)?,
                    p.usize_or("tau", None)?,
                    p.usize_or("m", None)?,
                    p.f64_or("theta0", Some(0.0))?,
                )
                .map_err(|e| Error::parse(input, e.to_string()))?;
                let r = p.usize_or("r", Some(DEFAULT_RECORDS))?;
                if params.m() >= r {
                    return Err(Error::parse(input, "batch size must be below r"));
                }
                Ok(ClaimSpec::Sgd { params, r })
            }
            "subsample" => {
                let p = Params::new(input, regroup_inner(pairs));
                p.reject_unknown(&["inner", "m", "r"])?;
                let inner = ClaimSpec::parse(p.raw("inner").unwrap_or("gauss:mu=1"))?;
                let m = p.usize_or("m", None)?;
                let r = p.usize_or("r", Some(DEFAULT_RECORDS))?;
                if m == 0 || m > r {
                    return Err(Error::parse(input, "need 1 <= m <= r"));
                }
                Ok(ClaimSpec::Subsample { inner: Box::new(inner), m, r })
            }
            "epsdelta" | "eps-delta" => {
                let p = Params::new(input, pairs);
                p.reject_unknown(&["eps", "delta"])?;
                let eps = p.f64_or("eps", None)?;
                let delta = p.f64_or("delta", Some(0.0))?;
                if !(eps >= 0.0 && eps.is_finite()) || !(0.0..=1.0).contains(&delta) {
                    return Err(Error::parse(input, "need eps >= 0 and delta in [0, 1]"));
                }
                Ok(ClaimSpec::EpsDelta { eps, delta })
            }
            other => Err(Error::parse(input, format!("unknown claim kind `{other}`"))),
        }
    }

    pub fn resolve(&self) -> Result<TradeoffCurve> {
        Ok(match self {
            ClaimSpec::Gauss { mu } => TradeoffCurve::Gauss { mu: *mu },
            ClaimSpec::Laplace { sigma } => TradeoffCurve::Laplace { eps: 1.0 / sigma },
            ClaimSpec::Sgd { params, r } => TradeoffCurve::Sgd(SgdCurve::new(params, *r)?),
            ClaimSpec::Subsample { inner, m, r } => {
                let raw = tradeoff_subsampled(inner.resolve()?, *m, *r)?;
                TradeoffCurve::Sampled(symmetrize(&raw))
            }
            ClaimSpec::EpsDelta { eps, delta } => TradeoffCurve::EpsDelta { eps: *eps, delta: *delta },
            ClaimSpec::File(path) => TradeoffCurve::Sampled(read_curve_file(path)?),
        })
    }
}

impl fmt::Display for ClaimSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClaimSpec::Gauss { mu } => write!(f, "gauss:mu={mu}"),
            ClaimSpec::Laplace { sigma } => write!(f, "laplace:sigma={sigma}"),
            ClaimSpec::Sgd { params: p, r } => write!(
                f,
                "sgd:sigma={},rho={},tau={},m={},r={r}",
                p.sigma(),
                p.rho(),
                p.tau(),
                p.m()
            ),
            ClaimSpec::Subsample { inner, m, r } => write!(f, "subsample:inner=({inner}),m={m},r={r}"),
            ClaimSpec::EpsDelta { eps, delta } => write!(f, "epsdelta:eps={eps},delta={delta}"),
            ClaimSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl std::str::FromStr for ClaimSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClaimSpec::parse(s)
    }
}

/// Reads `alpha,beta` rows; a header row is optional.
pub fn read_curve_file(path: &Path) -> Result<SampledCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::parse(path.display().to_string(), format!("row {} has fewer than 2 columns", i + 1)));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(a), Ok(b)) => points.push((a, b)),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::parse(path.display().to_string(), format!("row {} is not numeric", i + 1)))
            }
        }
    }
    SampledCurve::from_points(points)
}
