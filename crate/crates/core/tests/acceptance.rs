//! Acceptance suite: one PASS/FAIL line per criterion.

use fdp::analytic::{f_eps_delta, lr_gauss_errors, optimal_delta_gauss, tradeoff_gauss, tradeoff_laplace};
use fdp::baybox::{
    baybox_estimate, baybox_estimate_with, confidence_width, default_k, knn_train, training_set, Classifier,
    FixedRule, KnnModel, Observation, ThresholdRule,
};
use fdp::density::NormalDensity;
use fdp::harness::{run_audit_sweep, uniform_errors, RunConfig, Sweep, SweepParam};
use fdp::ptlr::{curve_from_densities, uniform_error, EtaGrid};
use fdp::stats::normal_cdf;
use fdp::{ClaimSpec, Database, GaussParams, Mechanism, SeedKey, TradeoffCurve};
use rand::Rng;
use rayon::prelude::*;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn gauss() -> Mechanism {
    Mechanism::Gaussian(GaussParams::new(1.0).unwrap())
}

fn neighbors() -> (Database, Database) {
    Database::neighbors(10).unwrap()
}

fn oracle_identities() -> Outcome {
    let phi = normal_cdf(-0.5);
    let fixed = (tradeoff_gauss(phi, 1.0) - phi).abs();

    let e = std::f64::consts::E;
    let first = |a: f64| 1.0 - e * a;
    let middle = |a: f64| 1.0 / (4.0 * e * a);
    let last = |a: f64| (1.0 - a) / e;
    let b1 = 0.5 / e;
    let cont = [
        (tradeoff_laplace(b1) - first(b1)).abs(),
        (tradeoff_laplace(b1) - middle(b1)).abs(),
        (tradeoff_laplace(0.5) - middle(0.5)).abs(),
        (tradeoff_laplace(0.5) - last(0.5)).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let on_curve = [0.5, 1.0, 2.0]
        .iter()
        .map(|&eta| {
            let (a, b) = lr_gauss_errors(eta, 1.0);
            (tradeoff_gauss(a, 1.0) - b).abs()
        })
        .fold(0.0, f64::max);

    let delta = optimal_delta_gauss(1.0, 1.0);
    let gap = (0..=100_000)
        .map(|i| i as f64 / 100_000.0)
        .map(|a| tradeoff_gauss(a, 1.0) - f_eps_delta(a, 1.0, delta))
        .fold(0.0, f64::max);

    outcome(
        fixed < 1e-12 && cont < 1e-12 && on_curve < 1e-12 && gap > 0.01,
        format!("fixed point {fixed:.1e}, Laplace continuity {cont:.1e}, LR points {on_curve:.1e}, eps-delta gap {gap:.4}"),
    )
}

fn lemma_one() -> Outcome {
    let p = NormalDensity { mean: 0.0, sd: 1.0 };
    let q = NormalDensity { mean: 1.0, sd: 1.0 };
    let oracle = TradeoffCurve::Gauss { mu: 1.0 };
    let errs: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&h| uniform_error(&curve_from_densities(&p, &q, &EtaGrid::default(), h).unwrap(), &oracle))
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    outcome(decreasing && errs[3] < 5e-3, format!("sup distances {}", sci(&errs)))
}

fn consistency() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for mech in [gauss(), Mechanism::Laplace(GaussParams::new(1.0).unwrap())] {
        let mut cfg = RunConfig::new(mech.clone());
        cfg.repetitions = 100;
        cfg.seed = 2024;
        let mut mses = Vec::new();
        let mut good = 0;
        for n1 in [1_000, 10_000, 100_000] {
            let errs = uniform_errors(&cfg, n1).unwrap();
            mses.push(errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64);
            if n1 == 100_000 {
                good = errs.iter().filter(|&&e| e < 0.05).count();
            }
        }
        let ok = mses.windows(2).all(|w| w[1] < w[0]) && mses[1] < 0.01 && good >= 95;
        pass &= ok;
        detail.push(format!("{}: mse {}, err(1e5) < 0.05 in {good}/100", mech.id(), sci(&mses)));
    }
    outcome(pass, detail.join("; "))
}

fn coverage() -> Outcome {
    let (d, d2) = neighbors();
    let (a, b) = lr_gauss_errors(1.0, 1.0);
    let covered = (0..200u64)
        .into_par_iter()
        .filter(|&i| {
            let e = baybox_estimate(&gauss(), &d, &d2, 1.0, 100_000, 0.1, SeedKey::new(77).index(i)).unwrap();
            (e.alpha_tilde - a).abs() <= e.width && (e.beta_tilde - b).abs() <= e.width
        })
        .count();
    outcome(covered >= 170, format!("square covers the true point in {covered}/200 runs"))
}

fn hoeffding() -> Outcome {
    let (d, d2) = neighbors();
    let (a, _) = lr_gauss_errors(1.0, 1.0);
    let n = 100_000;
    let gamma: f64 = 0.1;
    let bound = ((2.0 / gamma).ln() / (2.0 * n as f64)).sqrt();
    // Bayes rule of the Gaussian pair at threshold 1: reject when x ≥ 1/2
    let rule = FixedRule(ThresholdRule { cut: 0.5 });
    let within = (0..200u64)
        .into_par_iter()
        .filter(|&i| {
            let e = baybox_estimate_with(&rule, &gauss(), &d, &d2, 1.0, n, gamma, SeedKey::new(88).index(i)).unwrap();
            (e.alpha_tilde - a).abs() <= bound
        })
        .count();
    outcome(within >= 180, format!("|alpha - alpha(eta)| <= {bound:.5} in {within}/200 runs"))
}

fn false_alarms() -> Outcome {
    let mut cfg = RunConfig::new(gauss());
    cfg.repetitions = 100;
    cfg.n1 = 10_000;
    cfg.gamma = 0.1;
    cfg.seed = 606;
    let sweep = Sweep { param: SweepParam::N2, values: vec![1e5] };
    let rows = run_audit_sweep(&cfg, &ClaimSpec::Gauss { mu: 1.0 }, &sweep).unwrap();
    let v = rows[0].violations;
    outcome(v <= 18, format!("{v}/100 false violations"))
}

fn power() -> Outcome {
    let mut cfg = RunConfig::new(gauss());
    cfg.repetitions = 20;
    cfg.n1 = 10_000;
    cfg.gamma = 0.05;
    cfg.seed = 707;
    let sweep = Sweep { param: SweepParam::N2, values: vec![1e4, 1e5, 1e6] };
    let rows = run_audit_sweep(&cfg, &ClaimSpec::Gauss { mu: 0.2 }, &sweep).unwrap();
    let counts: Vec<usize> = rows.iter().map(|r| r.violations).collect();
    let monotone = counts.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        counts[2] >= 19 && monotone,
        format!("violations at n2 = 1e4, 1e5, 1e6: {counts:?} of 20"),
    )
}

fn knn_brute_force() -> Outcome {
    let (d, d2) = neighbors();
    let train = training_set(&gauss(), &d, &d2, 0.5, 5_000, SeedKey::new(8));
    let model: KnnModel = knn_train(&train).unwrap();
    let k = default_k(train.len());
    let reals: Vec<(f64, u8)> = train
        .iter()
        .filter_map(|s| match s.obs {
            Observation::Value(v) => Some((v, s.label)),
            Observation::Bottom => None,
        })
        .collect();
    let mut rng = SeedKey::new(9).stream(0);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let t: f64 = rng.random_range(-4.0..5.0);
        let mut by_dist = reals.clone();
        by_dist.sort_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()).then(a.0.total_cmp(&b.0)));
        let ones = by_dist[..k].iter().filter(|x| x.1 == 1).count();
        if model.classify(t) != u8::from(2 * ones > k) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over 1000 queries (k = {k})"))
}

fn width() -> Outcome {
    let w = confidence_width(0.05, 1_000_000, 1).unwrap();
    let w4 = confidence_width(0.05, 4_000_000, 1).unwrap();
    outcome(
        (w - 0.0725).abs() <= 0.0005 && w4 == w / 2.0,
        format!("w = {w:.7}, w(4n) * 2 - w = {:.1e}", 2.0 * w4 - w),
    )
}

fn reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_fdp");
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["estimate", "--mech", "gauss:sigma=1", "--n1", "20000", "--seed", "7"],
        &["audit", "--mech", "gauss:sigma=1", "--claim", "gauss:mu=0.5", "--n1", "10000", "--n2", "100000", "--seed", "7"],
        &["mse", "--mech", "laplace:sigma=1", "--n1-grid", "1000,5000", "--reps", "4", "--seed", "7"],
        &["sweep", "--mech", "gauss:sigma=1", "--claim", "gauss:mu=0.2", "--n1", "5000", "--sweep", "n2=10000,100000", "--seed", "7"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|rep| {
                let out = dir.path().join(format!("{}-{rep}", args[0]));
                run_cli(bin, args, &out);
                std::fs::read(&out).unwrap()
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            "estimate, audit, mse and sweep outputs byte-identical across two executions".into()
        } else {
            format!("outputs differ for {differing:?}")
        },
    )
}

fn run_cli(bin: &str, args: &[&str], out: &Path) {
    let status = Command::new(bin).args(args).arg("--out").arg(out).status().unwrap();
    assert!(status.success(), "fdp {args:?} failed");
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle identities", oracle_identities),
        ("PTLR exact-density convergence", lemma_one),
        ("estimation consistency", consistency),
        ("BayBox coverage", coverage),
        ("Bayes-rule Hoeffding bound", hoeffding),
        ("auditor false-alarm control", false_alarms),
        ("auditor power", power),
        ("k-NN vs brute force", knn_brute_force),
        ("confidence-width arithmetic", width),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
