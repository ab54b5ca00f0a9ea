//! Estimates the trade-off curve of a mechanism and compares it with the exact one.
//!
//!     cargo run --release --example estimate_curve -- "dpsgd:sigma=0.2" 100000

use fdp::harness::oracle_curve;
use fdp::ptlr::{estimate_curve, uniform_error, EtaGrid, DEFAULT_H};
use fdp::{Database, Mechanism, SeedKey};

fn main() -> fdp::Result<()> {
    let mut args = std::env::args().skip(1);
    let mech = Mechanism::parse(&args.next().unwrap_or_else(|| "gauss:sigma=1".into()))?;
    let n1: usize = args.next().map_or(100_000, |s| s.parse().expect("n1 must be an integer"));

    let (d, d2) = Database::neighbors(10)?;
    let est = estimate_curve(&mech, &d, &d2, n1, &EtaGrid::default(), DEFAULT_H, SeedKey::new(1))?;
    let oracle = oracle_curve(&mech, d.len())?;

    println!("{mech}, n1 = {n1}");
    println!("{:>8} {:>10} {:>10} {:>10}", "eta", "alpha", "beta", "exact");
    for p in est.points().iter().step_by(100) {
        println!("{:>8.3} {:>10.5} {:>10.5} {:>10.5}", p.eta, p.alpha, p.beta, oracle.eval(p.alpha));
    }
    println!("uniform error: {:.4}", uniform_error(&est, &oracle));
    Ok(())
}
