//! Pointwise min/max band of repeated curve estimates.

use fdp::harness::{run_envelope, RunConfig};
use fdp::{GaussParams, Mechanism};

fn main() -> fdp::Result<()> {
    let mut cfg = RunConfig::new(Mechanism::Gaussian(GaussParams::new(1.0)?));
    cfg.n1 = 10_000;
    cfg.repetitions = 20;
    let band = run_envelope(&cfg)?;
    for r in band.rows.iter().step_by(100) {
        println!("alpha {:.2}: [{:.4}, {:.4}] exact {:.4}", r.alpha, r.lower, r.upper, r.oracle);
    }
    println!("max band width: {:.4}", band.max_width());
    Ok(())
}
