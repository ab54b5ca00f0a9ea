//! Mean squared uniform error of the curve estimator as n1 grows.

use fdp::harness::{run_mse_experiment, write_csv, RunConfig};
use fdp::{GaussParams, Mechanism};

fn main() -> fdp::Result<()> {
    let mut cfg = RunConfig::new(Mechanism::Laplace(GaussParams::new(1.0)?));
    cfg.n1_grid = vec![1_000, 10_000, 100_000];
    cfg.repetitions = 10;
    cfg.seed = 7;
    write_csv(&run_mse_experiment(&cfg)?, std::io::stdout())
}
