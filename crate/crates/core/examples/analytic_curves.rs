//! Exact trade-off curves of the reference mechanisms.

use fdp::analytic::{
    f_eps_delta, optimal_delta_gauss, symmetrize, tradeoff_gauss, tradeoff_laplace, tradeoff_subsampled, SgdCurve,
};
use fdp::{SgdParams, TradeoffCurve};

fn main() -> fdp::Result<()> {
    let sgd = SgdCurve::new(&SgdParams::reference(), 10)?;
    let raw = tradeoff_subsampled(TradeoffCurve::Gauss { mu: 1.0 }, 5, 10)?;
    let sym = symmetrize(&raw);
    let delta = optimal_delta_gauss(1.0, 1.0);

    println!("{:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}", "alpha", "gauss", "laplace", "dpsgd", "sub-raw", "sub-sym", "f(1,d)");
    for i in 0..=10 {
        let a = i as f64 / 10.0;
        println!(
            "{a:>6.2} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}",
            tradeoff_gauss(a, 1.0),
            tradeoff_laplace(a),
            sgd.eval(a),
            raw.eval(a),
            sym.eval(a),
            f_eps_delta(a, 1.0, delta)
        );
    }
    println!("delta(eps = 1) for mu = 1: {delta:.6}");
    Ok(())
}
