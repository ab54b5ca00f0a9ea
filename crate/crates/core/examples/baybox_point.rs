//! Estimates single trade-off points with the k-NN classifier and shows the
//! confidence square next to the exact value.

use fdp::analytic::lr_gauss_errors;
use fdp::{baybox_estimate, Database, GaussParams, Mechanism, SeedKey};

fn main() -> fdp::Result<()> {
    let mech = Mechanism::Gaussian(GaussParams::new(1.0)?);
    let (d, d2) = Database::neighbors(10)?;
    for (i, eta) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
        let e = baybox_estimate(&mech, &d, &d2, eta, 1_000_000, 0.05, SeedKey::new(3).index(i as u64))?;
        let (a, b) = lr_gauss_errors(eta, 1.0);
        println!(
            "eta = {eta:<4} estimate ({:.4}, {:.4}) ± {:.4}   exact ({a:.4}, {b:.4})",
            e.alpha_tilde, e.beta_tilde, e.width
        );
    }
    Ok(())
}
