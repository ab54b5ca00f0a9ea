//! Kernel density estimate of mechanism outputs with the plug-in bandwidth.

use fdp::density::{BandwidthRule, Density, DensityEstimate};
use fdp::stats::normal_pdf;
use fdp::{Database, GaussParams, Mechanism, SeedKey};

fn main() -> fdp::Result<()> {
    let mech = Mechanism::Gaussian(GaussParams::new(1.0)?);
    let (d, _) = Database::neighbors(10)?;
    let xs = mech.sample_many(&d, 100_000, SeedKey::new(5));

    let kde = DensityEstimate::fit(&xs, BandwidthRule::PlugIn)?;
    let silverman = DensityEstimate::fit(&xs, BandwidthRule::Silverman)?;
    println!("bandwidth: plug-in {:.4}, Silverman {:.4}", kde.bandwidth(), silverman.bandwidth());
    for t in [-3.0, -1.5, 0.0, 1.5, 3.0] {
        println!("p({t:>4}) = {:.5}  exact {:.5}", kde.pdf(t), normal_pdf(t));
    }
    Ok(())
}
