//! Audits a Gaussian mechanism (mu = 1) against a correct and an overstated claim.

use fdp::auditor::{audit, AuditParams};
use fdp::{ClaimSpec, Database, GaussParams, Mechanism};

fn main() -> fdp::Result<()> {
    let mech = Mechanism::Gaussian(GaussParams::new(1.0)?);
    let (d, d2) = Database::neighbors(10)?;
    let params = AuditParams::new(10_000, 1_000_000, 0.05).with_seed(7);

    for claim in ["gauss:mu=1", "gauss:mu=0.2"] {
        let report = audit(&mech, &d, &d2, &ClaimSpec::parse(claim)?, &params)?;
        println!(
            "claim {claim:<14} eta* = {:.3}  square = ({:.4}, {:.4}) ± {:.4}  i* = {:.4}  -> {}",
            report.eta_star, report.alpha_tilde, report.beta_tilde, report.width, report.i_star, report.verdict
        );
    }
    Ok(())
}
