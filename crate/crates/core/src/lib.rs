//! Black-box estimation and auditing of f-differential-privacy trade-off curves.
//!
//! The crate is organised around the two tasks it solves:
//!
//! * **Estimation** ([`ptlr`]): sample a mechanism on two neighbouring databases,
//!   fit kernel density estimates ([`density`]) and run a perturbed
//!   likelihood-ratio test for every threshold on a grid. The resulting
//!   type-I/type-II pairs trace the whole trade-off curve.
//! * **Auditing** ([`auditor`]): locate the threshold where a claimed curve is
//!   most likely to be violated, estimate that single trade-off point with a
//!   k-NN Bayes classifier and a confidence square ([`baybox`]) and decide
//!   whether the square lies strictly below the claim.
//!
//! [`mechanisms`] provides the four reference mechanisms (Gaussian, Laplace,
//! subsampled Gaussian, DP-SGD) and [`analytic`] their exact trade-off curves.
//! [`harness`] drives repeated experiments and the file formats used by the
//! `fdp` command line tool.

pub mod analytic;
pub mod auditor;
pub mod baybox;
pub mod density;
pub mod error;
pub mod harness;
pub mod mechanisms;
pub mod ptlr;
pub mod rng;
pub mod stats;

pub use analytic::{ClaimSpec, SampledCurve, TradeoffCurve};
pub use auditor::{audit, AuditParams, AuditReport, Verdict};
pub use baybox::{baybox_estimate, confidence_width, TradeoffPointEstimate};
pub use density::{fit_kde, select_bandwidth, Density, DensityEstimate};
pub use error::{Error, Result};
pub use mechanisms::{Database, GaussParams, Mechanism, SgdParams};
pub use ptlr::{estimate_curve, CurveEstimate, EtaGrid};
pub use rng::SeedKey;
