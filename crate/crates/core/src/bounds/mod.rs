//! Absorbing balls, squeezing constants and explicit dimension bounds.

mod absorbing;
mod certificate;
mod optimize;
mod verify;

pub use absorbing::{absorbing_set, absorption_time, eventual_ball, AbsorbingSet, BallKind};
pub use certificate::{
    dimension_bound, general_bound, rfde_corollary_bound, rrd_corollary_bound, squeezing_certificate, Application,
    ConstantProvenance, DichotomyInputs, DimensionBoundReport, FormulaId, Provenance, SqueezingCertificate,
    SqueezingConstants,
};
pub use optimize::{optimize_alpha, optimize_alpha_on_grid, optimize_alpha_with, AlphaOptimum};
pub use verify::{
    check_absorption, check_invariance, verify_squeezing, verify_squeezing_with, AbsorptionCheck, InvarianceCheck,
    SqueezeRecord, SqueezeVerification, VerifyOptions,
};
