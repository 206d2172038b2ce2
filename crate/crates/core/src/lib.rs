//! Explicit fractal-dimension bounds for exponential attractors of retarded
//! functional differential equations and retarded reaction-diffusion
//! equations, together with the numerical machinery used to validate every
//! ingredient: method-of-steps integration, characteristic roots and
//! spectral projections, squeezing constants, ball coverings and
//! box-counting.

pub mod bounds;
pub mod config;
pub mod covering;
pub mod dde;
pub mod error;
pub mod pipeline;
pub mod rds;
pub mod sampling;
pub mod spectral;

pub use error::{Error, FailureKind, Result};
