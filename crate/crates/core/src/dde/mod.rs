//! Delay models, history segments and the method-of-steps solution
//! semigroup `Phi(t) phi = u_t^phi`.

mod integrator;
mod model;
mod nonlinearity;
mod segment;

pub use integrator::{integrate, segment_at, semigroup_apply, steps_per_delay, Trajectory};
pub use model::{DelayCoefficient, DelayCoefficientKind, DelayModel};
pub use nonlinearity::{Builtin, NonlinearTerm, Nonlinearity, SineGalerkin};
pub use segment::{HistorySegment, NormKind, DEFAULT_INTERPOLATION_ORDER};
