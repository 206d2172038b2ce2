//! Characteristic roots, the spectral projection `P_{k_m}` and sampled
//! dichotomy constants for the linear part of a delay model.

mod characteristic;
mod decay;
mod decomposition;
mod quadrature;
mod roots;

pub use characteristic::CharacteristicFunction;
pub use decay::{
    decay_ratios, decay_samples, default_step, default_t_grid, estimate_decay_constants, estimate_decay_constants_with,
    DecayConstants, DecayOptions,
};
pub use decomposition::{
    decompose, decompose_with, DecompositionReport, ModeBasis, SpectralDecomposition, SpectralLevel,
    DEFAULT_QUADRATURE_NODES,
};
pub use quadrature::gauss_legendre;
pub use roots::{
    char_roots, char_roots_in, default_window, rightmost_root, rightmost_root_in, sort_roots, tail_bound,
    CharacteristicRoot, RightmostRoot, RootCertificate, RootOptions, RootSet, SearchWindow,
};
