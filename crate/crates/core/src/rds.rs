//! Delayed reaction-diffusion on (0, pi) with Dirichlet ends,
//! `u_t = u_xx - a u - b u(t - r) + f(u(t - r))`, reduced to a delay system
//! on the sine modes `sin(kx)`, `k = 1..N`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    dimension_bound, optimize_alpha_with, AlphaOptimum, DichotomyInputs, DimensionBoundReport, SqueezingCertificate,
    SqueezingConstants,
};
use crate::dde::{
    integrate, DelayCoefficient, DelayModel, HistorySegment, NonlinearTerm, Nonlinearity, NormKind, SineGalerkin,
};
use crate::error::{Error, Result};
use crate::spectral::{
    char_roots_in, default_window, estimate_decay_constants_with, sort_roots, tail_bound, CharacteristicFunction,
    CharacteristicRoot, DecayConstants, DecayOptions, RootOptions, SearchWindow, SpectralDecomposition, SpectralLevel,
    DEFAULT_QUADRATURE_NODES,
};

pub const DEFAULT_MODES: usize = 16;

/// `|u|_{L^2} = NORMALIZATION |c|_2` for `u = sum_k c_k sin(kx)`.
pub const NORMALIZATION: f64 = 1.253_314_137_315_500_3; // sqrt(pi / 2)

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdModel {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub nonlinearity: Nonlinearity,
    pub lipschitz: f64,
    /// `|f(0)|_{L^2} = |bias| sqrt(pi)`.
    pub c1: f64,
    pub n_modes: usize,
}

impl RdModel {
    pub fn new(a: f64, b: f64, r: f64, nonlinearity: Nonlinearity, n_modes: usize) -> Result<Self> {
        nonlinearity.validate()?;
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!("a must be positive, got {a}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidInput(format!("b must be nonnegative, got {b}")));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput(format!("delay must be positive, got {r}")));
        }
        if n_modes == 0 {
            return Err(Error::InvalidInput("n_modes must be at least 1".into()));
        }
        Ok(Self {
            a,
            b,
            r,
            nonlinearity,
            lipschitz: nonlinearity.lipschitz(),
            c1: nonlinearity.bias.abs() * PI.sqrt(),
            n_modes,
        })
    }

    /// Overrides `L_f`; it must not undercut the builtin's constant.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz >= 0.0) || lipschitz + 1e-12 < self.lipschitz {
            return Err(Error::Hypothesis(format!(
                "declared Lipschitz constant {lipschitz} is below the builtin's {}",
                self.lipschitz
            )));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    pub fn quad_points(&self) -> usize {
        4 * self.n_modes
    }

    /// The standing assumption `b - a < 1` under which `rho_1 < 0`.
    pub fn check_b_minus_a(&self) -> Result<()> {
        if self.b - self.a >= 1.0 {
            return Err(Error::BMinusA { a: self.a, b: self.b });
        }
        Ok(())
    }

    pub fn mode_characteristic(&self, k: usize) -> CharacteristicFunction {
        CharacteristicFunction::rd_mode(self.a, self.b, self.r, k)
    }
}

/// `N`-mode sine-Galerkin system: `A = diag(-k^2 - a)`, delay `-b I`, and the
/// transformed reaction term, with the Euclidean norm on coefficients.
pub fn galerkin_reduce(model: &RdModel) -> Result<DelayModel> {
    let n = model.n_modes;
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -(((i + 1) * (i + 1)) as f64) - model.a
        } else {
            0.0
        }
    });
    let gal = SineGalerkin::new(model.nonlinearity, n, model.quad_points())?;
    let reduced = DelayModel::new(
        a,
        DelayCoefficient::Scalar(-model.b),
        model.r,
        NonlinearTerm::SineGalerkin(gal),
        NormKind::Euclidean,
    )?;
    let c1 = reduced.c1();
    reduced.with_declared_constants(model.lipschitz, c1)
}

/// `u(x) = sum_k c_k sin(kx)`.
pub fn synthesize(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * ((k + 1) as f64 * x).sin())
        .sum()
}

/// Sine coefficients of `u` by the trapezoid rule on `points` intervals.
pub fn analyze<F: Fn(f64) -> f64>(u: F, modes: usize, points: usize) -> Vec<f64> {
    let h = PI / points as f64;
    (1..=modes)
        .map(|k| {
            (1..points)
                .map(|j| {
                    let x = j as f64 * h;
                    u(x) * (k as f64 * x).sin()
                })
                .sum::<f64>()
                * 2.0
                * h
                / PI
        })
        .collect()
}

/// `|u|_{L^2(0, pi)}` by the trapezoid rule on `points` intervals, exact
/// for sine sums with fewer than `points` modes.
pub fn field_l2_norm(coeffs: &[f64], points: usize) -> f64 {
    let h = PI / points as f64;
    ((1..points)
        .map(|j| synthesize(coeffs, j as f64 * h).powi(2))
        .sum::<f64>()
        * h)
        .sqrt()
}

/// Initial coefficient segment for a field history `phi(theta, x)`.
pub fn history_from_field<F: Fn(f64, f64) -> f64>(model: &RdModel, intervals: usize, phi: F) -> Result<HistorySegment> {
    let points = 8 * model.n_modes.max(16);
    HistorySegment::from_fn(model.r, intervals, model.n_modes, |theta| {
        analyze(|x| phi(theta, x), model.n_modes, points)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRoot {
    pub mode: usize,
    #[serde(flatten)]
    pub root: CharacteristicRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRoots {
    pub mode: usize,
    pub window: SearchWindow,
    pub tail_bound: f64,
    pub winding_total: i64,
    pub roots: Vec<CharacteristicRoot>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub modes: Vec<ModeRoots>,
    /// Every root with real part above this value is listed, over all
    /// modes up to `n_modes`.
    pub certified_above: f64,
    pub rho1: f64,
    pub levels: Vec<SpectralLevel>,
    /// `Some(true)` when `a > 0, b > 0, b - a < 1` (so `rho_1 < 0` is
    /// guaranteed) and the computed `rho_1` agrees; `None` when the
    /// hypothesis does not hold.
    pub stable_by_hypothesis: Option<bool>,
}

impl ModeSpectrum {
    /// Roots above the certified level, all modes merged and sorted.
    pub fn roots(&self) -> Vec<ModeRoot> {
        let mut all: Vec<ModeRoot> = self
            .modes
            .iter()
            .flat_map(|m| {
                m.roots
                    .iter()
                    .filter(|r| r.lambda.re > self.certified_above)
                    .map(move |r| ModeRoot { mode: m.mode, root: *r })
            })
            .collect();
        all.sort_by(|x, y| {
            y.root
                .lambda
                .re
                .total_cmp(&x.root.lambda.re)
                .then(x.mode.cmp(&y.mode))
                .then(y.root.lambda.im.total_cmp(&x.root.lambda.im))
        });
        all
    }

    pub fn rho(&self, m: usize) -> Option<f64> {
        self.levels.get(m.checked_sub(1)?).map(|l| l.rho)
    }

    pub fn k_m(&self, m: usize) -> usize {
        self.levels.iter().take(m).map(|l| l.multiplicity).sum()
    }
}

fn group(roots: &[CharacteristicRoot]) -> Vec<SpectralLevel> {
    let mut levels: Vec<SpectralLevel> = Vec::new();
    for r in roots {
        match levels.last_mut() {
            Some(l) if (l.rho - r.lambda.re).abs() <= 1e-9 * l.rho.abs().max(1.0) => l.multiplicity += r.multiplicity,
            _ => levels.push(SpectralLevel {
                rho: r.lambda.re,
                multiplicity: r.multiplicity,
            }),
        }
    }
    levels
}

/// Per-mode roots of `lambda + k^2 + a + b e^{-lambda r} = 0`.
pub fn mode_spectrum(model: &RdModel) -> Result<ModeSpectrum> {
    let opts = RootOptions::default();
    let modes: Vec<ModeRoots> = (1..=model.n_modes)
        .into_par_iter()
        .map(|k| {
            let chi = model.mode_characteristic(k);
            let set = char_roots_in(&chi, default_window(&chi), &opts)?;
            Ok(ModeRoots {
                mode: k,
                tail_bound: tail_bound(&chi, set.window.im_max),
                window: set.window,
                winding_total: set.winding_total,
                roots: set.roots,
            })
        })
        .collect::<Result<_>>()?;
    let certified_above = modes
        .iter()
        .map(|m| m.window.re_min.max(m.tail_bound))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut merged: Vec<CharacteristicRoot> = modes
        .iter()
        .flat_map(|m| m.roots.iter().copied())
        .filter(|r| r.lambda.re > certified_above)
        .collect();
    sort_roots(&mut merged);
    let levels = group(&merged);
    let rho1 = levels.first().map(|l| l.rho).unwrap_or(f64::NEG_INFINITY);
    let hypothesis = model.a > 0.0 && model.b > 0.0 && model.b - model.a < 1.0;
    Ok(ModeSpectrum {
        modes,
        certified_above,
        rho1,
        levels,
        stable_by_hypothesis: hypothesis.then_some(rho1 < 0.0),
    })
}

/// Reduced model together with the projection onto the first `m` levels.
pub fn rd_decomposition(
    model: &RdModel,
    spectrum: &ModeSpectrum,
    m: usize,
) -> Result<(DelayModel, SpectralDecomposition)> {
    let reduced = galerkin_reduce(model)?;
    let chi = CharacteristicFunction::from_model(&reduced);
    let roots: Vec<CharacteristicRoot> = spectrum.roots().into_iter().map(|r| r.root).collect();
    let decomp = SpectralDecomposition::from_roots(&chi, &roots, m, DEFAULT_QUADRATURE_NODES)?;
    Ok((reduced, decomp))
}

/// Sampled `K` (and `K0`) on the reduced model in the coefficient norm,
/// which is the `L^2` norm up to the constant [`NORMALIZATION`].
pub fn rd_decay(
    reduced: &DelayModel,
    decomp: &SpectralDecomposition,
    samples: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<DecayConstants> {
    let chi = CharacteristicFunction::from_model(reduced);
    let opts = DecayOptions {
        norm: NormKind::Euclidean,
        ..DecayOptions::for_delay(reduced.tau())
    };
    estimate_decay_constants_with(&chi, decomp, samples, t_grid, seed, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCertification {
    pub rho1: f64,
    pub rho_m: f64,
    pub k_m: usize,
    pub decay: DecayConstants,
    pub certificate: SqueezingCertificate,
    pub report: DimensionBoundReport,
}

fn rd_constants(model: &RdModel, decomp: &SpectralDecomposition) -> Result<SqueezingConstants> {
    model.check_b_minus_a()?;
    let rho1 = decomp.rho1();
    if rho1 >= 0.0 {
        return Err(Error::Unstable { rho1 });
    }
    SqueezingConstants::rrd(DichotomyInputs::from_decomposition(decomp, model.lipschitz)?)
}

/// Dimension bound at a given `alpha` for a decomposition that carries
/// decay constants.
pub fn rd_dimension_bound(model: &RdModel, decomp: &SpectralDecomposition, alpha: f64) -> Result<RdCertification> {
    let constants = rd_constants(model, decomp)?;
    let certificate = constants.certificate(alpha)?;
    let report = dimension_bound(&certificate)?;
    Ok(RdCertification {
        rho1: decomp.rho1(),
        rho_m: decomp.rho_m(),
        k_m: decomp.k_m(),
        decay: decomp.decay().cloned().expect("checked by the constants"),
        certificate,
        report,
    })
}

pub fn rd_optimize_alpha(model: &RdModel, decomp: &SpectralDecomposition) -> Result<AlphaOptimum> {
    optimize_alpha_with(&rd_constants(model, decomp)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativityReport {
    pub gamma: f64,
    /// `a - L_f e^{gamma r}`.
    pub margin: f64,
    /// `gamma > a`, as the estimate is stated.
    pub gamma_exceeds_a: bool,
    /// `a > L_f e^{gamma r}`, the attractor-existence condition.
    pub attractor_condition: bool,
    pub initial_norm: f64,
    pub slack: f64,
    /// `(t, measured, bound)` in the `L^2` phase-space norm.
    pub samples: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

/// `c1 e^{gamma r}/(a - L_f e^{gamma r}) + e^{gamma r} (|phi| - c1/(a - L_f e^{gamma r})) e^{(L_f e^{gamma r} - a) t}`.
pub fn dissipativity_rhs(model: &RdModel, gamma: f64, phi_norm: f64, t: f64) -> f64 {
    let g = (gamma * model.r).exp();
    let d = model.a - model.lipschitz * g;
    model.c1 * g / d + g * (phi_norm - model.c1 / d) * ((model.lipschitz * g - model.a) * t).exp()
}

/// Simulates the reduced model from a coefficient history and compares
/// `|x_t|` with the dissipativity estimate on a grid of `r/8` steps.
pub fn dissipativity_check(
    model: &RdModel,
    phi: &HistorySegment,
    gamma: f64,
    horizon: f64,
    step: f64,
    slack: f64,
) -> Result<DissipativityReport> {
    if !(gamma > 0.0) || !gamma.is_finite() || !(horizon >= 0.0) {
        return Err(Error::InvalidInput(
            "gamma must be positive and the horizon nonnegative".into(),
        ));
    }
    let value = model.lipschitz * (gamma * model.r).exp();
    let margin = model.a - value;
    if margin.abs() <= 1e-12 * model.a.max(1.0) {
        return Err(Error::DegenerateDenominator { value });
    }
    let reduced = galerkin_reduce(model)?;
    let traj = integrate(&reduced, phi, horizon, step)?;
    let norm0 = NORMALIZATION * phi.norm(NormKind::Euclidean);
    let dt = model.r / 8.0;
    let count = (horizon / dt + 1e-9).floor() as usize;
    let mut samples = Vec::with_capacity(count + 1);
    let mut pass = true;
    for i in 0..=count {
        let t = i as f64 * dt;
        let measured = NORMALIZATION * traj.segment_at(t)?.norm(NormKind::Euclidean);
        let bound = dissipativity_rhs(model, gamma, norm0, t);
        pass &= measured <= bound * (1.0 + slack) + 1e-14;
        samples.push((t, measured, bound));
    }
    Ok(DissipativityReport {
        gamma,
        margin,
        gamma_exceeds_a: gamma > model.a,
        attractor_condition: margin > 0.0,
        initial_norm: norm0,
        slack,
        samples,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::Builtin;

    #[test]
    fn normalization_constant() {
        assert!((NORMALIZATION - (PI / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parseval_on_sine_sums() {
        let c = [0.3, -1.2, 0.0, 0.7, 0.05];
        let l2 = field_l2_norm(&c, 64);
        let e = NormKind::Euclidean.vector(&c) * NORMALIZATION;
        assert!((l2 - e).abs() < 1e-12);
        let back = analyze(|x| synthesize(&c, x), 5, 64);
        for (x, y) in back.iter().zip(&c) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn reduced_model_structure() {
        let m = RdModel::new(0.5, 0.2, 1.0, Nonlinearity::new(Builtin::ScaledSin { k: 0.3 }), 6).unwrap();
        let red = galerkin_reduce(&m).unwrap();
        assert_eq!(red.dim(), 6);
        assert_eq!(red.a()[(2, 2)], -9.5);
        assert_eq!(red.b_matrix()[(4, 4)], -0.2);
        assert_eq!(red.b_matrix()[(0, 1)], 0.0);
        assert_eq!(red.lipschitz(), 0.3);
        assert_eq!(red.norm(), NormKind::Euclidean);
    }

    #[test]
    fn bias_gives_c1() {
        let m = RdModel::new(1.0, 0.5, 1.0, Nonlinearity::new(Builtin::Zero).with_bias(-0.2), 4).unwrap();
        assert!((m.c1 - 0.2 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn b_minus_a_gate() {
        let m = RdModel::new(1.0, 1.5, 1.0, Nonlinearity::ZERO, 4).unwrap();
        assert!(m.check_b_minus_a().is_ok());
        let m = RdModel::new(1.0, 2.0, 1.0, Nonlinearity::ZERO, 4).unwrap();
        assert!(matches!(m.check_b_minus_a(), Err(Error::BMinusA { .. })));
    }

    #[test]
    fn degenerate_denominator() {
        let m = RdModel::new(
            1.0,
            0.0,
            1.0,
            Nonlinearity::new(Builtin::ScaledTanh { k: (-0.5f64).exp() }),
            2,
        )
        .unwrap();
        let phi = HistorySegment::zeros(1.0, 100, 2).unwrap();
        assert!(matches!(
            dissipativity_check(&m, &phi, 0.5, 1.0, 0.01, 0.05),
            Err(Error::DegenerateDenominator { .. })
        ));
    }
}
