//! End-to-end analysis of a model file: spectrum, dichotomy constants, the
//! certificate at the optimal (or a fixed) `alpha`, absorbing balls and the
//! sampled checks built on them.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    absorbing_set, dimension_bound, eventual_ball, optimize_alpha_with, verify_squeezing_with, AbsorbingSet,
    Application, DichotomyInputs, DimensionBoundReport, SqueezeVerification, SqueezingCertificate, SqueezingConstants,
    VerifyOptions,
};
use crate::config::{Fixture, ModelConfig};
use crate::covering::{box_counting_dimension, geometric_ladder, BoxCountReport, PointCloud};
use crate::dde::{integrate, steps_per_delay, DelayModel, HistorySegment, NormKind};
use crate::error::{Error, Result};
use crate::rds::{dissipativity_check, mode_spectrum, rd_decomposition, ModeSpectrum, RdModel};
use crate::sampling::{random_segment_with_norm, rng};
use crate::spectral::{
    decompose, default_step, default_t_grid, estimate_decay_constants_with, CharacteristicFunction, DecayOptions,
    SpectralDecomposition,
};

/// Distance from the imaginary axis below which a spectrum is marginal.
pub const MARGINAL: f64 = 1e-9;
/// Settling time, in delays, before attractor samples are recorded.
pub const SETTLE_DELAYS: f64 = 10.0;
/// Segments recorded per trajectory after settling, half a delay apart.
pub const SNAPSHOTS: usize = 4;

#[derive(Debug, Clone)]
pub enum System {
    Delay(DelayModel),
    /// A reaction-diffusion model and its Galerkin reduction, which carries
    /// every numerical step in the coefficient norm.
    Diffusion {
        model: RdModel,
        reduced: DelayModel,
    },
}

impl System {
    pub fn build(fx: &Fixture) -> Result<Self> {
        match &fx.model {
            ModelConfig::Rfde(c) => Ok(System::Delay(c.build()?)),
            ModelConfig::Rrd(c) => {
                let model = c.build()?;
                let reduced = crate::rds::galerkin_reduce(&model)?;
                Ok(System::Diffusion { model, reduced })
            }
        }
    }

    /// The delay equation that is integrated.
    pub fn delay_model(&self) -> &DelayModel {
        match self {
            System::Delay(m) => m,
            System::Diffusion { reduced, .. } => reduced,
        }
    }

    pub fn norm(&self) -> NormKind {
        match self {
            System::Delay(m) => m.norm(),
            System::Diffusion { .. } => NormKind::Euclidean,
        }
    }

    pub fn application(&self) -> Application {
        match self {
            System::Delay(_) => Application::Rfde,
            System::Diffusion { .. } => Application::Rrd,
        }
    }

    /// Lipschitz constant entering the squeezing constants.
    pub fn lipschitz(&self) -> f64 {
        match self {
            System::Delay(m) => m.lipschitz(),
            System::Diffusion { model, .. } => model.lipschitz,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub system: System,
    pub decomp: SpectralDecomposition,
    /// Per-mode roots, for reaction-diffusion models.
    pub modes: Option<ModeSpectrum>,
}

/// Characteristic roots and the spectral splitting at `cut_m`. The
/// reaction-diffusion hypothesis `b - a < 1` is checked first.
pub fn spectrum(fx: &Fixture) -> Result<Spectrum> {
    let system = System::build(fx)?;
    let (decomp, modes) = match &system {
        System::Delay(m) => (
            decompose(&CharacteristicFunction::from_model(m), fx.analysis.cut_m)?,
            None,
        ),
        System::Diffusion { model, .. } => {
            model.check_b_minus_a()?;
            let spec = mode_spectrum(model)?;
            let (_, decomp) = rd_decomposition(model, &spec, fx.analysis.cut_m)?;
            (decomp, Some(spec))
        }
    };
    Ok(Spectrum { system, decomp, modes })
}

pub fn step(fx: &Fixture) -> f64 {
    fx.analysis.step.unwrap_or_else(|| default_step(fx.delay()))
}

/// Both absorbing balls; the sampled checks use the theorem ball when it
/// exists and the eventual ball otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Balls {
    pub theorem: Option<AbsorbingSet>,
    pub theorem_failure: Option<String>,
    pub eventual: Option<AbsorbingSet>,
    pub eventual_failure: Option<String>,
}

impl Balls {
    pub fn working(&self) -> Result<AbsorbingSet> {
        self.theorem.or(self.eventual).ok_or_else(|| {
            Error::Hypothesis(format!(
                "no absorbing ball: {}",
                self.eventual_failure.as_deref().unwrap_or("unknown")
            ))
        })
    }
}

fn failure(e: &Error) -> String {
    format!("{}: {e}", e.code())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub application: Application,
    pub alpha: f64,
    pub alpha_optimized: bool,
    /// Feasible range `(0, alpha_max)`, known when `alpha` was optimized.
    pub alpha_max: Option<f64>,
    pub certificate: SqueezingCertificate,
    pub bound: DimensionBoundReport,
    pub balls: Balls,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub spectrum: Spectrum,
    pub certification: Certification,
}

impl Analysis {
    pub fn model(&self) -> &DelayModel {
        self.spectrum.system.delay_model()
    }

    pub fn decomp(&self) -> &SpectralDecomposition {
        &self.spectrum.decomp
    }
}

/// Attaches sampled decay constants to the decomposition. A rightmost root
/// within [`MARGINAL`] of the imaginary axis counts as unstable.
pub fn estimate_decay(fx: &Fixture, spectrum: Spectrum) -> Result<Spectrum> {
    let rho1 = spectrum.decomp.rho1();
    if rho1 >= -MARGINAL {
        return Err(Error::Unstable { rho1 });
    }
    let a = &fx.analysis;
    let model = spectrum.system.delay_model();
    let opts = DecayOptions {
        gamma_fraction: a.gamma_fraction,
        safety_factor: a.safety_factor,
        step: step(fx),
        norm: spectrum.system.norm(),
    };
    let chi = CharacteristicFunction::from_model(model);
    let decay = estimate_decay_constants_with(
        &chi,
        &spectrum.decomp,
        a.samples,
        &default_t_grid(model.tau()),
        a.seed,
        &opts,
    )?;
    Ok(Spectrum {
        decomp: spectrum.decomp.with_decay(decay),
        ..spectrum
    })
}

/// Sampled decay constants, then the certificate and both balls.
pub fn certify(fx: &Fixture) -> Result<Analysis> {
    let Spectrum { system, decomp, modes } = estimate_decay(fx, spectrum(fx)?)?;
    let a = &fx.analysis;
    let model = system.delay_model();
    let decay = decomp.decay().expect("decay constants were just attached").clone();
    let inputs = DichotomyInputs::from_decomposition(&decomp, system.lipschitz())?;
    let constants = match system {
        System::Delay(_) => SqueezingConstants::rfde(inputs)?,
        System::Diffusion { .. } => SqueezingConstants::rrd(inputs)?,
    };
    let (alpha, alpha_max, certificate, bound) = match a.alpha {
        Some(alpha) => {
            let cert = constants.certificate(alpha)?;
            let report = dimension_bound(&cert)?;
            (alpha, None, cert, report)
        }
        None => {
            let opt = optimize_alpha_with(&constants)?;
            (opt.alpha, Some(opt.alpha_max), opt.certificate, opt.report)
        }
    };
    let (lf, c1) = (model.lipschitz(), model.c1());
    let theorem = absorbing_set(decay.k0, decay.gamma, lf, c1);
    let eventual = eventual_ball(decay.k0, decay.gamma, lf, c1);
    let balls = Balls {
        theorem_failure: theorem.as_ref().err().map(failure),
        theorem: theorem.ok(),
        eventual_failure: eventual.as_ref().err().map(failure),
        eventual: eventual.ok(),
    };
    Ok(Analysis {
        certification: Certification {
            application: system.application(),
            alpha,
            alpha_optimized: a.alpha.is_none(),
            alpha_max,
            certificate,
            bound,
            balls,
        },
        spectrum: Spectrum { system, decomp, modes },
    })
}

/// Squeezing check on `pairs` pairs over `t = tau/2, tau, ..., horizon`.
pub fn squeeze(fx: &Fixture, analysis: &Analysis) -> Result<SqueezeVerification> {
    let a = &fx.analysis;
    let tau = fx.delay();
    let points = (2.0 * a.horizon_delays).round().max(1.0) as usize;
    let grid: Vec<f64> = (1..=points).map(|i| i as f64 * 0.5 * tau).collect();
    let opts = VerifyOptions {
        step: step(fx),
        slack: a.slack,
        ..VerifyOptions::for_delay(tau)
    };
    let ball = analysis.certification.balls.working()?;
    verify_squeezing_with(
        analysis.model(),
        analysis.decomp(),
        &analysis.certification.certificate,
        &ball,
        a.pairs,
        &grid,
        a.seed,
        &opts,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativitySummary {
    pub gamma: f64,
    pub histories: usize,
    pub margin: f64,
    pub attractor_condition: bool,
    /// Largest measured norm over the estimate.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Dissipativity estimate on random histories of growing norm over six
/// delays; `None` for delay equations or when no `gamma` is configured.
pub fn dissipativity(fx: &Fixture, spectrum: &Spectrum) -> Result<Option<DissipativitySummary>> {
    let (System::Diffusion { model, .. }, Some(gamma)) = (&spectrum.system, fx.analysis.dissipativity_gamma) else {
        return Ok(None);
    };
    let h = step(fx);
    let nd = steps_per_delay(h, model.r)?;
    const HISTORIES: usize = 10;
    let reports = (0..HISTORIES)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(fx.analysis.seed, i as u64);
            let phi = random_segment_with_norm(
                &mut r,
                model.r,
                nd,
                model.n_modes,
                NormKind::Euclidean,
                0.5 + 0.5 * i as f64,
            )?;
            dissipativity_check(model, &phi, gamma, 6.0 * model.r, h, fx.analysis.slack)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_ratio = reports
        .iter()
        .flat_map(|r| r.samples.iter().map(|s| s.1 / s.2))
        .fold(0.0, f64::max);
    Ok(Some(DissipativitySummary {
        gamma,
        histories: HISTORIES,
        margin: reports[0].margin,
        attractor_condition: reports[0].attractor_condition,
        worst_ratio,
        pass: reports.iter().all(|r| r.pass),
    }))
}

/// Segments recorded after [`SETTLE_DELAYS`] delays from `count` random
/// starts inside the working ball, [`SNAPSHOTS`] per trajectory.
pub fn sample_attractor(fx: &Fixture, analysis: &Analysis, count: usize, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::InvalidInput("need at least one trajectory".into()));
    }
    let model = analysis.model();
    let tau = model.tau();
    let norm = analysis.spectrum.system.norm();
    let ball = analysis.certification.balls.working()?;
    let h = step(fx);
    let nd = steps_per_delay(h, tau)?;
    let settle = SETTLE_DELAYS * tau;
    let t_final = settle + 0.5 * tau * (SNAPSHOTS - 1) as f64;
    let segments: Vec<Vec<HistorySegment>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(seed, i as u64);
            let scale: f64 = r.random_range(0.1..1.0);
            let phi = random_segment_with_norm(&mut r, tau, nd, model.dim(), norm, ball.radius * scale)?;
            let traj = integrate(model, &phi, t_final, h)?;
            (0..SNAPSHOTS)
                .map(|j| traj.segment_at(settle + 0.5 * tau * j as f64))
                .collect()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<HistorySegment> = segments.into_iter().flatten().collect();
    PointCloud::from_segments(&flat, norm)
}

/// `R/2, R/4, ..., R/256` for the working ball radius `R`.
pub fn default_ladder(analysis: &Analysis) -> Result<Vec<f64>> {
    let r = analysis.certification.balls.working()?.radius;
    Ok(geometric_ladder(0.5 * r, 0.5, 8))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorDimension {
    pub trajectories: usize,
    pub seed: u64,
    pub settle_time: f64,
    pub report: BoxCountReport,
    pub bound: f64,
    pub within_bound: bool,
}

pub fn attractor_dimension(
    fx: &Fixture,
    analysis: &Analysis,
    count: usize,
    seed: u64,
    ladder: Option<&[f64]>,
) -> Result<AttractorDimension> {
    let cloud = sample_attractor(fx, analysis, count, seed)?;
    let ladder = match ladder {
        Some(l) => l.to_vec(),
        None => default_ladder(analysis)?,
    };
    let report = box_counting_dimension(&cloud, &ladder)?;
    let bound = analysis.certification.bound.bound;
    Ok(AttractorDimension {
        trajectories: count,
        seed,
        settle_time: SETTLE_DELAYS * fx.delay(),
        within_bound: report.estimate <= bound,
        report,
        bound,
    })
}
