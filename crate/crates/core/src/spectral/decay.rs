use rayon::prelude::*;
use serde::Serialize;

use super::characteristic::CharacteristicFunction;
use super::decomposition::SpectralDecomposition;
use crate::dde::{integrate, HistorySegment, NormKind};
use crate::error::{Error, Result};
use crate::sampling::{random_segment, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayOptions {
    /// `gamma = gamma_fraction * (-rho_1)`.
    pub gamma_fraction: f64,
    pub safety_factor: f64,
    /// Integration step; must divide the delay.
    pub step: f64,
    pub norm: NormKind,
}

impl DecayOptions {
    pub fn for_delay(tau: f64) -> Self {
        Self {
            gamma_fraction: 0.9,
            safety_factor: 1.1,
            step: default_step(tau),
            norm: NormKind::Max,
        }
    }
}

/// A step near `1e-3` that divides `tau`, with at least 100 steps per delay.
pub fn default_step(tau: f64) -> f64 {
    tau / (tau / 1e-3).round().max(100.0)
}

/// `t = 0, r/4, ..., 10 r`.
pub fn default_t_grid(tau: f64) -> Vec<f64> {
    (0..=40).map(|i| i as f64 * tau / 4.0).collect()
}

/// Sampled dichotomy constants with `|S(t) phi| <= K0 e^{-gamma t} |phi|` and
/// `|S(t)(I - P) phi| <= K e^{rho_m t} |phi|` on the sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayConstants {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub gamma: f64,
    pub gamma_fraction: f64,
    pub safety_factor: f64,
    /// Suprema before the safety factor.
    pub raw_k: f64,
    pub raw_k0: f64,
    pub rho1: f64,
    pub rho_m: f64,
    pub sample_count: usize,
    pub probe_count: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub step: f64,
    pub norm: NormKind,
    pub provenance: &'static str,
}

pub fn estimate_decay_constants(
    chi: &CharacteristicFunction,
    decomp: &SpectralDecomposition,
    sample_count: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<DecayConstants> {
    estimate_decay_constants_with(
        chi,
        decomp,
        sample_count,
        t_grid,
        seed,
        &DecayOptions::for_delay(chi.tau()),
    )
}

/// Worst ratios `(|S(t) phi| e^{gamma t}, |S(t) Q phi| e^{-rho_m t}) / |phi|`
/// over the grid for one segment.
pub fn decay_ratios(
    chi: &CharacteristicFunction,
    decomp: &SpectralDecomposition,
    phi: &HistorySegment,
    t_grid: &[f64],
    gamma: f64,
    opts: &DecayOptions,
) -> Result<(f64, f64)> {
    let linear = chi.linear_model(opts.norm)?;
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let norm = phi.norm(opts.norm);
    if !(norm > 0.0) {
        return Ok((0.0, 0.0));
    }
    let rho_m = decomp.rho_m();
    let full = integrate(&linear, phi, t_max, opts.step)?;
    let q = decomp.complement(phi)?;
    let qtraj = integrate(&linear, &q, t_max, opts.step)?;
    let mut r0 = 0.0f64;
    let mut rq = 0.0f64;
    for &t in t_grid {
        r0 = r0.max(full.segment_at(t)?.norm(opts.norm) * (gamma * t).exp() / norm);
        rq = rq.max(qtraj.segment_at(t)?.norm(opts.norm) * (-rho_m * t).exp() / norm);
    }
    Ok((r0, rq))
}

/// Random smooth segments plus deterministic probes (unit constants and the
/// real eigenfunction basis).
pub fn decay_samples(
    chi: &CharacteristicFunction,
    decomp: &SpectralDecomposition,
    sample_count: usize,
    seed: u64,
    intervals: usize,
) -> Result<(Vec<HistorySegment>, usize)> {
    let n = chi.dim();
    let tau = chi.tau();
    let mut out = Vec::with_capacity(sample_count + n + decomp.k_m());
    for s in 0..sample_count {
        out.push(random_segment(&mut rng(seed, s as u64), tau, intervals, n)?);
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        out.push(HistorySegment::constant(tau, intervals, &e)?);
    }
    out.extend(decomp.real_basis(intervals)?);
    Ok((out, n + decomp.k_m()))
}

pub fn estimate_decay_constants_with(
    chi: &CharacteristicFunction,
    decomp: &SpectralDecomposition,
    sample_count: usize,
    t_grid: &[f64],
    seed: u64,
    opts: &DecayOptions,
) -> Result<DecayConstants> {
    let rho1 = decomp.rho1();
    if rho1 >= 0.0 {
        return Err(Error::Unstable { rho1 });
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("time grid must be nonempty and nonnegative".into()));
    }
    if !(opts.gamma_fraction > 0.0 && opts.gamma_fraction <= 1.0) || !(opts.safety_factor >= 1.0) {
        return Err(Error::InvalidInput(
            "gamma fraction must lie in (0, 1], safety factor >= 1".into(),
        ));
    }
    let gamma = opts.gamma_fraction * (-rho1);
    let intervals = crate::dde::steps_per_delay(opts.step, chi.tau())?;
    let (samples, probe_count) = decay_samples(chi, decomp, sample_count, seed, intervals)?;
    let ratios: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|phi| decay_ratios(chi, decomp, phi, t_grid, gamma, opts))
        .collect::<Result<_>>()?;
    let (raw_k0, raw_k) = ratios
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), (x, y)| (a.max(*x), b.max(*y)));
    Ok(DecayConstants {
        k: (opts.safety_factor * raw_k).max(1.0),
        k0: (opts.safety_factor * raw_k0).max(1.0),
        gamma,
        gamma_fraction: opts.gamma_fraction,
        safety_factor: opts.safety_factor,
        raw_k,
        raw_k0,
        rho1,
        rho_m: decomp.rho_m(),
        sample_count,
        probe_count,
        seed,
        t_grid: t_grid.to_vec(),
        step: opts.step,
        norm: opts.norm,
        provenance: "sampled-estimate",
    })
}
