use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::absorbing::{absorption_time, AbsorbingSet};
use super::certificate::SqueezingCertificate;
use crate::dde::{integrate, steps_per_delay, DelayModel};
use crate::error::{Error, Result};
use crate::sampling::{random_segment, random_segment_with_norm, rng};
use crate::spectral::{default_step, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub step: f64,
    /// Relative slack on both inequalities.
    pub slack: f64,
    /// Draws allowed per pair before a sampling failure is reported.
    pub max_draws: usize,
}

impl VerifyOptions {
    pub fn for_delay(tau: f64) -> Self {
        Self {
            step: default_step(tau),
            slack: 0.05,
            max_draws: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezeRecord {
    pub pair: usize,
    pub t: f64,
    pub initial_distance: f64,
    pub p_measured: f64,
    pub p_bound: f64,
    /// `P` bound with the literal `M1 = 2`.
    pub p_bound_literal: f64,
    pub q_measured: f64,
    pub q_bound: f64,
    pub pass: bool,
    pub pass_literal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezeVerification {
    pub pairs: usize,
    pub seed: u64,
    pub slack: f64,
    pub step: f64,
    pub ball_radius: f64,
    pub records: Vec<SqueezeRecord>,
    pub pass_rate: f64,
    pub literal_pass_rate: f64,
    pub all_pass: bool,
    /// Draws rejected because a trajectory left the ball.
    pub rejected_draws: usize,
}

impl SqueezeVerification {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "pair,t,initial_distance,p_measured,p_bound,p_bound_literal,q_measured,q_bound,pass,pass_literal"
        )?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
                r.pair,
                r.t,
                r.initial_distance,
                r.p_measured,
                r.p_bound,
                r.p_bound_literal,
                r.q_measured,
                r.q_bound,
                r.pass,
                r.pass_literal
            )?;
        }
        Ok(())
    }
}

pub fn verify_squeezing(
    model: &DelayModel,
    decomp: &SpectralDecomposition,
    cert: &SqueezingCertificate,
    ball: &AbsorbingSet,
    n_pairs: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<SqueezeVerification> {
    verify_squeezing_with(
        model,
        decomp,
        cert,
        ball,
        n_pairs,
        t_grid,
        seed,
        &VerifyOptions::for_delay(model.tau()),
    )
}

/// Checks both squeezing inequalities on sampled pairs inside the ball.
/// Even pairs are independent draws, odd pairs are close perturbations.
#[allow(clippy::too_many_arguments)]
pub fn verify_squeezing_with(
    model: &DelayModel,
    decomp: &SpectralDecomposition,
    cert: &SqueezingCertificate,
    ball: &AbsorbingSet,
    n_pairs: usize,
    t_grid: &[f64],
    seed: u64,
    opts: &VerifyOptions,
) -> Result<SqueezeVerification> {
    if n_pairs == 0 || t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput(
            "need at least one pair and a grid of positive times".into(),
        ));
    }
    let intervals = steps_per_delay(opts.step, model.tau())?;
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let norm = model.norm();
    let c = &cert.constants;
    let radius = ball.radius;

    let outcomes: Vec<(Vec<SqueezeRecord>, usize)> = (0..n_pairs)
        .into_par_iter()
        .map(|pair| -> Result<(Vec<SqueezeRecord>, usize)> {
            let mut r = rng(seed, pair as u64);
            for draw in 0..opts.max_draws {
                let scale: f64 = r.random_range(0.1..1.0);
                let phi = random_segment_with_norm(&mut r, model.tau(), intervals, model.dim(), norm, radius * scale)?;
                let psi = if pair % 2 == 0 {
                    let scale: f64 = r.random_range(0.1..1.0);
                    random_segment_with_norm(&mut r, model.tau(), intervals, model.dim(), norm, radius * scale)?
                } else {
                    let d = random_segment(&mut r, model.tau(), intervals, model.dim())?;
                    let dn = d.norm(norm).max(1e-300);
                    let cand = phi.axpy(1e-2 * radius / dn, &d)?;
                    let cn = cand.norm(norm);
                    if cn > radius {
                        cand.scaled(radius / cn)
                    } else {
                        cand
                    }
                };
                let u = integrate(model, &phi, t_max, opts.step)?;
                let v = integrate(model, &psi, t_max, opts.step)?;
                let y = phi.distance(&psi, norm)?;
                let mut records = Vec::with_capacity(t_grid.len());
                let mut escaped = false;
                for &t in t_grid {
                    let ut = u.segment_at(t)?;
                    let vt = v.segment_at(t)?;
                    if ut.norm(norm).max(vt.norm(norm)) > radius * (1.0 + opts.slack) {
                        escaped = true;
                        break;
                    }
                    let w = ut.sub(&vt)?;
                    let pw = decomp.project(&w)?;
                    let qw = w.sub(&pw)?;
                    let p_measured = pw.norm(norm);
                    let q_measured = qw.norm(norm);
                    let e0 = (c.lambda0 * t).exp();
                    let p_bound = c.m1 * e0 * y;
                    let p_bound_literal = c.m1_literal * e0 * y;
                    let q_bound = (c.m2 * (c.lambda1 * t).exp() + c.m3 * e0) * y;
                    let tol = 1.0 + opts.slack;
                    let q_ok = q_measured <= q_bound * tol;
                    records.push(SqueezeRecord {
                        pair,
                        t,
                        initial_distance: y,
                        p_measured,
                        p_bound,
                        p_bound_literal,
                        q_measured,
                        q_bound,
                        pass: p_measured <= p_bound * tol && q_ok,
                        pass_literal: p_measured <= p_bound_literal * tol && q_ok,
                    });
                }
                if !escaped {
                    return Ok((records, draw));
                }
            }
            Err(Error::Sampling(format!(
                "pair {pair}: every one of {} draws left the ball of radius {radius}",
                opts.max_draws
            )))
        })
        .collect::<Result<_>>()?;

    let rejected_draws = outcomes.iter().map(|(_, d)| d).sum();
    let records: Vec<SqueezeRecord> = outcomes.into_iter().flat_map(|(r, _)| r).collect();
    let total = records.len() as f64;
    let passed = records.iter().filter(|r| r.pass).count();
    let passed_literal = records.iter().filter(|r| r.pass_literal).count();
    Ok(SqueezeVerification {
        pairs: n_pairs,
        seed,
        slack: opts.slack,
        step: opts.step,
        ball_radius: radius,
        pass_rate: passed as f64 / total,
        literal_pass_rate: passed_literal as f64 / total,
        all_pass: passed == records.len(),
        records,
        rejected_draws,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionCheck {
    pub ball_radius: f64,
    pub initial_norm: f64,
    pub predicted_time: f64,
    /// First grid time at which each trajectory's segment lies in the ball,
    /// `None` if it never did within the horizon.
    pub entry_times: Vec<Option<f64>>,
    pub slack: f64,
    pub pass: bool,
}

/// Integrates `count` random segments of norm `r_d` and records when each
/// segment first enters the ball, compared with the predicted entry time.
pub fn check_absorption(
    model: &DelayModel,
    ball: &AbsorbingSet,
    r_d: f64,
    count: usize,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<AbsorptionCheck> {
    let predicted = absorption_time(ball, r_d)?;
    let intervals = steps_per_delay(opts.step, model.tau())?;
    let horizon = predicted * (1.0 + opts.slack) + model.tau();
    let norm = model.norm();
    let limit = predicted * (1.0 + opts.slack);
    let entry_times: Vec<Option<f64>> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<Option<f64>> {
            let phi =
                random_segment_with_norm(&mut rng(seed, i as u64), model.tau(), intervals, model.dim(), norm, r_d)?;
            let traj = integrate(model, &phi, horizon, opts.step)?;
            for s in 0..=traj.steps() {
                let t = s as f64 * opts.step;
                if traj.segment_at(t)?.norm(norm) <= ball.radius {
                    return Ok(Some(t));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let pass = entry_times.iter().all(|t| matches!(t, Some(t) if *t <= limit + 1e-12));
    Ok(AbsorptionCheck {
        ball_radius: ball.radius,
        initial_norm: r_d,
        predicted_time: predicted,
        entry_times,
        slack: opts.slack,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceCheck {
    pub ball_radius: f64,
    pub samples: usize,
    /// Largest `|Phi(t) phi| / R_B` seen over samples and grid.
    pub max_ratio: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Samples `phi` inside the ball and checks `|Phi(t) phi| <= R_B` on `t_grid`.
pub fn check_invariance(
    model: &DelayModel,
    ball: &AbsorbingSet,
    count: usize,
    t_grid: &[f64],
    seed: u64,
    opts: &VerifyOptions,
) -> Result<InvarianceCheck> {
    let intervals = steps_per_delay(opts.step, model.tau())?;
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let norm = model.norm();
    let ratios: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut r = rng(seed, i as u64);
            let scale: f64 = r.random_range(0.1..1.0);
            let phi = random_segment_with_norm(&mut r, model.tau(), intervals, model.dim(), norm, ball.radius * scale)?;
            let traj = integrate(model, &phi, t_max, opts.step)?;
            let mut worst = 0.0f64;
            for &t in t_grid {
                worst = worst.max(traj.segment_at(t)?.norm(norm) / ball.radius);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(InvarianceCheck {
        ball_radius: ball.radius,
        samples: count,
        max_ratio,
        slack: opts.slack,
        pass: max_ratio <= 1.0 + opts.slack,
    })
}
