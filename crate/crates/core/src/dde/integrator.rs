use std::io::Write;

use super::model::DelayModel;
use super::segment::{interpolate_uniform, HistorySegment, DEFAULT_INTERPOLATION_ORDER};
use crate::error::{Error, Result};

/// Dense solution of a delay model on `[-tau, T]`, sampled every `h`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    model: DelayModel,
    start: HistorySegment,
    step: f64,
    steps_per_delay: usize,
    steps: usize,
    t_final: f64,
    // row i holds x(-tau + i h)
    values: Vec<f64>,
}

/// Number of steps per delay interval, or an alignment error.
pub fn steps_per_delay(step: f64, delay: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let n = (delay / step).round();
    if n < 1.0 || (n * step - delay).abs() > 1e-9 * delay {
        return Err(Error::StepAlignment { step, delay });
    }
    Ok(n as usize)
}

/// Method-of-steps integration with the classical four-stage Runge-Kutta
/// scheme. Delayed values at half steps come from cubic interpolation of
/// the stored solution, with stencils confined to one delay interval so no
/// stencil straddles a propagated breakpoint `t = k tau`.
pub fn integrate(model: &DelayModel, phi: &HistorySegment, t_final: f64, step: f64) -> Result<Trajectory> {
    let tau = model.tau();
    let n = model.dim();
    let nd = steps_per_delay(step, tau)?;
    if nd < DEFAULT_INTERPOLATION_ORDER {
        return Err(Error::InvalidInput(format!(
            "need at least {DEFAULT_INTERPOLATION_ORDER} steps per delay, got {nd}"
        )));
    }
    if phi.dim() != n {
        return Err(Error::InvalidInput(format!(
            "history has dimension {}, model has {n}",
            phi.dim()
        )));
    }
    if (phi.delay_span() - tau).abs() > 1e-12 * tau {
        return Err(Error::InvalidInput(format!(
            "history spans {}, model delay is {tau}",
            phi.delay_span()
        )));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidInput(format!("final time must be >= 0, got {t_final}")));
    }
    let steps = ((t_final / step) - 1e-9).ceil().max(0.0) as usize;
    let mut values = vec![0.0; (nd + steps + 1) * n];
    let start = phi.resampled(nd)?;
    values[..(nd + 1) * n].copy_from_slice(start.values());

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut delayed_mid = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    for s in 0..steps {
        let i = nd + s;
        let (done, rest) = values.split_at_mut((i + 1) * n);
        let x = &done[i * n..];
        let d0 = &done[(i - nd) * n..(i - nd + 1) * n];
        let d1 = &done[(i - nd + 1) * n..(i - nd + 2) * n];
        let j = i - nd;
        let lo = (j / nd) * nd;
        let hi = (lo + nd).min(i);
        interpolate_uniform(
            done,
            n,
            lo,
            hi,
            j as f64 + 0.5,
            DEFAULT_INTERPOLATION_ORDER,
            &mut delayed_mid,
        );

        model.rhs(x, d0, &mut scratch, &mut k1);
        for q in 0..n {
            stage[q] = x[q] + 0.5 * step * k1[q];
        }
        model.rhs(&stage, &delayed_mid, &mut scratch, &mut k2);
        for q in 0..n {
            stage[q] = x[q] + 0.5 * step * k2[q];
        }
        model.rhs(&stage, &delayed_mid, &mut scratch, &mut k3);
        for q in 0..n {
            stage[q] = x[q] + step * k3[q];
        }
        model.rhs(&stage, d1, &mut scratch, &mut k4);
        let next = &mut rest[..n];
        for q in 0..n {
            next[q] = x[q] + step / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                time: (s + 1) as f64 * step,
            });
        }
    }

    Ok(Trajectory {
        model: model.clone(),
        start,
        step,
        steps_per_delay: nd,
        steps,
        t_final,
        values,
    })
}

impl Trajectory {
    pub fn model(&self) -> &DelayModel {
        &self.model
    }

    pub fn start(&self) -> &HistorySegment {
        &self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    /// Sample times `0, h, 2h, ...` on the forward part.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |s| s as f64 * self.step)
    }

    /// `x(s h)`.
    pub fn sample(&self, s: usize) -> &[f64] {
        let n = self.model.dim();
        let i = self.steps_per_delay + s;
        &self.values[i * n..(i + 1) * n]
    }

    fn value_at_index(&self, pos: f64, out: &mut [f64]) {
        let n = self.model.dim();
        let nd = self.steps_per_delay;
        let last = nd + self.steps;
        let pos = pos.clamp(0.0, last as f64);
        let j = (pos.floor() as usize).min(last - 1);
        let lo = (j / nd) * nd;
        let hi = (lo + nd).min(last);
        interpolate_uniform(&self.values, n, lo, hi, pos, DEFAULT_INTERPOLATION_ORDER, out);
    }

    /// `x(t)` for `t` in `[-tau, T]`.
    pub fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        if t < -self.model.tau() - 1e-12 || t > self.t_final + 1e-9 {
            return Err(Error::TimeOutOfRange {
                time: t,
                t_final: self.t_final,
            });
        }
        let mut out = vec![0.0; self.model.dim()];
        self.value_at_index((t + self.model.tau()) / self.step, &mut out);
        Ok(out)
    }

    /// `u_t(theta) = u(t + theta)` on the trajectory's own grid.
    pub fn segment_at(&self, t: f64) -> Result<HistorySegment> {
        if !(t >= -1e-12) || t > self.t_final + 1e-9 {
            return Err(Error::TimeOutOfRange {
                time: t,
                t_final: self.t_final,
            });
        }
        let n = self.model.dim();
        let nd = self.steps_per_delay;
        let offset = t.max(0.0) / self.step;
        let nearest = offset.round();
        let values = if (offset - nearest).abs() < 1e-9 {
            let s = nearest as usize;
            self.values[s * n..(s + nd + 1) * n].to_vec()
        } else {
            let mut values = vec![0.0; (nd + 1) * n];
            for (k, row) in values.chunks_exact_mut(n).enumerate() {
                self.value_at_index(offset + k as f64, row);
            }
            values
        };
        HistorySegment::new(self.model.tau(), n, values)
    }

    /// CSV with header `t,x1,...,xn`, one row per step.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.model.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for s in 0..=self.steps {
            let mut row = vec![format!("{}", s as f64 * self.step)];
            row.extend(self.sample(s).iter().map(|v| format!("{v}")));
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn segment_at(traj: &Trajectory, t: f64) -> Result<HistorySegment> {
    traj.segment_at(t)
}

/// `Phi(t) phi = u_t^phi`.
pub fn semigroup_apply(model: &DelayModel, phi: &HistorySegment, t: f64, step: f64) -> Result<HistorySegment> {
    integrate(model, phi, t, step)?.segment_at(t)
}
