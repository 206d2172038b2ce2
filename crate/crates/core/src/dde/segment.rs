use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm used on R^n; the phase-space norm is always the supremum over the
/// delay window of this pointwise norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Max,
    Euclidean,
}

impl NormKind {
    pub fn vector(self, v: &[f64]) -> f64 {
        match self {
            NormKind::Max => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Max => "max",
            NormKind::Euclidean => "euclidean",
        }
    }
}

/// A sampled element of C([-r, 0], R^n) on a uniform grid.
///
/// Sample `i` sits at `theta = -r + i * r / intervals`, so the first sample
/// is `phi(-r)` and the last is `phi(0)`. Off-grid values come from
/// piecewise Lagrange interpolation of the configured order.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    delay_span: f64,
    dim: usize,
    intervals: usize,
    order: usize,
    values: Vec<f64>,
}

pub const DEFAULT_INTERPOLATION_ORDER: usize = 3;

impl HistorySegment {
    /// Builds a segment from row-major samples (`(intervals + 1) * dim` values).
    pub fn new(delay_span: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(delay_span > 0.0) || !delay_span.is_finite() {
            return Err(Error::InvalidInput(format!(
                "delay span must be positive, got {delay_span}"
            )));
        }
        if dim == 0 || !values.len().is_multiple_of(dim) || values.len() / dim < 2 {
            return Err(Error::InvalidInput(format!(
                "{} values do not form at least two samples of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("segment contains non-finite values".into()));
        }
        let intervals = values.len() / dim - 1;
        Ok(Self {
            delay_span,
            dim,
            intervals,
            order: DEFAULT_INTERPOLATION_ORDER.min(intervals),
            values,
        })
    }

    pub fn from_fn<F>(delay_span: f64, intervals: usize, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Vec<f64>,
    {
        if intervals == 0 {
            return Err(Error::InvalidInput("segment needs at least one interval".into()));
        }
        let mut values = Vec::with_capacity((intervals + 1) * dim);
        for i in 0..=intervals {
            let theta = -delay_span + delay_span * i as f64 / intervals as f64;
            let v = f(theta);
            if v.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "sample function returned {} components, expected {dim}",
                    v.len()
                )));
            }
            values.extend_from_slice(&v);
        }
        Self::new(delay_span, dim, values)
    }

    pub fn constant(delay_span: f64, intervals: usize, value: &[f64]) -> Result<Self> {
        Self::from_fn(delay_span, intervals, value.len(), |_| value.to_vec())
    }

    pub fn zeros(delay_span: f64, intervals: usize, dim: usize) -> Result<Self> {
        Self::constant(delay_span, intervals, &vec![0.0; dim])
    }

    pub fn with_order(mut self, order: usize) -> Result<Self> {
        if order == 0 || order > self.intervals {
            return Err(Error::InvalidInput(format!(
                "interpolation order {order} must lie in 1..={}",
                self.intervals
            )));
        }
        self.order = order;
        Ok(self)
    }

    pub fn delay_span(&self) -> f64 {
        self.delay_span
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn interpolation_order(&self) -> usize {
        self.order
    }

    pub fn spacing(&self) -> f64 {
        self.delay_span / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn theta(&self, i: usize) -> f64 {
        if i == self.intervals {
            0.0
        } else {
            -self.delay_span + self.spacing() * i as f64
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| self.theta(i)).collect()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `theta` in `[-r, 0]` (clamped), by piecewise interpolation.
    pub fn value_at(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let pos = ((theta + self.delay_span) / self.spacing()).clamp(0.0, self.intervals as f64);
        interpolate_uniform(&self.values, self.dim, 0, self.intervals, pos, self.order, &mut out);
        out
    }

    /// Supremum over the grid of the pointwise norm.
    pub fn norm(&self, kind: NormKind) -> f64 {
        self.values
            .chunks_exact(self.dim)
            .map(|v| kind.vector(v))
            .fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim
            || self.intervals != other.intervals
            || (self.delay_span - other.delay_span).abs() > 1e-12 * self.delay_span
        {
            return Err(Error::InvalidInput("segments live on different grids".into()));
        }
        Ok(())
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self { values, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn distance(&self, other: &Self, kind: NormKind) -> Result<f64> {
        Ok(self.sub(other)?.norm(kind))
    }

    /// Resamples onto a grid with a different number of intervals.
    pub fn resampled(&self, intervals: usize) -> Result<Self> {
        if intervals == self.intervals {
            return Ok(self.clone());
        }
        let seg = Self::from_fn(self.delay_span, intervals, self.dim, |theta| self.value_at(theta))?;
        Ok(Self {
            order: self.order.min(intervals),
            ..seg
        })
    }
}

/// Lagrange interpolation on uniformly spaced samples `values[lo..=hi]`.
///
/// `pos` is a fractional sample index. The stencil never leaves `[lo, hi]`,
/// which keeps it from straddling derivative breakpoints. Integer positions
/// return the stored sample exactly.
pub(crate) fn interpolate_uniform(
    values: &[f64],
    dim: usize,
    lo: usize,
    hi: usize,
    pos: f64,
    order: usize,
    out: &mut [f64],
) {
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-9 {
        let idx = (nearest as usize).clamp(lo, hi);
        out.copy_from_slice(&values[idx * dim..(idx + 1) * dim]);
        return;
    }
    let order = order.min(hi - lo).max(1);
    let j = (pos.floor() as usize).clamp(lo, hi - 1);
    let start = j.saturating_sub((order - 1) / 2).max(lo).min(hi - order);
    let x = pos - start as f64;
    out.iter_mut().for_each(|o| *o = 0.0);
    for k in 0..=order {
        let mut w = 1.0;
        for m in 0..=order {
            if m != k {
                w *= (x - m as f64) / (k as f64 - m as f64);
            }
        }
        let row = &values[(start + k) * dim..(start + k + 1) * dim];
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let seg = HistorySegment::zeros(0.7, 7, 2).unwrap();
        let grid = seg.grid();
        assert_eq!(grid[0], -0.7);
        assert_eq!(*grid.last().unwrap(), 0.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let seg = HistorySegment::from_fn(1.0, 10, 1, |t| vec![t * t * t - 2.0 * t + 0.5]).unwrap();
        for &t in &[-0.95, -0.51, -0.33, -0.02] {
            let v = seg.value_at(t)[0];
            assert!((v - (t * t * t - 2.0 * t + 0.5)).abs() < 1e-13, "{t}: {v}");
        }
    }

    #[test]
    fn norms_follow_the_pointwise_convention() {
        let seg = HistorySegment::from_fn(1.0, 4, 2, |t| vec![3.0 * (t + 1.0), -4.0 * (t + 1.0)]).unwrap();
        assert!((seg.norm(NormKind::Max) - 4.0).abs() < 1e-15);
        assert!((seg.norm(NormKind::Euclidean) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(HistorySegment::new(1.0, 1, vec![0.0, f64::NAN]).is_err());
        assert!(HistorySegment::new(0.0, 1, vec![0.0, 1.0]).is_err());
        assert!(HistorySegment::new(1.0, 2, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn resampling_preserves_smooth_data() {
        let seg = HistorySegment::from_fn(2.0, 200, 1, |t| vec![(1.3 * t).sin()]).unwrap();
        let fine = seg.resampled(500).unwrap();
        for i in 0..=500 {
            let t = fine.theta(i);
            // cubic error bound h^4 max|f''''| (9/16) / 24 with h = 0.01
            assert!((fine.sample(i)[0] - (1.3 * t).sin()).abs() < 7e-10);
        }
    }
}
