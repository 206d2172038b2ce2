use rayon::prelude::*;
use serde::Serialize;

use crate::dde::{HistorySegment, NormKind};
use crate::error::{Error, Result};

/// The space a cloud lives in and its metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ambient {
    /// `R^dim` with the named norm.
    Real { dim: usize, norm: NormKind },
    /// Sampled segments in `C([-delay, 0], R^dim)`: the supremum over the
    /// grid of the pointwise norm.
    Segments {
        dim: usize,
        intervals: usize,
        delay: f64,
        norm: NormKind,
    },
}

impl Ambient {
    pub fn len(&self) -> usize {
        match *self {
            Ambient::Real { dim, .. } => dim,
            Ambient::Segments { dim, intervals, .. } => dim * (intervals + 1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Ambient::Real {
                norm: NormKind::Max, ..
            }
            | Ambient::Segments {
                norm: NormKind::Max, ..
            } => a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
            Ambient::Real {
                norm: NormKind::Euclidean,
                ..
            } => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Ambient::Segments {
                dim,
                norm: NormKind::Euclidean,
                ..
            } => a
                .chunks_exact(dim)
                .zip(b.chunks_exact(dim))
                .map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(0.0f64, f64::max)
                .sqrt(),
        }
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.distance(a, &vec![0.0; a.len()])
    }
}

/// A finite sample of a bounded set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCloud {
    ambient: Ambient,
    points: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl PointCloud {
    pub fn new(ambient: Ambient, points: Vec<Vec<f64>>) -> Result<Self> {
        let len = ambient.len();
        if len == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != len {
                return Err(Error::InvalidInput(format!(
                    "point {i} has {} coordinates, expected {len}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} is not finite")));
            }
        }
        Ok(Self {
            ambient,
            points,
            labels: None,
        })
    }

    pub fn real(dim: usize, norm: NormKind, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Ambient::Real { dim, norm }, points)
    }

    /// The grid `{-half, ..., half}^dim` with `per_side` points per axis.
    pub fn lattice(dim: usize, norm: NormKind, per_side: usize, half: f64) -> Result<Self> {
        if dim == 0 || per_side < 2 || !(half > 0.0) || !half.is_finite() {
            return Err(Error::InvalidInput(
                "lattice needs dim >= 1, two points per side and a positive extent".into(),
            ));
        }
        let axis: Vec<f64> = (0..per_side)
            .map(|i| -half + 2.0 * half * i as f64 / (per_side - 1) as f64)
            .collect();
        let mut pts: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..dim {
            pts = pts
                .iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        Self::real(dim, norm, pts)
    }

    /// Segments on a common grid, compared in the phase-space norm.
    pub fn from_segments(segments: &[HistorySegment], norm: NormKind) -> Result<Self> {
        let first = segments.first().ok_or(Error::EmptyCloud)?;
        let ambient = Ambient::Segments {
            dim: first.dim(),
            intervals: first.intervals(),
            delay: first.delay_span(),
            norm,
        };
        for s in segments {
            if s.dim() != first.dim() || s.intervals() != first.intervals() {
                return Err(Error::InvalidInput("segments must share dimension and grid".into()));
            }
        }
        Self::new(ambient, segments.iter().map(|s| s.values().to_vec()).collect())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::InvalidInput("one label per point".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.ambient.distance(a, b)
    }

    /// Distance from `x` to the nearest point of the cloud.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| self.ambient.distance(x, p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `sup_{a in A} inf_{b in B} |a - b|`.
pub fn hausdorff_semidist(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if a.ambient != b.ambient {
        return Err(Error::InvalidInput("clouds live in different spaces".into()));
    }
    Ok(a.points.par_iter().map(|p| b.distance_to(p)).reduce(|| 0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_metric_is_sup_of_pointwise_norm() {
        let amb = Ambient::Segments {
            dim: 2,
            intervals: 1,
            delay: 1.0,
            norm: NormKind::Euclidean,
        };
        let a = [0.0, 0.0, 3.0, 4.0];
        let b = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(amb.distance(&a, &b), 5.0);
    }

    #[test]
    fn semidistance_basics() {
        let a = PointCloud::real(1, NormKind::Max, vec![vec![0.0]]).unwrap();
        let b = PointCloud::real(1, NormKind::Max, vec![vec![1.0]]).unwrap();
        assert_eq!(hausdorff_semidist(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_semidist(&a, &b).unwrap(), 1.0);
        let empty = PointCloud::real(1, NormKind::Max, vec![]).unwrap();
        assert_eq!(hausdorff_semidist(&empty, &a), Err(Error::EmptyCloud));
    }

    #[test]
    fn rejects_non_finite_points() {
        assert!(PointCloud::real(1, NormKind::Max, vec![vec![f64::NAN]]).is_err());
        assert!(PointCloud::real(2, NormKind::Max, vec![vec![1.0]]).is_err());
    }
}
