use rayon::prelude::*;
use serde::Serialize;

use crate::dde::NormKind;
use crate::error::{Error, Result};

pub const MAX_BALL_DIM: usize = 8;
/// Lattice sizes above this switch the ball sample to seeded random points.
const MAX_LATTICE: usize = 400_000;

/// `dim 2^dim (1 + r_ball / r_cover)^dim`.
pub fn lemma_bound(dim: usize, r_ball: f64, r_cover: f64) -> f64 {
    let d = dim as f64;
    d * 2f64.powi(dim as i32) * (1.0 + r_ball / r_cover).powi(dim as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCover {
    pub dim: usize,
    pub norm: NormKind,
    pub r_ball: f64,
    pub r_cover: f64,
    pub centers: Vec<Vec<f64>>,
    pub bound: f64,
    /// Size of the sample of the ball that was covered.
    pub sample_size: usize,
    /// Covering radius of the sample inside the ball.
    pub mesh: f64,
    /// Largest distance from a sample point to its nearest center.
    pub max_gap: f64,
}

fn norm_of(norm: NormKind, v: &[f64]) -> f64 {
    norm.vector(v)
}

fn dist(norm: NormKind, a: &[f64], b: &[f64]) -> f64 {
    match norm {
        NormKind::Max => a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
        NormKind::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// Dense sample of the closed ball together with its covering radius: every
/// point of the ball lies within the returned radius of some sample point.
///
/// The sample is a cubic lattice of spacing `min(r_ball, r_cover) / 4`
/// through the origin, restricted to the ball inflated by that radius, plus
/// the `2 dim` axis extremes. When the lattice would be too large a seeded
/// uniform sample is used instead and the radius is reported as 0, since no
/// deterministic guarantee is available.
pub fn ball_sample(dim: usize, norm: NormKind, r_ball: f64, r_cover: f64) -> (Vec<Vec<f64>>, f64) {
    let per_side = (4.0 * r_ball / r_ball.min(r_cover)).ceil() as i64;
    let h = r_ball / per_side as f64;
    let mesh = match norm {
        NormKind::Max => 0.5 * h,
        NormKind::Euclidean => 0.5 * h * (dim as f64).sqrt(),
    };
    // one extra layer so that boundary points have a lattice neighbour
    let reach = per_side + 1;
    let side = (2 * reach + 1) as usize;
    let total = side.checked_pow(dim as u32).unwrap_or(usize::MAX);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let radius;
    if total <= MAX_LATTICE {
        radius = mesh;
        let limit = (r_ball + mesh) * (1.0 + 1e-12);
        let mut idx = vec![-reach; dim];
        'outer: loop {
            let p: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
            if norm_of(norm, &p) <= limit {
                out.push(p);
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot <= reach {
                    continue 'outer;
                }
                *slot = -reach;
            }
            break;
        }
    } else {
        use rand::Rng;
        radius = 0.0;
        let mut rng = crate::sampling::rng(0xba11, dim as u64);
        while out.len() < MAX_LATTICE {
            let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-r_ball..=r_ball)).collect();
            if norm_of(norm, &p) <= r_ball {
                out.push(p);
            }
        }
    }
    for k in 0..dim {
        for s in [-1.0, 1.0] {
            let mut p = vec![0.0; dim];
            p[k] = s * r_ball;
            out.push(p);
        }
    }
    (out, radius)
}

/// Greedy farthest-point cover of a sample cloud by balls of radius
/// `r_cover`, seeded with the first sample point. Returns center indices and
/// the final gap.
pub fn farthest_point_cover(points: &[Vec<f64>], r_cover: f64, norm: NormKind) -> (Vec<usize>, f64) {
    if points.is_empty() {
        return (Vec::new(), 0.0);
    }
    let mut centers = vec![0usize];
    let mut gap: Vec<f64> = points.par_iter().map(|p| dist(norm, p, &points[0])).collect();
    loop {
        let (far, d) = gap.par_iter().enumerate().map(|(i, d)| (i, *d)).reduce(
            || (0, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
        if d <= r_cover {
            return (centers, d);
        }
        centers.push(far);
        let c = &points[far];
        gap.par_iter_mut().zip(points.par_iter()).for_each(|(g, p)| {
            let d = dist(norm, p, c);
            if d < *g {
                *g = d;
            }
        });
    }
}

/// Centers covering the ball of radius `r_ball` about 0 in `R^dim` by balls
/// of radius `r_cover`.
///
/// The sample is covered at radius `r_cover - mesh`, so the whole ball (not
/// only the sample) lies in the union of the `r_cover` balls.
pub fn cover_ball(dim: usize, norm: NormKind, r_ball: f64, r_cover: f64) -> Result<BallCover> {
    if dim == 0 || dim > MAX_BALL_DIM {
        return Err(Error::InvalidInput(format!(
            "ball dimension must be in 1..={MAX_BALL_DIM}, got {dim}"
        )));
    }
    if !(r_ball > 0.0) || !(r_cover > 0.0) || !r_ball.is_finite() || !r_cover.is_finite() {
        return Err(Error::InvalidInput("radii must be positive and finite".into()));
    }
    let (sample, mesh) = ball_sample(dim, norm, r_ball, r_cover);
    let (idx, max_gap) = farthest_point_cover(&sample, r_cover - mesh, norm);
    let bound = lemma_bound(dim, r_ball, r_cover);
    if idx.len() as f64 > bound {
        return Err(Error::LemmaViolation {
            count: idx.len(),
            bound,
        });
    }
    Ok(BallCover {
        dim,
        norm,
        r_ball,
        r_cover,
        centers: idx.iter().map(|&i| sample[i].clone()).collect(),
        bound,
        sample_size: sample.len(),
        mesh,
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        assert_eq!(lemma_bound(1, 1.0, 1.0), 4.0);
        assert_eq!(lemma_bound(1, 1.0, 0.5), 6.0);
        assert_eq!(lemma_bound(2, 1.0, 0.5), 72.0);
    }

    #[test]
    fn equal_radii_stay_within_bound() {
        for norm in [NormKind::Max, NormKind::Euclidean] {
            let c = cover_ball(1, norm, 1.0, 1.0).unwrap();
            assert!(c.centers.len() <= 4, "{:?}", c.centers);
            assert!(c.max_gap + c.mesh <= 1.0);
        }
    }

    #[test]
    fn sample_contains_axis_extremes() {
        let (s, mesh) = ball_sample(2, NormKind::Euclidean, 2.0, 0.7);
        assert!(mesh > 0.0);
        assert!(s.iter().any(|p| p == &vec![0.0, 2.0]));
        assert!(s.iter().all(|p| NormKind::Euclidean.vector(p) <= 2.0 + mesh + 1e-12));
    }
}
