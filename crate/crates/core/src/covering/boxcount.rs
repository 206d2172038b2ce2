use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::cloud::{Ambient, PointCloud};
use crate::error::{Error, Result};

/// Number of leading rungs that may be dropped when their count is 1.
const MAX_SATURATED: usize = 2;

/// Largest real dimension handled with a cell hash.
const HASH_MAX_DIM: usize = 4;

/// Greedy `eps`-net: a point becomes a center when it is farther than `eps`
/// from every existing center, in cloud order. The centers cover the cloud at
/// radius `eps`.
pub fn greedy_net(cloud: &PointCloud, eps: f64) -> Vec<usize> {
    match cloud.ambient() {
        Ambient::Real { dim, .. } if dim <= HASH_MAX_DIM => hashed_net(cloud, eps, dim),
        _ => brute_net(cloud, eps),
    }
}

fn brute_net(cloud: &PointCloud, eps: f64) -> Vec<usize> {
    let pts = cloud.points();
    let mut centers: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if centers.iter().all(|&c| cloud.distance(p, &pts[c]) > eps) {
            centers.push(i);
        }
    }
    centers
}

// Any center within eps of a point sits in one of the 3^dim neighbouring
// cells of side eps, for either norm.
fn hashed_net(cloud: &PointCloud, eps: f64, dim: usize) -> Vec<usize> {
    let pts = cloud.points();
    let cell = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / eps).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut centers: Vec<usize> = Vec::new();
    let neighbours: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let d = (k % 3) as i64 - 1;
                    k /= 3;
                    d
                })
                .collect()
        })
        .collect();
    let mut key = vec![0i64; dim];
    for (i, p) in pts.iter().enumerate() {
        let home = cell(p);
        let covered = neighbours.iter().any(|off| {
            for k in 0..dim {
                key[k] = home[k] + off[k];
            }
            grid.get(&key)
                .is_some_and(|cs| cs.iter().any(|&c| cloud.distance(p, &pts[c]) <= eps))
        });
        if !covered {
            centers.push(i);
            grid.entry(home).or_default().push(i);
        }
    }
    centers
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountRung {
    pub eps: f64,
    pub count: usize,
    /// Whether the rung entered the regression.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountReport {
    pub estimate: f64,
    pub intercept: f64,
    pub rungs: Vec<BoxCountRung>,
    pub points: usize,
}

/// Slope of `ln N(eps)` against `ln(1/eps)` over a strictly decreasing
/// ladder of at least four scales.
///
/// Counts are made monotone along the ladder, and up to two leading rungs
/// with a single center are left out of the fit. A cloud whose counts are all
/// 1 has estimate 0.
pub fn box_counting_dimension(cloud: &PointCloud, ladder: &[f64]) -> Result<BoxCountReport> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if ladder.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "the ladder needs at least 4 rungs, got {}",
            ladder.len()
        )));
    }
    if ladder.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("ladder rungs must be positive and finite".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("ladder must be strictly decreasing".into()));
    }
    let mut counts: Vec<usize> = ladder.par_iter().map(|&e| greedy_net(cloud, e).len()).collect();
    for i in 1..counts.len() {
        counts[i] = counts[i].max(counts[i - 1]);
    }
    let mut rungs: Vec<BoxCountRung> = ladder
        .iter()
        .zip(&counts)
        .map(|(&eps, &count)| BoxCountRung { eps, count, used: true })
        .collect();
    if counts.iter().all(|&c| c == 1) {
        return Ok(BoxCountReport {
            estimate: 0.0,
            intercept: 0.0,
            rungs,
            points: cloud.len(),
        });
    }
    let saturated = counts.iter().take_while(|&&c| c == 1).count().min(MAX_SATURATED);
    for r in rungs.iter_mut().take(saturated) {
        r.used = false;
    }
    let xy: Vec<(f64, f64)> = rungs
        .iter()
        .filter(|r| r.used)
        .map(|r| ((1.0 / r.eps).ln(), (r.count as f64).ln()))
        .collect();
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let estimate = sxy / sxx;
    Ok(BoxCountReport {
        estimate,
        intercept: my - estimate * mx,
        rungs,
        points: cloud.len(),
    })
}

/// `base * ratio^k` for `k = 0..n`.
pub fn geometric_ladder(base: f64, ratio: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| base * ratio.powi(k as i32)).collect()
}
