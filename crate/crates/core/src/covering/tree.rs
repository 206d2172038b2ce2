use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::ball::{cover_ball, lemma_bound};
use super::cloud::{hausdorff_semidist, Ambient, PointCloud};
use crate::bounds::SqueezingCertificate;
use crate::dde::NormKind;
use crate::error::{Error, Result};

pub const MAX_LEVELS: usize = 12;
/// Guard against runaway center counts.
const MAX_CENTERS: usize = 2_000_000;

/// A time-one map together with a rank-`rank` projection `P`.
///
/// `p_coords` returns the coordinates of `Px`, measured in `p_norm`, and
/// `complement` returns `(I - P)x` as a point of the ambient space.
pub trait SplitMap: Sync {
    fn ambient(&self) -> Ambient;
    fn rank(&self) -> usize;
    fn p_norm(&self) -> NormKind;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn p_coords(&self, x: &[f64]) -> Vec<f64>;
    fn embed_p(&self, y: &[f64]) -> Vec<f64>;
    fn complement(&self, x: &[f64]) -> Vec<f64>;
}

/// `x -> diag(p, q) x` on `R^{p+q}` with `P` the first `p.len()` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalSplitMap {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub norm: NormKind,
}

impl DiagonalSplitMap {
    pub fn new(p: Vec<f64>, q: Vec<f64>, norm: NormKind) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput(
                "the projected part needs at least one coordinate".into(),
            ));
        }
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("factors must be finite".into()));
        }
        Ok(Self { p, q, norm })
    }

    /// `x -> x / 4` on the line.
    pub fn quarter() -> Self {
        Self::new(vec![0.25], vec![], NormKind::Max).unwrap()
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0], vec![], NormKind::Max).unwrap()
    }

    /// `(x, y) -> (x / 4, y / 8)` with `P` onto the first coordinate.
    pub fn quarter_eighth() -> Self {
        Self::new(vec![0.25], vec![0.125], NormKind::Max).unwrap()
    }

    /// Exact squeezing constants: `M1 = M2 = 1`, `M3 = 0`, `e^{lambda0}` and
    /// `e^{lambda1}` the largest factors on each part.
    pub fn constants(&self, alpha: f64) -> TreeConstants {
        let p_rate = self.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let q_rate = self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        TreeConstants {
            lambda_dim: self.p.len(),
            m1: 1.0,
            alpha,
            lambda0: p_rate.ln(),
            zeta: alpha * p_rate + q_rate,
        }
    }
}

impl SplitMap for DiagonalSplitMap {
    fn ambient(&self) -> Ambient {
        Ambient::Real {
            dim: self.p.len() + self.q.len(),
            norm: self.norm,
        }
    }

    fn rank(&self) -> usize {
        self.p.len()
    }

    fn p_norm(&self) -> NormKind {
        self.norm
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.p.iter().chain(&self.q).zip(x).map(|(f, v)| f * v).collect()
    }

    fn p_coords(&self, x: &[f64]) -> Vec<f64> {
        x[..self.p.len()].to_vec()
    }

    fn embed_p(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        out.resize(self.p.len() + self.q.len(), 0.0);
        out
    }

    fn complement(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        out[..self.p.len()].iter_mut().for_each(|v| *v = 0.0);
        out
    }
}

/// The constants the construction consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeConstants {
    pub lambda_dim: usize,
    pub m1: f64,
    pub alpha: f64,
    pub lambda0: f64,
    pub zeta: f64,
}

impl TreeConstants {
    pub fn from_certificate(cert: &SqueezingCertificate) -> Self {
        Self {
            lambda_dim: cert.constants.lambda_dim,
            m1: cert.constants.m1,
            alpha: cert.alpha,
            lambda0: cert.constants.lambda0,
            zeta: cert.zeta,
        }
    }

    /// Per-parent child bound `Lambda 2^Lambda (1 + M1 / alpha)^Lambda`.
    pub fn branching(&self) -> f64 {
        lemma_bound(self.lambda_dim, self.m1, self.alpha)
    }

    fn validate(&self) -> Result<()> {
        if self.lambda_dim == 0 {
            return Err(Error::InvalidInput("rank must be positive".into()));
        }
        if !(self.alpha > 0.0) || !(self.m1 > 0.0) {
            return Err(Error::InvalidInput("alpha and M1 must be positive".into()));
        }
        if !(self.zeta >= 0.0 && self.zeta < 1.0) {
            return Err(Error::Inadmissible { zeta: self.zeta });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeLevel {
    pub level: usize,
    /// `zeta^level R`.
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
    /// Index of each center's parent in the previous level.
    pub parents: Vec<usize>,
    pub cardinality: usize,
    /// `branching^level`.
    pub bound: f64,
    /// Largest distance from a sampled image point to its assigned center.
    pub max_residual: f64,
    /// Largest distance from a center to the sampled image it covers.
    pub max_center_gap: f64,
}

impl TreeLevel {
    /// Every center is within `radius` of the sampled image.
    pub fn centers_near_image(&self) -> bool {
        self.max_center_gap <= self.radius * (1.0 + 1e-9)
    }

    /// Every sampled image point is within `radius` of a center.
    pub fn image_covered(&self) -> bool {
        self.max_residual <= self.radius * (1.0 + 1e-9)
    }

    pub fn within_bound(&self) -> bool {
        self.cardinality as f64 <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ESet {
    pub level: usize,
    pub points: Vec<Vec<f64>>,
    pub cardinality: usize,
    /// `sum_{i <= level} branching^i`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringTree {
    pub ambient: Ambient,
    pub constants: TreeConstants,
    pub base_center: Vec<f64>,
    pub base_radius: f64,
    pub sample_size: usize,
    pub branching: f64,
    pub levels: Vec<TreeLevel>,
    pub e_sets: Vec<ESet>,
    pub cardinality_ok: bool,
}

impl CoveringTree {
    /// All points of all `E` sets.
    pub fn e_union(&self) -> Result<PointCloud> {
        let pts = self.e_sets.iter().flat_map(|e| e.points.iter().cloned()).collect();
        PointCloud::new(self.ambient, pts)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// The sample point minimising the largest distance to the others.
fn chebyshev_center(cloud: &PointCloud) -> usize {
    let pts = cloud.points();
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let r = pts.iter().map(|p| cloud.distance(&pts[i], p)).fold(0.0f64, f64::max);
            (i, r)
        })
        .reduce(
            || (0, f64::INFINITY),
            |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        )
        .0
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Builds the nested families `W^1, ..., W^levels` covering the images of the
/// sampled set `B` and the accumulated sets `E^n`.
///
/// The base center `u1` is the Chebyshev center of the sample, and every
/// sample point must lie within `r_b` of it. Each parent `u` spawns the
/// centers `y + (I - P) S(1) u`, where `y` ranges over a cover of the
/// `P`-ball about `P S(1) u` of radius `M1 e^{lambda0} r` by balls of radius
/// `alpha e^{lambda0} r`, `r = zeta^l r_b`. Children whose balls contain no
/// sampled image point are dropped. Every sampled image point is checked
/// against `zeta^{l+1} r_b`.
pub fn build_covering_tree<M: SplitMap>(
    map: &M,
    constants: &TreeConstants,
    r_b: f64,
    levels: usize,
    sample: &PointCloud,
) -> Result<CoveringTree> {
    constants.validate()?;
    if levels == 0 || levels > MAX_LEVELS {
        return Err(Error::InvalidInput(format!("levels must be in 1..={MAX_LEVELS}")));
    }
    if !(r_b > 0.0) || !r_b.is_finite() {
        return Err(Error::InvalidInput("ball radius must be positive".into()));
    }
    if sample.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if sample.ambient() != map.ambient() {
        return Err(Error::InvalidInput("sample and map live in different spaces".into()));
    }
    if map.rank() != constants.lambda_dim {
        return Err(Error::InvalidInput(format!(
            "map rank {} differs from Lambda = {}",
            map.rank(),
            constants.lambda_dim
        )));
    }
    let tol = 1e-9;
    let base = sample.points()[chebyshev_center(sample)].clone();
    for (i, p) in sample.points().iter().enumerate() {
        let d = sample.distance(p, &base);
        if d > r_b * (1.0 + tol) {
            return Err(Error::CoveringFailure {
                level: 0,
                point: i,
                distance: d,
                radius: r_b,
            });
        }
    }
    let branching = constants.branching();
    let e0 = constants.lambda0.exp();
    let ambient = sample.ambient();

    let mut parents: Vec<Vec<f64>> = vec![base.clone()];
    let mut images: Vec<Vec<f64>> = sample.points().to_vec();
    let mut owner: Vec<usize> = vec![0; images.len()];
    let mut radius = r_b;
    let mut out_levels = Vec::with_capacity(levels);

    for level in 1..=levels {
        let p_radius = constants.m1 * e0 * radius;
        let c_radius = constants.alpha * e0 * radius;
        let offsets = if p_radius > 0.0 && c_radius > 0.0 {
            cover_ball(constants.lambda_dim, map.p_norm(), p_radius, c_radius)?.centers
        } else {
            vec![vec![0.0; constants.lambda_dim]]
        };
        let next_images: Vec<Vec<f64>> = images.par_iter().map(|x| map.apply(x)).collect();

        // candidate children of every parent
        let candidates: Vec<Vec<Vec<f64>>> = parents
            .par_iter()
            .map(|u| {
                let su = map.apply(u);
                let py = map.p_coords(&su);
                let q = map.complement(&su);
                offsets.iter().map(|o| add(&map.embed_p(&add(&py, o)), &q)).collect()
            })
            .collect();

        let next_radius = constants.zeta * radius;
        // nearest candidate of the owning parent for every image point
        let choice: Vec<(usize, f64)> = next_images
            .par_iter()
            .zip(owner.par_iter())
            .map(|(x, &o)| {
                candidates[o]
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (j, ambient.distance(x, c)))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            })
            .collect();
        for (i, &(_, d)) in choice.iter().enumerate() {
            if d > next_radius * (1.0 + tol) + 1e-15 * r_b {
                return Err(Error::CoveringFailure {
                    level,
                    point: i,
                    distance: d,
                    radius: next_radius,
                });
            }
        }

        // keep used children, renumbered in parent order
        let mut used: Vec<Vec<Option<usize>>> = candidates.iter().map(|c| vec![None; c.len()]).collect();
        for (&o, &(j, _)) in owner.iter().zip(&choice) {
            used[o][j] = Some(0);
        }
        let mut centers = Vec::new();
        let mut center_parent = Vec::new();
        for (pi, slots) in used.iter_mut().enumerate() {
            for (j, slot) in slots.iter_mut().enumerate() {
                if slot.is_some() {
                    *slot = Some(centers.len());
                    centers.push(candidates[pi][j].clone());
                    center_parent.push(pi);
                }
            }
        }
        if centers.len() > MAX_CENTERS {
            return Err(Error::InvalidInput(format!(
                "level {level} needs {} centers",
                centers.len()
            )));
        }
        let new_owner: Vec<usize> = owner
            .iter()
            .zip(&choice)
            .map(|(&o, &(j, _))| used[o][j].expect("assigned child"))
            .collect();
        let max_residual = choice.iter().map(|c| c.1).fold(0.0, f64::max);
        let mut nearest_image = vec![f64::INFINITY; centers.len()];
        for (&c, &(_, d)) in new_owner.iter().zip(&choice) {
            nearest_image[c] = nearest_image[c].min(d);
        }
        let max_center_gap = nearest_image.iter().copied().fold(0.0, f64::max);

        out_levels.push(TreeLevel {
            level,
            radius: next_radius,
            cardinality: centers.len(),
            centers: centers.clone(),
            parents: center_parent,
            bound: branching.powi(level as i32),
            max_residual,
            max_center_gap,
        });
        parents = centers;
        images = next_images;
        owner = new_owner;
        radius = next_radius;
    }

    let mut e_sets: Vec<ESet> = Vec::with_capacity(levels);
    for (k, w) in out_levels.iter().enumerate() {
        let mut points = w.centers.clone();
        if let Some(prev) = e_sets.last() {
            points.extend(prev.points.par_iter().map(|x| map.apply(x)).collect::<Vec<_>>());
        }
        let level = k + 1;
        e_sets.push(ESet {
            level,
            cardinality: points.len(),
            points,
            bound: (0..=level).map(|i| branching.powi(i as i32)).sum(),
        });
    }
    let cardinality_ok = out_levels.iter().all(|l| l.cardinality as f64 <= l.bound)
        && e_sets.iter().all(|e| e.cardinality as f64 <= e.bound);

    Ok(CoveringTree {
        ambient,
        constants: *constants,
        base_center: base,
        base_radius: r_b,
        sample_size: sample.len(),
        branching,
        levels: out_levels,
        e_sets,
        cardinality_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractionRow {
    pub n: usize,
    pub semidistance: f64,
    /// `zeta^{n - n_D} R` once the orbit sits in the base ball.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractionReport {
    pub rows: Vec<AttractionRow>,
    /// First step at which every orbit point lies in the base ball.
    pub absorption_step: Option<usize>,
    /// `-ln zeta`.
    pub expected_rate: f64,
    /// Least-squares decay rate over the tail half of the absorbed window.
    pub fitted_rate: Option<f64>,
    pub slack: f64,
    pub bound_ok: bool,
    pub rate_ok: bool,
    pub pass: bool,
}

impl AttractionReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "semidistance", "bound"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            let bound = r.bound.map_or_else(|| "inf".to_string(), |b| format!("{b:e}"));
            w.write_record([r.n.to_string(), format!("{:e}", r.semidistance), bound])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Iterates the bounded set `d` and tracks its semidistance to the union of
/// the tree's `E` sets for `n = 0..=horizon`.
pub fn verify_exponential_attraction<M: SplitMap>(
    map: &M,
    tree: &CoveringTree,
    d: &PointCloud,
    horizon: usize,
    slack: f64,
) -> Result<AttractionReport> {
    if d.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if horizon == 0 || horizon > tree.levels.len() {
        return Err(Error::InvalidInput(format!(
            "horizon must be in 1..={} (the tree depth)",
            tree.levels.len()
        )));
    }
    if !(0.0..1.0).contains(&slack) {
        return Err(Error::InvalidInput("slack must lie in [0, 1)".into()));
    }
    let target = tree.e_union()?;
    let zeta = tree.constants.zeta;
    let r = tree.base_radius;
    let mut current = d.points().to_vec();
    let mut rows = Vec::with_capacity(horizon + 1);
    let mut absorbed: Option<usize> = None;
    for n in 0..=horizon {
        let cloud = PointCloud::new(d.ambient(), current.clone())?;
        let semidistance = hausdorff_semidist(&cloud, &target)?;
        if absorbed.is_none()
            && current
                .iter()
                .all(|x| d.distance(x, &tree.base_center) <= r * (1.0 + 1e-9))
        {
            absorbed = Some(n);
        }
        let bound = absorbed.map(|nd| zeta.powi((n - nd) as i32) * r);
        rows.push(AttractionRow { n, semidistance, bound });
        current = current.par_iter().map(|x| map.apply(x)).collect();
    }
    let bound_ok = rows.iter().all(|row| {
        row.bound
            .is_none_or(|b| row.semidistance <= b * (1.0 + slack) + 1e-12 * r)
    });

    // tail half of the absorbed window, past the transient
    let absorbed_rows: Vec<&AttractionRow> = rows.iter().filter(|row| row.bound.is_some()).collect();
    let tail = if absorbed_rows.len() >= 4 {
        &absorbed_rows[absorbed_rows.len() / 2..]
    } else {
        &absorbed_rows[..]
    };
    let fit: Vec<(f64, f64)> = tail
        .iter()
        .filter(|row| row.semidistance > f64::MIN_POSITIVE)
        .map(|row| (row.n as f64, row.semidistance.ln()))
        .collect();
    let fitted_rate = if fit.len() >= 2 {
        let m = fit.len() as f64;
        let mx = fit.iter().map(|p| p.0).sum::<f64>() / m;
        let my = fit.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(-sxy / sxx)
    } else if absorbed.is_some()
        && rows
            .iter()
            .filter(|r| r.bound.is_some())
            .skip(1)
            .all(|r| r.semidistance == 0.0)
    {
        Some(f64::INFINITY)
    } else {
        None
    };
    let expected_rate = -zeta.ln();
    let rate_ok = fitted_rate.is_some_and(|k| k >= expected_rate * (1.0 - slack));
    Ok(AttractionReport {
        rows,
        absorption_step: absorbed,
        expected_rate,
        fitted_rate,
        slack,
        bound_ok,
        rate_ok,
        pass: bound_ok && rate_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, half: f64) -> PointCloud {
        let pts = (0..n)
            .map(|i| vec![-half + 2.0 * half * i as f64 / (n - 1) as f64])
            .collect();
        PointCloud::real(1, NormKind::Max, pts).unwrap()
    }

    #[test]
    fn quarter_map_tree_is_within_bounds() {
        let map = DiagonalSplitMap::quarter();
        for alpha in [1.0, 0.5] {
            let c = map.constants(alpha);
            let tree = build_covering_tree(&map, &c, 1.0, 6, &line(401, 1.0)).unwrap();
            assert!(tree.cardinality_ok);
            for l in &tree.levels {
                assert!(l.max_residual <= l.radius * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn zero_map_collapses_to_a_point() {
        let map = DiagonalSplitMap::zero();
        let c = map.constants(0.5);
        assert_eq!(c.zeta, 0.0);
        let tree = build_covering_tree(&map, &c, 1.0, 4, &line(51, 1.0)).unwrap();
        for l in &tree.levels {
            assert_eq!(l.centers, vec![vec![0.0]]);
        }
    }

    #[test]
    fn sample_outside_base_ball_is_rejected() {
        let map = DiagonalSplitMap::quarter();
        let err = build_covering_tree(&map, &map.constants(1.0), 0.5, 2, &line(11, 1.0)).unwrap_err();
        assert!(matches!(err, Error::CoveringFailure { level: 0, .. }));
    }

    #[test]
    fn quarter_map_attracts_at_rate_ln4() {
        let map = DiagonalSplitMap::quarter();
        let c = map.constants(1.0);
        let tree = build_covering_tree(&map, &c, 1.0, 6, &line(401, 1.0)).unwrap();
        let report = verify_exponential_attraction(&map, &tree, &line(97, 3.0), 6, 0.1).unwrap();
        assert_eq!(report.absorption_step, Some(1));
        let k = report.fitted_rate.unwrap();
        assert!((k / 4f64.ln() - 1.0).abs() < 0.1, "rate {k}");
        assert!(report.pass, "{report:?}");
    }
}
