use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::characteristic::CharacteristicFunction;
use super::decay::DecayConstants;
use super::quadrature::gauss_legendre;
use super::roots::{char_roots_in, default_window, enlarge, tail_bound, CharacteristicRoot, RootOptions, SearchWindow};
use crate::dde::HistorySegment;
use crate::error::{Error, Result};

pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Nodes per grid interval when pairing sampled segments.
const PANEL_NODES: usize = 3;

/// One distinct real part `rho_i` and the total algebraic multiplicity of
/// the roots on that vertical line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralLevel {
    pub rho: f64,
    pub multiplicity: usize,
}

/// Eigenvector `xi` of `Delta(lambda)` and the matching left null vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    pub lambda: Complex64,
    pub right: DVector<Complex64>,
    pub left: DVector<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RealCoord {
    Real(usize),
    /// Upper-half-plane mode; its conjugate partner is implied.
    Pair(usize),
}

/// Spectral splitting `X = X^U + X^S` at the cut `rho_m`, with the
/// projection onto the span of the leading eigenfunctions `e^{lambda theta} xi`.
///
/// The projection uses the bilinear pairing
/// `<psi, phi> = psi(0) phi(0) + int_{-tau}^0 psi(s + tau) B phi(s) ds`
/// with adjoint functions `psi(s) = eta^T e^{-lambda s}`. The pairing matrix
/// between adjoint and eigenfunctions uses global Gauss-Legendre quadrature.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    chi: CharacteristicFunction,
    roots: Vec<CharacteristicRoot>,
    levels: Vec<SpectralLevel>,
    cut: usize,
    basis: Vec<ModeBasis>,
    real_coords: Vec<RealCoord>,
    gram_inv: DMatrix<Complex64>,
    quad_nodes: usize,
    // eta_j^T B
    left_b: Vec<DVector<Complex64>>,
    window: Option<SearchWindow>,
    decay: Option<DecayConstants>,
}

/// Decomposition at cut index `m` (1-based), enumerating roots in a
/// certified window.
pub fn decompose(chi: &CharacteristicFunction, m: usize) -> Result<SpectralDecomposition> {
    decompose_with(
        chi,
        m,
        default_window(chi),
        &RootOptions::default(),
        DEFAULT_QUADRATURE_NODES,
    )
}

pub fn decompose_with(
    chi: &CharacteristicFunction,
    m: usize,
    start: SearchWindow,
    opts: &RootOptions,
    quad_nodes: usize,
) -> Result<SpectralDecomposition> {
    if m == 0 {
        return Err(Error::InvalidInput("cut index is 1-based".into()));
    }
    const ATTEMPTS: usize = 6;
    let mut window = start;
    let mut available = 0;
    for _ in 0..ATTEMPTS {
        let set = char_roots_in(chi, window, opts)?;
        let tail = tail_bound(chi, set.window.im_max);
        let levels = group_levels(&set.roots);
        let certified = levels
            .iter()
            .filter(|l| l.rho > tail && l.rho > set.window.re_min)
            .count();
        available = certified;
        if certified >= m {
            let keep = certified;
            let cutoff = levels[keep - 1].rho;
            let roots: Vec<_> = set
                .roots
                .iter()
                .copied()
                .filter(|r| r.lambda.re >= cutoff - level_tol(cutoff))
                .collect();
            let mut d = SpectralDecomposition::from_roots(chi, &roots, m, quad_nodes)?;
            d.window = Some(set.window);
            return Ok(d);
        }
        // Either the left edge or the imaginary extent is limiting.
        let grow_left = levels.len() < m;
        window = enlarge(chi, window, grow_left);
    }
    Err(Error::CutIndex {
        requested: m,
        available,
    })
}

fn level_tol(rho: f64) -> f64 {
    1e-9 * rho.abs().max(1.0)
}

fn group_levels(roots: &[CharacteristicRoot]) -> Vec<SpectralLevel> {
    let mut levels: Vec<SpectralLevel> = Vec::new();
    for r in roots {
        match levels.last_mut() {
            Some(l) if (l.rho - r.lambda.re).abs() <= level_tol(l.rho) => l.multiplicity += r.multiplicity,
            _ => levels.push(SpectralLevel {
                rho: r.lambda.re,
                multiplicity: r.multiplicity,
            }),
        }
    }
    levels
}

/// Null vectors of `m` belonging to the `count` smallest singular values.
fn null_vectors(m: &DMatrix<Complex64>, count: usize, lambda: Complex64) -> Result<Vec<DVector<Complex64>>> {
    let n = m.nrows();
    if n == 1 {
        if count > 1 {
            return Err(Error::DefectiveRoot {
                re: lambda.re,
                im: lambda.im,
                algebraic: count,
                geometric: 1,
            });
        }
        return Ok(vec![DVector::from_element(1, Complex64::new(1.0, 0.0))]);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NoConvergence("singular value decomposition".into()))?;
    let s = &svd.singular_values;
    let smax = s.max().max(1.0);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let geometric = order.iter().filter(|&&i| s[i] <= 1e-6 * smax).count();
    if geometric < count {
        return Err(Error::DefectiveRoot {
            re: lambda.re,
            im: lambda.im,
            algebraic: count,
            geometric,
        });
    }
    Ok(order[..count]
        .iter()
        .map(|&i| v_t.row(i).transpose().map(|c| c.conj()))
        .collect())
}

/// A real basis of the span of complex null vectors of a real matrix.
fn realify(vectors: Vec<DVector<Complex64>>) -> Vec<DVector<Complex64>> {
    let n = vectors[0].len();
    let g = vectors.len();
    let mut cols = DMatrix::<f64>::zeros(n, 2 * g);
    for (j, v) in vectors.iter().enumerate() {
        for i in 0..n {
            cols[(i, 2 * j)] = v[i].re;
            cols[(i, 2 * j + 1)] = v[i].im;
        }
    }
    let svd = cols.svd(true, false);
    let u = svd.u.expect("requested");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    order[..g]
        .iter()
        .map(|&j| {
            let col = u.column(j);
            // fix the sign so the largest entry is positive
            let big = col
                .iter()
                .copied()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            let sign = if big < 0.0 { -1.0 } else { 1.0 };
            col.map(|v| Complex64::new(sign * v, 0.0)).into_owned()
        })
        .collect()
}

impl SpectralDecomposition {
    /// Builds the projection from a precomputed root list sorted by
    /// decreasing real part, complete down to at least the `m`-th level.
    pub fn from_roots(
        chi: &CharacteristicFunction,
        roots: &[CharacteristicRoot],
        m: usize,
        quad_nodes: usize,
    ) -> Result<Self> {
        let mut roots = roots.to_vec();
        super::roots::sort_roots(&mut roots);
        let levels = group_levels(&roots);
        if m == 0 {
            return Err(Error::InvalidInput("cut index is 1-based".into()));
        }
        if m > levels.len() {
            return Err(Error::CutIndex {
                requested: m,
                available: levels.len(),
            });
        }
        let cutoff = levels[m - 1].rho;
        let tau = chi.tau();
        let mut basis: Vec<ModeBasis> = Vec::new();
        let mut real_coords = Vec::new();
        for root in roots.iter().filter(|r| r.lambda.re >= cutoff - level_tol(cutoff)) {
            let lambda = root.lambda;
            if lambda.im < 0.0 {
                // partner of an upper root already processed
                let partners: Vec<_> = basis
                    .iter()
                    .filter(|b| (b.lambda - lambda.conj()).norm() <= 1e-12 * lambda.norm().max(1.0))
                    .map(|b| ModeBasis {
                        lambda,
                        right: b.right.map(|c| c.conj()),
                        left: b.left.map(|c| c.conj()),
                    })
                    .collect();
                if partners.len() != root.multiplicity {
                    return Err(Error::InvalidInput(format!(
                        "root {lambda} has no conjugate partner in the list"
                    )));
                }
                basis.extend(partners);
                continue;
            }
            let delta = chi.matrix(lambda);
            let mut right = null_vectors(&delta, root.multiplicity, lambda)?;
            let mut left = null_vectors(&delta.transpose(), root.multiplicity, lambda)?;
            if lambda.im == 0.0 {
                right = realify(right);
                left = realify(left);
            }
            for (r, l) in right.into_iter().zip(left) {
                real_coords.push(if lambda.im == 0.0 {
                    RealCoord::Real(basis.len())
                } else {
                    RealCoord::Pair(basis.len())
                });
                basis.push(ModeBasis {
                    lambda,
                    right: r,
                    left: l,
                });
            }
        }

        let (nodes, weights) = gauss_legendre(quad_nodes, -tau, 0.0);
        let kernel: Vec<Vec<Complex64>> = basis
            .iter()
            .map(|b| {
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(s, w)| *w * (-b.lambda * (s + tau)).exp())
                    .collect()
            })
            .collect();
        let bc = chi.b().map(|v| Complex64::new(v, 0.0));
        let left_b: Vec<DVector<Complex64>> = basis.iter().map(|b| bc.transpose() * &b.left).collect();

        let k = basis.len();
        let mut gram = DMatrix::<Complex64>::zeros(k, k);
        for j in 0..k {
            for i in 0..k {
                let bi = &basis[i];
                let mut acc = basis[j].left.dot(&bi.right);
                let lb = left_b[j].dot(&bi.right);
                for (q, s) in nodes.iter().enumerate() {
                    acc += kernel[j][q] * lb * (bi.lambda * *s).exp();
                }
                gram[(j, i)] = acc;
            }
        }
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::NoConvergence("singular pairing matrix".into()))?;

        Ok(Self {
            chi: chi.clone(),
            roots,
            levels,
            cut: m,
            basis,
            real_coords,
            gram_inv,
            quad_nodes: nodes.len(),
            left_b,
            window: None,
            decay: None,
        })
    }

    pub fn characteristic(&self) -> &CharacteristicFunction {
        &self.chi
    }

    /// Every root used, including those below the cut.
    pub fn roots(&self) -> &[CharacteristicRoot] {
        &self.roots
    }

    pub fn levels(&self) -> &[SpectralLevel] {
        &self.levels
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    /// `rho_i`, 1-based.
    pub fn rho(&self, i: usize) -> f64 {
        self.levels[i - 1].rho
    }

    pub fn rho1(&self) -> f64 {
        self.levels[0].rho
    }

    pub fn rho_m(&self) -> f64 {
        self.levels[self.cut - 1].rho
    }

    /// `n_1, ..., n_m`.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.levels[..self.cut].iter().map(|l| l.multiplicity).collect()
    }

    /// `k_m = n_1 + ... + n_m`, the dimension of the range of `P`.
    pub fn k_m(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ModeBasis] {
        &self.basis
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.quad_nodes
    }

    pub fn search_window(&self) -> Option<SearchWindow> {
        self.window
    }

    pub fn decay(&self) -> Option<&DecayConstants> {
        self.decay.as_ref()
    }

    pub fn with_decay(mut self, decay: DecayConstants) -> Self {
        self.decay = Some(decay);
        self
    }

    fn check_segment(&self, phi: &HistorySegment) -> Result<()> {
        if phi.dim() != self.chi.dim() || (phi.delay_span() - self.chi.tau()).abs() > 1e-12 * self.chi.tau() {
            return Err(Error::InvalidInput(
                "segment does not match the characteristic function".into(),
            ));
        }
        Ok(())
    }

    /// Complex coefficients `G^{-1} <Psi, phi>` in the eigenfunction basis.
    ///
    /// Segments produced by the flow have derivative jumps at grid points,
    /// so the integral is taken interval by interval with a few
    /// Gauss-Legendre nodes each, which is exact up to rounding for the
    /// piecewise-cubic interpolant times the smooth adjoint kernel.
    pub fn complex_coordinates(&self, phi: &HistorySegment) -> Result<DVector<Complex64>> {
        self.check_segment(phi)?;
        let n = self.chi.dim();
        let tau = self.chi.tau();
        let last = phi.sample(phi.intervals());
        let phi0 = DVector::from_iterator(n, last.iter().map(|v| Complex64::new(*v, 0.0)));
        let mut pairings = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|b| b.left.dot(&phi0)));
        let (xs, ws) = gauss_legendre(PANEL_NODES, 0.0, 1.0);
        let h = phi.spacing();
        let mut value = DVector::<Complex64>::zeros(n);
        for k in 0..phi.intervals() {
            let t0 = phi.theta(k);
            for (x, w) in xs.iter().zip(&ws) {
                let s = t0 + x * h;
                for (q, v) in phi.value_at(s).into_iter().enumerate() {
                    value[q] = Complex64::new(v, 0.0);
                }
                for (j, b) in self.basis.iter().enumerate() {
                    pairings[j] += w * h * (-b.lambda * (s + tau)).exp() * self.left_b[j].dot(&value);
                }
            }
        }
        Ok(&self.gram_inv * pairings)
    }

    /// Real coordinates of `P phi`: one per real root and `(Re c, Im c)` per
    /// conjugate pair, so that the count is `k_m`.
    pub fn coordinates(&self, phi: &HistorySegment) -> Result<Vec<f64>> {
        let c = self.complex_coordinates(phi)?;
        let mut out = Vec::with_capacity(self.k_m());
        for rc in &self.real_coords {
            match *rc {
                RealCoord::Real(i) => out.push(c[i].re),
                RealCoord::Pair(i) => {
                    out.push(c[i].re);
                    out.push(c[i].im);
                }
            }
        }
        Ok(out)
    }

    /// `sum_i y_i b_i(theta)` for the real basis matching [`Self::coordinates`].
    pub fn embed(&self, coords: &[f64], intervals: usize) -> Result<HistorySegment> {
        if coords.len() != self.k_m() {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.k_m(),
                coords.len()
            )));
        }
        let n = self.chi.dim();
        let mut pos = 0;
        let mut terms: Vec<(Complex64, Complex64, usize)> = Vec::new();
        for rc in &self.real_coords {
            match *rc {
                RealCoord::Real(i) => {
                    terms.push((Complex64::new(coords[pos], 0.0), self.basis[i].lambda, i));
                    pos += 1;
                }
                RealCoord::Pair(i) => {
                    // c Phi + conj(c Phi) = 2 Re(c Phi)
                    terms.push((
                        2.0 * Complex64::new(coords[pos], coords[pos + 1]),
                        self.basis[i].lambda,
                        i,
                    ));
                    pos += 2;
                }
            }
        }
        HistorySegment::from_fn(self.chi.tau(), intervals, n, |theta| {
            let mut v = vec![0.0; n];
            for (c, lambda, i) in &terms {
                let e = *c * (*lambda * theta).exp();
                for (q, x) in v.iter_mut().enumerate() {
                    *x += (e * self.basis[*i].right[q]).re;
                }
            }
            v
        })
    }

    /// `P phi` on the grid of `phi`.
    pub fn project(&self, phi: &HistorySegment) -> Result<HistorySegment> {
        let c = self.coordinates(phi)?;
        self.embed(&c, phi.intervals())
    }

    /// `(I - P) phi`.
    pub fn complement(&self, phi: &HistorySegment) -> Result<HistorySegment> {
        phi.sub(&self.project(phi)?)
    }

    /// Real eigenfunction basis `b_1, ..., b_{k_m}` sampled on a grid.
    pub fn real_basis(&self, intervals: usize) -> Result<Vec<HistorySegment>> {
        (0..self.k_m())
            .map(|i| {
                let mut e = vec![0.0; self.k_m()];
                e[i] = 1.0;
                self.embed(&e, intervals)
            })
            .collect()
    }

    /// Numerical rank of the sampled range of `P`.
    pub fn numerical_rank(&self, intervals: usize) -> Result<usize> {
        let basis = self.real_basis(intervals)?;
        let rows = basis[0].values().len();
        let m = DMatrix::from_fn(rows, basis.len(), |i, j| basis[j].values()[i]);
        let s = m.singular_values();
        let smax = s.max();
        Ok(s.iter().filter(|v| **v > 1e-10 * smax).count())
    }

    pub fn report(&self) -> DecompositionReport {
        let decay = self.decay.as_ref();
        DecompositionReport {
            rhos: self.levels[..self.cut].iter().map(|l| l.rho).collect(),
            multiplicities: self.multiplicities(),
            k_m: self.k_m(),
            k: decay.map(|d| d.k),
            k0: decay.map(|d| d.k0),
            gamma: decay.map(|d| d.gamma),
            quadrature_nodes: self.quadrature_nodes(),
            safety_factor: decay.map(|d| d.safety_factor),
            provenance: decay.map(|_| "sampled-estimate"),
            roots: self.roots.clone(),
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub rhos: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub k_m: usize,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "K0")]
    pub k0: Option<f64>,
    pub gamma: Option<f64>,
    pub quadrature_nodes: usize,
    pub safety_factor: Option<f64>,
    pub provenance: Option<&'static str>,
    pub roots: Vec<CharacteristicRoot>,
    pub window: Option<SearchWindow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> SpectralDecomposition {
        decompose(&CharacteristicFunction::scalar(-1.0, 0.1, 1.0), 1).unwrap()
    }

    #[test]
    fn eigenfunction_is_fixed() {
        let d = scalar();
        let lambda = d.basis()[0].lambda.re;
        let phi = HistorySegment::from_fn(1.0, 400, 1, |t| vec![(lambda * t).exp()]).unwrap();
        let p = d.project(&phi).unwrap();
        assert!(p.distance(&phi, crate::dde::NormKind::Max).unwrap() < 1e-8);
    }

    #[test]
    fn projection_is_idempotent() {
        let d = scalar();
        let phi = HistorySegment::from_fn(1.0, 400, 1, |t| vec![(3.0 * t).sin() + 0.5]).unwrap();
        let p = d.project(&phi).unwrap();
        let pp = d.project(&p).unwrap();
        assert!(pp.distance(&p, crate::dde::NormKind::Max).unwrap() < 1e-8);
        let q = d.complement(&phi).unwrap();
        assert!(d.project(&q).unwrap().norm(crate::dde::NormKind::Max) < 1e-8);
    }

    #[test]
    fn complex_pair_gives_two_real_coordinates() {
        let d = decompose(
            &CharacteristicFunction::scalar(0.0, -std::f64::consts::FRAC_PI_2, 1.0),
            1,
        )
        .unwrap();
        assert_eq!(d.k_m(), 2);
        assert_eq!(d.multiplicities(), vec![2]);
        assert_eq!(d.numerical_rank(200).unwrap(), 2);
        let phi = d.embed(&[0.3, -0.7], 1000).unwrap();
        let c = d.coordinates(&phi).unwrap();
        assert!((c[0] - 0.3).abs() < 1e-9 && (c[1] + 0.7).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn cut_beyond_enumerated_levels_is_an_error() {
        let chi = CharacteristicFunction::scalar(-1.0, 0.0, 1.0);
        assert!(matches!(decompose(&chi, 2), Err(Error::CutIndex { .. })));
    }
}
