use std::f64::consts::PI;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::characteristic::CharacteristicFunction;
use crate::error::{Error, Result};

/// Closed search rectangle `[re_min, re_max] x [-im_max, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Largest accepted `|det Delta(lambda)|`.
    pub tolerance: f64,
    pub max_depth: usize,
    pub max_jitter: usize,
    /// Terminal rectangles below this diameter with winding > 1 are
    /// reported as one multiple root.
    pub multiple_diameter: f64,
    /// Half-width of the box used to certify a root cluster found by
    /// multiplicity-aware Newton iteration.
    pub cluster_box: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_depth: 60,
            max_jitter: 8,
            multiple_diameter: 1e-8,
            cluster_box: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoot {
    pub lambda: Complex64,
    pub multiplicity: usize,
    pub residual: f64,
}

impl Serialize for CharacteristicRoot {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CharacteristicRoot", 4)?;
        st.serialize_field("re", &self.lambda.re)?;
        st.serialize_field("im", &self.lambda.im)?;
        st.serialize_field("multiplicity", &self.multiplicity)?;
        st.serialize_field("residual", &self.residual)?;
        st.end()
    }
}

/// Roots found in a window together with the winding number that
/// certifies the count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub roots: Vec<CharacteristicRoot>,
    /// The contour actually used, after any jitter.
    pub window: SearchWindow,
    pub winding_total: i64,
}

/// Search record for [`rightmost_root`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCertificate {
    pub window: SearchWindow,
    pub winding_total: i64,
    /// Roots with `|Im| > im_max` have real part at most this.
    pub tail_bound: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RightmostRoot {
    pub root: CharacteristicRoot,
    pub certificate: RootCertificate,
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    re0: f64,
    re1: f64,
    im0: f64,
    im1: f64,
}

impl Rect {
    fn diameter(&self) -> f64 {
        (self.re1 - self.re0).hypot(self.im1 - self.im0)
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }

    fn split(&self, frac: f64) -> (Rect, Rect) {
        if self.re1 - self.re0 >= self.im1 - self.im0 {
            let x = self.re0 + frac * (self.re1 - self.re0);
            (Rect { re1: x, ..*self }, Rect { re0: x, ..*self })
        } else {
            let y = self.im0 + frac * (self.im1 - self.im0);
            (Rect { im1: y, ..*self }, Rect { im0: y, ..*self })
        }
    }
}

const SPLITS: [f64; 6] = [0.5137, 0.4629, 0.5771, 0.4213, 0.6358, 0.3597];

struct Winder<'a> {
    chi: &'a CharacteristicFunction,
}

impl Winder<'_> {
    fn value(&self, z: Complex64) -> Option<Complex64> {
        let f = self.chi.det(z);
        (f.is_finite() && f.norm() > 0.0).then_some(f)
    }

    fn piece(&self, za: Complex64, fa: Complex64, zb: Complex64, fb: Complex64, depth: usize) -> Option<f64> {
        let d = (fb / fa).arg();
        let zm = 0.5 * (za + zb);
        let fm = self.value(zm)?;
        let d1 = (fm / fa).arg();
        let d2 = (fb / fm).arg();
        if d.abs() < 0.5 && (d1 + d2 - d).abs() < 1e-8 {
            return Some(d);
        }
        if depth >= 48 {
            return None;
        }
        Some(self.piece(za, fa, zm, fm, depth + 1)? + self.piece(zm, fm, zb, fb, depth + 1)?)
    }

    fn edge(&self, z0: Complex64, z1: Complex64) -> Option<f64> {
        let len = (z1 - z0).norm();
        let pieces = ((2.0 * len * self.chi.tau().max(1.0)).ceil() as usize).clamp(4, 4096);
        let mut za = z0;
        let mut fa = self.value(za)?;
        let mut total = 0.0;
        for p in 1..=pieces {
            let zb = z0 + (z1 - z0) * (p as f64 / pieces as f64);
            let fb = self.value(zb)?;
            total += self.piece(za, fa, zb, fb, 0)?;
            za = zb;
            fa = fb;
        }
        Some(total)
    }

    /// Winding number of `det Delta` around the rectangle, or `None` when the
    /// boundary passes through or too close to a root.
    fn winding(&self, r: &Rect) -> Option<i64> {
        let ll = Complex64::new(r.re0, r.im0);
        let lr = Complex64::new(r.re1, r.im0);
        let ur = Complex64::new(r.re1, r.im1);
        let ul = Complex64::new(r.re0, r.im1);
        let total = self.edge(ll, lr)? + self.edge(lr, ur)? + self.edge(ur, ul)? + self.edge(ul, ll)?;
        let w = total / (2.0 * PI);
        let rounded = w.round();
        ((w - rounded).abs() < 1e-3).then_some(rounded as i64)
    }
}

fn polish(chi: &CharacteristicFunction, z0: Complex64, multiplicity: usize) -> Option<Complex64> {
    let mut z = z0;
    let mut small_steps = 0;
    for _ in 0..80 {
        if chi.det(z).norm() == 0.0 {
            break;
        }
        // a singular Delta here means we already sit on the root
        let Some(step) = chi.newton_step(z) else { break };
        let step = step * multiplicity as f64;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            small_steps += 1;
            if small_steps >= 2 {
                break;
            }
        }
    }
    Some(z)
}

fn residual(chi: &CharacteristicFunction, z: Complex64) -> f64 {
    chi.det(z).norm()
}

/// All roots of `det Delta` in `[re_min, re_max] x [-im_max, im_max]`.
pub fn char_roots(
    chi: &CharacteristicFunction,
    re_min: f64,
    re_max: f64,
    im_max: f64,
) -> Result<Vec<CharacteristicRoot>> {
    Ok(char_roots_in(chi, SearchWindow { re_min, re_max, im_max }, &RootOptions::default())?.roots)
}

/// Argument-principle enumeration with recursive subdivision and Newton
/// polishing.
pub fn char_roots_in(chi: &CharacteristicFunction, window: SearchWindow, opts: &RootOptions) -> Result<RootSet> {
    if !(window.re_min < window.re_max)
        || !(window.im_max > 0.0)
        || !window.re_min.is_finite()
        || !window.re_max.is_finite()
        || !window.im_max.is_finite()
    {
        return Err(Error::InvalidInput(format!("invalid search window {window:?}")));
    }
    let winder = Winder { chi };
    let scale = 1e-6 * (window.re_max - window.re_min).max(window.im_max).max(1.0);
    let mut outer = None;
    for attempt in 0..=opts.max_jitter {
        let k = attempt as f64;
        let rect = Rect {
            re0: window.re_min - 1.37 * k * scale,
            re1: window.re_max + 0.71 * k * scale,
            im0: -(window.im_max + 1.13 * k * scale),
            im1: window.im_max + 1.13 * k * scale,
        };
        if let Some(w) = winder.winding(&rect) {
            outer = Some((rect, w));
            break;
        }
    }
    let (rect, total) = outer.ok_or(Error::ContourThroughRoot {
        attempts: opts.max_jitter + 1,
    })?;
    if total < 0 {
        return Err(Error::IncompleteEnumeration {
            expected: total,
            found: 0,
        });
    }

    let mut raw: Vec<(Complex64, usize)> = Vec::new();
    let mut stack = vec![(rect, total, 0usize)];
    while let Some((r, count, depth)) = stack.pop() {
        if count == 0 {
            continue;
        }
        let slack = 1e-9 * r.diameter() + 1e-13;
        if count == 1 {
            if let Some(z) = polish(chi, r.center(), 1) {
                if r.contains(z, slack) && residual(chi, z) < opts.tolerance {
                    raw.push((z, 1));
                    continue;
                }
            }
        } else if r.diameter() < opts.multiple_diameter {
            let z = polish(chi, r.center(), count as usize).filter(|z| r.contains(*z, r.diameter()));
            raw.push((z.unwrap_or_else(|| r.center()), count as usize));
            continue;
        } else if let Some(z) = polish(chi, r.center(), count as usize) {
            // A mu-fold root is only located to about eps^(1/mu) in floating
            // point, so certify the cluster on a small box instead of
            // subdividing down to the diameter threshold.
            let h = opts.cluster_box * z.norm().max(1.0);
            let boxed = Rect {
                re0: z.re - h,
                re1: z.re + h * 1.07,
                im0: z.im - h * 0.93,
                im1: z.im + h,
            };
            if r.contains(Complex64::new(boxed.re0, boxed.im0), 0.0)
                && r.contains(Complex64::new(boxed.re1, boxed.im1), 0.0)
                && winder.winding(&boxed) == Some(count)
            {
                raw.push((z, count as usize));
                continue;
            }
        }
        if depth >= opts.max_depth {
            return Err(Error::IncompleteEnumeration {
                expected: total,
                found: raw.iter().map(|(_, m)| *m as i64).sum(),
            });
        }
        let mut split_ok = false;
        for &frac in &SPLITS {
            let (a, b) = r.split(frac);
            let (wa, wb) = rayon::join(|| winder.winding(&a), || winder.winding(&b));
            if let (Some(wa), Some(wb)) = (wa, wb) {
                if wa >= 0 && wb >= 0 && wa + wb == count {
                    stack.push((b, wb, depth + 1));
                    stack.push((a, wa, depth + 1));
                    split_ok = true;
                    break;
                }
            }
        }
        if !split_ok {
            return Err(Error::ContourThroughRoot { attempts: SPLITS.len() });
        }
    }

    let roots = symmetrize(chi, raw, opts)?;
    let found: i64 = roots.iter().map(|r| r.multiplicity as i64).sum();
    if found != total {
        return Err(Error::IncompleteEnumeration { expected: total, found });
    }
    Ok(RootSet {
        roots,
        window: SearchWindow {
            re_min: rect.re0,
            re_max: rect.re1,
            im_max: rect.im1,
        },
        winding_total: total,
    })
}

/// Real coefficients give conjugate-symmetric spectra; enforce it exactly.
fn symmetrize(
    chi: &CharacteristicFunction,
    raw: Vec<(Complex64, usize)>,
    opts: &RootOptions,
) -> Result<Vec<CharacteristicRoot>> {
    let is_real = |z: Complex64| z.im.abs() <= 1e-8 * z.norm().max(1.0);
    let mut out = Vec::new();
    let mut lower: Vec<(Complex64, usize, bool)> = Vec::new();
    let mut upper = Vec::new();
    for (z, m) in raw {
        if is_real(z) {
            let mut x = Complex64::new(z.re, 0.0);
            if let Some(p) = polish(chi, x, m) {
                if p.im == 0.0 && (p - x).norm() < 1e-6 * x.norm().max(1.0) {
                    x = p;
                }
            }
            out.push((x, m));
        } else if z.im > 0.0 {
            upper.push((z, m));
        } else {
            lower.push((z, m, false));
        }
    }
    for (u, m) in upper {
        if let Some(l) = lower
            .iter_mut()
            .find(|(l, lm, used)| !*used && *lm == m && (l.conj() - u).norm() < 1e-6 * u.norm().max(1.0))
        {
            l.2 = true;
        }
        out.push((u, m));
        out.push((u.conj(), m));
    }
    for (l, m, used) in lower {
        if !used {
            out.push((l.conj(), m));
            out.push((l, m));
        }
    }
    let mut roots: Vec<CharacteristicRoot> = out
        .into_iter()
        .map(|(lambda, multiplicity)| CharacteristicRoot {
            lambda,
            multiplicity,
            residual: residual(chi, lambda),
        })
        .collect();
    for r in &roots {
        if r.multiplicity == 1 && !(r.residual < opts.tolerance) {
            return Err(Error::NoConvergence(format!(
                "root {} has residual {:e}",
                r.lambda, r.residual
            )));
        }
    }
    sort_roots(&mut roots);
    Ok(roots)
}

/// Decreasing real part; conjugate pairs adjacent with the upper root first.
pub fn sort_roots(roots: &mut [CharacteristicRoot]) {
    roots.sort_by(|a, b| {
        b.lambda
            .re
            .total_cmp(&a.lambda.re)
            .then(a.lambda.im.abs().total_cmp(&b.lambda.im.abs()))
            .then(b.lambda.im.total_cmp(&a.lambda.im))
    });
}

/// Largest admissible `|Re lambda| tau` on the left edge before
/// `e^{-lambda tau}` loses all precision.
const MAX_DELAY_EXPONENT: f64 = 600.0;

/// A window bracketing the rightmost roots.
///
/// Eigenvalues `mu` of `A + B e^{-lambda tau}` satisfy
/// `|mu| <= |A| + |B| e^{-Re(lambda) tau}`, which bounds both the right edge
/// and the imaginary extent of roots with large real part.
pub fn default_window(chi: &CharacteristicFunction) -> SearchWindow {
    let (na, nb) = chi.coefficient_norms();
    let k2 = chi.mode_offset();
    let re_min = (-k2 + (-10.0f64).min(-5.0 * (na + nb))).max(-MAX_DELAY_EXPONENT / chi.tau());
    SearchWindow {
        re_min,
        re_max: (na + nb - k2 + 0.5).max(1.0),
        im_max: 20.0f64.max(4.0 * PI / chi.tau()),
    }
}

/// Roots with `|Im lambda| >= y` have real part at most the returned value.
pub fn tail_bound(chi: &CharacteristicFunction, y: f64) -> f64 {
    let (na, nb) = chi.coefficient_norms();
    if y <= na {
        f64::INFINITY
    } else if nb == 0.0 {
        f64::NEG_INFINITY
    } else {
        -((y - na) / nb).ln() / chi.tau()
    }
}

pub(crate) fn enlarge(chi: &CharacteristicFunction, w: SearchWindow, grow_left: bool) -> SearchWindow {
    let k2 = chi.mode_offset();
    let floor = -MAX_DELAY_EXPONENT / chi.tau();
    SearchWindow {
        re_min: if grow_left {
            (-k2 + 2.0 * (w.re_min + k2)).max(floor)
        } else {
            w.re_min
        },
        im_max: if grow_left { w.im_max } else { 2.0 * w.im_max },
        ..w
    }
}

/// Rightmost root with a record of the certified search.
pub fn rightmost_root(chi: &CharacteristicFunction) -> Result<RightmostRoot> {
    rightmost_root_in(chi, default_window(chi), &RootOptions::default())
}

pub fn rightmost_root_in(
    chi: &CharacteristicFunction,
    start: SearchWindow,
    opts: &RootOptions,
) -> Result<RightmostRoot> {
    const ATTEMPTS: usize = 6;
    let mut window = start;
    for attempt in 1..=ATTEMPTS {
        let set = char_roots_in(chi, window, opts)?;
        let tail = tail_bound(chi, set.window.im_max);
        match set.roots.first() {
            None => window = enlarge(chi, window, true),
            Some(root) if root.lambda.re > tail => {
                return Ok(RightmostRoot {
                    root: *root,
                    certificate: RootCertificate {
                        window: set.window,
                        winding_total: set.winding_total,
                        tail_bound: tail,
                        attempts: attempt,
                    },
                });
            }
            Some(_) => window = enlarge(chi, window, false),
        }
    }
    let next = enlarge(chi, enlarge(chi, window, true), false);
    Err(Error::WindowTooSmall {
        suggested_re_min: next.re_min,
        suggested_im_max: next.im_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn delay_free_scalar_has_one_root() {
        let chi = CharacteristicFunction::scalar(-1.0, 0.0, 1.0);
        let roots = char_roots(&chi, -10.0, 1.0, 20.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].lambda - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(roots[0].multiplicity, 1);
    }

    #[test]
    fn matrix_without_delay_recovers_eigenvalues() {
        let chi = CharacteristicFunction::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]),
            DMatrix::zeros(2, 2),
            1.0,
            0.0,
        );
        let set = char_roots_in(&chi, default_window(&chi), &RootOptions::default()).unwrap();
        assert_eq!(set.winding_total, 2);
        assert!((set.roots[0].lambda - Complex64::new(-1.0, 2.0)).norm() < 1e-12);
        assert_eq!(set.roots[1].lambda, set.roots[0].lambda.conj());
    }

    #[test]
    fn repeated_eigenvalue_is_reported_once_with_multiplicity() {
        let chi = CharacteristicFunction::new(DMatrix::identity(2, 2) * -2.0, DMatrix::zeros(2, 2), 1.0, 0.0);
        let roots = char_roots(&chi, -10.0, 1.0, 20.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].multiplicity, 2);
        assert!((roots[0].lambda.re + 2.0).abs() < 1e-7);
    }

    #[test]
    fn window_on_a_root_is_jittered() {
        let chi = CharacteristicFunction::scalar(-1.0, 0.0, 1.0);
        let set = char_roots_in(
            &chi,
            SearchWindow {
                re_min: -1.0,
                re_max: 1.0,
                im_max: 5.0,
            },
            &RootOptions::default(),
        )
        .unwrap();
        assert!(set.window.re_min < -1.0);
        assert_eq!(set.roots.len(), 1);
    }

    #[test]
    fn tail_bound_is_consistent_with_enumeration() {
        let chi = CharacteristicFunction::scalar(-0.5, 1.2, 0.8);
        let w = default_window(&chi);
        let roots = char_roots(&chi, w.re_min, w.re_max, 60.0).unwrap();
        let tail = tail_bound(&chi, 20.0);
        for r in roots.iter().filter(|r| r.lambda.im.abs() >= 20.0) {
            assert!(r.lambda.re <= tail);
        }
    }

    #[test]
    fn rejects_inverted_window() {
        let chi = CharacteristicFunction::scalar(-1.0, 0.0, 1.0);
        assert!(char_roots(&chi, 1.0, -1.0, 5.0).is_err());
    }
}
