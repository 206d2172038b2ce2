//! Seeded random history segments used by the estimators and checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dde::{HistorySegment, NormKind};
use crate::error::Result;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Smooth random segment: a constant plus a few decaying Fourier modes per
/// component, with uniform coefficients in [-1, 1].
pub fn random_segment<R: Rng>(rng: &mut R, delay_span: f64, intervals: usize, dim: usize) -> Result<HistorySegment> {
    const MODES: usize = 4;
    let coeffs: Vec<[f64; 2 * MODES + 1]> = (0..dim)
        .map(|_| {
            let mut c = [0.0; 2 * MODES + 1];
            for v in c.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            c
        })
        .collect();
    HistorySegment::from_fn(delay_span, intervals, dim, |theta| {
        let s = (theta + delay_span) / delay_span * std::f64::consts::PI;
        coeffs
            .iter()
            .map(|c| {
                let mut v = c[0];
                for j in 1..=MODES {
                    let jf = j as f64;
                    v += (c[2 * j - 1] * (jf * s).cos() + c[2 * j] * (jf * s).sin()) / jf;
                }
                v
            })
            .collect()
    })
}

/// Random segment rescaled to the given norm.
pub fn random_segment_with_norm<R: Rng>(
    rng: &mut R,
    delay_span: f64,
    intervals: usize,
    dim: usize,
    norm: NormKind,
    target: f64,
) -> Result<HistorySegment> {
    loop {
        let seg = random_segment(rng, delay_span, intervals, dim)?;
        let n = seg.norm(norm);
        if n > 1e-8 {
            return Ok(seg.scaled(target / n));
        }
    }
}
