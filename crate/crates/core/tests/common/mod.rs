//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use attractorkit::covering::PointCloud;
use attractorkit::dde::NormKind;
use attractorkit::rds::RdModel;
use attractorkit::spectral::CharacteristicFunction;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Winding number by brute-force uniform sampling of the boundary.
pub fn brute_winding(chi: &CharacteristicFunction, re0: f64, re1: f64, im0: f64, im1: f64) -> i64 {
    let corners = [
        Complex64::new(re0, im0),
        Complex64::new(re1, im0),
        Complex64::new(re1, im1),
        Complex64::new(re0, im1),
        Complex64::new(re0, im0),
    ];
    let mut total = 0.0;
    for w in corners.windows(2) {
        let n = 40_000;
        let mut prev = chi.det(w[0]);
        for k in 1..=n {
            let z = w[0] + (w[1] - w[0]) * (k as f64 / n as f64);
            let f = chi.det(z);
            total += (f / prev).arg();
            prev = f;
        }
    }
    (total / (2.0 * PI)).round() as i64
}

pub fn phi(theta: f64, x: f64) -> f64 {
    (1.0 + 0.5 * theta) * x.sin() + 0.3 * (2.0 * theta).cos() * (2.0 * x).sin() + 0.2 * (3.0 * x).sin()
}

/// Method of lines on `points` interior nodes with a hand-written RK4 loop.
/// Delayed values come from the exact history for `s <= 0` and from linear
/// interpolation of stored steps afterwards.
pub fn finite_difference(model: &RdModel, points: usize, dt: f64, t_final: f64) -> (Vec<f64>, f64) {
    let h = PI / (points + 1) as f64;
    let xs: Vec<f64> = (1..=points).map(|j| j as f64 * h).collect();
    let lag = (model.r / dt).round() as usize;
    assert!((lag as f64 * dt - model.r).abs() < 1e-12);
    let steps = (t_final / dt).round() as usize;
    let f = |s: f64| model.nonlinearity.eval(s);

    // stored[n] = u(n dt)
    let mut stored: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    stored.push(xs.iter().map(|&x| phi(0.0, x)).collect());
    let delayed = |stored: &Vec<Vec<f64>>, s: f64| -> Vec<f64> {
        if s <= 1e-14 {
            xs.iter().map(|&x| phi(s.min(0.0), x)).collect()
        } else {
            let q = s / dt;
            let i = q.floor() as usize;
            let w = q - i as f64;
            if w < 1e-9 {
                stored[i].clone()
            } else {
                stored[i]
                    .iter()
                    .zip(&stored[i + 1])
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
        }
    };
    let rhs = |u: &[f64], ud: &[f64]| -> Vec<f64> {
        (0..points)
            .map(|j| {
                let left = if j == 0 { 0.0 } else { u[j - 1] };
                let right = if j + 1 == points { 0.0 } else { u[j + 1] };
                (left - 2.0 * u[j] + right) / (h * h) - model.a * u[j] - model.b * ud[j] + f(ud[j])
            })
            .collect()
    };
    for n in 0..steps {
        let t = n as f64 * dt;
        let u = stored[n].clone();
        let d0 = delayed(&stored, t - model.r);
        let dh = delayed(&stored, t + 0.5 * dt - model.r);
        let d1 = delayed(&stored, t + dt - model.r);
        let k1 = rhs(&u, &d0);
        let u2: Vec<f64> = u.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
        let k2 = rhs(&u2, &dh);
        let u3: Vec<f64> = u.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
        let k3 = rhs(&u3, &dh);
        let u4: Vec<f64> = u.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
        let k4 = rhs(&u4, &d1);
        let next = (0..points)
            .map(|j| u[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect();
        stored.push(next);
        // only one delay window is ever read back
        if n > lag + 2 {
            stored[n - lag - 2] = Vec::new();
        }
    }
    (stored.pop().unwrap(), h)
}

pub fn segment_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
    PointCloud::real(1, NormKind::Max, pts).unwrap()
}

pub fn product_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let pts = xs.iter().flat_map(|&x| ys.iter().map(move |&y| vec![x, y])).collect();
    PointCloud::real(2, NormKind::Max, pts).unwrap()
}

pub fn cantor_cloud(level: u32) -> PointCloud {
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..level {
        intervals = intervals
            .iter()
            .flat_map(|&(a, b)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    let pts = intervals.iter().flat_map(|&(a, b)| [vec![a], vec![b]]).collect();
    PointCloud::real(1, NormKind::Max, pts).unwrap()
}
