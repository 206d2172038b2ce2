use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::segment::NormKind;
use crate::error::{Error, Result};

/// Scalar builtin with a globally valid Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum Builtin {
    Zero,
    ScaledTanh { k: f64 },
    ScaledSin { k: f64 },
    ClippedCubic { k: f64, cap: f64 },
}

/// `g(s) = bias + builtin(s)`, applied to the delayed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    #[serde(flatten)]
    pub builtin: Builtin,
    #[serde(default)]
    pub bias: f64,
}

impl Nonlinearity {
    pub const ZERO: Nonlinearity = Nonlinearity {
        builtin: Builtin::Zero,
        bias: 0.0,
    };

    pub fn new(builtin: Builtin) -> Self {
        Self { builtin, bias: 0.0 }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.builtin {
            Builtin::Zero => true,
            Builtin::ScaledTanh { k } | Builtin::ScaledSin { k } => k.is_finite(),
            Builtin::ClippedCubic { k, cap } => k.is_finite() && cap.is_finite() && cap > 0.0,
        };
        if !ok || !self.bias.is_finite() {
            return Err(Error::InvalidInput(format!("invalid nonlinearity {self:?}")));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.bias
            + match self.builtin {
                Builtin::Zero => 0.0,
                Builtin::ScaledTanh { k } => k * s.tanh(),
                Builtin::ScaledSin { k } => k * s.sin(),
                Builtin::ClippedCubic { k, cap } => {
                    let c = s.clamp(-cap, cap);
                    k * c * c * c
                }
            }
    }

    /// Global Lipschitz constant of the scalar map.
    pub fn lipschitz(&self) -> f64 {
        match self.builtin {
            Builtin::Zero => 0.0,
            Builtin::ScaledTanh { k } | Builtin::ScaledSin { k } => k.abs(),
            Builtin::ClippedCubic { k, cap } => 3.0 * k.abs() * cap * cap,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz() == 0.0 && self.bias == 0.0
    }

    pub fn name(&self) -> &'static str {
        match self.builtin {
            Builtin::Zero => "zero",
            Builtin::ScaledTanh { .. } => "scaled_tanh",
            Builtin::ScaledSin { .. } => "scaled_sin",
            Builtin::ClippedCubic { .. } => "clipped_cubic",
        }
    }
}

/// The nonlinear term `f(x_t)` of a delay model, a function of the delayed
/// state `x(t - tau)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearTerm {
    /// `f_i(x_t) = g(x_i(t - tau))` componentwise.
    Pointwise(Nonlinearity),
    /// Sine-Galerkin image of a pointwise reaction term on (0, pi).
    SineGalerkin(SineGalerkin),
}

impl NonlinearTerm {
    pub fn eval(&self, delayed: &[f64], out: &mut [f64]) {
        match self {
            NonlinearTerm::Pointwise(g) => {
                for (o, &s) in out.iter_mut().zip(delayed) {
                    *o = g.eval(s);
                }
            }
            NonlinearTerm::SineGalerkin(gal) => gal.eval(delayed, out),
        }
    }

    /// Lipschitz constant with respect to `norm` on R^n.
    pub fn lipschitz(&self) -> f64 {
        match self {
            NonlinearTerm::Pointwise(g) => g.lipschitz(),
            NonlinearTerm::SineGalerkin(gal) => gal.nonlinearity.lipschitz(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            NonlinearTerm::Pointwise(g) => g.is_zero(),
            NonlinearTerm::SineGalerkin(gal) => gal.nonlinearity.is_zero(),
        }
    }

    pub fn at_zero_norm(&self, dim: usize, norm: NormKind) -> f64 {
        let zero = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        self.eval(&zero, &mut out);
        norm.vector(&out)
    }

    pub fn describe(&self) -> String {
        match self {
            NonlinearTerm::Pointwise(g) => g.name().to_string(),
            NonlinearTerm::SineGalerkin(gal) => format!("galerkin({})", gal.nonlinearity.name()),
        }
    }
}

/// Sine-basis transform of `u -> g(u)` on (0, pi) with Dirichlet ends.
///
/// With `u(x) = sum_k c_k sin(kx)` synthesized at `x_j = j pi / M`,
/// `F_k = (2/M) sum_j g(u(x_j)) sin(k x_j)`. The discrete sine transform is
/// orthogonal, so `F` inherits the Lipschitz constant of `g` in the
/// Euclidean coefficient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SineGalerkin {
    pub nonlinearity: Nonlinearity,
    modes: usize,
    quad_points: usize,
    // sin(k x_j), row j (interior node), column k
    table: Vec<f64>,
}

impl SineGalerkin {
    pub fn new(nonlinearity: Nonlinearity, modes: usize, quad_points: usize) -> Result<Self> {
        if modes == 0 || quad_points <= modes {
            return Err(Error::InvalidInput(format!(
                "galerkin transform needs quad_points > modes >= 1 (got {quad_points}, {modes})"
            )));
        }
        let mut table = Vec::with_capacity((quad_points - 1) * modes);
        for j in 1..quad_points {
            let x = PI * j as f64 / quad_points as f64;
            for k in 1..=modes {
                table.push((k as f64 * x).sin());
            }
        }
        Ok(Self {
            nonlinearity,
            modes,
            quad_points,
            table,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    pub fn eval(&self, coeffs: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.nonlinearity.is_zero() {
            return;
        }
        let scale = 2.0 / self.quad_points as f64;
        for row in self.table.chunks_exact(self.modes) {
            let u: f64 = row.iter().zip(coeffs).map(|(s, c)| s * c).sum();
            let g = self.nonlinearity.eval(u) * scale;
            for (o, s) in out.iter_mut().zip(row) {
                *o += g * s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalog() -> Vec<Nonlinearity> {
        vec![
            Nonlinearity::ZERO,
            Nonlinearity::new(Builtin::ScaledTanh { k: 0.7 }),
            Nonlinearity::new(Builtin::ScaledSin { k: -1.3 }).with_bias(0.2),
            Nonlinearity::new(Builtin::ClippedCubic { k: 0.5, cap: 1.5 }),
        ]
    }

    proptest! {
        #[test]
        fn builtin_lipschitz_constants_hold(x in -5.0..5.0f64, y in -5.0..5.0f64) {
            for g in catalog() {
                let lhs = (g.eval(x) - g.eval(y)).abs();
                prop_assert!(lhs <= g.lipschitz() * (x - y).abs() + 1e-12);
            }
        }

        #[test]
        fn galerkin_term_is_lipschitz_in_coefficients(
            c in proptest::collection::vec(-2.0..2.0f64, 6),
            d in proptest::collection::vec(-2.0..2.0f64, 6),
        ) {
            let g = Nonlinearity::new(Builtin::ScaledSin { k: 0.8 });
            let gal = SineGalerkin::new(g, 6, 24).unwrap();
            let mut fc = vec![0.0; 6];
            let mut fd = vec![0.0; 6];
            gal.eval(&c, &mut fc);
            gal.eval(&d, &mut fd);
            let diff: Vec<f64> = fc.iter().zip(&fd).map(|(a, b)| a - b).collect();
            let gap: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a - b).collect();
            prop_assert!(NormKind::Euclidean.vector(&diff) <= 0.8 * NormKind::Euclidean.vector(&gap) + 1e-12);
        }
    }

    #[test]
    fn pointwise_term_value_at_zero_is_the_bias() {
        let term = NonlinearTerm::Pointwise(Nonlinearity::new(Builtin::ScaledTanh { k: 2.0 }).with_bias(-0.5));
        assert_eq!(term.at_zero_norm(3, NormKind::Max), 0.5);
        assert!((term.at_zero_norm(4, NormKind::Euclidean) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn galerkin_of_linear_map_is_identity() {
        // g(s) = s is not a builtin, but scaled_sin with tiny amplitude
        // inputs is linear to first order: F(c) ~ k c.
        let g = Nonlinearity::new(Builtin::ScaledSin { k: 1.0 });
        let gal = SineGalerkin::new(g, 4, 16).unwrap();
        let c = [1e-6, -2e-6, 0.5e-6, 3e-6];
        let mut out = [0.0; 4];
        gal.eval(&c, &mut out);
        for (o, ci) in out.iter().zip(&c) {
            assert!((o - ci).abs() < 1e-15);
        }
    }
}
