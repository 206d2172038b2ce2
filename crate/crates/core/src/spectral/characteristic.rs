use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dde::{DelayCoefficient, DelayModel, NonlinearTerm, Nonlinearity, NormKind};
use crate::error::Result;

/// `Delta(lambda) = (lambda + k^2) I - A - B e^{-lambda tau}` for the linear
/// part of a delay model. The offset `k^2` lets per-mode reaction-diffusion
/// problems `lambda + k^2 + a + b e^{-lambda r}` reuse the same machinery
/// with `A = -a`, `B = -b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFunction {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    tau: f64,
    mode_offset: f64,
}

impl CharacteristicFunction {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, tau: f64, mode_offset: f64) -> Self {
        assert!(a.is_square() && a.shape() == b.shape() && tau > 0.0);
        Self { a, b, tau, mode_offset }
    }

    pub fn from_model(model: &DelayModel) -> Self {
        Self::new(model.a().clone(), model.b_matrix().clone(), model.tau(), 0.0)
    }

    pub fn scalar(a: f64, b: f64, tau: f64) -> Self {
        Self::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b), tau, 0.0)
    }

    /// Mode `k` of `u_t = u_xx - a u + b u(t - r)`-type linear parts.
    pub fn rd_mode(a: f64, b: f64, r: f64, k: usize) -> Self {
        let k2 = (k * k) as f64;
        Self::new(DMatrix::from_element(1, 1, -a), DMatrix::from_element(1, 1, -b), r, k2)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mode_offset(&self) -> f64 {
        self.mode_offset
    }

    /// Max-row-sum norms `(|A|, |B|)`, used for a-priori root bounds.
    pub fn coefficient_norms(&self) -> (f64, f64) {
        let row_sum = |m: &DMatrix<f64>| {
            m.row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        (row_sum(&self.a), row_sum(&self.b))
    }

    pub fn matrix(&self, lambda: Complex64) -> DMatrix<Complex64> {
        let n = self.dim();
        let e = (-lambda * self.tau).exp();
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j {
                lambda + self.mode_offset
            } else {
                Complex64::new(0.0, 0.0)
            };
            diag - self.a[(i, j)] - self.b[(i, j)] * e
        })
    }

    /// `d Delta / d lambda = I + tau B e^{-lambda tau}`.
    pub fn derivative_matrix(&self, lambda: Complex64) -> DMatrix<Complex64> {
        let n = self.dim();
        let e = (-lambda * self.tau).exp() * self.tau;
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            diag + self.b[(i, j)] * e
        })
    }

    pub fn det(&self, lambda: Complex64) -> Complex64 {
        if self.dim() == 1 {
            return lambda + self.mode_offset - self.a[(0, 0)] - self.b[(0, 0)] * (-lambda * self.tau).exp();
        }
        self.matrix(lambda).lu().determinant()
    }

    /// Newton correction `det / det'`, via `det'/det = tr(Delta^{-1} Delta')`.
    pub fn newton_step(&self, lambda: Complex64) -> Option<Complex64> {
        if self.dim() == 1 {
            let f = self.det(lambda);
            let d = 1.0 + self.b[(0, 0)] * self.tau * (-lambda * self.tau).exp();
            let step = f / d;
            return step.is_finite().then_some(step);
        }
        let lu = self.matrix(lambda).lu();
        let sol = lu.solve(&self.derivative_matrix(lambda))?;
        let tr = sol.trace();
        let step = 1.0 / tr;
        step.is_finite().then_some(step)
    }

    /// The linear model `x' = (A - k^2 I) x + B x(t - tau)`.
    pub fn linear_model(&self, norm: NormKind) -> Result<DelayModel> {
        let n = self.dim();
        let a = &self.a - DMatrix::identity(n, n) * self.mode_offset;
        DelayModel::new(
            a,
            DelayCoefficient::Matrix(self.b.clone()),
            self.tau,
            NonlinearTerm::Pointwise(Nonlinearity::ZERO),
            norm,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn determinant_is_holomorphic(re in -3.0f64..1.0, im in -10.0f64..10.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let chi = CharacteristicFunction::new(
                DMatrix::from_row_slice(2, 2, &[a, 0.3, -0.2, -1.0]),
                DMatrix::from_row_slice(2, 2, &[b, 0.1, 0.0, 0.5]),
                0.7,
                0.0,
            );
            let z = Complex64::new(re, im);
            let h = 1e-6;
            let dx = (chi.det(z + h) - chi.det(z - h)) / (2.0 * h);
            let dy = (chi.det(z + Complex64::new(0.0, h)) - chi.det(z - Complex64::new(0.0, h))) / (2.0 * h);
            // Cauchy-Riemann: df/dy = i df/dx
            let scale = 1.0 + dx.norm();
            prop_assert!((dy - Complex64::i() * dx).norm() < 1e-6 * scale);
        }
    }

    #[test]
    fn scalar_and_matrix_paths_agree() {
        let chi = CharacteristicFunction::scalar(-1.0, 0.1, 1.0);
        let z = Complex64::new(-0.3, 2.0);
        let direct = chi.matrix(z).lu().determinant();
        assert!((chi.det(z) - direct).norm() < 1e-14);
    }

    #[test]
    fn newton_step_matches_log_derivative() {
        let chi = CharacteristicFunction::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.2, -2.0]),
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, -0.4]),
            0.5,
            0.0,
        );
        let z = Complex64::new(-0.4, 0.9);
        let h = 1e-6;
        let d = (chi.det(z + h) - chi.det(z - h)) / (2.0 * h);
        let expected = chi.det(z) / d;
        assert!((chi.newton_step(z).unwrap() - expected).norm() < 1e-8);
    }

    #[test]
    fn rd_mode_offsets_the_spectrum() {
        let chi = CharacteristicFunction::rd_mode(1.0, 0.0, 0.3, 2);
        assert!(chi.det(Complex64::new(-5.0, 0.0)).norm() < 1e-15);
    }
}
