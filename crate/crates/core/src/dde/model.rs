use nalgebra::DMatrix;
use serde::Serialize;

use super::nonlinearity::{NonlinearTerm, Nonlinearity};
use super::segment::NormKind;
use crate::error::{Error, Result};

/// Coefficient of the delayed term `b x(t - tau)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayCoefficient {
    /// `b I`
    Scalar(f64),
    Matrix(DMatrix<f64>),
}

impl DelayCoefficient {
    pub fn to_matrix(&self, dim: usize) -> DMatrix<f64> {
        match self {
            DelayCoefficient::Scalar(b) => DMatrix::identity(dim, dim) * *b,
            DelayCoefficient::Matrix(m) => m.clone(),
        }
    }

    pub fn kind(&self) -> DelayCoefficientKind {
        match self {
            DelayCoefficient::Scalar(_) => DelayCoefficientKind::ScalarTimesIdentity,
            DelayCoefficient::Matrix(_) => DelayCoefficientKind::FullMatrix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayCoefficientKind {
    ScalarTimesIdentity,
    FullMatrix,
}

/// `x'(t) = A x(t) + b x(t - tau) + f(x_t)` with a single point delay.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    a: DMatrix<f64>,
    b: DelayCoefficient,
    b_matrix: DMatrix<f64>,
    tau: f64,
    nonlinear: NonlinearTerm,
    lipschitz: f64,
    c1: f64,
    norm: NormKind,
}

impl DelayModel {
    /// Builds a model and derives `L_f` and `c1` from the nonlinear term.
    pub fn new(
        a: DMatrix<f64>,
        b: DelayCoefficient,
        tau: f64,
        nonlinear: NonlinearTerm,
        norm: NormKind,
    ) -> Result<Self> {
        let dim = a.nrows();
        if dim == 0 || a.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "instantaneous matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let DelayCoefficient::Matrix(m) = &b {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "delay matrix must be {dim}x{dim}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidInput(format!("delay must be positive, got {tau}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "instantaneous matrix has non-finite entries".into(),
            ));
        }
        match &nonlinear {
            NonlinearTerm::Pointwise(g) => g.validate()?,
            NonlinearTerm::SineGalerkin(gal) => {
                gal.nonlinearity.validate()?;
                if gal.modes() != dim {
                    return Err(Error::InvalidInput("galerkin mode count differs from dimension".into()));
                }
            }
        }
        let b_matrix = b.to_matrix(dim);
        if b_matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("delay coefficient has non-finite entries".into()));
        }
        let lipschitz = nonlinear.lipschitz();
        let c1 = nonlinear.at_zero_norm(dim, norm);
        Ok(Self {
            a,
            b,
            b_matrix,
            tau,
            nonlinear,
            lipschitz,
            c1,
            norm,
        })
    }

    pub fn scalar(a: f64, b: f64, tau: f64, g: Nonlinearity) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DelayCoefficient::Scalar(b),
            tau,
            NonlinearTerm::Pointwise(g),
            NormKind::Max,
        )
    }

    /// Replaces the derived constants by declared ones, checking that the
    /// declared Lipschitz constant still bounds the builtin and that `c1`
    /// matches `|f(0)|`.
    pub fn with_declared_constants(mut self, lipschitz: f64, c1: f64) -> Result<Self> {
        if !(lipschitz >= 0.0) || lipschitz + 1e-12 < self.lipschitz {
            return Err(Error::Hypothesis(format!(
                "declared Lipschitz constant {lipschitz} is below the builtin's {}",
                self.lipschitz
            )));
        }
        if (c1 - self.c1).abs() > 1e-12 * self.c1.max(1.0) {
            return Err(Error::Hypothesis(format!(
                "declared c1 = {c1} differs from |f(0)| = {}",
                self.c1
            )));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn delay_coefficient(&self) -> &DelayCoefficient {
        &self.b
    }

    pub fn b_matrix(&self) -> &DMatrix<f64> {
        &self.b_matrix
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nonlinear(&self) -> &NonlinearTerm {
        &self.nonlinear
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self.c1 = self.nonlinear.at_zero_norm(self.dim(), norm);
        self
    }

    /// The same linear part with `f = 0`.
    pub fn linear_part(&self) -> Self {
        Self {
            nonlinear: NonlinearTerm::Pointwise(Nonlinearity::ZERO),
            lipschitz: 0.0,
            c1: 0.0,
            ..self.clone()
        }
    }

    /// Right-hand side `A x + B xd + f(xd)`.
    pub(crate) fn rhs(&self, x: &[f64], delayed: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.a[(i, j)] * x[j] + self.b_matrix[(i, j)] * delayed[j];
            }
            out[i] = acc;
        }
        if !self.nonlinear.is_zero() {
            self.nonlinear.eval(delayed, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += s;
            }
        }
    }
}
