use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

/// Where a constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed-form expression in other constants.
    Analytic,
    /// Supremum over a finite sample times a safety factor.
    SampledEstimate,
    /// Fixed by the theorem statement rather than derived here.
    #[serde(rename = "literal")]
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    /// Retarded functional differential equation `x' = A x + B x(t-r) + f`.
    Rfde,
    /// Reaction-diffusion with delay, one `k^2` shift per mode.
    Rrd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    General,
    Rfde,
    RfdeCorollary,
    Rrd,
    RrdCorollary,
}

/// Dichotomy and nonlinearity constants that feed a squeezing certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DichotomyInputs {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub gamma: f64,
    pub lipschitz: f64,
    pub rho1: f64,
    pub rho_m: f64,
    /// Dimension `k_m` of the spectral subspace.
    pub k_m: usize,
    pub provenance: Provenance,
}

impl DichotomyInputs {
    /// Reads the decay constants attached to `decomp`.
    pub fn from_decomposition(decomp: &SpectralDecomposition, lipschitz: f64) -> Result<Self> {
        let decay = decomp.decay().ok_or_else(|| {
            Error::InvalidInput("decomposition carries no decay constants; estimate them first".into())
        })?;
        Ok(Self {
            k: decay.k,
            k0: decay.k0,
            gamma: decay.gamma,
            lipschitz,
            rho1: decomp.rho1(),
            rho_m: decomp.rho_m(),
            k_m: decomp.k_m(),
            provenance: Provenance::SampledEstimate,
        })
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("K", self.k),
            ("K0", self.k0),
            ("gamma", self.gamma),
            ("L_f", self.lipschitz),
            ("rho_1", self.rho1),
            ("rho_m", self.rho_m),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite, got {v}")));
            }
        }
        if self.k <= 0.0 || self.k0 <= 0.0 || self.lipschitz < 0.0 {
            return Err(Error::InvalidInput(
                "K and K0 must be positive and L_f nonnegative".into(),
            ));
        }
        if self.k_m == 0 {
            return Err(Error::InvalidInput("k_m must be at least 1".into()));
        }
        Ok(())
    }
}

/// The `alpha`-independent part of a squeezing certificate:
/// `|P w_t| <= M1 e^{lambda0 t} |w_0|` and
/// `|(I-P) w_t| <= (M2 e^{lambda1 t} + M3 e^{lambda0 t}) |w_0|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingConstants {
    pub application: Application,
    /// `Lambda = k_m`.
    pub lambda_dim: usize,
    /// Constant used in the dimension bound, `K0 + K`.
    pub m1: f64,
    /// Constant appearing in the theorem statement.
    pub m1_literal: f64,
    pub m2: f64,
    pub m3: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub inputs: DichotomyInputs,
    pub provenance: ConstantProvenance,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantProvenance {
    pub m1: Provenance,
    pub m1_literal: Provenance,
    pub m2: Provenance,
    pub m3: Provenance,
    pub lambda0: Provenance,
    pub lambda1: Provenance,
}

/// A squeezing certificate at a particular `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingCertificate {
    #[serde(flatten)]
    pub constants: SqueezingConstants,
    pub alpha: f64,
    /// `alpha e^{lambda0} + M2 e^{lambda1} + M3 e^{lambda0}`.
    pub zeta: f64,
    pub admissible: bool,
}

fn denominator_guard(den: f64, scale: f64) -> Result<()> {
    if den.abs() <= 1e-12 * scale.max(1.0) {
        return Err(Error::Resonance { denominator: den });
    }
    Ok(())
}

impl SqueezingConstants {
    /// Constants for the delay equation: `lambda0 = L_f K0 - gamma`,
    /// `M2 = K`, `lambda1 = rho_m`, `M3 = K L_f K0 / (-gamma + L_f K0 - rho_m)`.
    pub fn rfde(inputs: DichotomyInputs) -> Result<Self> {
        inputs.validate()?;
        let DichotomyInputs {
            k,
            k0,
            gamma,
            lipschitz: lf,
            rho_m,
            ..
        } = inputs;
        let lambda0 = lf * k0 - gamma;
        let den = -gamma + lf * k0 - rho_m;
        denominator_guard(den, gamma.abs() + rho_m.abs())?;
        Ok(Self::assemble(Application::Rfde, inputs, lambda0, k * lf * k0 / den))
    }

    /// Constants for the reaction-diffusion application: `lambda0 = L_f + rho_1`,
    /// `M2 = K`, `lambda1 = rho_m`, `M3 = K L_f / (rho_1 + L_f - rho_m)`.
    pub fn rrd(inputs: DichotomyInputs) -> Result<Self> {
        inputs.validate()?;
        let DichotomyInputs {
            k,
            lipschitz: lf,
            rho1,
            rho_m,
            ..
        } = inputs;
        let lambda0 = lf + rho1;
        let den = rho1 + lf - rho_m;
        denominator_guard(den, rho1.abs() + rho_m.abs())?;
        Ok(Self::assemble(Application::Rrd, inputs, lambda0, k * lf / den))
    }

    fn assemble(application: Application, inputs: DichotomyInputs, lambda0: f64, m3: f64) -> Self {
        let mut notes = Vec::new();
        if m3 < 0.0 {
            notes.push(format!(
                "M3 = {m3} < 0: rho_m = {} exceeds lambda0 = {lambda0}, so the dropped e^(rho_m t) term is not negligible",
                inputs.rho_m
            ));
        }
        if lambda0 >= 0.0 {
            notes.push(format!("lambda0 = {lambda0} >= 0"));
        }
        if inputs.rho_m >= 0.0 {
            notes.push(format!("rho_m = {} >= 0", inputs.rho_m));
        }
        let sampled = inputs.provenance;
        Self {
            application,
            lambda_dim: inputs.k_m,
            m1: inputs.k0 + inputs.k,
            m1_literal: 2.0,
            m2: inputs.k,
            m3,
            lambda0,
            lambda1: inputs.rho_m,
            inputs,
            provenance: ConstantProvenance {
                m1: sampled,
                m1_literal: Provenance::Literal,
                m2: sampled,
                m3: sampled,
                lambda0: match application {
                    Application::Rfde => sampled,
                    Application::Rrd => Provenance::Analytic,
                },
                lambda1: Provenance::Analytic,
            },
            notes,
        }
    }

    /// `M2 e^{lambda1} + M3 e^{lambda0}`, the part of `zeta` that does not
    /// depend on `alpha`.
    pub fn zeta_floor(&self) -> f64 {
        self.m2 * self.lambda1.exp() + self.m3 * self.lambda0.exp()
    }

    pub fn zeta(&self, alpha: f64) -> f64 {
        alpha * self.lambda0.exp() + self.zeta_floor()
    }

    /// Structural preconditions other than `zeta < 1`.
    pub fn structurally_admissible(&self) -> bool {
        self.lambda0 < 0.0 && self.lambda1 < 0.0 && self.m3 >= 0.0
    }

    pub fn certificate(&self, alpha: f64) -> Result<SqueezingCertificate> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
        }
        let zeta = self.zeta(alpha);
        Ok(SqueezingCertificate {
            constants: self.clone(),
            alpha,
            zeta,
            admissible: zeta < 1.0 && self.structurally_admissible(),
        })
    }
}

/// Certificate for a delay equation from a decomposition with decay constants.
pub fn squeezing_certificate(
    decomp: &SpectralDecomposition,
    lipschitz: f64,
    alpha: f64,
) -> Result<SqueezingCertificate> {
    SqueezingConstants::rfde(DichotomyInputs::from_decomposition(decomp, lipschitz)?)?.certificate(alpha)
}

/// `Lambda [ln Lambda + ln(2 + M1/alpha)] / (-ln zeta)`.
pub fn general_bound(lambda_dim: usize, m1: f64, alpha: f64, zeta: f64) -> Result<f64> {
    if !(zeta < 1.0) {
        return Err(Error::Inadmissible { zeta });
    }
    if !(zeta > 0.0) || !(alpha > 0.0) || !(m1 >= 0.0) || lambda_dim == 0 {
        return Err(Error::InvalidInput(format!(
            "need zeta in (0,1), alpha > 0, M1 >= 0, Lambda >= 1; got zeta = {zeta}, alpha = {alpha}, M1 = {m1}, Lambda = {lambda_dim}"
        )));
    }
    let l = lambda_dim as f64;
    Ok(l * (l.ln() + (2.0 + m1 / alpha).ln()) / -zeta.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionBoundReport {
    pub formula: FormulaId,
    /// Bound with `M1 = K0 + K`.
    pub bound: f64,
    /// Bound with the literal `M1 = 2`.
    pub bound_literal: f64,
    pub lambda_dim: usize,
    pub m1: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub admissible: bool,
    pub notes: Vec<String>,
}

/// Fractal-dimension bound for an admissible certificate.
pub fn dimension_bound(cert: &SqueezingCertificate) -> Result<DimensionBoundReport> {
    let c = &cert.constants;
    if !(cert.zeta < 1.0) {
        return Err(Error::Inadmissible { zeta: cert.zeta });
    }
    if !c.structurally_admissible() {
        return Err(Error::Hypothesis(format!(
            "certificate preconditions fail: {}",
            c.notes.join("; ")
        )));
    }
    Ok(DimensionBoundReport {
        formula: match c.application {
            Application::Rfde => FormulaId::Rfde,
            Application::Rrd => FormulaId::Rrd,
        },
        bound: general_bound(c.lambda_dim, c.m1, cert.alpha, cert.zeta)?,
        bound_literal: general_bound(c.lambda_dim, c.m1_literal, cert.alpha, cert.zeta)?,
        lambda_dim: c.lambda_dim,
        m1: c.m1,
        alpha: cert.alpha,
        zeta: cert.zeta,
        admissible: cert.admissible,
        notes: c.notes.clone(),
    })
}

fn corollary(alpha: f64, k: f64, exponent: f64, rho1: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(k > 0.0) {
        return Err(Error::InvalidInput("alpha and K must be positive".into()));
    }
    let zeta = (alpha + k) * exponent.exp() + k * rho1.exp();
    if !(zeta < 1.0) {
        return Err(Error::Inadmissible { zeta });
    }
    Ok((2.0 + 2.0 / alpha).ln() / -zeta.ln())
}

/// One-dimensional delay-equation bound
/// `ln(2 + 2/alpha) / -ln[(alpha + K) e^{L_f K0 + rho_1} + K e^{rho_1}]`.
pub fn rfde_corollary_bound(alpha: f64, k: f64, k0: f64, lipschitz: f64, rho1: f64) -> Result<f64> {
    corollary(alpha, k, lipschitz * k0 + rho1, rho1)
}

/// One-mode reaction-diffusion bound
/// `ln(2 + 2/alpha) / -ln[(alpha + K) e^{L_f + rho_1} + K e^{rho_1}]`.
pub fn rrd_corollary_bound(alpha: f64, k: f64, lipschitz: f64, rho1: f64) -> Result<f64> {
    corollary(alpha, k, lipschitz + rho1, rho1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(k: f64, k0: f64, gamma: f64, lf: f64, rho1: f64, rho_m: f64, k_m: usize) -> DichotomyInputs {
        DichotomyInputs {
            k,
            k0,
            gamma,
            lipschitz: lf,
            rho1,
            rho_m,
            k_m,
            provenance: Provenance::Analytic,
        }
    }

    #[test]
    fn bound_arithmetic() {
        let ln3_over_ln2 = 3f64.ln() / 2f64.ln();
        assert!((general_bound(1, 2.0, 2.0, 0.5).unwrap() - ln3_over_ln2).abs() < 1e-14);
        assert!((general_bound(2, 2.0, 2.0, 0.5).unwrap() - 2.0 * (2f64.ln() + 3f64.ln()) / 2f64.ln()).abs() < 1e-14);
        assert!(matches!(
            general_bound(1, 2.0, 1.0, 1.0),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn rfde_m3_example() {
        let c = SqueezingConstants::rfde(inputs(1.0, 1.0, 1.0, 0.5, -1.0, -3.0, 1)).unwrap();
        assert!((c.m3 - 0.2).abs() < 1e-15);
        assert_eq!(c.lambda0, -0.5);
        assert_eq!(c.m1, 2.0);
    }

    #[test]
    fn linear_case_constants() {
        let c = SqueezingConstants::rfde(inputs(1.3, 1.1, 0.7, 0.0, -0.8, -2.0, 2)).unwrap();
        assert_eq!(c.m3, 0.0);
        assert_eq!(c.lambda0, -0.7);
        let z = c.certificate(0.3).unwrap().zeta;
        assert_eq!(z, 0.3 * (-0.7f64).exp() + 1.3 * (-2.0f64).exp());
    }

    #[test]
    fn quarter_lipschitz_example() {
        let c = SqueezingConstants::rfde(inputs(1.0, 1.0, 1.0, 0.25, -1.0, -2.0, 1)).unwrap();
        assert_eq!(c.lambda0, -0.75);
        assert!((c.m3 - 0.2).abs() < 1e-15);
        let alpha = 0.1;
        let expected = alpha * (-0.75f64).exp() + (-2.0f64).exp() + c.m3 * (-0.75f64).exp();
        assert!((c.certificate(alpha).unwrap().zeta - expected).abs() < 1e-16);
    }

    #[test]
    fn ln64_example() {
        let b = general_bound(2, 2.0, 1.0, (-1.0f64).exp()).unwrap();
        assert!((b - 64f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bound_ladders_are_monotone() {
        let zetas: Vec<f64> = (1..50).map(|i| 1.0 - 0.5f64.powi(i)).collect();
        let ladder: Vec<f64> = zetas.iter().map(|&z| general_bound(1, 2.0, 1.0, z).unwrap()).collect();
        assert!(ladder.windows(2).all(|w| w[1] > w[0]));
        assert!(*ladder.last().unwrap() > 1e14);
        let alphas: Vec<f64> = (0..40).map(|i| 0.01 * 1.2f64.powi(i)).collect();
        let ladder: Vec<f64> = alphas.iter().map(|&a| general_bound(3, 2.5, a, 0.4).unwrap()).collect();
        assert!(ladder.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn resonance_detected() {
        let r = SqueezingConstants::rfde(inputs(1.0, 1.0, 1.0, 0.5, -0.5, -0.5, 1));
        assert!(matches!(r, Err(Error::Resonance { .. })));
        let r = SqueezingConstants::rrd(inputs(1.0, 1.0, 1.0, 0.5, -1.0, -0.5, 1));
        assert!(matches!(r, Err(Error::Resonance { .. })));
    }

    #[test]
    fn m3_sign_follows_the_gap() {
        // denominator lambda0 - rho_m is positive exactly when rho_m < lambda0
        let pos = SqueezingConstants::rfde(inputs(1.0, 1.0, 1.0, 0.5, -1.0, -0.8, 1)).unwrap();
        assert!(pos.m3 > 0.0 && pos.structurally_admissible());
        let neg = SqueezingConstants::rfde(inputs(1.0, 1.0, 1.0, 0.5, -0.1, -0.2, 1)).unwrap();
        assert!(neg.m3 < 0.0 && !neg.structurally_admissible());
        assert!(!neg.notes.is_empty());
    }

    #[test]
    fn corollary_matches_general_form() {
        // gamma = -rho_1 and m = 1 make M3 = K and lambda0 = L_f K0 + rho_1
        let (k, k0, lf, rho1, alpha) = (1.2, 1.5, 0.05, -3.0, 0.4);
        let c = SqueezingConstants::rfde(inputs(k, k0, -rho1, lf, rho1, rho1, 1)).unwrap();
        let cert = c.certificate(alpha).unwrap();
        let general = general_bound(1, c.m1_literal, alpha, cert.zeta).unwrap();
        let cor = rfde_corollary_bound(alpha, k, k0, lf, rho1).unwrap();
        assert!((general - cor).abs() <= 1e-12 * cor);

        let c = SqueezingConstants::rrd(inputs(k, 1.0, 1.0, lf, rho1, rho1, 1)).unwrap();
        let cert = c.certificate(alpha).unwrap();
        let general = general_bound(1, 2.0, alpha, cert.zeta).unwrap();
        let cor = rrd_corollary_bound(alpha, k, lf, rho1).unwrap();
        assert!((general - cor).abs() <= 1e-12 * cor);
    }

    #[test]
    fn inadmissible_certificate_reports_zeta() {
        let c = SqueezingConstants::rfde(inputs(1.0, 1.0, 0.1, 0.05, -0.1, -0.2, 1)).unwrap();
        let cert = c.certificate(1.0).unwrap();
        assert!(!cert.admissible);
        assert!(matches!(dimension_bound(&cert), Err(Error::Inadmissible { zeta }) if zeta == cert.zeta));
    }

    #[test]
    fn provenance_serializes() {
        let c = SqueezingConstants::rfde(inputs(1.0, 1.0, 1.0, 0.5, -1.0, -3.0, 1)).unwrap();
        let v = serde_json::to_value(c.certificate(1.0).unwrap()).unwrap();
        assert_eq!(v["provenance"]["m1_literal"], "literal");
        assert_eq!(v["provenance"]["lambda1"], "analytic");
        assert_eq!(v["application"], "rfde");
        assert!(v["zeta"].is_number());
    }
}
