use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BallKind {
    /// The invariant absorbing ball of the existence theorem (needs `K0 < 1`).
    Theorem,
    /// The `t -> infinity` limit of the Gronwall estimate, valid for any
    /// `K0` but not invariant in general.
    Eventual,
}

/// Ball `{ |phi| <= R_B }` together with the constants that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorbingSet {
    pub radius: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub gamma: f64,
    pub lipschitz: f64,
    pub c1: f64,
    /// `K0 L_f - gamma < 0`.
    pub valid: bool,
    pub kind: BallKind,
}

fn check(k0: f64, gamma: f64, lf: f64, c1: f64) -> Result<()> {
    for (name, v) in [("K0", k0), ("gamma", gamma), ("L_f", lf), ("c1", c1)] {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must be finite, got {v}")));
        }
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    if lf < 0.0 || c1 < 0.0 {
        return Err(Error::InvalidInput("L_f and c1 must be nonnegative".into()));
    }
    let margin = k0 * lf - gamma;
    if margin >= 0.0 {
        return Err(Error::NoAbsorption { margin });
    }
    Ok(())
}

/// `R_B = 1/(1 - K0) [K0 L_f c1 / gamma + 1/(gamma - K0 L_f)]`.
pub fn absorbing_set(k0: f64, gamma: f64, lipschitz: f64, c1: f64) -> Result<AbsorbingSet> {
    if !(k0 > 0.0 && k0 < 1.0) {
        return Err(Error::Hypothesis(format!(
            "absorbing ball needs 0 < K0 < 1, got K0 = {k0}"
        )));
    }
    check(k0, gamma, lipschitz, c1)?;
    let radius = 1.0 / (1.0 - k0) * (k0 * lipschitz * c1 / gamma + 1.0 / (gamma - k0 * lipschitz));
    Ok(AbsorbingSet {
        radius,
        k0,
        gamma,
        lipschitz,
        c1,
        valid: true,
        kind: BallKind::Theorem,
    })
}

/// `K0 L_f c1 / gamma + 1/(gamma - K0 L_f)`, the bound the Gronwall
/// estimate approaches as `t -> infinity`.
pub fn eventual_ball(k0: f64, gamma: f64, lipschitz: f64, c1: f64) -> Result<AbsorbingSet> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidInput(format!("K0 must be positive, got {k0}")));
    }
    check(k0, gamma, lipschitz, c1)?;
    Ok(AbsorbingSet {
        radius: k0 * lipschitz * c1 / gamma + 1.0 / (gamma - k0 * lipschitz),
        k0,
        gamma,
        lipschitz,
        c1,
        valid: true,
        kind: BallKind::Eventual,
    })
}

impl AbsorbingSet {
    /// The radius re-evaluated from the stored constants.
    pub fn recompute(&self) -> f64 {
        let (k0, g, l, c) = (self.k0, self.gamma, self.lipschitz, self.c1);
        match self.kind {
            BallKind::Theorem => 1.0 / (1.0 - k0) * (k0 * l * c / g + 1.0 / (g - k0 * l)),
            BallKind::Eventual => k0 * l * c / g + 1.0 / (g - k0 * l),
        }
    }
}

/// Entry time into the ball for data of norm `r_d`:
/// `T_D = (1/gamma) ln[r_D gamma (1-K0)(gamma-K0 L_f) / (K0 L_f c1 (gamma-K0 L_f) + gamma)]`,
/// clamped at 0 when the data already lies inside.
///
/// For an eventual ball the same expression with `1 - K0` dropped is used,
/// which is `ln(r_D / R) / gamma` in both cases.
pub fn absorption_time(ball: &AbsorbingSet, r_d: f64) -> Result<f64> {
    if !(r_d > 0.0) || !r_d.is_finite() {
        return Err(Error::InvalidInput(format!("r_D must be positive, got {r_d}")));
    }
    let (k0, g, l, c) = (ball.k0, ball.gamma, ball.lipschitz, ball.c1);
    let shrink = match ball.kind {
        BallKind::Theorem => 1.0 - k0,
        BallKind::Eventual => 1.0,
    };
    let arg = r_d * g * shrink * (g - k0 * l) / (k0 * l * c * (g - k0 * l) + g);
    if !(arg > 1.0) {
        return Ok(0.0);
    }
    Ok(arg.ln() / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_example() {
        let b = absorbing_set(0.5, 1.0, 0.5, 0.0).unwrap();
        assert!((b.radius - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.radius, b.recompute());
    }

    #[test]
    fn linear_case() {
        let b = absorbing_set(0.25, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(b.radius, 1.0 / ((1.0 - 0.25) * 2.0));
    }

    #[test]
    fn hypothesis_gates() {
        assert!(absorbing_set(0.5, 1.0, 1.0, 0.0).is_ok());
        assert!(matches!(
            absorbing_set(0.5, 1.0, 3.0, 0.0),
            Err(Error::NoAbsorption { .. })
        ));
        assert!(matches!(absorbing_set(1.1, 1.0, 0.1, 0.0), Err(Error::Hypothesis(_))));
        assert!(matches!(absorbing_set(1.0, 1.0, 0.1, 0.0), Err(Error::Hypothesis(_))));
        assert!(absorbing_set(0.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn absorption_time_inverts_the_formula() {
        let b = absorbing_set(0.5, 1.0, 0.5, 0.0).unwrap();
        // numerator / denominator scaling of the log argument is 1 / R_B
        let r_d = std::f64::consts::E * b.radius;
        assert!((absorption_time(&b, r_d).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(absorption_time(&b, 0.5 * b.radius).unwrap(), 0.0);
        let t1 = absorption_time(&b, 10.0).unwrap();
        let t2 = absorption_time(&b, 20.0).unwrap();
        assert!((t2 - t1 - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn eventual_ball_accepts_large_k0() {
        let b = eventual_ball(1.6, 1.0, 0.1, 0.2).unwrap();
        assert_eq!(b.kind, BallKind::Eventual);
        assert_eq!(b.radius, b.recompute());
        let t = absorption_time(&b, 3.0 * b.radius).unwrap();
        assert!((t - 3.0f64.ln()).abs() < 1e-14);
    }
}
