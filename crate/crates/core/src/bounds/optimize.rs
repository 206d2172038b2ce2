use serde::Serialize;

use super::certificate::{
    dimension_bound, DichotomyInputs, DimensionBoundReport, SqueezingCertificate, SqueezingConstants,
};
use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

const GRID_POINTS: usize = 200;
/// Relative tolerance of the golden-section refinement in `ln alpha`.
const REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaOptimum {
    pub alpha: f64,
    pub certificate: SqueezingCertificate,
    pub report: DimensionBoundReport,
    /// Best bound found on the coarse grid, before refinement.
    pub grid_bound: f64,
    /// Feasible range `(0, alpha_max)` with `zeta(alpha_max) = 1`.
    pub alpha_max: f64,
}

/// Minimizes the dimension bound over `alpha` for a delay equation.
pub fn optimize_alpha(decomp: &SpectralDecomposition, lipschitz: f64) -> Result<AlphaOptimum> {
    optimize_alpha_with(&SqueezingConstants::rfde(DichotomyInputs::from_decomposition(
        decomp, lipschitz,
    )?)?)
}

/// Minimizes `Lambda [ln Lambda + ln(2 + M1/alpha)] / -ln zeta(alpha)` over
/// the feasible interval: a log-spaced grid followed by golden-section search
/// around the best grid point.
pub fn optimize_alpha_with(constants: &SqueezingConstants) -> Result<AlphaOptimum> {
    optimize_alpha_on_grid(constants, GRID_POINTS)
}

pub fn optimize_alpha_on_grid(constants: &SqueezingConstants, grid_points: usize) -> Result<AlphaOptimum> {
    if grid_points < 3 {
        return Err(Error::InvalidInput("alpha grid needs at least 3 points".into()));
    }
    let floor = constants.zeta_floor();
    if !(floor < 1.0) {
        return Err(Error::Infeasible { min_zeta: floor });
    }
    if !constants.structurally_admissible() {
        return Err(Error::Hypothesis(format!(
            "certificate preconditions fail: {}",
            constants.notes.join("; ")
        )));
    }
    let alpha_max = (1.0 - floor) / constants.lambda0.exp();
    let objective = |log_alpha: f64| -> f64 {
        let alpha = log_alpha.exp();
        let zeta = constants.zeta(alpha);
        if !(zeta < 1.0) {
            return f64::INFINITY;
        }
        let l = constants.lambda_dim as f64;
        l * (l.ln() + (2.0 + constants.m1 / alpha).ln()) / -zeta.ln()
    };

    let lo = (alpha_max * 1e-8).ln();
    let hi = (alpha_max * (1.0 - 1e-9)).ln();
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_points - 1) as f64)
        .collect();
    let (best, grid_bound) = grid
        .iter()
        .map(|&x| objective(x))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if !grid_bound.is_finite() {
        return Err(Error::NoConvergence(
            "dimension bound is infinite on the whole alpha grid".into(),
        ));
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid_points - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while (b - a).abs() > REFINE_TOL * a.abs().max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
    }
    let refined = 0.5 * (a + b);
    let log_alpha = if objective(refined) <= grid_bound {
        refined
    } else {
        grid[best]
    };
    let alpha = log_alpha.exp();
    let certificate = constants.certificate(alpha)?;
    let report = dimension_bound(&certificate)?;
    Ok(AlphaOptimum {
        alpha,
        certificate,
        report,
        grid_bound,
        alpha_max,
    })
}
