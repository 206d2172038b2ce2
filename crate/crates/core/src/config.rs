//! TOML model files.
//!
//! ```toml
//! kind = "rfde"
//! n = 1
//! A = [-5.0]          # row-major
//! b = 0.5             # scalar (times identity) or row-major n x n list
//! tau = 0.5
//! nonlinearity = { name = "scaled_tanh", params = { k = 0.1 }, bias = 0.05 }
//!
//! [analysis]
//! cut_m = 1
//! seed = 1
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dde::{DelayCoefficient, DelayModel, NonlinearTerm, Nonlinearity, NormKind};
use crate::error::{Error, Result};
use crate::rds::{RdModel, DEFAULT_MODES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DelayInput {
    Scalar(f64),
    Matrix(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfdeConfig {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: DelayInput,
    pub tau: f64,
    pub nonlinearity: Nonlinearity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default)]
    pub norm: NormKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrdConfig {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub nonlinearity: Nonlinearity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
}

fn default_modes() -> usize {
    DEFAULT_MODES
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Rfde(RfdeConfig),
    Rrd(RrdConfig),
}

/// Numerical parameters shared by the analysis commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub cut_m: usize,
    pub seed: u64,
    /// Random segments used for the dichotomy constants.
    pub samples: usize,
    pub gamma_fraction: f64,
    pub safety_factor: f64,
    /// Integration step; `None` picks a divisor of the delay near `1e-3`.
    pub step: Option<f64>,
    /// Fixed `alpha`; `None` optimizes it.
    pub alpha: Option<f64>,
    /// Trajectory pairs for the squeezing check.
    pub pairs: usize,
    /// Horizon of the squeezing check in delays.
    pub horizon_delays: f64,
    pub slack: f64,
    /// `gamma` of the reaction-diffusion dissipativity check.
    pub dissipativity_gamma: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            cut_m: 1,
            seed: 1,
            samples: 50,
            gamma_fraction: 0.9,
            safety_factor: 1.1,
            step: None,
            alpha: None,
            pairs: 100,
            horizon_delays: 5.0,
            slack: 0.05,
            dissipativity_gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fixture {
    #[serde(flatten)]
    pub model: ModelConfig,
    pub analysis: AnalysisConfig,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn typed<T: serde::de::DeserializeOwned>(value: toml::Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            prefix.trim_end_matches('.').to_string()
        } else {
            format!("{prefix}{path}")
        };
        config_err(
            if path.is_empty() {
                "<document>".to_string()
            } else {
                path
            },
            e.into_inner().message(),
        )
    })
}

impl Fixture {
    pub fn parse(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| config_err("<document>", e.message()))?;
        let kind = value
            .get("kind")
            .ok_or_else(|| config_err("kind", "missing field"))?
            .as_str()
            .ok_or_else(|| config_err("kind", "expected a string"))?
            .to_string();
        if kind != "rfde" && kind != "rrd" {
            return Err(config_err(
                "kind",
                format!("unknown model kind `{kind}` (expected rfde or rrd)"),
            ));
        }
        let mut table = match value {
            toml::Value::Table(t) => t,
            _ => return Err(config_err("<document>", "expected a table")),
        };
        table.remove("kind");
        let analysis = match table.remove("analysis") {
            Some(v) => typed::<AnalysisConfig>(v, "analysis.")?,
            None => AnalysisConfig::default(),
        };
        let rest = toml::Value::Table(table);
        let model = if kind == "rfde" {
            ModelConfig::Rfde(typed(rest, "")?)
        } else {
            ModelConfig::Rrd(typed(rest, "")?)
        };
        let fixture = Fixture { model, analysis };
        fixture.validate()?;
        Ok(fixture)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let a = &self.analysis;
        if a.cut_m == 0 {
            return Err(config_err("analysis.cut_m", "must be at least 1"));
        }
        if a.samples == 0 || a.pairs == 0 {
            return Err(config_err(
                "analysis.samples",
                "sample and pair counts must be positive",
            ));
        }
        if !(a.gamma_fraction > 0.0 && a.gamma_fraction <= 1.0) {
            return Err(config_err("analysis.gamma_fraction", "must lie in (0, 1]"));
        }
        if !(a.safety_factor >= 1.0) {
            return Err(config_err("analysis.safety_factor", "must be at least 1"));
        }
        if !(a.slack >= 0.0) {
            return Err(config_err("analysis.slack", "must be nonnegative"));
        }
        if !(a.horizon_delays > 0.0) {
            return Err(config_err("analysis.horizon_delays", "must be positive"));
        }
        if matches!(a.alpha, Some(x) if !(x > 0.0)) {
            return Err(config_err("analysis.alpha", "must be positive"));
        }
        if matches!(a.step, Some(x) if !(x > 0.0)) {
            return Err(config_err("analysis.step", "must be positive"));
        }
        match &self.model {
            ModelConfig::Rfde(c) => {
                if c.n == 0 {
                    return Err(config_err("n", "must be at least 1"));
                }
                if c.a.len() != c.n * c.n {
                    return Err(config_err(
                        "A",
                        format!("expected {} entries, got {}", c.n * c.n, c.a.len()),
                    ));
                }
                if let DelayInput::Matrix(m) = &c.b {
                    if m.len() != c.n * c.n {
                        return Err(config_err(
                            "b",
                            format!("expected a scalar or {} entries, got {}", c.n * c.n, m.len()),
                        ));
                    }
                }
                if !(c.tau > 0.0) {
                    return Err(config_err("tau", "must be positive"));
                }
            }
            ModelConfig::Rrd(c) => {
                if !(c.a > 0.0) {
                    return Err(config_err("a", "must be positive"));
                }
                if !(c.b >= 0.0) {
                    return Err(config_err("b", "must be nonnegative"));
                }
                if !(c.r > 0.0) {
                    return Err(config_err("r", "must be positive"));
                }
                if c.n_modes == 0 {
                    return Err(config_err("n_modes", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn delay(&self) -> f64 {
        match &self.model {
            ModelConfig::Rfde(c) => c.tau,
            ModelConfig::Rrd(c) => c.r,
        }
    }
}

impl RfdeConfig {
    pub fn build(&self) -> Result<DelayModel> {
        let n = self.n;
        let a = DMatrix::from_row_slice(n, n, &self.a);
        let b = match &self.b {
            DelayInput::Scalar(s) => DelayCoefficient::Scalar(*s),
            DelayInput::Matrix(m) => DelayCoefficient::Matrix(DMatrix::from_row_slice(n, n, m)),
        };
        let model = DelayModel::new(a, b, self.tau, NonlinearTerm::Pointwise(self.nonlinearity), self.norm)?;
        let lipschitz = self.lipschitz.unwrap_or(model.lipschitz());
        let c1 = self.c1.unwrap_or(model.c1());
        model.with_declared_constants(lipschitz, c1)
    }
}

impl RrdConfig {
    pub fn build(&self) -> Result<RdModel> {
        let mut model = RdModel::new(self.a, self.b, self.r, self.nonlinearity, self.n_modes)?;
        if let Some(l) = self.lipschitz {
            model = model.with_lipschitz(l)?;
        }
        if let Some(c1) = self.c1 {
            if (c1 - model.c1).abs() > 1e-12 * model.c1.max(1.0) {
                return Err(Error::Hypothesis(format!(
                    "declared c1 = {c1} differs from |f(0)| = {}",
                    model.c1
                )));
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::Builtin;

    const RFDE: &str = r#"
kind = "rfde"
n = 2
A = [-3.0, 0.5, 0.0, -4.0]
b = [0.2, 0.0, 0.1, 0.3]
tau = 1.0
nonlinearity = { name = "clipped_cubic", params = { k = 0.1, cap = 1.0 } }
norm = "euclidean"

[analysis]
cut_m = 2
seed = 9
"#;

    #[test]
    fn parses_a_matrix_model() {
        let f = Fixture::parse(RFDE).unwrap();
        assert_eq!(f.analysis.cut_m, 2);
        assert_eq!(f.analysis.samples, 50);
        let ModelConfig::Rfde(c) = &f.model else { panic!() };
        let m = c.build().unwrap();
        assert_eq!(m.a()[(0, 1)], 0.5);
        assert_eq!(m.b_matrix()[(1, 0)], 0.1);
        assert!((m.lipschitz() - 0.3).abs() < 1e-15);
        assert_eq!(m.norm(), NormKind::Euclidean);
    }

    #[test]
    fn parses_a_reaction_diffusion_model() {
        let f =
            Fixture::parse("kind = \"rrd\"\na = 1.0\nb = 0.5\nr = 0.5\nnonlinearity = { name = \"zero\" }\n").unwrap();
        let ModelConfig::Rrd(c) = &f.model else { panic!() };
        let m = c.build().unwrap();
        assert_eq!(m.n_modes, DEFAULT_MODES);
        assert_eq!(m.nonlinearity.builtin, Builtin::Zero);
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        let e = Fixture::parse(&RFDE.replace("tau = 1.0", "tau = \"x\"")).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "tau"), "{e:?}");
        let e = Fixture::parse(&RFDE.replace("seed = 9", "seed = 9\nbogus = 1")).unwrap_err();
        assert!(
            matches!(&e, Error::Config { path, .. } if path.starts_with("analysis")),
            "{e:?}"
        );
        let e = Fixture::parse(&RFDE.replace("A = [-3.0, 0.5, 0.0, -4.0]", "A = [-3.0]")).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "A"));
        let e = Fixture::parse("kind = \"pde\"").unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "kind"));
        let e = Fixture::parse("kind = ").unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "<document>"));
    }

    #[test]
    fn round_trips_through_serialization() {
        let f = Fixture::parse(RFDE).unwrap();
        let text = toml::to_string(&f).unwrap();
        assert_eq!(Fixture::parse(&text).unwrap(), f);
    }

    #[test]
    fn declared_lipschitz_below_builtin_is_rejected() {
        let f =
            Fixture::parse(&RFDE.replace("norm = \"euclidean\"", "norm = \"euclidean\"\nlipschitz = 0.01")).unwrap();
        let ModelConfig::Rfde(c) = &f.model else { panic!() };
        assert!(matches!(c.build(), Err(Error::Hypothesis(_))));
    }
}
