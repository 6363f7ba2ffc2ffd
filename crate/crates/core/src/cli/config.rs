//! JSON run configurations, one per subcommand. Unknown keys are rejected.

use serde::Deserialize;

use crate::decomp::{Mode, SeparableFunction};
use crate::index::IndexVector;
use crate::regress::KernelConfig;
use crate::weights::{GammaModel, WeightSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dims {
    #[default]
    AllOne,
    Spline,
}

/// Explicit finiteness certificate for weight pairs without one of their own.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCertificate {
    pub max_coord: u32,
    pub max_level: u32,
    #[serde(default)]
    pub monotone: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsDimConfig {
    pub a: WeightSpec,
    #[serde(default = "unit_weights")]
    pub b: WeightSpec,
    #[serde(default)]
    pub dims: Dims,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub d: Vec<u32>,
    #[serde(default)]
    pub certificate: Option<BoxCertificate>,
    #[serde(default)]
    pub allow_truncation: bool,
}

fn unit_weights() -> WeightSpec {
    WeightSpec::Unit {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBox {
    pub max_coord: u32,
    pub max_level: u32,
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox {
            max_coord: 3,
            max_level: 3,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub a: WeightSpec,
    /// Indices to tabulate; defaults to the support of `a` inside `search`.
    #[serde(default)]
    pub indices: Option<Vec<IndexVector>>,
    #[serde(default)]
    pub search: SearchBox,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompConfig {
    pub function: SeparableFunction,
    pub gamma: GammaModel,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivConfig {
    pub gamma: GammaModel,
    /// Auxiliary weights; default `q_tilde^|omega| sqrt(gamma_omega)`.
    #[serde(default)]
    pub alpha: Option<GammaModel>,
    #[serde(default = "one")]
    pub q_tilde: f64,
    /// Defaults to the kernel constant of the anchor.
    #[serde(default)]
    pub q: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolConfig {
    pub function: SeparableFunction,
    pub gamma: GammaModel,
    pub mode: Mode,
    #[serde(default)]
    pub include_empty: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncateConfig {
    pub function: SeparableFunction,
    pub gamma: GammaModel,
    pub mode: Mode,
    /// Defaults to `0..=dim`.
    #[serde(default)]
    pub m: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Lambdas {
    Shared(f64),
    PerOutput(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressConfig {
    /// CSV with `x*` and `y*` columns, relative to the config file.
    pub samples: String,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    pub lambda: Lambdas,
    /// Fraction of samples held out for the RMSE.
    #[serde(default = "holdout")]
    pub holdout: f64,
    #[serde(default)]
    pub seed: u64,
}

fn holdout() -> f64 {
    0.2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let ok = r#"{"a": {"type": "unit"}, "eps": [0.5]}"#;
        assert!(serde_json::from_str::<EpsDimConfig>(ok).is_ok());
        let bad = r#"{"a": {"type": "unit"}, "eps": [0.5], "epsilon": 1}"#;
        assert!(serde_json::from_str::<EpsDimConfig>(bad).is_err());
        assert!(serde_json::from_str::<EquivConfig>("").is_err());
        let r = r#"{"samples": "s.csv", "lambda": [0.1, 0.2], "seed": 3}"#;
        let r: RegressConfig = serde_json::from_str(r).unwrap();
        assert!(matches!(r.lambda, Lambdas::PerOutput(ref v) if v.len() == 2));
        assert_eq!(r.holdout, 0.2);
    }
}
