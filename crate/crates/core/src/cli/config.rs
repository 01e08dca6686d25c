use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::{ClassifierConfig, LimitMode, LimitStudy};
use crate::descriptor::ObjectiveDescriptor;
use crate::optimizers::{rates_to_momenta, HyperParams, OptimizerKind, RateParams, DEFAULT_EPSILON};
use crate::sweep::SweepConfig;

/// Hyper-parameters given either as momentum factors `{alpha, beta}` or as
/// rates `{a, b}`, never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl HyperConfig {
    pub fn resolve(&self, kind: OptimizerKind) -> Result<HyperParams, CliError> {
        let eps = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        let momenta = self.alpha.is_some() || self.beta.is_some();
        let rates = self.a.is_some() || self.b.is_some();
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("{kind} needs `{name}`")))
        };
        let hp = match (momenta, rates) {
            (true, true) => {
                return Err(CliError::Config("give either {alpha, beta} or {a, b}, not both".into()))
            }
            (false, true) => {
                let a = need("a", self.a)?;
                if kind == OptimizerKind::Adam {
                    HyperParams::from_rates(RateParams { a, b: need("b", self.b)?, eta: self.eta }, eps)?
                } else {
                    // beta is unused here, so b only has to be valid if given
                    let (alpha, _) = rates_to_momenta(RateParams { a, b: self.b.unwrap_or(0.0), eta: self.eta })?;
                    HyperParams::new(self.eta, alpha, 0.0, eps)?
                }
            }
            _ => {
                let (alpha, beta) = match kind {
                    OptimizerKind::Adam => (need("alpha", self.alpha)?, need("beta", self.beta)?),
                    OptimizerKind::RmsProp => (need("alpha", self.alpha)?, self.beta.unwrap_or(0.0)),
                    _ => (self.alpha.unwrap_or(0.0), self.beta.unwrap_or(0.0)),
                };
                HyperParams::new(self.eta, alpha, beta, eps)?
            }
        };
        Ok(hp)
    }
}

fn yes() -> bool {
    true
}

/// Configuration of `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub objective: ObjectiveDescriptor,
    pub optimizer: OptimizerKind,
    pub hyper: HyperConfig,
    pub n_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub record_states: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

/// Configuration of `compare-ode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub objective: ObjectiveDescriptor,
    pub optimizer: OptimizerKind,
    pub limit: LimitMode,
    pub etas: Vec<f64>,
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ratio: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl CompareConfig {
    pub fn study(&self, x0: Vec<f64>) -> LimitStudy {
        LimitStudy {
            optimizer: self.optimizer,
            mode: self.limit,
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            x0,
            horizon: self.horizon,
            h_ratio: self.h_ratio.unwrap_or(10.0),
        }
    }
}

/// Configuration of `sweep`: a [`SweepConfig`] plus the output path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFileConfig {
    #[serde(flatten)]
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_h() -> f64 {
    1e-5
}

/// Configuration of `grad-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradCheckConfig {
    pub objective: ObjectiveDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub seed: u64,
}
