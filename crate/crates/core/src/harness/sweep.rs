use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentResult, HarnessError, RunConfig};

/// Hyperparameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Template gap `τ̂`.
    UserGap,
    /// Model gap `Γ`.
    ModelGap,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::UserGap => "user_gap",
            SweepParam::ModelGap => "model_gap",
        }
    }

    pub fn apply(self, config: &mut RunConfig, value: f64) {
        match self {
            SweepParam::UserGap => config.hyper.user_gap = value,
            SweepParam::ModelGap => config.hyper.model_gap = value,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "user_gap" | "user-gap" | "tau" => Ok(SweepParam::UserGap),
            "model_gap" | "model-gap" | "gamma-model" => Ok(SweepParam::ModelGap),
            other => Err(format!("cannot sweep {other:?}; use user_gap or model_gap")),
        }
    }
}

/// One full experiment per value, all on the same seeds.
pub fn sweep(
    config: &RunConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<(f64, ExperimentResult)>, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config {
            field: param.as_str().into(),
            message: "sweep needs at least one value".into(),
        });
    }
    values
        .iter()
        .map(|&v| {
            let mut c = config.clone();
            param.apply(&mut c, v);
            run_experiment(&c).map(|r| (v, r))
        })
        .collect()
}
