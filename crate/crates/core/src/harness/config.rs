//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{LevelRule, Method, RateParams, VarianceModel};
use crate::model::ProblemSpec;

use super::presets::Preset;
use super::reference::{is_zero_mean, ReferenceMode, DEFAULT_REFERENCE_EPSILON};

/// A preset name or a full problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemConfig {
    Preset(Preset),
    Spec(ProblemSpec),
}

impl ProblemConfig {
    pub fn problem(&self) -> ProblemSpec {
        match self {
            ProblemConfig::Preset(p) => p.problem(),
            ProblemConfig::Spec(s) => s.clone(),
        }
    }
}

/// Overrides of the default rates `B = (min(kappa, 1), kappa nu)`,
/// `alpha = B / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RateConfig {
    #[serde(default = "one")]
    pub kappa: f64,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    #[serde(default)]
    pub level_rule: LevelRule,
    /// `(theta, upsilon)` of the mixed variance model.
    pub mixed: Option<(f64, f64)>,
}

fn one() -> f64 {
    1.0
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            b1: None,
            b2: None,
            alpha1: None,
            alpha2: None,
            level_rule: LevelRule::Plain,
            mixed: None,
        }
    }
}

impl RateConfig {
    pub fn rates(&self, problem: &ProblemSpec) -> Result<RateParams> {
        let mut r = RateParams::for_problem(problem, self.kappa);
        if let Some(b) = self.b1 {
            r.b1 = b;
            r.alpha1 = b / 2.0;
        }
        if let Some(b) = self.b2 {
            r.b2 = b;
            r.alpha2 = b / 2.0;
        }
        r.alpha1 = self.alpha1.unwrap_or(r.alpha1);
        r.alpha2 = self.alpha2.unwrap_or(r.alpha2);
        r.level_rule = self.level_rule;
        r.validate()?;
        Ok(r)
    }

    pub fn mixed_model(&self) -> Option<VarianceModel> {
        self.mixed.map(|(theta, upsilon)| VarianceModel::Mixed { theta, upsilon })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SurfaceConfig {
    #[serde(default = "default_max_level")]
    pub max_level: usize,
    #[serde(default = "default_samples")]
    pub samples: u64,
}

fn default_max_level() -> usize {
    5
}

fn default_samples() -> u64 {
    1000
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            max_level: default_max_level(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    #[serde(default)]
    pub rates: RateConfig,
    /// Base seed per replicate.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budget_cap: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub surface: SurfaceConfig,
    /// Defaults to the exact zero for centred problems and a MIMC
    /// pseudo-reference otherwise.
    #[serde(default)]
    pub reference: Option<ReferenceMode>,
    #[serde(default)]
    pub deterministic: bool,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Mimc1, Method::Mlmc]
}

fn default_epsilons() -> Vec<f64> {
    (2..=5).map(|k| (-(k as f64)).exp2()).collect()
}

fn default_replicates() -> u32 {
    1
}

impl ExperimentConfig {
    pub fn for_preset(preset: Preset) -> Self {
        Self {
            problem: ProblemConfig::Preset(preset),
            methods: default_methods(),
            epsilons: default_epsilons(),
            replicates: default_replicates(),
            rates: RateConfig::default(),
            seeds: Vec::new(),
            budget_cap: None,
            output_dir: None,
            surface: SurfaceConfig::default(),
            reference: None,
            deterministic: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.problem().validate()?;
        if let Some(&e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::config(format!("tolerances must lie in (0, 1), got {e}")));
        }
        if let Some(cap) = self.budget_cap {
            if !(cap > 0.0) {
                return Err(Error::config(format!("budget cap must be positive, got {cap}")));
            }
        }
        if self.methods.contains(&Method::MimcMixed) && self.rates.mixed.is_none() {
            return Err(Error::config("MIMC-mixed needs rates.mixed = [theta, upsilon]"));
        }
        self.rates.rates(&self.problem.problem())?;
        Ok(())
    }

    pub fn reference_mode(&self) -> ReferenceMode {
        self.reference.unwrap_or_else(|| {
            if is_zero_mean(&self.problem.problem()) {
                ReferenceMode::ExactZero
            } else {
                ReferenceMode::PseudoMimc(DEFAULT_REFERENCE_EPSILON)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"problem": "linear-nu4/3"}"#).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.problem.problem(), Preset::LinearNu4_3.problem());
        assert_eq!(cfg.reference_mode(), ReferenceMode::ExactZero);
        assert_eq!(cfg.epsilons.len(), 4);
    }

    #[test]
    fn full_config() {
        let text = r#"{
            "problem": "nonlinear-nu2",
            "methods": ["MIMC1", "MIMC2", "MLMC"],
            "epsilons": [0.25, 0.125],
            "replicates": 3,
            "rates": {"kappa": 1.0, "alpha1": 0.6, "levelRule": "corrected"},
            "seeds": [1, 2, 3],
            "budgetCap": 1e9,
            "outputDir": "out",
            "surface": {"maxLevel": 3, "samples": 100},
            "reference": {"pseudoMimc": 0.01},
            "deterministic": true
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        cfg.validate().unwrap();
        let r = cfg.rates.rates(&cfg.problem.problem()).unwrap();
        assert_eq!(r.alpha1, 0.6);
        assert_eq!(r.b2, 2.0);
        assert_eq!(r.level_rule, LevelRule::Corrected);
        assert_eq!(cfg.reference_mode(), ReferenceMode::PseudoMimc(0.01));
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn inline_problem() {
        let spec = serde_json::to_value(Preset::LinearNu2.problem()).unwrap();
        let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({ "problem": spec })).unwrap();
        assert_eq!(cfg.problem.problem(), Preset::LinearNu2.problem());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"problem": "linear-nu4/3", "epsilons": [1.5]}"#,
            r#"{"problem": "linear-nu4/3", "budgetCap": -1}"#,
            r#"{"problem": "linear-nu4/3", "rates": {"alpha1": 0.1}}"#,
            r#"{"problem": "linear-nu4/3", "methods": ["MIMC-mixed"]}"#,
        ];
        for text in bad {
            let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"problem": "nope"}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"problem": "linear-nu2", "typo": 1}"#).is_err());
    }
}
