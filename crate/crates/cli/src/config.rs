//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sgld_interim::mechanisms::PtsParams;
use sgld_interim::{DomainSpec, ModelParams, PrivacyBudget};

/// One JSON file describing a reproducible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: DomainSpec,
    pub model: ModelParams,
    pub budget: PrivacyBudget,
    /// Number of epochs to plot or simulate.
    pub epochs: u64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Mechanism parameters; defaults to the non-privacy claim's constants
    /// at `budget`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pts: Option<PtsParams>,
}

impl ExperimentConfig {
    /// Reference setting: n = 267909, c = 900502, x_h = 1.8, x_l = 0.9,
    /// alpha = 0.5, beta = 1, delta = 0.01.
    pub fn figure1() -> Self {
        Self {
            spec: DomainSpec { n: 267_909, c: 900_502.0, gamma1: 0.1, gamma2: Some(1.11), x_l: 0.9, x_h: 1.8 },
            model: ModelParams { alpha: 0.5, beta: 1.0 },
            budget: PrivacyBudget { epsilon: 0.85, delta: 0.01 },
            epochs: 0,
            seeds: vec![0],
            output_dir: PathBuf::from("."),
            pts: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Checks parameters and that `output_dir` is an existing writable
    /// directory.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.model.validate()?;
        ensure!(self.budget.epsilon > 0.0, "budget.epsilon must be positive");
        ensure!(self.budget.delta > 0.0 && self.budget.delta < 0.5, "budget.delta must lie in (0, 1/2)");
        ensure!(!self.seeds.is_empty(), "seeds must not be empty");
        if let Some(p) = &self.pts {
            p.validate()?;
        }
        let dir = &self.output_dir;
        if !dir.is_dir() {
            bail!("output_dir {} does not exist or is not a directory", dir.display());
        }
        let probe = dir.join(".sgld-interim-write-probe");
        fs::write(&probe, b"").with_context(|| format!("output_dir {} is not writable", dir.display()))?;
        fs::remove_file(&probe).ok();
        Ok(())
    }

    pub fn pts_params(&self) -> PtsParams {
        self.pts
            .unwrap_or_else(|| PtsParams::non_private_claim(self.budget.epsilon, self.budget.delta))
    }
}
