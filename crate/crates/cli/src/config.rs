//! Experiment configuration: a JSON document with flag overrides applied on top.

use std::path::{Path, PathBuf};

use learnability::classification::FgMode;
use learnability::dataset::LabelKind;
use learnability::synth::SpectrumKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    IsoRegression,
    SpectrumRegression,
    BinaryClassification,
    CsvEstimate,
}

impl Mode {
    pub fn is_synthetic(self) -> bool {
        self != Mode::CsvEstimate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Feature dimension of synthetic data (ignored for CSV input).
    pub d: usize,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Unexplained variance of synthetic regression data.
    pub delta2: f64,
    /// `‖β‖` of synthetic classification data.
    pub beta_norm: f64,
    /// Feature covariance of synthetic classification data.
    pub spectrum: SpectrumKind,
    /// Plan degrees; each adds one estimator to the run.
    pub k_moments: Vec<usize>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub fg_mode: FgMode,
    pub output_dir: PathBuf,
    /// Divide regression labels by their empirical standard deviation first.
    pub normalize_labels: bool,
    /// Add ridge train and test error at the noise-optimal regularisation.
    pub with_bayes_ridge: bool,
    /// CSV input for `csv_estimate`.
    pub input: Option<PathBuf>,
    pub label_column: String,
    pub label_kind: LabelKind,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::IsoRegression,
            d: 1000,
            n_list: vec![100, 300, 1000, 3000],
            trials: 50,
            seed: 2024,
            delta2: 1.0 / 3.0,
            beta_norm: 2.0,
            spectrum: SpectrumKind::Identity,
            k_moments: vec![3],
            sigma_min: 0.0,
            sigma_max: 1.0,
            fg_mode: FgMode::ExactSigmoid,
            output_dir: PathBuf::from("results"),
            normalize_labels: true,
            with_bayes_ridge: false,
            input: None,
            label_column: "y".into(),
            label_kind: LabelKind::Real,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config document, or the `config` member of a run manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let syntax = |e: serde_json::Error| CliError::ConfigSyntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
        let body = match value.get("config") {
            Some(inner) if value.get("rng_name").is_some() => inner.clone(),
            _ => value,
        };
        let config: Self = serde_json::from_value(body).map_err(|e| CliError::config("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn is_classification(&self) -> bool {
        match self.mode {
            Mode::BinaryClassification => true,
            Mode::CsvEstimate => self.label_kind == LabelKind::PlusMinusOne,
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: String| Err(CliError::config(field, message));
        if self.n_list.is_empty() {
            return fail("n_list", "must list at least one sample size".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return fail("n_list", format!("must be strictly increasing (got {:?})", self.n_list));
        }
        if self.trials == 0 {
            return fail("trials", "must be at least 1".into());
        }
        if self.mode.is_synthetic() && self.d == 0 {
            return fail("d", "must be at least 1".into());
        }
        let needs_plan = self.mode != Mode::IsoRegression;
        if needs_plan && self.k_moments.is_empty() {
            return fail("k_moments", "must list at least one degree".into());
        }
        if let Some(k) = self.k_moments.iter().find(|&&k| k < 2) {
            return fail("k_moments", format!("every degree must be at least 2 (got {k})"));
        }
        let smallest = self.n_list[0];
        let required = if needs_plan { self.k_moments.iter().max().copied().unwrap_or(2) + 1 } else { 2 };
        if smallest < required {
            return fail("n_list", format!("sample sizes must be at least {required} (got {smallest})"));
        }
        if !(0.0..=1.0).contains(&self.delta2) {
            return fail("delta2", format!("must lie in [0, 1] (got {})", self.delta2));
        }
        if !(self.beta_norm >= 0.0 && self.beta_norm.is_finite()) {
            return fail("beta_norm", format!("must be finite and non-negative (got {})", self.beta_norm));
        }
        if !(self.sigma_max > 0.0 && self.sigma_max.is_finite()) {
            return fail("sigma_max", format!("must be positive (got {})", self.sigma_max));
        }
        if !(self.sigma_min >= 0.0 && self.sigma_min <= self.sigma_max) {
            return fail("sigma_min", format!("must lie in [0, sigma_max] (got {})", self.sigma_min));
        }
        match self.mode {
            Mode::CsvEstimate if self.input.is_none() => fail("input", "csv_estimate needs an input file".into()),
            Mode::CsvEstimate | Mode::BinaryClassification if self.with_bayes_ridge => {
                fail("with_bayes_ridge", "needs synthetic regression data with a known noise level".into())
            }
            _ => Ok(()),
        }
    }
}

/// Parses a comma-separated list such as `100,300,1000`.
pub fn parse_list(field: &str, text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| CliError::config(field, format!("`{}` is not a non-negative integer: {e}", part.trim())))
        })
        .collect()
}
