//! Preset configurations for the three synthetic experiments.
//!
//! Desk scale runs in minutes on one core. Paper scale uses d up to 50,000 and
//! takes hours; the spectrum presets also need `d²` memory for the random rotation.

use std::path::PathBuf;

use clap::ValueEnum;
use learnability::classification::FgMode;
use learnability::synth::SpectrumKind;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// The isotropic estimator and the least-squares baseline on identity covariance.
    Fig2,
    /// The general-covariance estimator on the `i/d` spectrum.
    Fig3,
    /// The classification error estimator on the `i/d` spectrum.
    Fig5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

pub fn preset(figure: Figure, scale: Scale) -> ExperimentConfig {
    let base = ExperimentConfig { trials: 50, seed: 2024, ..ExperimentConfig::default() };
    let desk = scale == Scale::Desk;
    match figure {
        Figure::Fig2 => ExperimentConfig {
            mode: Mode::IsoRegression,
            d: if desk { 1000 } else { 50_000 },
            n_list: if desk { vec![100, 300, 1000, 3000] } else { vec![1000, 3000, 10_000, 30_000, 100_000] },
            delta2: 1.0 / 3.0,
            k_moments: vec![2],
            output_dir: PathBuf::from("results/fig2"),
            ..base
        },
        Figure::Fig3 => ExperimentConfig {
            mode: Mode::SpectrumRegression,
            d: if desk { 1000 } else { 50_000 },
            n_list: if desk { vec![100, 300, 1000, 3000] } else { vec![1000, 3000, 10_000, 30_000, 100_000] },
            delta2: 1.0 / 3.0,
            k_moments: vec![3, 4],
            sigma_min: 0.0,
            sigma_max: 1.0,
            output_dir: PathBuf::from("results/fig3"),
            ..base
        },
        Figure::Fig5 => ExperimentConfig {
            mode: Mode::BinaryClassification,
            d: if desk { 1000 } else { 10_000 },
            n_list: if desk { vec![300, 1000, 3000] } else { vec![1000, 3000, 10_000, 30_000] },
            beta_norm: 2.0,
            spectrum: SpectrumKind::LinearRamp,
            k_moments: vec![3],
            sigma_min: 0.0,
            sigma_max: 1.0,
            fg_mode: FgMode::ExactSigmoid,
            output_dir: PathBuf::from("results/fig5"),
            ..base
        },
    }
}
