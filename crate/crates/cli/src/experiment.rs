//! Multi-trial experiments: seeded trials per sample size, per-trial and summary
//! CSVs, a JSON manifest and an SVG plot.
//!
//! Trial `t` at sample size `n` draws everything from
//! `derive_seed(config.seed, [n, t])`, so results do not depend on scheduling.
//! Output files are written once, after every trial has finished.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use learnability::classification::{bayes_error_oracle, build_link_map, estimate_classification_error, LinkMap};
use learnability::dataset::LabeledDataset;
use learnability::poly::{fit_plan, PolynomialPlan};
use learnability::regression::{baseline_unbiased, estimate_general, estimate_isotropic, normalize_labels};
use learnability::rng::{derive_seed, SampleStream};
use learnability::synth::{
    gen_isotropic_regression, gen_logistic_classification, gen_spectrum_regression, ramp_covariance, SynthGroundTruth,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode};
use crate::csv_io::ingest_csv;
use crate::error::{CliError, Result};
use crate::plot::render_svg;

pub const RNG_NAME: &str = "xoshiro256++ seeded by splitmix64; Box-Muller normals";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial_index: usize,
    pub method: String,
    pub estimate: f64,
    pub raw_estimate: f64,
    pub ground_truth: Option<f64>,
    pub wall_time_ms: f64,
    pub seed_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub method: String,
    pub mean: f64,
    /// Population standard deviation (divisor = number of trials).
    pub std: f64,
    pub ground_truth: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub rng_name: String,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub manifest: Manifest,
    pub files: OutputFiles,
}

#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub trials_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub manifest_json: PathBuf,
    pub plot_svg: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            trials_csv: dir.join("trials.csv"),
            summary_csv: dir.join("summary.csv"),
            manifest_json: dir.join("manifest.json"),
            plot_svg: dir.join("plot.svg"),
        }
    }
}

/// Everything shared by the trials of one run.
struct Context<'a> {
    config: &'a ExperimentConfig,
    plans: Vec<PolynomialPlan>,
    link_map: Option<LinkMap>,
    csv_data: Option<LabeledDataset>,
}

impl<'a> Context<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let plans = if config.mode == Mode::IsoRegression {
            Vec::new()
        } else {
            config
                .k_moments
                .iter()
                .map(|&k| fit_plan(config.sigma_min, config.sigma_max, k, learnability::poly::DEFAULT_GRID_POINTS))
                .collect::<learnability::Result<_>>()?
        };
        let link_map = if config.is_classification() { Some(build_link_map(50.0, 2000)?) } else { None };
        let csv_data = match (&config.mode, &config.input) {
            (Mode::CsvEstimate, Some(path)) => {
                let data = ingest_csv(path, &config.label_column, config.label_kind)?;
                if let Some(&n) = config.n_list.iter().find(|&&n| n > data.n()) {
                    return Err(CliError::config("n_list", format!("n = {n} exceeds the {} rows of the input", data.n())));
                }
                Some(data)
            }
            _ => None,
        };
        Ok(Self { config, plans, link_map, csv_data })
    }

    fn dimension(&self) -> usize {
        self.csv_data.as_ref().map_or(self.config.d, LabeledDataset::d)
    }
}

/// One method's output within a trial.
struct Outcome {
    method: String,
    estimate: f64,
    raw_estimate: f64,
}

fn outcome(method: impl Into<String>, estimate: f64, raw_estimate: f64) -> Outcome {
    Outcome { method: method.into(), estimate, raw_estimate }
}

/// `n` distinct rows chosen by a partial Fisher–Yates shuffle.
fn subsample(data: &LabeledDataset, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut stream = SampleStream::new(seed);
    let mut order: Vec<usize> = (0..data.n()).collect();
    for i in 0..n {
        let j = i + (stream.next_u64() % (data.n() - i) as u64) as usize;
        order.swap(i, j);
    }
    order.truncate(n);
    Ok(data.select_rows(&order)?)
}

/// Ridge regression with `λ = δ² d / ‖β‖²`, the posterior mean under an isotropic
/// Gaussian prior on `β`. Returns training MSE and population test MSE.
fn bayes_ridge(data: &LabeledDataset, truth: &SynthGroundTruth, label_scale: f64, covariance: Option<&DMatrix<f64>>) -> Result<(f64, f64)> {
    let (n, d) = (data.n(), data.d());
    let beta = DVector::from_iterator(d, truth.beta.iter().map(|b| b / label_scale));
    let noise = truth.delta2 / (label_scale * label_scale);
    let x = data.feature_matrix();
    let y = DVector::from_column_slice(data.labels());
    let beta_sq = beta.norm_squared();
    let lambda = if beta_sq > 0.0 { noise * d as f64 / beta_sq } else { f64::INFINITY };
    let fit = if lambda.is_infinite() {
        DVector::zeros(d)
    } else {
        let scale = x.norm_squared() / (n * d) as f64;
        let lambda = lambda.max(1e-10 * scale.max(f64::MIN_POSITIVE));
        let solve = |m: DMatrix<f64>, rhs: DVector<f64>| -> Result<DVector<f64>> {
            m.cholesky()
                .map(|c| c.solve(&rhs))
                .ok_or_else(|| CliError::Core(learnability::Error::NumericalFailure("ridge system is not positive definite".into())))
        };
        if n >= d {
            solve(x.transpose() * &x + DMatrix::identity(d, d) * lambda, x.transpose() * &y)?
        } else {
            x.transpose() * solve(&x * x.transpose() + DMatrix::identity(n, n) * lambda, y.clone())?
        }
    };
    let train = (&y - &x * &fit).norm_squared() / n as f64;
    let diff = &fit - &beta;
    let excess = match covariance {
        Some(sigma) => diff.dot(&(sigma * &diff)),
        None => diff.norm_squared(),
    };
    Ok((train, excess + noise))
}

fn regression_outcomes(
    ctx: &Context,
    data: LabeledDataset,
    truth: Option<&SynthGroundTruth>,
    seed: u64,
) -> Result<Vec<Outcome>> {
    let config = ctx.config;
    let (data, scale) = if config.normalize_labels { normalize_labels(&data)? } else { (data, 1.0) };
    let mut out = Vec::new();
    if config.mode == Mode::IsoRegression {
        let r = estimate_isotropic(&data)?;
        out.push(outcome("isotropic", r.estimate, r.raw_estimate));
    }
    for plan in &ctx.plans {
        let r = estimate_general(&data, plan)?;
        out.push(outcome(format!("general_k{}", plan.degree_k), r.estimate, r.raw_estimate));
    }
    if data.n() > data.d() {
        let r = baseline_unbiased(&data)?;
        out.push(outcome("baseline", r.estimate, r.raw_estimate));
    }
    if let (true, Some(truth)) = (config.with_bayes_ridge, truth) {
        let covariance = (config.mode == Mode::SpectrumRegression).then(|| ramp_covariance(data.d(), seed));
        let (train, test) = bayes_ridge(&data, truth, scale, covariance.as_ref())?;
        out.push(outcome("ridge_train", train, train));
        out.push(outcome("ridge_test", test, test));
    }
    Ok(out)
}

fn classification_outcomes(ctx: &Context, data: &LabeledDataset) -> Result<Vec<Outcome>> {
    let map = ctx.link_map.as_ref().expect("classification runs build a link map");
    ctx.plans
        .iter()
        .map(|plan| {
            let r = estimate_classification_error(data, plan, map, ctx.config.fg_mode)?;
            Ok(outcome(format!("classification_k{}", plan.degree_k), r.err_estimate, r.err_estimate))
        })
        .collect()
}

fn run_trial(ctx: &Context, n: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let config = ctx.config;
    let seed = derive_seed(config.seed, &[n as u64, trial as u64]);
    let start = Instant::now();
    let (outcomes, truth) = match config.mode {
        Mode::IsoRegression => {
            let (data, truth) = gen_isotropic_regression(config.d, n, config.delta2, seed)?;
            (regression_outcomes(ctx, data, Some(&truth), seed)?, Some(truth.delta2))
        }
        Mode::SpectrumRegression => {
            let (data, truth) = gen_spectrum_regression(config.d, n, config.delta2, seed)?;
            (regression_outcomes(ctx, data, Some(&truth), seed)?, Some(truth.delta2))
        }
        Mode::BinaryClassification => {
            let (data, truth) = gen_logistic_classification(config.d, n, config.beta_norm, config.spectrum, seed)?;
            (classification_outcomes(ctx, &data)?, Some(bayes_error_oracle(truth.nu)?))
        }
        Mode::CsvEstimate => {
            let full = ctx.csv_data.as_ref().expect("csv runs load their input");
            let data = subsample(full, n, seed)?;
            let outcomes =
                if config.is_classification() { classification_outcomes(ctx, &data)? } else { regression_outcomes(ctx, data, None, seed)? };
            (outcomes, None)
        }
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(outcomes
        .into_iter()
        .map(|o| TrialRecord {
            n,
            trial_index: trial,
            method: o.method,
            estimate: o.estimate,
            raw_estimate: o.raw_estimate,
            ground_truth: truth,
            wall_time_ms,
            seed_used: seed,
        })
        .collect())
}

/// Runs every trial without touching the file system.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let ctx = Context::new(config)?;
    if config.mode == Mode::CsvEstimate && ctx.dimension() == 0 {
        return Err(CliError::config("input", "dataset has no feature columns"));
    }
    let jobs: Vec<(usize, usize)> =
        config.n_list.iter().flat_map(|&n| (0..config.trials).map(move |t| (n, t))).collect();
    let batches = jobs.par_iter().map(|&(n, t)| run_trial(&ctx, n, t)).collect::<Result<Vec<_>>>()?;
    Ok(batches.into_iter().flatten().collect())
}

/// Groups records by `(n, method)` in first-seen order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, &str)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.n, r.method.as_str())) {
            keys.push((r.n, &r.method));
        }
    }
    keys.into_iter()
        .map(|(n, method)| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n && r.method == method).collect();
            let count = group.len() as f64;
            let mean = group.iter().map(|r| r.estimate).sum::<f64>() / count;
            let std = (group.iter().map(|r| (r.estimate - mean).powi(2)).sum::<f64>() / count).sqrt();
            let truths: Vec<f64> = group.iter().filter_map(|r| r.ground_truth).collect();
            let ground_truth = (!truths.is_empty()).then(|| truths.iter().sum::<f64>() / truths.len() as f64);
            SummaryRow { n, method: method.to_string(), mean, std, ground_truth, trials: group.len() }
        })
        .collect()
}

fn optional(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| v.to_string())
}

/// Per-trial CSV. Wall time is left out so identical runs give identical files.
pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("n,trial_index,method,estimate,raw_estimate,ground_truth,seed_used\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.trial_index,
            r.method,
            r.estimate,
            r.raw_estimate,
            optional(r.ground_truth),
            r.seed_used
        );
    }
    out
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from("n,method,mean,std,ground_truth,trials\n");
    for s in summary {
        let _ = writeln!(out, "{},{},{},{},{},{}", s.n, s.method, s.mean, s.std, optional(s.ground_truth), s.trials);
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let records = run_trials(config)?;
    let summary = summarize(&records);
    let manifest = Manifest {
        config: config.clone(),
        seed: config.seed,
        rng_name: RNG_NAME.into(),
        version: learnability::VERSION.into(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        wall_time_ms: clock.elapsed().as_secs_f64() * 1e3,
    };
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let files = OutputFiles::in_dir(dir);
    write(&files.trials_csv, &trials_csv(&records))?;
    write(&files.summary_csv, &summary_csv(&summary))?;
    write(&files.manifest_json, &serde_json::to_string_pretty(&manifest).expect("manifest serialises"))?;
    write(&files.plot_svg, &render_svg(&plot_title(config), &summary))?;
    Ok(ExperimentOutput { records, summary, manifest, files })
}

fn plot_title(config: &ExperimentConfig) -> String {
    match config.mode {
        Mode::IsoRegression => format!("Unexplained variance, identity covariance, d = {}", config.d),
        Mode::SpectrumRegression => format!("Unexplained variance, spectrum i/d, d = {}", config.d),
        Mode::BinaryClassification => format!("Best linear classifier error, d = {}", config.d),
        Mode::CsvEstimate => "Estimates on CSV input".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, method: &str, estimate: f64) -> TrialRecord {
        TrialRecord {
            n,
            trial_index: 0,
            method: method.into(),
            estimate,
            raw_estimate: estimate,
            ground_truth: Some(0.5),
            wall_time_ms: 1.0,
            seed_used: 0,
        }
    }

    #[test]
    fn summary_groups_and_uses_population_std() {
        let records = vec![record(10, "a", 1.0), record(10, "b", 5.0), record(10, "a", 3.0), record(20, "a", 2.0)];
        let summary = summarize(&records);
        assert_eq!(summary.len(), 3);
        assert_eq!((summary[0].n, summary[0].method.as_str(), summary[0].mean, summary[0].std), (10, "a", 2.0, 1.0));
        assert_eq!(summary[1].method, "b");
        assert_eq!(summary[2].trials, 1);
        assert_eq!(summary[2].std, 0.0);
    }

    #[test]
    fn subsample_is_distinct_and_deterministic() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let data = LabeledDataset::from_rows(&rows, vec![0.0; 20], learnability::LabelKind::Real).unwrap();
        let a = subsample(&data, 7, 3).unwrap();
        assert_eq!(a, subsample(&data, 7, 3).unwrap());
        let mut seen: Vec<f64> = a.features().to_vec();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 7);
    }

    #[test]
    fn ridge_zero_noise_interpolates() {
        let (data, truth) = gen_isotropic_regression(5, 40, 0.0, 1).unwrap();
        let (train, test) = bayes_ridge(&data, &truth, 1.0, None).unwrap();
        assert!(train < 1e-12 && test < 1e-12);
    }
}
