use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use learnability::classification::{build_link_map, estimate_classification_error, FgMode};
use learnability::dataset::LabelKind;
use learnability::poly::{fit_plan, PolynomialPlan};
use learnability::regression::{baseline_unbiased, estimate_general, estimate_isotropic, normalize_labels};
use learnability::synth::{gen_isotropic_regression, gen_logistic_classification, gen_spectrum_regression, SpectrumKind};
use learnability_cli::config::{parse_list, ExperimentConfig, Mode};
use learnability_cli::csv_io::{export_csv, ingest_csv};
use learnability_cli::error::{CliError, Result};
use learnability_cli::experiment::run_experiment;
use learnability_cli::presets::{preset, Figure, Scale};

#[derive(Parser)]
#[command(name = "learnability", version, about = "Estimate linear learnability from few samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a moment-combination polynomial and print it as JSON.
    Plan {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        smin: f64,
        #[arg(long, default_value_t = 1.0)]
        smax: f64,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate b, q(b), p(b) as CSV.
    LinkTable {
        #[arg(long, default_value_t = 50.0)]
        b_max: f64,
        #[arg(long, default_value_t = 2000)]
        grid_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate from a CSV dataset and print the report as JSON.
    Estimate(EstimateArgs),
    /// Run an experiment from a config (or manifest) file plus flag overrides.
    Run(RunArgs),
    /// Run a figure preset.
    Reproduce {
        figure: Figure,
        #[arg(long, value_enum, default_value_t = Scale::Desk)]
        scale: Scale,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        with_bayes_ridge: bool,
    },
    /// Write a synthetic dataset as CSV, and optionally its ground truth as JSON.
    Generate {
        #[arg(long, value_enum)]
        kind: GenerateKind,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        delta2: f64,
        #[arg(long, default_value_t = 2.0)]
        beta_norm: f64,
        #[arg(long, value_enum, default_value_t = SpectrumArg::Identity)]
        spectrum: SpectrumArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "y")]
        label_column: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenerateKind {
    Isotropic,
    Spectrum,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumArg {
    Identity,
    LinearRamp,
}

impl From<SpectrumArg> for SpectrumKind {
    fn from(s: SpectrumArg) -> Self {
        match s {
            SpectrumArg::Identity => SpectrumKind::Identity,
            SpectrumArg::LinearRamp => SpectrumKind::LinearRamp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelKindArg {
    Real,
    PlusMinusOne,
}

impl From<LabelKindArg> for LabelKind {
    fn from(k: LabelKindArg) -> Self {
        match k {
            LabelKindArg::Real => LabelKind::Real,
            LabelKindArg::PlusMinusOne => LabelKind::PlusMinusOne,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FgModeArg {
    ExactSigmoid,
    LinearApprox,
}

impl From<FgModeArg> for FgMode {
    fn from(m: FgModeArg) -> Self {
        match m {
            FgModeArg::ExactSigmoid => FgMode::ExactSigmoid,
            FgModeArg::LinearApprox => FgMode::LinearApprox,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Isotropic,
    General,
    Baseline,
    Classification,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "y")]
    label_column: String,
    #[arg(long, value_enum, default_value_t = LabelKindArg::Real)]
    label_kind: LabelKindArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Isotropic)]
    method: MethodArg,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    smin: f64,
    #[arg(long, default_value_t = 1.0)]
    smax: f64,
    #[arg(long, value_enum, default_value_t = FgModeArg::ExactSigmoid)]
    fg_mode: FgModeArg,
    /// Use labels as given instead of dividing by their standard deviation.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    beta_norm: Option<f64>,
    #[arg(long, value_enum)]
    spectrum: Option<SpectrumArg>,
    /// Comma-separated plan degrees.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    smin: Option<f64>,
    #[arg(long)]
    smax: Option<f64>,
    #[arg(long, value_enum)]
    fg_mode: Option<FgModeArg>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long, value_enum)]
    label_kind: Option<LabelKindArg>,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    with_bayes_ridge: bool,
}

fn parse_mode(text: &str) -> std::result::Result<Mode, String> {
    serde_json::from_value(serde_json::Value::String(text.replace('-', "_")))
        .map_err(|_| "expected iso-regression, spectrum-regression, binary-classification or csv-estimate".to_string())
}

impl RunArgs {
    fn apply(self, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(v) = self.mode {
            config.mode = v;
        }
        if let Some(v) = self.d {
            config.d = v;
        }
        if let Some(v) = self.n_list {
            config.n_list = parse_list("n_list", &v)?;
        }
        if let Some(v) = self.trials {
            config.trials = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.delta2 {
            config.delta2 = v;
        }
        if let Some(v) = self.beta_norm {
            config.beta_norm = v;
        }
        if let Some(v) = self.spectrum {
            config.spectrum = v.into();
        }
        if let Some(v) = self.k {
            config.k_moments = parse_list("k_moments", &v)?;
        }
        if let Some(v) = self.smin {
            config.sigma_min = v;
        }
        if let Some(v) = self.smax {
            config.sigma_max = v;
        }
        if let Some(v) = self.fg_mode {
            config.fg_mode = v.into();
        }
        if let Some(v) = self.output_dir {
            config.output_dir = v;
        }
        if let Some(v) = self.input {
            config.input = Some(v);
        }
        if let Some(v) = self.label_column {
            config.label_column = v;
        }
        if let Some(v) = self.label_kind {
            config.label_kind = v.into();
        }
        if self.no_normalize {
            config.normalize_labels = false;
        }
        if self.with_bayes_ridge {
            config.with_bayes_ridge = true;
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()) {
                // A closed pipe (for example `| head`) is not an error.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.map_err(|e| CliError::io("<stdout>", e)),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialises");
    text.push('\n');
    text
}

fn estimate(args: EstimateArgs) -> Result<String> {
    let kind: LabelKind = args.label_kind.into();
    let data = ingest_csv(&args.input, &args.label_column, kind)?;
    let plan = || -> Result<PolynomialPlan> { Ok(fit_plan(args.smin, args.smax, args.k, 1000)?) };
    if let MethodArg::Classification = args.method {
        let map = build_link_map(50.0, 2000)?;
        let report = estimate_classification_error(&data, &plan()?, &map, args.fg_mode.into())?;
        return Ok(to_json(&serde_json::json!({ "method": "classification", "report": report })));
    }
    let (data, scale) = if args.no_normalize { (data, 1.0) } else { normalize_labels(&data)? };
    let report = match args.method {
        MethodArg::Isotropic => estimate_isotropic(&data)?,
        MethodArg::General => estimate_general(&data, &plan()?)?,
        MethodArg::Baseline => baseline_unbiased(&data)?,
        MethodArg::Classification => unreachable!("handled above"),
    };
    Ok(to_json(&serde_json::json!({ "label_scale": scale, "report": report })))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Plan { k, smin, smax, grid, out } => emit(out.as_ref(), &to_json(&fit_plan(smin, smax, k, grid)?)),
        Command::LinkTable { b_max, grid_size, out } => {
            let map = build_link_map(b_max, grid_size)?;
            let mut text = String::from("b,q,p\n");
            for (b, q, p) in map.rows() {
                text.push_str(&format!("{b},{q},{p}\n"));
            }
            emit(out.as_ref(), &text)
        }
        Command::Estimate(args) => {
            let out = args.out.clone();
            emit(out.as_ref(), &estimate(args)?)
        }
        Command::Run(args) => {
            let base = match &args.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            report_run(&args.apply(base)?)
        }
        Command::Reproduce { figure, scale, seed, trials, output_dir, with_bayes_ridge } => {
            let mut config = preset(figure, scale);
            if let Some(v) = seed {
                config.seed = v;
            }
            if let Some(v) = trials {
                config.trials = v;
            }
            if let Some(v) = output_dir {
                config.output_dir = v;
            }
            config.with_bayes_ridge = with_bayes_ridge && config.mode != Mode::BinaryClassification;
            config.validate()?;
            report_run(&config)
        }
        Command::Generate { kind, d, n, delta2, beta_norm, spectrum, seed, out, truth, label_column } => {
            let (data, ground_truth) = match kind {
                GenerateKind::Isotropic => gen_isotropic_regression(d, n, delta2, seed)?,
                GenerateKind::Spectrum => gen_spectrum_regression(d, n, delta2, seed)?,
                GenerateKind::Logistic => gen_logistic_classification(d, n, beta_norm, spectrum.into(), seed)?,
            };
            export_csv(&data, &out, &label_column)?;
            if let Some(path) = truth {
                std::fs::write(&path, to_json(&ground_truth)).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(())
        }
    }
}

fn report_run(config: &ExperimentConfig) -> Result<()> {
    let output = run_experiment(config)?;
    let mut text = String::new();
    for row in &output.summary {
        let truth = row.ground_truth.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"));
        text.push_str(&format!(
            "n = {:>7}  {:<18} mean {:>9.4}  std {:>8.4}  truth {truth}\n",
            row.n, row.method, row.mean, row.std
        ));
    }
    text.push_str(&format!("results written to {}\n", config.output_dir.display()));
    emit(None, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
