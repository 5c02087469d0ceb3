//! Config-driven orchestration: synth/ingest -> window -> features ->
//! select -> train -> eval -> sweeps, with artifacts persisted into a run
//! directory stamped by config hash and seed.
//!
//! A run directory contains `manifest.json` (config echo, seeds, version,
//! input hashes), the data and feature CSVs, the selected feature set, one
//! model JSON per subject, the evaluation report (JSON + CSV), and any sweep
//! CSVs. Re-running the same config reproduces identical bytes everywhere
//! except the manifest timestamp, and an existing run directory is never
//! overwritten unless forced.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{
    filter_aligned, parse_records_with, segment_windows, write_records_csv, ActivityPeriod,
    IngestOptions, Window,
};
use crate::eval::{
    aggregate_report, compute_eer, decision_scores, default_probability_grid, evaluate_scores,
    make_split, probability_scores, sweep_outlier_fraction, sweep_scores, write_outlier_sweep_csv,
    write_sweep_csv, EvalError, EvalReport, OutlierSweepPoint, ReportMeta, SplitSpec,
    SubjectResult, MIN_WINDOWS_PER_SUBJECT,
};
use crate::features::{BiometricCombo, FeatureMatrix};
use crate::selection::{prune_pearson, select_ks, select_sd, FeatureSetSpec, SelectionApproach};
use crate::svm::{
    train_binary, train_unary, KernelSpec, ModelKind, SvmError, TrainConfig, TrainedModel,
};
use crate::synth::generate_dataset;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Failure class used to pick the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Data,
    Convergence,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config field {field}: {reason}")]
    ConfigInvalid { field: String, reason: String },
    #[error("run directory {0} already exists (pass --force to overwrite)")]
    RunDirExists(PathBuf),
    #[error("stage {stage} failed: {message}")]
    StageFailure {
        stage: &'static str,
        kind: FailureKind,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },
    #[error("model schema version {found} unsupported (this build reads {supported})")]
    SchemaVersionMismatch { found: u32, supported: u32 },
}

impl PipelineError {
    /// Exit codes: 2 usage/config, 3 data, 4 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::ConfigInvalid { .. } | PipelineError::RunDirExists(_) => 2,
            PipelineError::StageFailure { kind: FailureKind::Convergence, .. } => 4,
            _ => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn stage_err(stage: &'static str, err: impl std::fmt::Display, convergence: bool) -> PipelineError {
    PipelineError::StageFailure {
        stage,
        kind: if convergence { FailureKind::Convergence } else { FailureKind::Data },
        message: err.to_string(),
    }
}

fn svm_stage_err(stage: &'static str, err: &SvmError) -> PipelineError {
    stage_err(stage, err, matches!(err, SvmError::NoConvergence { .. }))
}

fn eval_stage_err(stage: &'static str, err: &EvalError) -> PipelineError {
    stage_err(
        stage,
        err,
        matches!(err, EvalError::Svm(SvmError::NoConvergence { .. })),
    )
}

/// Where the minute stream comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataConfig {
    /// Generate a synthetic cohort.
    Synth { subjects: usize, minutes: usize },
    /// Ingest an existing CSV in the standard schema.
    Csv {
        path: PathBuf,
        #[serde(default = "default_met_scale")]
        met_scale: f64,
    },
}

fn default_met_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub period: ActivityPeriod,
    /// Cap on windows per subject (|W|), applied by seeded subsampling.
    pub max_windows_per_subject: Option<usize>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            period: ActivityPeriod::Sedentary,
            max_windows_per_subject: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub combo: String,
    /// Defaults to true for non-sedentary runs, false for sedentary.
    pub include_activity: Option<bool>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            combo: "CM".into(),
            include_activity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub approach: SelectionApproach,
    pub alpha: f64,
    pub subject_fraction: f64,
    pub pc_threshold: f64,
    /// SD target count; defaults to 20 (sedentary) / 30 (non-sedentary),
    /// clamped to the number of surviving KS features.
    pub sd_top_k: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            approach: SelectionApproach::Ks,
            alpha: 0.05,
            subject_fraction: 0.5,
            pc_threshold: 0.9,
            sd_top_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub gamma: f64,
    pub degree: u32,
    pub c: f64,
    pub nu: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub normalize: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Binary,
            gamma: 1.0,
            degree: 2,
            c: 1.0,
            nu: 0.05,
            tol: 1e-3,
            max_passes: 1000,
            normalize: true,
        }
    }
}

impl ModelConfig {
    pub fn kernel(&self) -> KernelSpec {
        match self.kind {
            ModelKind::Binary => KernelSpec::quadratic().with_gamma(self.gamma),
            ModelKind::Unary => KernelSpec::gaussian().with_gamma(self.gamma),
        }
        .with_degree(self.degree)
    }

    pub fn unary_kernel(&self) -> KernelSpec {
        KernelSpec::gaussian().with_gamma(self.gamma)
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            c: self.c,
            nu: self.nu,
            tol: self.tol,
            max_passes: self.max_passes,
            seed,
            normalize: self.normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub chronological: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.75,
            chronological: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepsConfig {
    /// Emit the probability-threshold sweep (binary models only).
    pub probability: bool,
    /// Outlier fractions for the one-class sweep; empty skips it.
    pub nu_grid: Vec<f64>,
}

/// The declarative experiment description. Stages run in data-flow order;
/// the sweep stages run only when configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub windows: WindowConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub sweeps: SweepsConfig,
    /// Worker threads for per-subject experiments; default = all cores.
    #[serde(default)]
    pub parallelism: Option<usize>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |field: &str, reason: String| PipelineError::ConfigInvalid {
            field: field.into(),
            reason,
        };
        if let DataConfig::Synth { subjects, minutes } = &self.data {
            if *subjects < 2 {
                return Err(invalid("data.synth.subjects", format!("need >= 2, got {subjects}")));
            }
            if *minutes == 0 {
                return Err(invalid("data.synth.minutes", "need >= 1".into()));
            }
        }
        BiometricCombo::parse(&self.features.combo)
            .map_err(|e| invalid("features.combo", e.to_string()))?;
        if !(self.selection.alpha > 0.0 && self.selection.alpha < 1.0) {
            return Err(invalid("selection.alpha", format!("must lie in (0,1), got {}", self.selection.alpha)));
        }
        if !(self.selection.subject_fraction > 0.0 && self.selection.subject_fraction <= 1.0) {
            return Err(invalid(
                "selection.subject_fraction",
                format!("must lie in (0,1], got {}", self.selection.subject_fraction),
            ));
        }
        if !(self.selection.pc_threshold > 0.0 && self.selection.pc_threshold < 1.0) {
            return Err(invalid(
                "selection.pc_threshold",
                format!("must lie in (0,1), got {}", self.selection.pc_threshold),
            ));
        }
        if !(self.eval.train_fraction > 0.0 && self.eval.train_fraction < 1.0) {
            return Err(invalid(
                "eval.train_fraction",
                format!("must lie in (0,1), got {}", self.eval.train_fraction),
            ));
        }
        if self.sweeps.probability && self.model.kind == ModelKind::Unary {
            return Err(invalid(
                "sweeps.probability",
                "probability sweeps need the binary (calibrated) model".into(),
            ));
        }
        self.model
            .train_config(self.seed)
            .validate()
            .map_err(|e| invalid("model", e.to_string()))?;
        Ok(())
    }

    pub fn include_activity(&self) -> bool {
        self.features
            .include_activity
            .unwrap_or(self.windows.period == ActivityPeriod::NonSedentary)
    }

    pub fn sd_top_k_default(&self) -> usize {
        self.selection.sd_top_k.unwrap_or(match self.windows.period {
            ActivityPeriod::Sedentary => 20,
            ActivityPeriod::NonSedentary => 30,
        })
    }

    /// Identity of the experiment: the config minus execution knobs, so a
    /// re-run with a different worker count lands in the same directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.parallelism = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..6])
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let config: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| PipelineError::ConfigInvalid {
            field: "<config file>".into(),
            reason: e.to_string(),
        })?;
    config.validate()?;
    Ok(config)
}

/// Everything a finished run leaves behind.
#[derive(Debug)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub report: EvalReport,
    pub models: Vec<TrainedModel>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config_hash: String,
    seed: u64,
    created_unix_secs: u64,
    input_hashes: BTreeMap<String, String>,
    config: &'a PipelineConfig,
}

/// Execute every configured stage and persist the artifacts.
pub fn run_pipeline(config: &PipelineConfig, force: bool) -> Result<RunArtifacts, PipelineError> {
    config.validate()?;
    let run_dir = config
        .out_dir
        .join(format!("run-{}-s{}", config.hash(), config.seed));
    if run_dir.exists() {
        if !force {
            return Err(PipelineError::RunDirExists(run_dir));
        }
        fs::remove_dir_all(&run_dir).map_err(io_err(&run_dir))?;
    }
    fs::create_dir_all(&run_dir).map_err(io_err(&run_dir))?;

    let mut input_hashes = BTreeMap::new();

    // -- data ------------------------------------------------------------
    let records = match &config.data {
        DataConfig::Synth { subjects, minutes } => {
            let dataset = generate_dataset(*subjects, *minutes, config.seed)
                .map_err(|e| stage_err("synth", e, false))?;
            let data_path = run_dir.join("data.csv");
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &dataset.records).map_err(io_err(&data_path))?;
            fs::write(&data_path, &buf).map_err(io_err(&data_path))?;
            input_hashes.insert("data.csv".into(), hex_digest(&buf));
            let profiles_path = run_dir.join("profiles.json");
            write_json_pretty(&profiles_path, &dataset.profiles)?;
            dataset.records
        }
        DataConfig::Csv { path, met_scale } => {
            let bytes = fs::read(path).map_err(|e| {
                stage_err("ingest", format!("cannot read {}: {e}", path.display()), false)
            })?;
            input_hashes.insert(path.display().to_string(), hex_digest(&bytes));
            parse_records_with(bytes.as_slice(), &IngestOptions { met_scale: *met_scale })
                .map_err(|e| stage_err("ingest", e, false))?
        }
    };

    // -- windows -----------------------------------------------------------
    let aligned = filter_aligned(&records);
    let windows = segment_windows(&aligned.minutes, config.windows.period);
    let (windows, w_metric) = cap_windows(windows, config.windows.max_windows_per_subject, config.seed);
    if windows.is_empty() {
        return Err(stage_err("window", "no windows after segmentation", false));
    }

    // -- features ----------------------------------------------------------
    let combo = BiometricCombo::parse(&config.features.combo).expect("validated");
    let matrix = FeatureMatrix::from_windows(&windows, &combo, config.include_activity())
        .map_err(|e| stage_err("features", e, false))?;
    {
        let path = run_dir.join("features.csv");
        let mut buf = Vec::new();
        matrix.write_csv(&mut buf).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
    }

    // -- selection -----------------------------------------------------------
    let feature_set = run_selection(config, &matrix)?;
    write_json_pretty(&run_dir.join("feature_set.json"), &feature_set)?;
    let selected = matrix
        .select(&feature_set.selected)
        .map_err(|e| stage_err("select", e, false))?;

    // -- experiments -------------------------------------------------------
    let outcome = run_experiments(config, &selected, &feature_set)?;

    let models_dir = run_dir.join("models");
    fs::create_dir_all(&models_dir).map_err(io_err(&models_dir))?;
    for model in &outcome.models {
        persist_model(model, &models_dir.join(format!("{}.json", model.subject_id)))?;
    }

    let meta = ReportMeta {
        approach: config.selection.approach.to_string(),
        combo: combo.name(),
        period: config.windows.period,
        model_kind: match config.model.kind {
            ModelKind::Binary => "binary".into(),
            ModelKind::Unary => "unary".into(),
        },
        n_features: feature_set.selected.len(),
        windows_per_subject: w_metric,
        selection_params: Some(feature_set.params.clone()),
    };
    let report = aggregate_report(outcome.per_subject, meta, outcome.eer, outcome.skipped)
        .map_err(|e| eval_stage_err("eval", &e))?;
    write_json_pretty(&run_dir.join("report.json"), &report)?;
    {
        let path = run_dir.join("report.csv");
        let mut buf = Vec::new();
        report.write_csv(&mut buf).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
    }

    // -- sweeps ------------------------------------------------------------
    if config.sweeps.probability {
        let rows = sweep_scores(
            &outcome.proba_pos,
            &outcome.proba_neg,
            &default_probability_grid(),
        );
        let path = run_dir.join("sweep_threshold.csv");
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
    }
    if !config.sweeps.nu_grid.is_empty() {
        let rows = outcome.nu_sweep;
        let path = run_dir.join("sweep_outlier.csv");
        let mut buf = Vec::new();
        write_outlier_sweep_csv(&mut buf, &rows).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
    }

    // -- manifest ------------------------------------------------------------
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config.hash(),
        seed: config.seed,
        created_unix_secs: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        input_hashes,
        config,
    };
    write_json_pretty(&run_dir.join("manifest.json"), &manifest)?;

    Ok(RunArtifacts {
        run_dir,
        report,
        models: outcome.models,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| PipelineError::CorruptFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    buf.push(b'\n');
    fs::write(path, buf).map_err(io_err(path))
}

/// Cap each subject's window list by seeded subsampling, preserving
/// chronological order. Returns the capped list and the |W| report metric
/// (the cap when set, otherwise the median used count).
fn cap_windows(
    windows: Vec<Window>,
    cap: Option<usize>,
    seed: u64,
) -> (Vec<Window>, usize) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut by_subject: BTreeMap<String, Vec<Window>> = BTreeMap::new();
    for w in windows {
        by_subject.entry(w.subject_id.clone()).or_default().push(w);
    }
    let mut counts = Vec::new();
    let mut out = Vec::new();
    for (subject, mut list) in by_subject {
        if let Some(cap) = cap {
            if list.len() > cap {
                let mut indices: Vec<usize> = (0..list.len()).collect();
                let tag = format!("wcap|{subject}");
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, &tag));
                indices.shuffle(&mut rng);
                let mut keep: Vec<usize> = indices[..cap].to_vec();
                keep.sort_unstable();
                list = keep.into_iter().map(|i| list[i].clone()).collect();
            }
        }
        counts.push(list.len());
        out.extend(list);
    }
    let metric = cap.unwrap_or_else(|| {
        counts.sort_unstable();
        if counts.is_empty() {
            0
        } else {
            counts[counts.len() / 2]
        }
    });
    (out, metric)
}

fn run_selection(
    config: &PipelineConfig,
    matrix: &FeatureMatrix,
) -> Result<FeatureSetSpec, PipelineError> {
    let ks = select_ks(matrix, config.selection.alpha, config.selection.subject_fraction)
        .map_err(|e| stage_err("select", e, false))?;
    match config.selection.approach {
        SelectionApproach::Ks => Ok(ks),
        SelectionApproach::Pc => prune_pearson(matrix, &ks, config.selection.pc_threshold)
            .map_err(|e| stage_err("select", e, false)),
        SelectionApproach::Sd => {
            let top_k = config.sd_top_k_default().min(ks.selected.len()).max(1);
            select_sd(matrix, &ks, top_k).map_err(|e| stage_err("select", e, false))
        }
    }
}

struct ExperimentOutcome {
    per_subject: Vec<SubjectResult>,
    models: Vec<TrainedModel>,
    skipped: BTreeMap<String, usize>,
    eer: Option<crate::eval::EerPoint>,
    proba_pos: Vec<f64>,
    proba_neg: Vec<f64>,
    nu_sweep: Vec<OutlierSweepPoint>,
}

struct SubjectExperiment {
    result: SubjectResult,
    model: TrainedModel,
    decision_pos: Vec<f64>,
    decision_neg: Vec<f64>,
    proba_pos: Vec<f64>,
    proba_neg: Vec<f64>,
    nu_rows: Vec<OutlierSweepPoint>,
}

fn run_experiments(
    config: &PipelineConfig,
    matrix: &FeatureMatrix,
    feature_set: &FeatureSetSpec,
) -> Result<ExperimentOutcome, PipelineError> {
    let by_subject = matrix.rows_by_subject();
    let split_spec = SplitSpec {
        train_fraction: config.eval.train_fraction,
        seed: config.seed,
        balanced: true,
        chronological: config.eval.chronological,
    };

    let mut eligible = Vec::new();
    let mut skipped = BTreeMap::new();
    for (subject, rows) in &by_subject {
        if rows.len() < MIN_WINDOWS_PER_SUBJECT {
            skipped.insert(subject.clone(), rows.len());
        } else {
            eligible.push(subject.clone());
        }
    }
    if eligible.is_empty() {
        return Err(stage_err("eval", "no subject has enough windows", false));
    }

    let run_one = |subject: &String| -> Result<SubjectExperiment, PipelineError> {
        let split = make_split(&by_subject, subject, &split_spec)
            .map_err(|e| eval_stage_err("eval", &e))?;
        let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
            idx.iter().map(|&i| matrix.values[i].clone()).collect()
        };
        let train_pos = rows(&split.train_pos);
        let train_neg = rows(&split.train_neg);
        let test_pos = rows(&split.test_pos);
        let test_neg = rows(&split.test_neg);

        let train_cfg = config
            .model
            .train_config(crate::seed::derive(config.seed, subject));
        let mut model = match config.model.kind {
            ModelKind::Binary => {
                let mut x = train_pos.clone();
                x.extend(train_neg.iter().cloned());
                let mut y = vec![1.0; train_pos.len()];
                y.extend(std::iter::repeat_n(-1.0, train_neg.len()));
                train_binary(&x, &y, &config.model.kernel(), &train_cfg)
                    .map_err(|e| svm_stage_err("train", &e))?
            }
            ModelKind::Unary => train_unary(&train_pos, &config.model.kernel(), &train_cfg)
                .map_err(|e| svm_stage_err("train", &e))?,
        };
        model.subject_id = subject.clone();
        model.feature_set = Some(feature_set.clone());

        let decision_pos =
            decision_scores(&model, &test_pos).map_err(|e| eval_stage_err("eval", &e))?;
        let decision_neg =
            decision_scores(&model, &test_neg).map_err(|e| eval_stage_err("eval", &e))?;
        let metrics = evaluate_scores(&decision_pos, &decision_neg, 0.0)
            .map_err(|e| eval_stage_err("eval", &e))?;

        let (proba_pos, proba_neg) = if config.sweeps.probability && model.platt.is_some() {
            (
                probability_scores(&model, &test_pos).map_err(|e| eval_stage_err("sweep-threshold", &e))?,
                probability_scores(&model, &test_neg).map_err(|e| eval_stage_err("sweep-threshold", &e))?,
            )
        } else {
            (Vec::new(), Vec::new())
        };

        let nu_rows = if config.sweeps.nu_grid.is_empty() {
            Vec::new()
        } else {
            sweep_outlier_fraction(
                &train_pos,
                &test_pos,
                &test_neg,
                &config.sweeps.nu_grid,
                &config.model.unary_kernel(),
                &train_cfg,
            )
            .map_err(|e| eval_stage_err("sweep-outlier", &e))?
        };

        Ok(SubjectExperiment {
            result: SubjectResult {
                subject_id: subject.clone(),
                acc: metrics.acc,
                fpr: metrics.fpr,
                fnr: metrics.fnr,
            },
            model,
            decision_pos,
            decision_neg,
            proba_pos,
            proba_neg,
            nu_rows,
        })
    };

    let experiments: Vec<Result<SubjectExperiment, PipelineError>> = match config.parallelism {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| stage_err("eval", e, false))?;
            pool.install(|| eligible.par_iter().map(run_one).collect())
        }
        None => eligible.par_iter().map(run_one).collect(),
    };

    let mut done = Vec::with_capacity(experiments.len());
    for exp in experiments {
        done.push(exp?);
    }
    done.sort_by(|a, b| a.result.subject_id.cmp(&b.result.subject_id));

    let mut all_pos = Vec::new();
    let mut all_neg = Vec::new();
    let mut proba_pos = Vec::new();
    let mut proba_neg = Vec::new();
    let mut per_subject = Vec::new();
    let mut models = Vec::new();
    let mut nu_acc: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    for exp in done {
        all_pos.extend(exp.decision_pos);
        all_neg.extend(exp.decision_neg);
        proba_pos.extend(exp.proba_pos);
        proba_neg.extend(exp.proba_neg);
        for row in exp.nu_rows {
            let entry = nu_acc.entry(row.nu.to_bits()).or_insert((row.nu, 0.0, 0.0, 0));
            entry.1 += row.fpr;
            entry.2 += row.fnr;
            entry.3 += 1;
        }
        per_subject.push(exp.result);
        models.push(exp.model);
    }

    let eer = compute_eer(&all_pos, &all_neg).ok();
    let mut nu_sweep: Vec<OutlierSweepPoint> = nu_acc
        .into_values()
        .map(|(nu, fpr, fnr, n)| OutlierSweepPoint {
            nu,
            fpr: fpr / n as f64,
            fnr: fnr / n as f64,
        })
        .collect();
    nu_sweep.sort_by(|a, b| a.nu.partial_cmp(&b.nu).unwrap());

    Ok(ExperimentOutcome {
        per_subject,
        models,
        skipped,
        eer,
        proba_pos,
        proba_neg,
        nu_sweep,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    model: TrainedModel,
}

/// Write a model as versioned JSON.
pub fn persist_model(model: &TrainedModel, path: &Path) -> Result<(), PipelineError> {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        model: model.clone(),
    };
    let mut buf = serde_json::to_vec_pretty(&file).map_err(|e| PipelineError::CorruptFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    buf.push(b'\n');
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&buf).map_err(io_err(path))
}

/// Read a model back, checking the schema version.
pub fn load_model(path: &Path) -> Result<TrainedModel, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    load_model_json_versioned(&text).map_err(|e| match e {
        ModelJsonError::Corrupt(reason) => PipelineError::CorruptFile {
            path: path.to_path_buf(),
            reason,
        },
        ModelJsonError::Version(found) => PipelineError::SchemaVersionMismatch {
            found,
            supported: MODEL_SCHEMA_VERSION,
        },
    })
}

/// Why a model JSON document could not be loaded.
#[derive(Debug)]
pub enum ModelJsonError {
    Corrupt(String),
    Version(u32),
}

/// Parse a versioned model JSON document (the `persist_model` format).
pub fn load_model_json_versioned(text: &str) -> Result<TrainedModel, ModelJsonError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| ModelJsonError::Corrupt(e.to_string()))?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(ModelJsonError::Version(file.schema_version));
    }
    Ok(file.model)
}
