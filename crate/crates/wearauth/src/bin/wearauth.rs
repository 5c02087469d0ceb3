//! Batch CLI for the wearable-authentication pipeline.
//!
//! Exit codes: 0 ok, 2 usage/config error, 3 data error, 4 convergence
//! failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wearauth::data::{
    filter_aligned, parse_records_with, segment_windows, write_records_csv, ActivityPeriod,
    IngestOptions,
};
use wearauth::eval::{
    decision_scores, make_split, probability_scores, sweep_outlier_fraction, sweep_scores,
    write_outlier_sweep_csv, write_sweep_csv, SplitSpec, MIN_WINDOWS_PER_SUBJECT,
};
use wearauth::features::{BiometricCombo, FeatureMatrix};
use wearauth::pipeline::{
    load_config, persist_model, run_pipeline, FailureKind, ModelConfig, PipelineError,
};
use wearauth::selection::{prune_pearson, select_ks, select_sd, FeatureSetSpec, SelectionApproach};
use wearauth::svm::{train_binary, train_unary, ModelKind, TrainedModel};
use wearauth::synth::generate_dataset;

#[derive(Parser)]
#[command(
    name = "wearauth",
    version,
    about = "Implicit wearable-user authentication from minute-level biometrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort CSV (plus a profiles sidecar).
    Synth {
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        /// Minutes per subject.
        #[arg(long, default_value_t = 20160)]
        minutes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the drawn subject profiles.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Parse and validate a CSV, reporting alignment drops.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        met_scale: f64,
        /// Rewrite the sorted, validated records here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Segment windows and write the feature matrix CSV.
    Features {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        met_scale: f64,
        #[arg(long, value_parser = parse_period, default_value = "sedentary")]
        period: ActivityPeriod,
        #[arg(long, default_value = "CSMH")]
        combo: String,
        /// Append the ordinal activity feature (defaults on for non-sedentary).
        #[arg(long)]
        include_activity: Option<bool>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run feature selection over a feature matrix.
    Select {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_parser = parse_approach, default_value = "KS")]
        approach: SelectionApproach,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Fraction of subjects that must reach significance.
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        /// Pearson redundancy threshold.
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        /// SD feature count (defaults to all surviving features).
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per subject from a feature matrix.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        feature_set: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.75)]
        train_fraction: f64,
        /// Train only this subject (default: every eligible subject).
        #[arg(long)]
        subject: Option<String>,
        /// Directory for the model JSON files.
        #[arg(long)]
        model_dir: PathBuf,
    },
    /// Train and evaluate every subject, writing the report.
    Eval {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        feature_set: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.75)]
        train_fraction: f64,
        #[arg(long)]
        out_json: PathBuf,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Probability-threshold sweep pooled over all subjects.
    SweepThreshold {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        feature_set: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.75)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Outlier-fraction sweep of the one-class model.
    SweepOutlier {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        feature_set: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.75)]
        train_fraction: f64,
        /// Comma-separated outlier fractions.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.3, 0.5])]
        nu_grid: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the report of a finished run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Execute the full pipeline from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overwrite an existing run directory.
        #[arg(long)]
        force: bool,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the worker count.
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_parser = parse_kind, default_value = "binary")]
    kind: ModelKind,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.05)]
    nu: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_passes: usize,
    #[arg(long, default_value_t = true)]
    normalize: bool,
}

impl ModelArgs {
    fn to_config(&self) -> ModelConfig {
        ModelConfig {
            kind: self.kind,
            gamma: self.gamma,
            degree: self.degree,
            c: self.c,
            nu: self.nu,
            tol: self.tol,
            max_passes: self.max_passes,
            normalize: self.normalize,
        }
    }
}

fn parse_period(s: &str) -> Result<ActivityPeriod, String> {
    match s.to_ascii_lowercase().as_str() {
        "sedentary" => Ok(ActivityPeriod::Sedentary),
        "non-sedentary" | "nonsedentary" => Ok(ActivityPeriod::NonSedentary),
        _ => Err(format!("unknown period {s:?} (sedentary | non-sedentary)")),
    }
}

fn parse_approach(s: &str) -> Result<SelectionApproach, String> {
    SelectionApproach::parse(s).ok_or_else(|| format!("unknown approach {s:?} (KS | PC | SD)"))
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "binary" => Ok(ModelKind::Binary),
        "unary" => Ok(ModelKind::Unary),
        _ => Err(format!("unknown model kind {s:?} (binary | unary)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn data_err(stage: &'static str, err: impl std::fmt::Display) -> PipelineError {
    PipelineError::StageFailure {
        stage,
        kind: FailureKind::Data,
        message: err.to_string(),
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Synth { subjects, minutes, seed, out, profiles } => {
            let dataset =
                generate_dataset(subjects, minutes, seed).map_err(|e| data_err("synth", e))?;
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &dataset.records).map_err(io_err(&out))?;
            fs::write(&out, buf).map_err(io_err(&out))?;
            if let Some(path) = profiles {
                let json = serde_json::to_string_pretty(&dataset.profiles)
                    .expect("profiles serialize");
                fs::write(&path, json + "\n").map_err(io_err(&path))?;
            }
            println!("wrote {} rows for {subjects} subjects to {}", subjects * minutes, out.display());
            Ok(())
        }
        Command::Ingest { csv, met_scale, out } => {
            let records = read_records(&csv, met_scale)?;
            let aligned = filter_aligned(&records);
            println!("{} records, {} aligned minutes", records.len(), aligned.minutes.len());
            for (subject, dropped) in &aligned.dropped {
                println!("  {subject}: dropped {dropped} incomplete minutes");
            }
            if let Some(path) = out {
                let mut buf = Vec::new();
                write_records_csv(&mut buf, &records).map_err(io_err(&path))?;
                fs::write(&path, buf).map_err(io_err(&path))?;
            }
            Ok(())
        }
        Command::Features { csv, met_scale, period, combo, include_activity, out } => {
            let records = read_records(&csv, met_scale)?;
            let aligned = filter_aligned(&records);
            let windows = segment_windows(&aligned.minutes, period);
            if windows.is_empty() {
                return Err(data_err("window", "no windows after segmentation"));
            }
            let combo = BiometricCombo::parse(&combo).map_err(|e| PipelineError::ConfigInvalid {
                field: "combo".into(),
                reason: e.to_string(),
            })?;
            let include = include_activity.unwrap_or(period == ActivityPeriod::NonSedentary);
            let matrix = FeatureMatrix::from_windows(&windows, &combo, include)
                .map_err(|e| data_err("features", e))?;
            let mut buf = Vec::new();
            matrix.write_csv(&mut buf).map_err(io_err(&out))?;
            fs::write(&out, buf).map_err(io_err(&out))?;
            println!("{} windows x {} features -> {}", matrix.n_rows(), matrix.n_features(), out.display());
            Ok(())
        }
        Command::Select { features, approach, alpha, tau, rho, top_k, out } => {
            let matrix = read_matrix(&features)?;
            let ks = select_ks(&matrix, alpha, tau).map_err(|e| data_err("select", e))?;
            let spec = match approach {
                SelectionApproach::Ks => ks,
                SelectionApproach::Pc => {
                    prune_pearson(&matrix, &ks, rho).map_err(|e| data_err("select", e))?
                }
                SelectionApproach::Sd => {
                    let k = top_k.unwrap_or(ks.selected.len()).min(ks.selected.len()).max(1);
                    select_sd(&matrix, &ks, k).map_err(|e| data_err("select", e))?
                }
            };
            let json = serde_json::to_string_pretty(&spec).expect("spec serializes");
            fs::write(&out, json + "\n").map_err(io_err(&out))?;
            println!("{} features selected ({approach}) -> {}", spec.selected.len(), out.display());
            Ok(())
        }
        Command::Train {
            features,
            feature_set,
            model,
            seed,
            train_fraction,
            subject,
            model_dir,
        } => {
            let (matrix, spec) = read_selected(&features, &feature_set)?;
            let subjects = eligible_subjects(&matrix, subject.as_deref())?;
            fs::create_dir_all(&model_dir).map_err(io_err(&model_dir))?;
            for sid in &subjects {
                let trained = train_subject(&matrix, &spec, sid, &model.to_config(), seed, train_fraction)?;
                let path = model_dir.join(format!("{sid}.json"));
                persist_model(&trained.model, &path)?;
                println!(
                    "{sid}: {} SVs, train acc {:.3} -> {}",
                    trained.model.support_vectors.len(),
                    trained.train_acc,
                    path.display()
                );
            }
            Ok(())
        }
        Command::Eval {
            features,
            feature_set,
            model,
            seed,
            train_fraction,
            out_json,
            out_csv,
        } => {
            let (matrix, spec) = read_selected(&features, &feature_set)?;
            let report = evaluate_all(&matrix, &spec, &model.to_config(), seed, train_fraction)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            fs::write(&out_json, json + "\n").map_err(io_err(&out_json))?;
            if let Some(path) = out_csv {
                let mut buf = Vec::new();
                report.write_csv(&mut buf).map_err(io_err(&path))?;
                fs::write(&path, buf).map_err(io_err(&path))?;
            }
            println!(
                "N={} subjects, mean ACC {:.3}, FPR {:.3}, FNR {:.3}",
                report.n_subjects, report.acc.mean, report.fpr.mean, report.fnr.mean
            );
            Ok(())
        }
        Command::SweepThreshold {
            features,
            feature_set,
            model,
            seed,
            train_fraction,
            grid_step,
            out,
        } => {
            if model.kind == ModelKind::Unary {
                return Err(PipelineError::ConfigInvalid {
                    field: "kind".into(),
                    reason: "probability sweeps need the binary model".into(),
                });
            }
            if !(grid_step > 0.0 && grid_step <= 1.0) {
                return Err(PipelineError::ConfigInvalid {
                    field: "grid_step".into(),
                    reason: format!("must lie in (0,1], got {grid_step}"),
                });
            }
            let (matrix, spec) = read_selected(&features, &feature_set)?;
            let subjects = eligible_subjects(&matrix, None)?;
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for sid in &subjects {
                let trained =
                    train_subject(&matrix, &spec, sid, &model.to_config(), seed, train_fraction)?;
                if trained.model.platt.is_none() {
                    continue;
                }
                pos.extend(
                    probability_scores(&trained.model, &trained.test_pos)
                        .map_err(|e| data_err("sweep-threshold", e))?,
                );
                neg.extend(
                    probability_scores(&trained.model, &trained.test_neg)
                        .map_err(|e| data_err("sweep-threshold", e))?,
                );
            }
            if pos.is_empty() || neg.is_empty() {
                return Err(data_err("sweep-threshold", "no calibrated models produced scores"));
            }
            let steps = (1.0 / grid_step).round() as usize;
            let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * grid_step).collect();
            let rows = sweep_scores(&pos, &neg, &grid);
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows).map_err(io_err(&out))?;
            fs::write(&out, buf).map_err(io_err(&out))?;
            println!("{} grid points -> {}", rows.len(), out.display());
            Ok(())
        }
        Command::SweepOutlier {
            features,
            feature_set,
            model,
            seed,
            train_fraction,
            nu_grid,
            out,
        } => {
            let (matrix, _spec) = read_selected(&features, &feature_set)?;
            let subjects = eligible_subjects(&matrix, None)?;
            let model_config = model.to_config();
            let mut acc: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
            for sid in &subjects {
                let split = split_rows(&matrix, sid, seed, train_fraction)?;
                let rows = sweep_outlier_fraction(
                    &split.train_pos,
                    &split.test_pos,
                    &split.test_neg,
                    &nu_grid,
                    &model_config.unary_kernel(),
                    &model_config.train_config(seed),
                )
                .map_err(|e| data_err("sweep-outlier", e))?;
                for row in rows {
                    let e = acc.entry(row.nu.to_bits()).or_insert((row.nu, 0.0, 0.0, 0));
                    e.1 += row.fpr;
                    e.2 += row.fnr;
                    e.3 += 1;
                }
            }
            let mut rows: Vec<wearauth::eval::OutlierSweepPoint> = acc
                .into_values()
                .map(|(nu, fpr, fnr, n)| wearauth::eval::OutlierSweepPoint {
                    nu,
                    fpr: fpr / n as f64,
                    fnr: fnr / n as f64,
                })
                .collect();
            rows.sort_by(|a, b| a.nu.partial_cmp(&b.nu).unwrap());
            let mut buf = Vec::new();
            write_outlier_sweep_csv(&mut buf, &rows).map_err(io_err(&out))?;
            fs::write(&out, buf).map_err(io_err(&out))?;
            println!("{} nu values -> {}", rows.len(), out.display());
            Ok(())
        }
        Command::Report { run_dir } => {
            let path = run_dir.join("report.csv");
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            print!("{text}");
            Ok(())
        }
        Command::Run { config, force, seed, out_dir, parallelism } => {
            let mut config = load_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(dir) = out_dir {
                config.out_dir = dir;
            }
            if let Some(workers) = parallelism {
                config.parallelism = Some(workers);
            }
            let artifacts = run_pipeline(&config, force)?;
            println!("run directory: {}", artifacts.run_dir.display());
            println!(
                "N={} subjects, mean ACC {:.3}, FPR {:.3}, FNR {:.3}",
                artifacts.report.n_subjects,
                artifacts.report.acc.mean,
                artifacts.report.fpr.mean,
                artifacts.report.fnr.mean
            );
            if let Some(eer) = artifacts.report.eer {
                println!("pooled EER {:.3} at threshold {:.4}", eer.eer, eer.threshold);
            }
            Ok(())
        }
    }
}

fn read_records(path: &PathBuf, met_scale: f64) -> Result<Vec<wearauth::data::BiometricRecord>, PipelineError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_records_with(bytes.as_slice(), &IngestOptions { met_scale })
        .map_err(|e| data_err("ingest", e))
}

fn read_matrix(path: &PathBuf) -> Result<FeatureMatrix, PipelineError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    FeatureMatrix::read_csv(bytes.as_slice()).map_err(|e| data_err("features", e))
}

fn read_selected(
    features: &PathBuf,
    feature_set: &PathBuf,
) -> Result<(FeatureMatrix, FeatureSetSpec), PipelineError> {
    let matrix = read_matrix(features)?;
    let text = fs::read_to_string(feature_set).map_err(io_err(feature_set))?;
    let spec: FeatureSetSpec =
        serde_json::from_str(&text).map_err(|e| PipelineError::CorruptFile {
            path: feature_set.clone(),
            reason: e.to_string(),
        })?;
    let selected = matrix.select(&spec.selected).map_err(|e| data_err("select", e))?;
    Ok((selected, spec))
}

fn eligible_subjects(
    matrix: &FeatureMatrix,
    only: Option<&str>,
) -> Result<Vec<String>, PipelineError> {
    let by_subject = matrix.rows_by_subject();
    let list: Vec<String> = by_subject
        .iter()
        .filter(|(sid, rows)| {
            rows.len() >= MIN_WINDOWS_PER_SUBJECT && only.is_none_or(|o| o == sid.as_str())
        })
        .map(|(sid, _)| sid.clone())
        .collect();
    if list.is_empty() {
        return Err(data_err("train", "no eligible subjects (too few windows?)"));
    }
    Ok(list)
}

struct TrainedSubject {
    model: TrainedModel,
    train_acc: f64,
    test_pos: Vec<Vec<f64>>,
    test_neg: Vec<Vec<f64>>,
}

struct SplitRows {
    train_pos: Vec<Vec<f64>>,
    test_pos: Vec<Vec<f64>>,
    test_neg: Vec<Vec<f64>>,
}

fn split_rows(
    matrix: &FeatureMatrix,
    subject: &str,
    seed: u64,
    train_fraction: f64,
) -> Result<SplitRows, PipelineError> {
    let by_subject = matrix.rows_by_subject();
    let split = make_split(
        &by_subject,
        subject,
        &SplitSpec { train_fraction, seed, balanced: true, chronological: false },
    )
    .map_err(|e| data_err("eval", e))?;
    let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| matrix.values[i].clone()).collect()
    };
    Ok(SplitRows {
        train_pos: rows(&split.train_pos),
        test_pos: rows(&split.test_pos),
        test_neg: rows(&split.test_neg),
    })
}

fn train_subject(
    matrix: &FeatureMatrix,
    spec: &FeatureSetSpec,
    subject: &str,
    model_config: &ModelConfig,
    seed: u64,
    train_fraction: f64,
) -> Result<TrainedSubject, PipelineError> {
    let by_subject = matrix.rows_by_subject();
    let split = make_split(
        &by_subject,
        subject,
        &SplitSpec { train_fraction, seed, balanced: true, chronological: false },
    )
    .map_err(|e| data_err("eval", e))?;
    let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| matrix.values[i].clone()).collect()
    };
    let train_pos = rows(&split.train_pos);
    let train_neg = rows(&split.train_neg);
    let test_pos = rows(&split.test_pos);
    let test_neg = rows(&split.test_neg);

    let train_cfg = model_config.train_config(seed);
    let mut model = match model_config.kind {
        ModelKind::Binary => {
            let mut x = train_pos.clone();
            x.extend(train_neg.iter().cloned());
            let mut y = vec![1.0; train_pos.len()];
            y.extend(std::iter::repeat_n(-1.0, train_neg.len()));
            train_binary(&x, &y, &model_config.kernel(), &train_cfg).map_err(|e| {
                PipelineError::StageFailure {
                    stage: "train",
                    kind: if matches!(e, wearauth::svm::SvmError::NoConvergence { .. }) {
                        FailureKind::Convergence
                    } else {
                        FailureKind::Data
                    },
                    message: e.to_string(),
                }
            })?
        }
        ModelKind::Unary => train_unary(&train_pos, &model_config.kernel(), &train_cfg)
            .map_err(|e| data_err("train", e))?,
    };
    model.subject_id = subject.to_string();
    model.feature_set = Some(spec.clone());

    let pos_scores = decision_scores(&model, &train_pos).map_err(|e| data_err("train", e))?;
    let train_acc =
        pos_scores.iter().filter(|s| **s >= 0.0).count() as f64 / pos_scores.len().max(1) as f64;

    Ok(TrainedSubject { model, train_acc, test_pos, test_neg })
}

fn evaluate_all(
    matrix: &FeatureMatrix,
    spec: &FeatureSetSpec,
    model_config: &ModelConfig,
    seed: u64,
    train_fraction: f64,
) -> Result<wearauth::eval::EvalReport, PipelineError> {
    use wearauth::eval::{aggregate_report, compute_eer, evaluate_scores, ReportMeta, SubjectResult};

    let subjects = eligible_subjects(matrix, None)?;
    let mut per_subject = Vec::new();
    let mut all_pos = Vec::new();
    let mut all_neg = Vec::new();
    for sid in &subjects {
        let trained = train_subject(matrix, spec, sid, model_config, seed, train_fraction)?;
        let pos = decision_scores(&trained.model, &trained.test_pos).map_err(|e| data_err("eval", e))?;
        let neg = decision_scores(&trained.model, &trained.test_neg).map_err(|e| data_err("eval", e))?;
        let metrics = evaluate_scores(&pos, &neg, 0.0).map_err(|e| data_err("eval", e))?;
        per_subject.push(SubjectResult {
            subject_id: sid.clone(),
            acc: metrics.acc,
            fpr: metrics.fpr,
            fnr: metrics.fnr,
        });
        all_pos.extend(pos);
        all_neg.extend(neg);
    }
    let counts: Vec<usize> = matrix.rows_by_subject().values().map(|v| v.len()).collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let meta = ReportMeta {
        approach: spec.approach.to_string(),
        combo: "-".into(),
        period: matrix
            .rows
            .first()
            .map(|r| r.activity_level.period())
            .unwrap_or(ActivityPeriod::Sedentary),
        model_kind: match model_config.kind {
            ModelKind::Binary => "binary".into(),
            ModelKind::Unary => "unary".into(),
        },
        n_features: spec.selected.len(),
        windows_per_subject: sorted.get(sorted.len() / 2).copied().unwrap_or(0),
        selection_params: Some(spec.params.clone()),
    };
    let eer = compute_eer(&all_pos, &all_neg).ok();
    aggregate_report(per_subject, meta, eer, BTreeMap::new()).map_err(|e| data_err("eval", e))
}
