//! Train/test construction with class balancing, ACC/FPR/FNR/EER metrics,
//! probability-threshold and outlier-fraction sweeps, and per-subject
//! report aggregation.
//!
//! Splits are per target subject: the target's windows form the positive
//! class (75/25 train/test by default), impostor windows are sampled without
//! replacement to the same sizes, stratified round-robin across impostor
//! subjects so no single impostor dominates the negative class.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ActivityPeriod;
use crate::selection::SelectionParams;
use crate::svm::{SvmError, TrainConfig, TrainedModel};

/// Smallest usable window count per subject: guarantees at least two test
/// windows per class under the default 75/25 split.
pub const MIN_WINDOWS_PER_SUBJECT: usize = 8;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("parameter {name} = {value} outside its valid range")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("subject {subject} has {available} windows, need at least {needed}")]
    InsufficientWindows {
        subject: String,
        available: usize,
        needed: usize,
    },
    #[error("subject {0} not present in the window map")]
    UnknownSubject(String),
    #[error("negative pool too small: need {needed}, have {available}")]
    NegativePoolTooSmall { needed: usize, available: usize },
    #[error("test sets must be non-empty")]
    EmptyTestSet,
    #[error("score lists must be non-empty")]
    EmptyScores,
    #[error("no per-subject results to aggregate")]
    EmptyResults,
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// How to cut one subject's experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub balanced: bool,
    /// Keep window order instead of shuffling (leakage-sensitivity runs).
    pub chronological: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.75,
            seed: 0,
            balanced: true,
            chronological: false,
        }
    }
}

/// Row indices of one experiment's four sets. Train and test are disjoint;
/// positive and negative sides have equal sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train_pos: Vec<usize>,
    pub train_neg: Vec<usize>,
    pub test_pos: Vec<usize>,
    pub test_neg: Vec<usize>,
}

/// Build a balanced split for `target` from per-subject window indices.
pub fn make_split(
    windows_by_subject: &BTreeMap<String, Vec<usize>>,
    target: &str,
    spec: &SplitSpec,
) -> Result<Split, EvalError> {
    if !spec.train_fraction.is_finite()
        || spec.train_fraction <= 0.0
        || spec.train_fraction >= 1.0
    {
        return Err(EvalError::InvalidParameter {
            name: "train_fraction",
            value: spec.train_fraction,
        });
    }
    let own = windows_by_subject
        .get(target)
        .ok_or_else(|| EvalError::UnknownSubject(target.to_string()))?;
    if own.len() < MIN_WINDOWS_PER_SUBJECT {
        return Err(EvalError::InsufficientWindows {
            subject: target.to_string(),
            available: own.len(),
            needed: MIN_WINDOWS_PER_SUBJECT,
        });
    }

    let mut positives = own.clone();
    if !spec.chronological {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(spec.seed, target));
        positives.shuffle(&mut rng);
    }
    let n_train = ((positives.len() as f64 * spec.train_fraction).floor() as usize)
        .clamp(1, positives.len() - 1);
    let train_pos: Vec<usize> = positives[..n_train].to_vec();
    let test_pos: Vec<usize> = positives[n_train..].to_vec();

    // negative pool: round-robin over impostors, each shuffled independently
    let mut impostor_lists: Vec<Vec<usize>> = Vec::new();
    for (subject, rows) in windows_by_subject {
        if subject == target {
            continue;
        }
        let mut rows = rows.clone();
        if !spec.chronological {
            let tag = format!("{target}|{subject}");
            let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(spec.seed, &tag));
            rows.shuffle(&mut rng);
        }
        impostor_lists.push(rows);
    }
    let needed = train_pos.len() + test_pos.len();
    let available: usize = impostor_lists.iter().map(|l| l.len()).sum();
    if available < needed {
        return Err(EvalError::NegativePoolTooSmall { needed, available });
    }

    let mut negatives = Vec::with_capacity(needed);
    let mut depth = 0usize;
    'outer: loop {
        let mut any = false;
        for list in &impostor_lists {
            if let Some(&row) = list.get(depth) {
                any = true;
                negatives.push(row);
                if negatives.len() == needed {
                    break 'outer;
                }
            }
        }
        if !any {
            break;
        }
        depth += 1;
    }

    Ok(Split {
        train_neg: negatives[..train_pos.len()].to_vec(),
        test_neg: negatives[train_pos.len()..].to_vec(),
        train_pos,
        test_pos,
    })
}

/// Confusion-derived rates: positive prediction when score >= threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// Compute ACC/FPR/FNR from genuine and impostor scores at a threshold.
pub fn evaluate_scores(
    scores_pos: &[f64],
    scores_neg: &[f64],
    threshold: f64,
) -> Result<Metrics, EvalError> {
    if scores_pos.is_empty() || scores_neg.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let tp = scores_pos.iter().filter(|s| **s >= threshold).count();
    let fn_ = scores_pos.len() - tp;
    let fp = scores_neg.iter().filter(|s| **s >= threshold).count();
    let tn = scores_neg.len() - fp;
    Ok(Metrics {
        acc: (tp + tn) as f64 / (scores_pos.len() + scores_neg.len()) as f64,
        fpr: fp as f64 / scores_neg.len() as f64,
        fnr: fn_ as f64 / scores_pos.len() as f64,
    })
}

/// Which score domain a threshold applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Raw signed decision value; the natural operating point is 0.
    Decision,
    /// Platt posterior probability in [0, 1]; needs a calibrated model.
    Probability,
}

/// Score a model on test windows and evaluate at a threshold on the chosen
/// score domain.
pub fn evaluate_model(
    model: &TrainedModel,
    test_pos: &[Vec<f64>],
    test_neg: &[Vec<f64>],
    threshold: f64,
    kind: ScoreKind,
) -> Result<Metrics, EvalError> {
    if test_pos.is_empty() || test_neg.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let (pos, neg) = match kind {
        ScoreKind::Decision => (decision_scores(model, test_pos)?, decision_scores(model, test_neg)?),
        ScoreKind::Probability => (
            probability_scores(model, test_pos)?,
            probability_scores(model, test_neg)?,
        ),
    };
    evaluate_scores(&pos, &neg, threshold)
}

pub fn decision_scores(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    rows.iter()
        .map(|r| model.decision_value(r).map_err(EvalError::from))
        .collect()
}

pub fn probability_scores(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    rows.iter()
        .map(|r| model.predict_proba(r).map_err(EvalError::from))
        .collect()
}

/// The operating point where the two error rates meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerPoint {
    pub eer: f64,
    pub threshold: f64,
}

/// Equal error rate: sweep thresholds over the sorted score union; FNR is
/// non-decreasing and FPR non-increasing in the threshold, and the crossing
/// is located by linear interpolation between adjacent candidates.
pub fn compute_eer(scores_pos: &[f64], scores_neg: &[f64]) -> Result<EerPoint, EvalError> {
    if scores_pos.is_empty() || scores_neg.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let mut pos = scores_pos.to_vec();
    let mut neg = scores_neg.to_vec();
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    neg.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut thresholds: Vec<f64> = pos.iter().chain(neg.iter()).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    // sentinel beyond the maximum: reject-all endpoint (FNR 1, FPR 0)
    let beyond = thresholds.last().unwrap() + 1.0;
    thresholds.push(beyond);

    let count_below = |sorted: &[f64], t: f64| sorted.partition_point(|s| *s < t);
    let rates = |t: f64| {
        let fnr = count_below(&pos, t) as f64 / pos.len() as f64;
        let fpr = 1.0 - count_below(&neg, t) as f64 / neg.len() as f64;
        (fnr, fpr)
    };

    // at -inf: fnr = 0, fpr = 1 -> diff = -1
    let mut prev_t = f64::NEG_INFINITY;
    let (mut prev_fnr, mut prev_fpr) = (0.0f64, 1.0f64);
    for &t in &thresholds {
        let (fnr, fpr) = rates(t);
        let diff = fnr - fpr;
        if diff >= 0.0 {
            let prev_diff = prev_fnr - prev_fpr;
            let lambda = if diff - prev_diff > 0.0 {
                (-prev_diff) / (diff - prev_diff)
            } else {
                1.0
            };
            let eer = prev_fnr + lambda * (fnr - prev_fnr);
            let threshold = if prev_t.is_finite() {
                prev_t + lambda * (t - prev_t)
            } else {
                t
            };
            return Ok(EerPoint { eer, threshold });
        }
        prev_t = t;
        prev_fnr = fnr;
        prev_fpr = fpr;
    }
    // diff reaches +1 at the sentinel, so the sweep always crosses
    unreachable!("EER sweep must cross zero");
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub acc: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// Evaluate probability scores over a threshold grid (rows ordered by
/// threshold). FPR is non-increasing and FNR non-decreasing along the grid.
pub fn sweep_probability_threshold(
    model: &TrainedModel,
    test_pos: &[Vec<f64>],
    test_neg: &[Vec<f64>],
    grid: &[f64],
) -> Result<Vec<SweepPoint>, EvalError> {
    if test_pos.is_empty() || test_neg.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let pos = probability_scores(model, test_pos)?;
    let neg = probability_scores(model, test_neg)?;
    Ok(sweep_scores(&pos, &neg, grid))
}

/// Threshold sweep over precomputed scores.
pub fn sweep_scores(scores_pos: &[f64], scores_neg: &[f64], grid: &[f64]) -> Vec<SweepPoint> {
    let mut thresholds = grid.to_vec();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds
        .iter()
        .map(|&t| {
            let m = evaluate_scores(scores_pos, scores_neg, t).expect("non-empty scores");
            SweepPoint {
                threshold: t,
                acc: m.acc,
                fpr: m.fpr,
                fnr: m.fnr,
            }
        })
        .collect()
}

/// Default probability grid: 0.00 to 1.00 in steps of 0.01.
pub fn default_probability_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// One row of an outlier-fraction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierSweepPoint {
    pub nu: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// Train a one-class model per nu on the training positives and evaluate
/// each on the same held-out balanced test sets. Rows are ordered by nu.
pub fn sweep_outlier_fraction(
    train_pos: &[Vec<f64>],
    test_pos: &[Vec<f64>],
    test_neg: &[Vec<f64>],
    nu_grid: &[f64],
    kernel: &crate::svm::KernelSpec,
    cfg: &TrainConfig,
) -> Result<Vec<OutlierSweepPoint>, EvalError> {
    let mut grid = nu_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(grid.len());
    for nu in grid {
        let mut cfg_nu = *cfg;
        cfg_nu.nu = nu;
        let model = crate::svm::train_unary(train_pos, kernel, &cfg_nu)?;
        let metrics = evaluate_model(&model, test_pos, test_neg, 0.0, ScoreKind::Decision)?;
        out.push(OutlierSweepPoint {
            nu,
            fpr: metrics.fpr,
            fnr: metrics.fnr,
        });
    }
    Ok(out)
}

/// Metrics of one subject's experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectResult {
    pub subject_id: String,
    pub acc: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// Mean and sample standard deviation across subjects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

fn summarize(values: impl Iterator<Item = f64> + Clone) -> MetricSummary {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let std = if n > 1.0 {
        (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, std }
}

/// Experiment identity recorded alongside the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub approach: String,
    pub combo: String,
    pub period: ActivityPeriod,
    pub model_kind: String,
    /// Feature count n.
    pub n_features: usize,
    /// Windows per subject |W|: the configured cap when set, otherwise the
    /// median used count.
    pub windows_per_subject: usize,
    pub selection_params: Option<SelectionParams>,
}

/// The summary table of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub meta: ReportMeta,
    /// Subject count N.
    pub n_subjects: usize,
    pub per_subject: Vec<SubjectResult>,
    pub acc: MetricSummary,
    pub fpr: MetricSummary,
    pub fnr: MetricSummary,
    /// Pooled equal error rate over all subjects' test scores, when computed.
    pub eer: Option<EerPoint>,
    /// Set when N = 1 and the standard deviations are degenerate.
    pub degenerate_sigma: bool,
    /// Subjects skipped (too few windows), with their window counts.
    #[serde(default)]
    pub skipped: BTreeMap<String, usize>,
}

/// Aggregate per-subject results into the report (mean and sample sigma).
pub fn aggregate_report(
    per_subject: Vec<SubjectResult>,
    meta: ReportMeta,
    eer: Option<EerPoint>,
    skipped: BTreeMap<String, usize>,
) -> Result<EvalReport, EvalError> {
    if per_subject.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    let acc = summarize(per_subject.iter().map(|r| r.acc));
    let fpr = summarize(per_subject.iter().map(|r| r.fpr));
    let fnr = summarize(per_subject.iter().map(|r| r.fnr));
    Ok(EvalReport {
        meta,
        n_subjects: per_subject.len(),
        degenerate_sigma: per_subject.len() == 1,
        per_subject,
        acc,
        fpr,
        fnr,
        eer,
        skipped,
    })
}

impl EvalReport {
    /// Flat CSV: one row per subject plus aggregate mean/std rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "subject_id,acc,fpr,fnr")?;
        for r in &self.per_subject {
            writeln!(w, "{},{},{},{}", r.subject_id, r.acc, r.fpr, r.fnr)?;
        }
        writeln!(w, "mean,{},{},{}", self.acc.mean, self.fpr.mean, self.fnr.mean)?;
        writeln!(w, "std,{},{},{}", self.acc.std, self.fpr.std, self.fnr.std)?;
        Ok(())
    }
}

/// Write a threshold sweep as `threshold,ACC,FPR,FNR`.
pub fn write_sweep_csv<W: std::io::Write>(mut w: W, rows: &[SweepPoint]) -> std::io::Result<()> {
    writeln!(w, "threshold,ACC,FPR,FNR")?;
    for p in rows {
        writeln!(w, "{},{},{},{}", p.threshold, p.acc, p.fpr, p.fnr)?;
    }
    Ok(())
}

/// Write an outlier sweep as `nu,FPR,FNR`.
pub fn write_outlier_sweep_csv<W: std::io::Write>(
    mut w: W,
    rows: &[OutlierSweepPoint],
) -> std::io::Result<()> {
    writeln!(w, "nu,FPR,FNR")?;
    for p in rows {
        writeln!(w, "{},{},{}", p.nu, p.fpr, p.fnr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn window_map(counts: &[(&str, usize)]) -> BTreeMap<String, Vec<usize>> {
        let mut map = BTreeMap::new();
        let mut next = 0usize;
        for (sid, n) in counts {
            map.insert(sid.to_string(), (next..next + n).collect());
            next += n;
        }
        map
    }

    #[test]
    fn split_sizes_follow_the_75_25_rule() {
        let map = window_map(&[("a", 100), ("b", 120), ("c", 90)]);
        let split = make_split(&map, "a", &SplitSpec::default()).unwrap();
        assert_eq!(split.train_pos.len(), 75);
        assert_eq!(split.test_pos.len(), 25);
        assert_eq!(split.train_neg.len(), 75);
        assert_eq!(split.test_neg.len(), 25);
    }

    #[test]
    fn split_rejects_bad_train_fraction() {
        let map = window_map(&[("a", 50), ("b", 50)]);
        for bad in [0.0, 1.0, -0.2, f64::NAN] {
            let spec = SplitSpec { train_fraction: bad, ..SplitSpec::default() };
            assert!(matches!(
                make_split(&map, "a", &spec),
                Err(EvalError::InvalidParameter { name: "train_fraction", .. })
            ));
        }
    }

    #[test]
    fn split_rejects_small_subjects() {
        let map = window_map(&[("a", 7), ("b", 100)]);
        assert!(matches!(
            make_split(&map, "a", &SplitSpec::default()),
            Err(EvalError::InsufficientWindows { available: 7, .. })
        ));
    }

    #[test]
    fn split_is_deterministic_given_seed() {
        let map = window_map(&[("a", 40), ("b", 50), ("c", 60)]);
        let spec = SplitSpec { seed: 9, ..SplitSpec::default() };
        let s1 = make_split(&map, "a", &spec).unwrap();
        let s2 = make_split(&map, "a", &spec).unwrap();
        assert_eq!(s1, s2);
        let other = make_split(&map, "a", &SplitSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(s1, other);
    }

    #[test]
    fn split_sets_are_disjoint_and_balanced() {
        let map = window_map(&[("a", 41), ("b", 33), ("c", 55), ("d", 29)]);
        for target in ["a", "b", "c", "d"] {
            let s = make_split(&map, target, &SplitSpec::default()).unwrap();
            let mut all: Vec<usize> = s
                .train_pos
                .iter()
                .chain(&s.train_neg)
                .chain(&s.test_pos)
                .chain(&s.test_neg)
                .copied()
                .collect();
            let total = all.len();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), total, "overlap for target {target}");
            assert_eq!(s.train_pos.len(), s.train_neg.len());
            assert_eq!(s.test_pos.len(), s.test_neg.len());

            // positives belong to the target, negatives never do
            let own = &map[target];
            assert!(s.train_pos.iter().all(|i| own.contains(i)));
            assert!(s.test_pos.iter().all(|i| own.contains(i)));
            assert!(s.train_neg.iter().all(|i| !own.contains(i)));
            assert!(s.test_neg.iter().all(|i| !own.contains(i)));
        }
    }

    #[test]
    fn negatives_are_stratified_across_impostors() {
        let map = window_map(&[("a", 60), ("b", 100), ("c", 100), ("d", 100)]);
        let s = make_split(&map, "a", &SplitSpec::default()).unwrap();
        let mut counts = BTreeMap::new();
        for idx in s.train_neg.iter().chain(&s.test_neg) {
            for (sid, rows) in &map {
                if rows.contains(idx) {
                    *counts.entry(sid.clone()).or_insert(0usize) += 1;
                }
            }
        }
        // 60 negatives over 3 impostors -> 20 each under round-robin
        assert_eq!(counts["b"], 20);
        assert_eq!(counts["c"], 20);
        assert_eq!(counts["d"], 20);
    }

    #[test]
    fn chronological_split_preserves_order() {
        let map = window_map(&[("a", 10), ("b", 30)]);
        let spec = SplitSpec { chronological: true, ..SplitSpec::default() };
        let s = make_split(&map, "a", &spec).unwrap();
        assert_eq!(s.train_pos, (0..7).collect::<Vec<_>>());
        assert_eq!(s.test_pos, (7..10).collect::<Vec<_>>());
    }

    #[test]
    fn metrics_of_perfect_separation() {
        let m = evaluate_scores(&[1.0, 2.0, 3.0], &[-1.0, -2.0], 0.0).unwrap();
        assert_eq!(m.acc, 1.0);
        assert_eq!(m.fpr, 0.0);
        assert_eq!(m.fnr, 0.0);
    }

    #[test]
    fn accept_all_threshold() {
        let m = evaluate_scores(&[1.0, -5.0], &[2.0, -3.0], f64::NEG_INFINITY).unwrap();
        assert_eq!(m.fpr, 1.0);
        assert_eq!(m.fnr, 0.0);
    }

    #[test]
    fn count_by_hand_fixture() {
        // 10 positives with 2 below threshold, 10 negatives with 1 above.
        let pos: Vec<f64> = (0..8).map(|_| 1.0).chain([-1.0, -1.0]).collect();
        let neg: Vec<f64> = (0..9).map(|_| -1.0).chain([1.0]).collect();
        let m = evaluate_scores(&pos, &neg, 0.0).unwrap();
        assert_abs_diff_eq!(m.acc, 0.85);
        assert_abs_diff_eq!(m.fpr, 0.1);
        assert_abs_diff_eq!(m.fnr, 0.2);
    }

    #[test]
    fn balanced_metric_identity() {
        let pos = [0.9, 0.4, 0.8, -0.1];
        let neg = [0.5, -0.7, -0.2, 0.1];
        for t in [-1.0, 0.0, 0.3, 0.85] {
            let m = evaluate_scores(&pos, &neg, t).unwrap();
            assert_abs_diff_eq!(m.acc, 1.0 - (m.fpr + m.fnr) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eer_of_separated_scores_is_zero() {
        let e = compute_eer(&[2.0, 3.0, 4.0], &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(e.eer, 0.0);
    }

    #[test]
    fn eer_of_identical_multisets_is_half() {
        let scores = [0.1, 0.5, 0.9, 0.3];
        let e = compute_eer(&scores, &scores).unwrap();
        assert_abs_diff_eq!(e.eer, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn eer_fixture_crosses_at_one_third() {
        let e = compute_eer(&[0.9, 0.8, 0.4], &[0.6, 0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(e.eer, 1.0 / 3.0, epsilon = 1e-12);
        assert!(e.threshold > 0.4 && e.threshold <= 0.6, "threshold {}", e.threshold);
    }

    #[test]
    fn eer_bracketing_resolution() {
        let pos = [0.2, 0.55, 0.6, 0.8, 0.9];
        let neg = [0.1, 0.3, 0.5, 0.65, 0.7];
        let e = compute_eer(&pos, &neg).unwrap();
        let m = evaluate_scores(&pos, &neg, e.threshold).unwrap();
        let resolution = 1.0 / pos.len().min(neg.len()) as f64;
        assert!(
            (m.fnr - m.fpr).abs() <= resolution + 1e-12,
            "fnr {} fpr {}",
            m.fnr,
            m.fpr
        );
    }

    #[test]
    fn sweep_is_monotone_in_threshold() {
        let pos = [0.9, 0.7, 0.95, 0.6, 0.85];
        let neg = [0.1, 0.4, 0.55, 0.2, 0.3];
        let rows = sweep_scores(&pos, &neg, &default_probability_grid());
        assert_eq!(rows.len(), 101);
        for pair in rows.windows(2) {
            assert!(pair[1].fpr <= pair[0].fpr + 1e-12);
            assert!(pair[1].fnr + 1e-12 >= pair[0].fnr);
        }
        assert_eq!(rows[0].fnr, 0.0); // threshold 0 accepts everything
        let beyond = sweep_scores(&pos, &neg, &[1.0 + 1e-9]);
        assert_eq!(beyond[0].fpr, 0.0); // threshold beyond 1 rejects everything
    }

    #[test]
    fn probability_threshold_evaluation_uses_platt_scores() {
        use crate::svm::{train_binary, KernelSpec, TrainConfig};
        let mut x: Vec<Vec<f64>> = (0..15).map(|i| vec![1.0 + i as f64 * 0.1, 0.5]).collect();
        x.extend((0..15).map(|i| vec![-1.0 - i as f64 * 0.1, -0.5]));
        let mut y = vec![1.0; 15];
        y.extend(vec![-1.0; 15]);
        let model = train_binary(&x, &y, &KernelSpec::quadratic(), &TrainConfig::default()).unwrap();
        assert!(model.platt.is_some());

        let test_pos: Vec<Vec<f64>> = (0..5).map(|i| vec![1.5 + i as f64 * 0.1, 0.5]).collect();
        let test_neg: Vec<Vec<f64>> = (0..5).map(|i| vec![-1.5 - i as f64 * 0.1, -0.5]).collect();
        let at_half =
            evaluate_model(&model, &test_pos, &test_neg, 0.5, ScoreKind::Probability).unwrap();
        let at_zero_decision =
            evaluate_model(&model, &test_pos, &test_neg, 0.0, ScoreKind::Decision).unwrap();
        assert_eq!(at_half.acc, 1.0);
        assert_eq!(at_zero_decision.acc, 1.0);
        // a probability threshold beyond 1 rejects everything
        let reject_all =
            evaluate_model(&model, &test_pos, &test_neg, 1.0 + 1e-9, ScoreKind::Probability)
                .unwrap();
        assert_eq!(reject_all.fpr, 0.0);
        assert_eq!(reject_all.fnr, 1.0);
    }

    #[test]
    fn single_point_nu_sweep_equals_direct_evaluation() {
        use crate::svm::{train_unary, KernelSpec, TrainConfig};
        let train: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin(), 0.5]).collect();
        let test_pos: Vec<Vec<f64>> = (0..6).map(|i| vec![(i as f64 * 0.53).sin(), 0.5]).collect();
        let test_neg: Vec<Vec<f64>> = (0..6).map(|i| vec![5.0 + i as f64, -2.0]).collect();
        let kernel = KernelSpec::gaussian();
        let cfg = TrainConfig::default();

        let rows = sweep_outlier_fraction(&train, &test_pos, &test_neg, &[0.2], &kernel, &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let mut cfg_direct = cfg;
        cfg_direct.nu = 0.2;
        let model = train_unary(&train, &kernel, &cfg_direct).unwrap();
        let direct = evaluate_model(&model, &test_pos, &test_neg, 0.0, ScoreKind::Decision).unwrap();
        assert_eq!(rows[0].fpr, direct.fpr);
        assert_eq!(rows[0].fnr, direct.fnr);
        assert_eq!(rows[0].nu, 0.2);
    }

    #[test]
    fn nu_near_one_rejects_most_genuine_windows() {
        use crate::svm::{train_unary, KernelSpec, TrainConfig};
        let train: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.41).sin(), (i as f64 * 0.13).cos()])
            .collect();
        let cfg = TrainConfig { nu: 0.95, ..TrainConfig::default() };
        let model = train_unary(&train, &KernelSpec::gaussian(), &cfg).unwrap();
        let rejected = train
            .iter()
            .filter(|p| model.decision_value(p).unwrap() < -cfg.tol)
            .count();
        // nearly all training data flagged outlier when nu approaches 1
        assert!(rejected >= 24, "rejected {rejected}/30");
    }

    #[test]
    fn aggregate_two_subjects() {
        let results = vec![
            SubjectResult { subject_id: "a".into(), acc: 0.8, fpr: 0.1, fnr: 0.3 },
            SubjectResult { subject_id: "b".into(), acc: 0.9, fpr: 0.2, fnr: 0.1 },
        ];
        let report = aggregate_report(results, meta(), None, BTreeMap::new()).unwrap();
        assert_abs_diff_eq!(report.acc.mean, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(report.acc.std, 0.07071067811865475, epsilon = 1e-12);
        assert_eq!(report.n_subjects, 2);
        assert!(!report.degenerate_sigma);
    }

    #[test]
    fn aggregate_single_subject_flags_degenerate_sigma() {
        let results = vec![SubjectResult { subject_id: "a".into(), acc: 0.8, fpr: 0.1, fnr: 0.3 }];
        let report = aggregate_report(results, meta(), None, BTreeMap::new()).unwrap();
        assert_eq!(report.acc.std, 0.0);
        assert!(report.degenerate_sigma);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(matches!(
            aggregate_report(vec![], meta(), None, BTreeMap::new()),
            Err(EvalError::EmptyResults)
        ));
    }

    #[test]
    fn report_csv_shape() {
        let results = vec![
            SubjectResult { subject_id: "a".into(), acc: 0.8, fpr: 0.1, fnr: 0.3 },
            SubjectResult { subject_id: "b".into(), acc: 0.9, fpr: 0.2, fnr: 0.1 },
        ];
        let report = aggregate_report(results, meta(), None, BTreeMap::new()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "subject_id,acc,fpr,fnr");
        assert!(lines[3].starts_with("mean,"));
        assert!(lines[4].starts_with("std,"));
    }

    fn meta() -> ReportMeta {
        ReportMeta {
            approach: "KS".into(),
            combo: "CM".into(),
            period: ActivityPeriod::Sedentary,
            model_kind: "binary".into(),
            n_features: 10,
            windows_per_subject: 50,
            selection_params: None,
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eer_lies_in_unit_interval(
                pos in proptest::collection::vec(-5.0f64..5.0, 1..30),
                neg in proptest::collection::vec(-5.0f64..5.0, 1..30),
            ) {
                let e = compute_eer(&pos, &neg).unwrap();
                prop_assert!((0.0..=1.0).contains(&e.eer));
                // at the reported threshold the two rates differ by at most
                // the rate resolution
                let m = evaluate_scores(&pos, &neg, e.threshold).unwrap();
                let resolution = 1.0 / pos.len().min(neg.len()) as f64;
                prop_assert!((m.fnr - m.fpr).abs() <= resolution + 1e-9);
            }

            #[test]
            fn sweep_monotone_for_random_scores(
                pos in proptest::collection::vec(0.0f64..1.0, 1..40),
                neg in proptest::collection::vec(0.0f64..1.0, 1..40),
            ) {
                let rows = sweep_scores(&pos, &neg, &default_probability_grid());
                for pair in rows.windows(2) {
                    prop_assert!(pair[1].fpr <= pair[0].fpr + 1e-12);
                    prop_assert!(pair[1].fnr + 1e-12 >= pair[0].fnr);
                }
            }
        }
    }
}
