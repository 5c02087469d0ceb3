//! Feature selection: Kolmogorov-Smirnov significance filtering, Pearson
//! correlation redundancy pruning, and standard-deviation count reduction.
//!
//! Selection is global: one feature set per (approach, period), derived from
//! all subjects' windows. The KS pass keeps features whose one-vs-rest
//! distributions differ significantly for enough subjects; the PC and SD
//! passes each shrink that set further, independently of one another.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureMatrix;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("KS statistic needs at least one observation per sample")]
    EmptySample,
    #[error("selection needs at least two subjects, got {0}")]
    InsufficientSubjects(usize),
    #[error("no feature survives KS selection at alpha={alpha}, tau={tau}")]
    NoFeatureSurvives { alpha: f64, tau: f64 },
    #[error("sd_top_k={requested} exceeds the {available} available features")]
    TopKExceedsAvailable { requested: usize, available: usize },
    #[error("feature {0:?} not present in the matrix")]
    UnknownFeature(String),
    #[error("parameter {name} = {value} outside its valid range")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Which reduction produced a feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionApproach {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "PC")]
    Pc,
    #[serde(rename = "SD")]
    Sd,
}

impl SelectionApproach {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionApproach::Ks => "KS",
            SelectionApproach::Pc => "PC",
            SelectionApproach::Sd => "SD",
        }
    }

    pub fn parse(s: &str) -> Option<SelectionApproach> {
        match s.to_ascii_uppercase().as_str() {
            "KS" => Some(SelectionApproach::Ks),
            "PC" => Some(SelectionApproach::Pc),
            "SD" => Some(SelectionApproach::Sd),
            _ => None,
        }
    }
}

impl std::fmt::Display for SelectionApproach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds used by the selection passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// KS significance level.
    pub alpha: f64,
    /// Fraction of subjects that must reach significance (tau).
    pub subject_fraction: f64,
    /// Pearson redundancy threshold (rho).
    pub pc_threshold: f64,
    /// Target feature count for the SD pass.
    pub sd_top_k: Option<usize>,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            alpha: 0.05,
            subject_fraction: 0.5,
            pc_threshold: 0.9,
            sd_top_k: None,
        }
    }
}

/// A selected, ordered feature set plus the parameters that produced it.
///
/// `ks_hits` records, per feature, how many subjects reached one-vs-rest
/// significance in the KS pass; the PC pass uses it to break redundancy
/// ties, so it travels with the spec through persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub approach: SelectionApproach,
    pub params: SelectionParams,
    pub selected: Vec<String>,
    #[serde(default)]
    pub ks_hits: BTreeMap<String, usize>,
}

/// Two-sample Kolmogorov-Smirnov statistic: the supremum of the absolute
/// difference between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, SelectionError> {
    if a.is_empty() || b.is_empty() {
        return Err(SelectionError::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());

    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ecdf_x, mut ecdf_y) = (0.0f64, 0.0f64);
    let mut stat = 0.0f64;
    while i < n && j < m {
        // advance through duplicates so each distinct value is evaluated once
        while i + 1 < n && xs[i] == xs[i + 1] {
            i += 1;
        }
        while j + 1 < m && ys[j] == ys[j + 1] {
            j += 1;
        }
        let current = xs[i].min(ys[j]);
        if xs[i] == current {
            ecdf_x = (i + 1) as f64 / n as f64;
            i += 1;
        }
        if ys[j] == current {
            ecdf_y = (j + 1) as f64 / m as f64;
            j += 1;
        }
        stat = stat.max((ecdf_x - ecdf_y).abs());
    }
    Ok(stat)
}

/// Asymptotic two-sample KS p-value.
///
/// Uses the Kolmogorov distribution `Q(lambda) = 2 sum_j (-1)^(j-1)
/// exp(-2 j^2 lambda^2)` with the small-sample correction
/// `lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) * D`, `n_e = n1*n2/(n1+n2)`.
/// The series is truncated once a term drops below 1e-12; the result is
/// clamped to [0, 1].
pub fn ks_pvalue(d: f64, n1: usize, n2: usize) -> f64 {
    let n_e = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let lambda = (n_e.sqrt() + 0.12 + 0.11 / n_e.sqrt()) * d;
    kolmogorov_q(lambda)
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1u64..=1_000_000 {
        let term = 2.0 * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

/// KS significance filtering: for every feature, run a one-vs-rest KS test
/// per subject and keep the feature when `p < alpha` for at least a `tau`
/// fraction of subjects.
pub fn select_ks(
    matrix: &FeatureMatrix,
    alpha: f64,
    tau: f64,
) -> Result<FeatureSetSpec, SelectionError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(SelectionError::InvalidParameter { name: "alpha", value: alpha });
    }
    if !tau.is_finite() || tau <= 0.0 || tau > 1.0 {
        return Err(SelectionError::InvalidParameter { name: "tau", value: tau });
    }
    let by_subject = matrix.rows_by_subject();
    let n_subjects = by_subject.len();
    if n_subjects < 2 {
        return Err(SelectionError::InsufficientSubjects(n_subjects));
    }
    // membership masks make the one-vs-rest partition a linear scan
    let masks: Vec<Vec<bool>> = by_subject
        .values()
        .map(|rows| {
            let mut mask = vec![false; matrix.n_rows()];
            for &r in rows {
                mask[r] = true;
            }
            mask
        })
        .collect();

    let hits: Vec<usize> = (0..matrix.n_features())
        .into_par_iter()
        .map(|f| {
            let column = matrix.column(f);
            let mut significant = 0usize;
            for mask in &masks {
                let mut own = Vec::new();
                let mut rest = Vec::new();
                for (value, is_own) in column.iter().zip(mask) {
                    if *is_own {
                        own.push(*value);
                    } else {
                        rest.push(*value);
                    }
                }
                let d = ks_statistic(&own, &rest).expect("non-empty subject partitions");
                if ks_pvalue(d, own.len(), rest.len()) < alpha {
                    significant += 1;
                }
            }
            significant
        })
        .collect();

    let mut selected = Vec::new();
    let mut ks_hits = BTreeMap::new();
    for (f, name) in matrix.feature_names.iter().enumerate() {
        ks_hits.insert(name.clone(), hits[f]);
        if hits[f] as f64 >= tau * n_subjects as f64 - 1e-12 {
            selected.push(name.clone());
        }
    }
    if selected.is_empty() {
        return Err(SelectionError::NoFeatureSurvives { alpha, tau });
    }
    Ok(FeatureSetSpec {
        approach: SelectionApproach::Ks,
        params: SelectionParams {
            alpha,
            subject_fraction: tau,
            ..SelectionParams::default()
        },
        selected,
        ks_hits,
    })
}

/// Pearson correlation between two columns (sample covariance over n-1).
/// Columns with zero variance correlate with nothing (r = 0).
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Redundancy pruning: while any surviving pair has `|r| > rho`, drop the
/// member of the strongest-correlated pair with the lower KS significance
/// count (ties drop the feature later in canonical order).
pub fn prune_pearson(
    matrix: &FeatureMatrix,
    kept: &FeatureSetSpec,
    rho: f64,
) -> Result<FeatureSetSpec, SelectionError> {
    if !rho.is_finite() || rho <= 0.0 || rho >= 1.0 {
        return Err(SelectionError::InvalidParameter { name: "rho", value: rho });
    }
    let k = kept.selected.len();
    let mut columns = Vec::with_capacity(k);
    for name in &kept.selected {
        let idx = matrix
            .feature_index(name)
            .ok_or_else(|| SelectionError::UnknownFeature(name.clone()))?;
        columns.push(matrix.column(idx));
    }

    let mut corr = vec![vec![0.0f64; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let r = pearson(&columns[i], &columns[j]).abs();
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }

    let hits = |i: usize| kept.ks_hits.get(&kept.selected[i]).copied().unwrap_or(0);
    let mut alive = vec![true; k];
    loop {
        let mut worst: Option<(f64, usize, usize)> = None;
        for i in 0..k {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..k {
                if !alive[j] || corr[i][j] <= rho {
                    continue;
                }
                if worst.is_none_or(|(r, _, _)| corr[i][j] > r) {
                    worst = Some((corr[i][j], i, j));
                }
            }
        }
        match worst {
            None => break,
            Some((_, i, j)) => {
                // i precedes j canonically, so on equal hit counts j goes
                let victim = if hits(i) < hits(j) { i } else { j };
                alive[victim] = false;
            }
        }
    }

    let selected: Vec<String> = kept
        .selected
        .iter()
        .zip(&alive)
        .filter(|(_, keep)| **keep)
        .map(|(name, _)| name.clone())
        .collect();
    Ok(FeatureSetSpec {
        approach: SelectionApproach::Pc,
        params: SelectionParams {
            pc_threshold: rho,
            ..kept.params.clone()
        },
        selected,
        ks_hits: kept.ks_hits.clone(),
    })
}

/// SD-based count reduction: z-normalize each kept feature over all windows,
/// score it by the standard deviation of per-subject means (between-subject
/// spread), and keep the `top_k` highest-scoring features in descending
/// score order (ties broken by canonical order).
pub fn select_sd(
    matrix: &FeatureMatrix,
    kept: &FeatureSetSpec,
    top_k: usize,
) -> Result<FeatureSetSpec, SelectionError> {
    if top_k == 0 {
        return Err(SelectionError::InvalidParameter { name: "top_k", value: 0.0 });
    }
    if top_k > kept.selected.len() {
        return Err(SelectionError::TopKExceedsAvailable {
            requested: top_k,
            available: kept.selected.len(),
        });
    }
    let by_subject = matrix.rows_by_subject();
    if by_subject.len() < 2 {
        return Err(SelectionError::InsufficientSubjects(by_subject.len()));
    }

    let mut scored: Vec<(f64, usize, &String)> = Vec::with_capacity(kept.selected.len());
    for (pos, name) in kept.selected.iter().enumerate() {
        let idx = matrix
            .feature_index(name)
            .ok_or_else(|| SelectionError::UnknownFeature(name.clone()))?;
        let column = matrix.column(idx);
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        let normalize = |v: f64| if std == 0.0 { 0.0 } else { (v - mean) / std };

        let subject_means: Vec<f64> = by_subject
            .values()
            .map(|rows| {
                rows.iter().map(|&r| normalize(column[r])).sum::<f64>() / rows.len() as f64
            })
            .collect();
        let ns = subject_means.len() as f64;
        let grand = subject_means.iter().sum::<f64>() / ns;
        let spread = (subject_means
            .iter()
            .map(|m| (m - grand) * (m - grand))
            .sum::<f64>()
            / (ns - 1.0))
            .sqrt();
        scored.push((spread, pos, name));
    }

    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let selected: Vec<String> = scored.iter().take(top_k).map(|(_, _, n)| (*n).clone()).collect();
    Ok(FeatureSetSpec {
        approach: SelectionApproach::Sd,
        params: SelectionParams {
            sd_top_k: Some(top_k),
            ..kept.params.clone()
        },
        selected,
        ks_hits: kept.ks_hits.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActivityLevel;
    use crate::features::WindowRef;
    use approx::assert_abs_diff_eq;

    fn matrix(names: &[&str], subjects: &[(&str, Vec<Vec<f64>>)]) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for (sid, rows_of_subject) in subjects {
            for (k, row) in rows_of_subject.iter().enumerate() {
                rows.push(WindowRef {
                    subject_id: sid.to_string(),
                    start_minute: k as i64 * 5,
                    activity_level: ActivityLevel::Sedentary,
                });
                values.push(row.clone());
            }
        }
        FeatureMatrix {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            rows,
            values,
        }
    }

    #[test]
    fn ks_statistic_identical_samples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn ks_statistic_disjoint_supports() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
    }

    #[test]
    fn ks_statistic_interleaved() {
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn ks_statistic_rejects_empty() {
        assert!(matches!(
            ks_statistic(&[], &[1.0]),
            Err(SelectionError::EmptySample)
        ));
    }

    /// Brute-force oracle: evaluate |ECDF_a - ECDF_b| at every sample point.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b.iter())
            .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_statistic_matches_brute_force_with_ties() {
        let a = [1.0, 1.0, 2.0, 5.0, 5.0, 9.0];
        let b = [1.0, 2.0, 2.0, 2.0, 7.0];
        assert_eq!(ks_statistic(&a, &b).unwrap(), ks_brute(&a, &b));
    }

    #[test]
    fn ks_pvalue_limits() {
        assert_eq!(ks_pvalue(0.0, 10, 10), 1.0);
        assert!(ks_pvalue(1.0, 100, 100) < 1e-10);
    }

    #[test]
    fn ks_pvalue_matches_long_series_oracle() {
        // 1,000-term evaluation of Q(lambda) as the oracle.
        let (d, n1, n2) = (0.5, 20usize, 20usize);
        let n_e = (n1 * n2) as f64 / (n1 + n2) as f64;
        let lambda = (n_e.sqrt() + 0.12 + 0.11 / n_e.sqrt()) * d;
        let mut oracle = 0.0;
        for j in 1..=1000u64 {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            oracle += sign * 2.0 * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        }
        assert_abs_diff_eq!(ks_pvalue(d, n1, n2), oracle.clamp(0.0, 1.0), epsilon = 1e-10);
    }

    fn discriminative_fixture() -> FeatureMatrix {
        // Three discriminative features (disjoint per-subject ranges) and
        // three noise features (identical sequences for every subject).
        let subjects = ["s1", "s2", "s3", "s4"];
        let mut spec = Vec::new();
        for (si, sid) in subjects.iter().enumerate() {
            let mut rows = Vec::new();
            for w in 0..20 {
                let jitter = (w as f64) * 0.004;
                let disc = si as f64 * 10.0 + jitter;
                let noise = (w as f64 * 0.37) % 3.0;
                rows.push(vec![disc, disc * 2.0 + 1.0, -disc, noise, noise + 5.0, 2.0]);
            }
            spec.push((*sid, rows));
        }
        matrix(
            &["d1", "d2", "d3", "n1", "n2", "n3"],
            &spec.iter().map(|(s, r)| (*s, r.clone())).collect::<Vec<_>>(),
        )
    }

    #[test]
    fn select_ks_keeps_discriminative_drops_noise() {
        let m = discriminative_fixture();
        let spec = select_ks(&m, 0.05, 0.5).unwrap();
        assert_eq!(spec.selected, vec!["d1", "d2", "d3"]);
        assert_eq!(spec.ks_hits["d1"], 4);
        assert_eq!(spec.ks_hits["n1"], 0);
    }

    #[test]
    fn select_ks_excludes_identical_feature() {
        // A feature identical for all subjects has D = 0 everywhere.
        let m = matrix(
            &["flat"],
            &[
                ("s1", vec![vec![1.0]; 10]),
                ("s2", vec![vec![1.0]; 10]),
            ],
        );
        assert!(matches!(
            select_ks(&m, 0.05, 0.5),
            Err(SelectionError::NoFeatureSurvives { .. })
        ));
    }

    #[test]
    fn select_ks_includes_subject_constant_feature() {
        // Subject-specific constants give D = 1 one-vs-rest for everyone.
        let spec: Vec<(&str, Vec<Vec<f64>>)> = (0..10)
            .map(|i| {
                let sid: &'static str = Box::leak(format!("s{i}").into_boxed_str());
                (sid, vec![vec![i as f64]; 12])
            })
            .collect();
        let m = matrix(&["id"], &spec);
        let out = select_ks(&m, 0.05, 0.5).unwrap();
        assert_eq!(out.selected, vec!["id"]);
        assert_eq!(out.ks_hits["id"], 10);
    }

    #[test]
    fn select_ks_needs_two_subjects() {
        let m = matrix(&["f"], &[("only", vec![vec![1.0]; 5])]);
        assert!(matches!(
            select_ks(&m, 0.05, 0.5),
            Err(SelectionError::InsufficientSubjects(1))
        ));
    }

    #[test]
    fn prune_drops_perfectly_correlated_copy() {
        let m = discriminative_fixture();
        let ks = select_ks(&m, 0.05, 0.5).unwrap();
        // d1 and d2 are affine copies (|r| = 1); d3 = -d1 also |r| = 1.
        let pruned = prune_pearson(&m, &ks, 0.9).unwrap();
        assert_eq!(pruned.selected, vec!["d1"]);
        assert_eq!(pruned.approach, SelectionApproach::Pc);
        // output property: no remaining pair exceeds rho
        for i in 0..pruned.selected.len() {
            for j in (i + 1)..pruned.selected.len() {
                let a = m.column(m.feature_index(&pruned.selected[i]).unwrap());
                let b = m.column(m.feature_index(&pruned.selected[j]).unwrap());
                assert!(pearson(&a, &b).abs() <= 0.9);
            }
        }
    }

    #[test]
    fn prune_is_noop_below_threshold() {
        let m = matrix(
            &["a", "b"],
            &[
                ("s1", vec![vec![1.0, 0.0], vec![2.0, 5.0], vec![3.0, 1.0], vec![4.0, 4.0]]),
                ("s2", vec![vec![5.0, 2.0], vec![6.0, 7.0], vec![7.0, 3.0], vec![8.0, 6.0]]),
            ],
        );
        let kept = FeatureSetSpec {
            approach: SelectionApproach::Ks,
            params: SelectionParams::default(),
            selected: vec!["a".into(), "b".into()],
            ks_hits: BTreeMap::from([("a".into(), 2), ("b".into(), 2)]),
        };
        let pruned = prune_pearson(&m, &kept, 0.95).unwrap();
        assert_eq!(pruned.selected, kept.selected);
    }

    #[test]
    fn prune_four_feature_fixture_matches_exhaustive_check() {
        // Known correlation structure: f0 ~ f1 (r = 1), f2 ~ f3 (r = 1),
        // cross pairs weak. Both duplicate pairs must be broken.
        let raw: Vec<(f64, f64)> = vec![
            (1.0, 3.0), (2.0, 1.0), (3.0, 4.0), (4.0, 1.0),
            (5.0, 5.0), (6.0, 9.0), (7.0, 2.0), (8.0, 6.0),
        ];
        let rows: Vec<Vec<f64>> = raw
            .iter()
            .map(|(u, v)| vec![*u, 2.0 * u + 1.0, *v, -3.0 * v])
            .collect();
        let m = matrix(&["f0", "f1", "f2", "f3"], &[("s1", rows[..4].to_vec()), ("s2", rows[4..].to_vec())]);
        let kept = FeatureSetSpec {
            approach: SelectionApproach::Ks,
            params: SelectionParams::default(),
            selected: vec!["f0".into(), "f1".into(), "f2".into(), "f3".into()],
            ks_hits: BTreeMap::from([
                ("f0".into(), 2usize),
                ("f1".into(), 1),
                ("f2".into(), 2),
                ("f3".into(), 2),
            ]),
        };
        let pruned = prune_pearson(&m, &kept, 0.9).unwrap();
        // f1 has fewer hits than f0; f2/f3 tie so the later (f3) goes.
        assert_eq!(pruned.selected, vec!["f0", "f2"]);
        // Exhaustive confirmation on the surviving set.
        for i in 0..pruned.selected.len() {
            for j in (i + 1)..pruned.selected.len() {
                let a = m.column(m.feature_index(&pruned.selected[i]).unwrap());
                let b = m.column(m.feature_index(&pruned.selected[j]).unwrap());
                assert!(
                    pearson(&a, &b).abs() <= 0.9,
                    "pair ({}, {}) still redundant",
                    pruned.selected[i],
                    pruned.selected[j]
                );
            }
        }
    }

    #[test]
    fn sd_ranks_by_between_subject_spread() {
        // Five features with hand-computed per-subject means.
        // spread(f0): subject means 0 and 10 -> large
        // spread(f1): subject means equal -> 0, ranked last
        // f2..f4 intermediate, strictly ordered.
        let s1: Vec<Vec<f64>> = vec![
            vec![0.0, 5.0, 0.0, 1.0, 2.0],
            vec![0.0, 7.0, 2.0, 3.0, 2.5],
        ];
        let s2: Vec<Vec<f64>> = vec![
            vec![10.0, 5.0, 3.0, 4.0, 3.0],
            vec![10.0, 7.0, 5.0, 6.0, 3.5],
        ];
        let m = matrix(&["f0", "f1", "f2", "f3", "f4"], &[("s1", s1), ("s2", s2)]);
        let kept = FeatureSetSpec {
            approach: SelectionApproach::Ks,
            params: SelectionParams::default(),
            selected: (0..5).map(|i| format!("f{i}")).collect(),
            ks_hits: BTreeMap::new(),
        };
        let out = select_sd(&m, &kept, 5).unwrap();
        // Identity as a set when top_k = |kept|.
        let mut sorted = out.selected.clone();
        sorted.sort();
        assert_eq!(sorted, kept.selected);
        // f1 (zero spread) must come last.
        assert_eq!(out.selected.last().unwrap(), "f1");

        let top2 = select_sd(&m, &kept, 2).unwrap();
        assert_eq!(top2.selected.len(), 2);
        assert!(top2.selected.iter().all(|n| kept.selected.contains(n)));
        assert!(!top2.selected.contains(&"f1".to_string()));
    }

    #[test]
    fn sd_top_k_too_large_is_an_error() {
        let m = discriminative_fixture();
        let ks = select_ks(&m, 0.05, 0.5).unwrap();
        assert!(matches!(
            select_sd(&m, &ks, 99),
            Err(SelectionError::TopKExceedsAvailable { requested: 99, .. })
        ));
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        let m = discriminative_fixture();
        assert!(matches!(
            select_ks(&m, 1.5, 0.5),
            Err(SelectionError::InvalidParameter { name: "alpha", .. })
        ));
        assert!(matches!(
            select_ks(&m, 0.05, 0.0),
            Err(SelectionError::InvalidParameter { name: "tau", .. })
        ));
        let ks = select_ks(&m, 0.05, 0.5).unwrap();
        assert!(matches!(
            prune_pearson(&m, &ks, 1.0),
            Err(SelectionError::InvalidParameter { name: "rho", .. })
        ));
        assert!(matches!(
            select_sd(&m, &ks, 0),
            Err(SelectionError::InvalidParameter { name: "top_k", .. })
        ));
    }

    #[test]
    fn pipeline_sets_are_nested() {
        let m = discriminative_fixture();
        let ks = select_ks(&m, 0.05, 0.5).unwrap();
        let pc = prune_pearson(&m, &ks, 0.9).unwrap();
        let sd = select_sd(&m, &ks, 2).unwrap();
        assert!(pc.selected.len() <= ks.selected.len());
        assert!(sd.selected.len() <= ks.selected.len());
        assert!(pc.selected.iter().all(|f| ks.selected.contains(f)));
        assert!(sd.selected.iter().all(|f| ks.selected.contains(f)));
        assert!(ks.selected.len() <= m.n_features());
    }

    #[test]
    fn spec_serializes_with_named_fields() {
        let spec = FeatureSetSpec {
            approach: SelectionApproach::Ks,
            params: SelectionParams::default(),
            selected: vec!["C_mu".into()],
            ks_hits: BTreeMap::from([("C_mu".into(), 3)]),
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"approach\":\"KS\""));
        assert!(json.contains("\"selected\":[\"C_mu\"]"));
        let back: FeatureSetSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ks_symmetry_and_range(
                a in proptest::collection::vec(-50.0f64..50.0, 1..40),
                b in proptest::collection::vec(-50.0f64..50.0, 1..40),
            ) {
                let d_ab = ks_statistic(&a, &b).unwrap();
                let d_ba = ks_statistic(&b, &a).unwrap();
                prop_assert_eq!(d_ab, d_ba);
                prop_assert!((0.0..=1.0).contains(&d_ab));
            }

            #[test]
            fn ks_matches_exhaustive_oracle(
                a in proptest::collection::vec(-9.0f64..9.0, 1..50),
                b in proptest::collection::vec(-9.0f64..9.0, 1..50),
            ) {
                prop_assert_eq!(ks_statistic(&a, &b).unwrap(), ks_brute(&a, &b));
            }

            #[test]
            fn ks_invariant_under_monotone_transform(
                a in proptest::collection::vec(-5.0f64..5.0, 1..30),
                b in proptest::collection::vec(-5.0f64..5.0, 1..30),
            ) {
                // exp is strictly monotone; ECDF ranks are unchanged
                let ta: Vec<f64> = a.iter().map(|v| v.exp()).collect();
                let tb: Vec<f64> = b.iter().map(|v| v.exp()).collect();
                prop_assert_eq!(
                    ks_statistic(&a, &b).unwrap(),
                    ks_statistic(&ta, &tb).unwrap()
                );
            }
        }
    }
}
