//! Per-subject authentication models: a binary soft-margin SVM with a
//! quadratic polynomial kernel and a one-class SVM with a Gaussian kernel,
//! both solved by a sequential-minimal-optimization solver, with optional
//! Platt calibration for posterior probabilities.

mod kernel;
mod platt;
pub(crate) mod solver;

pub use kernel::{KernelKind, KernelSpec};
pub use platt::{fit_platt, PlattScale};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::selection::FeatureSetSpec;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("optimizer did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("model has no fitted probability calibration")]
    PlattNotFitted,
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Training knobs shared by both model kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Misclassification cost of the binary model.
    pub c: f64,
    /// Outlier fraction of the one-class model, in (0, 1].
    pub nu: f64,
    /// KKT tolerance of the SMO stopping criterion.
    pub tol: f64,
    /// Iteration budget as passes over the data (cap = max_passes * n).
    pub max_passes: usize,
    /// Seed for the internal calibration folds.
    pub seed: u64,
    /// Z-normalize features with training statistics.
    pub normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            nu: 0.05,
            tol: 1e-3,
            max_passes: 1000,
            seed: 0,
            normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !self.c.is_finite() || self.c <= 0.0 {
            return Err(SvmError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !self.nu.is_finite() || self.nu <= 0.0 || self.nu > 1.0 {
            return Err(SvmError::InvalidConfig(format!(
                "nu must lie in (0, 1], got {}",
                self.nu
            )));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(SvmError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidConfig("max_passes must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_passes.saturating_mul(n.max(8))
    }
}

/// Per-feature z-normalization statistics from the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    fn fit(rows: &[Vec<f64>]) -> NormStats {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; dim];
        if rows.len() > 1 {
            for row in rows {
                for (s, (v, m)) in std.iter_mut().zip(row.iter().zip(&mean)) {
                    *s += (v - m) * (v - m);
                }
            }
            for s in &mut std {
                *s = (*s / (n - 1.0)).sqrt();
            }
        }
        NormStats { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| {
                let divisor = if *s > 0.0 { *s } else { 1.0 };
                (v - m) / divisor
            })
            .collect()
    }

    fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Binary,
    Unary,
}

/// A trained per-subject model.
///
/// Support vectors are stored in normalized coordinates when normalization
/// is on; probes are normalized with `norm_stats` at scoring time. For
/// binary models `offset` is the bias added to the kernel sum; for unary
/// models it is the margin offset rho subtracted from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub subject_id: String,
    pub kernel: KernelSpec,
    pub n_features: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficients of the support vectors (always positive).
    pub alphas: Vec<f64>,
    /// Support-vector labels: +1/-1 for binary, all +1 for unary.
    pub sv_labels: Vec<f64>,
    pub offset: f64,
    pub norm_stats: Option<NormStats>,
    pub platt: Option<PlattScale>,
    pub feature_set: Option<FeatureSetSpec>,
    pub config: TrainConfig,
    /// Effective nu after the 1/m floor (unary only).
    pub effective_nu: Option<f64>,
    /// Dual objective `1/2 a^T Q a + p^T a` at convergence (diagnostic).
    pub dual_objective: f64,
}

impl TrainedModel {
    /// Signed decision value; positive means "genuine user".
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.n_features {
            return Err(SvmError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let probe;
        let probe_ref: &[f64] = match &self.norm_stats {
            Some(stats) => {
                probe = stats.apply(x);
                &probe
            }
            None => x,
        };
        let mut sum = 0.0;
        for ((sv, alpha), label) in self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.sv_labels)
        {
            sum += alpha * label * self.kernel.eval_unchecked(sv, probe_ref);
        }
        Ok(match self.kind {
            ModelKind::Binary => sum + self.offset,
            ModelKind::Unary => sum - self.offset,
        })
    }

    /// Posterior probability of the genuine class via the Platt sigmoid.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, SvmError> {
        let platt = self.platt.ok_or(SvmError::PlattNotFitted)?;
        Ok(platt.probability(self.decision_value(x)?))
    }
}

fn check_finite(rows: &[Vec<f64>]) -> Result<(), SvmError> {
    for row in rows {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite);
        }
    }
    Ok(())
}

fn check_rectangular(rows: &[Vec<f64>]) -> Result<usize, SvmError> {
    let dim = rows.first().map_or(0, |r| r.len());
    for row in rows {
        if row.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
    }
    Ok(dim)
}

/// Outcome of the raw binary solve, before model assembly.
struct BinaryFit {
    alpha: Vec<f64>,
    rho: f64,
    objective: f64,
}

fn solve_binary(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<BinaryFit, SvmError> {
    let n = points.len();
    let gram = kernel.gram(points);
    let linear = vec![-1.0; n];
    let upper = vec![cfg.c; n];
    let solution = solver::solve(
        &solver::SmoProblem {
            kernel: &gram,
            labels,
            linear: &linear,
            upper: &upper,
            tol: cfg.tol,
            max_iter: cfg.iteration_cap(n),
        },
        vec![0.0; n],
    );
    if !solution.converged {
        return Err(SvmError::NoConvergence {
            iterations: solution.iterations,
        });
    }
    Ok(BinaryFit {
        alpha: solution.alpha,
        rho: solution.rho,
        objective: solution.objective,
    })
}

/// Train the binary soft-margin SVM on labeled feature rows.
///
/// Labels must be +1 (genuine) or -1 (impostor) with both classes present.
/// Features are z-normalized with training statistics unless disabled. A
/// Platt sigmoid is fitted on out-of-fold decision values from a seeded
/// 3-fold split of the training set whenever every fold is trainable.
pub fn train_binary(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<TrainedModel, SvmError> {
    cfg.validate()?;
    kernel.validate()?;
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(SvmError::TooFewSamples { needed: 2, got: x.len() });
    }
    let dim = check_rectangular(x)?;
    check_finite(x)?;
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(SvmError::InvalidConfig("labels must be +1 or -1".into()));
    }
    let n_pos = y.iter().filter(|v| **v > 0.0).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(SvmError::SingleClass);
    }

    let norm_stats = cfg.normalize.then(|| NormStats::fit(x));
    let data = match &norm_stats {
        Some(stats) => stats.apply_all(x),
        None => x.to_vec(),
    };

    let fit = solve_binary(&data, y, kernel, cfg)?;

    let platt = platt_out_of_fold(&data, y, kernel, cfg);

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut sv_labels = Vec::new();
    for (i, a) in fit.alpha.iter().enumerate() {
        if *a > 1e-12 {
            support_vectors.push(data[i].clone());
            alphas.push(*a);
            sv_labels.push(y[i]);
        }
    }

    Ok(TrainedModel {
        kind: ModelKind::Binary,
        subject_id: String::new(),
        kernel: *kernel,
        n_features: dim,
        support_vectors,
        alphas,
        sv_labels,
        offset: -fit.rho,
        norm_stats,
        platt,
        feature_set: None,
        config: *cfg,
        effective_nu: None,
        dual_objective: fit.objective,
    })
}

/// Out-of-fold decision values from a seeded stratified 3-fold split,
/// fed to the Platt fit. Returns None when any fold is untrainable
/// (tiny or single-class folds), leaving the model uncalibrated.
fn platt_out_of_fold(
    data: &[Vec<f64>],
    y: &[f64],
    kernel: &KernelSpec,
    cfg: &TrainConfig,
) -> Option<PlattScale> {
    const FOLDS: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(cfg.seed, "platt-folds"));
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut fold_of = vec![0usize; y.len()];
    for (k, &i) in pos.iter().enumerate() {
        fold_of[i] = k % FOLDS;
    }
    for (k, &i) in neg.iter().enumerate() {
        fold_of[i] = k % FOLDS;
    }

    let mut decisions = Vec::with_capacity(y.len());
    let mut labels = Vec::with_capacity(y.len());
    for fold in 0..FOLDS {
        let train_idx: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| data[i].clone()).collect();
        let train_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
        if !train_y.iter().any(|v| *v > 0.0) || !train_y.iter().any(|v| *v < 0.0) {
            return None;
        }
        let fit = solve_binary(&train_x, &train_y, kernel, cfg).ok()?;
        for &i in &test_idx {
            let mut f = -fit.rho;
            for (k, &j) in train_idx.iter().enumerate() {
                if fit.alpha[k] > 1e-12 {
                    f += fit.alpha[k] * y[j] * kernel.eval_unchecked(&data[j], &data[i]);
                }
            }
            decisions.push(f);
            labels.push(y[i] > 0.0);
        }
    }
    fit_platt(&decisions, &labels).ok()
}

/// Train the one-class SVM on a subject's own feature rows.
///
/// `cfg.nu` upper-bounds the training-outlier fraction and lower-bounds the
/// support-vector fraction. A requested nu below 1/m (including the "0%
/// outlier" setting) is floored to 1/m, the smallest admissible value.
pub fn train_unary(
    x: &[Vec<f64>],
    kernel: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<TrainedModel, SvmError> {
    cfg.validate()?;
    kernel.validate()?;
    let m = x.len();
    if m < 2 {
        return Err(SvmError::TooFewSamples { needed: 2, got: m });
    }
    let dim = check_rectangular(x)?;
    check_finite(x)?;

    let nu = cfg.nu.max(1.0 / m as f64);
    let norm_stats = cfg.normalize.then(|| NormStats::fit(x));
    let data = match &norm_stats {
        Some(stats) => stats.apply_all(x),
        None => x.to_vec(),
    };

    let gram = kernel.gram(&data);
    let labels = vec![1.0; m];
    let linear = vec![0.0; m];
    let bound = 1.0 / (nu * m as f64);
    let upper = vec![bound; m];

    // feasible start: stack mass at the bound until the sum reaches 1
    let mut alpha = vec![0.0; m];
    let full = (nu * m as f64).floor() as usize;
    for a in alpha.iter_mut().take(full.min(m)) {
        *a = bound;
    }
    if full < m {
        alpha[full] = 1.0 - full as f64 * bound;
    }

    let solution = solver::solve(
        &solver::SmoProblem {
            kernel: &gram,
            labels: &labels,
            linear: &linear,
            upper: &upper,
            tol: cfg.tol,
            max_iter: cfg.iteration_cap(m),
        },
        alpha,
    );
    if !solution.converged {
        return Err(SvmError::NoConvergence {
            iterations: solution.iterations,
        });
    }

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (i, a) in solution.alpha.iter().enumerate() {
        if *a > 1e-12 {
            support_vectors.push(data[i].clone());
            alphas.push(*a);
        }
    }
    let sv_labels = vec![1.0; alphas.len()];

    Ok(TrainedModel {
        kind: ModelKind::Unary,
        subject_id: String::new(),
        kernel: *kernel,
        n_features: dim,
        support_vectors,
        alphas,
        sv_labels,
        offset: solution.rho,
        norm_stats,
        platt: None,
        feature_set: None,
        config: *cfg,
        effective_nu: Some(nu),
        dual_objective: solution.objective,
    })
}

/// Fit a Platt sigmoid on held-out decision values and attach it.
pub fn calibrate(model: &mut TrainedModel, decisions: &[f64], genuine: &[bool]) -> Result<(), SvmError> {
    model.platt = Some(fit_platt(decisions, genuine)?);
    Ok(())
}
