//! Implicit authentication of wearable-device users from coarse-grained
//! (minute-level) biometric streams.
//!
//! The pipeline ingests per-minute heart rate, calorie burn, MET, and step
//! counts, segments them into five-minute constant-activity windows, computes
//! a 27-feature statistical profile per biometric channel, reduces the
//! feature set by significance/redundancy/spread filters, and trains one
//! authentication model per subject: a binary SVM with a quadratic polynomial
//! kernel or a one-class SVM with a Gaussian kernel, both solved by a
//! from-scratch SMO optimizer. Evaluation reports ACC/FPR/FNR/EER and the
//! threshold sweeps needed to trade security against usability.
//!
//! Modules follow the data flow:
//!
//! * [`data`] — records, CSV ingestion, alignment, windowing
//! * [`features`] — per-window feature extraction
//! * [`selection`] — KS / Pearson-correlation / standard-deviation feature selection
//! * [`svm`] — kernels, SMO solver, one-class training, Platt calibration
//! * [`eval`] — splits, metrics, EER, threshold and outlier sweeps
//! * [`synth`] — deterministic synthetic multi-subject data generator
//! * [`pipeline`] — config-driven orchestration and artifact persistence

pub mod data;
pub mod eval;
pub mod features;
pub mod pipeline;
mod seed;
pub mod selection;
pub mod svm;
pub mod synth;

pub use data::{ActivityLevel, ActivityPeriod, BiometricRecord, Channel, Window};
pub use features::{BiometricCombo, FeatureMatrix, FeatureVector};
pub use selection::{FeatureSetSpec, SelectionApproach};
pub use svm::{KernelSpec, TrainConfig, TrainedModel};
