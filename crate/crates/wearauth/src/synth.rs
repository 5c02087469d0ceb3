//! Deterministic synthetic multi-subject generator for desk-scale runs.
//!
//! Activity levels follow a per-minute Markov chain; heart rate is a
//! resting baseline plus per-level offsets and AR(1) noise; steps are
//! Poisson counts with level-dependent rates; calorie burn and MET are
//! plausible stand-in functions of heart rate, steps, weight, and age plus
//! bounded noise, so the hybrid channels carry both behavioral and
//! physiological information. Everything is a pure function of the seeds
//! (ChaCha8 streams), so identical inputs give identical streams on every
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ActivityLevel, BiometricRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid transition matrix: {0}")]
    InvalidTransitionMatrix(String),
    #[error("invalid subject profile: {0}")]
    InvalidProfile(String),
    #[error("need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),
}

/// Per-channel noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScales {
    /// Stationary std of the AR(1) heart-rate noise, beats/min.
    pub heart_rate: f64,
    /// Additive calorie noise, kcal/min.
    pub calories: f64,
    /// Additive MET noise.
    pub met: f64,
    /// Jitter on the per-minute step rate before Poisson sampling.
    pub step_rate: f64,
}

/// Everything that makes one synthetic subject distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub subject_id: String,
    pub weight_kg: f64,
    pub age_years: f64,
    pub resting_hr: f64,
    /// Additive heart-rate offset per activity level (sedentary..high).
    pub hr_activity_gain: [f64; 4],
    /// Mean steps/min per activity level.
    pub step_rate: [f64; 4],
    /// Individual metabolic efficiency: multiplies the calorie model, so
    /// the hybrid channels carry identity beyond weight and heart rate
    /// (per-person HR-to-energy relationships vary substantially).
    #[serde(default = "default_efficiency")]
    pub cal_efficiency: f64,
    pub noise_scales: NoiseScales,
    pub seed: u64,
}

fn default_efficiency() -> f64 {
    1.0
}

impl SubjectProfile {
    fn validate(&self) -> Result<(), SynthError> {
        if !(45.0..=90.0).contains(&self.resting_hr) {
            return Err(SynthError::InvalidProfile(format!(
                "resting_hr {} outside [45, 90]",
                self.resting_hr
            )));
        }
        if !(0.0..=5.0).contains(&self.step_rate[0]) {
            return Err(SynthError::InvalidProfile(format!(
                "sedentary step_rate {} outside [0, 5]",
                self.step_rate[0]
            )));
        }
        if !self.cal_efficiency.is_finite() || self.cal_efficiency <= 0.0 {
            return Err(SynthError::InvalidProfile(format!(
                "cal_efficiency {} must be positive",
                self.cal_efficiency
            )));
        }
        let n = self.noise_scales;
        if [n.heart_rate, n.calories, n.met, n.step_rate].iter().any(|s| *s < 0.0) {
            return Err(SynthError::InvalidProfile("negative noise scale".into()));
        }
        Ok(())
    }
}

/// AR(1) persistence of the heart-rate noise.
const HR_AR_COEFF: f64 = 0.8;
/// Resting energy expenditure: 1 MET is about 0.0175 kcal/kg/min.
const KCAL_PER_KG_MIN_PER_MET: f64 = 0.0175;
/// Heart-rate sensitivity of the calorie model, kcal/kg/min per bpm.
const CAL_HR_COEFF: f64 = 0.0007;
/// Step sensitivity of the calorie model, kcal/min per step at 70 kg.
const CAL_STEP_COEFF: f64 = 0.002;
/// Baseline offset so the resting calorie rate lands near 1 MET.
const CAL_REST_OFFSET: f64 = 25.0;

fn age_factor(age_years: f64) -> f64 {
    1.0 + (age_years - 20.0) / 200.0
}

/// The noise-free calorie model: a hybrid of physiology (heart rate),
/// behavior (steps), and demographics (weight, age, individual efficiency).
pub fn calorie_model(profile: &SubjectProfile, heart_rate: f64, steps: f64) -> f64 {
    let hr_drive = (heart_rate - profile.resting_hr) + CAL_REST_OFFSET * age_factor(profile.age_years);
    let base = CAL_HR_COEFF * profile.weight_kg * hr_drive;
    let step_term = CAL_STEP_COEFF * steps * (profile.weight_kg / 70.0);
    (profile.cal_efficiency * (base + step_term)).max(0.01)
}

/// The noise-free MET model: calories normalized by resting expenditure.
pub fn met_model(profile: &SubjectProfile, calories: f64) -> f64 {
    (calories / (profile.weight_kg * KCAL_PER_KG_MIN_PER_MET)).max(0.9)
}

/// Default minute-to-minute level transitions. Spends roughly 70% of
/// minutes sedentary, with mean run lengths of 20 (sedentary) and 5-6
/// (active levels) minutes so five-minute windows occur at every level.
pub fn default_transition() -> [[f64; 4]; 4] {
    [
        [0.95, 0.032, 0.012, 0.006],
        [0.14, 0.82, 0.03, 0.01],
        [0.10, 0.07, 0.81, 0.02],
        [0.08, 0.05, 0.07, 0.80],
    ]
}

fn validate_transition(matrix: &[[f64; 4]; 4]) -> Result<(), SynthError> {
    for (i, row) in matrix.iter().enumerate() {
        if row.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(SynthError::InvalidTransitionMatrix(format!(
                "row {i} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SynthError::InvalidTransitionMatrix(format!(
                "row {i} sums to {sum}, expected 1"
            )));
        }
    }
    Ok(())
}

fn step_level(rng: &mut ChaCha8Rng, row: &[f64; 4]) -> ActivityLevel {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (level, p) in ActivityLevel::ALL.iter().zip(row) {
        acc += p;
        if draw < acc {
            return *level;
        }
    }
    ActivityLevel::High
}

/// Generate one subject's minute stream. Fully determined by
/// `profile.seed`; minutes run 0..minutes with every field populated.
pub fn generate_subject(
    profile: &SubjectProfile,
    minutes: usize,
    transition: &[[f64; 4]; 4],
) -> Result<Vec<BiometricRecord>, SynthError> {
    profile.validate()?;
    validate_transition(transition)?;

    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = profile.noise_scales;
    let hr_innovation = noise.heart_rate * (1.0 - HR_AR_COEFF * HR_AR_COEFF).sqrt();
    let normal = |sd: f64| Normal::new(0.0, sd.max(f64::MIN_POSITIVE)).unwrap();

    let mut level = ActivityLevel::Sedentary;
    let mut hr_noise: f64 = if noise.heart_rate > 0.0 {
        normal(noise.heart_rate).sample(&mut rng)
    } else {
        0.0
    };

    let mut records = Vec::with_capacity(minutes);
    for minute in 0..minutes {
        if minute > 0 {
            level = step_level(&mut rng, &transition[level.index()]);
        }

        hr_noise = HR_AR_COEFF * hr_noise
            + if noise.heart_rate > 0.0 {
                normal(hr_innovation).sample(&mut rng)
            } else {
                0.0
            };
        let heart_rate = (profile.resting_hr + profile.hr_activity_gain[level.index()] + hr_noise)
            .clamp(35.0, 215.0);

        let rate_jitter = if noise.step_rate > 0.0 {
            normal(noise.step_rate).sample(&mut rng)
        } else {
            0.0
        };
        let rate = (profile.step_rate[level.index()] + rate_jitter).max(0.0);
        let steps = if rate > 0.0 {
            Poisson::new(rate).unwrap().sample(&mut rng)
        } else {
            0.0
        };

        let cal_noise = if noise.calories > 0.0 {
            normal(noise.calories).sample(&mut rng)
        } else {
            0.0
        };
        let calories = (calorie_model(profile, heart_rate, steps) + cal_noise).max(0.01);

        let met_noise = if noise.met > 0.0 {
            normal(noise.met).sample(&mut rng)
        } else {
            0.0
        };
        let met = (met_model(profile, calories) + met_noise).max(0.9);

        records.push(BiometricRecord {
            subject_id: profile.subject_id.clone(),
            minute: minute as i64,
            heart_rate: Some(heart_rate),
            calories: Some(calories),
            met: Some(met),
            steps: Some(steps),
            activity_level: Some(level),
        });
    }
    Ok(records)
}

/// A generated cohort plus the profiles that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthDataset {
    pub profiles: Vec<SubjectProfile>,
    #[serde(skip)]
    pub records: Vec<BiometricRecord>,
}

/// Draw `n_subjects` profiles from the default priors and generate
/// `minutes` of data for each. Profiles are drawn from the master seed;
/// each subject's stream uses a seed derived from its id.
pub fn generate_dataset(
    n_subjects: usize,
    minutes: usize,
    master_seed: u64,
) -> Result<SynthDataset, SynthError> {
    if n_subjects < 2 {
        return Err(SynthError::TooFewSubjects(n_subjects));
    }
    let transition = default_transition();
    let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(master_seed, "profiles"));
    let mut profiles = Vec::with_capacity(n_subjects);
    for i in 0..n_subjects {
        let subject_id = format!("s{:03}", i + 1);
        let profile = SubjectProfile {
            seed: crate::seed::derive(master_seed, &subject_id),
            weight_kg: rng.gen_range(50.0..95.0),
            age_years: rng.gen_range(17.0..19.0),
            resting_hr: rng.gen_range(50.0..85.0),
            hr_activity_gain: [
                0.0,
                rng.gen_range(8.0..16.0),
                rng.gen_range(18.0..32.0),
                rng.gen_range(32.0..50.0),
            ],
            step_rate: [
                rng.gen_range(0.0..3.0),
                rng.gen_range(30.0..60.0),
                rng.gen_range(70.0..105.0),
                rng.gen_range(105.0..140.0),
            ],
            cal_efficiency: rng.gen_range(0.9..1.35),
            noise_scales: NoiseScales {
                heart_rate: rng.gen_range(1.2..2.8),
                calories: rng.gen_range(0.04..0.12),
                met: rng.gen_range(0.01..0.05),
                step_rate: rng.gen_range(0.0..2.0),
            },
            subject_id,
        };
        profiles.push(profile);
    }

    let mut records = Vec::with_capacity(n_subjects * minutes);
    for profile in &profiles {
        records.extend(generate_subject(profile, minutes, &transition)?);
    }
    Ok(SynthDataset { profiles, records })
}
