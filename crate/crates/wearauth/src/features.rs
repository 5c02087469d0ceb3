//! Per-window feature extraction: 27 statistical features per biometric
//! channel, plus an optional ordinal activity-level feature for
//! non-sedentary windows.
//!
//! All features of one channel are computed from its five window samples.
//! Degenerate denominators (zero mean, zero variance, zero total spectral
//! power, ...) yield 0 rather than NaN so downstream selection and training
//! only ever see finite values.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ActivityLevel, Channel, Window, WINDOW_LEN};

/// Feature abbreviations in canonical order. Feature names are
/// `<channel initial>_<abbrev>`, e.g. `H_p95` or `C_mad_Mdn`.
pub const FEATURE_ABBREVS: [&str; 27] = [
    "mu", "sigma", "sigma2", "cov", "max", "min", "ran", "coran", "p25", "p50", "p75", "p95",
    "iqr", "coi", "mad_mu", "mad_Mdn", "f_mu", "f_Mdn", "P", "np", "E", "rms", "p2rms", "rss",
    "snr", "gamma", "kappa",
];

/// Name of the ordinal activity-level feature appended for non-sedentary windows.
pub const ACTIVITY_FEATURE: &str = "activity_level";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("window {subject_id}@{start_minute} contains a non-finite sample")]
    DegenerateWindow { subject_id: String, start_minute: i64 },
    #[error("invalid biometric combo {0:?}: use non-empty subsets of CSMH")]
    InvalidCombo(String),
    #[error("feature rows disagree on feature names (mixed periods or combos?)")]
    InconsistentRows,
    #[error("unknown feature name {0:?}")]
    UnknownFeature(String),
    #[error("malformed feature matrix CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
}

/// A non-empty subset of the four biometric channels in fixed C, S, M, H order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BiometricCombo {
    channels: Vec<Channel>,
}

impl BiometricCombo {
    /// Build from channels; duplicates are removed and order is normalized.
    pub fn new(channels: &[Channel]) -> Result<BiometricCombo, FeatureError> {
        let mut set: Vec<Channel> = Channel::ALL
            .iter()
            .copied()
            .filter(|c| channels.contains(c))
            .collect();
        if set.is_empty() {
            return Err(FeatureError::InvalidCombo(String::new()));
        }
        set.dedup();
        Ok(BiometricCombo { channels: set })
    }

    pub fn all() -> BiometricCombo {
        BiometricCombo { channels: Channel::ALL.to_vec() }
    }

    /// Parse a combo name like "CM" or "csmh". Letters may arrive in any
    /// order; the stored order is always C, S, M, H.
    pub fn parse(s: &str) -> Result<BiometricCombo, FeatureError> {
        let mut wanted = Vec::new();
        for c in s.chars() {
            let ch = Channel::from_initial(c)
                .ok_or_else(|| FeatureError::InvalidCombo(s.to_string()))?;
            if wanted.contains(&ch) {
                return Err(FeatureError::InvalidCombo(s.to_string()));
            }
            wanted.push(ch);
        }
        BiometricCombo::new(&wanted).map_err(|_| FeatureError::InvalidCombo(s.to_string()))
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn name(&self) -> String {
        self.channels.iter().map(|c| c.initial()).collect()
    }

    /// Ordered feature names for this combo (27 per channel), with the
    /// ordinal activity feature appended when `include_activity` is set.
    pub fn feature_names(&self, include_activity: bool) -> Vec<String> {
        let mut names = Vec::with_capacity(self.channels.len() * 27 + 1);
        for ch in &self.channels {
            for abbrev in FEATURE_ABBREVS {
                names.push(format!("{}_{abbrev}", ch.initial()));
            }
        }
        if include_activity {
            names.push(ACTIVITY_FEATURE.to_string());
        }
        names
    }
}

impl fmt::Display for BiometricCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl TryFrom<String> for BiometricCombo {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        BiometricCombo::parse(&s).map_err(|e| e.to_string())
    }
}

impl From<BiometricCombo> for String {
    fn from(c: BiometricCombo) -> String {
        c.name()
    }
}

/// The ordered features of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub subject_id: String,
    pub start_minute: i64,
    pub activity_level: ActivityLevel,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Compute every feature of `combo`'s channels for one window.
///
/// Output order is deterministic: channels in C, S, M, H order, 27 features
/// per channel in [`FEATURE_ABBREVS`] order, then the optional activity
/// ordinal. The ordinal is present only when `include_activity` is set and
/// the window is non-sedentary (sedentary has no ordinal).
pub fn extract_features(
    window: &Window,
    combo: &BiometricCombo,
    include_activity: bool,
) -> Result<FeatureVector, FeatureError> {
    let mut names = Vec::with_capacity(combo.channels.len() * 27 + 1);
    let mut values = Vec::with_capacity(combo.channels.len() * 27 + 1);
    for ch in &combo.channels {
        let samples = window.channel(*ch);
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::DegenerateWindow {
                subject_id: window.subject_id.clone(),
                start_minute: window.start_minute,
            });
        }
        let feats = channel_features(samples);
        for (abbrev, v) in FEATURE_ABBREVS.iter().zip(feats) {
            names.push(format!("{}_{abbrev}", ch.initial()));
            values.push(v);
        }
    }
    if include_activity {
        if let Some(ord) = window.activity_level.ordinal() {
            names.push(ACTIVITY_FEATURE.to_string());
            values.push(ord);
        }
    }
    Ok(FeatureVector {
        subject_id: window.subject_id.clone(),
        start_minute: window.start_minute,
        activity_level: window.activity_level,
        names,
        values,
    })
}

/// Compute exactly the named features of one window, in the given order.
///
/// Names follow the `<initial>_<abbrev>` convention plus the literal
/// `activity_level`; this is the scoring-time path for models that carry
/// their selected feature list.
pub fn extract_named(window: &Window, names: &[String]) -> Result<Vec<f64>, FeatureError> {
    let mut cache: BTreeMap<Channel, [f64; 27]> = BTreeMap::new();
    let mut values = Vec::with_capacity(names.len());
    for name in names {
        if name == ACTIVITY_FEATURE {
            values.push(window.activity_level.ordinal().unwrap_or(0.0));
            continue;
        }
        let (initial, abbrev) = name
            .split_once('_')
            .ok_or_else(|| FeatureError::UnknownFeature(name.clone()))?;
        let channel = initial
            .chars()
            .next()
            .filter(|_| initial.len() == 1)
            .and_then(Channel::from_initial)
            .ok_or_else(|| FeatureError::UnknownFeature(name.clone()))?;
        let index = FEATURE_ABBREVS
            .iter()
            .position(|a| *a == abbrev)
            .ok_or_else(|| FeatureError::UnknownFeature(name.clone()))?;
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(channel) {
            let samples = window.channel(channel);
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(FeatureError::DegenerateWindow {
                    subject_id: window.subject_id.clone(),
                    start_minute: window.start_minute,
                });
            }
            slot.insert(channel_features(samples));
        }
        values.push(cache[&channel][index]);
    }
    Ok(values)
}

/// All 27 features of one channel, in [`FEATURE_ABBREVS`] order.
pub fn channel_features(x: &[f64; WINDOW_LEN]) -> [f64; 27] {
    let n = WINDOW_LEN as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss_dev = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let variance = ss_dev / (n - 1.0);
    let stddev = variance.sqrt();
    let cov = if mean == 0.0 { 0.0 } else { stddev / mean };

    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    let coran = if max + min == 0.0 { 0.0 } else { range / (max + min) };

    let mut sorted = *x;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p25 = percentile(&sorted, 0.25);
    let p50 = percentile(&sorted, 0.50);
    let p75 = percentile(&sorted, 0.75);
    let p95 = percentile(&sorted, 0.95);
    let iqr = p75 - p25;
    let coi = if p75 + p25 == 0.0 { 0.0 } else { iqr / (p75 + p25) };

    let mad_mean = x.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
    let mut abs_dev_med: Vec<f64> = x.iter().map(|v| (v - p50).abs()).collect();
    abs_dev_med.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad_median = abs_dev_med[WINDOW_LEN / 2];

    let spectrum = periodogram(x);
    let total_power: f64 = spectrum.iter().map(|(_, p)| p).sum();
    let (f_mean, f_median) = if total_power == 0.0 {
        (0.0, 0.0)
    } else {
        let f_mean = spectrum.iter().map(|(f, p)| f * p).sum::<f64>() / total_power;
        let mut cumulative = 0.0;
        let mut f_median = spectrum.last().map(|(f, _)| *f).unwrap_or(0.0);
        for (f, p) in &spectrum {
            cumulative += p;
            if cumulative >= total_power / 2.0 {
                f_median = *f;
                break;
            }
        }
        (f_mean, f_median)
    };

    let energy = x.iter().map(|v| v * v).sum::<f64>();
    let power = energy / n;
    let peaks = count_peaks(x) as f64;
    let rms = power.sqrt();
    let peak_mag = x.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let p2rms = if rms == 0.0 { 0.0 } else { peak_mag / rms };
    let rss = energy.sqrt();
    let snr = if stddev == 0.0 { 0.0 } else { mean / stddev };

    let m2 = ss_dev / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let skewness = if m2 == 0.0 { 0.0 } else { m3 / m2.powf(1.5) };
    let kurtosis = if m2 == 0.0 { 0.0 } else { m4 / (m2 * m2) };

    [
        mean, stddev, variance, cov, max, min, range, coran, p25, p50, p75, p95, iqr, coi,
        mad_mean, mad_median, f_mean, f_median, power, peaks, energy, rms, p2rms, rss, snr,
        skewness, kurtosis,
    ]
}

/// Percentile by linear interpolation between closest ranks (inclusive
/// method): rank `q * (n - 1)` in the sorted sample, fractional ranks
/// interpolated linearly.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// One-sided periodogram of the mean-removed window at 1 sample/min.
///
/// After mean removal the DC bin is identically zero and is excluded,
/// leaving frequencies 1/5 and 2/5 cycles/min with power `|DFT_k|^2 / n`.
pub fn periodogram(x: &[f64; WINDOW_LEN]) -> Vec<(f64, f64)> {
    let n = WINDOW_LEN as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut bins = Vec::with_capacity(WINDOW_LEN / 2);
    for k in 1..=WINDOW_LEN / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, v) in x.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (k * t) as f64 / n;
            re += (v - mean) * angle.cos();
            im += (v - mean) * angle.sin();
        }
        bins.push((k as f64 / n, (re * re + im * im) / n));
    }
    bins
}

/// Count strict interior local maxima: `x[i-1] < x[i] > x[i+1]`.
pub fn count_peaks(x: &[f64; WINDOW_LEN]) -> usize {
    (1..WINDOW_LEN - 1)
        .filter(|&i| x[i - 1] < x[i] && x[i] > x[i + 1])
        .count()
}

/// Identity of one feature row: which window it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRef {
    pub subject_id: String,
    pub start_minute: i64,
    pub activity_level: ActivityLevel,
}

/// Dense feature matrix over many windows, with a shared ordered name list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<WindowRef>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Extract features for every window. All windows must produce the same
    /// feature name list (same combo, consistent activity handling).
    pub fn from_windows(
        windows: &[Window],
        combo: &BiometricCombo,
        include_activity: bool,
    ) -> Result<FeatureMatrix, FeatureError> {
        let mut names: Option<Vec<String>> = None;
        let mut rows = Vec::with_capacity(windows.len());
        let mut values = Vec::with_capacity(windows.len());
        for w in windows {
            let fv = extract_features(w, combo, include_activity)?;
            match &names {
                None => names = Some(fv.names),
                Some(expected) if *expected == fv.names => {}
                Some(_) => return Err(FeatureError::InconsistentRows),
            }
            rows.push(WindowRef {
                subject_id: fv.subject_id,
                start_minute: fv.start_minute,
                activity_level: fv.activity_level,
            });
            values.push(fv.values);
        }
        Ok(FeatureMatrix {
            feature_names: names.unwrap_or_default(),
            rows,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[index]).collect()
    }

    /// Row indices per subject, subjects in sorted order.
    pub fn rows_by_subject(&self) -> BTreeMap<String, Vec<usize>> {
        let mut map: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            map.entry(r.subject_id.clone()).or_default().push(i);
        }
        map
    }

    /// Project onto a subset of features, preserving the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix, FeatureError> {
        let mut indices = Vec::with_capacity(names.len());
        for n in names {
            indices.push(
                self.feature_index(n)
                    .ok_or_else(|| FeatureError::UnknownFeature(n.clone()))?,
            );
        }
        Ok(FeatureMatrix {
            feature_names: names.to_vec(),
            rows: self.rows.clone(),
            values: self
                .values
                .iter()
                .map(|row| indices.iter().map(|&i| row[i]).collect())
                .collect(),
        })
    }

    /// Write as CSV: `subject_id,start_minute,activity_level,<features...>`.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        write!(writer, "subject_id,start_minute,activity_level")?;
        for n in &self.feature_names {
            write!(writer, ",{n}")?;
        }
        writeln!(writer)?;
        for (r, row) in self.rows.iter().zip(&self.values) {
            write!(writer, "{},{},{}", r.subject_id, r.start_minute, r.activity_level)?;
            for v in row {
                write!(writer, ",{v}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureMatrix, FeatureError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| FeatureError::MalformedCsv { line: 1, reason: e.to_string() })?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 4 || cols[0] != "subject_id" || cols[1] != "start_minute" || cols[2] != "activity_level" {
            return Err(FeatureError::MalformedCsv {
                line: 1,
                reason: "expected header subject_id,start_minute,activity_level,<features...>".into(),
            });
        }
        let feature_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| FeatureError::MalformedCsv { line, reason: e.to_string() })?;
            let get = |j: usize| rec.get(j).unwrap_or("");
            let start_minute = get(1).parse::<i64>().map_err(|_| FeatureError::MalformedCsv {
                line,
                reason: format!("bad start_minute {:?}", get(1)),
            })?;
            let activity_level = ActivityLevel::parse(get(2)).ok_or_else(|| FeatureError::MalformedCsv {
                line,
                reason: format!("bad activity_level {:?}", get(2)),
            })?;
            let mut row = Vec::with_capacity(feature_names.len());
            for (j, name) in feature_names.iter().enumerate() {
                let v = get(3 + j).parse::<f64>().map_err(|_| FeatureError::MalformedCsv {
                    line,
                    reason: format!("bad value in column {name}"),
                })?;
                row.push(v);
            }
            rows.push(WindowRef {
                subject_id: get(0).to_string(),
                start_minute,
                activity_level,
            });
            values.push(row);
        }
        Ok(FeatureMatrix { feature_names, rows, values })
    }
}
