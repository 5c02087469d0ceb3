//! Data model and pre-processing: CSV ingestion, biometric-alignment
//! filtering, and segmentation into five-minute constant-activity windows.
//!
//! Input streams carry one row per subject-minute. A minute is *aligned*
//! when all four biometric channels and the activity level are present;
//! only aligned minutes participate in windowing. Windows are five
//! consecutive recorded minutes at a single activity level, emitted
//! back-to-back from the start of each constant-level run.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of consecutive minutes per classification window.
pub const WINDOW_LEN: usize = 5;

/// Physical-activity intensity as recorded by the device, one label per minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityLevel {
    Sedentary,
    Light,
    Fair,
    High,
}

impl ActivityLevel {
    pub const ALL: [ActivityLevel; 4] = [
        ActivityLevel::Sedentary,
        ActivityLevel::Light,
        ActivityLevel::Fair,
        ActivityLevel::High,
    ];

    /// Parse a case-insensitive level label.
    pub fn parse(s: &str) -> Option<ActivityLevel> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sedentary" => Some(ActivityLevel::Sedentary),
            "light" => Some(ActivityLevel::Light),
            "fair" => Some(ActivityLevel::Fair),
            "high" => Some(ActivityLevel::High),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ActivityLevel::Sedentary => "sedentary",
            ActivityLevel::Light => "light",
            ActivityLevel::Fair => "fair",
            ActivityLevel::High => "high",
        }
    }

    /// Two-way split used throughout evaluation.
    pub fn period(&self) -> ActivityPeriod {
        match self {
            ActivityLevel::Sedentary => ActivityPeriod::Sedentary,
            _ => ActivityPeriod::NonSedentary,
        }
    }

    /// Ordinal encoding of the non-sedentary levels used as an extra feature
    /// (light = 1, fair = 2, high = 3). Sedentary has no ordinal.
    pub fn ordinal(&self) -> Option<f64> {
        match self {
            ActivityLevel::Sedentary => None,
            ActivityLevel::Light => Some(1.0),
            ActivityLevel::Fair => Some(2.0),
            ActivityLevel::High => Some(3.0),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            ActivityLevel::Sedentary => 0,
            ActivityLevel::Light => 1,
            ActivityLevel::Fair => 2,
            ActivityLevel::High => 3,
        }
    }
}

impl fmt::Display for ActivityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sedentary vs. everything else; models are trained separately per period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivityPeriod {
    Sedentary,
    NonSedentary,
}

impl ActivityPeriod {
    pub fn matches(&self, level: ActivityLevel) -> bool {
        level.period() == *self
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ActivityPeriod::Sedentary => "sedentary",
            ActivityPeriod::NonSedentary => "non-sedentary",
        }
    }
}

impl fmt::Display for ActivityPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One of the four biometric channels, ordered C, S, M, H.
///
/// The fixed order defines combo names ("CM", "CSMH", ...) and the feature
/// layout, so it must never change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    Calories,
    Steps,
    Met,
    HeartRate,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::Calories,
        Channel::Steps,
        Channel::Met,
        Channel::HeartRate,
    ];

    /// Single-letter initial used in combo and feature names.
    pub fn initial(&self) -> char {
        match self {
            Channel::Calories => 'C',
            Channel::Steps => 'S',
            Channel::Met => 'M',
            Channel::HeartRate => 'H',
        }
    }

    pub fn from_initial(c: char) -> Option<Channel> {
        match c.to_ascii_uppercase() {
            'C' => Some(Channel::Calories),
            'S' => Some(Channel::Steps),
            'M' => Some(Channel::Met),
            'H' => Some(Channel::HeartRate),
            _ => None,
        }
    }
}

/// One subject-minute of the four biometric channels plus activity level.
///
/// Any field other than the key may be missing; alignment filtering drops
/// incomplete minutes before windowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiometricRecord {
    pub subject_id: String,
    /// Minutes since epoch, or any monotone per-subject minute index.
    pub minute: i64,
    pub heart_rate: Option<f64>,
    pub calories: Option<f64>,
    pub met: Option<f64>,
    pub steps: Option<f64>,
    pub activity_level: Option<ActivityLevel>,
}

/// A fully populated minute; produced by [`filter_aligned`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedMinute {
    pub subject_id: String,
    pub minute: i64,
    pub heart_rate: f64,
    pub calories: f64,
    pub met: f64,
    pub steps: f64,
    pub activity_level: ActivityLevel,
}

impl AlignedMinute {
    pub fn channel(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Calories => self.calories,
            Channel::Steps => self.steps,
            Channel::Met => self.met,
            Channel::HeartRate => self.heart_rate,
        }
    }
}

/// Five consecutive aligned minutes at a constant activity level; the
/// classification unit of the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub subject_id: String,
    pub start_minute: i64,
    pub activity_level: ActivityLevel,
    /// Per-channel samples, indexed `[minute offset]`.
    pub heart_rate: [f64; WINDOW_LEN],
    pub calories: [f64; WINDOW_LEN],
    pub met: [f64; WINDOW_LEN],
    pub steps: [f64; WINDOW_LEN],
}

impl Window {
    pub fn channel(&self, channel: Channel) -> &[f64; WINDOW_LEN] {
        match channel {
            Channel::Calories => &self.calories,
            Channel::Steps => &self.steps,
            Channel::Met => &self.met,
            Channel::HeartRate => &self.heart_rate,
        }
    }

    pub fn period(&self) -> ActivityPeriod {
        self.activity_level.period()
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate minute {minute} for subject {subject}")]
    DuplicateMinute { subject: String, minute: i64 },
    #[error("missing required column {0:?} in CSV header")]
    MissingColumn(&'static str),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Ingestion knobs. `met_scale` rescales the MET column at parse time
/// (some exports store MET as an integer ten times the plain value).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestOptions {
    pub met_scale: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { met_scale: 1.0 }
    }
}

const REQUIRED_COLUMNS: [&str; 7] = [
    "subject_id",
    "minute",
    "heart_rate",
    "calories",
    "met",
    "steps",
    "activity_level",
];

fn parse_optional_f64(field: &str, name: &str, line: u64) -> Result<Option<f64>, DataError> {
    let t = field.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(DataError::MalformedRow {
            line,
            reason: format!("field {name} is not a finite number: {t:?}"),
        }),
    }
}

/// Parse minute-level biometric records from CSV.
///
/// The header is required; extra columns are ignored. Empty cells and the
/// string "NA" read as missing values. Rows violating the record invariants
/// (negative steps, heart rate outside (0, 250), negative calories or MET)
/// are rejected with their line number. The output is sorted by
/// `(subject_id, minute)` and duplicate subject-minutes are an error.
pub fn parse_records<R: Read>(reader: R) -> Result<Vec<BiometricRecord>, DataError> {
    parse_records_with(reader, &IngestOptions::default())
}

pub fn parse_records_with<R: Read>(
    reader: R,
    opts: &IngestOptions,
) -> Result<Vec<BiometricRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let mut col = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.entry(h.trim().to_ascii_lowercase()).or_insert(i);
    }
    let mut idx = [0usize; 7];
    for (k, name) in REQUIRED_COLUMNS.iter().enumerate() {
        idx[k] = *col
            .get(*name)
            .ok_or(DataError::MissingColumn(REQUIRED_COLUMNS[k]))?;
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| row.get(idx[k]).unwrap_or("");

        let subject_id = field(0).trim().to_string();
        if subject_id.is_empty() {
            return Err(DataError::MalformedRow {
                line,
                reason: "empty subject_id".into(),
            });
        }
        let minute: i64 = field(1).trim().parse().map_err(|_| DataError::MalformedRow {
            line,
            reason: format!("minute is not an integer: {:?}", field(1)),
        })?;

        let heart_rate = parse_optional_f64(field(2), "heart_rate", line)?;
        let calories = parse_optional_f64(field(3), "calories", line)?;
        let met = parse_optional_f64(field(4), "met", line)?
            .map(|v| v * opts.met_scale);
        let steps = parse_optional_f64(field(5), "steps", line)?;
        let activity_level = {
            let t = field(6).trim();
            if t.is_empty() || t.eq_ignore_ascii_case("na") {
                None
            } else {
                Some(ActivityLevel::parse(t).ok_or_else(|| DataError::MalformedRow {
                    line,
                    reason: format!("unknown activity_level: {t:?}"),
                })?)
            }
        };

        if let Some(hr) = heart_rate {
            if hr <= 0.0 || hr >= 250.0 {
                return Err(DataError::MalformedRow {
                    line,
                    reason: format!("heart_rate out of range (0, 250): {hr}"),
                });
            }
        }
        for (value, name) in [(calories, "calories"), (met, "met"), (steps, "steps")] {
            if let Some(v) = value {
                if v < 0.0 {
                    return Err(DataError::MalformedRow {
                        line,
                        reason: format!("{name} is negative: {v}"),
                    });
                }
            }
        }

        records.push(BiometricRecord {
            subject_id,
            minute,
            heart_rate,
            calories,
            met,
            steps,
            activity_level,
        });
    }

    if records.is_empty() {
        return Err(DataError::EmptyInput);
    }

    records.sort_by(|a, b| (a.subject_id.as_str(), a.minute).cmp(&(b.subject_id.as_str(), b.minute)));
    for pair in records.windows(2) {
        if pair[0].subject_id == pair[1].subject_id && pair[0].minute == pair[1].minute {
            return Err(DataError::DuplicateMinute {
                subject: pair[1].subject_id.clone(),
                minute: pair[1].minute,
            });
        }
    }
    Ok(records)
}

/// Alignment output: the retained minutes plus the per-subject count of
/// dropped (incomplete) minutes.
#[derive(Debug, Clone, Default)]
pub struct AlignmentResult {
    pub minutes: Vec<AlignedMinute>,
    pub dropped: BTreeMap<String, usize>,
}

/// Keep only minutes where every biometric channel and the activity level
/// are present. Records must already be sorted per subject (as produced by
/// [`parse_records`]); the retained minutes preserve that order.
pub fn filter_aligned(records: &[BiometricRecord]) -> AlignmentResult {
    let mut out = AlignmentResult::default();
    for r in records {
        match (r.heart_rate, r.calories, r.met, r.steps, r.activity_level) {
            (Some(heart_rate), Some(calories), Some(met), Some(steps), Some(activity_level)) => {
                out.minutes.push(AlignedMinute {
                    subject_id: r.subject_id.clone(),
                    minute: r.minute,
                    heart_rate,
                    calories,
                    met,
                    steps,
                    activity_level,
                });
            }
            _ => {
                *out.dropped.entry(r.subject_id.clone()).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Segment aligned minutes into five-minute non-overlapping windows.
///
/// A *run* is a maximal stretch of consecutive minutes (no time gap) of one
/// subject at one activity level. Each run yields `floor(len / 5)` windows
/// packed back-to-back from the run's start; the remainder is discarded.
/// Only windows whose activity class matches `period` are returned.
pub fn segment_windows(minutes: &[AlignedMinute], period: ActivityPeriod) -> Vec<Window> {
    let mut windows = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=minutes.len() {
        let run_breaks = i == minutes.len() || {
            let prev = &minutes[i - 1];
            let cur = &minutes[i];
            cur.subject_id != prev.subject_id
                || cur.minute != prev.minute + 1
                || cur.activity_level != prev.activity_level
        };
        if run_breaks {
            emit_run(&minutes[run_start..i], period, &mut windows);
            run_start = i;
        }
    }
    windows
}

fn emit_run(run: &[AlignedMinute], period: ActivityPeriod, out: &mut Vec<Window>) {
    if run.is_empty() || !period.matches(run[0].activity_level) {
        return;
    }
    for chunk in run.chunks_exact(WINDOW_LEN) {
        let mut w = Window {
            subject_id: chunk[0].subject_id.clone(),
            start_minute: chunk[0].minute,
            activity_level: chunk[0].activity_level,
            heart_rate: [0.0; WINDOW_LEN],
            calories: [0.0; WINDOW_LEN],
            met: [0.0; WINDOW_LEN],
            steps: [0.0; WINDOW_LEN],
        };
        for (k, m) in chunk.iter().enumerate() {
            w.heart_rate[k] = m.heart_rate;
            w.calories[k] = m.calories;
            w.met[k] = m.met;
            w.steps[k] = m.steps;
        }
        out.push(w);
    }
}

/// Write records back out in the ingestion CSV schema.
pub fn write_records_csv<W: std::io::Write>(
    mut writer: W,
    records: &[BiometricRecord],
) -> std::io::Result<()> {
    writeln!(writer, "subject_id,minute,heart_rate,calories,met,steps,activity_level")?;
    for r in records {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            r.subject_id,
            r.minute,
            opt(r.heart_rate),
            opt(r.calories),
            opt(r.met),
            opt(r.steps),
            r.activity_level.map(|l| l.as_str()).unwrap_or(""),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "subject_id,minute,heart_rate,calories,met,steps,activity_level\n";

    fn rec(subject: &str, minute: i64, level: ActivityLevel) -> AlignedMinute {
        AlignedMinute {
            subject_id: subject.into(),
            minute,
            heart_rate: 70.0,
            calories: 1.2,
            met: 1.0,
            steps: 0.0,
            activity_level: level,
        }
    }

    #[test]
    fn parses_single_valid_row() {
        let csv = format!("{HEADER}s1,100,72,1.3,1.0,0,sedentary\n");
        let records = parse_records(csv.as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].subject_id, "s1");
        assert_eq!(records[0].minute, 100);
        assert_eq!(records[0].heart_rate, Some(72.0));
        assert_eq!(records[0].activity_level, Some(ActivityLevel::Sedentary));
    }

    #[test]
    fn rejects_negative_steps_with_line_number() {
        let csv = format!("{HEADER}s1,100,72,1.3,1.0,-1,sedentary\n");
        match parse_records(csv.as_bytes()) {
            Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_subject_minute() {
        let csv = format!("{HEADER}s1,100,72,1.3,1.0,0,sedentary\ns1,100,70,1.2,1.0,0,sedentary\n");
        match parse_records(csv.as_bytes()) {
            Err(DataError::DuplicateMinute { subject, minute }) => {
                assert_eq!(subject, "s1");
                assert_eq!(minute, 100);
            }
            other => panic!("expected DuplicateMinute, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_heart_rate() {
        let csv = format!("{HEADER}s1,100,260,1.3,1.0,0,sedentary\n");
        assert!(matches!(
            parse_records(csv.as_bytes()),
            Err(DataError::MalformedRow { .. })
        ));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            parse_records(HEADER.as_bytes()),
            Err(DataError::EmptyInput)
        ));
    }

    #[test]
    fn empty_cells_and_na_read_as_missing() {
        let csv = format!("{HEADER}s1,100,,1.3,NA,0,sedentary\n");
        let records = parse_records(csv.as_bytes()).unwrap();
        assert_eq!(records[0].heart_rate, None);
        assert_eq!(records[0].met, None);
        assert_eq!(records[0].calories, Some(1.3));
    }

    #[test]
    fn extra_columns_are_tolerated() {
        let csv = "sleep,subject_id,minute,heart_rate,calories,met,steps,activity_level,label\n\
                   awake,s1,100,72,1.3,1.0,0,SEDENTARY,run\n";
        let records = parse_records(csv.as_bytes()).unwrap();
        assert_eq!(records[0].activity_level, Some(ActivityLevel::Sedentary));
    }

    #[test]
    fn met_scale_rescales_at_ingestion() {
        let csv = format!("{HEADER}s1,100,72,1.3,10,0,sedentary\n");
        let opts = IngestOptions { met_scale: 0.1 };
        let records = parse_records_with(csv.as_bytes(), &opts).unwrap();
        assert_eq!(records[0].met, Some(1.0));
    }

    #[test]
    fn output_sorted_by_subject_and_minute() {
        let csv = format!(
            "{HEADER}s2,5,72,1.3,1.0,0,sedentary\ns1,9,72,1.3,1.0,0,sedentary\ns1,3,72,1.3,1.0,0,sedentary\n"
        );
        let records = parse_records(csv.as_bytes()).unwrap();
        let keys: Vec<_> = records.iter().map(|r| (r.subject_id.clone(), r.minute)).collect();
        assert_eq!(keys, vec![("s1".into(), 3), ("s1".into(), 9), ("s2".into(), 5)]);
    }

    #[test]
    fn alignment_retains_complete_minutes() {
        let csv = format!(
            "{HEADER}s1,1,72,1.3,1.0,0,sedentary\n\
             s1,2,,1.3,1.0,5,sedentary\n\
             s1,3,70,1.2,1.0,0,sedentary\n"
        );
        let records = parse_records(csv.as_bytes()).unwrap();
        let aligned = filter_aligned(&records);
        assert_eq!(aligned.minutes.len(), 2);
        assert_eq!(aligned.dropped.get("s1"), Some(&1));
    }

    #[test]
    fn alignment_drop_counts_per_subject() {
        // 10 minutes, 3 missing calories -> 7 retained, drop-count 3.
        let mut rows = String::from(HEADER);
        for m in 0..10 {
            let cal = if m % 3 == 0 { "" } else { "1.3" };
            rows.push_str(&format!("s1,{m},72,{cal},1.0,0,sedentary\n"));
        }
        let records = parse_records(rows.as_bytes()).unwrap();
        let aligned = filter_aligned(&records);
        assert_eq!(aligned.minutes.len(), 6);
        assert_eq!(aligned.dropped.get("s1"), Some(&4));
        // Brute-force scan of the fixture as oracle.
        let expected_drops = records
            .iter()
            .filter(|r| r.calories.is_none())
            .count();
        assert_eq!(aligned.dropped.get("s1"), Some(&expected_drops));
    }

    #[test]
    fn twelve_minute_run_yields_two_windows() {
        let minutes: Vec<_> = (0..12).map(|m| rec("s1", m, ActivityLevel::Sedentary)).collect();
        let windows = segment_windows(&minutes, ActivityPeriod::Sedentary);
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].start_minute, 0);
        assert_eq!(windows[1].start_minute, 5);
    }

    #[test]
    fn short_run_yields_no_windows() {
        let minutes: Vec<_> = (0..4).map(|m| rec("s1", m, ActivityLevel::Light)).collect();
        assert!(segment_windows(&minutes, ActivityPeriod::NonSedentary).is_empty());
    }

    #[test]
    fn period_filter_keeps_matching_windows_only() {
        let mut minutes: Vec<_> = (0..5).map(|m| rec("s1", m, ActivityLevel::Sedentary)).collect();
        minutes.extend((5..10).map(|m| rec("s1", m, ActivityLevel::Light)));
        let windows = segment_windows(&minutes, ActivityPeriod::NonSedentary);
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].activity_level, ActivityLevel::Light);
        assert_eq!(windows[0].start_minute, 5);
    }

    #[test]
    fn time_gap_terminates_a_run() {
        // 5 minutes, gap, 5 minutes, all sedentary: the gap splits the run,
        // each half yields one window.
        let mut minutes: Vec<_> = (0..5).map(|m| rec("s1", m, ActivityLevel::Sedentary)).collect();
        minutes.extend((7..12).map(|m| rec("s1", m, ActivityLevel::Sedentary)));
        let windows = segment_windows(&minutes, ActivityPeriod::Sedentary);
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].start_minute, 0);
        assert_eq!(windows[1].start_minute, 7);

        // A 9-minute stretch broken by a gap after 4 yields nothing.
        let mut broken: Vec<_> = (0..4).map(|m| rec("s2", m, ActivityLevel::Sedentary)).collect();
        broken.extend((6..11).map(|m| rec("s2", m, ActivityLevel::Sedentary)));
        let windows = segment_windows(&broken, ActivityPeriod::Sedentary);
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].start_minute, 6);
    }

    #[test]
    fn level_change_terminates_a_run() {
        let mut minutes: Vec<_> = (0..3).map(|m| rec("s1", m, ActivityLevel::Light)).collect();
        minutes.extend((3..8).map(|m| rec("s1", m, ActivityLevel::Fair)));
        let windows = segment_windows(&minutes, ActivityPeriod::NonSedentary);
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].activity_level, ActivityLevel::Fair);
    }

    #[test]
    fn subject_change_terminates_a_run() {
        let mut minutes: Vec<_> = (0..3).map(|m| rec("s1", m, ActivityLevel::Sedentary)).collect();
        minutes.extend((3..8).map(|m| rec("s2", m, ActivityLevel::Sedentary)));
        let windows = segment_windows(&minutes, ActivityPeriod::Sedentary);
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].subject_id, "s2");
    }

    #[test]
    fn windows_do_not_overlap_and_conserve_minutes() {
        // Mixed runs; check non-overlap, purity, and the conservation law
        // retained = 5 * windows + discarded per run.
        let mut minutes = Vec::new();
        let levels = [
            (ActivityLevel::Sedentary, 13),
            (ActivityLevel::Light, 7),
            (ActivityLevel::Sedentary, 4),
            (ActivityLevel::High, 11),
        ];
        let mut m = 0;
        for (level, len) in levels {
            for _ in 0..len {
                minutes.push(rec("s1", m, level));
                m += 1;
            }
        }
        let mut all = segment_windows(&minutes, ActivityPeriod::Sedentary);
        all.extend(segment_windows(&minutes, ActivityPeriod::NonSedentary));

        let mut ranges: Vec<_> = all
            .iter()
            .map(|w| (w.start_minute, w.start_minute + WINDOW_LEN as i64 - 1))
            .collect();
        ranges.sort();
        for pair in ranges.windows(2) {
            assert!(pair[0].1 < pair[1].0, "windows overlap: {pair:?}");
        }

        // floor(13/5) + floor(7/5) + floor(4/5) + floor(11/5) = 2 + 1 + 0 + 2
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn every_window_is_pure_in_activity_level() {
        // direct purity assertion over a stream that changes level often
        let levels = [
            ActivityLevel::Sedentary,
            ActivityLevel::Light,
            ActivityLevel::Fair,
            ActivityLevel::High,
        ];
        let minutes: Vec<_> = (0..120)
            .map(|m| rec("s1", m, levels[(m as usize / 7) % 4]))
            .collect();
        let mut windows = segment_windows(&minutes, ActivityPeriod::Sedentary);
        windows.extend(segment_windows(&minutes, ActivityPeriod::NonSedentary));
        assert!(!windows.is_empty());
        for w in &windows {
            let run: Vec<_> = minutes
                .iter()
                .filter(|m| m.minute >= w.start_minute && m.minute < w.start_minute + 5)
                .collect();
            assert_eq!(run.len(), 5);
            assert!(run.iter().all(|m| m.activity_level == w.activity_level));
        }
    }

    #[test]
    fn segmentation_is_deterministic() {
        let minutes: Vec<_> = (0..23).map(|m| rec("s1", m, ActivityLevel::Sedentary)).collect();
        let a = segment_windows(&minutes, ActivityPeriod::Sedentary);
        let b = segment_windows(&minutes, ActivityPeriod::Sedentary);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let csv = format!("{HEADER}s1,1,72,1.3,1,0,sedentary\ns1,2,,,,5,light\n");
        let records = parse_records(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        let reparsed = parse_records(buf.as_slice()).unwrap();
        assert_eq!(records, reparsed);
    }
}
