//! Census outputs from snapshots, snapshot series and simulation traces.

mod report;

use std::collections::BTreeMap;

pub use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::SnapshotSeries;
use crate::scalar::Scalar;
use crate::sim::{lag_of, TraceLog};
use crate::topology::NetworkSnapshot;

pub use report::{
    build_census_report, emit_report, CoverEntry, EconomicsEntry, ReportBundle, ReportFormat, REPORT_SCHEMA_VERSION,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VersionEntry<T = f64> {
    pub version: String,
    pub count: usize,
    pub fraction: T,
}

/// Version shares, descending by share; equal shares in ascending version order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VersionCensus<T = f64> {
    pub entries: Vec<VersionEntry<T>>,
    pub distinct_count: usize,
}

pub fn version_census<T: Scalar>(snapshot: &NetworkSnapshot) -> Result<VersionCensus<T>> {
    if snapshot.is_empty() {
        return Err(Error::Domain("snapshot has no nodes".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &snapshot.nodes {
        *counts.entry(n.version.as_str()).or_insert(0) += 1;
    }
    let total = snapshot.len();
    let mut entries: Vec<VersionEntry<T>> = counts
        .into_iter()
        .map(|(v, c)| VersionEntry { version: v.to_string(), count: c, fraction: T::ratio(c, total) })
        .collect();
    // counts order the same way as fractions and never tie spuriously
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.version.cmp(&b.version)));
    Ok(VersionCensus { distinct_count: entries.len(), entries })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VersionLag {
    pub version: String,
    /// `None` when the release date is unknown.
    pub release_date: Option<NaiveDate>,
    pub lag_days: Option<i64>,
}

impl VersionLag {
    pub fn missing(&self) -> bool {
        self.release_date.is_none()
    }
}

/// Parses `version,date` rows with ISO dates. `#` starts a comment line.
pub fn parse_release_dates(text: &str) -> Result<BTreeMap<String, NaiveDate>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { context: format!("row {}", i + 1), reason: e.to_string() })?;
        if rec.len() != 2 {
            return Err(Error::Parse { context: format!("row {}", i + 1), reason: "expected `version,date`".into() });
        }
        if i == 0 && &rec[0] == "version" {
            continue;
        }
        let date = NaiveDate::parse_from_str(&rec[1], "%Y-%m-%d").map_err(|e| Error::Parse {
            context: format!("row {}, field `date`", i + 1),
            reason: e.to_string(),
        })?;
        out.insert(rec[0].to_string(), date);
    }
    Ok(out)
}

/// Whole days between each version's release and the observation date, in
/// census order. Versions without a known release date are kept and flagged.
pub fn version_lag_days<T>(
    census: &VersionCensus<T>,
    release_dates: &BTreeMap<String, NaiveDate>,
    observation: NaiveDate,
) -> Result<Vec<VersionLag>> {
    census
        .entries
        .iter()
        .map(|e| {
            let Some(release) = release_dates.get(&e.version).copied() else {
                return Ok(VersionLag { version: e.version.clone(), release_date: None, lag_days: None });
            };
            let days = (observation - release).num_days();
            if days < 0 {
                return Err(Error::Data(format!(
                    "version {} released {release} after the observation date {observation}",
                    e.version
                )));
            }
            Ok(VersionLag { version: e.version.clone(), release_date: Some(release), lag_days: Some(days) })
        })
        .collect()
}

/// Observation date (UTC) of a snapshot timestamp.
pub fn observation_date(timestamp: i64) -> Result<NaiveDate> {
    chrono::DateTime::from_timestamp(timestamp, 0)
        .map(|d| d.date_naive())
        .ok_or_else(|| Error::Data(format!("timestamp {timestamp} out of range")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagSample<T = f64> {
    pub t: f64,
    pub tip: u64,
    pub online: usize,
    pub fractions: [T; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagTimeseries<T = f64> {
    pub samples: Vec<LagSample<T>>,
}

fn sample_from_counts<T: Scalar>(t: f64, tip: u64, counts: [usize; 5]) -> LagSample<T> {
    let online: usize = counts.iter().sum();
    LagSample { t, tip, online, fractions: counts.map(|c| T::ratio(c, online)) }
}

fn snapshot_sample<T: Scalar>(t: f64, snapshot: &NetworkSnapshot) -> Option<LagSample<T>> {
    let tip = snapshot.max_height()?;
    let mut counts = [0usize; 5];
    for n in &snapshot.nodes {
        counts[lag_of(n.height, tip).index()] += 1;
    }
    Some(sample_from_counts(t, tip, counts))
}

impl<T: Scalar> LagTimeseries<T> {
    /// One sample per non-empty snapshot, measured against the highest
    /// height reported in that snapshot. Times are seconds since the first snapshot.
    pub fn from_series(series: &SnapshotSeries) -> Result<Self> {
        let origin = series.snapshots.first().map(|s| s.timestamp).unwrap_or(0);
        let samples: Vec<LagSample<T>> = series
            .snapshots
            .iter()
            .filter_map(|s| snapshot_sample((s.timestamp - origin) as f64, s))
            .collect();
        if samples.is_empty() {
            return Err(Error::Domain("series has no nodes to classify".into()));
        }
        Ok(LagTimeseries { samples })
    }

    pub fn from_snapshot(snapshot: &NetworkSnapshot) -> Result<Self> {
        let sample = snapshot_sample(0.0, snapshot).ok_or_else(|| Error::Domain("snapshot has no nodes".into()))?;
        Ok(LagTimeseries { samples: vec![sample] })
    }

    /// One sample per trace sample with at least one online node.
    pub fn from_trace(trace: &TraceLog) -> Result<Self> {
        let samples: Vec<LagSample<T>> = trace
            .samples()
            .filter(|s| s.counts.iter().any(|c| *c > 0))
            .map(|s| sample_from_counts(s.t, s.tip, s.counts))
            .collect();
        if samples.is_empty() {
            return Err(Error::Domain("trace has no samples with online nodes".into()));
        }
        Ok(LagTimeseries { samples })
    }

    /// Per-bucket mean over samples taken at or after `from`.
    pub fn mean_fractions(&self, from: f64) -> Result<[T; 5]> {
        let window: Vec<&LagSample<T>> = self.samples.iter().filter(|s| s.t >= from).collect();
        if window.is_empty() {
            return Err(Error::Domain(format!("no samples at or after t = {from}")));
        }
        let n = T::from_count(window.len());
        let mut out = [T::zero(); 5];
        for s in &window {
            for (o, f) in out.iter_mut().zip(s.fractions) {
                *o = *o + f;
            }
        }
        Ok(out.map(|o| o / n))
    }
}
