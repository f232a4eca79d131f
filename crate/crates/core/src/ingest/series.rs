use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::prefix::PrefixTable;
use super::snapshot::{parse_snapshot, resolve_snapshot, write_snapshot};
use crate::error::{Error, Result};
use crate::topology::NetworkSnapshot;

/// The two census sampling cadences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    Minute,
    TenMinutes,
}

impl Cadence {
    pub fn seconds(self) -> i64 {
        match self {
            Cadence::Minute => 60,
            Cadence::TenMinutes => 600,
        }
    }

    pub fn from_seconds(s: i64) -> Result<Self> {
        match s {
            60 => Ok(Cadence::Minute),
            600 => Ok(Cadence::TenMinutes),
            other => Err(Error::param("cadence_seconds", format!("{other} is neither 60 nor 600"))),
        }
    }
}

/// A hole in a series: `missing` samples absent between two present ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub after: i64,
    pub before: i64,
    pub missing: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSeries {
    pub cadence: Cadence,
    pub snapshots: Vec<NetworkSnapshot>,
    pub gaps: Vec<Gap>,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Default cadence jitter tolerance as a fraction of the cadence.
pub const DEFAULT_JITTER: f64 = 0.10;

/// Orders snapshots by time and flags gaps wider than `cadence × (1 + jitter)`.
pub fn assemble_series(
    mut snapshots: Vec<NetworkSnapshot>,
    cadence: Cadence,
    jitter: f64,
) -> Result<SnapshotSeries> {
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::param("jitter", "must be in [0,1)"));
    }
    snapshots.sort_by_key(|s| s.timestamp);
    if let Some(w) = snapshots.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        return Err(Error::Data(format!("duplicate snapshot timestamp {}", w[0].timestamp)));
    }
    let step = cadence.seconds();
    let limit = step as f64 * (1.0 + jitter);
    let gaps = snapshots
        .windows(2)
        .filter_map(|w| {
            let delta = w[1].timestamp - w[0].timestamp;
            (delta as f64 > limit).then(|| Gap {
                after: w[0].timestamp,
                before: w[1].timestamp,
                missing: ((delta as f64 / step as f64).round() as u64).saturating_sub(1).max(1),
            })
        })
        .collect();
    Ok(SnapshotSeries {
        cadence,
        snapshots,
        gaps,
    })
}

/// Outcome of scanning a series directory: parsed snapshots and per-file failures.
#[derive(Debug, Default)]
pub struct DirScan {
    pub snapshots: Vec<(PathBuf, NetworkSnapshot)>,
    pub failures: Vec<(PathBuf, Error)>,
}

fn file_timestamp(path: &Path) -> Option<i64> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("snap-")?.strip_suffix(".json")?.parse().ok()
}

/// Reads every `snap-<unix_ts>.json` file in `dir`, resolving unresolved
/// addresses through `table` when one is given. Other files are ignored.
pub fn read_series_dir(dir: &Path, table: Option<&PrefixTable>) -> Result<DirScan> {
    let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = BTreeSet::new();
    for entry in listing {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if file_timestamp(&path).is_some() {
            paths.insert(path);
        }
    }
    let mut scan = DirScan::default();
    for path in paths {
        let parsed = fs::read(&path)
            .map_err(|e| Error::io(&path, e))
            .and_then(|bytes| parse_snapshot(&bytes));
        match parsed {
            Ok(mut snap) => {
                let named = file_timestamp(&path).expect("filtered above");
                if named != snap.timestamp {
                    scan.failures.push((
                        path,
                        Error::Data(format!("file name says t={named} but document says t={}", snap.timestamp)),
                    ));
                    continue;
                }
                if let Some(t) = table {
                    resolve_snapshot(&mut snap, t);
                }
                scan.snapshots.push((path, snap));
            }
            Err(e) => scan.failures.push((path, e)),
        }
    }
    Ok(scan)
}

/// Writes each snapshot as `snap-<ts>.json` under `dir`.
pub fn write_series_dir(dir: &Path, snapshots: &[NetworkSnapshot]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in snapshots {
        let path = dir.join(format!("snap-{}.json", s.timestamp));
        fs::write(&path, write_snapshot(s)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(ts: &[i64]) -> Vec<NetworkSnapshot> {
        ts.iter()
            .map(|t| NetworkSnapshot { timestamp: *t, nodes: vec![] })
            .collect()
    }

    #[test]
    fn regular_series_has_no_gaps() {
        let s = assemble_series(at(&[1200, 0, 600]), Cadence::TenMinutes, DEFAULT_JITTER).unwrap();
        assert_eq!(s.snapshots.iter().map(|s| s.timestamp).collect::<Vec<_>>(), vec![0, 600, 1200]);
        assert!(s.gaps.is_empty());
    }

    #[test]
    fn gap_of_two_missing_samples() {
        let s = assemble_series(at(&[0, 1800]), Cadence::TenMinutes, DEFAULT_JITTER).unwrap();
        assert_eq!(s.gaps, vec![Gap { after: 0, before: 1800, missing: 2 }]);
    }

    #[test]
    fn jitter_within_tolerance_is_not_a_gap() {
        let s = assemble_series(at(&[0, 65, 121]), Cadence::Minute, DEFAULT_JITTER).unwrap();
        assert!(s.gaps.is_empty());
        let s = assemble_series(at(&[0, 67]), Cadence::Minute, DEFAULT_JITTER).unwrap();
        assert_eq!(s.gaps.len(), 1);
    }

    #[test]
    fn duplicate_timestamps_rejected() {
        assert!(matches!(
            assemble_series(at(&[0, 0]), Cadence::Minute, DEFAULT_JITTER),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn cadence_values() {
        assert_eq!(Cadence::from_seconds(60).unwrap(), Cadence::Minute);
        assert!(Cadence::from_seconds(300).is_err());
    }

    #[test]
    fn directory_round_trip_and_diagnostics() {
        let dir = std::env::temp_dir().join(format!("partsim-series-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        write_series_dir(&dir, &at(&[0, 60])).unwrap();
        fs::write(dir.join("snap-120.json"), "{not json").unwrap();
        fs::write(dir.join("snap-180.json"), r#"{"timestamp": 999, "nodes": []}"#).unwrap();
        fs::write(dir.join("README.txt"), "ignored").unwrap();
        let scan = read_series_dir(&dir, None).unwrap();
        assert_eq!(scan.snapshots.len(), 2);
        assert_eq!(scan.failures.len(), 2);
        fs::remove_dir_all(&dir).unwrap();
    }
}
