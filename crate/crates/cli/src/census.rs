use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use partsim_core::analytics::{build_census_report, emit_report, ReportBundle, ReportFormat};
use partsim_core::ingest::{assemble_series, read_series_dir, Cadence, SnapshotSeries, DEFAULT_JITTER};
use partsim_core::topology::{NetworkSnapshot, OrgAliases};

use crate::config::{load_aliases, load_prefixes, load_release_dates, RunConfig, DEFAULT_COVER_TARGETS};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct CensusArgs {
    pub snapshot_dir: PathBuf,
    pub prefix_table: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub release_dates: Option<PathBuf>,
    pub targets: Vec<f64>,
    pub cadence_seconds: Option<i64>,
}

impl CensusArgs {
    pub fn new(snapshot_dir: impl Into<PathBuf>) -> Self {
        Self {
            snapshot_dir: snapshot_dir.into(),
            prefix_table: None,
            aliases: None,
            release_dates: None,
            targets: DEFAULT_COVER_TARGETS.to_vec(),
            cadence_seconds: None,
        }
    }

    /// Census inputs named by a config whose input is a snapshot directory.
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let dir = cfg
            .input
            .snapshot_dir
            .as_ref()
            .ok_or_else(|| CliError::Config("input.snapshot_dir: census needs a snapshot directory".into()))?;
        let r = |p: &Option<PathBuf>| p.as_ref().map(|p| cfg.resolve(p));
        Ok(Self {
            snapshot_dir: cfg.resolve(dir),
            prefix_table: r(&cfg.input.prefix_table),
            aliases: r(&cfg.input.aliases),
            release_dates: r(&cfg.input.release_dates),
            targets: cfg.census.targets.clone(),
            cadence_seconds: cfg.census.cadence_seconds,
        })
    }
}

/// Snapshots read from a directory, oldest first, plus the files that were skipped.
pub struct LoadedSeries {
    pub snapshots: Vec<NetworkSnapshot>,
    pub skipped: Vec<(String, String)>,
}

impl LoadedSeries {
    pub fn latest(&self) -> &NetworkSnapshot {
        self.snapshots.last().expect("at least one snapshot")
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads every snapshot in `dir`. Fails with per-file diagnostics when none is usable.
pub fn load_snapshot_dir(dir: &Path, prefix_table: Option<&Path>) -> CliResult<LoadedSeries> {
    let table = prefix_table.map(load_prefixes).transpose()?;
    let scan = read_series_dir(dir, table.as_ref()).map_err(|e| CliError::Input(e.to_string()))?;
    let skipped: Vec<(String, String)> = scan.failures.iter().map(|(p, e)| (file_name(p), e.to_string())).collect();
    if scan.snapshots.is_empty() {
        let mut msg = format!("{}: no valid snapshot files", dir.display());
        for (f, e) in &skipped {
            let _ = write!(msg, "\n  {f}: {e}");
        }
        if skipped.is_empty() {
            msg.push_str(" (expected snap-<unix_ts>.json)");
        }
        return Err(CliError::Input(msg));
    }
    let mut snapshots: Vec<NetworkSnapshot> = scan.snapshots.into_iter().map(|(_, s)| s).collect();
    snapshots.sort_by_key(|s| s.timestamp);
    Ok(LoadedSeries { snapshots, skipped })
}

/// Spacing of a series: the configured cadence, or the smallest gap between
/// consecutive snapshots.
fn cadence(snapshots: &[NetworkSnapshot], configured: Option<i64>) -> CliResult<Cadence> {
    let secs = match configured {
        Some(s) => s,
        None => snapshots.windows(2).map(|w| w[1].timestamp - w[0].timestamp).min().unwrap_or(600),
    };
    let snapped = if (secs - 60).abs() <= 6 {
        60
    } else if (secs - 600).abs() <= 60 {
        600
    } else {
        secs
    };
    Cadence::from_seconds(snapped).map_err(|e| CliError::Input(format!("{e}; set census.cadence_seconds")))
}

pub fn series_of(loaded: &LoadedSeries, configured: Option<i64>) -> CliResult<Option<SnapshotSeries>> {
    if loaded.snapshots.len() < 2 {
        return Ok(None);
    }
    let c = cadence(&loaded.snapshots, configured)?;
    Ok(Some(assemble_series(loaded.snapshots.clone(), c, DEFAULT_JITTER).map_err(|e| CliError::Input(e.to_string()))?))
}

/// Census report over the latest snapshot in the directory, with the lag
/// series over all of them. Writes the report into `out` and returns it.
pub fn cmd_census(args: &CensusArgs, out: &Path, formats: &BTreeSet<ReportFormat>) -> CliResult<ReportBundle> {
    let loaded = load_snapshot_dir(&args.snapshot_dir, args.prefix_table.as_deref())?;
    let aliases = match &args.aliases {
        Some(p) => load_aliases(p)?,
        None => OrgAliases::new(),
    };
    let dates = args.release_dates.as_deref().map(load_release_dates).transpose()?;
    let series = series_of(&loaded, args.cadence_seconds)?;
    let bundle = build_census_report(loaded.latest(), &aliases, &args.targets, series.as_ref(), dates.as_ref())?;
    emit_report(&bundle, out, formats).map_err(|e| CliError::Runtime(e.to_string()))?;
    if !loaded.skipped.is_empty() {
        let mut text = String::new();
        for (f, e) in &loaded.skipped {
            let _ = writeln!(text, "{f}: {e}");
        }
        let path = out.join("skipped.txt");
        std::fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(bundle)
}
