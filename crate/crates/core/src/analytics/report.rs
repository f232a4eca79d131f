use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{observation_date, version_census, version_lag_days, LagTimeseries, VersionCensus, VersionLag};
use crate::adversary::{value_at_risk, EconomicParams, ScenarioOutcome};
use crate::error::{Error, Result};
use crate::ingest::SnapshotSeries;
use crate::jsonfmt::{self, fixed6};
use crate::topology::{
    as_node_cdf, count_weights, min_cover, org_node_cdf, CdfSeries, NetworkSnapshot, OrgAliases,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// One minimum cover at one grouping level (`as` or `org`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverEntry {
    pub level: String,
    pub target: f64,
    pub count: usize,
    pub covered_fraction: f64,
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EconomicsEntry {
    pub label: String,
    pub affected_nodes: usize,
    pub per_node_value: f64,
    pub value_at_risk: f64,
    pub cost: f64,
    pub benefit_ratio: Option<f64>,
}

impl EconomicsEntry {
    /// Value at risk for one outcome, with the cost for its attack kind.
    pub fn for_outcome(econ: &EconomicParams, outcome: &ScenarioOutcome) -> Result<Self> {
        let cost = match outcome {
            ScenarioOutcome::Spatial { as_count, .. } => econ.spatial_cost(*as_count),
            ScenarioOutcome::Temporal { .. } => econ.temporal_cost,
            ScenarioOutcome::Logical { .. } => econ.logical_cost,
        };
        let affected = outcome.affected_nodes();
        let v = value_at_risk(econ, affected, cost)?;
        Ok(EconomicsEntry {
            label: outcome.label().to_string(),
            affected_nodes: affected,
            per_node_value: v.per_node_value,
            value_at_risk: v.value_at_risk,
            cost: v.cost,
            benefit_ratio: v.benefit_ratio,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub cdf_as: CdfSeries,
    pub cdf_org: CdfSeries,
    pub covers: Vec<CoverEntry>,
    pub lag_series: LagTimeseries,
    pub version_census: VersionCensus,
    pub version_lag_days: Vec<VersionLag>,
    pub attack_outcomes: Vec<ScenarioOutcome>,
    pub economics: Vec<EconomicsEntry>,
}

impl ReportBundle {
    pub fn cover(&self, level: &str, target: f64) -> Option<&CoverEntry> {
        self.covers.iter().find(|c| c.level == level && c.target == target)
    }
}

/// Census report for one snapshot: CDFs, covers at each target, version
/// census and, when a series is given, its lag series (otherwise the
/// snapshot's own lag sample).
pub fn build_census_report(
    snapshot: &NetworkSnapshot,
    aliases: &OrgAliases,
    targets: &[f64],
    series: Option<&SnapshotSeries>,
    release_dates: Option<&BTreeMap<String, NaiveDate>>,
) -> Result<ReportBundle> {
    let as_weights = count_weights::<_, f64>(&snapshot.as_counts());
    let org_weights = count_weights::<_, f64>(&snapshot.org_counts(aliases));
    let mut covers = Vec::new();
    for &target in targets {
        let c = min_cover(&as_weights, target)?;
        covers.push(CoverEntry {
            level: "as".into(),
            target,
            count: c.len(),
            covered_fraction: c.covered_fraction,
            members: c.members.iter().map(|a| a.to_string()).collect(),
        });
    }
    for &target in targets {
        let c = min_cover(&org_weights, target)?;
        covers.push(CoverEntry {
            level: "org".into(),
            target,
            count: c.len(),
            covered_fraction: c.covered_fraction,
            members: c.members,
        });
    }
    let census = version_census(snapshot)?;
    let lags = match release_dates {
        Some(dates) => version_lag_days(&census, dates, observation_date(snapshot.timestamp)?)?,
        None => Vec::new(),
    };
    let lag_series = match series {
        Some(s) => LagTimeseries::from_series(s)?,
        None => LagTimeseries::from_snapshot(snapshot)?,
    };
    Ok(ReportBundle {
        schema_version: REPORT_SCHEMA_VERSION,
        cdf_as: as_node_cdf(snapshot)?,
        cdf_org: org_node_cdf(snapshot, aliases)?,
        covers,
        lag_series,
        version_census: census,
        version_lag_days: lags,
        attack_outcomes: Vec::new(),
        economics: Vec::new(),
    })
}

fn csv_file(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Data(format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn cdf_rows(cdf: &CdfSeries) -> Vec<Vec<String>> {
    cdf.points.iter().map(|(k, f)| vec![k.to_string(), fixed6(*f)]).collect()
}

fn outcome_row(o: &ScenarioOutcome) -> Vec<String> {
    let blank = String::new;
    let mut row = vec![o.label().to_string()];
    match o {
        ScenarioOutcome::Spatial { outcome, .. } => row.extend([
            "spatial".into(),
            o.affected_nodes().to_string(),
            fixed6(outcome.isolated_node_fraction),
            fixed6(outcome.isolated_hash_fraction),
            outcome.fork_formed.to_string(),
            outcome.reorg_depth_on_heal.to_string(),
            blank(),
            blank(),
            blank(),
            blank(),
        ]),
        ScenarioOutcome::Temporal { outcome, .. } => row.extend([
            "temporal".into(),
            o.affected_nodes().to_string(),
            blank(),
            blank(),
            blank(),
            blank(),
            outcome.victims.to_string(),
            fixed6(if outcome.victims == 0 { 0.0 } else { outcome.subverted as f64 / outcome.victims as f64 }),
            blank(),
            blank(),
        ]),
        ScenarioOutcome::Logical { outcome, .. } => row.extend([
            "logical".into(),
            o.affected_nodes().to_string(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            fixed6(outcome.compromised_fraction),
            fixed6(outcome.susceptible_fraction),
        ]),
    }
    row
}

/// Writes the bundle into `dir` in each requested format and returns the
/// paths written. Output depends only on the bundle.
pub fn emit_report(bundle: &ReportBundle, dir: &Path, formats: &BTreeSet<ReportFormat>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        let path = dir.join("report.json");
        std::fs::write(&path, jsonfmt::to_pretty(bundle)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if formats.contains(&ReportFormat::Csv) {
        let mut file = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
            let path = dir.join(name);
            csv_file(&path, header, rows)?;
            written.push(path);
            Ok(())
        };
        file("lag_series.csv", &["t", "b0", "b1", "b2", "b3", "b4"], {
            bundle
                .lag_series
                .samples
                .iter()
                .map(|s| std::iter::once(fixed6(s.t)).chain(s.fractions.iter().map(|f| fixed6(*f))).collect())
                .collect()
        })?;
        file("cdf_as.csv", &["rank", "fraction"], cdf_rows(&bundle.cdf_as))?;
        file("cdf_org.csv", &["rank", "fraction"], cdf_rows(&bundle.cdf_org))?;
        file(
            "covers.csv",
            &["level", "target", "count", "covered_fraction", "members"],
            bundle
                .covers
                .iter()
                .map(|c| {
                    vec![c.level.clone(), fixed6(c.target), c.count.to_string(), fixed6(c.covered_fraction), c.members.join(";")]
                })
                .collect(),
        )?;
        file(
            "version_census.csv",
            &["version", "count", "fraction"],
            bundle
                .version_census
                .entries
                .iter()
                .map(|e| vec![e.version.clone(), e.count.to_string(), fixed6(e.fraction)])
                .collect(),
        )?;
        file(
            "version_lag.csv",
            &["version", "release_date", "lag_days", "missing"],
            bundle
                .version_lag_days
                .iter()
                .map(|l| vec![l.version.clone(), opt(l.release_date), opt(l.lag_days), l.missing().to_string()])
                .collect(),
        )?;
        file(
            "outcomes.csv",
            &[
                "label",
                "kind",
                "affected_nodes",
                "isolated_node_fraction",
                "isolated_hash_fraction",
                "fork_formed",
                "reorg_depth_on_heal",
                "victims",
                "subverted_fraction",
                "compromised_fraction",
                "susceptible_fraction",
            ],
            bundle.attack_outcomes.iter().map(outcome_row).collect(),
        )?;
        file(
            "economics.csv",
            &["label", "affected_nodes", "per_node_value", "value_at_risk", "cost", "benefit_ratio"],
            bundle
                .economics
                .iter()
                .map(|e| {
                    vec![
                        e.label.clone(),
                        e.affected_nodes.to_string(),
                        fixed6(e.per_node_value),
                        fixed6(e.value_at_risk),
                        fixed6(e.cost),
                        opt(e.benefit_ratio.map(fixed6)),
                    ]
                })
                .collect(),
        )?;
    }
    Ok(written)
}
