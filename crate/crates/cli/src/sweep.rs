//! Monte Carlo grid over scenario parameters. Repetition `r` uses simulation
//! seed `sim.seed + r` and, for synthetic inputs, topology seed `seed + r`.

use std::collections::BTreeMap;
use std::path::Path;

use partsim_core::adversary::{AttackScenario, ScenarioOutcome, TemporalOutcome};
use partsim_core::jsonfmt::{self, fixed6};
use partsim_core::sim::{run, LagBucket, SimParams, TraceRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::simulate::{base_snapshot, world_for};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SpatialSummary {
    pub mean_isolated_node_fraction: f64,
    pub mean_isolated_hash_fraction: f64,
    pub fork_rate: f64,
    /// Mean heal reorg depth over runs in which a fork formed.
    pub mean_reorg_depth: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TemporalSummary {
    pub totals: TemporalOutcome,
    pub subverted_fraction_by_bucket: [Option<f64>; 5],
    /// Subversions recorded while the victim was level with the tip.
    pub lag0_violations: usize,
    /// Subversion probability never decreases from B1 to B4 (buckets without victims skipped).
    pub monotone: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LogicalSummary {
    pub mean_compromised_fraction: f64,
    pub mean_susceptible_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    /// Field assignments of this grid point, in axis order.
    pub point: Vec<(String, toml::Value)>,
    pub repetitions: u64,
    pub spatial: Option<SpatialSummary>,
    pub temporal: Option<TemporalSummary>,
    pub logical: Option<LogicalSummary>,
}

/// Cartesian product of the axes; a single empty point when there are none.
fn grid(sweep: &SweepConfig) -> Vec<Vec<(String, toml::Value)>> {
    let mut points = vec![Vec::new()];
    for axis in &sweep.axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.field.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn apply(scenario: &AttackScenario, point: &[(String, toml::Value)]) -> CliResult<AttackScenario> {
    if point.is_empty() {
        return Ok(scenario.clone());
    }
    let mut table = match toml::Value::try_from(scenario) {
        Ok(toml::Value::Table(t)) => t,
        _ => return Err(CliError::Runtime(format!("scenario `{}` does not serialize", scenario.label))),
    };
    for (field, value) in point {
        if !table.contains_key(field) && field != "mode" && field != "current_version" {
            return Err(CliError::Config(format!(
                "sweep.axes: scenario `{}` has no field `{field}`",
                scenario.label
            )));
        }
        table.insert(field.clone(), value.clone());
    }
    let s: AttackScenario = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("sweep.axes: {}", e.message())))?;
    s.validate().map_err(|e| CliError::at(&format!("sweep point of `{}`", s.label), e))?;
    Ok(s)
}

struct RepResult {
    outcome: ScenarioOutcome,
    lag0: usize,
}

fn one_run(cfg: &RunConfig, scenario: &AttackScenario, rep: u64) -> CliResult<RepResult> {
    let seed = cfg.sim.seed.wrapping_add(rep);
    let snapshot = base_snapshot(cfg, rep)?;
    let world = world_for(cfg, &snapshot, seed)?;
    let params = SimParams { seed, capture_snapshots: false, ..cfg.sim.clone() };
    let trace = run(world, &params, std::slice::from_ref(scenario), None)?;
    let outcome = trace
        .outcomes
        .first()
        .cloned()
        .ok_or_else(|| CliError::Config(format!("scenario `{}` does not finish within sim.horizon", scenario.label)))?;
    let lag0 = trace
        .records
        .iter()
        .filter(|r| matches!(r, TraceRecord::Subversion { lag_at_delivery: 0, .. }))
        .count();
    Ok(RepResult { outcome, lag0 })
}

fn monotone(fractions: &[Option<f64>; 5]) -> bool {
    let defined: Vec<f64> = fractions[1..].iter().flatten().copied().collect();
    defined.windows(2).all(|w| w[0] <= w[1])
}

fn summarize(label: String, point: Vec<(String, toml::Value)>, results: &[RepResult]) -> SweepRow {
    let n = results.len() as f64;
    let mut row = SweepRow { label, point, repetitions: results.len() as u64, spatial: None, temporal: None, logical: None };
    match results.first().map(|r| &r.outcome) {
        Some(ScenarioOutcome::Spatial { .. }) => {
            let mut s = SpatialSummary::default();
            let (mut forks, mut depth) = (0usize, 0u64);
            for r in results {
                if let ScenarioOutcome::Spatial { outcome, .. } = &r.outcome {
                    s.mean_isolated_node_fraction += outcome.isolated_node_fraction / n;
                    s.mean_isolated_hash_fraction += outcome.isolated_hash_fraction / n;
                    if outcome.fork_formed {
                        forks += 1;
                        depth += outcome.reorg_depth_on_heal;
                    }
                }
            }
            s.fork_rate = forks as f64 / n;
            s.mean_reorg_depth = (forks > 0).then(|| depth as f64 / forks as f64);
            row.spatial = Some(s);
        }
        Some(ScenarioOutcome::Temporal { .. }) => {
            let mut s = TemporalSummary::default();
            for r in results {
                if let ScenarioOutcome::Temporal { outcome, .. } = &r.outcome {
                    s.totals.merge(outcome);
                }
                s.lag0_violations += r.lag0;
            }
            s.subverted_fraction_by_bucket = LagBucket::ALL.map(|b| s.totals.subverted_fraction(b));
            s.monotone = monotone(&s.subverted_fraction_by_bucket);
            row.temporal = Some(s);
        }
        Some(ScenarioOutcome::Logical { .. }) => {
            let mut s = LogicalSummary::default();
            for r in results {
                if let ScenarioOutcome::Logical { outcome, .. } = &r.outcome {
                    s.mean_compromised_fraction += outcome.compromised_fraction / n;
                    s.mean_susceptible_fraction += outcome.susceptible_fraction / n;
                }
            }
            row.logical = Some(s);
        }
        None => {}
    }
    row
}

/// Runs the sweep on the current rayon pool. Results do not depend on the
/// number of worker threads.
pub fn run_sweep(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let sweep = cfg.sweep.clone().unwrap_or(SweepConfig { repetitions: 1, axes: Vec::new() });
    if cfg.scenarios.is_empty() {
        return Err(CliError::Config("scenarios: attack-sweep needs at least one scenario".into()));
    }
    let mut cells = Vec::new();
    for scenario in &cfg.scenarios {
        for point in grid(&sweep) {
            cells.push((apply(scenario, &point)?, point));
        }
    }
    let reps = sweep.repetitions;
    let tasks: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let results: Vec<RepResult> =
        tasks.par_iter().map(|&(c, r)| one_run(cfg, &cells[c].0, r)).collect::<CliResult<_>>()?;
    Ok(cells
        .into_iter()
        .zip(results.chunks(reps as usize))
        .map(|((scenario, point), chunk)| summarize(scenario.label, point, chunk))
        .collect())
}

fn point_text(point: &[(String, toml::Value)]) -> String {
    point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn opt6(v: Option<f64>) -> String {
    v.map(fixed6).unwrap_or_default()
}

/// `sweep.json` plus `sweep.csv` with one row per scenario and grid point.
pub fn write_sweep(rows: &[SweepRow], out: &Path) -> CliResult<()> {
    let runtime = |p: &Path, e: String| CliError::Runtime(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(out).map_err(|e| runtime(out, e.to_string()))?;
    let json_path = out.join("sweep.json");
    let points: Vec<BTreeMap<&str, &toml::Value>> =
        rows.iter().map(|r| r.point.iter().map(|(k, v)| (k.as_str(), v)).collect()).collect();
    #[derive(Serialize)]
    struct Doc<'a> {
        label: &'a str,
        point: &'a BTreeMap<&'a str, &'a toml::Value>,
        repetitions: u64,
        spatial: &'a Option<SpatialSummary>,
        temporal: &'a Option<TemporalSummary>,
        logical: &'a Option<LogicalSummary>,
    }
    let docs: Vec<Doc> = rows
        .iter()
        .zip(&points)
        .map(|(r, p)| Doc {
            label: &r.label,
            point: p,
            repetitions: r.repetitions,
            spatial: &r.spatial,
            temporal: &r.temporal,
            logical: &r.logical,
        })
        .collect();
    std::fs::write(&json_path, jsonfmt::to_pretty(&docs)?).map_err(|e| runtime(&json_path, e.to_string()))?;

    let csv_path = out.join("sweep.csv");
    let csv_err = |e: csv::Error| runtime(&csv_path, e.to_string());
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record([
        "label",
        "point",
        "repetitions",
        "kind",
        "isolated_node_fraction",
        "isolated_hash_fraction",
        "fork_rate",
        "mean_reorg_depth",
        "p_b1",
        "p_b2",
        "p_b3",
        "p_b4",
        "lag0_violations",
        "compromised_fraction",
        "susceptible_fraction",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let mut cols = vec![r.label.clone(), point_text(&r.point), r.repetitions.to_string()];
        let blanks = |n: usize| vec![String::new(); n];
        if let Some(s) = &r.spatial {
            cols.push("spatial".into());
            cols.extend([
                fixed6(s.mean_isolated_node_fraction),
                fixed6(s.mean_isolated_hash_fraction),
                fixed6(s.fork_rate),
                opt6(s.mean_reorg_depth),
            ]);
            cols.extend(blanks(7));
        } else if let Some(t) = &r.temporal {
            cols.push("temporal".into());
            cols.extend(blanks(4));
            cols.extend(t.subverted_fraction_by_bucket[1..].iter().map(|f| opt6(*f)));
            cols.push(t.lag0_violations.to_string());
            cols.extend(blanks(2));
        } else if let Some(l) = &r.logical {
            cols.push("logical".into());
            cols.extend(blanks(9));
            cols.extend([fixed6(l.mean_compromised_fraction), fixed6(l.mean_susceptible_fraction)]);
        }
        w.write_record(&cols).map_err(csv_err)?;
    }
    w.flush().map_err(|e| runtime(&csv_path, e.to_string()))
}
