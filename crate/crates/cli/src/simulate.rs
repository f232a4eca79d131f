use std::collections::BTreeSet;
use std::path::Path;

use partsim_core::analytics::{build_census_report, emit_report, EconomicsEntry, LagTimeseries, ReportBundle, ReportFormat};
use partsim_core::ingest::write_series_dir;
use partsim_core::jsonfmt;
use partsim_core::sim::{build_world, run, BlockAwareSummary, TraceLog, World};
use partsim_core::topology::{build_synthetic, NetworkSnapshot};
use serde::Serialize;

use crate::census::load_snapshot_dir;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Population a run starts from: the latest snapshot in the input directory,
/// or the synthetic topology generated with `seed_offset` added to its seed.
pub fn base_snapshot(cfg: &RunConfig, seed_offset: u64) -> CliResult<NetworkSnapshot> {
    if let Some(mut topo) = cfg.topology()? {
        topo.seed = topo.seed.wrapping_add(seed_offset);
        return Ok(build_synthetic(&topo)?);
    }
    let dir = cfg.input.snapshot_dir.as_ref().expect("validated: one input is set");
    let table = cfg.input.prefix_table.as_ref().map(|p| cfg.resolve(p));
    let loaded = load_snapshot_dir(&cfg.resolve(dir), table.as_deref())?;
    Ok(loaded.latest().clone())
}

/// World for one run, with prefix-table ASes added to the set scenarios may name.
pub fn world_for(cfg: &RunConfig, snapshot: &NetworkSnapshot, seed: u64) -> CliResult<World> {
    let params = partsim_core::sim::SimParams { seed, ..cfg.sim.clone() };
    let mut world = build_world(snapshot, &cfg.pools()?, &params)?;
    if let Some(table) = cfg.prefix_table()? {
        world.add_known_asns(table.entries().iter().map(|e| e.asn));
    }
    Ok(world)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub nodes: usize,
    pub horizon: f64,
    pub blocks_mined: usize,
    pub forks: usize,
    pub reorgs: usize,
    pub samples: usize,
    pub subversions: usize,
    pub blockaware: Option<BlockAwareSummary>,
    pub scenarios: Vec<String>,
}

pub struct SimulateOutput {
    pub trace: TraceLog,
    pub bundle: ReportBundle,
    pub summary: RunSummary,
}

fn write(path: &Path, text: String) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Runs the configured scenarios and writes `trace.jsonl`, `summary.json`,
/// the report files and, when snapshots are captured, `snapshots/`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path, formats: &BTreeSet<ReportFormat>) -> CliResult<SimulateOutput> {
    let snapshot = base_snapshot(cfg, 0)?;
    let world = world_for(cfg, &snapshot, cfg.sim.seed)?;
    let node_count = world.nodes.len();
    let trace = run(world, &cfg.sim, &cfg.scenarios, cfg.blockaware.as_ref())?;

    let aliases = cfg.aliases()?;
    let dates = cfg.release_dates()?;
    let mut bundle = build_census_report(&snapshot, &aliases, &cfg.census.targets, None, dates.as_ref())?;
    bundle.lag_series = LagTimeseries::from_trace(&trace)?;
    bundle.attack_outcomes = trace.outcomes.clone();
    if let Some(econ) = &cfg.economics {
        bundle.economics =
            trace.outcomes.iter().map(|o| EconomicsEntry::for_outcome(econ, o)).collect::<Result<_, _>>()?;
    }
    let summary = RunSummary {
        schema_version: partsim_core::analytics::REPORT_SCHEMA_VERSION,
        seed: cfg.sim.seed,
        nodes: node_count,
        horizon: cfg.sim.horizon,
        blocks_mined: trace.count("block_mined"),
        forks: trace.count("fork"),
        reorgs: trace.count("reorg"),
        samples: trace.count("sample"),
        subversions: trace.count("subversion"),
        blockaware: cfg.blockaware.map(|_| trace.blockaware_summary()),
        scenarios: cfg.scenarios.iter().map(|s| s.label.clone()).collect(),
    };

    std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    write(&out.join("trace.jsonl"), trace.to_jsonl()?)?;
    write(&out.join("summary.json"), jsonfmt::to_pretty(&summary)?)?;
    emit_report(&bundle, out, formats).map_err(|e| CliError::Runtime(e.to_string()))?;
    if !trace.snapshots.is_empty() {
        write_series_dir(&out.join("snapshots"), &trace.snapshots).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(SimulateOutput { trace, bundle, summary })
}
