//! Regenerates the bundled fixtures.
//!
//! Usage: `cargo run --release -p partsim-core --example gen_fixtures -- [out_dir]`
//! (default `fixtures`). Output is deterministic.

use std::fs;
use std::path::Path;

use partsim_core::analytics::LagTimeseries;
use partsim_core::ingest::{write_series_dir, write_snapshot};
use partsim_core::presets::{
    census_topology, org_aliases_csv, sim_pools, sim_topology, top_pools, top_pools_primary,
    temporal_sim_params, RELEASE_DATES,
};
use partsim_core::sim::{build_world, run, SimParams};
use partsim_core::topology::{build_synthetic, derive_prefixes};
use partsim_core::MiningPool;

/// Nodes and seed of the lag-series fixture, and how many one-minute samples it keeps.
const SERIES_NODES: usize = 400;
const SERIES_SEED: u64 = 1;
const SERIES_LEN: usize = 30;

fn write(path: &Path, text: String) {
    fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn pools_json(pools: &[MiningPool]) -> String {
    partsim_core::jsonfmt::to_pretty(&pools).expect("pools serialize")
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let out = Path::new(&out);
    let census_dir = out.join("census");
    fs::create_dir_all(&census_dir).expect("create fixture dirs");

    let snap = build_synthetic(&census_topology()).expect("census topology");
    write(&census_dir.join(format!("snap-{}.json", snap.timestamp)), write_snapshot(&snap));

    let mut prefixes = String::from("prefix,asn,org\n");
    for ((a, b), (asn, org)) in derive_prefixes(&snap) {
        prefixes.push_str(&format!("{a}.{b}.0.0/16,{},\"{}\"\n", asn.0, org.replace('"', "\"\"")));
    }
    write(&out.join("prefixes.csv"), prefixes);
    write(&out.join("org_aliases.csv"), org_aliases_csv());

    let mut dates = String::from("version,date\n");
    for (v, d) in RELEASE_DATES {
        dates.push_str(&format!("{v},{d}\n"));
    }
    write(&out.join("release_dates.csv"), dates);

    write(&out.join("pools_top5.json"), pools_json(&top_pools()));
    write(&out.join("pools_top5_primary.json"), pools_json(&top_pools_primary()));
    write(&out.join("pools_sim.json"), pools_json(&sim_pools()));

    // one-minute series around the moment the largest share of nodes sat one to four blocks behind
    let params = SimParams { capture_snapshots: true, ..temporal_sim_params(SERIES_SEED) };
    let topo = build_synthetic(&sim_topology(SERIES_NODES, SERIES_SEED)).expect("sim topology");
    let world = build_world(&topo, &sim_pools(), &params).expect("world");
    let trace = run(world, &params, &[], None).expect("calibrated run");
    let warm = params.start_timestamp + params.warmup as i64;
    let one_to_four: Vec<f64> = trace
        .snapshots
        .iter()
        .map(|s| {
            let f = LagTimeseries::<f64>::from_snapshot(s).expect("non-empty snapshot").samples[0].fractions;
            if s.timestamp >= warm { f[1] + f[2] } else { -1.0 }
        })
        .collect();
    let peak = (0..one_to_four.len()).max_by(|&a, &b| one_to_four[a].total_cmp(&one_to_four[b])).expect("samples");
    let first = peak.saturating_sub(SERIES_LEN / 2).min(trace.snapshots.len() - SERIES_LEN);
    let window = &trace.snapshots[first..first + SERIES_LEN];
    let series_dir = out.join("lag_series");
    if series_dir.exists() {
        fs::remove_dir_all(&series_dir).expect("clear old series");
    }
    write_series_dir(&series_dir, window).expect("write series");
    println!(
        "census: {} nodes; series: {} snapshots, peak B1+B2 {:.3} at {}",
        snap.len(),
        window.len(),
        one_to_four[peak],
        trace.snapshots[peak].timestamp
    );
}
