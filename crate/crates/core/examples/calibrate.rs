//! Prints steady-state lag fractions of the calibrated setting over several seeds.
//!
//! Usage: `cargo run --release --example calibrate -- [nodes] [seeds] [key=value ...]`
//! where keys are `SimParams` fields.

use std::time::Instant;

use partsim_core::analytics::LagTimeseries;
use partsim_core::presets::{sim_pools, sim_topology, temporal_sim_params};
use partsim_core::sim::{build_world, run, SimParams};
use partsim_core::topology::build_synthetic;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let nodes: usize = args.first().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let seeds: u64 = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let mut overrides = serde_json::to_value(temporal_sim_params(0)).unwrap();
    for kv in args.iter().skip(2) {
        let (k, v) = kv.split_once('=').expect("key=value");
        overrides[k] = serde_json::from_str(v).expect("JSON value");
    }
    let base: SimParams = serde_json::from_value(overrides).unwrap();
    let started = Instant::now();
    let mut sums = [0.0; 5];
    for seed in 0..seeds {
        let params = SimParams { seed, ..base.clone() };
        let snap = build_synthetic(&sim_topology(nodes, seed)).unwrap();
        let world = build_world(&snap, &sim_pools(), &params).unwrap();
        let trace = run(world, &params, &[], None).unwrap();
        let m = LagTimeseries::<f64>::from_trace(&trace).unwrap().mean_fractions(params.warmup).unwrap();
        println!("seed {seed:>3}: {:?}", m.map(|f| (f * 1000.0).round() / 1000.0));
        for (s, f) in sums.iter_mut().zip(m) {
            *s += f;
        }
    }
    let mean = sums.map(|s| s / seeds as f64);
    println!("mean b0 {:.3} b1+b2 {:.3} b3 {:.3} b4 {:.3}", mean[0], mean[1] + mean[2], mean[3], mean[4]);
    println!("elapsed {:.1?}", started.elapsed());
}
