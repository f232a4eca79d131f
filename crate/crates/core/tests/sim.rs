use partsim_core::adversary::{spatial_hijack, AttackKind, AttackScenario, SpatialMode};
use partsim_core::analytics::LagTimeseries;
use partsim_core::blockaware::BlockAwareConfig;
use partsim_core::ingest::{assemble_series, Cadence, DEFAULT_JITTER};
use partsim_core::presets::{sim_pools, sim_topology, temporal_sim_params};
use partsim_core::sim::{build_world, run, SimParams, Simulation, TraceRecord, World};
use partsim_core::topology::{build_synthetic, Asn, MiningPool, PoolLocation, TopologyParams};
use proptest::prelude::*;

fn calibrated_world(nodes: usize, seed: u64, params: &SimParams) -> World {
    let snap = build_synthetic(&sim_topology(nodes, seed)).unwrap();
    build_world(&snap, &sim_pools(), params).unwrap()
}

/// Two pools in two different ASes of a small generated population.
fn two_pool_world(inside_share: f64, params: &SimParams, seed: u64) -> (World, Asn) {
    let snap = build_synthetic(&TopologyParams::new(30, 3, 1.0, seed)).unwrap();
    let mut ases: Vec<Asn> = snap.as_counts().into_keys().collect();
    ases.sort();
    let pool = |name: &str, share: f64, asn: Asn| MiningPool {
        name: name.into(),
        hash_share: share,
        locations: vec![PoolLocation { asn, org: String::new() }],
    };
    let pools = vec![pool("inside", inside_share, ases[0]), pool("outside", 1.0 - inside_share, ases[1])];
    (build_world(&snap, &pools, params).unwrap(), ases[0])
}

/// E[min(X, Y)] for independent Poisson X, Y, from `P(min > k) = P(X > k) P(Y > k)`.
fn expected_min_poisson(a: f64, b: f64) -> f64 {
    let tail = |lambda: f64| {
        // returns P(X > k) for k = 0.. until negligible
        let mut pmf = (-lambda).exp();
        let mut cdf = pmf;
        let mut out = Vec::new();
        for k in 0..1000 {
            out.push(1.0 - cdf);
            pmf *= lambda / (k + 1) as f64;
            cdf += pmf;
        }
        out
    };
    tail(a).iter().zip(tail(b)).map(|(x, y)| x * y).sum()
}

#[test]
fn heal_depth_matches_the_poisson_minimum() {
    // 100 expected blocks inside a severed window: 40 inside, 60 outside
    let runs = 300;
    let params = SimParams { delay_fast: 0.0, delay_slow: 0.0, horizon: 60_001.0, sample_interval: 60_001.0, ..SimParams::default() };
    let mut total = 0.0;
    let mut forks = 0;
    for seed in 0..runs {
        let p = SimParams { seed, ..params.clone() };
        let (world, inside) = two_pool_world(0.4, &p, seed);
        let (o, _) = spatial_hijack(world, &p, &[inside], 0.0, 60_000.0, SpatialMode::Sever).unwrap();
        assert_eq!(o.fork_formed, o.blocks_inside > 0 && o.blocks_outside > 0);
        if o.fork_formed {
            forks += 1;
            assert_eq!(o.reorg_depth_on_heal, o.blocks_inside.min(o.blocks_outside));
        }
        total += o.reorg_depth_on_heal as f64;
    }
    let mean = total / runs as f64;
    let oracle = expected_min_poisson(40.0, 60.0);
    // sd of min(Poisson 40, Poisson 60) is below 7
    let tol = 4.0 * 7.0 / (runs as f64).sqrt();
    assert!((mean - oracle).abs() < tol, "mean {mean} oracle {oracle} tol {tol}");
    assert_eq!(forks, runs);
}

#[test]
fn delay_mode_never_forks() {
    let params = SimParams { horizon: 20_000.0, ..SimParams::default() };
    for seed in 0..10 {
        let p = SimParams { seed, ..params.clone() };
        let (world, inside) = two_pool_world(0.4, &p, seed);
        let (o, trace) = spatial_hijack(world, &p, &[inside], 1000.0, 10_000.0, SpatialMode::Delay(120.0)).unwrap();
        assert!(!o.fork_formed);
        assert_eq!(o.reorg_depth_on_heal, 0);
        assert_eq!(trace.count("heal"), 0);
    }
}

#[test]
fn trace_and_exported_snapshots_give_the_same_lag_series() {
    let params = SimParams { capture_snapshots: true, horizon: 4.0 * 3600.0, warmup: 0.0, ..temporal_sim_params(3) };
    let trace = run(calibrated_world(300, 3, &params), &params, &[], None).unwrap();
    let from_trace = LagTimeseries::<f64>::from_trace(&trace).unwrap();
    let series = assemble_series(trace.snapshots.clone(), Cadence::Minute, DEFAULT_JITTER).unwrap();
    let from_series = LagTimeseries::<f64>::from_series(&series).unwrap();
    assert_eq!(from_trace.samples.len(), from_series.samples.len());
    for (a, b) in from_trace.samples.iter().zip(&from_series.samples) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.tip, b.tip);
        assert_eq!(a.online, b.online);
        for (x, y) in a.fractions.iter().zip(&b.fractions) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn isolated_node_alerts_after_k_silent_intervals() {
    for k in 1..=4u64 {
        let params = SimParams { horizon: 6.0 * 600.0, sample_interval: 600.0, ..SimParams::default() };
        let (mut world, _) = two_pool_world(0.5, &params, 11);
        // cut every link of one ordinary node
        let lonely = world.nodes.iter().position(|n| !n.gateway).unwrap();
        let peers = std::mem::take(&mut world.nodes[lonely].peers);
        for p in peers {
            world.nodes[p as usize].peers.retain(|q| *q as usize != lonely);
        }
        let id = world.nodes[lonely].node_id;
        let cfg = BlockAwareConfig { alert_threshold: k, ..BlockAwareConfig::default() };
        let trace = run(world, &params, &[], Some(&cfg)).unwrap();
        let first = trace
            .records
            .iter()
            .find_map(|r| match r {
                TraceRecord::BlockawareAlert { t, node, est_lag } if *node == id => Some((*t, *est_lag)),
                _ => None,
            })
            .expect("alert");
        assert_eq!(first, (k as f64 * 600.0, k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heights_only_drop_through_recorded_reorgs(seed in 0u64..10_000) {
        let params = SimParams { horizon: 3.0 * 3600.0, warmup: 0.0, ..temporal_sim_params(seed) };
        let world = calibrated_world(120, seed, &params);
        let scenarios = vec![
            AttackScenario {
                label: "cut".into(),
                kind: AttackKind::Spatial { as_set: vec![world.nodes[0].asn], start: 1800.0, duration: 3600.0, mode: SpatialMode::Sever },
            },
            AttackScenario {
                label: "feed".into(),
                kind: AttackKind::Temporal {
                    victim_filter: partsim_core::sim::LagBucket::B1,
                    adversary_hash_share: 0.3,
                    start: 3600.0,
                    duration: 3600.0,
                },
            },
        ];
        let mut sim = Simulation::new(world, &params, &scenarios, None).unwrap();
        let mut heights: Vec<u64> = sim.world().nodes.iter().map(|n| n.view.height).collect();
        let mut seen = sim.trace().records.len();
        while sim.step().is_some() {
            let new = &sim.trace().records[seen..];
            for (i, n) in sim.world().nodes.iter().enumerate() {
                if n.view.height < heights[i] {
                    let explained = new.iter().any(|r| match r {
                        TraceRecord::Reorg { node, .. } => *node == n.node_id,
                        TraceRecord::Heal { .. } => true,
                        _ => false,
                    });
                    prop_assert!(explained, "node {} fell from {} to {}", i, heights[i], n.view.height);
                }
                heights[i] = n.view.height;
            }
            seen = sim.trace().records.len();
        }
    }

    #[test]
    fn lag_fractions_sum_to_one(seed in 0u64..10_000) {
        let params = SimParams { horizon: 2.0 * 3600.0, ..temporal_sim_params(seed) };
        let trace = run(calibrated_world(150, seed, &params), &params, &[], None).unwrap();
        for (_, h) in trace.lag_histograms() {
            prop_assert!((h.total() - 1.0).abs() < 1e-9);
        }
    }
}
