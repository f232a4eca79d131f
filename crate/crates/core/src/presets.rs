//! Calibrated inputs: the April 2018 census population, the top-5 pool
//! table, and the simulation setting whose steady state shows the observed
//! lag bands.

use crate::sim::SimParams;
use crate::topology::{
    Asn, HeightMix, MiningPool, OrgAliases, PoolLocation, TopologyParams, VersionMix, VersionShare,
};

/// 2018-04-26 00:00:00 UTC.
pub const CENSUS_TIMESTAMP: i64 = 1_524_700_800;

pub const CENSUS_TIP: u64 = 519_800;

fn loc(asn: u32, org: &str) -> PoolLocation {
    PoolLocation { asn: Asn(asn), org: org.into() }
}

fn pool(name: &str, share: f64, locations: Vec<PoolLocation>) -> MiningPool {
    MiningPool { name: name.into(), hash_share: share, locations }
}

/// Top five pools with their hosting ASes, first location listed first.
pub fn top_pools() -> Vec<MiningPool> {
    vec![
        pool("BTC.com", 0.25, vec![loc(37963, "Hangzhou Alibaba"), loc(45102, "AliBaba (China)")]),
        pool("Antpool", 0.124, vec![loc(45102, "AliBaba (China)")]),
        pool("ViaBTC", 0.117, vec![loc(45102, "AliBaba (China)")]),
        pool("BTC.TOP", 0.103, vec![loc(45102, "AliBaba (China)")]),
        pool("F2Pool", 0.063, vec![loc(45102, "AliBaba (China)"), loc(58563, "Chinanet Hubei")]),
    ]
}

/// Same pools with F2Pool's Chinanet Hubei gateway as its primary location.
/// Under exclusive-primary attribution this gives AliBaba 0.594 and Chinanet 0.063.
pub fn top_pools_primary() -> Vec<MiningPool> {
    let mut pools = top_pools();
    pools[4].locations.reverse();
    pools
}

/// Table pools plus one pool for the remaining hash rate, so that shares sum to one.
pub fn sim_pools() -> Vec<MiningPool> {
    let mut pools = top_pools();
    let rest = 1.0 - pools.iter().map(|p| p.hash_share).sum::<f64>();
    pools.push(pool("Others", rest, vec![loc(16509, "Amazon"), loc(24940, "Hetzner Online")]));
    pools
}

pub fn org_aliases() -> OrgAliases {
    OrgAliases::parse(&org_aliases_csv()).expect("alias table parses")
}

/// The alias table in `raw_name,canonical_name` form.
pub fn org_aliases_csv() -> String {
    "# raw_name,canonical_name\nHangzhou Alibaba,AliBaba (China)\n".into()
}

/// Release dates of the head client versions, ISO format.
pub const RELEASE_DATES: [(&str, &str); 5] = [
    ("0.16.0", "2018-02-26"),
    ("0.15.1", "2017-11-11"),
    ("0.15.0.1", "2017-09-19"),
    ("0.14.2", "2017-06-17"),
    ("0.15.0", "2017-04-22"),
];

fn head_versions() -> Vec<VersionShare> {
    [("0.16.0", 0.3628), ("0.15.1", 0.2752), ("0.15.0.1", 0.0501), ("0.14.2", 0.0467), ("0.15.0", 0.0205)]
        .into_iter()
        .map(|(v, s)| VersionShare { version: v.into(), share: s })
        .collect()
}

/// 10,000 nodes over 500 ASes and 300 organizations. Eight ASes hold 30% of
/// the nodes, 24 hold 50%, and 13 organizations hold 50%. The version mix has
/// 288 distinct clients led by 0.16.0 (36.28%) and 0.15.1 (27.52%).
pub fn census_topology() -> TopologyParams {
    TopologyParams {
        node_count: 10_000,
        as_count: 500,
        concentration_exponent: 1.24,
        rank_offset: 4.0,
        org_count: Some(300),
        org_exponent: 1.0,
        pool_spec: sim_pools(),
        aliases: org_aliases(),
        versions: VersionMix { head: head_versions(), tail_variants: 283, tail_exponent: 0.7 },
        heights: HeightMix {
            tip: CENSUS_TIP,
            lags: vec![(0, 0.50), (1, 0.20), (2, 0.09), (3, 0.06), (7, 0.08), (20, 0.07)],
        },
        timestamp: CENSUS_TIMESTAMP,
        seed: 2018,
    }
}

/// Smaller population with the same shape, used as the simulation substrate.
pub fn sim_topology(node_count: usize, seed: u64) -> TopologyParams {
    let as_count = (node_count / 20).max(8);
    let census = census_topology();
    TopologyParams {
        node_count,
        as_count,
        org_count: Some((as_count * 3 / 5).max(6)),
        versions: VersionMix { tail_variants: (node_count * 283 / 10_000).max(1), ..census.versions.clone() },
        heights: HeightMix { tip: CENSUS_TIP, lags: vec![(0, 1.0)] },
        seed,
        ..census
    }
}

/// Simulation setting that reproduces the observed temporal bands: about half
/// of the online nodes at the tip and roughly a third one to four blocks
/// behind. Slow nodes receive blocks one to nineteen minutes late; churned
/// nodes resync in time proportional to how far they fell behind.
pub fn temporal_sim_params(seed: u64) -> SimParams {
    SimParams {
        expected_block_interval: 600.0,
        delay_fast: 2.0,
        delay_slow: 600.0,
        slow_fraction: 0.6,
        slow_delay_spread: 0.9,
        outbound_peers: 8,
        churn_rate: 0.08,
        mean_offline: 6.0 * 3600.0,
        resync_delay: 600.0,
        resync_per_block: 200.0,
        horizon: 86_400.0,
        sample_interval: 60.0,
        warmup: 6.0 * 3600.0,
        start_timestamp: CENSUS_TIMESTAMP,
        seed,
        ..SimParams::default()
    }
}

/// Temporal attack used for the lag-bucket comparison: half the honest hash
/// rate, a 40 minute window opening once the network has reached steady state.
pub const TEMPORAL_ATTACK_SHARE: f64 = 0.5;
pub const TEMPORAL_ATTACK_START: f64 = 6.0 * 3600.0;
pub const TEMPORAL_ATTACK_WINDOW: f64 = 2400.0;
