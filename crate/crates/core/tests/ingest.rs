use std::net::Ipv4Addr;
use std::path::PathBuf;

use ipnet::Ipv4Net;
use partsim_core::ingest::{
    assemble_series, load_prefix_table, read_series_dir, resolve_asn, Cadence, PrefixTable, DEFAULT_JITTER,
};
use partsim_core::presets::census_topology;
use partsim_core::topology::{build_synthetic, Asn};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Linear scan: the covering entry with the longest mask.
fn scan(entries: &[(Ipv4Net, u32)], addr: Ipv4Addr) -> Option<u32> {
    entries.iter().filter(|(n, _)| n.contains(&addr)).max_by_key(|(n, _)| n.prefix_len()).map(|(_, a)| *a)
}

fn random_table(rng: &mut ChaCha8Rng, size: usize) -> Vec<(Ipv4Net, u32)> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < size {
        let len = rng.gen_range(0..=32u8);
        // cluster prefixes under a few first octets so that nesting is common
        let addr = Ipv4Addr::from((rng.gen_range(0..4u32) << 30) | (rng.gen::<u32>() >> 2));
        let net = Ipv4Net::new(addr, len).unwrap().trunc();
        if seen.insert(net) {
            out.push((net, out.len() as u32 + 1));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trie_agrees_with_linear_scan(seed in any::<u64>(), size in 0usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = random_table(&mut rng, size);
        let mut table = PrefixTable::new();
        for (net, asn) in &entries {
            table.insert(*net, Asn(*asn), format!("org{asn}")).unwrap();
        }
        for _ in 0..200 {
            let addr = Ipv4Addr::from((rng.gen_range(0..4u32) << 30) | (rng.gen::<u32>() >> 2));
            let got = resolve_asn(addr, &table).map(|(a, _)| a.0);
            prop_assert_eq!(got, scan(&entries, addr), "{}", addr);
        }
    }
}

#[test]
fn bundled_prefix_table_resolves_every_census_node() {
    let table = load_prefix_table(&std::fs::read(fixtures().join("prefixes.csv")).unwrap()).unwrap();
    let snap = build_synthetic(&census_topology()).unwrap();
    for n in &snap.nodes {
        let (asn, org) = resolve_asn(n.address, &table).expect("covered");
        assert_eq!((asn, org), (n.asn, n.org.as_str()));
    }
}

#[test]
fn bundled_census_snapshot_is_the_preset() {
    let scan = read_series_dir(&fixtures().join("census"), None).unwrap();
    assert!(scan.failures.is_empty());
    assert_eq!(scan.snapshots.len(), 1);
    assert_eq!(scan.snapshots[0].1, build_synthetic(&census_topology()).unwrap());
}

#[test]
fn bundled_lag_series_is_one_minute_without_gaps() {
    let scan = read_series_dir(&fixtures().join("lag_series"), None).unwrap();
    assert!(scan.failures.is_empty());
    let snaps: Vec<_> = scan.snapshots.into_iter().map(|(_, s)| s).collect();
    let series = assemble_series(snaps, Cadence::Minute, DEFAULT_JITTER).unwrap();
    assert_eq!(series.len(), 30);
    assert!(series.gaps.is_empty());
}
