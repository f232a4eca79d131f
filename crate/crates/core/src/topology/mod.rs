//! Static network population: nodes, autonomous systems, organizations and
//! mining pools, plus the concentration metrics computed over them.

mod synthetic;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use synthetic::{
    apportion, build_synthetic, derive_prefixes, HeightMix, TopologyParams, VersionMix, VersionShare,
};

/// Autonomous system number. `Asn(0)` is reserved for addresses that could not be resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Asn(pub u32);

impl Asn {
    pub const UNRESOLVED: Asn = Asn(0);

    pub fn is_resolved(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AS{}", self.0)
    }
}

/// Org name recorded for nodes whose address did not resolve.
pub const UNKNOWN_ORG: &str = "UNKNOWN";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRecord {
    pub node_id: NodeId,
    pub address: Ipv4Addr,
    pub asn: Asn,
    pub org: String,
    pub height: u64,
    pub version: String,
}

/// A timestamped census of reachable nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NetworkSnapshot {
    pub timestamp: i64,
    pub nodes: Vec<NodeRecord>,
}

impl NetworkSnapshot {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_height(&self) -> Option<u64> {
        self.nodes.iter().map(|n| n.height).max()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.node_id) {
                return Err(Error::Data(format!("duplicate node id {}", n.node_id)));
            }
        }
        Ok(())
    }

    /// Node count per AS, unresolved nodes grouped under `Asn::UNRESOLVED`.
    pub fn as_counts(&self) -> BTreeMap<Asn, usize> {
        let mut counts = BTreeMap::new();
        for n in &self.nodes {
            *counts.entry(n.asn).or_insert(0) += 1;
        }
        counts
    }

    /// Node count per canonical organization name.
    pub fn org_counts(&self, aliases: &OrgAliases) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for n in &self.nodes {
            *counts
                .entry(aliases.canonical(&n.org).to_string())
                .or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoolLocation {
    pub asn: Asn,
    pub org: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningPool<T = f64> {
    pub name: String,
    pub hash_share: T,
    /// First entry is the pool's primary location.
    pub locations: Vec<PoolLocation>,
}

impl<T: Scalar> MiningPool<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.hash_share >= T::zero() && self.hash_share <= T::one()) {
            return Err(Error::param(
                format!("pool `{}`.hash_share", self.name),
                format!("{} not in [0,1]", self.hash_share),
            ));
        }
        if self.locations.is_empty() {
            return Err(Error::param(
                format!("pool `{}`.locations", self.name),
                "must not be empty",
            ));
        }
        Ok(())
    }

    pub fn primary(&self) -> &PoolLocation {
        &self.locations[0]
    }
}

/// Validates every pool and that the shares sum to at most one.
pub fn validate_pools<T: Scalar>(pools: &[MiningPool<T>]) -> Result<()> {
    for p in pools {
        p.validate()?;
    }
    let total: T = pools.iter().map(|p| p.hash_share).sum();
    // shares are usually written with 3-4 decimals; allow for summation rounding only
    if total > T::one() + T::epsilon() * T::lit(16.0) {
        return Err(Error::param("pools", format!("hash shares sum to {total} > 1")));
    }
    Ok(())
}

/// How a pool's hash share is credited to the ASes/organizations that host it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionPolicy {
    /// Every host that sees any of the pool's traffic is credited the full share.
    #[default]
    ViewUnion,
    /// The full share goes to the pool's first-listed location only.
    ExclusivePrimary,
    /// The share is divided equally over the pool's locations.
    SplitEven,
}

/// Maps raw organization names onto a canonical name. Unlisted names map to themselves.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OrgAliases {
    map: HashMap<String, String>,
}

impl OrgAliases {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw: impl Into<String>, canonical: impl Into<String>) {
        self.map.insert(raw.into(), canonical.into());
    }

    pub fn canonical<'a>(&'a self, raw: &'a str) -> &'a str {
        self.map.get(raw).map(String::as_str).unwrap_or(raw)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Parses `raw_name,canonical_name` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut aliases = OrgAliases::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                context: format!("alias row {}", i + 1),
                reason: e.to_string(),
            })?;
            if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
                return Err(Error::Parse {
                    context: format!("alias line {}", rec.position().map_or(i + 1, |p| p.line() as usize)),
                    reason: "expected `raw_name,canonical_name`".into(),
                });
            }
            aliases.insert(&rec[0], &rec[1]);
        }
        Ok(aliases)
    }
}

/// Smallest set of keys whose weight reaches a target share of the total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverResult<K = Asn, T = f64> {
    pub members: Vec<K>,
    pub covered_fraction: T,
    pub target_fraction: T,
}

impl<K, T> CoverResult<K, T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn check_target<T: Scalar>(target_fraction: T) -> Result<()> {
    if !(target_fraction > T::zero() && target_fraction <= T::one()) {
        return Err(Error::param(
            "target_fraction",
            format!("{target_fraction} not in (0,1]"),
        ));
    }
    Ok(())
}

/// Keys sorted by descending weight, ties by ascending key.
fn rank_by_weight<K: Ord + Clone, T: Scalar>(weights: &BTreeMap<K, T>) -> Vec<(K, T)> {
    let mut ranked: Vec<(K, T)> = weights.iter().map(|(k, w)| (k.clone(), *w)).collect();
    // BTreeMap iteration is ascending by key and the sort is stable
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("weights are not NaN"));
    ranked
}

/// Minimum-cardinality cover over arbitrary keys.
///
/// Each key contributes a fixed weight, so taking keys in descending-weight
/// order is optimal: any `k` keys weigh at most the `k` heaviest.
pub fn min_cover<K: Ord + Clone, T: Scalar>(
    weights: &BTreeMap<K, T>,
    target_fraction: T,
) -> Result<CoverResult<K, T>> {
    check_target(target_fraction)?;
    if weights.values().any(|w| w.is_nan() || *w < T::zero()) {
        return Err(Error::Domain("weights must be non-negative numbers".into()));
    }
    let total: T = weights.values().copied().sum();
    if total <= T::zero() {
        return Err(Error::Domain("total weight is zero".into()));
    }
    let need = target_fraction * total;
    let mut members = Vec::new();
    let mut acc = T::zero();
    for (k, w) in rank_by_weight(weights) {
        members.push(k);
        acc = acc + w;
        if acc >= need {
            break;
        }
    }
    Ok(CoverResult {
        members,
        covered_fraction: acc / total,
        target_fraction,
    })
}

pub fn min_as_cover<T: Scalar>(
    weights: &BTreeMap<Asn, T>,
    target_fraction: T,
) -> Result<CoverResult<Asn, T>> {
    min_cover(weights, target_fraction)
}

/// Converts integer counts into scalar weights for [`min_cover`].
pub fn count_weights<K: Ord + Clone, T: Scalar>(counts: &BTreeMap<K, usize>) -> BTreeMap<K, T> {
    counts
        .iter()
        .map(|(k, c)| (k.clone(), T::from_count(*c)))
        .collect()
}

/// Cumulative share of nodes held by the top-`k` groups, `k = 1..=groups`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfSeries<T = f64> {
    pub points: Vec<(usize, T)>,
}

impl<T: Scalar> CdfSeries<T> {
    /// Cumulative fraction at rank `k` (1-based); 1.0 beyond the last group.
    pub fn at(&self, k: usize) -> T {
        match k {
            0 => T::zero(),
            k if k > self.points.len() => T::one(),
            k => self.points[k - 1].1,
        }
    }
}

/// CDF over groups of a count map. Fractions are formed from integer prefix
/// sums so the last point is exactly one.
pub fn cdf_from_counts<K: Ord + Clone, T: Scalar>(counts: &BTreeMap<K, usize>) -> Result<CdfSeries<T>> {
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::Domain("cannot form a CDF over zero nodes".into()));
    }
    let mut sorted: Vec<usize> = counts.values().copied().filter(|c| *c > 0).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut acc = 0usize;
    let points = sorted
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            acc += c;
            (i + 1, T::ratio(acc, total))
        })
        .collect();
    Ok(CdfSeries { points })
}

pub fn as_node_cdf<T: Scalar>(snapshot: &NetworkSnapshot) -> Result<CdfSeries<T>> {
    if snapshot.is_empty() {
        return Err(Error::Domain("snapshot has no nodes".into()));
    }
    cdf_from_counts(&snapshot.as_counts())
}

pub fn org_node_cdf<T: Scalar>(snapshot: &NetworkSnapshot, aliases: &OrgAliases) -> Result<CdfSeries<T>> {
    if snapshot.is_empty() {
        return Err(Error::Domain("snapshot has no nodes".into()));
    }
    cdf_from_counts(&snapshot.org_counts(aliases))
}

fn attribute<K: Ord + Clone, T: Scalar>(
    pools: &[MiningPool<T>],
    policy: AttributionPolicy,
    key: impl Fn(&PoolLocation) -> K,
) -> BTreeMap<K, T> {
    let mut out: BTreeMap<K, T> = BTreeMap::new();
    for pool in pools {
        if pool.locations.is_empty() {
            continue;
        }
        match policy {
            AttributionPolicy::ViewUnion => {
                let hosts: BTreeSet<K> = pool.locations.iter().map(&key).collect();
                for h in hosts {
                    let e = out.entry(h).or_insert_with(T::zero);
                    *e = *e + pool.hash_share;
                }
            }
            AttributionPolicy::ExclusivePrimary => {
                let e = out.entry(key(pool.primary())).or_insert_with(T::zero);
                *e = *e + pool.hash_share;
            }
            AttributionPolicy::SplitEven => {
                let part = pool.hash_share / T::from_count(pool.locations.len());
                for loc in &pool.locations {
                    let e = out.entry(key(loc)).or_insert_with(T::zero);
                    *e = *e + part;
                }
            }
        }
    }
    out
}

/// Hash share credited to each AS under `policy`.
pub fn attribute_hash_rate_as<T: Scalar>(
    pools: &[MiningPool<T>],
    policy: AttributionPolicy,
) -> BTreeMap<Asn, T> {
    attribute(pools, policy, |l| l.asn)
}

/// Hash share credited to each canonical organization under `policy`.
pub fn attribute_hash_rate_org<T: Scalar>(
    pools: &[MiningPool<T>],
    policy: AttributionPolicy,
    aliases: &OrgAliases,
) -> BTreeMap<String, T> {
    attribute(pools, policy, |l| aliases.canonical(&l.org).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(pairs: &[(u32, f64)]) -> BTreeMap<Asn, f64> {
        pairs.iter().map(|(a, w)| (Asn(*a), *w)).collect()
    }

    #[test]
    fn cover_example_from_six_weights() {
        let weights = w(&[(1, 5.0), (2, 4.0), (3, 3.0), (4, 2.0), (5, 1.0), (6, 1.0)]);
        let c = min_as_cover(&weights, 0.5).unwrap();
        assert_eq!(c.members, vec![Asn(1), Asn(2)]);
        assert_eq!(c.covered_fraction, 9.0 / 16.0);
    }

    #[test]
    fn cover_single_as() {
        let c = min_as_cover(&w(&[(7, 3.0)]), 0.99).unwrap();
        assert_eq!(c.members, vec![Asn(7)]);
        assert_eq!(c.covered_fraction, 1.0);
    }

    #[test]
    fn cover_tie_break_is_ascending_asn() {
        let c = min_as_cover(&w(&[(9, 1.0), (3, 1.0), (5, 1.0)]), 0.5).unwrap();
        assert_eq!(c.members, vec![Asn(3), Asn(5)]);
    }

    #[test]
    fn cover_rejects_zero_weight_and_bad_target() {
        assert!(matches!(min_as_cover(&w(&[(1, 0.0)]), 0.5), Err(Error::Domain(_))));
        assert!(matches!(min_as_cover(&w(&[(1, 1.0)]), 0.0), Err(Error::Parameter { .. })));
        assert!(matches!(min_as_cover(&w(&[(1, 1.0)]), 1.5), Err(Error::Parameter { .. })));
    }

    fn snap(asns: &[u32]) -> NetworkSnapshot {
        NetworkSnapshot {
            timestamp: 0,
            nodes: asns
                .iter()
                .enumerate()
                .map(|(i, a)| NodeRecord {
                    node_id: NodeId(i as u32),
                    address: Ipv4Addr::new(1, 0, 0, i as u8),
                    asn: Asn(*a),
                    org: format!("org{a}"),
                    height: 0,
                    version: "v".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn cdf_examples() {
        let one = as_node_cdf::<f64>(&snap(&[4, 4, 4])).unwrap();
        assert_eq!(one.points, vec![(1, 1.0)]);
        let two = as_node_cdf::<f64>(&snap(&[1, 1, 2, 1])).unwrap();
        assert_eq!(two.points, vec![(1, 0.75), (2, 1.0)]);
        assert!(matches!(as_node_cdf::<f64>(&snap(&[])), Err(Error::Domain(_))));
    }

    #[test]
    fn cdf_works_in_f32() {
        let c = as_node_cdf::<f32>(&snap(&[1, 1, 2, 1])).unwrap();
        assert_eq!(c.points, vec![(1, 0.75f32), (2, 1.0f32)]);
    }

    fn loc(asn: u32, org: &str) -> PoolLocation {
        PoolLocation { asn: Asn(asn), org: org.into() }
    }

    #[test]
    fn attribution_policies() {
        let pools: Vec<MiningPool<f64>> = vec![
            MiningPool { name: "a".into(), hash_share: 0.4, locations: vec![loc(1, "X"), loc(2, "Y")] },
            MiningPool { name: "b".into(), hash_share: 0.2, locations: vec![loc(2, "Y")] },
        ];
        let view = attribute_hash_rate_as(&pools, AttributionPolicy::ViewUnion);
        assert_eq!(view[&Asn(1)], 0.4);
        assert!((view[&Asn(2)] - 0.6).abs() < 1e-15);
        let prim = attribute_hash_rate_as(&pools, AttributionPolicy::ExclusivePrimary);
        assert_eq!(prim[&Asn(1)], 0.4);
        assert_eq!(prim[&Asn(2)], 0.2);
        let split = attribute_hash_rate_as(&pools, AttributionPolicy::SplitEven);
        assert_eq!(split[&Asn(1)], 0.2);
        assert!((split[&Asn(2)] - 0.4).abs() < 1e-15);
        assert!(attribute_hash_rate_as::<f64>(&[], AttributionPolicy::ViewUnion).is_empty());
    }

    #[test]
    fn view_union_counts_an_org_once_per_pool() {
        let mut aliases = OrgAliases::new();
        aliases.insert("Hangzhou", "Ali");
        let pools = vec![MiningPool {
            name: "p".into(),
            hash_share: 0.25,
            locations: vec![loc(1, "Hangzhou"), loc(2, "Ali")],
        }];
        let by_org = attribute_hash_rate_org(&pools, AttributionPolicy::ViewUnion, &aliases);
        assert_eq!(by_org.len(), 1);
        assert_eq!(by_org["Ali"], 0.25);
    }

    #[test]
    fn alias_file_parsing() {
        let a = OrgAliases::parse("# comment\nHangzhou Alibaba,AliBaba (China)\n\n").unwrap();
        assert_eq!(a.canonical("Hangzhou Alibaba"), "AliBaba (China)");
        assert_eq!(a.canonical("Other"), "Other");
        assert!(OrgAliases::parse("only-one-field\n").is_err());
    }

    #[test]
    fn pool_validation() {
        let bad = MiningPool { name: "x".into(), hash_share: 1.5, locations: vec![loc(1, "A")] };
        assert!(bad.validate().is_err());
        let empty = MiningPool { name: "x".into(), hash_share: 0.5, locations: vec![] };
        assert!(empty.validate().is_err());
        let over = vec![
            MiningPool { name: "a".into(), hash_share: 0.7, locations: vec![loc(1, "A")] },
            MiningPool { name: "b".into(), hash_share: 0.7, locations: vec![loc(1, "A")] },
        ];
        assert!(validate_pools(&over).is_err());
    }
}
