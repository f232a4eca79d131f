use std::collections::{BTreeMap, HashMap, HashSet};
use std::net::Ipv4Addr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Asn, MiningPool, NetworkSnapshot, NodeId, NodeRecord, OrgAliases};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionShare {
    pub version: String,
    pub share: f64,
}

/// Client version mix: explicit head shares plus a long tail of minor variants
/// that splits the remaining share with a Zipf profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VersionMix {
    pub head: Vec<VersionShare>,
    pub tail_variants: usize,
    pub tail_exponent: f64,
}

impl Default for VersionMix {
    fn default() -> Self {
        Self {
            head: vec![VersionShare { version: "0.16.0".into(), share: 1.0 }],
            tail_variants: 0,
            tail_exponent: 1.0,
        }
    }
}

/// Reported chain heights as `(blocks behind tip, share)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeightMix {
    pub tip: u64,
    pub lags: Vec<(u64, f64)>,
}

impl Default for HeightMix {
    fn default() -> Self {
        Self { tip: 0, lags: vec![(0, 1.0)] }
    }
}

/// Parameters of the synthetic population generator.
///
/// AS sizes follow a truncated Zipf–Mandelbrot law `(rank + rank_offset)^-exponent`,
/// apportioned exactly over `node_count` with at least one node per AS. ASes are
/// grouped into organizations whose target sizes follow `rank^-org_exponent`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TopologyParams {
    pub node_count: usize,
    pub as_count: usize,
    pub concentration_exponent: f64,
    #[serde(default)]
    pub rank_offset: f64,
    /// `None` gives every AS its own organization.
    #[serde(default)]
    pub org_count: Option<usize>,
    #[serde(default = "default_org_exponent")]
    pub org_exponent: f64,
    /// Pool locations are pinned into the generated population.
    #[serde(default)]
    pub pool_spec: Vec<MiningPool<f64>>,
    #[serde(skip)]
    pub aliases: OrgAliases,
    #[serde(default)]
    pub versions: VersionMix,
    #[serde(default)]
    pub heights: HeightMix,
    #[serde(default)]
    pub timestamp: i64,
    pub seed: u64,
}

fn default_org_exponent() -> f64 {
    1.0
}

impl TopologyParams {
    pub fn new(node_count: usize, as_count: usize, concentration_exponent: f64, seed: u64) -> Self {
        Self {
            node_count,
            as_count,
            concentration_exponent,
            rank_offset: 0.0,
            org_count: None,
            org_exponent: default_org_exponent(),
            pool_spec: Vec::new(),
            aliases: OrgAliases::new(),
            versions: VersionMix::default(),
            heights: HeightMix::default(),
            timestamp: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_count < 1 {
            return Err(Error::param("as_count", "must be at least 1"));
        }
        if self.node_count < self.as_count {
            return Err(Error::param(
                "node_count",
                format!("{} is below as_count {}", self.node_count, self.as_count),
            ));
        }
        if !(self.concentration_exponent > 0.0) || !self.concentration_exponent.is_finite() {
            return Err(Error::param("concentration_exponent", "must be positive"));
        }
        if !(self.rank_offset >= 0.0) {
            return Err(Error::param("rank_offset", "must be non-negative"));
        }
        if let Some(orgs) = self.org_count {
            if orgs == 0 || orgs > self.as_count {
                return Err(Error::param("org_count", "must be in 1..=as_count"));
            }
        }
        if !(self.org_exponent >= 0.0) {
            return Err(Error::param("org_exponent", "must be non-negative"));
        }
        super::validate_pools(&self.pool_spec)?;
        let head: f64 = self.versions.head.iter().map(|v| v.share).sum();
        if self.versions.head.iter().any(|v| !(v.share >= 0.0)) || head > 1.0 + 1e-9 {
            return Err(Error::param("versions.head", "shares must be non-negative and sum to at most 1"));
        }
        if self.versions.tail_variants == 0 && (1.0 - head).abs() > 1e-9 {
            return Err(Error::param("versions", "head shares must sum to 1 when there is no tail"));
        }
        if self.heights.lags.is_empty() || self.heights.lags.iter().any(|(lag, s)| !(*s >= 0.0) || *lag > self.heights.tip) {
            return Err(Error::param("heights.lags", "need non-negative shares and lags not exceeding the tip"));
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `total` units over `weights`.
/// Remainder ties go to the lower index.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let raw: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn as_sizes(p: &TopologyParams) -> Vec<usize> {
    let weights: Vec<f64> = (1..=p.as_count)
        .map(|r| (r as f64 + p.rank_offset).powf(-p.concentration_exponent))
        .collect();
    apportion(p.node_count - p.as_count, &weights)
        .into_iter()
        .map(|c| c + 1)
        .collect()
}

/// Greedy grouping: ASes in descending size order go to the organization with
/// the largest remaining deficit against its Zipf target.
fn group_orgs(sizes: &[usize], org_count: usize, exponent: f64) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().sum();
    let weights: Vec<f64> = (1..=org_count).map(|r| (r as f64).powf(-exponent)).collect();
    let wsum: f64 = weights.iter().sum();
    let targets: Vec<f64> = weights.iter().map(|w| w / wsum * total as f64).collect();
    let mut load = vec![0usize; org_count];
    let mut members = vec![Vec::new(); org_count];
    for (rank, size) in sizes.iter().enumerate() {
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (j, t) in targets.iter().enumerate() {
            let d = t - load[j] as f64;
            if d > best_deficit {
                best_deficit = d;
                best = j;
            }
        }
        load[best] += size;
        members[best].push(rank);
    }
    // re-rank by resulting size, stable on first member rank
    members.retain(|m| !m.is_empty());
    members.sort_by_key(|m| std::cmp::Reverse(m.iter().map(|&r| sizes[r]).sum::<usize>()));
    members
}

type OrgLocations = Vec<(String, Vec<(Asn, String)>)>;

/// Distinct (asn, raw org) locations per canonical org, in first-appearance order.
fn pinned_locations(p: &TopologyParams) -> Result<OrgLocations> {
    let mut by_org: OrgLocations = Vec::new();
    let mut seen: HashMap<Asn, String> = HashMap::new();
    for pool in &p.pool_spec {
        for loc in &pool.locations {
            if !loc.asn.is_resolved() {
                return Err(Error::param(format!("pool `{}`", pool.name), "location uses the unresolved AS 0"));
            }
            if let Some(org) = seen.get(&loc.asn) {
                if *org != loc.org {
                    return Err(Error::param(
                        format!("pool `{}`", pool.name),
                        format!("{} listed under both `{}` and `{}`", loc.asn, org, loc.org),
                    ));
                }
                continue;
            }
            seen.insert(loc.asn, loc.org.clone());
            let canon = p.aliases.canonical(&loc.org).to_string();
            match by_org.iter_mut().find(|(c, _)| *c == canon) {
                Some((_, locs)) => locs.push((loc.asn, loc.org.clone())),
                None => by_org.push((canon, vec![(loc.asn, loc.org.clone())])),
            }
        }
    }
    Ok(by_org)
}

fn first_octet_ok(a: u8) -> bool {
    (11..=223).contains(&a) && a != 100 && a != 127 && a != 172 && a != 192 && a != 169
}

/// Generates a reproducible population. Same parameters and seed give an identical snapshot.
pub fn build_synthetic(p: &TopologyParams) -> Result<NetworkSnapshot> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let sizes = as_sizes(p);

    let orgs: Vec<Vec<usize>> = match p.org_count {
        Some(k) => group_orgs(&sizes, k, p.org_exponent),
        None => (0..p.as_count).map(|r| vec![r]).collect(),
    };

    // AS rank -> (asn, raw org name)
    let mut labels: Vec<Option<(Asn, String)>> = vec![None; p.as_count];
    let mut used_org = vec![false; orgs.len()];
    for (canon, locs) in pinned_locations(p)? {
        let whole = (0..orgs.len()).find(|&o| !used_org[o] && orgs[o].len() >= locs.len());
        let targets: Vec<usize> = match whole {
            Some(o) => {
                used_org[o] = true;
                for &rank in &orgs[o][locs.len()..] {
                    labels[rank] = Some((Asn::UNRESOLVED, canon.clone()));
                }
                orgs[o][..locs.len()].to_vec()
            }
            None => {
                let free: Vec<usize> = (0..orgs.len()).filter(|&o| !used_org[o]).take(locs.len()).collect();
                if free.len() < locs.len() {
                    return Err(Error::param("pool_spec", "more pool locations than organizations"));
                }
                free.iter()
                    .map(|&o| {
                        used_org[o] = true;
                        for &rank in &orgs[o][1..] {
                            labels[rank] = Some((Asn::UNRESOLVED, canon.clone()));
                        }
                        orgs[o][0]
                    })
                    .collect()
            }
        };
        for (rank, (asn, raw)) in targets.into_iter().zip(locs) {
            labels[rank] = Some((asn, raw));
        }
    }

    let mut taken: HashSet<u32> = labels.iter().flatten().map(|(a, _)| a.0).filter(|a| *a > 0).collect();
    for (o, members) in orgs.iter().enumerate() {
        let name = format!("Hosting Org {:03}", o + 1);
        for &rank in members {
            let slot = labels[rank].get_or_insert_with(|| (Asn::UNRESOLVED, name.clone()));
            if !slot.0.is_resolved() {
                let asn = loop {
                    let cand = rng.gen_range(1_000..400_000u32);
                    if taken.insert(cand) {
                        break cand;
                    }
                };
                slot.0 = Asn(asn);
            }
        }
    }

    let mut blocks = HashSet::new();
    let mut prefixes = Vec::with_capacity(p.as_count);
    while prefixes.len() < p.as_count {
        let a: u8 = rng.gen();
        let b: u8 = rng.gen();
        if first_octet_ok(a) && blocks.insert((a, b)) {
            prefixes.push((a, b));
        }
    }

    let mut nodes = Vec::with_capacity(p.node_count);
    for (rank, size) in sizes.iter().enumerate() {
        let (asn, org) = labels[rank].clone().expect("every AS labelled");
        let (a, b) = prefixes[rank];
        for k in 0..*size {
            let host = k as u32 + 1;
            nodes.push(NodeRecord {
                node_id: NodeId(0),
                address: Ipv4Addr::new(a, b, (host >> 8) as u8, (host & 0xff) as u8),
                asn,
                org: org.clone(),
                height: 0,
                version: String::new(),
            });
        }
    }
    nodes.shuffle(&mut rng);

    let mut head_weights: Vec<f64> = p.versions.head.iter().map(|v| v.share).collect();
    let head_sum: f64 = head_weights.iter().sum();
    if p.versions.tail_variants > 0 {
        head_weights.push((1.0 - head_sum).max(0.0));
    }
    let head_counts = apportion(p.node_count, &head_weights);
    let mut versions: Vec<String> = Vec::with_capacity(p.node_count);
    for (v, c) in p.versions.head.iter().zip(&head_counts) {
        versions.extend(std::iter::repeat_n(v.version.clone(), *c));
    }
    if p.versions.tail_variants > 0 {
        let tail_total = head_counts[p.versions.head.len()];
        let n = p.versions.tail_variants;
        if tail_total < n {
            return Err(Error::param("versions.tail_variants", "more tail variants than tail nodes"));
        }
        let w: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-p.versions.tail_exponent)).collect();
        for (i, c) in apportion(tail_total - n, &w).into_iter().enumerate() {
            versions.extend(std::iter::repeat_n(tail_version_name(i), c + 1));
        }
    }
    versions.shuffle(&mut rng);

    let lag_weights: Vec<f64> = p.heights.lags.iter().map(|(_, s)| *s).collect();
    let mut heights: Vec<u64> = Vec::with_capacity(p.node_count);
    for ((lag, _), c) in p.heights.lags.iter().zip(apportion(p.node_count, &lag_weights)) {
        heights.extend(std::iter::repeat_n(p.heights.tip - lag, c));
    }
    heights.shuffle(&mut rng);

    for (i, ((node, version), height)) in nodes.iter_mut().zip(versions).zip(heights).enumerate() {
        node.node_id = NodeId(i as u32);
        node.version = version;
        node.height = height;
    }
    Ok(NetworkSnapshot { timestamp: p.timestamp, nodes })
}

/// Deterministic names for long-tail client variants.
fn tail_version_name(i: usize) -> String {
    const BASES: [&str; 8] = [
        "0.13.2", "0.14.1", "0.12.1", "0.15.99-knots", "0.16.0-classic", "1.0.3-unlimited", "0.13.1", "0.11.2",
    ];
    let base = BASES[i % BASES.len()];
    match i / BASES.len() {
        0 => base.to_string(),
        k => format!("{base}.p{k}"),
    }
}

/// `(prefix, asn, org)` rows describing the /16 each generated AS was placed in.
pub fn derive_prefixes(snapshot: &NetworkSnapshot) -> BTreeMap<(u8, u8), (Asn, String)> {
    snapshot
        .nodes
        .iter()
        .map(|n| {
            let o = n.address.octets();
            ((o[0], o[1]), (n.asn, n.org.clone()))
        })
        .collect()
}
