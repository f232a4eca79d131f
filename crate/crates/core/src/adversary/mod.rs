//! Spatial, temporal and logical partitioning attacks: scenario declarations,
//! the decision rules the engine applies while a scenario is active, outcome
//! records and the cost/value arithmetic.

mod economics;
mod runs;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::LagBucket;
use crate::topology::{
    attribute_hash_rate_as, attribute_hash_rate_org, Asn, AttributionPolicy, MiningPool, NodeId, OrgAliases,
};

pub use economics::{value_at_risk, EconomicParams, ValueAtRisk};
pub use runs::{logical_release, spatial_hijack, temporal_feed};

/// How links across a hijacked boundary are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialMode {
    /// Traffic across the boundary is dropped.
    #[default]
    Sever,
    /// Traffic is intercepted and forwarded after this many extra seconds.
    Delay(f64),
}

/// Adoption of a malicious client release.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AdoptionModel {
    /// Every node adopts independently with probability `p`.
    FixedShare { p: f64 },
    /// Nodes on the current reference version adopt with `p_base`; nodes that
    /// already run something else are lured by the feature set and adopt with
    /// `min(1, p_base * (1 + boost))`.
    PreferentialByFeature { p_base: f64, boost: f64 },
    /// Only nodes not on the current version are susceptible; each adopts with `p`.
    NonCurrentOnly { p: f64 },
}

impl AdoptionModel {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} not in [0,1]")))
            }
        };
        match *self {
            AdoptionModel::FixedShare { p } | AdoptionModel::NonCurrentOnly { p } => check("p", p),
            AdoptionModel::PreferentialByFeature { p_base, boost } => {
                check("p_base", p_base)?;
                if !(boost >= 0.0) {
                    return Err(Error::param("boost", "must be non-negative"));
                }
                Ok(())
            }
        }
    }

    /// Adoption probability for a node, given whether it runs the current version.
    pub fn probability(&self, on_current: bool) -> f64 {
        match *self {
            AdoptionModel::FixedShare { p } => p,
            AdoptionModel::PreferentialByFeature { p_base, boost } => {
                if on_current {
                    p_base
                } else {
                    (p_base * (1.0 + boost)).min(1.0)
                }
            }
            AdoptionModel::NonCurrentOnly { p } => {
                if on_current {
                    0.0
                } else {
                    p
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    Spatial {
        as_set: Vec<Asn>,
        start: f64,
        duration: f64,
        #[serde(default)]
        mode: SpatialMode,
    },
    Temporal {
        /// Nodes in this bucket or a deeper one at attack start become victims.
        victim_filter: LagBucket,
        adversary_hash_share: f64,
        start: f64,
        duration: f64,
    },
    Logical {
        malicious_version: String,
        adoption: AdoptionModel,
        start: f64,
        /// Reference version; defaults to the most common version at release time.
        #[serde(default)]
        current_version: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub label: String,
    #[serde(flatten)]
    pub kind: AttackKind,
}

impl AttackScenario {
    pub fn start(&self) -> f64 {
        match &self.kind {
            AttackKind::Spatial { start, .. } | AttackKind::Temporal { start, .. } | AttackKind::Logical { start, .. } => *start,
        }
    }

    /// End of the attack window; logical releases never end.
    pub fn end(&self) -> Option<f64> {
        match &self.kind {
            AttackKind::Spatial { start, duration, .. } | AttackKind::Temporal { start, duration, .. } => {
                Some(start + duration)
            }
            AttackKind::Logical { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("scenario `{}`.{f}", self.label);
        if !(self.start() >= 0.0) || !self.start().is_finite() {
            return Err(Error::param(field("start"), "must be >= 0"));
        }
        match &self.kind {
            AttackKind::Spatial { as_set, duration, mode, .. } => {
                if as_set.is_empty() {
                    return Err(Error::Config(format!("scenario `{}`: empty as_set", self.label)));
                }
                if !(*duration > 0.0) {
                    return Err(Error::param(field("duration"), "must be > 0"));
                }
                if let SpatialMode::Delay(d) = mode {
                    if !(*d >= 0.0) {
                        return Err(Error::param(field("mode"), "delay must be >= 0"));
                    }
                }
            }
            AttackKind::Temporal { adversary_hash_share, duration, .. } => {
                if !(0.0..1.0).contains(adversary_hash_share) {
                    return Err(Error::param(field("adversary_hash_share"), "must be in [0,1)"));
                }
                if !(*duration > 0.0) {
                    return Err(Error::param(field("duration"), "must be > 0"));
                }
            }
            AttackKind::Logical { adoption, .. } => adoption.validate()?,
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PartitionOutcome {
    pub isolated_node_fraction: f64,
    pub isolated_hash_fraction: f64,
    pub fork_formed: bool,
    pub reorg_depth_on_heal: u64,
    pub blocks_inside: u64,
    pub blocks_outside: u64,
    /// Nodes inside the hijacked set when the window opened.
    pub isolated_nodes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TemporalOutcome {
    pub victims_by_bucket: [usize; 5],
    pub subverted_by_bucket: [usize; 5],
    pub subverted: usize,
    pub victims: usize,
    /// Counterfeits offered to victims that were level with the tip; always rejected.
    pub rejected_at_tip: usize,
    pub adversary_blocks: u64,
}

impl TemporalOutcome {
    pub fn subverted_fraction(&self, b: LagBucket) -> Option<f64> {
        let v = self.victims_by_bucket[b.index()];
        (v > 0).then(|| self.subverted_by_bucket[b.index()] as f64 / v as f64)
    }

    pub fn merge(&mut self, other: &TemporalOutcome) {
        for i in 0..5 {
            self.victims_by_bucket[i] += other.victims_by_bucket[i];
            self.subverted_by_bucket[i] += other.subverted_by_bucket[i];
        }
        self.subverted += other.subverted;
        self.victims += other.victims;
        self.rejected_at_tip += other.rejected_at_tip;
        self.adversary_blocks += other.adversary_blocks;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LogicalOutcome {
    pub compromised_fraction: f64,
    pub susceptible_fraction: f64,
    pub compromised_count: usize,
    #[serde(skip)]
    pub compromised: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioOutcome {
    Spatial { label: String, as_count: usize, outcome: PartitionOutcome },
    Temporal { label: String, outcome: TemporalOutcome },
    Logical { label: String, outcome: LogicalOutcome },
}

impl ScenarioOutcome {
    pub fn label(&self) -> &str {
        match self {
            ScenarioOutcome::Spatial { label, .. }
            | ScenarioOutcome::Temporal { label, .. }
            | ScenarioOutcome::Logical { label, .. } => label,
        }
    }

    /// Nodes directly affected: isolated, subverted or compromised.
    pub fn affected_nodes(&self) -> usize {
        match self {
            ScenarioOutcome::Spatial { outcome, .. } => outcome.isolated_nodes,
            ScenarioOutcome::Temporal { outcome, .. } => outcome.subverted,
            ScenarioOutcome::Logical { outcome, .. } => outcome.compromised_count,
        }
    }
}

/// Hash share visible to (or controlled from) a set of ASes.
pub fn isolated_hash_rate<T: Scalar>(
    pools: &[MiningPool<T>],
    as_set: &BTreeSet<Asn>,
    policy: AttributionPolicy,
) -> T {
    match policy {
        // per-AS credits would double count a pool seen from several hijacked ASes
        AttributionPolicy::ViewUnion => pools
            .iter()
            .filter(|p| p.locations.iter().any(|l| as_set.contains(&l.asn)))
            .map(|p| p.hash_share)
            .sum(),
        _ => attribute_hash_rate_as(pools, policy)
            .into_iter()
            .filter(|(a, _)| as_set.contains(a))
            .map(|(_, s)| s)
            .sum(),
    }
}

/// Organization-level variant of [`isolated_hash_rate`].
pub fn isolated_hash_rate_org<T: Scalar>(
    pools: &[MiningPool<T>],
    orgs: &BTreeSet<String>,
    policy: AttributionPolicy,
    aliases: &OrgAliases,
) -> T {
    match policy {
        AttributionPolicy::ViewUnion => pools
            .iter()
            .filter(|p| p.locations.iter().any(|l| orgs.contains(aliases.canonical(&l.org))))
            .map(|p| p.hash_share)
            .sum(),
        _ => attribute_hash_rate_org(pools, policy, aliases)
            .into_iter()
            .filter(|(o, _)| orgs.contains(o))
            .map(|(_, s)| s)
            .sum(),
    }
}

/// Height of the counterfeit block the adversary can offer a victim. Its
/// private fork starts at the victim's height but, with minority hash power,
/// cannot run ahead of the honest tip.
pub fn counterfeit_height(victim_height: u64, honest_tip: u64) -> u64 {
    (victim_height + 1).min(honest_tip.max(victim_height))
}

/// Most common version, ties broken by the lexicographically smaller string.
pub fn most_common_version<'a>(versions: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in versions {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(v, _)| v.to_string())
}

/// Draws adopters of a malicious release: one independent Bernoulli trial per
/// node, in node order. Returns adopter indices and the susceptible count.
pub fn sample_adoption<R: Rng + ?Sized>(
    versions: &[&str],
    current: &str,
    model: &AdoptionModel,
    rng: &mut R,
) -> Result<(Vec<usize>, usize)> {
    model.validate()?;
    let mut adopters = Vec::new();
    let mut susceptible = 0;
    for (i, v) in versions.iter().enumerate() {
        let p = model.probability(*v == current);
        if p > 0.0 {
            susceptible += 1;
        }
        // one draw per node regardless of p keeps streams aligned across models
        let u: f64 = rng.gen();
        if u < p {
            adopters.push(i);
        }
    }
    Ok((adopters, susceptible))
}
