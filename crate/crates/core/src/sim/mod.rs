//! Discrete-event simulation of block mining, gossip, churn and per-node
//! chain views.
//!
//! Propagation is a fixed per-hop delay set by the receiving node: fast
//! nodes share one value, slow nodes may each draw their own. Churn is an independent on/off Poisson process per node.
//! A node coming back online ignores gossip while it resyncs: after
//! `resync_delay` it downloads the best reachable chain one block every
//! `resync_per_block` seconds, and rejoins gossip once level with it.

mod chain;
mod engine;
mod lag;
mod mining;
mod network;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::AttributionPolicy;

pub use chain::{apply_block, ChainView, ForkId, ForkOrigin, ForkTree, Verdict, HONEST_FORK};
pub use engine::{run, SimEvent, SimEventKind, Simulation};
pub use lag::{lag_distribution, lag_of, LagBucket, LagHistogram};
pub use mining::{MinedBlock, Miner};
pub use network::{build_world, BandwidthClass, SimNode, World};
pub use trace::{BlockAwareSummary, SampleRow, TraceLog, TraceRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub expected_block_interval: f64,
    /// Per-hop delivery delay into a fast node, seconds.
    pub delay_fast: f64,
    /// Per-hop delivery delay into a slow node, seconds.
    pub delay_slow: f64,
    pub slow_fraction: f64,
    /// Slow nodes draw their delay uniformly from `delay_slow * (1 ± spread)`.
    pub slow_delay_spread: f64,
    pub outbound_peers: usize,
    /// Offline transitions per online node-hour.
    pub churn_rate: f64,
    pub mean_offline: f64,
    /// Seconds between rejoining and the first downloaded block.
    pub resync_delay: f64,
    /// Seconds per downloaded block while resyncing; zero jumps straight to the best chain.
    pub resync_per_block: f64,
    pub horizon: f64,
    pub sample_interval: f64,
    /// Samples before this time are excluded from steady-state averages.
    pub warmup: f64,
    /// Unix time of simulated t = 0, used for exported snapshots.
    pub start_timestamp: i64,
    /// Keep a census snapshot of online nodes at every sample.
    pub capture_snapshots: bool,
    /// Policy used when reporting the hash share cut off by a spatial scenario.
    pub attribution: AttributionPolicy,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            expected_block_interval: 600.0,
            delay_fast: 2.0,
            delay_slow: 30.0,
            slow_fraction: 0.0,
            slow_delay_spread: 0.0,
            outbound_peers: 8,
            churn_rate: 0.0,
            mean_offline: 3600.0,
            resync_delay: 60.0,
            resync_per_block: 0.0,
            horizon: 86_400.0,
            sample_interval: 600.0,
            warmup: 0.0,
            start_timestamp: 0,
            capture_snapshots: false,
            attribution: AttributionPolicy::ViewUnion,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} must be positive")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} must be non-negative")))
            }
        };
        positive("expected_block_interval", self.expected_block_interval)?;
        non_negative("delay_fast", self.delay_fast)?;
        non_negative("delay_slow", self.delay_slow)?;
        if self.delay_slow < self.delay_fast {
            return Err(Error::param("delay_slow", "must be >= delay_fast"));
        }
        if !(0.0..=1.0).contains(&self.slow_fraction) {
            return Err(Error::param("slow_fraction", "must be in [0,1]"));
        }
        if !(0.0..1.0).contains(&self.slow_delay_spread) {
            return Err(Error::param("slow_delay_spread", "must be in [0,1)"));
        }
        non_negative("churn_rate", self.churn_rate)?;
        positive("mean_offline", self.mean_offline)?;
        non_negative("resync_delay", self.resync_delay)?;
        non_negative("resync_per_block", self.resync_per_block)?;
        non_negative("horizon", self.horizon)?;
        if self.sample_interval < 1.0 || !self.sample_interval.is_finite() {
            return Err(Error::param("sample_interval", "must be at least one second"));
        }
        non_negative("warmup", self.warmup)?;
        Ok(())
    }
}
