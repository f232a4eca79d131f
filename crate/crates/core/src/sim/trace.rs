use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use super::chain::{ForkId, ForkOrigin};
use super::lag::{LagBucket, LagHistogram};
use crate::adversary::ScenarioOutcome;
use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::topology::{NetworkSnapshot, NodeId};

/// One line of the trace. Serialized as `{"t":…,"kind":…,…}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    /// Lag census of online nodes against the highest online view.
    Sample {
        t: f64,
        tip: u64,
        online: usize,
        counts: [usize; 5],
        b0: f64,
        b1: f64,
        b2: f64,
        b3: f64,
        b4: f64,
        counterfeit: usize,
    },
    BlockMined { t: f64, pool: usize, fork: ForkId, height: u64 },
    Fork { t: f64, fork: ForkId, parent: ForkId, fork_point: u64, origin: ForkOrigin },
    /// A node switched branches and abandoned `depth` blocks.
    Reorg { t: f64, node: NodeId, from_fork: ForkId, to_fork: ForkId, depth: u64 },
    AttackStart { t: f64, scenario: usize, label: String },
    AttackEnd { t: f64, scenario: usize, label: String },
    /// A severed side rejoined: every online node on the losing side moved to the winner.
    Heal { t: f64, scenario: usize, winner_fork: ForkId, loser_fork: ForkId, reorg_depth: u64, switched: usize },
    Subversion { t: f64, scenario: usize, node: NodeId, initial_bucket: LagBucket, lag_at_delivery: u64 },
    BlockawareAlert { t: f64, node: NodeId, est_lag: u64 },
    Outcome { t: f64, outcome: ScenarioOutcome },
}

impl TraceRecord {
    pub fn t(&self) -> f64 {
        match self {
            TraceRecord::Sample { t, .. }
            | TraceRecord::BlockMined { t, .. }
            | TraceRecord::Fork { t, .. }
            | TraceRecord::Reorg { t, .. }
            | TraceRecord::AttackStart { t, .. }
            | TraceRecord::AttackEnd { t, .. }
            | TraceRecord::Heal { t, .. }
            | TraceRecord::Subversion { t, .. }
            | TraceRecord::BlockawareAlert { t, .. }
            | TraceRecord::Outcome { t, .. } => *t,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TraceRecord::Sample { .. } => "sample",
            TraceRecord::BlockMined { .. } => "block_mined",
            TraceRecord::Fork { .. } => "fork",
            TraceRecord::Reorg { .. } => "reorg",
            TraceRecord::AttackStart { .. } => "attack_start",
            TraceRecord::AttackEnd { .. } => "attack_end",
            TraceRecord::Heal { .. } => "heal",
            TraceRecord::Subversion { .. } => "subversion",
            TraceRecord::BlockawareAlert { .. } => "blockaware_alert",
            TraceRecord::Outcome { .. } => "outcome",
        }
    }

    pub(crate) fn sample(t: f64, tip: u64, counts: [usize; 5], counterfeit: usize) -> Self {
        let online: usize = counts.iter().sum();
        let f = |i: usize| if online == 0 { 0.0 } else { counts[i] as f64 / online as f64 };
        TraceRecord::Sample {
            t,
            tip,
            online,
            counts,
            b0: f(0),
            b1: f(1),
            b2: f(2),
            b3: f(3),
            b4: f(4),
            counterfeit,
        }
    }
}

/// A sample row with raw counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRow {
    pub t: f64,
    pub tip: u64,
    pub counts: [usize; 5],
    pub counterfeit: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BlockAwareSummary {
    pub alerts: usize,
    pub nodes_alerted: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TraceLog {
    pub records: Vec<TraceRecord>,
    /// Census of online nodes at each sample, when capture is enabled.
    pub snapshots: Vec<NetworkSnapshot>,
    pub outcomes: Vec<ScenarioOutcome>,
}

impl TraceLog {
    pub fn push(&mut self, record: TraceRecord) {
        if let TraceRecord::Outcome { outcome, .. } = &record {
            self.outcomes.push(outcome.clone());
        }
        self.records.push(record);
    }

    pub fn samples(&self) -> impl Iterator<Item = SampleRow> + '_ {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Sample { t, tip, counts, counterfeit, .. } => Some(SampleRow {
                t: *t,
                tip: *tip,
                counts: *counts,
                counterfeit: *counterfeit,
            }),
            _ => None,
        })
    }

    /// Histograms of all samples with at least one online node.
    pub fn lag_histograms(&self) -> Vec<(f64, LagHistogram)> {
        self.samples()
            .filter_map(|s| LagHistogram::from_counts(s.counts, s.counterfeit).ok().map(|h| (s.t, h)))
            .collect()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.records.iter().filter(|r| r.kind() == kind).count()
    }

    pub fn blockaware_summary(&self) -> BlockAwareSummary {
        let mut nodes = BTreeSet::new();
        let mut alerts = 0;
        for r in &self.records {
            if let TraceRecord::BlockawareAlert { node, .. } = r {
                alerts += 1;
                nodes.insert(*node);
            }
        }
        BlockAwareSummary { alerts, nodes_alerted: nodes.len() }
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&jsonfmt::to_line(r, &["t", "kind"])?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_leads_with_time_and_kind() {
        let mut log = TraceLog::default();
        log.push(TraceRecord::sample(60.0, 7, [1, 1, 0, 0, 0], 0));
        log.push(TraceRecord::BlockawareAlert { t: 120.0, node: NodeId(3), est_lag: 2 });
        let text = log.to_jsonl().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with(r#"{"t":60.000000,"kind":"sample","b0":0.500000"#), "{}", lines[0]);
        assert_eq!(lines[1], r#"{"t":120.000000,"kind":"blockaware_alert","est_lag":2,"node":3}"#);
        assert_eq!(log.blockaware_summary(), BlockAwareSummary { alerts: 1, nodes_alerted: 1 });
    }

    #[test]
    fn empty_samples_are_skipped_by_histograms() {
        let mut log = TraceLog::default();
        log.push(TraceRecord::sample(0.0, 0, [0; 5], 0));
        log.push(TraceRecord::sample(60.0, 1, [2, 0, 0, 0, 0], 0));
        assert_eq!(log.lag_histograms().len(), 1);
        assert_eq!(log.samples().count(), 2);
    }
}
