use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::chain::{apply_block, ChainView, ForkOrigin, ForkTree, Verdict};
use super::lag::{lag_of, LagBucket};
use super::mining::Miner;
use super::network::World;
use super::trace::{TraceLog, TraceRecord};
use super::SimParams;
use crate::adversary::{
    counterfeit_height, isolated_hash_rate, most_common_version, sample_adoption, AttackKind, AttackScenario,
    LogicalOutcome, PartitionOutcome, ScenarioOutcome, SpatialMode, TemporalOutcome,
};
use crate::blockaware::{check, BlockAwareConfig, Check, NodeClock};
use crate::error::{Error, Result};
use crate::topology::{Asn, NetworkSnapshot, NodeRecord};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimEventKind {
    BlockMined { pool: usize },
    BlockDelivered { block: ChainView, from: u32, node: u32 },
    ChurnOffline { node: u32 },
    ChurnOnline { node: u32 },
    /// A rejoined node downloads the next block of the best reachable chain,
    /// or resumes gossip once it has caught up.
    SyncStep { node: u32 },
    AttackStart { scenario: usize },
    AttackEnd { scenario: usize },
    /// The temporal adversary found a block and offers counterfeits to its victims.
    CounterfeitRelease { scenario: usize },
    Sample { index: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct SimEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: SimEventKind,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SimEvent {}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed so that BinaryHeap pops the earliest event first
impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Clone, Debug)]
enum ScenarioState {
    Pending,
    Spatial {
        inside: Vec<bool>,
        mode: SpatialMode,
        active: bool,
        outcome: PartitionOutcome,
    },
    Temporal {
        /// Initial bucket of each victim; `None` for non-victims.
        victims: Vec<Option<LagBucket>>,
        subverted: Vec<bool>,
        gap: Option<Exp<f64>>,
        active: bool,
        outcome: TemporalOutcome,
    },
    Done,
}

/// One simulation run. Single-threaded and fully determined by its inputs.
pub struct Simulation<'s> {
    world: World,
    params: SimParams,
    scenarios: &'s [AttackScenario],
    blockaware: Option<BlockAwareConfig>,
    queue: BinaryHeap<SimEvent>,
    seq: u64,
    now: f64,
    forks: ForkTree,
    miner: Option<Miner>,
    mining_rng: ChaCha8Rng,
    churn_rng: ChaCha8Rng,
    adversary_rng: ChaCha8Rng,
    churn_gap: Option<Exp<f64>>,
    offline_gap: Exp<f64>,
    syncing: Vec<bool>,
    last_accept: Vec<f64>,
    alerting: Vec<bool>,
    gateway_nodes: Vec<u32>,
    states: Vec<ScenarioState>,
    trace: TraceLog,
}

/// Runs `scenarios` over `world` to the horizon and returns the trace.
pub fn run(
    world: World,
    params: &SimParams,
    scenarios: &[AttackScenario],
    blockaware: Option<&BlockAwareConfig>,
) -> Result<TraceLog> {
    let mut sim = Simulation::new(world, params, scenarios, blockaware)?;
    sim.run_to_horizon();
    Ok(sim.finish().1)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<'s> Simulation<'s> {
    pub fn new(
        world: World,
        params: &SimParams,
        scenarios: &'s [AttackScenario],
        blockaware: Option<&BlockAwareConfig>,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(cfg) = blockaware {
            cfg.validate()?;
        }
        for s in scenarios {
            s.validate()?;
            if s.start() > params.horizon || s.end().is_some_and(|e| e > params.horizon) {
                return Err(Error::Config(format!("scenario `{}` extends past the horizon", s.label)));
            }
            if let AttackKind::Spatial { as_set, .. } = &s.kind {
                if let Some(a) = as_set.iter().find(|a| !world.known_asns.contains(a)) {
                    return Err(Error::Config(format!("scenario `{}`: unknown AS {a}", s.label)));
                }
            }
        }
        let miner = if world.pools.is_empty() {
            None
        } else {
            let shares: Vec<f64> = world.pools.iter().map(|p| p.hash_share).collect();
            Some(Miner::new(&shares, params.expected_block_interval)?)
        };
        let n = world.nodes.len();
        let mut gateway_nodes: Vec<u32> = world.gateways.iter().flatten().copied().collect();
        gateway_nodes.sort_unstable();
        gateway_nodes.dedup();
        let mut sim = Simulation {
            forks: ForkTree::new(world.genesis_height),
            params: params.clone(),
            scenarios,
            blockaware: blockaware.copied(),
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            miner,
            mining_rng: stream(params.seed, 2),
            churn_rng: stream(params.seed, 3),
            adversary_rng: stream(params.seed, 4),
            churn_gap: (params.churn_rate > 0.0).then(|| Exp::new(params.churn_rate / 3600.0).expect("positive rate")),
            offline_gap: Exp::new(1.0 / params.mean_offline).expect("positive mean"),
            syncing: vec![false; n],
            last_accept: vec![0.0; n],
            alerting: vec![false; n],
            gateway_nodes,
            states: vec![ScenarioState::Pending; scenarios.len()],
            trace: TraceLog::default(),
            world,
        };
        sim.schedule_initial();
        Ok(sim)
    }

    fn schedule(&mut self, time: f64, kind: SimEventKind) {
        if time <= self.params.horizon {
            self.queue.push(SimEvent { time, seq: self.seq, kind });
            self.seq += 1;
        }
    }

    fn schedule_initial(&mut self) {
        self.schedule(0.0, SimEventKind::Sample { index: 0 });
        for (i, s) in self.scenarios.iter().enumerate() {
            self.schedule(s.start(), SimEventKind::AttackStart { scenario: i });
            if let Some(end) = s.end() {
                self.schedule(end, SimEventKind::AttackEnd { scenario: i });
            }
        }
        self.schedule_mining(0.0);
        if self.churn_gap.is_some() {
            for i in 0..self.world.nodes.len() {
                if !self.world.nodes[i].gateway {
                    self.schedule_offline(i);
                }
            }
        }
    }

    fn schedule_mining(&mut self, now: f64) {
        if let Some(miner) = &self.miner {
            let next = miner.mine_next(now, &mut self.mining_rng);
            self.schedule(next.time, SimEventKind::BlockMined { pool: next.pool });
        }
    }

    fn schedule_offline(&mut self, node: usize) {
        if let Some(gap) = self.churn_gap {
            let t = self.now + gap.sample(&mut self.churn_rng);
            self.schedule(t, SimEventKind::ChurnOffline { node: node as u32 });
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn forks(&self) -> &ForkTree {
        &self.forks
    }

    /// Records emitted so far.
    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    pub fn is_syncing(&self, node: usize) -> bool {
        self.syncing[node]
    }

    /// Processes the next event if it falls within the horizon.
    pub fn step(&mut self) -> Option<SimEvent> {
        let ev = self.queue.pop()?;
        self.now = ev.time;
        self.handle(ev.kind);
        Some(ev)
    }

    pub fn run_to_horizon(&mut self) {
        while self.step().is_some() {}
        self.now = self.params.horizon;
    }

    pub fn finish(self) -> (World, TraceLog) {
        (self.world, self.trace)
    }

    fn handle(&mut self, kind: SimEventKind) {
        match kind {
            SimEventKind::BlockMined { pool } => self.on_mined(pool),
            SimEventKind::BlockDelivered { block, from, node } => {
                let i = node as usize;
                if self.world.nodes[i].online && !self.syncing[i] && !self.severed(from as usize, i) {
                    self.accept(i, block, true);
                }
            }
            SimEventKind::ChurnOffline { node } => {
                let i = node as usize;
                self.world.nodes[i].online = false;
                self.syncing[i] = false;
                self.alerting[i] = false;
                let back = self.now + self.offline_gap.sample(&mut self.churn_rng);
                self.schedule(back, SimEventKind::ChurnOnline { node });
            }
            SimEventKind::ChurnOnline { node } => {
                let i = node as usize;
                self.world.nodes[i].online = true;
                self.syncing[i] = true;
                self.schedule(self.now + self.params.resync_delay, SimEventKind::SyncStep { node });
            }
            SimEventKind::SyncStep { node } => self.on_sync_step(node as usize),
            SimEventKind::AttackStart { scenario } => self.on_attack_start(scenario),
            SimEventKind::AttackEnd { scenario } => self.on_attack_end(scenario),
            SimEventKind::CounterfeitRelease { scenario } => self.on_counterfeit(scenario),
            SimEventKind::Sample { index } => {
                self.on_sample();
                let next = (index + 1) as f64 * self.params.sample_interval;
                self.schedule(next, SimEventKind::Sample { index: index + 1 });
            }
        }
    }

    /// Links cut by an active severing scenario, in either direction.
    fn severed(&self, a: usize, b: usize) -> bool {
        self.states.iter().any(|s| match s {
            ScenarioState::Spatial { inside, mode: SpatialMode::Sever, active: true, .. } => inside[a] != inside[b],
            _ => false,
        })
    }

    fn extra_delay(&self, a: usize, b: usize) -> f64 {
        self.states
            .iter()
            .map(|s| match s {
                ScenarioState::Spatial { inside, mode: SpatialMode::Delay(d), active: true, .. } if inside[a] != inside[b] => *d,
                _ => 0.0,
            })
            .sum()
    }

    fn tip(&self) -> u64 {
        self.world.nodes.iter().filter(|n| n.online).map(|n| n.view.height).max().unwrap_or(0)
    }

    /// Highest view held by a gateway the node can reach; ties go to the lower node index.
    fn resync_target(&self, i: usize) -> Option<ChainView> {
        let mut best: Option<ChainView> = None;
        for &g in &self.gateway_nodes {
            let g = g as usize;
            if !self.world.nodes[g].online || self.severed(g, i) {
                continue;
            }
            let v = self.world.nodes[g].view;
            if best.is_none_or(|b| v.height > b.height) {
                best = Some(v);
            }
        }
        best
    }

    fn on_sync_step(&mut self, i: usize) {
        let h = self.world.nodes[i].view.height;
        match self.resync_target(i) {
            Some(best) if best.height > h => {
                if self.params.resync_per_block == 0.0 {
                    self.accept(i, best, false);
                } else {
                    let next = self.forks.ancestor_at(&best, h + 1);
                    self.accept(i, next, false);
                    let t = self.now + self.params.resync_per_block;
                    self.schedule(t, SimEventKind::SyncStep { node: i as u32 });
                    return;
                }
            }
            _ => {}
        }
        self.syncing[i] = false;
        self.schedule_offline(i);
    }

    /// Applies a block to a node, tracing any branch switch, and relays it on acceptance.
    fn accept(&mut self, i: usize, block: ChainView, relay: bool) -> bool {
        let old = self.world.nodes[i].view;
        if apply_block(&mut self.world.nodes[i].view, block) == Verdict::Reject {
            return false;
        }
        self.last_accept[i] = self.now;
        if old.fork_id != block.fork_id {
            let depth = self.forks.reorg_depth(&old, &block);
            if depth > 0 {
                self.trace.push(TraceRecord::Reorg {
                    t: self.now,
                    node: self.world.nodes[i].node_id,
                    from_fork: old.fork_id,
                    to_fork: block.fork_id,
                    depth,
                });
            }
        }
        if relay {
            self.relay(i, block);
        }
        true
    }

    fn relay(&mut self, i: usize, block: ChainView) {
        for k in 0..self.world.nodes[i].peers.len() {
            let p = self.world.nodes[i].peers[k] as usize;
            let peer = &self.world.nodes[p];
            // heights never decrease, so a peer already this high would reject it anyway
            if !peer.online || peer.view.height >= block.height || self.severed(i, p) {
                continue;
            }
            let delay = peer.delay + self.extra_delay(i, p);
            self.schedule(
                self.now + delay,
                SimEventKind::BlockDelivered { block, from: i as u32, node: p as u32 },
            );
        }
    }

    fn on_mined(&mut self, pool: usize) {
        let g = self.world.gateways[pool][0] as usize;
        let mut origin = ForkOrigin::Honest;
        for (s, state) in self.states.iter_mut().enumerate() {
            if let ScenarioState::Spatial { inside, mode, active: true, outcome } = state {
                if inside[g] {
                    outcome.blocks_inside += 1;
                    if *mode == SpatialMode::Sever && origin == ForkOrigin::Honest {
                        origin = ForkOrigin::Partition { scenario: s };
                    }
                } else {
                    outcome.blocks_outside += 1;
                }
            }
        }
        let parent = self.world.nodes[g].view;
        let (block, branched) = self.forks.extend(parent, origin);
        if branched {
            self.trace.push(TraceRecord::Fork {
                t: self.now,
                fork: block.fork_id,
                parent: parent.fork_id,
                fork_point: block.fork_point,
                origin,
            });
        }
        self.trace.push(TraceRecord::BlockMined { t: self.now, pool, fork: block.fork_id, height: block.height });
        self.accept(g, block, true);
        self.schedule_mining(self.now);
    }

    fn on_sample(&mut self) {
        let tip = self.tip();
        let mut counts = [0usize; 5];
        let mut counterfeit = 0;
        for n in self.world.nodes.iter().filter(|n| n.online) {
            counts[lag_of(n.view.height, tip).index()] += 1;
            counterfeit += self.forks.is_counterfeit(&n.view) as usize;
        }
        self.trace.push(TraceRecord::sample(self.now, tip, counts, counterfeit));

        if let Some(cfg) = self.blockaware {
            for i in 0..self.world.nodes.len() {
                let n = &self.world.nodes[i];
                if !n.online {
                    continue;
                }
                let clock = NodeClock { last_sync_height: n.view.height, last_sync_time: self.last_accept[i], now: self.now };
                match check(n.view.height, &clock, &cfg) {
                    Check::Alert { estimated_lag } => {
                        if !self.alerting[i] {
                            self.alerting[i] = true;
                            self.trace.push(TraceRecord::BlockawareAlert { t: self.now, node: n.node_id, est_lag: estimated_lag });
                        }
                    }
                    Check::Ok => self.alerting[i] = false,
                }
            }
        }

        if self.params.capture_snapshots {
            let nodes = self
                .world
                .nodes
                .iter()
                .filter(|n| n.online)
                .map(|n| NodeRecord {
                    node_id: n.node_id,
                    address: n.address,
                    asn: n.asn,
                    org: n.org.clone(),
                    height: n.view.height,
                    version: n.version.clone(),
                })
                .collect();
            self.trace.snapshots.push(NetworkSnapshot {
                timestamp: self.params.start_timestamp + self.now.round() as i64,
                nodes,
            });
        }
    }

    fn on_attack_start(&mut self, s: usize) {
        let scenarios = self.scenarios;
        let scenario = &scenarios[s];
        self.trace.push(TraceRecord::AttackStart { t: self.now, scenario: s, label: scenario.label.clone() });
        match &scenario.kind {
            AttackKind::Spatial { as_set, mode, .. } => {
                let set: BTreeSet<Asn> = as_set.iter().copied().collect();
                let inside: Vec<bool> = self.world.nodes.iter().map(|n| set.contains(&n.asn)).collect();
                let online = self.world.nodes.iter().filter(|n| n.online).count();
                let isolated = self.world.nodes.iter().zip(&inside).filter(|(n, ins)| n.online && **ins).count();
                let outcome = PartitionOutcome {
                    isolated_node_fraction: if online == 0 { 0.0 } else { isolated as f64 / online as f64 },
                    isolated_hash_fraction: isolated_hash_rate(&self.world.pools, &set, self.params.attribution),
                    isolated_nodes: isolated,
                    ..PartitionOutcome::default()
                };
                self.states[s] = ScenarioState::Spatial { inside, mode: *mode, active: true, outcome };
            }
            AttackKind::Temporal { victim_filter, adversary_hash_share, .. } => {
                let tip = self.tip();
                let mut outcome = TemporalOutcome::default();
                let victims: Vec<Option<LagBucket>> = self
                    .world
                    .nodes
                    .iter()
                    .map(|n| {
                        let b = lag_of(n.view.height, tip);
                        (n.online && !n.gateway && b >= *victim_filter).then_some(b)
                    })
                    .collect();
                for b in victims.iter().flatten() {
                    outcome.victims_by_bucket[b.index()] += 1;
                    outcome.victims += 1;
                }
                let gap = (*adversary_hash_share > 0.0)
                    .then(|| Exp::new(adversary_hash_share / self.params.expected_block_interval).expect("positive rate"));
                let n = victims.len();
                self.states[s] = ScenarioState::Temporal { victims, subverted: vec![false; n], gap, active: true, outcome };
                self.schedule_counterfeit(s);
            }
            AttackKind::Logical { malicious_version, adoption, current_version, .. } => {
                let current = current_version
                    .clone()
                    .or_else(|| most_common_version(self.world.nodes.iter().map(|n| n.version.as_str())))
                    .unwrap_or_default();
                let versions: Vec<&str> = self.world.nodes.iter().map(|n| n.version.as_str()).collect();
                let total = versions.len();
                let (adopters, susceptible) =
                    sample_adoption(&versions, &current, adoption, &mut self.adversary_rng).expect("validated");
                let frac = |k: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };
                let outcome = LogicalOutcome {
                    compromised_fraction: frac(adopters.len()),
                    susceptible_fraction: frac(susceptible),
                    compromised_count: adopters.len(),
                    compromised: adopters.iter().map(|i| self.world.nodes[*i].node_id).collect(),
                };
                for i in adopters {
                    self.world.nodes[i].version = malicious_version.clone();
                }
                self.states[s] = ScenarioState::Done;
                let label = scenario.label.clone();
                self.trace.push(TraceRecord::Outcome { t: self.now, outcome: ScenarioOutcome::Logical { label, outcome } });
            }
        }
    }

    fn schedule_counterfeit(&mut self, s: usize) {
        if let ScenarioState::Temporal { gap: Some(gap), .. } = &self.states[s] {
            let t = self.now + gap.sample(&mut self.adversary_rng);
            self.schedule(t, SimEventKind::CounterfeitRelease { scenario: s });
        }
    }

    fn on_counterfeit(&mut self, s: usize) {
        let tip = self.tip();
        let ScenarioState::Temporal { victims, subverted, active: true, outcome, .. } = &mut self.states[s] else {
            return;
        };
        outcome.adversary_blocks += 1;
        for i in 0..victims.len() {
            let Some(initial) = victims[i] else { continue };
            let node = &mut self.world.nodes[i];
            if !node.online {
                continue;
            }
            let h = node.view.height;
            let height = counterfeit_height(h, tip);
            if height <= h {
                outcome.rejected_at_tip += 1;
                continue;
            }
            // the adversary's private fork for this victim starts at its current view
            let (block, branched) = self.forks.extend(node.view, ForkOrigin::Counterfeit { scenario: s });
            debug_assert_eq!(block.height, height);
            if branched {
                self.trace.push(TraceRecord::Fork {
                    t: self.now,
                    fork: block.fork_id,
                    parent: node.view.fork_id,
                    fork_point: block.fork_point,
                    origin: ForkOrigin::Counterfeit { scenario: s },
                });
            }
            if apply_block(&mut node.view, block) == Verdict::Accept {
                self.last_accept[i] = self.now;
                if !subverted[i] {
                    subverted[i] = true;
                    outcome.subverted += 1;
                    outcome.subverted_by_bucket[initial.index()] += 1;
                    self.trace.push(TraceRecord::Subversion {
                        t: self.now,
                        scenario: s,
                        node: node.node_id,
                        initial_bucket: initial,
                        lag_at_delivery: tip - h,
                    });
                }
            }
        }
        self.schedule_counterfeit(s);
    }

    fn on_attack_end(&mut self, s: usize) {
        let label = self.scenarios[s].label.clone();
        self.trace.push(TraceRecord::AttackEnd { t: self.now, scenario: s, label: label.clone() });
        let state = std::mem::replace(&mut self.states[s], ScenarioState::Done);
        match state {
            ScenarioState::Spatial { inside, mode, mut outcome, .. } => {
                outcome.fork_formed = mode == SpatialMode::Sever && outcome.blocks_inside > 0 && outcome.blocks_outside > 0;
                if mode == SpatialMode::Sever {
                    let depth = self.heal(s, &inside);
                    if outcome.fork_formed {
                        outcome.reorg_depth_on_heal = depth;
                    }
                }
                let as_count = match &self.scenarios[s].kind {
                    AttackKind::Spatial { as_set, .. } => as_set.iter().collect::<BTreeSet<_>>().len(),
                    _ => 0,
                };
                self.trace.push(TraceRecord::Outcome {
                    t: self.now,
                    outcome: ScenarioOutcome::Spatial { label, as_count, outcome },
                });
            }
            ScenarioState::Temporal { outcome, .. } => {
                self.trace.push(TraceRecord::Outcome { t: self.now, outcome: ScenarioOutcome::Temporal { label, outcome } });
            }
            other => self.states[s] = other,
        }
    }

    /// Reconciles the two sides of a severed partition. The side with the
    /// lower best height adopts the other side's best view wholesale; on a
    /// tie the outside wins. Returns the loser's reorg depth.
    fn heal(&mut self, s: usize, inside: &[bool]) -> u64 {
        let best = |side: bool| -> Option<ChainView> {
            let mut b: Option<ChainView> = None;
            for (n, ins) in self.world.nodes.iter().zip(inside) {
                if n.online && *ins == side && b.is_none_or(|v| n.view.height > v.height) {
                    b = Some(n.view);
                }
            }
            b
        };
        let (Some(ins), Some(out)) = (best(true), best(false)) else {
            return 0;
        };
        let (winner, loser, loser_side) = if ins.height > out.height { (ins, out, false) } else { (out, ins, true) };
        let depth = self.forks.reorg_depth(&loser, &winner);
        let mut switched = 0;
        for ((n, accepted), ins) in self.world.nodes.iter_mut().zip(self.last_accept.iter_mut()).zip(inside.iter()) {
            if n.online && *ins == loser_side && n.view != winner {
                debug_assert!(winner.height >= n.view.height);
                n.view = winner;
                *accepted = self.now;
                switched += 1;
            }
        }
        self.trace.push(TraceRecord::Heal {
            t: self.now,
            scenario: s,
            winner_fork: winner.fork_id,
            loser_fork: loser.fork_id,
            reorg_depth: depth,
            switched,
        });
        depth
    }
}
