use std::collections::{BTreeSet, HashMap};
use std::net::Ipv4Addr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::chain::ChainView;
use super::SimParams;
use crate::error::{Error, Result};
use crate::topology::{validate_pools, Asn, MiningPool, NetworkSnapshot, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthClass {
    Fast,
    Slow,
}

#[derive(Clone, Debug)]
pub struct SimNode {
    pub node_id: NodeId,
    pub address: Ipv4Addr,
    pub asn: Asn,
    pub org: String,
    pub version: String,
    pub online: bool,
    pub view: ChainView,
    /// Indices into [`World::nodes`]; never contains the node itself.
    pub peers: Vec<u32>,
    pub bandwidth: BandwidthClass,
    /// Per-hop delay of blocks arriving at this node, seconds.
    pub delay: f64,
    /// Mining gateways are always online and fast.
    pub gateway: bool,
}

/// Nodes, links and pool gateways of one run.
#[derive(Clone, Debug)]
pub struct World {
    pub nodes: Vec<SimNode>,
    pub pools: Vec<MiningPool>,
    /// `gateways[p][i]`: node index hosting location `i` of pool `p`.
    pub gateways: Vec<Vec<u32>>,
    pub genesis_height: u64,
    pub timestamp: i64,
    /// ASes a scenario may name: those hosting nodes or pools, plus any
    /// added from routing data.
    pub known_asns: BTreeSet<Asn>,
}

impl World {
    pub fn add_known_asns(&mut self, asns: impl IntoIterator<Item = Asn>) {
        self.known_asns.extend(asns);
    }
}

/// Turns a census into a simulation world. Every node starts online on the
/// honest chain at its recorded height; the highest recorded height is the
/// initial tip. Peer selection and bandwidth classes are drawn from a stream
/// derived from `params.seed`.
pub fn build_world(snapshot: &NetworkSnapshot, pools: &[MiningPool], params: &SimParams) -> Result<World> {
    validate_pools(pools)?;
    let n = snapshot.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(1);

    let mut first_in_as: HashMap<Asn, u32> = HashMap::new();
    for (i, node) in snapshot.nodes.iter().enumerate() {
        first_in_as.entry(node.asn).or_insert(i as u32);
    }
    let mut gateways = Vec::with_capacity(pools.len());
    for pool in pools {
        let mut gw = Vec::with_capacity(pool.locations.len());
        for loc in &pool.locations {
            let idx = first_in_as.get(&loc.asn).ok_or_else(|| {
                Error::Config(format!("pool `{}` is located in {} which has no nodes", pool.name, loc.asn))
            })?;
            gw.push(*idx);
        }
        gateways.push(gw);
    }
    let is_gateway: BTreeSet<u32> = gateways.iter().flatten().copied().collect();

    let mut adjacency: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    if n > 1 {
        let k = params.outbound_peers.min(n - 1);
        for i in 0..n {
            // sample from the n-1 other nodes, skipping i
            for j in sample(&mut rng, n - 1, k) {
                let j = if j >= i { j + 1 } else { j };
                adjacency[i].insert(j as u32);
                adjacency[j].insert(i as u32);
            }
        }
    }

    let mut known_asns: BTreeSet<Asn> = snapshot.nodes.iter().map(|n| n.asn).collect();
    known_asns.extend(pools.iter().flat_map(|p| p.locations.iter().map(|l| l.asn)));
    let genesis_height = snapshot.max_height().unwrap_or(0);
    let nodes = snapshot
        .nodes
        .iter()
        .zip(adjacency)
        .enumerate()
        .map(|(i, (rec, peers))| {
            let gateway = is_gateway.contains(&(i as u32));
            let slow = rng.gen::<f64>() < params.slow_fraction && !gateway;
            let delay = if !slow {
                params.delay_fast
            } else if params.slow_delay_spread > 0.0 {
                let u: f64 = rng.gen_range(-1.0..1.0);
                (params.delay_slow * (1.0 + params.slow_delay_spread * u)).max(params.delay_fast)
            } else {
                params.delay_slow
            };
            SimNode {
                node_id: rec.node_id,
                address: rec.address,
                asn: rec.asn,
                org: rec.org.clone(),
                version: rec.version.clone(),
                online: true,
                view: ChainView::honest(rec.height),
                peers: peers.into_iter().collect(),
                bandwidth: if slow { BandwidthClass::Slow } else { BandwidthClass::Fast },
                delay,
                gateway,
            }
        })
        .collect();

    Ok(World {
        nodes,
        pools: pools.to_vec(),
        gateways,
        genesis_height,
        timestamp: snapshot.timestamp,
        known_asns,
    })
}
