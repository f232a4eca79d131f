//! Height-only chain model. A node's chain is `(fork_id, height)`; forks form
//! a tree rooted at fork 0, each branching off its parent at `fork_point`.

use serde::{Deserialize, Serialize};

pub type ForkId = u32;

/// The genesis branch. Honest mining extends it unless a competing block forces a branch.
pub const HONEST_FORK: ForkId = 0;

/// A node's believed best chain, also used to describe a single block
/// (the block at `height` on `fork_id`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainView {
    pub fork_id: ForkId,
    pub height: u64,
    pub fork_point: u64,
}

impl ChainView {
    pub const GENESIS: ChainView = ChainView {
        fork_id: HONEST_FORK,
        height: 0,
        fork_point: 0,
    };

    pub fn honest(height: u64) -> Self {
        ChainView {
            fork_id: HONEST_FORK,
            height,
            fork_point: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

/// Longest-chain rule on height: strictly higher blocks replace the view,
/// equal height keeps the first-seen block.
pub fn apply_block(view: &mut ChainView, block: ChainView) -> Verdict {
    if block.height > view.height {
        *view = block;
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

/// Who produced the blocks on a fork.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum ForkOrigin {
    Honest,
    /// Mined by pools cut off by the spatial scenario at this index.
    Partition { scenario: usize },
    /// Fed to victims by the temporal scenario at this index.
    Counterfeit { scenario: usize },
}

impl ForkOrigin {
    pub fn is_counterfeit(self) -> bool {
        matches!(self, ForkOrigin::Counterfeit { .. })
    }
}

#[derive(Clone, Debug)]
struct Fork {
    parent: Option<ForkId>,
    fork_point: u64,
    tip: u64,
    origin: ForkOrigin,
}

#[derive(Clone, Debug)]
pub struct ForkTree {
    forks: Vec<Fork>,
}

impl ForkTree {
    pub fn new(genesis_height: u64) -> Self {
        ForkTree {
            forks: vec![Fork {
                parent: None,
                fork_point: 0,
                tip: genesis_height,
                origin: ForkOrigin::Honest,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.forks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forks.is_empty()
    }

    pub fn origin(&self, fork: ForkId) -> ForkOrigin {
        self.forks[fork as usize].origin
    }

    pub fn tip(&self, fork: ForkId) -> u64 {
        self.forks[fork as usize].tip
    }

    pub fn parent(&self, fork: ForkId) -> Option<ForkId> {
        self.forks[fork as usize].parent
    }

    /// True when the view sits on a counterfeit fork or any fork descending from one.
    pub fn is_counterfeit(&self, view: &ChainView) -> bool {
        let mut f = Some(view.fork_id);
        let mut h = view.height;
        while let Some(id) = f {
            let fork = &self.forks[id as usize];
            if fork.origin.is_counterfeit() && h > fork.fork_point {
                return true;
            }
            h = h.min(fork.fork_point);
            f = fork.parent;
        }
        false
    }

    /// Block mined on top of `parent`. Extends the parent's fork when the
    /// parent is that fork's tip and the origin matches, otherwise opens a
    /// new branch. Returns the new block and whether a branch was created.
    pub fn extend(&mut self, parent: ChainView, origin: ForkOrigin) -> (ChainView, bool) {
        let fork = &mut self.forks[parent.fork_id as usize];
        if fork.tip == parent.height && fork.origin == origin {
            fork.tip += 1;
            let block = ChainView {
                fork_id: parent.fork_id,
                height: parent.height + 1,
                fork_point: fork.fork_point,
            };
            (block, false)
        } else {
            (self.branch(parent, origin), true)
        }
    }

    /// Opens a new fork whose first block sits on top of `parent`.
    pub fn branch(&mut self, parent: ChainView, origin: ForkOrigin) -> ChainView {
        let id = self.forks.len() as ForkId;
        self.forks.push(Fork {
            parent: Some(parent.fork_id),
            fork_point: parent.height,
            tip: parent.height + 1,
            origin,
        });
        ChainView {
            fork_id: id,
            height: parent.height + 1,
            fork_point: parent.height,
        }
    }

    /// `(fork, highest height of the chain on that fork)` from the view down to fork 0.
    fn lineage(&self, view: &ChainView) -> Vec<(ForkId, u64)> {
        let mut out = vec![(view.fork_id, view.height)];
        let mut f = view.fork_id;
        let mut h = view.height;
        while let Some(p) = self.forks[f as usize].parent {
            h = h.min(self.forks[f as usize].fork_point);
            out.push((p, h));
            f = p;
        }
        out
    }

    /// The block at `height` on the chain ending at `view`. `height` must not exceed `view.height`.
    pub fn ancestor_at(&self, view: &ChainView, height: u64) -> ChainView {
        debug_assert!(height <= view.height);
        let mut f = view.fork_id;
        loop {
            let fork = &self.forks[f as usize];
            match fork.parent {
                Some(p) if height <= fork.fork_point => f = p,
                _ => {
                    return ChainView {
                        fork_id: f,
                        height,
                        fork_point: fork.fork_point,
                    }
                }
            }
        }
    }

    /// Height of the last block two chains share.
    pub fn common_ancestor(&self, a: &ChainView, b: &ChainView) -> u64 {
        let la = self.lineage(a);
        let lb = self.lineage(b);
        for (fa, ha) in &la {
            if let Some((_, hb)) = lb.iter().find(|(fb, _)| fb == fa) {
                return (*ha).min(*hb);
            }
        }
        0
    }

    /// Blocks abandoned when switching from `from` to `to`.
    pub fn reorg_depth(&self, from: &ChainView, to: &ChainView) -> u64 {
        from.height - self.common_ancestor(from, to).min(from.height)
    }
}
