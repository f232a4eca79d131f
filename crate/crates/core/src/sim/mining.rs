use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Poisson block production across pools: network-wide inter-arrival times
/// are exponential with mean `expected_interval`, and each block's winner is
/// drawn in proportion to the pools' hash shares.
#[derive(Clone, Debug)]
pub struct Miner {
    cumulative: Vec<f64>,
    gap: Exp<f64>,
}

/// One mined block: absolute time and winning pool index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinedBlock {
    pub time: f64,
    pub pool: usize,
}

impl Miner {
    pub fn new(shares: &[f64], expected_interval: f64) -> Result<Self> {
        if !(expected_interval > 0.0) || !expected_interval.is_finite() {
            return Err(Error::param("expected_block_interval", "must be positive"));
        }
        if shares.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::param("hash_share", "shares must be non-negative"));
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = shares
            .iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::Domain("total hash share is zero".into()));
        }
        Ok(Miner {
            cumulative,
            gap: Exp::new(1.0 / expected_interval).expect("positive rate"),
        })
    }

    pub fn pick_pool<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.gen::<f64>() * total;
        // first pool whose cumulative share exceeds u; zero-share pools are never chosen
        self.cumulative
            .partition_point(|c| *c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// Next block after `now`.
    pub fn mine_next<R: Rng + ?Sized>(&self, now: f64, rng: &mut R) -> MinedBlock {
        let dt = self.gap.sample(rng);
        let pool = self.pick_pool(rng);
        MinedBlock { time: now + dt, pool }
    }
}
