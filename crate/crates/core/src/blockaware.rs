//! Lag detection from elapsed time. A node that last accepted a block at
//! `last_sync_time` expects the network to have produced roughly
//! `elapsed / expected_block_interval` blocks since, and raises an alert when
//! its own height falls that many blocks (or more) short of the estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Floor,
    /// Half-up rounding.
    Round,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockAwareConfig {
    pub expected_block_interval: f64,
    pub alert_threshold: u64,
    pub estimator: Estimator,
}

impl Default for BlockAwareConfig {
    fn default() -> Self {
        Self {
            expected_block_interval: 600.0,
            alert_threshold: 2,
            estimator: Estimator::Floor,
        }
    }
}

impl BlockAwareConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.expected_block_interval > 0.0) || !self.expected_block_interval.is_finite() {
            return Err(Error::param("expected_block_interval", "must be positive"));
        }
        if self.alert_threshold < 1 {
            return Err(Error::param("alert_threshold", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeClock {
    pub last_sync_height: u64,
    pub last_sync_time: f64,
    pub now: f64,
}

pub fn expected_height(clock: &NodeClock, cfg: &BlockAwareConfig) -> u64 {
    let elapsed = (clock.now - clock.last_sync_time).max(0.0);
    let blocks = elapsed / cfg.expected_block_interval;
    let est = match cfg.estimator {
        Estimator::Floor => blocks.floor(),
        Estimator::Round => (blocks + 0.5).floor(),
    };
    clock.last_sync_height + est as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Ok,
    Alert { estimated_lag: u64 },
}

pub fn check(local_height: u64, clock: &NodeClock, cfg: &BlockAwareConfig) -> Check {
    let lag = expected_height(clock, cfg).saturating_sub(local_height);
    if lag >= cfg.alert_threshold {
        Check::Alert { estimated_lag: lag }
    } else {
        Check::Ok
    }
}

/// Monte Carlo probability that a fully synchronized node raises an alert at
/// a single check made at `horizon`.
///
/// Blocks arrive as a Poisson process with the configured mean interval and
/// the node accepts each one immediately, so its clock restarts at every
/// arrival. Each trial draws its own arrival sequence from a stream keyed by
/// `(seed, trial)`, so different configurations evaluated with the same seed
/// see identical arrivals.
pub fn false_positive_rate(cfg: &BlockAwareConfig, horizon: f64, trials: u64, seed: u64) -> Result<f64> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::param("horizon", "must be non-negative"));
    }
    let gap = Exp::new(1.0 / cfg.expected_block_interval).expect("positive rate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alerts = 0u64;
    for trial in 0..trials {
        rng.set_stream(trial);
        rng.set_word_pos(0);
        let mut t = 0.0;
        let mut last = 0.0;
        let mut height = 0u64;
        loop {
            t += gap.sample(&mut rng);
            if t > horizon {
                break;
            }
            last = t;
            height += 1;
        }
        let clock = NodeClock {
            last_sync_height: height,
            last_sync_time: last,
            now: horizon,
        };
        if matches!(check(height, &clock, cfg), Check::Alert { .. }) {
            alerts += 1;
        }
    }
    Ok(alerts as f64 / trials as f64)
}
