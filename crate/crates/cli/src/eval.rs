//! False-positive study of the lag detector on a synchronized node.

use std::path::Path;

use partsim_core::blockaware::{false_positive_rate, BlockAwareConfig, Estimator};
use partsim_core::jsonfmt::{self, fixed6};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::EvalConfig;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub threshold: u64,
    pub trials: u64,
    pub horizon: f64,
    pub false_positive_rate: f64,
    /// Probability that a Poisson block stream leaves a silent gap long enough to alert.
    pub poisson_rate: f64,
}

/// Closed form for a single check at `horizon`: an alert needs the last
/// `k` (Floor) or `k - 1/2` (Round) expected intervals to be block-free.
pub fn poisson_false_positive(cfg: &BlockAwareConfig, horizon: f64) -> f64 {
    let k = cfg.alert_threshold as f64;
    let gap = match cfg.estimator {
        Estimator::Floor => k,
        Estimator::Round => k - 0.5,
    };
    if horizon >= gap * cfg.expected_block_interval {
        (-gap).exp()
    } else {
        0.0
    }
}

/// Every threshold shares the seed, so all of them see the same arrivals.
pub fn run_eval(base: &BlockAwareConfig, eval: &EvalConfig, seed: u64) -> CliResult<Vec<EvalRow>> {
    let horizon = eval.horizon.unwrap_or(base.expected_block_interval);
    eval.thresholds
        .par_iter()
        .map(|&threshold| {
            let cfg = BlockAwareConfig { alert_threshold: threshold, ..*base };
            let rate = false_positive_rate(&cfg, horizon, eval.trials, seed)?;
            Ok(EvalRow {
                threshold,
                trials: eval.trials,
                horizon,
                false_positive_rate: rate,
                poisson_rate: poisson_false_positive(&cfg, horizon),
            })
        })
        .collect()
}

pub fn write_eval(rows: &[EvalRow], out: &Path) -> CliResult<()> {
    let runtime = |p: &Path, e: String| CliError::Runtime(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(out).map_err(|e| runtime(out, e.to_string()))?;
    let json_path = out.join("blockaware_eval.json");
    std::fs::write(&json_path, jsonfmt::to_pretty(&rows)?).map_err(|e| runtime(&json_path, e.to_string()))?;
    let csv_path = out.join("blockaware_eval.csv");
    let csv_err = |e: csv::Error| runtime(&csv_path, e.to_string());
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(["threshold", "trials", "horizon", "false_positive_rate", "poisson_rate"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.threshold.to_string(),
            r.trials.to_string(),
            fixed6(r.horizon),
            fixed6(r.false_positive_rate),
            fixed6(r.poisson_rate),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| runtime(&csv_path, e.to_string()))
}
