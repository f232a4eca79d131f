//! Single-scenario runs: each wraps one attack in a full engine run and
//! returns its outcome together with the trace.

use super::{AdoptionModel, AttackKind, AttackScenario, LogicalOutcome, PartitionOutcome, ScenarioOutcome, SpatialMode, TemporalOutcome};
use crate::error::{Error, Result};
use crate::sim::{run, LagBucket, SimParams, TraceLog, World};
use crate::topology::Asn;

fn single(world: World, params: &SimParams, scenario: AttackScenario) -> Result<(ScenarioOutcome, TraceLog)> {
    let trace = run(world, params, std::slice::from_ref(&scenario), None)?;
    let outcome = trace
        .outcomes
        .iter()
        .find(|o| o.label() == scenario.label)
        .cloned()
        .ok_or_else(|| Error::Config(format!("scenario `{}` did not finish within the horizon", scenario.label)))?;
    Ok((outcome, trace))
}

/// Severs (or delays) every link between `as_set` and the rest of the network
/// during `[start, start + duration)` and heals at the end.
pub fn spatial_hijack(
    world: World,
    params: &SimParams,
    as_set: &[Asn],
    start: f64,
    duration: f64,
    mode: SpatialMode,
) -> Result<(PartitionOutcome, TraceLog)> {
    let scenario = AttackScenario {
        label: "spatial".into(),
        kind: AttackKind::Spatial { as_set: as_set.to_vec(), start, duration, mode },
    };
    match single(world, params, scenario)? {
        (ScenarioOutcome::Spatial { outcome, .. }, trace) => Ok((outcome, trace)),
        _ => unreachable!("spatial scenario yields a spatial outcome"),
    }
}

/// Feeds counterfeit blocks to nodes at least `victim_filter` behind at `start`.
pub fn temporal_feed(
    world: World,
    params: &SimParams,
    victim_filter: LagBucket,
    adversary_hash_share: f64,
    start: f64,
    duration: f64,
) -> Result<(TemporalOutcome, TraceLog)> {
    let scenario = AttackScenario {
        label: "temporal".into(),
        kind: AttackKind::Temporal { victim_filter, adversary_hash_share, start, duration },
    };
    match single(world, params, scenario)? {
        (ScenarioOutcome::Temporal { outcome, .. }, trace) => Ok((outcome, trace)),
        _ => unreachable!("temporal scenario yields a temporal outcome"),
    }
}

/// Releases a malicious client at t = 0. Adoption draws come from the
/// adversary stream of `params.seed`.
pub fn logical_release(
    world: World,
    params: &SimParams,
    malicious_version: &str,
    adoption: AdoptionModel,
    current_version: Option<String>,
) -> Result<LogicalOutcome> {
    let scenario = AttackScenario {
        label: "logical".into(),
        kind: AttackKind::Logical { malicious_version: malicious_version.into(), adoption, start: 0.0, current_version },
    };
    let params = SimParams { horizon: 0.0, ..params.clone() };
    match single(world, &params, scenario)? {
        (ScenarioOutcome::Logical { outcome, .. }, _) => Ok(outcome),
        _ => unreachable!("logical scenario yields a logical outcome"),
    }
}
