use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::EncounterMatrix;
use super::EncounterError;
use crate::LineId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopDelay {
    pub from: LineId,
    pub to: LineId,
    /// Mean trip time of the carrying line, seconds.
    pub trip_time: f64,
    /// Raw encounter probability of the hop.
    pub p: f64,
    /// Mean wait for the first forwarding chance, `t / 2`.
    pub first_wait: f64,
    /// Mean extra trips before the encounter times the trip time,
    /// `(1 - p) / p * t`; infinite when `p = 0`.
    pub retry_wait: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    /// Seconds; infinite if any hop has probability 0.
    pub expected_delay: f64,
    pub finite: bool,
    pub hops: Vec<HopDelay>,
}

/// Expected delivery delay along `route` (the visited lines, source first):
/// per hop, half a trip of the carrying line plus the mean number of failed
/// trips (geometric in the raw probability) times the trip time.
pub fn expected_delay(
    route: &[LineId],
    matrix: &EncounterMatrix,
    trip_times: &BTreeMap<LineId, f64>,
) -> Result<DelayEstimate, EncounterError> {
    if route.is_empty() {
        return Err(EncounterError::EmptyRoute);
    }
    let mut hops = Vec::with_capacity(route.len().saturating_sub(1));
    for w in route.windows(2) {
        let i = matrix.index(w[0]).ok_or(EncounterError::UnknownLine(w[0]))?;
        let j = matrix.index(w[1]).ok_or(EncounterError::UnknownLine(w[1]))?;
        let p = matrix.p(i, j).ok_or(EncounterError::UndefinedRow(w[0]))?;
        let t = *trip_times
            .get(&w[0])
            .ok_or(EncounterError::MissingTripTime(w[0]))?;
        let retry_wait = if p > 0.0 { (1.0 - p) / p * t } else { f64::INFINITY };
        hops.push(HopDelay {
            from: w[0],
            to: w[1],
            trip_time: t,
            p,
            first_wait: t / 2.0,
            retry_wait,
        });
    }
    let expected_delay: f64 = hops.iter().map(|h| h.first_wait + h.retry_wait).sum();
    Ok(DelayEstimate {
        expected_delay,
        finite: expected_delay.is_finite(),
        hops,
    })
}
