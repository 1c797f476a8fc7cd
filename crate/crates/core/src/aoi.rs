//! Age of information: `Δ(t) = t − u(t)`, where `u(t)` is the sampling time of
//! the latest update received by `t`.

use crate::error::{Result, VoiError};
use crate::ou_model::{Reception, UpdateSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiPoint {
    pub t: f64,
    pub age: f64,
}

/// Sawtooth age at `t`. An update counts from its reception instant on.
pub fn aoi_at(schedule: &UpdateSchedule, t: f64) -> Result<f64> {
    let received = schedule.received_by(t, Reception::Closed);
    if received == 0 {
        return Err(VoiError::NoReceptionYet {
            t,
            first_reception: schedule.receive_times().first().copied().unwrap_or(f64::INFINITY),
        });
    }
    Ok(t - schedule.sample_times()[received - 1])
}

/// [`aoi_at`] over a grid, skipping instants before the first reception.
pub fn aoi_trace(schedule: &UpdateSchedule, grid: &[f64]) -> Vec<AoiPoint> {
    grid.iter()
        .filter_map(|&t| aoi_at(schedule, t).ok().map(|age| AoiPoint { t, age }))
        .collect()
}
