use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::engine::{KpiTrace, SimResult};

pub const DEFAULT_SLOPE_FRACTION: f64 = 0.05;
pub const DEFAULT_LEVEL_FACTOR: f64 = 3.0;

/// Thresholds for classifying a queue-length trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityCriteria {
    /// Tail window in seconds; `None` uses the run's own tail window.
    pub window_s: Option<f64>,
    /// Allowed queue growth per hour as a fraction of hourly arrivals.
    pub slope_fraction: f64,
    /// Allowed tail mean queue length in units of expected arrivals per step.
    pub level_factor: f64,
}

impl Default for StabilityCriteria {
    fn default() -> Self {
        StabilityCriteria { window_s: None, slope_fraction: DEFAULT_SLOPE_FRACTION, level_factor: DEFAULT_LEVEL_FACTOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityTest {
    pub stable: bool,
    pub tail_mean_queue: f64,
    /// Least-squares queue growth, requests per hour.
    pub tail_slope_per_h: f64,
    pub slope_tol_per_h: f64,
    pub level_bound: f64,
}

/// Stable iff the tail slope stays within `slope_tol_per_h` and the tail mean
/// queue within `level_factor · λ · dt`.
pub fn detect_stability(
    trace: &KpiTrace,
    lambda_per_h: f64,
    dt_s: f64,
    window_s: f64,
    slope_tol_per_h: f64,
    level_factor: f64,
) -> Result<StabilityTest, ExperimentError> {
    if !(dt_s > 0.0 && window_s > 0.0) || !lambda_per_h.is_finite() || lambda_per_h < 0.0 {
        return Err(ExperimentError::InvalidSpec(format!(
            "stability test needs dt > 0, window > 0, lambda >= 0 (got {dt_s}, {window_s}, {lambda_per_h})"
        )));
    }
    let n = (window_s / dt_s).round() as usize;
    if n == 0 || n > trace.len() {
        return Err(ExperimentError::WindowExceedsTrace { window_steps: n, trace_steps: trace.len() });
    }
    let tail = &trace.queue_length[trace.len() - n..];
    let mean = tail.iter().map(|&q| q as f64).sum::<f64>() / n as f64;

    let x_mean = (n as f64 - 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &q) in tail.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (q as f64 - mean);
        sxx += dx * dx;
    }
    let slope_per_step = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let slope_per_h = slope_per_step * 3600.0 / dt_s;
    let level_bound = level_factor * lambda_per_h * dt_s / 3600.0;
    Ok(StabilityTest {
        stable: slope_per_h <= slope_tol_per_h && mean <= level_bound,
        tail_mean_queue: mean,
        tail_slope_per_h: slope_per_h,
        slope_tol_per_h,
        level_bound,
    })
}

/// Stability verdict and tail statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub fleet_size: usize,
    pub replication: u32,
    pub seed: u64,
    pub stable: bool,
    pub tail_mean_queue: f64,
    pub tail_slope_per_h: f64,
    pub tail_mean_assignment_wait_s: Option<f64>,
    pub tail_mean_pickup_wait_s: Option<f64>,
    pub tail_max_pickup_wait_s: Option<f64>,
    pub empirical_rho: Option<f64>,
    pub served: usize,
    pub in_flight: usize,
    pub unserved: usize,
}

pub fn assess(
    result: &SimResult,
    lambda_per_h: f64,
    criteria: &StabilityCriteria,
    replication: u32,
) -> Result<StabilityVerdict, ExperimentError> {
    let cfg = &result.config;
    let window = criteria.window_s.unwrap_or_else(|| cfg.tail_window_s());
    let test = detect_stability(
        &result.trace,
        lambda_per_h,
        cfg.dt_s,
        window,
        criteria.slope_fraction * lambda_per_h,
        criteria.level_factor,
    )?;
    let s = &result.summary;
    Ok(StabilityVerdict {
        fleet_size: cfg.fleet_size,
        replication,
        seed: cfg.seed,
        stable: test.stable,
        tail_mean_queue: test.tail_mean_queue,
        tail_slope_per_h: test.tail_slope_per_h,
        tail_mean_assignment_wait_s: s.tail_mean_assignment_wait_s,
        tail_mean_pickup_wait_s: s.tail_mean_pickup_wait_s,
        tail_max_pickup_wait_s: s.tail_max_pickup_wait_s,
        empirical_rho: s.empirical_rho,
        served: s.served,
        in_flight: s.in_flight,
        unserved: s.unserved,
    })
}
