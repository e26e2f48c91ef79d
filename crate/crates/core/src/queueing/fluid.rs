//! Deterministic idle-vehicle balance `V_t = V_{t-1} + V_in_t - V_out_t`.
//!
//! Each step `λ·dt` vehicles leave the idle pool (as far as available).
//! A cohort dispatched at step `t` returns after `t_p(V) + t̄`, rounded to
//! the step grid (ties upward), where `V` is the idle pool the cohort was
//! drawn from.

use serde::{Deserialize, Serialize};

use super::{PickupWait, QueueError};

const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidTrace {
    pub dt_h: f64,
    pub v0: f64,
    /// Idle vehicles at the end of each step.
    pub idle: Vec<f64>,
    pub inflow: Vec<f64>,
    pub outflow: Vec<f64>,
    /// Vehicles dispatched and not yet returned, including cohorts due
    /// after the horizon.
    pub in_flight: Vec<f64>,
    /// Whether the pool covered the full dispatch demand at each step.
    pub feasible: Vec<bool>,
}

impl FluidTrace {
    pub fn all_feasible(&self) -> bool {
        self.feasible.iter().all(|&f| f)
    }

    pub fn len(&self) -> usize {
        self.idle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idle.is_empty()
    }

    /// CSV with header `step,V_t,V_in,V_out,feasible_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,V_t,V_in,V_out,feasible_flag\n");
        for t in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t,
                self.idle[t],
                self.inflow[t],
                self.outflow[t],
                u8::from(self.feasible[t])
            ));
        }
        out
    }
}

fn step_count(dt_h: f64, horizon_h: f64) -> Result<usize, QueueError> {
    if !(dt_h > 0.0 && horizon_h > 0.0 && dt_h.is_finite() && horizon_h.is_finite()) {
        return Err(QueueError::InvalidParameter(format!(
            "dt ({dt_h} h) and horizon ({horizon_h} h) must be positive"
        )));
    }
    let n = (horizon_h / dt_h).round();
    if (n * dt_h - horizon_h).abs() > 1e-9 * horizon_h {
        return Err(QueueError::InvalidParameter(format!(
            "dt {dt_h} h does not divide horizon {horizon_h} h"
        )));
    }
    Ok(n as usize)
}

fn delay_steps(hours: f64, dt_h: f64) -> usize {
    let steps = (hours / dt_h + 0.5 + 1e-9).floor();
    if steps.is_finite() {
        (steps as usize).max(1)
    } else {
        usize::MAX
    }
}

pub fn fluid_recursion<P: PickupWait>(
    lambda_per_h: f64,
    t_bar_h: f64,
    pickup: &P,
    v0: f64,
    dt_h: f64,
    horizon_h: f64,
) -> Result<FluidTrace, QueueError> {
    if !(lambda_per_h > 0.0 && t_bar_h > 0.0) {
        return Err(QueueError::InvalidParameter(format!(
            "lambda ({lambda_per_h}/h) and t_bar ({t_bar_h} h) must be positive"
        )));
    }
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(QueueError::InvalidParameter(format!("V0 = {v0}")));
    }
    let n = step_count(dt_h, horizon_h)?;
    let demand = lambda_per_h * dt_h;
    let tol = FEASIBILITY_TOL * demand.max(1.0);
    let mut returns = vec![0.0; n];
    let mut trace = FluidTrace {
        dt_h,
        v0,
        idle: Vec::with_capacity(n),
        inflow: Vec::with_capacity(n),
        outflow: Vec::with_capacity(n),
        in_flight: Vec::with_capacity(n),
        feasible: Vec::with_capacity(n),
    };
    let mut idle = v0;
    let mut in_flight = 0.0;
    for t in 0..n {
        let inflow = returns[t];
        let available = idle + inflow;
        let out = demand.min(available);
        if out > 0.0 {
            let delay = delay_steps(t_bar_h + pickup.wait_h(available), dt_h);
            if let Some(slot) = t.checked_add(delay).filter(|&s| s < n) {
                returns[slot] += out;
            }
        }
        idle = available - out;
        in_flight += out - inflow;
        trace.idle.push(idle);
        trace.inflow.push(inflow);
        trace.outflow.push(out);
        trace.in_flight.push(in_flight);
        trace.feasible.push(available >= demand - tol);
    }
    Ok(trace)
}

/// Result of the fluid fleet-size search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluidFleetSize {
    pub c0: u64,
    /// Largest size found infeasible.
    pub lower: u64,
    /// Initial upper bracket (feasible by construction).
    pub upper: u64,
}

/// Smallest integer initial fleet for which the recursion dispatches the
/// full demand at every step, by bisection between an infeasible lower
/// bound near `λ·t̄` and a feasible upper bound derived from
/// `t̄ + t_p(λ·dt)`.
pub fn min_fleet_fluid<P: PickupWait>(
    lambda_per_h: f64,
    t_bar_h: f64,
    pickup: &P,
    dt_h: f64,
    horizon_h: f64,
) -> Result<FluidFleetSize, QueueError> {
    let feasible = |v0: u64| -> Result<bool, QueueError> {
        Ok(fluid_recursion(lambda_per_h, t_bar_h, pickup, v0 as f64, dt_h, horizon_h)?
            .all_feasible())
    };
    let demand = lambda_per_h * dt_h;
    // With at least `demand` idle at every dispatch, no cohort waits longer
    // than t_p(demand); holding one extra step of demand covers rounding.
    let worst_delay = delay_steps(t_bar_h + pickup.wait_h(demand), dt_h);
    let upper_real = demand * (worst_delay as f64 + 1.0);
    if !upper_real.is_finite() || upper_real > 1e15 {
        return Err(QueueError::InvalidParameter(
            "pickup model diverges at the per-step demand".into(),
        ));
    }
    let upper = upper_real.ceil() as u64;
    if !feasible(upper)? {
        return Err(QueueError::BracketFailure { upper });
    }
    let mut lower = ((lambda_per_h * t_bar_h).floor() as u64).min(upper);
    while feasible(lower)? {
        if lower == 0 {
            return Ok(FluidFleetSize { c0: 0, lower: 0, upper });
        }
        lower /= 2;
    }
    let (mut lo, mut hi) = (lower, upper);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(FluidFleetSize { c0: hi, lower: lo, upper })
}
