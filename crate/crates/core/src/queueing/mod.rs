//! Analytic M/M/c toolkit: utilization, minimum fleet size, Little's law,
//! overflow-safe Erlang quantities, the pickup-wait model and the
//! idle-vehicle fluid recursion.

mod erlang;
mod fluid;
mod pickup;
mod report;
mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use erlang::{
    erlang_c_delay_prob, erlang_f, ln_erlang_f, ln_p0_empty, p0_empty, queue_length_lq,
};
pub use fluid::{fluid_recursion, min_fleet_fluid, FluidFleetSize, FluidTrace};
pub use pickup::{pickup_wait, ConstantPickup, PickupModel, PickupWait};
pub use report::{analyze, AnalyticReport, QueueParams};
pub use special::ln_gamma;

#[derive(Debug, Error, PartialEq)]
pub enum QueueError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("queue is unstable (rho = {rho} >= 1); waiting time grows without bound")]
    Unstable { rho: f64 },
    #[error("fluid bracket failure: upper bound {upper} is infeasible")]
    BracketFailure { upper: u64 },
}

/// `ρ = λ / (c μ)`.
pub fn utilization(lambda: f64, c: f64, mu: f64) -> f64 {
    lambda / (c * mu)
}

/// Minimum fleet size without pickup effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseFleetSize {
    /// `λ / μ`, treated continuously.
    pub real: f64,
    /// `ceil(λ / μ)`.
    pub ceiling: u64,
    /// Smallest integer `c` with `ρ < 1`.
    pub smallest_stable: u64,
}

/// `c0 = λ / μ`. Values within 1e-9 relative of an integer count as that
/// integer.
pub fn min_fleet_base(lambda: f64, mu: f64) -> BaseFleetSize {
    let real = lambda / mu;
    let nearest = real.round();
    let exact = (real - nearest).abs() <= 1e-9 * real.abs().max(1.0);
    let ceiling = if exact { nearest } else { real.ceil() } as u64;
    BaseFleetSize {
        real,
        ceiling,
        smallest_stable: if exact { ceiling + 1 } else { ceiling },
    }
}

/// `μ = 1 / (t̄ + t̄_p)`.
pub fn service_rate_with_pickup(t_bar: f64, t_bar_p: f64) -> f64 {
    1.0 / (t_bar + t_bar_p)
}

/// `ρ = (λ / c)(t̄ + t̄_p)`.
pub fn utilization_with_pickup(lambda: f64, c: f64, t_bar: f64, t_bar_p: f64) -> f64 {
    lambda / c * (t_bar + t_bar_p)
}

/// Little's law relations from `Lq`: returns `(Wq, W, L)`.
pub fn waits(lambda: f64, mu: f64, lq: f64) -> (f64, f64, f64) {
    let wq = lq / lambda;
    let w = wq + 1.0 / mu;
    (wq, w, lambda * w)
}

/// Steady-state M/M/c metrics. Times are in the reciprocal unit of the
/// rates (hours when rates are per hour).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueMetrics {
    pub lambda: f64,
    pub mu: f64,
    pub c: u64,
    pub rho: f64,
    pub erlang_c: f64,
    pub p0_empty: f64,
    pub lq: f64,
    pub wq: f64,
    pub w: f64,
    pub l: f64,
}

impl QueueMetrics {
    pub fn mmc(lambda: f64, mu: f64, c: u64) -> Result<Self, QueueError> {
        if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
            return Err(QueueError::InvalidParameter(format!(
                "rates must be positive (lambda = {lambda}, mu = {mu})"
            )));
        }
        let rho = utilization(lambda, c as f64, mu);
        let erlang_c = erlang_c_delay_prob(c, rho)?;
        let p0 = p0_empty(c, rho)?;
        let lq = erlang_c * rho / (1.0 - rho);
        let (wq, w, l) = waits(lambda, mu, lq);
        Ok(Self {
            lambda,
            mu,
            c,
            rho,
            erlang_c,
            p0_empty: p0,
            lq,
            wq,
            w,
            l,
        })
    }
}
