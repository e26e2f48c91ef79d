use serde::{Deserialize, Serialize};

use super::QueueError;

/// Mean distance between two uniform points in a unit square, rounded as
/// used by the pickup model.
const SQUARE_MEAN_DISTANCE: f64 = 0.52;

/// A pickup-wait law `t_p(V)` in hours as a function of idle vehicles.
pub trait PickupWait {
    fn wait_h(&self, idle_vehicles: f64) -> f64;
}

/// Idle vehicles spread over coverage squares of area `A / (ψ V)`:
/// `t_p = (0.52 φ / v̄) · sqrt(A / (ψ V))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PickupModel {
    pub area_km2: f64,
    pub psi: f64,
    pub phi: f64,
    pub v_bar_kmh: f64,
}

impl PickupModel {
    pub fn new(area_km2: f64, psi: f64, phi: f64, v_bar_kmh: f64) -> Result<Self, QueueError> {
        if !(area_km2 > 0.0 && area_km2.is_finite()) {
            return Err(QueueError::InvalidParameter(format!("area {area_km2} km²")));
        }
        if !(psi > 0.0 && psi <= 1.0) {
            return Err(QueueError::InvalidParameter(format!("psi {psi} outside (0, 1]")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(QueueError::InvalidParameter(format!("phi {phi}")));
        }
        if !(v_bar_kmh > 0.0 && v_bar_kmh.is_finite()) {
            return Err(QueueError::InvalidParameter(format!("v_bar {v_bar_kmh} km/h")));
        }
        Ok(Self { area_km2, psi, phi, v_bar_kmh })
    }
}

impl PickupWait for PickupModel {
    fn wait_h(&self, idle_vehicles: f64) -> f64 {
        if idle_vehicles <= 0.0 {
            return f64::INFINITY;
        }
        SQUARE_MEAN_DISTANCE * self.phi / self.v_bar_kmh
            * (self.area_km2 / (self.psi * idle_vehicles)).sqrt()
    }
}

/// Pickup wait independent of vehicle availability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPickup(pub f64);

impl PickupWait for ConstantPickup {
    fn wait_h(&self, _idle_vehicles: f64) -> f64 {
        self.0
    }
}

/// Average pickup wait in hours for `idle_vehicles` idle vehicles.
pub fn pickup_wait(
    area_km2: f64,
    psi: f64,
    idle_vehicles: f64,
    phi: f64,
    v_bar_kmh: f64,
) -> Result<f64, QueueError> {
    if !(idle_vehicles > 0.0) {
        return Err(QueueError::InvalidParameter(format!(
            "idle vehicle count must be positive, got {idle_vehicles}"
        )));
    }
    Ok(PickupModel::new(area_km2, psi, phi, v_bar_kmh)?.wait_h(idle_vehicles))
}
