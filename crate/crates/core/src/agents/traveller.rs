use serde::{Deserialize, Serialize};

use super::{AgentError, VehicleEvent};
use crate::demand::TripRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TravellerState {
    WaitingForAssignment,
    WaitingForPickup,
    InTrip,
    Served,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traveller {
    pub id: usize,
    pub request: TripRequest,
    pub state: TravellerState,
    pub vehicle: Option<usize>,
    pub t_assigned: Option<f64>,
    pub t_pickup: Option<f64>,
    pub t_dropoff: Option<f64>,
    /// Routed vehicle-to-origin time quoted at assignment.
    pub quoted_pickup_s: Option<f64>,
}

impl Traveller {
    pub fn new(id: usize, request: TripRequest) -> Self {
        Traveller {
            id,
            request,
            state: TravellerState::WaitingForAssignment,
            vehicle: None,
            t_assigned: None,
            t_pickup: None,
            t_dropoff: None,
            quoted_pickup_s: None,
        }
    }

    pub fn assignment_wait_s(&self) -> Option<f64> {
        self.t_assigned.map(|t| t - self.request.request_time_s)
    }

    pub fn pickup_wait_s(&self) -> Option<f64> {
        Some(self.t_pickup? - self.t_assigned?)
    }

    pub fn trip_time_s(&self) -> Option<f64> {
        Some(self.t_dropoff? - self.t_pickup?)
    }
}

/// Applies one vehicle event to its traveller.
pub fn traveller_step(traveller: &mut Traveller, event: &VehicleEvent) -> Result<(), AgentError> {
    use TravellerState::*;
    match (traveller.state, event) {
        (WaitingForPickup, VehicleEvent::PickupComplete { time_s, .. }) => {
            traveller.state = InTrip;
            traveller.t_pickup = Some(*time_s);
        }
        (InTrip, VehicleEvent::DropoffComplete { time_s, .. }) => {
            traveller.state = Served;
            traveller.t_dropoff = Some(*time_s);
        }
        (state, _) => {
            return Err(AgentError::OutOfOrderEvent { traveller: traveller.id, state, event: *event });
        }
    }
    Ok(())
}
