//! Travellers, vehicles and the dispatching operator.

mod operator;
mod traveller;
mod vehicle;

pub use operator::{fifo_assign, AssignOptions, Operator, DEFAULT_PREFILTER_K};
pub use traveller::{traveller_step, Traveller, TravellerState};
pub use vehicle::{vehicle_step, Dwell, Job, Position, Vehicle, VehicleEvent, VehicleState};

use crate::network::NetworkError;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("traveller {0} is already queued")]
    DuplicateEnqueue(usize),
    #[error("traveller {traveller} cannot be queued in state {state:?}")]
    NotWaiting { traveller: usize, state: TravellerState },
    #[error("traveller {traveller} in state {state:?} received {event:?}")]
    OutOfOrderEvent { traveller: usize, state: TravellerState, event: VehicleEvent },
    #[error("vehicle {0} is travelling without a job")]
    MissingJob(usize),
    #[error("vehicle {0} is not idle")]
    VehicleBusy(usize),
    #[error(transparent)]
    Routing(#[from] NetworkError),
}
