use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::network::{Path, RoadNetwork, Router};

const EPS_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VehicleState {
    Idle,
    TravellingToOrigin,
    Loading,
    TravellingToDestination,
    Unloading,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dwell {
    pub load_s: f64,
    pub unload_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VehicleEvent {
    PickupComplete { traveller: usize, vehicle: usize, time_s: f64 },
    DropoffComplete { traveller: usize, vehicle: usize, time_s: f64 },
}

impl VehicleEvent {
    pub fn traveller(&self) -> usize {
        match *self {
            VehicleEvent::PickupComplete { traveller, .. } | VehicleEvent::DropoffComplete { traveller, .. } => {
                traveller
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub traveller: usize,
    pub origin: usize,
    pub destination: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    AtNode(usize),
    OnLink { link: usize, offset_m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    pub state: VehicleState,
    /// Last node reached.
    pub node: usize,
    route: Vec<usize>,
    cursor: usize,
    elapsed_on_link_s: f64,
    dwell_left_s: f64,
    pub job: Option<Job>,
    pub odometer_m: f64,
    pub trips_served: u64,
}

impl Vehicle {
    pub fn new(id: usize, node: usize) -> Self {
        Vehicle {
            id,
            state: VehicleState::Idle,
            node,
            route: Vec::new(),
            cursor: 0,
            elapsed_on_link_s: 0.0,
            dwell_left_s: 0.0,
            job: None,
            odometer_m: 0.0,
            trips_served: 0,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.state == VehicleState::Idle
    }

    pub fn position(&self, network: &RoadNetwork) -> Position {
        match self.route.get(self.cursor) {
            Some(&link) if self.elapsed_on_link_s > 0.0 => Position::OnLink {
                link,
                offset_m: (self.elapsed_on_link_s * network.link(link).speed_mps()).min(network.link(link).length_m),
            },
            _ => Position::AtNode(self.node),
        }
    }

    /// Links still to be driven, starting with the current one.
    pub fn remaining_route(&self) -> &[usize] {
        &self.route[self.cursor.min(self.route.len())..]
    }

    pub fn dwell_left_s(&self) -> f64 {
        self.dwell_left_s
    }

    /// Dispatches an idle vehicle along `to_origin`.
    pub fn assign(&mut self, job: Job, to_origin: Path) -> Result<(), AgentError> {
        if !self.is_idle() {
            return Err(AgentError::VehicleBusy(self.id));
        }
        self.job = Some(job);
        self.state = VehicleState::TravellingToOrigin;
        self.set_route(to_origin);
        Ok(())
    }

    fn set_route(&mut self, path: Path) {
        self.route = path.links;
        self.cursor = 0;
        self.elapsed_on_link_s = 0.0;
    }
}

/// Advances a vehicle by `dt_s` seconds of travel and dwell time.
/// Event times are `now_s` plus the time consumed within the step.
pub fn vehicle_step(
    vehicle: &mut Vehicle,
    router: &mut Router<'_>,
    dwell: Dwell,
    now_s: f64,
    dt_s: f64,
) -> Result<Vec<VehicleEvent>, AgentError> {
    let network = router.network();
    let mut events = Vec::new();
    let mut budget = dt_s;
    loop {
        match vehicle.state {
            VehicleState::Idle => break,
            VehicleState::TravellingToOrigin | VehicleState::TravellingToDestination => {
                let Some(&link_ix) = vehicle.route.get(vehicle.cursor) else {
                    if vehicle.job.is_none() {
                        return Err(AgentError::MissingJob(vehicle.id));
                    }
                    if vehicle.state == VehicleState::TravellingToOrigin {
                        vehicle.state = VehicleState::Loading;
                        vehicle.dwell_left_s = dwell.load_s;
                    } else {
                        vehicle.state = VehicleState::Unloading;
                        vehicle.dwell_left_s = dwell.unload_s;
                    }
                    continue;
                };
                if budget <= 0.0 {
                    break;
                }
                let link = network.link(link_ix);
                let left = link.travel_time_s() - vehicle.elapsed_on_link_s;
                if left <= budget + EPS_S {
                    let done_m = vehicle.elapsed_on_link_s * link.speed_mps();
                    vehicle.odometer_m += (link.length_m - done_m).max(0.0);
                    budget = (budget - left).max(0.0);
                    vehicle.node = link.to;
                    vehicle.cursor += 1;
                    vehicle.elapsed_on_link_s = 0.0;
                } else {
                    vehicle.elapsed_on_link_s += budget;
                    vehicle.odometer_m += budget * link.speed_mps();
                    break;
                }
            }
            VehicleState::Loading | VehicleState::Unloading => {
                if vehicle.dwell_left_s > budget + EPS_S {
                    vehicle.dwell_left_s -= budget;
                    break;
                }
                budget = (budget - vehicle.dwell_left_s).max(0.0);
                vehicle.dwell_left_s = 0.0;
                let job = vehicle.job.ok_or(AgentError::MissingJob(vehicle.id))?;
                let time_s = now_s + (dt_s - budget);
                if vehicle.state == VehicleState::Loading {
                    events.push(VehicleEvent::PickupComplete { traveller: job.traveller, vehicle: vehicle.id, time_s });
                    let path = router.shortest_path(vehicle.node, job.destination)?;
                    vehicle.set_route(path);
                    vehicle.state = VehicleState::TravellingToDestination;
                } else {
                    events.push(VehicleEvent::DropoffComplete { traveller: job.traveller, vehicle: vehicle.id, time_s });
                    vehicle.job = None;
                    vehicle.route.clear();
                    vehicle.cursor = 0;
                    vehicle.trips_served += 1;
                    vehicle.state = VehicleState::Idle;
                }
            }
        }
    }
    Ok(events)
}
