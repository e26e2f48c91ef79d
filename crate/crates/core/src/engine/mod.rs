//! Fixed-step simulation loop and its KPI outputs.

mod io;
mod kpi;

pub use io::{read_result, read_trace, read_travellers, write_result, TRACE_HEADER, TRAVELLERS_HEADER};
pub use kpi::{empirical_service_params, KpiTrace, ServiceParams, Summary, TravellerRecord, VehicleRecord};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    fifo_assign, traveller_step, vehicle_step, AgentError, AssignOptions, Dwell, Operator, Traveller, TravellerState,
    Vehicle, DEFAULT_PREFILTER_K,
};
use crate::demand::TripRequest;
use crate::network::{NetworkError, NodeId, RoadNetwork, Router};
use crate::seed::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("request {request} references node {node} outside the network")]
    UnknownNode { request: u64, node: NodeId },
    #[error("requests are not sorted by time at position {0}")]
    Unsorted(usize),
    #[error("no served travellers")]
    NoServed,
    #[error("no pickups recorded in the tail window")]
    NoTailPickups,
    #[error("line {line}: {message}")]
    BadRecord { line: u64, message: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::InvalidConfig(_) | SimError::UnknownNode { .. } | SimError::Unsorted(_) | SimError::BadRecord { .. }
        ) || matches!(self, SimError::Network(e) if e.is_validation())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleInit {
    #[default]
    UniformNodes,
    Listed(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt_s: f64,
    pub horizon_s: f64,
    pub fleet_size: usize,
    pub seed: u64,
    pub dwell_load_s: f64,
    pub dwell_unload_s: f64,
    pub prefilter_k: usize,
    pub vehicle_init: VehicleInit,
    /// Length of the steady-state window at the end of the horizon;
    /// defaults to the final third.
    pub tail_window_s: Option<f64>,
}

impl SimConfig {
    pub fn new(fleet_size: usize, horizon_s: f64, seed: u64) -> Self {
        SimConfig {
            dt_s: 1.0,
            horizon_s,
            fleet_size,
            seed,
            dwell_load_s: 0.0,
            dwell_unload_s: 0.0,
            prefilter_k: DEFAULT_PREFILTER_K,
            vehicle_init: VehicleInit::UniformNodes,
            tail_window_s: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt_s));
        }
        if !(self.horizon_s.is_finite() && self.horizon_s >= 0.0) {
            return bad(format!("horizon must be non-negative, got {}", self.horizon_s));
        }
        let n = (self.horizon_s / self.dt_s).round();
        if (n * self.dt_s - self.horizon_s).abs() > 1e-9 * self.horizon_s.max(1.0) {
            return bad(format!("horizon {} is not a multiple of dt {}", self.horizon_s, self.dt_s));
        }
        for (name, v) in [("dwell_load_s", self.dwell_load_s), ("dwell_unload_s", self.dwell_unload_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if let VehicleInit::Listed(nodes) = &self.vehicle_init {
            if nodes.len() != self.fleet_size {
                return bad(format!("{} listed positions for a fleet of {}", nodes.len(), self.fleet_size));
            }
        }
        if let Some(w) = self.tail_window_s {
            if !(w.is_finite() && w > 0.0 && w <= self.horizon_s) {
                return bad(format!("tail window {w} must lie in (0, horizon]"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon_s / self.dt_s).round() as usize
    }

    pub fn tail_window_s(&self) -> f64 {
        self.tail_window_s.unwrap_or(self.horizon_s / 3.0)
    }

    pub fn tail_start_s(&self) -> f64 {
        self.horizon_s - self.tail_window_s()
    }

    pub fn dwell(&self) -> Dwell {
        Dwell { load_s: self.dwell_load_s, unload_s: self.dwell_unload_s }
    }
}

/// First step whose start time is at or after the request time.
pub fn arrival_step(request_time_s: f64, dt_s: f64) -> u64 {
    let tol = 1e-9 * dt_s;
    let mut k = ((request_time_s - tol) / dt_s).ceil().max(0.0) as u64;
    while k > 0 && (k - 1) as f64 * dt_s + tol >= request_time_s {
        k -= 1;
    }
    while (k as f64) * dt_s + tol < request_time_s {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub trace: KpiTrace,
    pub travellers: Vec<TravellerRecord>,
    pub vehicles: Vec<VehicleRecord>,
    pub summary: Summary,
}

/// A single run's mutable state, stepped one `dt` at a time.
pub struct Simulation<'a> {
    config: SimConfig,
    router: Router<'a>,
    requests: &'a [TripRequest],
    arrival_steps: Vec<u64>,
    next_request: usize,
    travellers: Vec<Traveller>,
    vehicles: Vec<Vehicle>,
    operator: Operator,
    trace: KpiTrace,
    step: usize,
    warnings: Vec<String>,
}

impl<'a> Simulation<'a> {
    pub fn new(network: &'a RoadNetwork, requests: &'a [TripRequest], config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        for (i, r) in requests.iter().enumerate() {
            if i > 0 && r.request_time_s < requests[i - 1].request_time_s {
                return Err(SimError::Unsorted(i));
            }
            for node in [r.origin, r.destination] {
                if network.index_of(node).is_none() {
                    return Err(SimError::UnknownNode { request: r.id, node });
                }
            }
        }
        let mut warnings = Vec::new();
        let late = requests.iter().filter(|r| r.request_time_s >= config.horizon_s).count();
        if late > 0 {
            warnings.push(format!("{late} requests fall at or after the horizon and are never injected"));
        }

        let positions: Vec<usize> = match &config.vehicle_init {
            VehicleInit::UniformNodes => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0x7665_6869]));
                (0..config.fleet_size).map(|_| rng.random_range(0..network.node_count())).collect()
            }
            VehicleInit::Listed(ids) => ids.iter().map(|&id| network.resolve(id)).collect::<Result<_, _>>()?,
        };
        let vehicles: Vec<Vehicle> = positions.iter().enumerate().map(|(i, &n)| Vehicle::new(i, n)).collect();
        let operator = Operator::new(0, (0..vehicles.len()).collect());
        let arrival_steps = requests.iter().map(|r| arrival_step(r.request_time_s, config.dt_s)).collect();
        let steps = config.steps();
        Ok(Simulation {
            router: Router::new(network),
            requests,
            arrival_steps,
            next_request: 0,
            travellers: Vec::with_capacity(requests.len()),
            vehicles,
            operator,
            trace: KpiTrace::with_capacity(config.dt_s, steps),
            step: 0,
            warnings,
            config,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.steps()
    }

    pub fn now_s(&self) -> f64 {
        self.step as f64 * self.config.dt_s
    }

    pub fn travellers(&self) -> &[Traveller] {
        &self.travellers
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn trace(&self) -> &KpiTrace {
        &self.trace
    }

    /// Inject, assign, move vehicles, update travellers, record.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.is_finished() {
            return Ok(());
        }
        let now = self.now_s();
        let dt = self.config.dt_s;

        let mut arrivals = 0;
        while self.next_request < self.requests.len() && self.arrival_steps[self.next_request] <= self.step as u64 {
            let ix = self.travellers.len();
            self.travellers.push(Traveller::new(ix, self.requests[self.next_request].clone()));
            self.operator.enqueue(&self.travellers, ix)?;
            self.next_request += 1;
            arrivals += 1;
        }

        let opts = AssignOptions { prefilter_k: self.config.prefilter_k };
        let assigned = if self.operator.queue_len() > 0 {
            fifo_assign(&mut self.operator, &mut self.travellers, &mut self.vehicles, &mut self.router, now, opts)?
                .len()
        } else {
            0
        };

        let dwell = self.config.dwell();
        for v in &mut self.vehicles {
            for ev in vehicle_step(v, &mut self.router, dwell, now, dt)? {
                traveller_step(&mut self.travellers[ev.traveller()], &ev)?;
            }
        }

        let idle = self.vehicles.iter().filter(|v| v.is_idle()).count() as u64;
        self.trace.push(
            self.operator.queue_len() as u64,
            idle,
            self.vehicles.len() as u64 - idle,
            arrivals,
            assigned as u64,
        );
        self.step += 1;
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(self) -> SimResult {
        let network = self.router.network();
        let mut travellers: Vec<TravellerRecord> = self.travellers.iter().map(TravellerRecord::from_traveller).collect();
        travellers.extend(self.requests[self.next_request..].iter().map(TravellerRecord::pending));
        let vehicles: Vec<VehicleRecord> = self
            .vehicles
            .iter()
            .map(|v| VehicleRecord {
                id: v.id,
                odometer_m: v.odometer_m,
                trips_served: v.trips_served,
                last_node: network.node(v.node).id,
            })
            .collect();
        debug_assert!(self
            .travellers
            .iter()
            .all(|t| (t.state == TravellerState::WaitingForAssignment) == t.t_assigned.is_none()));
        let summary = Summary::compute(&self.config, &self.trace, &travellers, &vehicles, self.warnings);
        SimResult { config: self.config, trace: self.trace, travellers, vehicles, summary }
    }
}

pub fn run_simulation(
    network: &RoadNetwork,
    requests: &[TripRequest],
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    let mut sim = Simulation::new(network, requests, config.clone())?;
    sim.run_to_end()?;
    Ok(sim.finish())
}
