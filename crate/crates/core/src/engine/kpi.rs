use serde::{Deserialize, Serialize};

use super::{SimConfig, SimError, SimResult};
use crate::agents::{Traveller, TravellerState};
use crate::demand::TripRequest;
use crate::network::NodeId;

/// Per-step series. Arrivals and assignments are not written to the trace
/// file; readers rebuild them from traveller records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KpiTrace {
    pub dt_s: f64,
    pub queue_length: Vec<u64>,
    pub idle_count: Vec<u64>,
    pub busy_count: Vec<u64>,
    pub arrivals: Vec<u64>,
    pub assignments: Vec<u64>,
}

impl KpiTrace {
    pub fn with_capacity(dt_s: f64, steps: usize) -> Self {
        KpiTrace {
            dt_s,
            queue_length: Vec::with_capacity(steps),
            idle_count: Vec::with_capacity(steps),
            busy_count: Vec::with_capacity(steps),
            arrivals: Vec::with_capacity(steps),
            assignments: Vec::with_capacity(steps),
        }
    }

    pub(crate) fn push(&mut self, queue: u64, idle: u64, busy: u64, arrivals: u64, assignments: u64) {
        self.queue_length.push(queue);
        self.idle_count.push(idle);
        self.busy_count.push(busy);
        self.arrivals.push(arrivals);
        self.assignments.push(assignments);
    }

    pub fn len(&self) -> usize {
        self.queue_length.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue_length.is_empty()
    }

    /// First step violating idle + busy = fleet size, if any.
    pub fn conservation_violation(&self, fleet_size: u64) -> Option<usize> {
        (0..self.len()).find(|&k| self.idle_count[k] + self.busy_count[k] != fleet_size)
    }

    /// First step where the queue is not previous + arrivals - assignments.
    pub fn flow_violation(&self) -> Option<usize> {
        let mut prev = 0i128;
        for k in 0..self.len() {
            let expect = prev + self.arrivals[k] as i128 - self.assignments[k] as i128;
            if expect != self.queue_length[k] as i128 {
                return Some(k);
            }
            prev = expect;
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravellerRecord {
    pub id: u64,
    pub request_time_s: f64,
    pub assignment_wait_s: Option<f64>,
    pub pickup_wait_s: Option<f64>,
    pub trip_time_s: Option<f64>,
    pub served: bool,
}

impl TravellerRecord {
    pub(crate) fn from_traveller(t: &Traveller) -> Self {
        TravellerRecord {
            id: t.request.id,
            request_time_s: t.request.request_time_s,
            assignment_wait_s: t.assignment_wait_s(),
            pickup_wait_s: t.pickup_wait_s(),
            trip_time_s: t.trip_time_s(),
            served: t.state == TravellerState::Served,
        }
    }

    pub(crate) fn pending(r: &TripRequest) -> Self {
        TravellerRecord {
            id: r.id,
            request_time_s: r.request_time_s,
            assignment_wait_s: None,
            pickup_wait_s: None,
            trip_time_s: None,
            served: false,
        }
    }

    pub fn t_assigned_s(&self) -> Option<f64> {
        self.assignment_wait_s.map(|w| self.request_time_s + w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: usize,
    pub odometer_m: f64,
    pub trips_served: u64,
    pub last_node: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub fleet_size: usize,
    pub steps: usize,
    pub total_requests: usize,
    pub served: usize,
    pub in_flight: usize,
    pub unserved: usize,
    pub mean_queue_length: f64,
    pub max_queue_length: u64,
    pub mean_assignment_wait_s: Option<f64>,
    pub mean_pickup_wait_s: Option<f64>,
    pub max_pickup_wait_s: Option<f64>,
    pub mean_trip_time_s: Option<f64>,
    pub tail_start_s: f64,
    pub tail_mean_queue_length: f64,
    pub tail_mean_assignment_wait_s: Option<f64>,
    pub tail_mean_pickup_wait_s: Option<f64>,
    pub tail_max_pickup_wait_s: Option<f64>,
    pub lambda_per_h: f64,
    pub empirical_rho: Option<f64>,
    pub total_distance_km: f64,
    pub warnings: Vec<String>,
    pub config: SimConfig,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn max(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

fn in_tail(r: &TravellerRecord, tail_start_s: f64) -> bool {
    r.t_assigned_s().is_some_and(|t| t >= tail_start_s)
}

impl Summary {
    pub(crate) fn compute(
        config: &SimConfig,
        trace: &KpiTrace,
        travellers: &[TravellerRecord],
        vehicles: &[VehicleRecord],
        warnings: Vec<String>,
    ) -> Self {
        let served = travellers.iter().filter(|t| t.served).count();
        let assigned = travellers.iter().filter(|t| t.assignment_wait_s.is_some()).count();
        let tail_start_s = config.tail_start_s();
        let tail_first_step = ((tail_start_s / config.dt_s).round() as usize).min(trace.len());
        let tail_queue = &trace.queue_length[tail_first_step..];
        let tail = || travellers.iter().filter(move |r| in_tail(r, tail_start_s));
        let served_trip = || travellers.iter().filter(|r| r.served).filter_map(|r| r.trip_time_s);

        let mut summary = Summary {
            seed: config.seed,
            fleet_size: config.fleet_size,
            steps: trace.len(),
            total_requests: travellers.len(),
            served,
            in_flight: assigned - served,
            unserved: travellers.len() - assigned,
            mean_queue_length: mean(trace.queue_length.iter().map(|&q| q as f64)).unwrap_or(0.0),
            max_queue_length: trace.queue_length.iter().copied().max().unwrap_or(0),
            mean_assignment_wait_s: mean(travellers.iter().filter_map(|r| r.assignment_wait_s)),
            mean_pickup_wait_s: mean(travellers.iter().filter_map(|r| r.pickup_wait_s)),
            max_pickup_wait_s: max(travellers.iter().filter_map(|r| r.pickup_wait_s)),
            mean_trip_time_s: mean(served_trip()),
            tail_start_s,
            tail_mean_queue_length: mean(tail_queue.iter().map(|&q| q as f64)).unwrap_or(0.0),
            tail_mean_assignment_wait_s: mean(tail().filter_map(|r| r.assignment_wait_s)),
            tail_mean_pickup_wait_s: mean(tail().filter_map(|r| r.pickup_wait_s)),
            tail_max_pickup_wait_s: max(tail().filter_map(|r| r.pickup_wait_s)),
            lambda_per_h: measured_lambda(config, travellers),
            empirical_rho: None,
            total_distance_km: vehicles.iter().map(|v| v.odometer_m).sum::<f64>() / 1000.0,
            warnings,
            config: config.clone(),
        };
        if let (Some(t), Some(tp)) = (summary.mean_trip_time_s, summary.tail_mean_pickup_wait_s) {
            if config.fleet_size > 0 {
                summary.empirical_rho =
                    Some(summary.lambda_per_h / config.fleet_size as f64 * (t + tp) / 3600.0);
            }
        }
        summary
    }
}

fn measured_lambda(config: &SimConfig, travellers: &[TravellerRecord]) -> f64 {
    if config.horizon_s <= 0.0 {
        return 0.0;
    }
    let n = travellers.iter().filter(|r| r.request_time_s < config.horizon_s).count();
    n as f64 / (config.horizon_s / 3600.0)
}

/// Measured service inputs in hours and requests per hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceParams {
    pub t_bar_h: f64,
    pub t_bar_p_h: f64,
    pub lambda_per_h: f64,
}

/// Mean trip time over served travellers, mean pickup wait over the tail
/// window, and the request rate over the horizon.
pub fn empirical_service_params(result: &SimResult) -> Result<ServiceParams, SimError> {
    let t_bar = mean(result.travellers.iter().filter(|r| r.served).filter_map(|r| r.trip_time_s))
        .ok_or(SimError::NoServed)?;
    let tail_start = result.config.tail_start_s();
    let t_bar_p = mean(
        result
            .travellers
            .iter()
            .filter(|r| in_tail(r, tail_start))
            .filter_map(|r| r.pickup_wait_s),
    )
    .ok_or(SimError::NoTailPickups)?;
    Ok(ServiceParams {
        t_bar_h: t_bar / 3600.0,
        t_bar_p_h: t_bar_p / 3600.0,
        lambda_per_h: measured_lambda(&result.config, &result.travellers),
    })
}
