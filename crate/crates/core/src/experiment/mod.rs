//! Fleet-size sweeps, stability classification and critical-size search.

mod critical;
mod output;
mod stability;

pub use critical::{bisect_critical, estimate_bracket, network_pickup_model, find_critical_fleet_size, Bisection, BracketEstimate};
pub use output::{write_sweep, SWEEP_CSV_HEADER};
pub use stability::{
    assess, detect_stability, StabilityCriteria, StabilityTest, StabilityVerdict, DEFAULT_LEVEL_FACTOR,
    DEFAULT_SLOPE_FRACTION,
};

use serde::{Deserialize, Serialize};

use crate::demand::TripRequest;
use crate::engine::{run_simulation, SimConfig, SimError, SimResult};
use crate::exec::{self, Execution};
use crate::network::{NetworkError, RoadNetwork};
use crate::queueing::{PickupModel, PickupWait, QueueError};
use crate::seed::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("stability window of {window_steps} steps exceeds the {trace_steps}-step trace")]
    WindowExceedsTrace { window_steps: usize, trace_steps: usize },
    #[error(
        "bracket verdicts inverted: c = {lo} is {} and c = {hi} is {}",
        verdict_word(*lo_stable),
        verdict_word(*hi_stable)
    )]
    InvertedBracket {
        lo: usize,
        lo_stable: bool,
        hi: usize,
        hi_stable: bool,
        outcomes: Option<Box<(SizeOutcome, SizeOutcome)>>,
    },
    #[error("fleet size {0} failed: {1}")]
    RunFailed(usize, String),
    #[error("no pickups recorded in the tail window")]
    NoPickups,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn verdict_word(stable: bool) -> &'static str {
    if stable {
        "stable"
    } else {
        "unstable"
    }
}

impl ExperimentError {
    pub fn is_validation(&self) -> bool {
        match self {
            ExperimentError::InvalidSpec(_) | ExperimentError::WindowExceedsTrace { .. } => true,
            ExperimentError::Sim(e) => e.is_validation(),
            ExperimentError::Network(e) => e.is_validation(),
            ExperimentError::Queue(QueueError::InvalidParameter(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FleetSizes {
    List(Vec<usize>),
    Range { min: usize, max: usize, stride: usize },
    /// Bisection between an unstable and a stable size; missing ends are
    /// estimated from the network and demand.
    Bisect { lo: Option<usize>, hi: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sizes: FleetSizes,
    /// Template run configuration; its fleet size is ignored and its seed is
    /// the base for per-run seeds.
    pub base: SimConfig,
    pub criteria: StabilityCriteria,
    pub replications: u32,
    pub execution: Execution,
}

impl SweepSpec {
    pub fn new(sizes: FleetSizes, base: SimConfig) -> Self {
        SweepSpec {
            sizes,
            base,
            criteria: StabilityCriteria::default(),
            replications: 1,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.base.validate()?;
        let bad = |m: &str| Err(ExperimentError::InvalidSpec(m.to_string()));
        if self.replications == 0 {
            return bad("replications must be >= 1");
        }
        match &self.sizes {
            FleetSizes::List(v) if v.is_empty() => return bad("fleet size list is empty"),
            FleetSizes::List(v) if v.contains(&0) => return bad("fleet sizes must be positive"),
            FleetSizes::Range { min, max, stride } if *min == 0 || min > max || *stride == 0 => {
                return bad("range needs 0 < min <= max and stride >= 1")
            }
            FleetSizes::Bisect { lo: Some(lo), hi: Some(hi) } if lo >= hi || *lo == 0 => {
                return bad("bisection needs 0 < lo < hi")
            }
            _ => {}
        }
        let c = &self.criteria;
        if let Some(w) = c.window_s {
            if !(w > 0.0 && w <= self.base.horizon_s) {
                return bad("stability window must lie in (0, horizon]");
            }
        }
        if !(c.slope_fraction >= 0.0 && c.level_factor >= 0.0) {
            return bad("stability thresholds must be non-negative");
        }
        Ok(())
    }

    /// Explicit sizes, sorted and deduplicated; empty for bisection.
    pub fn explicit_sizes(&self) -> Vec<usize> {
        let mut v = match &self.sizes {
            FleetSizes::List(v) => v.clone(),
            FleetSizes::Range { min, max, stride } => (*min..=*max).step_by(*stride).collect(),
            FleetSizes::Bisect { .. } => Vec::new(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn run_seed(&self, fleet_size: usize, replication: u32) -> u64 {
        derive_seed(self.base.seed, &[fleet_size as u64, replication as u64])
    }
}

/// Aggregated verdict for one fleet size. Stable only if every replication
/// is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeOutcome {
    pub fleet_size: usize,
    pub stable: bool,
    pub verdicts: Vec<StabilityVerdict>,
    pub error: Option<String>,
    #[serde(skip)]
    pub results: Vec<SimResult>,
}

impl SizeOutcome {
    fn mean_of(&self, f: impl Fn(&StabilityVerdict) -> Option<f64>) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.verdicts.iter().map(f).collect();
        vals.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn tail_mean_pickup_wait_s(&self) -> Option<f64> {
        self.mean_of(|v| v.tail_mean_pickup_wait_s)
    }

    pub fn empirical_rho(&self) -> Option<f64> {
        self.mean_of(|v| v.empirical_rho)
    }
}

/// Requests per hour arriving before the horizon.
pub fn arrival_rate_per_h(requests: &[TripRequest], horizon_s: f64) -> f64 {
    if horizon_s <= 0.0 {
        return 0.0;
    }
    requests.iter().filter(|r| r.request_time_s < horizon_s).count() as f64 * 3600.0 / horizon_s
}

/// Runs every (size, replication) pair, fanning out according to the spec's
/// execution mode. Run failures are recorded per size.
pub fn run_sizes(
    network: &RoadNetwork,
    requests: &[TripRequest],
    spec: &SweepSpec,
    sizes: &[usize],
) -> Vec<SizeOutcome> {
    let lambda = arrival_rate_per_h(requests, spec.base.horizon_s);
    let jobs: Vec<(usize, u32)> =
        sizes.iter().flat_map(|&c| (0..spec.replications).map(move |r| (c, r))).collect();
    let runs = exec::map(spec.execution, &jobs, |&(c, rep)| {
        let mut cfg = spec.base.clone();
        cfg.fleet_size = c;
        cfg.seed = spec.run_seed(c, rep);
        let result = run_simulation(network, requests, &cfg).map_err(ExperimentError::from)?;
        let verdict = assess(&result, lambda, &spec.criteria, rep)?;
        Ok::<_, ExperimentError>((verdict, result))
    });
    let mut runs = runs.into_iter();
    sizes
        .iter()
        .map(|&c| {
            let mut out =
                SizeOutcome { fleet_size: c, stable: true, verdicts: Vec::new(), error: None, results: Vec::new() };
            for _ in 0..spec.replications {
                match runs.next().expect("one run per job") {
                    Ok((v, r)) => {
                        out.stable &= v.stable;
                        out.verdicts.push(v);
                        out.results.push(r);
                    }
                    Err(e) => {
                        out.stable = false;
                        out.error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            out
        })
        .collect()
}

/// Eq.-style pickup model against a simulated unstable-regime run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PickupComparison {
    pub fleet_size: usize,
    /// Idle-vehicle availability used in the model: arrivals per second.
    pub v_per_s: f64,
    pub model_min: f64,
    pub sim_tail_mean_min: f64,
    pub sim_tail_max_min: f64,
    pub abs_error_pct: f64,
}

/// Compares the square-root pickup law at `V = λ/3600` with the tail pickup
/// waits of `result`.
pub fn compare_pickup_model(
    result: &SimResult,
    lambda_per_h: f64,
    model: &PickupModel,
) -> Result<PickupComparison, ExperimentError> {
    let s = &result.summary;
    let (Some(mean_s), Some(max_s)) = (s.tail_mean_pickup_wait_s, s.tail_max_pickup_wait_s) else {
        return Err(ExperimentError::NoPickups);
    };
    let v = lambda_per_h / 3600.0;
    let model_min = model.wait_h(v) * 60.0;
    let sim = mean_s / 60.0;
    Ok(PickupComparison {
        fleet_size: result.config.fleet_size,
        v_per_s: v,
        model_min,
        sim_tail_mean_min: sim,
        sim_tail_max_min: max_s / 60.0,
        abs_error_pct: (model_min - sim).abs() / sim * 100.0,
    })
}

/// Tail pickup wait and utilization either side of the stability boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discontinuity {
    pub unstable_size: usize,
    pub stable_size: usize,
    pub unstable_tail_pickup_s: Option<f64>,
    pub stable_tail_pickup_s: Option<f64>,
    pub unstable_rho: Option<f64>,
    pub stable_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub lambda_per_h: f64,
    pub criteria: StabilityCriteria,
    pub replications: u32,
    pub base_seed: u64,
    pub sizes: Vec<SizeOutcome>,
    pub bracket: Option<BracketEstimate>,
    pub critical: Option<Bisection>,
    pub discontinuity: Option<Discontinuity>,
    pub pickup_comparison: Option<PickupComparison>,
    /// A stable size followed by a larger unstable one, if any.
    pub monotonicity_violation: Option<(usize, usize)>,
}

impl SweepReport {
    /// Smallest stable size above which every size is stable.
    pub fn boundary(&self) -> Option<(Option<&SizeOutcome>, &SizeOutcome)> {
        let first_stable = self.sizes.iter().rposition(|s| !s.stable).map_or(0, |i| i + 1);
        let stable = self.sizes.get(first_stable)?;
        let unstable = first_stable.checked_sub(1).map(|i| &self.sizes[i]);
        Some((unstable, stable))
    }
}

fn monotonicity_violation(sizes: &[SizeOutcome]) -> Option<(usize, usize)> {
    let first_stable = sizes.iter().find(|s| s.stable)?;
    sizes
        .iter()
        .find(|s| s.fleet_size > first_stable.fleet_size && !s.stable && s.error.is_none())
        .map(|s| (first_stable.fleet_size, s.fleet_size))
}

/// Runs the sweep described by `spec`. Explicit sizes are run as one batch;
/// `Bisect` searches for the critical size.
pub fn sweep(network: &RoadNetwork, requests: &[TripRequest], spec: &SweepSpec) -> Result<SweepReport, ExperimentError> {
    spec.validate()?;
    let lambda = arrival_rate_per_h(requests, spec.base.horizon_s);
    let (mut sizes, bracket, critical) = match spec.sizes {
        FleetSizes::Bisect { lo, hi } => {
            let (bracket, search) = find_critical_fleet_size(network, requests, spec, lo, hi)?;
            (search.1, bracket, Some(search.0))
        }
        _ => (run_sizes(network, requests, spec, &spec.explicit_sizes()), None, None),
    };
    sizes.sort_by_key(|s| s.fleet_size);

    let mut report = SweepReport {
        lambda_per_h: lambda,
        criteria: spec.criteria,
        replications: spec.replications,
        base_seed: spec.base.seed,
        monotonicity_violation: monotonicity_violation(&sizes),
        sizes,
        bracket,
        critical,
        discontinuity: None,
        pickup_comparison: None,
    };
    if let Some((Some(unstable), stable)) = report.boundary() {
        report.discontinuity = Some(Discontinuity {
            unstable_size: unstable.fleet_size,
            stable_size: stable.fleet_size,
            unstable_tail_pickup_s: unstable.tail_mean_pickup_wait_s(),
            stable_tail_pickup_s: stable.tail_mean_pickup_wait_s(),
            unstable_rho: unstable.empirical_rho(),
            stable_rho: stable.empirical_rho(),
        });
    }
    let most_unstable = report.sizes.iter().find(|s| !s.stable && s.error.is_none());
    if let Some(run) = most_unstable.and_then(|s| s.results.first()) {
        let model = match &report.bracket {
            Some(b) => b.pickup_model()?,
            None => network_pickup_model(network, spec.base.seed, spec.execution)?,
        };
        report.pickup_comparison = compare_pickup_model(run, lambda, &model).ok();
    }
    Ok(report)
}
