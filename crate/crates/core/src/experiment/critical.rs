use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{arrival_rate_per_h, run_sizes, ExperimentError, SizeOutcome, SweepSpec};
use crate::demand::TripRequest;
use crate::exec::{self, Execution};
use crate::network::{estimate_circuity, RoadNetwork, Router};
use crate::queueing::{min_fleet_base, min_fleet_fluid, FluidFleetSize, PickupModel};
use crate::seed::derive_seed;

const CIRCUITY_SAMPLES: usize = 2000;
const FLUID_DT_H: f64 = 1.0 / 60.0;
const SAFETY_FACTOR: u64 = 2;

/// Outcome of a bisection: the discontinuity bracket and every size probed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bisection {
    pub unstable: usize,
    pub stable: usize,
    pub probed: Vec<(usize, bool)>,
}

impl Bisection {
    pub fn c_star(&self) -> usize {
        self.stable
    }
}

/// Bisects on fleet size, assuming `probe(lo)` is unstable and `probe(hi)`
/// stable; both ends are checked first.
pub fn bisect_critical<F>(lo: usize, hi: usize, mut probe: F) -> Result<Bisection, ExperimentError>
where
    F: FnMut(usize) -> Result<bool, ExperimentError>,
{
    if lo >= hi {
        return Err(ExperimentError::InvalidSpec(format!("bisection needs lo < hi, got [{lo}, {hi}]")));
    }
    let mut probed = Vec::new();
    let mut check = |c: usize, probed: &mut Vec<(usize, bool)>| -> Result<bool, ExperimentError> {
        let s = probe(c)?;
        probed.push((c, s));
        Ok(s)
    };
    let lo_stable = check(lo, &mut probed)?;
    let hi_stable = check(hi, &mut probed)?;
    if lo_stable || !hi_stable {
        return Err(ExperimentError::InvertedBracket { lo, lo_stable, hi, hi_stable, outcomes: None });
    }
    let (mut unstable, mut stable) = (lo, hi);
    while stable - unstable > 1 {
        let mid = unstable + (stable - unstable) / 2;
        if check(mid, &mut probed)? {
            stable = mid;
        } else {
            unstable = mid;
        }
    }
    Ok(Bisection { unstable, stable, probed })
}

/// Analytic inputs behind the default bisection bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketEstimate {
    pub lambda_per_h: f64,
    /// Mean routed trip time over the requests.
    pub t_bar_h: f64,
    pub area_km2: f64,
    pub phi: f64,
    pub v_bar_kmh: f64,
    pub base_fleet: u64,
    pub fluid: FluidFleetSize,
    pub c_lo: usize,
    pub c_hi: usize,
}

impl BracketEstimate {
    pub fn pickup_model(&self) -> Result<PickupModel, ExperimentError> {
        Ok(PickupModel::new(self.area_km2, 1.0, self.phi, self.v_bar_kmh)?)
    }
}

/// Pickup model of a network: configured or hull area, configured or
/// sampled circuity, length-weighted mean speed and ψ = 1.
pub fn network_pickup_model(network: &RoadNetwork, seed: u64, exec: Execution) -> Result<PickupModel, ExperimentError> {
    let area = network.area_km2()?;
    let phi = match network.phi_override() {
        Some(phi) => phi,
        None => estimate_circuity(network, CIRCUITY_SAMPLES, derive_seed(seed, &[0x70_68_69]), exec)?,
    };
    Ok(PickupModel::new(area, 1.0, phi, network.mean_speed_kmh())?)
}

/// `c_lo = ceil(λ t̄)` and `c_hi` = twice the fluid-model minimum fleet.
pub fn estimate_bracket(
    network: &RoadNetwork,
    requests: &[TripRequest],
    horizon_s: f64,
    seed: u64,
    exec: Execution,
) -> Result<BracketEstimate, ExperimentError> {
    let lambda = arrival_rate_per_h(requests, horizon_s);
    if requests.is_empty() || lambda <= 0.0 {
        return Err(ExperimentError::InvalidSpec("bracket estimate needs requests within the horizon".into()));
    }
    let times = exec::map_init(
        exec,
        requests,
        || Router::new(network),
        |router, r| -> Result<f64, ExperimentError> {
            let o = network.resolve(r.origin)?;
            let d = network.resolve(r.destination)?;
            Ok(router.travel_time_s(o, d)?)
        },
    );
    let total: f64 = times.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum();
    let t_bar_h = total / requests.len() as f64 / 3600.0;

    let model = network_pickup_model(network, seed, exec)?;
    let fluid_horizon_h = ((horizon_s / 60.0).ceil() / 60.0).max(FLUID_DT_H);
    let fluid = min_fleet_fluid(lambda, t_bar_h, &model, FLUID_DT_H, fluid_horizon_h)?;
    let base = min_fleet_base(lambda, 1.0 / t_bar_h).ceiling;
    let c_lo = base.max(1) as usize;
    let c_hi = ((fluid.c0 * SAFETY_FACTOR) as usize).max(c_lo + 1);
    Ok(BracketEstimate {
        lambda_per_h: lambda,
        t_bar_h,
        area_km2: model.area_km2,
        phi: model.phi,
        v_bar_kmh: model.v_bar_kmh,
        base_fleet: base,
        fluid,
        c_lo,
        c_hi,
    })
}

/// Bisection by simulation. Missing bracket ends come from
/// [`estimate_bracket`]. Returns the estimate (when computed), the
/// bisection and every probed size's outcome.
#[allow(clippy::type_complexity)]
pub fn find_critical_fleet_size(
    network: &RoadNetwork,
    requests: &[TripRequest],
    spec: &SweepSpec,
    lo: Option<usize>,
    hi: Option<usize>,
) -> Result<(Option<BracketEstimate>, (Bisection, Vec<SizeOutcome>)), ExperimentError> {
    let estimate = match (lo, hi) {
        (Some(_), Some(_)) => None,
        _ => Some(estimate_bracket(network, requests, spec.base.horizon_s, spec.base.seed, spec.execution)?),
    };
    let lo = lo.or(estimate.as_ref().map(|e| e.c_lo)).expect("lower end");
    let hi = hi.or(estimate.as_ref().map(|e| e.c_hi)).expect("upper end");
    if lo == 0 || lo >= hi {
        return Err(ExperimentError::InvalidSpec(format!("bisection needs 0 < lo < hi, got [{lo}, {hi}]")));
    }

    let mut cache: BTreeMap<usize, SizeOutcome> = BTreeMap::new();
    for out in run_sizes(network, requests, spec, &[lo, hi]) {
        cache.insert(out.fleet_size, out);
    }
    let result = bisect_critical(lo, hi, |c| {
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(c) {
            slot.insert(run_sizes(network, requests, spec, &[c]).pop().expect("one outcome"));
        }
        let out = &cache[&c];
        match &out.error {
            Some(e) => Err(ExperimentError::RunFailed(c, e.clone())),
            None => Ok(out.stable),
        }
    });
    match result {
        Ok(b) => Ok((estimate, (b, cache.into_values().collect()))),
        Err(ExperimentError::InvertedBracket { lo, lo_stable, hi, hi_stable, .. }) => {
            let pair = (cache.remove(&lo).expect("probed"), cache.remove(&hi).expect("probed"));
            Err(ExperimentError::InvertedBracket { lo, lo_stable, hi, hi_stable, outcomes: Some(Box::new(pair)) })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_bracket() {
        let mut calls = 0;
        let b = bisect_critical(1, 1000, |c| {
            calls += 1;
            Ok(c >= 37)
        })
        .unwrap();
        assert_eq!((b.unstable, b.stable), (36, 37));
        assert_eq!(b.c_star(), 37);
        assert!(calls <= 2 + 10);
        assert_eq!(b.probed[..2], [(1, false), (1000, true)]);
    }

    #[test]
    fn adjacent_ends() {
        let b = bisect_critical(36, 37, |c| Ok(c >= 37)).unwrap();
        assert_eq!((b.unstable, b.stable, b.probed.len()), (36, 37, 2));
    }

    #[test]
    fn inverted_ends_rejected() {
        assert!(matches!(
            bisect_critical(40, 50, |c| Ok(c >= 37)),
            Err(ExperimentError::InvertedBracket { lo: 40, lo_stable: true, hi: 50, hi_stable: true, .. })
        ));
        assert!(matches!(bisect_critical(10, 20, |_| Ok(false)), Err(ExperimentError::InvertedBracket { .. })));
        assert!(matches!(bisect_critical(5, 5, |_| Ok(true)), Err(ExperimentError::InvalidSpec(_))));
    }
}
