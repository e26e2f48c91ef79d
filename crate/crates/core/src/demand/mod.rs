//! Traveller demand: Poisson arrivals, origin–destination sampling, IPF
//! fitting of zonal OD matrices and the request file format.

mod io;
mod ipf;
mod zonal;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NodeId, RoadNetwork};
use crate::seed::derive_seed;

pub use io::{load_requests, read_requests, write_requests, write_requests_to};
pub use ipf::{ipf_fit, IpfFit, IPF_DEFAULT_MAX_ITERATIONS, IPF_DEFAULT_TOLERANCE};
pub use zonal::{sample_od_zonal, OdMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub id: u64,
    pub request_time_s: f64,
    pub origin: NodeId,
    pub destination: NodeId,
    pub party_size: u32,
}

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("marginal totals differ: rows sum to {rows}, columns to {cols}")]
    InconsistentMarginals { rows: f64, cols: f64 },
    #[error("infeasible zero structure: {0}")]
    InfeasibleZeros(String),
    #[error("IPF did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("line {line}: {message}")]
    BadRecord { line: u64, message: String },
    #[error("cannot draw distinct origin and destination: {0}")]
    ImpossiblePair(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DemandError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, DemandError::Io(_) | DemandError::NoConvergence { .. })
    }
}

/// Arrival instants in seconds over `[0, horizon)`, with exponential
/// inter-arrival gaps of mean `3600 / λ` s.
pub fn sample_arrival_times(
    lambda_per_h: f64,
    horizon_h: f64,
    rng_seed: u64,
) -> Result<Vec<f64>, DemandError> {
    if !(lambda_per_h > 0.0 && lambda_per_h.is_finite()) {
        return Err(DemandError::InvalidParameter(format!("lambda {lambda_per_h}/h")));
    }
    if !(horizon_h > 0.0 && horizon_h.is_finite()) {
        return Err(DemandError::InvalidParameter(format!("horizon {horizon_h} h")));
    }
    let horizon_s = horizon_h * 3600.0;
    let gap = Exp::new(lambda_per_h / 3600.0)
        .map_err(|e| DemandError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut times = Vec::with_capacity((lambda_per_h * horizon_h * 1.1) as usize + 8);
    let mut t = 0.0;
    loop {
        let next = t + gap.sample(&mut rng);
        if next >= horizon_s {
            break;
        }
        if next > t {
            times.push(next);
            t = next;
        }
    }
    Ok(times)
}

/// `n` origin–destination pairs drawn uniformly over ordered pairs of
/// distinct nodes.
pub fn sample_od_uniform(
    network: &RoadNetwork,
    rng_seed: u64,
    n: usize,
) -> Result<Vec<(NodeId, NodeId)>, DemandError> {
    let count = network.node_count();
    if count < 2 {
        return Err(DemandError::InvalidParameter(
            "uniform OD sampling needs at least two nodes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..n)
        .map(|_| {
            let o = rng.random_range(0..count);
            let mut d = rng.random_range(0..count - 1);
            if d >= o {
                d += 1;
            }
            (network.node(o).id, network.node(d).id)
        })
        .collect())
}

/// Zips arrival times with OD pairs into requests numbered from zero.
pub fn build_requests(times: &[f64], pairs: &[(NodeId, NodeId)]) -> Vec<TripRequest> {
    times
        .iter()
        .zip(pairs)
        .enumerate()
        .map(|(i, (&t, &(origin, destination)))| TripRequest {
            id: i as u64,
            request_time_s: t,
            origin,
            destination,
            party_size: 1,
        })
        .collect()
}

/// OD sampling strategy for [`generate_demand`].
#[derive(Debug, Clone)]
pub enum OdSampling<'a> {
    Uniform,
    Zonal(&'a OdMatrix),
}

/// Constant-rate demand over a horizon. Arrival and OD streams use seeds
/// derived from `seed`.
pub fn generate_demand(
    network: &RoadNetwork,
    lambda_per_h: f64,
    horizon_h: f64,
    seed: u64,
    od: OdSampling<'_>,
) -> Result<Vec<TripRequest>, DemandError> {
    let times = sample_arrival_times(lambda_per_h, horizon_h, derive_seed(seed, &[1]))?;
    let od_seed = derive_seed(seed, &[2]);
    let pairs = match od {
        OdSampling::Uniform => sample_od_uniform(network, od_seed, times.len())?,
        OdSampling::Zonal(matrix) => {
            if let Some(missing) = matrix.nodes().find(|&id| network.index_of(id).is_none()) {
                return Err(DemandError::InvalidParameter(format!(
                    "zone node {missing} is not in the network"
                )));
            }
            sample_od_zonal(matrix, od_seed, times.len())?
        }
    };
    Ok(build_requests(&times, &pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_grid;

    #[test]
    fn arrivals_strictly_increasing_within_horizon() {
        let times = sample_arrival_times(1000.0, 3.0, 42).unwrap();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&t| (0.0..3.0 * 3600.0).contains(&t)));
        assert_eq!(times, sample_arrival_times(1000.0, 3.0, 42).unwrap());
    }

    #[test]
    fn arrival_counts_match_poisson_expectation() {
        // mean 3000, sd sqrt(3000) ≈ 54.8
        for seed in 0..20 {
            let n = sample_arrival_times(1000.0, 3.0, seed).unwrap().len() as f64;
            assert!((n - 3000.0).abs() <= 164.0, "seed {seed}: {n}");
        }
    }

    #[test]
    fn mean_gap_one_second() {
        let times = sample_arrival_times(3600.0, 100_000.0 / 3600.0, 5).unwrap();
        let mean_gap = times.last().unwrap() / times.len() as f64;
        assert!((mean_gap - 1.0).abs() < 0.05, "{mean_gap}");
        assert!(times.len() > 90_000);
    }

    #[test]
    fn tiny_horizon_may_be_empty() {
        let times = sample_arrival_times(0.5, 0.0001, 1).unwrap();
        assert!(times.is_empty());
        assert!(sample_arrival_times(0.0, 1.0, 1).is_err());
        assert!(sample_arrival_times(1.0, -1.0, 1).is_err());
    }

    #[test]
    fn two_node_pairs() {
        let net = generate_grid(2, 2, 100.0, 30.0).unwrap();
        let pairs = sample_od_uniform(&net, 3, 500).unwrap();
        assert!(pairs.iter().all(|(o, d)| o != d));
        assert_eq!(pairs, sample_od_uniform(&net, 3, 500).unwrap());
    }

    #[test]
    fn uniform_od_chi_square() {
        let net = generate_grid(2, 5, 100.0, 30.0).unwrap();
        let draws = 100_000;
        let pairs = sample_od_uniform(&net, 11, draws).unwrap();
        let mut origin = [0f64; 10];
        let mut dest = [0f64; 10];
        for (o, d) in &pairs {
            origin[o.0 as usize] += 1.0;
            dest[d.0 as usize] += 1.0;
        }
        let expected = draws as f64 / 10.0;
        let chi = |counts: &[f64]| counts.iter().map(|c| (c - expected).powi(2) / expected).sum::<f64>();
        // chi-square with 9 degrees of freedom, 1% critical value
        assert!(chi(&origin) < 21.666, "{}", chi(&origin));
        assert!(chi(&dest) < 21.666, "{}", chi(&dest));
    }

    #[test]
    fn generated_demand_is_sorted_and_valid() {
        let net = generate_grid(5, 5, 100.0, 30.0).unwrap();
        let reqs = generate_demand(&net, 500.0, 1.0, 9, OdSampling::Uniform).unwrap();
        assert!(reqs.windows(2).all(|w| w[0].request_time_s < w[1].request_time_s));
        assert!(reqs.iter().all(|r| r.origin != r.destination && r.party_size == 1));
    }
}
