use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetworkError, RoadNetwork, Router};
use crate::exec::{self, Execution};

/// Mean ratio of routed path distance to straight-line distance over
/// `n_samples` uniformly drawn node pairs. Pairs with zero straight-line
/// distance are redrawn. Deterministic for a given seed regardless of
/// execution mode.
pub fn estimate_circuity(
    network: &RoadNetwork,
    n_samples: usize,
    rng_seed: u64,
    exec: Execution,
) -> Result<f64, NetworkError> {
    if n_samples == 0 {
        return Err(NetworkError::InvalidParameter("n_samples must be >= 1".into()));
    }
    let n = network.node_count();
    if n < 2 {
        return Err(NetworkError::InvalidParameter("need at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pairs = Vec::with_capacity(n_samples);
    let mut attempts = 0usize;
    while pairs.len() < n_samples {
        attempts += 1;
        if attempts > n_samples.saturating_mul(1000) {
            return Err(NetworkError::DegenerateArea);
        }
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        if network.straight_line_m(a, b) > 0.0 {
            pairs.push((a, b));
        }
    }
    estimate_circuity_over_pairs(network, &pairs, exec)
}

/// Circuity averaged over caller-supplied pairs, e.g. the OD pairs of a
/// demand file for a demand-weighted estimate. Pairs with zero
/// straight-line distance are skipped.
pub fn estimate_circuity_over_pairs(
    network: &RoadNetwork,
    pairs: &[(usize, usize)],
    exec: Execution,
) -> Result<f64, NetworkError> {
    let ratios = exec::map_init(
        exec,
        pairs,
        || Router::new(network),
        |router, &(a, b)| -> Result<Option<f64>, NetworkError> {
            let straight = network.straight_line_m(a, b);
            if straight <= 0.0 {
                return Ok(None);
            }
            Ok(Some(router.shortest_path(a, b)?.total_distance_m / straight))
        },
    );
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in ratios {
        if let Some(r) = r? {
            sum += r;
            count += 1;
        }
    }
    if count == 0 {
        return Err(NetworkError::InvalidParameter(
            "no pair with positive straight-line distance".into(),
        ));
    }
    Ok(sum / count as f64)
}
