use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::DemandError;
use crate::network::NodeId;

const MAX_REDRAWS: usize = 10_000;

/// Zonal origin–destination weights with each zone's member nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdMatrix {
    pub zones: Vec<u64>,
    /// `cells[i][j]`: weight of trips from `zones[i]` to `zones[j]`.
    pub cells: Vec<Vec<f64>>,
    pub zone_nodes: BTreeMap<u64, Vec<NodeId>>,
}

impl OdMatrix {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DemandError> {
        let matrix: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        matrix.validate()?;
        Ok(matrix)
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        let k = self.zones.len();
        if self.cells.len() != k || self.cells.iter().any(|r| r.len() != k) {
            return Err(DemandError::InvalidParameter(format!(
                "OD matrix must be {k}x{k} to match its zone list"
            )));
        }
        if self.cells.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DemandError::InvalidParameter("OD cells must be non-negative".into()));
        }
        for zone in &self.zones {
            match self.zone_nodes.get(zone) {
                Some(nodes) if !nodes.is_empty() => {}
                _ => {
                    return Err(DemandError::InvalidParameter(format!(
                        "zone {zone} maps to no network node"
                    )))
                }
            }
        }
        if self.cells.iter().flatten().all(|&v| v == 0.0) {
            return Err(DemandError::InvalidParameter("OD matrix is all zero".into()));
        }
        Ok(())
    }

    fn members(&self, zone_ix: usize) -> &[NodeId] {
        &self.zone_nodes[&self.zones[zone_ix]]
    }

    /// Every node referenced by a zone.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.zone_nodes.values().flatten().copied()
    }
}

/// Draws `n` node pairs: the zone pair proportionally to its cell weight,
/// then a uniform node inside each zone, redrawing nodes until origin and
/// destination differ.
pub fn sample_od_zonal(
    matrix: &OdMatrix,
    rng_seed: u64,
    n: usize,
) -> Result<Vec<(NodeId, NodeId)>, DemandError> {
    matrix.validate()?;
    let k = matrix.zones.len();
    for i in 0..k {
        for j in 0..k {
            if matrix.cells[i][j] > 0.0 {
                let (o, d) = (matrix.members(i), matrix.members(j));
                let single = o[0];
                if o.iter().chain(d).all(|&x| x == single) {
                    return Err(DemandError::ImpossiblePair(format!(
                        "zones {} and {} both contain only node {single}",
                        matrix.zones[i], matrix.zones[j]
                    )));
                }
            }
        }
    }
    let weights = WeightedIndex::new(matrix.cells.iter().flatten().copied())
        .map_err(|e| DemandError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let cell = weights.sample(&mut rng);
        let (origins, dests) = (matrix.members(cell / k), matrix.members(cell % k));
        let mut drawn = None;
        for _ in 0..MAX_REDRAWS {
            let o = origins[rng.random_range(0..origins.len())];
            let d = dests[rng.random_range(0..dests.len())];
            if o != d {
                drawn = Some((o, d));
                break;
            }
        }
        pairs.push(drawn.ok_or_else(|| {
            DemandError::ImpossiblePair(format!("gave up after {MAX_REDRAWS} redraws"))
        })?);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cells: Vec<Vec<f64>>) -> OdMatrix {
        let mut zone_nodes = BTreeMap::new();
        zone_nodes.insert(1, vec![NodeId(10), NodeId(11)]);
        zone_nodes.insert(2, vec![NodeId(20), NodeId(21), NodeId(22)]);
        OdMatrix { zones: vec![1, 2], cells, zone_nodes }
    }

    #[test]
    fn single_cell_degenerate() {
        let m = matrix(vec![vec![0.0, 5.0], vec![0.0, 0.0]]);
        let pairs = sample_od_zonal(&m, 1, 1000).unwrap();
        assert!(pairs.iter().all(|(o, d)| o.0 / 10 == 1 && d.0 / 10 == 2));
    }

    #[test]
    fn weights_three_to_one() {
        let m = matrix(vec![vec![0.0, 3.0], vec![1.0, 0.0]]);
        let draws = 10_000;
        let pairs = sample_od_zonal(&m, 7, draws).unwrap();
        let first = pairs.iter().filter(|(o, _)| o.0 / 10 == 1).count() as f64;
        // binomial(10⁴, 0.75): sd ≈ 43.3
        assert!((first - 7500.0).abs() <= 3.0 * 43.3, "{first}");
    }

    #[test]
    fn diagonal_cells_never_produce_loops() {
        let m = matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let pairs = sample_od_zonal(&m, 2, 2000).unwrap();
        assert!(pairs.iter().all(|(o, d)| o != d));
    }

    #[test]
    fn single_node_diagonal_is_impossible() {
        let mut m = matrix(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        m.zone_nodes.insert(1, vec![NodeId(10)]);
        assert!(matches!(sample_od_zonal(&m, 2, 5), Err(DemandError::ImpossiblePair(_))));
    }

    #[test]
    fn all_zero_rejected() {
        let m = matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(sample_od_zonal(&m, 2, 5), Err(DemandError::InvalidParameter(_))));
    }
}
