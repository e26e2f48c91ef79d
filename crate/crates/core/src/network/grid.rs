use super::{CoordinateSystem, HighwayClass, LinkSpec, NetworkError, NodeId, RoadNetwork, RoadNode};

/// Bidirectional Manhattan grid in planar metres. Node `r * cols + c` sits
/// at `(c * block_m, r * block_m)`.
pub fn generate_grid(
    rows: usize,
    cols: usize,
    block_m: f64,
    speed_kmh: f64,
) -> Result<RoadNetwork, NetworkError> {
    if rows < 2 || cols < 2 {
        return Err(NetworkError::InvalidParameter(format!(
            "grid needs at least 2x2 nodes, got {rows}x{cols}"
        )));
    }
    if !(block_m.is_finite() && block_m > 0.0) {
        return Err(NetworkError::InvalidParameter(format!("block length {block_m} m")));
    }
    if !(speed_kmh.is_finite() && speed_kmh > 0.0) {
        return Err(NetworkError::InvalidParameter(format!("speed {speed_kmh} km/h")));
    }
    let id = |r: usize, c: usize| NodeId((r * cols + c) as u64);
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(RoadNode {
                id: id(r, c),
                x: c as f64 * block_m,
                y: r as f64 * block_m,
            });
        }
    }
    let mut links = Vec::with_capacity(4 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let neighbours = [
                (c + 1 < cols).then(|| (r, c + 1)),
                (r + 1 < rows).then(|| (r + 1, c)),
                (c > 0).then(|| (r, c.wrapping_sub(1))),
                (r > 0).then(|| (r.wrapping_sub(1), c)),
            ];
            for (nr, nc) in neighbours.into_iter().flatten() {
                links.push(LinkSpec {
                    from: id(r, c),
                    to: id(nr, nc),
                    length_m: block_m,
                    speed_kmh,
                    class: HighwayClass::Residential,
                });
            }
        }
    }
    RoadNetwork::new(CoordinateSystem::PlanarM, nodes, links)
}
