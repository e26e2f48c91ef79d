//! Road-network environment: nodes, directed links, routing and geometric
//! measures (area, circuity, mean speed).

mod circuity;
mod geometry;
mod grid;
mod io;
mod routing;
mod scc;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use circuity::{estimate_circuity, estimate_circuity_over_pairs};
pub use geometry::{convex_hull_area_m2, euclidean_m, haversine_m, EARTH_RADIUS_M};
pub use grid::generate_grid;
pub use io::{load_network, parse_network, save_network, LinkRecord, NetworkFile, NodeRecord};
pub use routing::{Path, Router};
pub use scc::strongly_connected_components;

/// External node identifier as it appears in network and request files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateSystem {
    /// `x` is longitude and `y` latitude, in degrees.
    #[serde(rename = "lonlat")]
    LonLat,
    /// `x` and `y` are planar metres.
    #[serde(rename = "planar_m")]
    PlanarM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighwayClass {
    Residential,
    Motorway,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

/// A directed road segment between two dense node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadLink {
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    pub free_speed_kmh: f64,
    pub class: HighwayClass,
    pub effective_speed_kmh: f64,
}

impl RoadLink {
    pub fn speed_mps(&self) -> f64 {
        self.effective_speed_kmh / 3.6
    }

    pub fn travel_time_s(&self) -> f64 {
        self.length_m / self.speed_mps()
    }
}

/// A link as supplied by a caller, with endpoints given as external ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub speed_kmh: f64,
    pub class: HighwayClass,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("node {0} has non-finite coordinates")]
    NonFiniteCoordinate(NodeId),
    #[error("link #{index} ({from} -> {to}) references unknown node {missing}")]
    UnknownNode { index: usize, from: NodeId, to: NodeId, missing: NodeId },
    #[error("link #{index} ({from} -> {to}) has invalid length {length_m} m")]
    InvalidLength { index: usize, from: NodeId, to: NodeId, length_m: f64 },
    #[error("link #{index} ({from} -> {to}) has invalid speed {speed_kmh} km/h")]
    InvalidSpeed { index: usize, from: NodeId, to: NodeId, speed_kmh: f64 },
    #[error("network is empty after restriction to its largest strongly connected component")]
    EmptyNetwork,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node index {0} is outside the network")]
    NodeOutOfRange(usize),
    #[error("unknown node id {0}")]
    UnknownNodeId(NodeId),
    #[error("no route from node {from} to node {to}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("node set is collinear or too small to span an area")]
    DegenerateArea,
    #[error("malformed network file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NetworkError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, NetworkError::Io(_) | NetworkError::Unreachable { .. })
    }
}

/// Nodes and links removed when restricting to the largest strongly
/// connected component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropReport {
    pub nodes_dropped: usize,
    pub links_dropped: usize,
}

/// Immutable road graph with a forward-star adjacency.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    coordinate_system: CoordinateSystem,
    nodes: Vec<RoadNode>,
    links: Vec<RoadLink>,
    out_offsets: Vec<usize>,
    out_links: Vec<usize>,
    index_of: HashMap<NodeId, usize>,
    area_km2_override: Option<f64>,
    phi_override: Option<f64>,
    max_speed_mps: f64,
    heuristic_scale: f64,
}

impl RoadNetwork {
    /// Builds and validates a network. No component restriction is applied.
    pub fn new(
        coordinate_system: CoordinateSystem,
        nodes: Vec<RoadNode>,
        links: Vec<LinkSpec>,
    ) -> Result<Self, NetworkError> {
        let mut index_of = HashMap::with_capacity(nodes.len());
        for (ix, node) in nodes.iter().enumerate() {
            if !(node.x.is_finite() && node.y.is_finite()) {
                return Err(NetworkError::NonFiniteCoordinate(node.id));
            }
            if index_of.insert(node.id, ix).is_some() {
                return Err(NetworkError::DuplicateNode(node.id));
            }
        }
        let mut dense = Vec::with_capacity(links.len());
        for (index, link) in links.into_iter().enumerate() {
            let lookup = |id: NodeId| {
                index_of.get(&id).copied().ok_or(NetworkError::UnknownNode {
                    index,
                    from: link.from,
                    to: link.to,
                    missing: id,
                })
            };
            let from = lookup(link.from)?;
            let to = lookup(link.to)?;
            if !(link.length_m.is_finite() && link.length_m > 0.0) {
                return Err(NetworkError::InvalidLength {
                    index,
                    from: link.from,
                    to: link.to,
                    length_m: link.length_m,
                });
            }
            if !(link.speed_kmh.is_finite() && link.speed_kmh > 0.0) {
                return Err(NetworkError::InvalidSpeed {
                    index,
                    from: link.from,
                    to: link.to,
                    speed_kmh: link.speed_kmh,
                });
            }
            dense.push(RoadLink {
                from,
                to,
                length_m: link.length_m,
                free_speed_kmh: link.speed_kmh,
                class: link.class,
                effective_speed_kmh: link.speed_kmh,
            });
        }
        Ok(Self::from_dense(coordinate_system, nodes, dense, index_of))
    }

    fn from_dense(
        coordinate_system: CoordinateSystem,
        nodes: Vec<RoadNode>,
        links: Vec<RoadLink>,
        index_of: HashMap<NodeId, usize>,
    ) -> Self {
        let mut out_offsets = vec![0usize; nodes.len() + 1];
        for link in &links {
            out_offsets[link.from + 1] += 1;
        }
        for i in 0..nodes.len() {
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut cursor = out_offsets.clone();
        let mut out_links = vec![0usize; links.len()];
        for (ix, link) in links.iter().enumerate() {
            out_links[cursor[link.from]] = ix;
            cursor[link.from] += 1;
        }
        let mut network = Self {
            coordinate_system,
            nodes,
            links,
            out_offsets,
            out_links,
            index_of,
            area_km2_override: None,
            phi_override: None,
            max_speed_mps: 0.0,
            heuristic_scale: 1.0,
        };
        network.refresh_heuristic();
        network
    }

    /// Recomputes the A* heuristic constants. The heuristic is
    /// `straight_line * scale / max_speed`, where `scale` shrinks the
    /// straight-line distance whenever a link is shorter than the distance
    /// between its endpoints, keeping the heuristic consistent.
    fn refresh_heuristic(&mut self) {
        self.max_speed_mps = self
            .links
            .iter()
            .map(RoadLink::speed_mps)
            .fold(0.0, f64::max);
        let mut scale: f64 = 1.0;
        for link in &self.links {
            let straight = self.straight_line_m(link.from, link.to);
            if straight > 0.0 {
                scale = scale.min(link.length_m / straight);
            }
        }
        // absorbs rounding in g + h comparisons
        self.heuristic_scale = scale * (1.0 - 1e-12);
    }

    pub fn with_area_override(mut self, area_km2: Option<f64>) -> Self {
        self.area_km2_override = area_km2;
        self
    }

    pub fn with_phi_override(mut self, phi: Option<f64>) -> Self {
        self.phi_override = phi;
        self
    }

    pub fn coordinate_system(&self) -> CoordinateSystem {
        self.coordinate_system
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[RoadLink] {
        &self.links
    }

    pub fn node(&self, ix: usize) -> &RoadNode {
        &self.nodes[ix]
    }

    pub fn link(&self, ix: usize) -> &RoadLink {
        &self.links[ix]
    }

    /// Indices of links leaving node `ix`.
    pub fn out_links(&self, ix: usize) -> &[usize] {
        &self.out_links[self.out_offsets[ix]..self.out_offsets[ix + 1]]
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn resolve(&self, id: NodeId) -> Result<usize, NetworkError> {
        self.index_of(id).ok_or(NetworkError::UnknownNodeId(id))
    }

    pub fn area_km2_override(&self) -> Option<f64> {
        self.area_km2_override
    }

    pub fn phi_override(&self) -> Option<f64> {
        self.phi_override
    }

    pub fn max_speed_mps(&self) -> f64 {
        self.max_speed_mps
    }

    pub(crate) fn heuristic_scale(&self) -> f64 {
        self.heuristic_scale
    }

    /// Straight-line distance between two nodes: haversine for lon/lat
    /// networks, Euclidean for planar ones.
    pub fn straight_line_m(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (&self.nodes[a], &self.nodes[b]);
        match self.coordinate_system {
            CoordinateSystem::LonLat => haversine_m((p.x, p.y), (q.x, q.y)),
            CoordinateSystem::PlanarM => euclidean_m((p.x, p.y), (q.x, q.y)),
        }
    }

    /// Distance-weighted mean effective speed: total length over total
    /// free travel time, in km/h.
    pub fn mean_speed_kmh(&self) -> f64 {
        let length: f64 = self.links.iter().map(|l| l.length_m).sum();
        let time: f64 = self.links.iter().map(RoadLink::travel_time_s).sum();
        if time > 0.0 {
            length / time * 3.6
        } else {
            0.0
        }
    }

    /// Network area in km²: the configured override if present, otherwise
    /// the convex hull of the node coordinates.
    pub fn area_km2(&self) -> Result<f64, NetworkError> {
        if let Some(area) = self.area_km2_override {
            return Ok(area);
        }
        let points = self.planar_points();
        convex_hull_area_m2(&points)
            .map(|m2| m2 / 1e6)
            .ok_or(NetworkError::DegenerateArea)
    }

    /// Node coordinates in metres. Lon/lat networks are projected with a
    /// local equirectangular projection about the mean latitude.
    pub fn planar_points(&self) -> Vec<(f64, f64)> {
        match self.coordinate_system {
            CoordinateSystem::PlanarM => self.nodes.iter().map(|n| (n.x, n.y)).collect(),
            CoordinateSystem::LonLat => {
                let lat0 = self.nodes.iter().map(|n| n.y).sum::<f64>() / self.nodes.len() as f64;
                let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
                let cos0 = lat0.to_radians().cos();
                self.nodes
                    .iter()
                    .map(|n| (n.x * k * cos0, n.y * k))
                    .collect()
            }
        }
    }

    /// Sets every link's effective speed to its free speed times the factor
    /// for its class. Always recomputes from the free speed.
    pub fn apply_speed_reduction(
        &mut self,
        residential_motorway_factor: f64,
        other_factor: f64,
    ) -> Result<(), NetworkError> {
        for (name, f) in [
            ("residential_motorway_factor", residential_motorway_factor),
            ("other_factor", other_factor),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(NetworkError::InvalidParameter(format!(
                    "{name} must be in (0, 1], got {f}"
                )));
            }
        }
        for link in &mut self.links {
            let factor = match link.class {
                HighwayClass::Residential | HighwayClass::Motorway => residential_motorway_factor,
                HighwayClass::Other => other_factor,
            };
            link.effective_speed_kmh = link.free_speed_kmh * factor;
        }
        self.refresh_heuristic();
        Ok(())
    }

    /// Restricts the network to its largest strongly connected component.
    /// Ties between equally large components go to the one containing the
    /// lowest node index.
    pub fn restrict_to_largest_scc(self) -> Result<(Self, DropReport), NetworkError> {
        let components = strongly_connected_components(&self);
        let largest = components
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.len()
                    .cmp(&b.len())
                    .then_with(|| b[0].cmp(&a[0]))
                    .then_with(|| ib.cmp(ia))
            })
            .map(|(i, _)| i);
        let Some(largest) = largest else {
            return Err(NetworkError::EmptyNetwork);
        };
        if components[largest].len() < 2 {
            return Err(NetworkError::EmptyNetwork);
        }
        let mut keep = vec![usize::MAX; self.nodes.len()];
        let mut members = components[largest].clone();
        members.sort_unstable();
        for (new_ix, &old_ix) in members.iter().enumerate() {
            keep[old_ix] = new_ix;
        }
        let nodes: Vec<RoadNode> = members.iter().map(|&i| self.nodes[i].clone()).collect();
        let links: Vec<RoadLink> = self
            .links
            .iter()
            .filter(|l| keep[l.from] != usize::MAX && keep[l.to] != usize::MAX)
            .map(|l| RoadLink {
                from: keep[l.from],
                to: keep[l.to],
                ..l.clone()
            })
            .collect();
        let report = DropReport {
            nodes_dropped: self.nodes.len() - nodes.len(),
            links_dropped: self.links.len() - links.len(),
        };
        let index_of = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let restricted = Self::from_dense(self.coordinate_system, nodes, links, index_of)
            .with_area_override(self.area_km2_override)
            .with_phi_override(self.phi_override);
        Ok((restricted, report))
    }

    /// Time-optimal path between two node indices using A*.
    pub fn shortest_path(&self, origin: usize, destination: usize) -> Result<Path, NetworkError> {
        Router::new(self).shortest_path(origin, destination)
    }
}
