use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CoordinateSystem, DropReport, HighwayClass, LinkSpec, NetworkError, NodeId, RoadNetwork,
    RoadNode,
};

/// On-disk network document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub coordinate_system: CoordinateSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_km2_override: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_override: Option<f64>,
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRecord {
    pub from: u64,
    pub to: u64,
    pub length_m: f64,
    pub speed_kmh: f64,
    pub class: HighwayClass,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<RoadNetwork, NetworkError> {
        if let Some(area) = self.area_km2_override {
            if !(area.is_finite() && area > 0.0) {
                return Err(NetworkError::InvalidParameter(format!(
                    "area_km2_override must be positive, got {area}"
                )));
            }
        }
        if let Some(phi) = self.phi_override {
            if !(phi.is_finite() && phi >= 1.0) {
                return Err(NetworkError::InvalidParameter(format!(
                    "phi_override must be >= 1, got {phi}"
                )));
            }
        }
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| RoadNode { id: NodeId(n.id), x: n.x, y: n.y })
            .collect();
        let links = self
            .links
            .into_iter()
            .map(|l| LinkSpec {
                from: NodeId(l.from),
                to: NodeId(l.to),
                length_m: l.length_m,
                speed_kmh: l.speed_kmh,
                class: l.class,
            })
            .collect();
        Ok(RoadNetwork::new(self.coordinate_system, nodes, links)?
            .with_area_override(self.area_km2_override)
            .with_phi_override(self.phi_override))
    }

    pub fn from_network(network: &RoadNetwork) -> Self {
        Self {
            coordinate_system: network.coordinate_system(),
            area_km2_override: network.area_km2_override(),
            phi_override: network.phi_override(),
            nodes: network
                .nodes()
                .iter()
                .map(|n| NodeRecord { id: n.id.0, x: n.x, y: n.y })
                .collect(),
            links: network
                .links()
                .iter()
                .map(|l| LinkRecord {
                    from: network.node(l.from).id.0,
                    to: network.node(l.to).id.0,
                    length_m: l.length_m,
                    speed_kmh: l.free_speed_kmh,
                    class: l.class,
                })
                .collect(),
        }
    }
}

/// Parses a network document and restricts it to its largest strongly
/// connected component.
pub fn parse_network(json: &str) -> Result<(RoadNetwork, DropReport), NetworkError> {
    let file: NetworkFile = serde_json::from_str(json)?;
    file.into_network()?.restrict_to_largest_scc()
}

pub fn load_network(path: impl AsRef<Path>) -> Result<(RoadNetwork, DropReport), NetworkError> {
    parse_network(&fs::read_to_string(path)?)
}

/// Writes free-flow speeds; speed reductions are not persisted.
pub fn save_network(path: impl AsRef<Path>, network: &RoadNetwork) -> Result<(), NetworkError> {
    let json = serde_json::to_string_pretty(&NetworkFile::from_network(network))?;
    fs::write(path, json + "\n")?;
    Ok(())
}
