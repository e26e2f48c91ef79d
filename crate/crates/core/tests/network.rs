use std::collections::BTreeSet;

use petgraph::graph::{DiGraph, NodeIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fleetsim::network::{
    generate_grid, strongly_connected_components, CoordinateSystem, HighwayClass, LinkSpec, NodeId, RoadNetwork,
    RoadNode, Router,
};

fn to_petgraph(net: &RoadNetwork) -> DiGraph<(), f64> {
    let mut g = DiGraph::new();
    for _ in 0..net.node_count() {
        g.add_node(());
    }
    for l in net.links() {
        g.add_edge(NodeIndex::new(l.from), NodeIndex::new(l.to), l.travel_time_s());
    }
    g
}

fn random_network(rng: &mut ChaCha8Rng, n: u64, m: usize) -> RoadNetwork {
    let nodes = (0..n)
        .map(|i| RoadNode { id: NodeId(i), x: rng.random_range(0.0..5000.0), y: rng.random_range(0.0..5000.0) })
        .collect();
    let mut links = Vec::new();
    while links.len() < m {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            links.push(LinkSpec {
                from: NodeId(a),
                to: NodeId(b),
                length_m: rng.random_range(20.0..900.0),
                speed_kmh: rng.random_range(15.0..60.0),
                class: HighwayClass::Other,
            });
        }
    }
    RoadNetwork::new(CoordinateSystem::PlanarM, nodes, links).unwrap()
}

#[test]
fn components_match_tarjan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let net = random_network(&mut rng, 60, 90);
        let ours: BTreeSet<BTreeSet<usize>> =
            strongly_connected_components(&net).into_iter().map(|c| c.into_iter().collect()).collect();
        let theirs: BTreeSet<BTreeSet<usize>> = petgraph::algo::tarjan_scc(&to_petgraph(&net))
            .into_iter()
            .map(|c| c.into_iter().map(|ix| ix.index()).collect())
            .collect();
        assert_eq!(ours, theirs);
    }
}

#[test]
fn astar_matches_dijkstra_on_irregular_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let net = random_network(&mut rng, 80, 400);
        let g = to_petgraph(&net);
        let mut router = Router::new(&net);
        for o in 0..net.node_count() {
            let dist = petgraph::algo::dijkstra(&g, NodeIndex::new(o), None, |e| *e.weight());
            for d in 0..net.node_count() {
                match dist.get(&NodeIndex::new(d)) {
                    Some(&t) => {
                        let got = router.travel_time_s(o, d).unwrap();
                        assert!((got - t).abs() <= 1e-9 * t.max(1.0), "{o}->{d}: {got} vs {t}");
                    }
                    None => assert!(router.travel_time_s(o, d).is_err()),
                }
            }
        }
    }
}

#[test]
fn grid_paths_follow_their_links() {
    let net = generate_grid(15, 15, 120.0, 30.0).unwrap();
    let mut router = Router::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let (o, d) = (rng.random_range(0..225), rng.random_range(0..225));
        let path = router.shortest_path(o, d).unwrap();
        assert_eq!((path.origin(), path.destination()), (o, d));
        let len: f64 = path.links.iter().map(|&l| net.link(l).length_m).sum();
        assert!((len - path.total_distance_m).abs() < 1e-9);
        let manhattan = (net.node(o).x - net.node(d).x).abs() + (net.node(o).y - net.node(d).y).abs();
        assert!((len - manhattan).abs() < 1e-6);
    }
}
