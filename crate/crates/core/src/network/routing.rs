use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NetworkError, RoadNetwork};

/// A routed path. `nodes` always starts with the origin; `links[i]`
/// connects `nodes[i]` to `nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    pub total_time_s: f64,
    pub total_distance_m: f64,
}

impl Path {
    pub fn trivial(node: usize) -> Self {
        Self {
            nodes: vec![node],
            links: Vec::new(),
            total_time_s: 0.0,
            total_distance_m: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn origin(&self) -> usize {
        self.nodes[0]
    }

    pub fn destination(&self) -> usize {
        *self.nodes.last().expect("path has at least one node")
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    f: f64,
    g: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // min-heap on f, then on node index for a deterministic expansion order
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// A* router with reusable scratch buffers. Travel times are link
/// lengths over effective speeds; the heuristic is the straight-line
/// distance over the network's maximum effective speed.
pub struct Router<'a> {
    network: &'a RoadNetwork,
    g: Vec<f64>,
    parent: Vec<usize>,
    stamp: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Entry>,
}

impl<'a> Router<'a> {
    pub fn new(network: &'a RoadNetwork) -> Self {
        let n = network.node_count();
        Self {
            network,
            g: vec![f64::INFINITY; n],
            parent: vec![usize::MAX; n],
            stamp: vec![0; n],
            generation: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn network(&self) -> &'a RoadNetwork {
        self.network
    }

    fn heuristic(&self, node: usize, destination: usize) -> f64 {
        self.network.straight_line_m(node, destination) * self.network.heuristic_scale()
            / self.network.max_speed_mps()
    }

    fn next_generation(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.heap.clear();
    }

    fn best(&self, node: usize) -> f64 {
        if self.stamp[node] == self.generation {
            self.g[node]
        } else {
            f64::INFINITY
        }
    }

    pub fn shortest_path(&mut self, origin: usize, destination: usize) -> Result<Path, NetworkError> {
        let n = self.network.node_count();
        for ix in [origin, destination] {
            if ix >= n {
                return Err(NetworkError::NodeOutOfRange(ix));
            }
        }
        if origin == destination {
            return Ok(Path::trivial(origin));
        }
        self.next_generation();
        let gen = self.generation;
        self.stamp[origin] = gen;
        self.g[origin] = 0.0;
        self.parent[origin] = usize::MAX;
        self.heap.push(Entry {
            f: self.heuristic(origin, destination),
            g: 0.0,
            node: origin,
        });
        let links = self.network.links();
        let mut reached = false;
        while let Some(Entry { g, node, .. }) = self.heap.pop() {
            if g > self.best(node) {
                continue;
            }
            if node == destination {
                reached = true;
                break;
            }
            for &lix in self.network.out_links(node) {
                let link = &links[lix];
                let candidate = g + link.travel_time_s();
                if candidate < self.best(link.to) {
                    self.stamp[link.to] = gen;
                    self.g[link.to] = candidate;
                    self.parent[link.to] = lix;
                    let f = candidate + self.heuristic(link.to, destination);
                    self.heap.push(Entry {
                        f,
                        g: candidate,
                        node: link.to,
                    });
                }
            }
        }
        if !reached {
            return Err(NetworkError::Unreachable {
                from: self.network.node(origin).id,
                to: self.network.node(destination).id,
            });
        }
        let mut rev_links = Vec::new();
        let mut cursor = destination;
        while cursor != origin {
            let lix = self.parent[cursor];
            rev_links.push(lix);
            cursor = links[lix].from;
        }
        rev_links.reverse();
        let mut nodes = Vec::with_capacity(rev_links.len() + 1);
        nodes.push(origin);
        let mut total_distance_m = 0.0;
        for &lix in &rev_links {
            nodes.push(links[lix].to);
            total_distance_m += links[lix].length_m;
        }
        Ok(Path {
            nodes,
            links: rev_links,
            total_time_s: self.g[destination],
            total_distance_m,
        })
    }

    /// Travel time only.
    pub fn travel_time_s(&mut self, origin: usize, destination: usize) -> Result<f64, NetworkError> {
        self.shortest_path(origin, destination).map(|p| p.total_time_s)
    }
}
