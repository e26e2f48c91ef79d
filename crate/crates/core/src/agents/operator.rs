use std::collections::{HashSet, VecDeque};

use super::{AgentError, Job, Traveller, TravellerState, Vehicle};
use crate::network::{Path, Router};

pub const DEFAULT_PREFILTER_K: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignOptions {
    /// Idle vehicles kept per request by straight-line distance before
    /// network routing; 0 disables the filter.
    pub prefilter_k: usize,
}

impl Default for AssignOptions {
    fn default() -> Self {
        AssignOptions { prefilter_k: DEFAULT_PREFILTER_K }
    }
}

/// The broker: owns the fleet roster and the single FIFO request queue.
#[derive(Debug, Clone, Default)]
pub struct Operator {
    pub id: usize,
    pub fleet: Vec<usize>,
    queue: VecDeque<usize>,
    queued: HashSet<usize>,
}

impl Operator {
    pub fn new(id: usize, fleet: Vec<usize>) -> Self {
        Operator { id, fleet, ..Default::default() }
    }

    pub fn queue(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.queue.iter().copied()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Queues a waiting traveller, keeping the order by request time then id.
    pub fn enqueue(&mut self, travellers: &[Traveller], traveller: usize) -> Result<(), AgentError> {
        let t = &travellers[traveller];
        if t.state != TravellerState::WaitingForAssignment {
            return Err(AgentError::NotWaiting { traveller, state: t.state });
        }
        if !self.queued.insert(traveller) {
            return Err(AgentError::DuplicateEnqueue(traveller));
        }
        let key = |ix: usize| (travellers[ix].request.request_time_s, travellers[ix].request.id);
        let new_key = key(traveller);
        let pos = self.queue.iter().rposition(|&q| key(q) <= new_key).map_or(0, |p| p + 1);
        self.queue.insert(pos, traveller);
        Ok(())
    }
}

/// Walks the queue head to tail giving each traveller the idle vehicle with
/// the shortest network time to its origin (lower id on ties). Stops when
/// the fleet has no idle vehicles left.
pub fn fifo_assign(
    operator: &mut Operator,
    travellers: &mut [Traveller],
    vehicles: &mut [Vehicle],
    router: &mut Router<'_>,
    now_s: f64,
    options: AssignOptions,
) -> Result<Vec<(usize, usize)>, AgentError> {
    let network = router.network();
    let mut idle: Vec<usize> = operator.fleet.iter().copied().filter(|&v| vehicles[v].is_idle()).collect();
    idle.sort_unstable();
    let mut pairs = Vec::new();
    let mut kept = VecDeque::with_capacity(operator.queue.len());
    let mut candidates: Vec<(f64, usize)> = Vec::new();

    while let Some(t_ix) = operator.queue.pop_front() {
        if idle.is_empty() {
            kept.push_back(t_ix);
            kept.extend(operator.queue.drain(..));
            break;
        }
        let origin = network.resolve(travellers[t_ix].request.origin)?;
        let destination = network.resolve(travellers[t_ix].request.destination)?;

        candidates.clear();
        candidates.extend(idle.iter().map(|&v| (network.straight_line_m(vehicles[v].node, origin), v)));
        let k = options.prefilter_k;
        if k > 0 && candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            candidates.truncate(k);
        }

        let mut best: Option<(f64, usize, Path)> = None;
        for &(_, v) in &candidates {
            let path = match router.shortest_path(vehicles[v].node, origin) {
                Ok(p) => p,
                Err(crate::network::NetworkError::Unreachable { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            let better = match &best {
                None => true,
                Some((t, id, _)) => path.total_time_s < *t || (path.total_time_s == *t && v < *id),
            };
            if better {
                best = Some((path.total_time_s, v, path));
            }
        }
        let Some((time_s, v, path)) = best else {
            kept.push_back(t_ix);
            continue;
        };

        vehicles[v].assign(Job { traveller: t_ix, origin, destination }, path)?;
        let t = &mut travellers[t_ix];
        t.state = TravellerState::WaitingForPickup;
        t.vehicle = Some(v);
        t.t_assigned = Some(now_s);
        t.quoted_pickup_s = Some(time_s);
        operator.queued.remove(&t_ix);
        idle.retain(|&x| x != v);
        pairs.push((t_ix, v));
    }
    operator.queue = kept;
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::TripRequest;
    use crate::network::{generate_grid, CoordinateSystem, HighwayClass, LinkSpec, NodeId, RoadNetwork, RoadNode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn traveller(ix: usize, id: u64, time: f64, o: u64, d: u64) -> Traveller {
        Traveller::new(
            ix,
            TripRequest { id, request_time_s: time, origin: NodeId(o), destination: NodeId(d), party_size: 1 },
        )
    }

    /// Star: hub 0 with spokes to 1 (10 s), 2 (30 s) and 3 (10 s).
    fn star() -> RoadNetwork {
        let nodes = vec![
            RoadNode { id: NodeId(0), x: 0.0, y: 0.0 },
            RoadNode { id: NodeId(1), x: 100.0, y: 0.0 },
            RoadNode { id: NodeId(2), x: -100.0, y: 0.0 },
            RoadNode { id: NodeId(3), x: 0.0, y: 100.0 },
        ];
        let mut links = Vec::new();
        for (n, speed) in [(1, 36.0), (2, 12.0), (3, 36.0)] {
            for (a, b) in [(0, n), (n, 0)] {
                links.push(LinkSpec {
                    from: NodeId(a),
                    to: NodeId(b),
                    length_m: 100.0,
                    speed_kmh: speed,
                    class: HighwayClass::Other,
                });
            }
        }
        RoadNetwork::new(CoordinateSystem::PlanarM, nodes, links).unwrap()
    }

    #[test]
    fn enqueue_orders_and_guards() {
        let ts = vec![traveller(0, 7, 5.0, 1, 2), traveller(1, 3, 5.0, 1, 2), traveller(2, 1, 2.0, 1, 2)];
        let mut op = Operator::new(0, vec![]);
        op.enqueue(&ts, 0).unwrap();
        assert_eq!(op.queue().collect::<Vec<_>>(), vec![0]);
        op.enqueue(&ts, 1).unwrap();
        assert_eq!(op.queue().collect::<Vec<_>>(), vec![1, 0]);
        op.enqueue(&ts, 2).unwrap();
        assert_eq!(op.queue().collect::<Vec<_>>(), vec![2, 1, 0]);
        assert!(matches!(op.enqueue(&ts, 1), Err(AgentError::DuplicateEnqueue(1))));
    }

    #[test]
    fn nearest_vehicle_wins() {
        let net = star();
        let mut router = Router::new(&net);
        let mut ts = vec![traveller(0, 0, 0.0, 0, 1)];
        let mut vs = vec![Vehicle::new(0, 2), Vehicle::new(1, 1)];
        vs[1].node = net.resolve(NodeId(3)).unwrap();
        let mut op = Operator::new(0, vec![0, 1]);
        op.enqueue(&ts, 0).unwrap();
        let pairs = fifo_assign(&mut op, &mut ts, &mut vs, &mut router, 4.0, AssignOptions::default()).unwrap();
        assert_eq!(pairs, vec![(0, 1)]);
        assert_eq!(ts[0].t_assigned, Some(4.0));
        assert_eq!(ts[0].quoted_pickup_s, Some(10.0));
        assert_eq!(ts[0].state, TravellerState::WaitingForPickup);
        assert_eq!(op.queue_len(), 0);
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let net = star();
        let mut router = Router::new(&net);
        let mut ts = vec![traveller(0, 0, 0.0, 0, 2)];
        let mut vs = vec![Vehicle::new(0, 2), Vehicle::new(1, 3), Vehicle::new(2, 1)];
        let mut op = Operator::new(0, vec![2, 1, 0]);
        op.enqueue(&ts, 0).unwrap();
        let pairs = fifo_assign(&mut op, &mut ts, &mut vs, &mut router, 0.0, AssignOptions::default()).unwrap();
        assert_eq!(pairs, vec![(0, 1)]);
    }

    #[test]
    fn empty_fleet_and_early_stop() {
        let net = star();
        let mut router = Router::new(&net);
        let mut ts = vec![traveller(0, 0, 0.0, 1, 2), traveller(1, 1, 1.0, 2, 3), traveller(2, 2, 2.0, 3, 1)];
        let mut op = Operator::new(0, vec![]);
        for i in 0..3 {
            op.enqueue(&ts, i).unwrap();
        }
        let mut vs: Vec<Vehicle> = vec![];
        assert!(fifo_assign(&mut op, &mut ts, &mut vs, &mut router, 0.0, AssignOptions::default()).unwrap().is_empty());
        let mut vs = vec![Vehicle::new(0, 0)];
        op.fleet = vec![0];
        let pairs = fifo_assign(&mut op, &mut ts, &mut vs, &mut router, 0.0, AssignOptions::default()).unwrap();
        assert_eq!(pairs, vec![(0, 0)]);
        assert_eq!(op.queue().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(ts[1].state, TravellerState::WaitingForAssignment);
    }

    /// Replays the greedy rule with exhaustive Dijkstra times from every
    /// idle vehicle.
    fn brute_force(net: &RoadNetwork, ts: &[Traveller], vehicle_nodes: &[usize]) -> Vec<(usize, usize)> {
        let mut free: Vec<usize> = (0..vehicle_nodes.len()).collect();
        let mut out = Vec::new();
        for (i, t) in ts.iter().enumerate() {
            let o = net.index_of(t.request.origin).unwrap();
            let best = free
                .iter()
                .map(|&v| (crate::network::Router::new(net).travel_time_s(vehicle_nodes[v], o).unwrap(), v))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, v)) = best {
                out.push((i, v));
                free.retain(|&x| x != v);
            }
        }
        out
    }

    #[test]
    fn matches_sequential_greedy_replay() {
        let net = generate_grid(6, 6, 100.0, 30.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut ts: Vec<Traveller> = (0..3)
                .map(|i| {
                    let o = rng.random_range(0..36u64);
                    let d = (o + rng.random_range(1..36u64)) % 36;
                    traveller(i, i as u64, i as f64, o, d)
                })
                .collect();
            let nodes: Vec<usize> = (0..5).map(|_| rng.random_range(0..36)).collect();
            let expected = brute_force(&net, &ts, &nodes);
            let mut vs: Vec<Vehicle> = nodes.iter().enumerate().map(|(i, &n)| Vehicle::new(i, n)).collect();
            let mut op = Operator::new(0, (0..5).collect());
            for i in 0..3 {
                op.enqueue(&ts, i).unwrap();
            }
            let mut router = Router::new(&net);
            let opts = AssignOptions { prefilter_k: 0 };
            let got = fifo_assign(&mut op, &mut ts, &mut vs, &mut router, 0.0, opts).unwrap();
            assert_eq!(got, expected);
        }
    }
}
