use fleetsim::demand::{generate_demand, OdSampling, TripRequest};
use fleetsim::engine::SimConfig;
use fleetsim::exec::Execution;
use fleetsim::experiment::{
    sweep, write_sweep, ExperimentError, FleetSizes, SweepSpec,
};
use fleetsim::network::{generate_grid, CoordinateSystem, HighwayClass, LinkSpec, NodeId, RoadNetwork, RoadNode};
use rand::SeedableRng;
use rand_distr::{Distribution, Exp};

fn small_city() -> (RoadNetwork, Vec<TripRequest>) {
    let net = generate_grid(8, 8, 150.0, 25.0).unwrap();
    let reqs = generate_demand(&net, 600.0, 1.0, 3, OdSampling::Uniform).unwrap();
    (net, reqs)
}

fn spec(sizes: FleetSizes) -> SweepSpec {
    SweepSpec::new(sizes, SimConfig::new(0, 3600.0, 17))
}

#[test]
fn undersized_and_oversized_fleets() {
    let (net, reqs) = small_city();
    let report = sweep(&net, &reqs, &spec(FleetSizes::List(vec![40, 3]))).unwrap();
    let sizes: Vec<(usize, bool)> = report.sizes.iter().map(|s| (s.fleet_size, s.stable)).collect();
    assert_eq!(sizes, vec![(3, false), (40, true)]);
    let stable = &report.sizes[1].verdicts[0];
    assert!(stable.tail_mean_assignment_wait_s.unwrap() < 2.0);
    assert!(stable.empirical_rho.unwrap() < 1.0);
    let d = report.discontinuity.unwrap();
    assert!(d.unstable_tail_pickup_s.unwrap() > d.stable_tail_pickup_s.unwrap());
    assert!(report.pickup_comparison.is_some());
    assert_eq!(report.monotonicity_violation, None);
}

#[test]
fn empty_list_is_validation_error() {
    let (net, reqs) = small_city();
    let err = sweep(&net, &reqs, &spec(FleetSizes::List(vec![]))).unwrap_err();
    assert!(err.is_validation());
    let mut s = spec(FleetSizes::List(vec![5]));
    s.replications = 0;
    assert!(matches!(sweep(&net, &reqs, &s), Err(ExperimentError::InvalidSpec(_))));
}

#[test]
fn replications_are_reproducible() {
    let (net, reqs) = small_city();
    let mut s = spec(FleetSizes::Range { min: 6, max: 14, stride: 4 });
    s.replications = 2;
    let a = sweep(&net, &reqs, &s).unwrap();
    let b = sweep(&net, &reqs, &s).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.sizes.iter().map(|s| s.verdicts.len()).collect::<Vec<_>>(), vec![2, 2, 2]);
    assert_ne!(a.sizes[0].verdicts[0].seed, a.sizes[0].verdicts[1].seed);
}

#[test]
fn execution_mode_does_not_change_output() {
    let (net, reqs) = small_city();
    let mut s = spec(FleetSizes::List(vec![4, 10, 30]));
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, mode) in dirs.iter().zip([Execution::Sequential, Execution::Parallel]) {
        s.execution = mode;
        write_sweep(dir.path(), &sweep(&net, &reqs, &s).unwrap()).unwrap();
    }
    for f in ["sweep.csv", "sweep.json"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn bisection_on_small_city_brackets_boundary() {
    let (net, reqs) = small_city();
    let report = sweep(&net, &reqs, &spec(FleetSizes::Bisect { lo: None, hi: None })).unwrap();
    let b = report.critical.as_ref().unwrap();
    assert_eq!(b.stable - b.unstable, 1);
    let est = report.bracket.as_ref().unwrap();
    assert!(b.stable > est.base_fleet as usize);
    for s in &report.sizes {
        assert_eq!(s.stable, s.fleet_size >= b.stable, "size {}", s.fleet_size);
    }
    let dir = tempfile::tempdir().unwrap();
    write_sweep(dir.path(), &report).unwrap();
    assert!(dir.path().join("critical.json").exists());
}

#[test]
fn inverted_bracket_carries_both_runs() {
    let (net, reqs) = small_city();
    let err = sweep(&net, &reqs, &spec(FleetSizes::Bisect { lo: Some(40), hi: Some(50) })).unwrap_err();
    match err {
        ExperimentError::InvertedBracket { lo_stable: true, outcomes: Some(pair), .. } => {
            assert_eq!(pair.0.results[0].trace.len(), 3600);
            assert_eq!(pair.1.fleet_size, 50);
        }
        other => panic!("{other}"),
    }
}

/// Two nodes: a slow road A -> B carrying every trip and a near-instant
/// return B -> A, so pickups cost (almost) nothing.
fn shuttle(trip_min: f64) -> RoadNetwork {
    let nodes = vec![RoadNode { id: NodeId(0), x: 0.0, y: 0.0 }, RoadNode { id: NodeId(1), x: 1.0, y: 0.0 }];
    let links = vec![
        LinkSpec {
            from: NodeId(0),
            to: NodeId(1),
            length_m: 1000.0,
            speed_kmh: 60.0 / trip_min,
            class: HighwayClass::Other,
        },
        LinkSpec { from: NodeId(1), to: NodeId(0), length_m: 1.0, speed_kmh: 200.0, class: HighwayClass::Other },
    ];
    RoadNetwork::new(CoordinateSystem::PlanarM, nodes, links).unwrap().with_area_override(Some(1.0))
}

#[test]
fn instant_pickup_city_approaches_base_fleet() {
    let trip_min = 12.3;
    let lambda = 100.0;
    let net = shuttle(trip_min);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let gap = Exp::new(lambda / 3600.0).unwrap();
    let mut t = 0.0;
    let mut reqs = Vec::new();
    while t < 4.0 * 3600.0 {
        t += gap.sample(&mut rng);
        reqs.push(TripRequest {
            id: reqs.len() as u64,
            request_time_s: t,
            origin: NodeId(0),
            destination: NodeId(1),
            party_size: 1,
        });
    }
    reqs.pop();
    let mut s = SweepSpec::new(FleetSizes::Bisect { lo: None, hi: None }, SimConfig::new(0, 4.0 * 3600.0, 8));
    s.base.tail_window_s = Some(7200.0);
    let report = sweep(&net, &reqs, &s).unwrap();
    let est = report.bracket.unwrap();
    let base = est.base_fleet as usize;
    let c_star = report.critical.unwrap().c_star();
    assert!(c_star > base && (c_star as f64) <= 1.35 * base as f64, "c* = {c_star}, base = {base}");
    let tp = report.sizes.iter().find(|o| o.fleet_size == c_star).unwrap().tail_mean_pickup_wait_s().unwrap();
    assert!(tp < 0.1, "{tp}");
}
