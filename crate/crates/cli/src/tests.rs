use super::run;
use std::fs;
use std::path::Path;

fn fleetsim(args: &[&str]) -> u8 {
    run(std::iter::once("fleetsim").chain(args.iter().copied()))
}

fn ok(args: &[&str]) {
    assert_eq!(fleetsim(args), 0, "{args:?}");
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn city(dir: &Path) {
    let net = dir.join("net.json");
    let req = dir.join("req.csv");
    ok(&["gen-network", "--grid", "8x8", "--block-m", "150", "--speed-kmh", "25", "--out", p(&net)]);
    ok(&[
        "gen-demand", "--net", p(&net), "--lambda-per-h", "600", "--horizon-h", "1", "--seed", "3", "--out", p(&req),
    ]);
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    city(dir.path());
    let out = dir.path().join("run");
    ok(&[
        "simulate", "--net", p(&dir.path().join("net.json")), "--req", p(&dir.path().join("req.csv")),
        "--fleet", "20", "--seed", "1", "--out-dir", p(&out),
    ]);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,queue_length,idle_count,busy_count\n"));
    assert_eq!(trace.lines().count(), 3601);
    let travellers = fs::read_to_string(out.join("travellers.csv")).unwrap();
    assert!(travellers.starts_with("id,request_time_s,assignment_wait_s,pickup_wait_s,trip_time_s,served_flag\n"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 1);
    assert_eq!(summary["config"]["fleet_size"], 20);
}

#[test]
fn sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    city(dir.path());
    let net = dir.path().join("net.json");
    let req = dir.path().join("req.csv");
    let runs: Vec<_> = ["a", "b"].iter().map(|n| dir.path().join(n)).collect();
    for out in &runs {
        ok(&["sweep", "--net", p(&net), "--req", p(&req), "--sizes", "4,12,30", "--seed", "9", "--out-dir", p(out)]);
    }
    for f in ["sweep.csv", "sweep.json"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
    let bisect = dir.path().join("bisect");
    ok(&["sweep", "--net", p(&net), "--req", p(&req), "--bisect", "--seed", "9", "--out-dir", p(&bisect)]);
    assert!(bisect.join("critical.json").exists());
}

#[test]
fn analytic_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    fs::write(&params, r#"{"lambda": 1000, "t_bar": 0.2, "c": 260, "area": 64, "phi": 1.27, "v_bar": 25}"#).unwrap();
    let metrics = dir.path().join("metrics.json");
    let trace = dir.path().join("fluid.csv");
    ok(&["analytic", "--params", p(&params), "--out", p(&metrics), "--fluid-trace", p(&trace)]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert!(m["rho"].as_f64().unwrap() > 0.0);
    assert!(fs::read_to_string(&trace).unwrap().starts_with("step,V_t,V_in,V_out,feasible_flag\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fleetsim(&["gen-network", "--grid", "axb"]), 1);
    assert_eq!(fleetsim(&["frobnicate"]), 1);
    assert_eq!(fleetsim(&["--help"]), 0);

    let net = dir.path().join("net.json");
    assert_eq!(fleetsim(&["gen-network", "--grid", "3x3", "--block-m=-5", "--speed-kmh", "25", "--out", p(&net)]), 1);

    let params = dir.path().join("params.json");
    fs::write(&params, r#"{"lambda": -1, "t_bar": 0.2, "c": 2, "area": 64, "phi": 1.27, "v_bar": 25}"#).unwrap();
    let code = fleetsim(&["analytic", "--params", p(&params), "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(code, 1);

    city(dir.path());
    let bad_req = dir.path().join("bad.csv");
    fs::write(&bad_req, "id,request_time_s,origin_node,destination_node,party_size\n0,1,5,5,1\n").unwrap();
    let code = fleetsim(&[
        "simulate", "--net", p(&net), "--req", p(&bad_req), "--fleet", "2", "--seed", "1", "--out-dir",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(code, 1);

    let blocked = dir.path().join("blocked");
    fs::write(&blocked, "").unwrap();
    let code = fleetsim(&[
        "simulate", "--net", p(&net), "--req", p(&dir.path().join("req.csv")), "--fleet", "2", "--seed", "1",
        "--out-dir", p(&blocked.join("sub")),
    ]);
    assert_eq!(code, 2);
}
