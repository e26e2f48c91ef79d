use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::Path;

use super::{arrival_step, KpiTrace, SimError, SimResult, Summary, TravellerRecord, VehicleRecord};
use crate::network::NodeId;

pub const TRACE_HEADER: [&str; 4] = ["step", "queue_length", "idle_count", "busy_count"];
pub const TRAVELLERS_HEADER: [&str; 6] =
    ["id", "request_time_s", "assignment_wait_s", "pickup_wait_s", "trip_time_s", "served_flag"];
const VEHICLES_HEADER: [&str; 4] = ["id", "odometer_m", "trips_served", "last_node"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `trace.csv`, `travellers.csv`, `vehicles.csv` and `summary.json`.
pub fn write_result(dir: impl AsRef<Path>, result: &SimResult) -> Result<(), SimError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut w = writer(File::create(dir.join("trace.csv"))?);
    w.write_record(TRACE_HEADER)?;
    let t = &result.trace;
    for k in 0..t.len() {
        w.write_record([
            k.to_string(),
            t.queue_length[k].to_string(),
            t.idle_count[k].to_string(),
            t.busy_count[k].to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(File::create(dir.join("travellers.csv"))?);
    w.write_record(TRAVELLERS_HEADER)?;
    for r in &result.travellers {
        w.write_record([
            r.id.to_string(),
            r.request_time_s.to_string(),
            opt(r.assignment_wait_s),
            opt(r.pickup_wait_s),
            opt(r.trip_time_s),
            u8::from(r.served).to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(File::create(dir.join("vehicles.csv"))?);
    w.write_record(VEHICLES_HEADER)?;
    for v in &result.vehicles {
        w.write_record([v.id.to_string(), v.odometer_m.to_string(), v.trips_served.to_string(), v.last_node.to_string()])?;
    }
    w.flush()?;

    let mut f = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &result.summary)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn records<R: Read>(
    reader: R,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord), SimError>>, SimError> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().ne(header.iter().copied()) {
        return Err(SimError::BadRecord { line: 1, message: format!("expected header {}", header.join(",")) });
    }
    Ok(rdr.into_records().map(|r| {
        let r = r?;
        Ok((r.position().map_or(0, |p| p.line()), r))
    }))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, line: u64, i: usize, name: &str) -> Result<T, SimError>
where
    T::Err: std::fmt::Display,
{
    rec.get(i)
        .unwrap_or("")
        .parse()
        .map_err(|e| SimError::BadRecord { line, message: format!("{name}: {e}") })
}

fn opt_field(rec: &csv::StringRecord, line: u64, i: usize, name: &str) -> Result<Option<f64>, SimError> {
    match rec.get(i).unwrap_or("") {
        "" => Ok(None),
        _ => field(rec, line, i, name).map(Some),
    }
}

/// Reads the per-step columns of a trace file. Arrival and assignment
/// counts are left empty.
pub fn read_trace<R: Read>(reader: R, dt_s: f64) -> Result<KpiTrace, SimError> {
    let mut trace = KpiTrace { dt_s, ..Default::default() };
    for item in records(reader, &TRACE_HEADER)? {
        let (line, rec) = item?;
        let step: usize = field(&rec, line, 0, "step")?;
        if step != trace.len() {
            return Err(SimError::BadRecord { line, message: format!("expected step {}", trace.len()) });
        }
        trace.queue_length.push(field(&rec, line, 1, "queue_length")?);
        trace.idle_count.push(field(&rec, line, 2, "idle_count")?);
        trace.busy_count.push(field(&rec, line, 3, "busy_count")?);
    }
    Ok(trace)
}

pub fn read_travellers<R: Read>(reader: R) -> Result<Vec<TravellerRecord>, SimError> {
    let mut out = Vec::new();
    for item in records(reader, &TRAVELLERS_HEADER)? {
        let (line, rec) = item?;
        let served = match rec.get(5).unwrap_or("") {
            "0" => false,
            "1" => true,
            other => return Err(SimError::BadRecord { line, message: format!("served_flag: {other:?}") }),
        };
        out.push(TravellerRecord {
            id: field(&rec, line, 0, "id")?,
            request_time_s: field(&rec, line, 1, "request_time_s")?,
            assignment_wait_s: opt_field(&rec, line, 2, "assignment_wait_s")?,
            pickup_wait_s: opt_field(&rec, line, 3, "pickup_wait_s")?,
            trip_time_s: opt_field(&rec, line, 4, "trip_time_s")?,
            served,
        });
    }
    Ok(out)
}

fn read_vehicles<R: Read>(reader: R) -> Result<Vec<VehicleRecord>, SimError> {
    let mut out = Vec::new();
    for item in records(reader, &VEHICLES_HEADER)? {
        let (line, rec) = item?;
        out.push(VehicleRecord {
            id: field(&rec, line, 0, "id")?,
            odometer_m: field(&rec, line, 1, "odometer_m")?,
            trips_served: field(&rec, line, 2, "trips_served")?,
            last_node: NodeId(field(&rec, line, 3, "last_node")?),
        });
    }
    Ok(out)
}

/// Loads a directory written by [`write_result`].
pub fn read_result(dir: impl AsRef<Path>) -> Result<SimResult, SimError> {
    let dir = dir.as_ref();
    let summary: Summary = serde_json::from_reader(File::open(dir.join("summary.json"))?)?;
    let config = summary.config.clone();
    let mut trace = read_trace(File::open(dir.join("trace.csv"))?, config.dt_s)?;
    let travellers = read_travellers(File::open(dir.join("travellers.csv"))?)?;
    let vehicles = read_vehicles(File::open(dir.join("vehicles.csv"))?)?;

    let n = trace.len();
    trace.arrivals = vec![0; n];
    trace.assignments = vec![0; n];
    for r in &travellers {
        let k = arrival_step(r.request_time_s, config.dt_s) as usize;
        if k < n {
            trace.arrivals[k] += 1;
        }
        if let Some(t) = r.t_assigned_s() {
            let k = (t / config.dt_s).round() as usize;
            if k < n {
                trace.assignments[k] += 1;
            }
        }
    }
    Ok(SimResult { config, trace, travellers, vehicles, summary })
}
