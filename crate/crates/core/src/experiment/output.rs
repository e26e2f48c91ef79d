use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{BracketEstimate, Bisection, Discontinuity, ExperimentError, PickupComparison, SweepReport};

pub const SWEEP_CSV_HEADER: [&str; 14] = [
    "fleet_size",
    "replication",
    "seed",
    "stable",
    "tail_mean_queue",
    "tail_slope_per_h",
    "tail_mean_assignment_wait_s",
    "tail_mean_pickup_wait_s",
    "tail_max_pickup_wait_s",
    "empirical_rho",
    "served",
    "in_flight",
    "unserved",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct CriticalFile<'a> {
    c_star: usize,
    bisection: &'a Bisection,
    bracket: Option<&'a BracketEstimate>,
    discontinuity: Option<&'a Discontinuity>,
    pickup_comparison: Option<&'a PickupComparison>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Writes `sweep.csv` and `sweep.json`, plus `critical.json` after a
/// bisection. Rows are ordered by fleet size then replication.
pub fn write_sweep(dir: impl AsRef<Path>, report: &SweepReport) -> Result<(), ExperimentError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(File::create(dir.join("sweep.csv"))?);
    w.write_record(SWEEP_CSV_HEADER)?;
    for size in &report.sizes {
        for v in &size.verdicts {
            w.write_record([
                v.fleet_size.to_string(),
                v.replication.to_string(),
                v.seed.to_string(),
                u8::from(v.stable).to_string(),
                v.tail_mean_queue.to_string(),
                v.tail_slope_per_h.to_string(),
                opt(v.tail_mean_assignment_wait_s),
                opt(v.tail_mean_pickup_wait_s),
                opt(v.tail_max_pickup_wait_s),
                opt(v.empirical_rho),
                v.served.to_string(),
                v.in_flight.to_string(),
                v.unserved.to_string(),
                String::new(),
            ])?;
        }
        if let Some(err) = &size.error {
            let mut row = vec![String::new(); SWEEP_CSV_HEADER.len()];
            row[0] = size.fleet_size.to_string();
            row[3] = "0".into();
            row[13] = err.clone();
            w.write_record(&row)?;
        }
    }
    w.flush()?;

    write_json(&dir.join("sweep.json"), report)?;
    if let Some(b) = &report.critical {
        let file = CriticalFile {
            c_star: b.c_star(),
            bisection: b,
            bracket: report.bracket.as_ref(),
            discontinuity: report.discontinuity.as_ref(),
            pickup_comparison: report.pickup_comparison.as_ref(),
        };
        write_json(&dir.join("critical.json"), &file)?;
    }
    Ok(())
}
