use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{DemandError, TripRequest};
use crate::network::NodeId;

const HEADER: [&str; 5] = ["id", "request_time_s", "origin_node", "destination_node", "party_size"];

pub fn write_requests_to<W: Write>(writer: W, requests: &[TripRequest]) -> Result<(), DemandError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    out.write_record(HEADER)?;
    for r in requests {
        out.write_record([
            r.id.to_string(),
            r.request_time_s.to_string(),
            r.origin.to_string(),
            r.destination.to_string(),
            r.party_size.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_requests(path: impl AsRef<Path>, requests: &[TripRequest]) -> Result<(), DemandError> {
    write_requests_to(File::create(path)?, requests)
}

/// Parses a request CSV, rejecting unsorted times, duplicate ids and
/// trips whose origin equals their destination.
pub fn read_requests<R: Read>(reader: R) -> Result<Vec<TripRequest>, DemandError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(DemandError::BadRecord {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut requests: Vec<TripRequest> = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| DemandError::BadRecord { line, message };
        let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
        let int = |i: usize| {
            field(i)
                .parse::<u64>()
                .map_err(|e| bad(format!("{}: {e}", HEADER[i])))
        };
        let id = int(0)?;
        let request_time_s: f64 = field(1)
            .parse()
            .map_err(|e| bad(format!("request_time_s: {e}")))?;
        let origin = NodeId(int(2)?);
        let destination = NodeId(int(3)?);
        let party_size = int(4)? as u32;
        if !(request_time_s.is_finite() && request_time_s >= 0.0) {
            return Err(bad(format!("request time {request_time_s} must be >= 0")));
        }
        if origin == destination {
            return Err(bad(format!("origin equals destination ({origin})")));
        }
        if party_size == 0 {
            return Err(bad("party_size must be >= 1".into()));
        }
        if !seen.insert(id) {
            return Err(bad(format!("duplicate request id {id}")));
        }
        if let Some(prev) = requests.last() {
            if request_time_s < prev.request_time_s {
                return Err(bad(format!(
                    "request time {request_time_s} precedes previous row ({})",
                    prev.request_time_s
                )));
            }
        }
        requests.push(TripRequest { id, request_time_s, origin, destination, party_size });
    }
    Ok(requests)
}

pub fn load_requests(path: impl AsRef<Path>) -> Result<Vec<TripRequest>, DemandError> {
    read_requests(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{generate_demand, OdSampling};
    use crate::network::generate_grid;

    #[test]
    fn round_trip_is_identical() {
        let net = generate_grid(6, 6, 150.0, 30.0).unwrap();
        let reqs = generate_demand(&net, 1200.0, 1.0, 4, OdSampling::Uniform).unwrap();
        assert!(reqs.len() > 1000);
        let reqs = &reqs[..1000];
        let mut buf = Vec::new();
        write_requests_to(&mut buf, reqs).unwrap();
        let back = read_requests(buf.as_slice()).unwrap();
        assert_eq!(back, reqs);
        for (a, b) in back.iter().zip(reqs) {
            assert_eq!(a.request_time_s.to_bits(), b.request_time_s.to_bits());
        }
    }

    #[test]
    fn loop_row_names_line() {
        let csv = "id,request_time_s,origin_node,destination_node,party_size\n0,1.5,3,4,1\n1,2.0,5,5,1\n";
        let err = read_requests(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, DemandError::BadRecord { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("line 3"));
    }

    #[test]
    fn unsorted_and_duplicates_rejected() {
        let unsorted = "id,request_time_s,origin_node,destination_node,party_size\n0,5,3,4,1\n1,2,3,4,1\n";
        assert!(matches!(read_requests(unsorted.as_bytes()), Err(DemandError::BadRecord { line: 3, .. })));
        let dup = "id,request_time_s,origin_node,destination_node,party_size\n0,1,3,4,1\n0,2,3,4,1\n";
        assert!(matches!(read_requests(dup.as_bytes()), Err(DemandError::BadRecord { line: 3, .. })));
    }

    #[test]
    fn header_only_is_empty() {
        let csv = "id,request_time_s,origin_node,destination_node,party_size\n";
        assert!(read_requests(csv.as_bytes()).unwrap().is_empty());
        assert!(read_requests("a,b\n".as_bytes()).is_err());
    }
}
