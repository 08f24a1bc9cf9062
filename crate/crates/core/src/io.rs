//! Delimited-text import and export: demand replay files, event logs and
//! metrics rows.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::demand::TripRequest;
use crate::engine::LogEvent;
use crate::geometry::Point;
use crate::metrics::MetricsRow;

pub const DEMAND_COLUMNS: [&str; 7] = [
    "id",
    "appear_s",
    "ox_m",
    "oy_m",
    "dx_m",
    "dy_m",
    "delta_t_s",
];

pub const EVENT_COLUMNS: [&str; 7] = [
    "time_s",
    "kind",
    "request_id",
    "vehicle_id",
    "stop_x_m",
    "stop_y_m",
    "occupancy_after",
];

#[derive(Debug, Serialize, Deserialize)]
struct DemandRecord {
    id: u64,
    appear_s: f64,
    ox_m: f64,
    oy_m: f64,
    dx_m: f64,
    dy_m: f64,
    delta_t_s: f64,
}

#[derive(Debug, Serialize)]
struct EventRecord<'a> {
    time_s: f64,
    kind: &'a str,
    request_id: u64,
    vehicle_id: Option<u32>,
    stop_x_m: f64,
    stop_y_m: f64,
    occupancy_after: Option<u32>,
}

fn with_header<W: Write>(out: W, columns: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(columns)?;
    Ok(w)
}

pub fn write_demand<W: Write>(out: W, requests: &[TripRequest]) -> csv::Result<()> {
    let mut w = with_header(out, &DEMAND_COLUMNS)?;
    for r in requests {
        w.serialize(DemandRecord {
            id: r.id,
            appear_s: r.appear_time,
            ox_m: r.origin.x,
            oy_m: r.origin.y,
            dx_m: r.destination.x,
            dy_m: r.destination.y,
            delta_t_s: r.max_extra_time,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a demand file. Rows are returned sorted by appearance time, then id.
pub fn read_demand<R: Read>(input: R) -> csv::Result<Vec<TripRequest>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let r: DemandRecord = row?;
        out.push(TripRequest {
            id: r.id,
            origin: Point::new(r.ox_m, r.oy_m),
            destination: Point::new(r.dx_m, r.dy_m),
            appear_time: r.appear_s,
            max_extra_time: r.delta_t_s,
        });
    }
    out.sort_by(|a, b| a.appear_time.total_cmp(&b.appear_time).then(a.id.cmp(&b.id)));
    Ok(out)
}

pub fn write_events<W: Write>(out: W, events: &[LogEvent]) -> csv::Result<()> {
    let mut w = with_header(out, &EVENT_COLUMNS)?;
    for e in events {
        w.serialize(EventRecord {
            time_s: e.time,
            kind: e.kind.as_str(),
            request_id: e.request_id,
            vehicle_id: e.vehicle_id,
            stop_x_m: e.stop.x,
            stop_y_m: e.stop.y,
            occupancy_after: e.occupancy_after,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the header even when `rows` is empty.
pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = with_header(out, &crate::metrics::METRICS_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(input: R) -> csv::Result<Vec<MetricsRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
