//! Trajectory CSV: one row per sample with header
//! `vehicle_id,class,t,x,y,v,lane`. The `v` and `lane` columns may be empty
//! or missing; a missing speed is rebuilt from the positions.

use super::csv_error;
use crate::error::{Error, Result};
use crate::model::{TrajectorySample, VehicleClass, VehicleTrack};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

pub const TRACKS_HEADER: &str = "vehicle_id,class,t,x,y,v,lane";

const DEFAULT_RATE_HZ: f64 = 10.0;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    vehicle_id: String,
    class: String,
    t: f64,
    x: f64,
    y: f64,
    #[serde(default)]
    v: Option<f64>,
    #[serde(default)]
    lane: Option<u32>,
}

pub fn write_tracks_csv<W: Write>(tracks: &[VehicleTrack], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACKS_HEADER.split(','))?;
    for track in tracks {
        for s in &track.samples {
            w.serialize(Row {
                vehicle_id: track.vehicle_id.clone(),
                class: track.vehicle_class.as_str().into(),
                t: s.t,
                x: s.x,
                y: s.y,
                v: s.v,
                lane: s.lane,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_tracks(path: &Path, tracks: &[VehicleTrack]) -> Result<()> {
    write_tracks_csv(tracks, std::io::BufWriter::new(super::create(path)?))
}

fn estimated_rate(samples: &[TrajectorySample]) -> f64 {
    if samples.len() < 2 {
        return DEFAULT_RATE_HZ;
    }
    let span = samples[samples.len() - 1].t - samples[0].t;
    let rate = (samples.len() - 1) as f64 / span;
    (rate * 1e6).round() / 1e6
}

/// Speeds from positions: central differences inside, one-sided at the ends.
fn fill_speeds(samples: &mut [TrajectorySample]) {
    let n = samples.len();
    if n < 2 {
        for s in samples.iter_mut() {
            s.v.get_or_insert(0.0);
        }
        return;
    }
    let speed = |a: &TrajectorySample, b: &TrajectorySample| (b.x - a.x).hypot(b.y - a.y) / (b.t - a.t);
    let computed: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            speed(&samples[a], &samples[b])
        })
        .collect();
    for (s, v) in samples.iter_mut().zip(computed) {
        s.v.get_or_insert(v);
    }
}

/// Parses trajectory CSV. Rows of one vehicle need not be contiguous but
/// must have strictly increasing timestamps; vehicles keep the order of
/// their first row.
pub fn read_tracks_csv<R: Read>(input: R) -> Result<Vec<VehicleTrack>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let missing: Vec<&str> = ["vehicle_id", "class", "t", "x", "y"]
        .into_iter()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!("missing column(s): {}", missing.join(", "))));
    }
    let has_v = headers.iter().any(|h| h == "v");

    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, (VehicleClass, Vec<TrajectorySample>)> = HashMap::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let class = VehicleClass::parse(&row.class).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown vehicle class {:?}", row.class),
        })?;
        if ![row.t, row.x, row.y].iter().all(|v| v.is_finite()) || row.v.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: "non-finite number".into(),
            });
        }
        let entry = by_id.entry(row.vehicle_id.clone()).or_insert_with(|| {
            order.push(row.vehicle_id.clone());
            (class, Vec::new())
        });
        if entry.0 != class {
            return Err(Error::Schema(format!("vehicle {} changes class", row.vehicle_id)));
        }
        if let Some(prev) = entry.1.last() {
            if row.t <= prev.t {
                return Err(Error::Schema(format!(
                    "vehicle {} has non-increasing timestamps ({} after {})",
                    row.vehicle_id, row.t, prev.t
                )));
            }
        }
        entry.1.push(TrajectorySample {
            t: row.t,
            x: row.x,
            y: row.y,
            v: row.v,
            lane: row.lane,
        });
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let (class, mut samples) = by_id.remove(&id).expect("every id was inserted");
            if !has_v || samples.iter().any(|s| s.v.is_none()) {
                fill_speeds(&mut samples);
            }
            VehicleTrack {
                sample_rate_hz: estimated_rate(&samples),
                vehicle_id: id,
                vehicle_class: class,
                samples,
            }
        })
        .collect())
}

pub fn read_tracks(path: &Path) -> Result<Vec<VehicleTrack>> {
    read_tracks_csv(std::io::BufReader::new(super::open(path)?))
}
