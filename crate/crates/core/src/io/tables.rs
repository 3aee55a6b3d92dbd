//! Segment, detector and density CSV files.

use super::csv_error;
use crate::classify::BehaviorLabel;
use crate::density::{DensityField, DensityGridSpec};
use crate::error::{Error, Result};
use crate::model::VehicleClass;
use crate::pipeline::BehaviorSegment;
use crate::sim::{DetectorEvent, DetectorRecord};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const DENSITY_HEADER: &str = "x,y,value";

fn write_rows<W: Write, T: Serialize>(rows: impl IntoIterator<Item = T>, header: &str, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    rdr.deserialize().map(|r| r.map_err(csv_error)).collect()
}

const SEGMENTS_HEADER: &str = "vehicle_id,vehicle_class,label,t_start,t_end,trigger_axis,peak_energy,x,y,region";

pub fn write_segments_csv<W: Write>(segments: &[BehaviorSegment], out: W) -> Result<()> {
    write_rows(segments, SEGMENTS_HEADER, out)
}

pub fn read_segments_csv<R: Read>(input: R) -> Result<Vec<BehaviorSegment>> {
    read_rows(input)
}

#[derive(Serialize, Deserialize)]
struct DetectorRow {
    detector: usize,
    position: f64,
    t: f64,
    vehicle_id: String,
    class: VehicleClass,
    speed_kmh: f64,
}

const DETECTORS_HEADER: &str = "detector,position,t,vehicle_id,class,speed_kmh";

/// One row per crossing. Detectors without crossings are not represented.
pub fn write_detectors_csv<W: Write>(detectors: &[DetectorRecord], out: W) -> Result<()> {
    let rows = detectors.iter().enumerate().flat_map(|(i, d)| {
        d.events.iter().map(move |e| DetectorRow {
            detector: i,
            position: d.position,
            t: e.t,
            vehicle_id: e.vehicle_id.clone(),
            class: e.class,
            speed_kmh: e.speed_kmh,
        })
    });
    write_rows(rows, DETECTORS_HEADER, out)
}

pub fn read_detectors_csv<R: Read>(input: R) -> Result<Vec<DetectorRecord>> {
    let rows: Vec<DetectorRow> = read_rows(input)?;
    let mut out: Vec<DetectorRecord> = Vec::new();
    for r in rows {
        while out.len() <= r.detector {
            out.push(DetectorRecord {
                position: f64::NAN,
                events: Vec::new(),
            });
        }
        let d = &mut out[r.detector];
        if d.position.is_nan() {
            d.position = r.position;
        } else if d.position != r.position {
            return Err(Error::Schema(format!("detector {} has two positions", r.detector)));
        }
        d.events.push(DetectorEvent {
            t: r.t,
            vehicle_id: r.vehicle_id,
            class: r.class,
            speed_kmh: r.speed_kmh,
        });
    }
    if out.iter().any(|d| d.position.is_nan()) {
        return Err(Error::Schema("detector indices are not contiguous".into()));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct DensityRow {
    x: f64,
    y: f64,
    value: f64,
}

/// Every cell center with its value, rows of constant `y` from `y_min` up.
pub fn write_density_csv<W: Write>(field: &DensityField, out: W) -> Result<()> {
    let spec = &field.spec;
    let nx = spec.nx();
    let rows = field.values.iter().enumerate().map(|(i, &value)| DensityRow {
        x: spec.cell_x(i % nx),
        y: spec.cell_y(i / nx),
        value,
    });
    write_rows(rows, DENSITY_HEADER, out)
}

/// Rebuilds a field from its CSV. The grid extent is recovered from the
/// cell centers; kernel settings other than the proportion constant and the
/// peak floor come from `base`.
pub fn read_density_csv<R: Read>(input: R, label: BehaviorLabel, base: &DensityGridSpec) -> Result<DensityField> {
    let rows: Vec<DensityRow> = read_rows(input)?;
    if rows.is_empty() {
        return Err(Error::Schema("density file has no cells".into()));
    }
    let nx = rows.iter().take_while(|r| r.y == rows[0].y).count();
    if !rows.len().is_multiple_of(nx) {
        return Err(Error::Schema("density rows do not form a rectangle".into()));
    }
    let ny = rows.len() / nx;
    let cell = if nx > 1 {
        rows[1].x - rows[0].x
    } else if ny > 1 {
        rows[nx].y - rows[0].y
    } else {
        base.cell
    };
    if !(cell > 0.0) {
        return Err(Error::Schema("density cells are not in increasing order".into()));
    }
    let (x0, y0) = (rows[0].x, rows[0].y);
    let spec = DensityGridSpec {
        x_min: x0 - cell / 2.0,
        x_max: x0 - cell / 2.0 + nx as f64 * cell,
        y_min: y0 - cell / 2.0,
        y_max: y0 - cell / 2.0 + ny as f64 * cell,
        cell,
        ..*base
    };
    for (i, r) in rows.iter().enumerate() {
        let (ex, ey) = (spec.cell_x(i % nx), spec.cell_y(i / nx));
        if (r.x - ex).abs() > 1e-6 * cell || (r.y - ey).abs() > 1e-6 * cell {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("cell ({}, {}) is off the regular grid", r.x, r.y),
            });
        }
    }
    Ok(DensityField {
        spec,
        label,
        values: rows.into_iter().map(|r| r.value).collect(),
    })
}
