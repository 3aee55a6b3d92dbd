//! File formats: trajectory, detector, segment and density CSV files, JSON
//! configuration, and heatmap rendering.
//!
//! Floats are written in their shortest round-trip form, so reading a file
//! and writing it again reproduces the same bytes.

mod config;
mod render;
mod tables;
mod tracks;

pub use config::{ClassifierChoice, PipelineConfig};
pub use render::{render_heatmap, RenderedHeatmap};
pub use tables::{
    read_density_csv, read_detectors_csv, read_segments_csv, write_density_csv, write_detectors_csv,
    write_segments_csv, DENSITY_HEADER,
};
pub use tracks::{read_tracks, read_tracks_csv, write_tracks, write_tracks_csv, TRACKS_HEADER};

use crate::error::{Error, Result};
use serde::{de::DeserializeOwned, Serialize};
use std::path::Path;

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    match (line, e.kind()) {
        (Some(line), csv::ErrorKind::Deserialize { err, .. }) => Error::Parse {
            line,
            message: err.to_string(),
        },
        (Some(line), csv::ErrorKind::UnequalLengths { .. }) => Error::Parse {
            line,
            message: "wrong number of fields".into(),
        },
        _ => Error::Csv(e),
    }
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Opens a file for reading, naming it in the error.
pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| with_path(path, e))
}

/// Creates a file for writing, naming it in the error.
pub fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| with_path(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| with_path(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| with_path(path, e))?;
    Ok(())
}
