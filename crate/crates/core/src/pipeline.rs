//! From trajectories to an assessment report: kinematics, unsafe-segment
//! detection, classification, and per-label density fields.

use crate::classify::{extract_features, BehaviorLabel, Classifier};
use crate::density::{build_report, kde, AssessmentReport, DensityField, DensityGridSpec, WeightedPoint};
use crate::detect::{extract_unsafe_segments, DetectionConfig, TriggerAxis};
use crate::error::{Error, Result};
use crate::kinematics::{derive_kinematics, KinematicTrack, KinematicsConfig};
use crate::model::{region_of, Region, VehicleClass, VehicleTrack, WorkZoneLayout};
use crate::par::{self, Execution};
use serde::{Deserialize, Serialize};

/// A detected unsafe interval of one track with its behaviour label and the
/// position where its energy peaked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSegment {
    pub vehicle_id: String,
    pub vehicle_class: VehicleClass,
    pub label: BehaviorLabel,
    pub t_start: f64,
    pub t_end: f64,
    pub trigger_axis: TriggerAxis,
    pub peak_energy: f64,
    pub x: f64,
    pub y: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisConfig {
    pub kinematics: KinematicsConfig,
    pub detection: DetectionConfig,
    pub classifier: Classifier,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackAnalysis {
    pub segments: Vec<BehaviorSegment>,
    /// Tracks that went through detection.
    pub vehicles: usize,
    /// Tracks too short to analyse.
    pub skipped: usize,
}

fn segments_of(kt: &KinematicTrack, layout: &WorkZoneLayout, cfg: &AnalysisConfig) -> Result<Vec<BehaviorSegment>> {
    let intervals = extract_unsafe_segments(kt, &cfg.detection)?;
    let mut out = Vec::with_capacity(intervals.len());
    for iv in intervals {
        let f = match extract_features(kt, &iv) {
            Ok(f) => f,
            Err(Error::EmptyInterval { .. }) => continue,
            Err(e) => return Err(e),
        };
        let at = kt
            .samples
            .iter()
            .min_by(|a, b| (a.t - iv.peak_t).abs().total_cmp(&(b.t - iv.peak_t).abs()))
            .expect("kinematic track is not empty");
        out.push(BehaviorSegment {
            vehicle_id: kt.vehicle_id.clone(),
            vehicle_class: kt.vehicle_class,
            label: cfg.classifier.classify(&f),
            t_start: iv.t_start,
            t_end: iv.t_end,
            trigger_axis: iv.trigger_axis,
            peak_energy: iv.peak_energy,
            x: at.x,
            y: at.y,
            region: region_of(at.x, layout),
        });
    }
    Ok(out)
}

/// Segments of every track. Tracks too short for differentiation or for one
/// energy window are skipped and counted.
pub fn analyze_tracks(
    tracks: &[VehicleTrack],
    layout: &WorkZoneLayout,
    cfg: &AnalysisConfig,
    exec: Execution,
) -> Result<TrackAnalysis> {
    let per_track = par::map(exec, tracks, |t| -> Result<Option<Vec<BehaviorSegment>>> {
        let kt = match derive_kinematics(t, &cfg.kinematics) {
            Ok(k) => k,
            Err(Error::TooShort { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        match segments_of(&kt, layout, cfg) {
            Ok(s) => Ok(Some(s)),
            Err(Error::SignalTooShort { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut analysis = TrackAnalysis::default();
    for r in per_track {
        match r? {
            Some(s) => {
                analysis.vehicles += 1;
                analysis.segments.extend(s);
            }
            None => analysis.skipped += 1,
        }
    }
    Ok(analysis)
}

/// One density field per observed label. Each segment carries the weight that
/// makes a field value proportional to the share of analysed vehicles.
pub fn density_fields(analysis: &TrackAnalysis, grid: &DensityGridSpec, exec: Execution) -> Vec<DensityField> {
    let w = grid.vehicle_weight(analysis.vehicles);
    BehaviorLabel::ALL
        .iter()
        .filter_map(|&label| {
            let points: Vec<WeightedPoint> = analysis
                .segments
                .iter()
                .filter(|s| s.label == label)
                .map(|s| WeightedPoint { x: s.x, y: s.y, w })
                .collect();
            (!points.is_empty()).then(|| kde(&points, grid, label, exec))
        })
        .collect()
}

/// Analyses every replication's tracks and averages their reports.
pub fn assess_replications(
    replications: &[Vec<VehicleTrack>],
    layout: &WorkZoneLayout,
    grid: &DensityGridSpec,
    cfg: &AnalysisConfig,
    scenario: Option<String>,
    exec: Execution,
) -> Result<(AssessmentReport, Vec<TrackAnalysis>)> {
    let mut analyses = Vec::with_capacity(replications.len());
    let mut fields = Vec::with_capacity(replications.len());
    for tracks in replications {
        let a = analyze_tracks(tracks, layout, cfg, exec)?;
        fields.push(density_fields(&a, grid, exec));
        analyses.push(a);
    }
    Ok((build_report(&fields, layout, scenario)?, analyses))
}

/// Default analysis grid: 600 m before the zone to 200 m after it.
pub fn default_grid(layout: &WorkZoneLayout) -> DensityGridSpec {
    DensityGridSpec::for_layout(layout, 600.0, 200.0)
}
