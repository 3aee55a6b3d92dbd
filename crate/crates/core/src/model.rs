//! Shared domain types: trajectories, work-zone geometry and regions.
//!
//! Frame: +x runs along the road in the direction of travel, +y points to the
//! driver's left. Lane `i` has its centerline at `(i + 0.5) * lane_width`, so
//! lane 0 is the rightmost lane.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Small,
    Large,
}

impl VehicleClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            VehicleClass::Small => "small",
            VehicleClass::Large => "large",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "small" => Some(VehicleClass::Small),
            "large" => Some(VehicleClass::Large),
            _ => None,
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Speed as reported by the source, if any.
    pub v: Option<f64>,
    pub lane: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleTrack {
    pub vehicle_id: String,
    pub vehicle_class: VehicleClass,
    pub samples: Vec<TrajectorySample>,
    pub sample_rate_hz: f64,
}

impl VehicleTrack {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    /// Signed curvature radius; infinite on straight segments.
    pub rho: f64,
    pub a_x: f64,
    pub a_y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionStyle {
    Stepped,
    Gradual,
}

/// Geometry of a maintenance work zone on a straight multi-lane carriageway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkZoneLayout {
    pub warning_length: f64,
    /// Posted limit inside the zone (km/h); `None` keeps drivers' own speeds.
    pub warning_speed_limit: Option<f64>,
    /// Limit of the undisturbed road (km/h), the upper bound for zone limits.
    pub road_speed_limit: f64,
    pub upstream_transition_length: f64,
    pub upstream_transition_style: TransitionStyle,
    pub buffer_length: f64,
    pub work_length: f64,
    pub downstream_transition_length: f64,
    pub termination_length: f64,
    pub lane_count: u32,
    pub closed_lanes: Vec<u32>,
    pub lane_width: f64,
    pub zone_start_x: f64,
}

impl Default for WorkZoneLayout {
    /// The measured two-lane closure: 500 m warning area, stepped 30 m
    /// transition, 170 m work area on a four-lane carriageway.
    fn default() -> Self {
        Self {
            warning_length: 500.0,
            warning_speed_limit: None,
            road_speed_limit: 80.0,
            upstream_transition_length: 30.0,
            upstream_transition_style: TransitionStyle::Stepped,
            buffer_length: 80.0,
            work_length: 170.0,
            downstream_transition_length: 30.0,
            termination_length: 30.0,
            lane_count: 4,
            closed_lanes: vec![0, 1],
            lane_width: 3.5,
            zone_start_x: 1200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Upstream,
    Warning,
    UpstreamTransition,
    Buffer,
    Work,
    DownstreamTransition,
    Termination,
    Downstream,
}

impl Region {
    pub const ALL: [Region; 8] = [
        Region::Upstream,
        Region::Warning,
        Region::UpstreamTransition,
        Region::Buffer,
        Region::Work,
        Region::DownstreamTransition,
        Region::Termination,
        Region::Downstream,
    ];
}

impl WorkZoneLayout {
    /// Start positions of Warning .. Termination followed by the zone end.
    pub fn boundaries(&self) -> [f64; 7] {
        let mut b = [0.0; 7];
        b[0] = self.zone_start_x;
        let lengths = [
            self.warning_length,
            self.upstream_transition_length,
            self.buffer_length,
            self.work_length,
            self.downstream_transition_length,
            self.termination_length,
        ];
        for (i, len) in lengths.iter().enumerate() {
            b[i + 1] = b[i] + len;
        }
        b
    }

    pub fn region_start(&self, region: Region) -> f64 {
        let b = self.boundaries();
        match region {
            Region::Upstream => f64::NEG_INFINITY,
            Region::Warning => b[0],
            Region::UpstreamTransition => b[1],
            Region::Buffer => b[2],
            Region::Work => b[3],
            Region::DownstreamTransition => b[4],
            Region::Termination => b[5],
            Region::Downstream => b[6],
        }
    }

    pub fn zone_end_x(&self) -> f64 {
        self.boundaries()[6]
    }

    pub fn is_closed(&self, lane: u32) -> bool {
        self.closed_lanes.contains(&lane)
    }

    pub fn lane_center_y(&self, lane: u32) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    /// Lateral direction towards the open lanes: +1 (left) or -1 (right).
    pub fn merge_direction(&self) -> i32 {
        if self.closed_lanes.contains(&0) {
            1
        } else {
            -1
        }
    }

    /// Position past which a closed lane can no longer be driven.
    ///
    /// Lanes close from the road edge inwards. A stepped transition offsets the
    /// edge lane by lane at equal spacing; a gradual taper reaches a lane's
    /// centerline at its proportional share of the taper length.
    pub fn lane_block_x(&self, lane: u32) -> Option<f64> {
        if !self.is_closed(lane) {
            return None;
        }
        let mut order: Vec<u32> = self.closed_lanes.clone();
        order.sort_unstable();
        if !self.closed_lanes.contains(&0) {
            order.reverse();
        }
        let rank = order.iter().position(|&l| l == lane)? as f64;
        let n = order.len() as f64;
        let start = self.region_start(Region::UpstreamTransition);
        let len = self.upstream_transition_length;
        Some(match self.upstream_transition_style {
            TransitionStyle::Stepped => start + len * rank / n,
            TransitionStyle::Gradual => start + len * (rank + 0.5) / n,
        })
    }

    /// End of the closure: closed lanes reopen after the downstream transition.
    pub fn closure_end_x(&self) -> f64 {
        self.region_start(Region::Termination)
    }

    /// Whether `lane` is physically blocked at position `x`.
    pub fn lane_blocked_at(&self, lane: u32, x: f64) -> bool {
        match self.lane_block_x(lane) {
            Some(b) => x >= b && x < self.closure_end_x(),
            None => false,
        }
    }

    /// Speed-limit zone: from the warning area start until vehicles reach the
    /// termination area.
    pub fn speed_limit_at(&self, x: f64) -> Option<f64> {
        let limit = self.warning_speed_limit?;
        (x >= self.zone_start_x && x < self.region_start(Region::Termination)).then_some(limit)
    }
}

/// Region containing `x`; a point on a boundary belongs to the downstream side.
pub fn region_of(x: f64, layout: &WorkZoneLayout) -> Region {
    let b = layout.boundaries();
    if x < b[0] {
        return Region::Upstream;
    }
    // Zero-length regions are skipped because the later boundary also matches.
    let mut region = Region::Warning;
    for (i, &start) in b.iter().enumerate().skip(1) {
        if x >= start {
            region = Region::ALL[i + 1];
        }
    }
    region
}

/// Every invariant violation of the layout; empty when valid.
pub fn validate_layout(layout: &WorkZoneLayout) -> Vec<String> {
    let mut v = Vec::new();
    let lengths = [
        ("warning_length", layout.warning_length),
        ("upstream_transition_length", layout.upstream_transition_length),
        ("buffer_length", layout.buffer_length),
        ("work_length", layout.work_length),
        ("downstream_transition_length", layout.downstream_transition_length),
        ("termination_length", layout.termination_length),
    ];
    for (name, len) in lengths {
        if !len.is_finite() {
            v.push(format!("{name} is not finite"));
        } else if len < 0.0 {
            v.push(format!("{name} < 0"));
        }
    }
    if !layout.zone_start_x.is_finite() {
        v.push("zone_start_x is not finite".into());
    }
    if !(layout.lane_width > 0.0) {
        v.push("lane_width <= 0".into());
    }
    if layout.lane_count == 0 {
        v.push("lane_count == 0".into());
    }
    if let Some(limit) = layout.warning_speed_limit {
        if !(limit > 0.0) {
            v.push("warning_speed_limit <= 0".into());
        }
    }
    if layout.closed_lanes.is_empty() {
        v.push("closed_lanes is empty".into());
    } else {
        let mut lanes = layout.closed_lanes.clone();
        lanes.sort_unstable();
        lanes.dedup();
        if lanes.len() != layout.closed_lanes.len() {
            v.push("closed_lanes contains duplicates".into());
        }
        if lanes.iter().any(|&l| l >= layout.lane_count) {
            v.push("closed_lanes references a lane outside lane_count".into());
        } else if lanes.len() as u32 >= layout.lane_count {
            v.push("closed_lanes closes every lane".into());
        } else {
            let contiguous = lanes.windows(2).all(|w| w[1] == w[0] + 1);
            let at_edge = lanes[0] == 0 || *lanes.last().unwrap() == layout.lane_count - 1;
            if !contiguous || !at_edge {
                v.push("closed_lanes must be contiguous and start at a road edge".into());
            }
        }
    }
    v
}

/// Passenger comfort limits on acceleration (m/s²), all magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortThresholds {
    pub lat_max: f64,
    pub lon_accel_max: f64,
    pub lon_decel_max: f64,
}

impl ComfortThresholds {
    /// Boundary of unsafe behaviour: 3.6 lateral, 1.25 acceleration, 2.5
    /// deceleration. The tabulated deceleration boundary is 2.46; the rounded
    /// summary value is used.
    pub const UNSAFE: ComfortThresholds = ComfortThresholds {
        lat_max: 3.6,
        lon_accel_max: 1.25,
        lon_decel_max: 2.5,
    };

    /// Upper edge of the "comfortable" band.
    pub const COMFORTABLE: ComfortThresholds = ComfortThresholds {
        lat_max: 1.8,
        lon_accel_max: 0.89,
        lon_decel_max: 1.48,
    };

    pub fn is_valid(&self) -> bool {
        self.lat_max > 0.0 && self.lon_accel_max > 0.0 && self.lon_decel_max > 0.0
    }
}

impl Default for ComfortThresholds {
    fn default() -> Self {
        Self::UNSAFE
    }
}
