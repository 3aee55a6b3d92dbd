//! Behaviour typing of unsafe segments.
//!
//! Eleven labels combine a path shape (straight, left/right turn) with a speed
//! change (constant, accelerating, decelerating), plus left and right lane
//! changes. A deterministic rule cascade provides training labels and serves
//! as a runtime fallback; the production path is a one-vs-rest linear model.

pub mod corpus;
pub mod svm;

use crate::detect::UnsafeInterval;
use crate::error::{Error, Result};
use crate::kinematics::KinematicTrack;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

pub use svm::{predict, train, ClassifierModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BehaviorLabel {
    #[serde(rename = "L&C")]
    LC,
    #[serde(rename = "TL&C")]
    TLC,
    #[serde(rename = "TR&C")]
    TRC,
    #[serde(rename = "TL&A")]
    TLA,
    #[serde(rename = "TR&A")]
    TRA,
    #[serde(rename = "L&A")]
    LA,
    #[serde(rename = "TL&D")]
    TLD,
    #[serde(rename = "TR&D")]
    TRD,
    #[serde(rename = "L&D")]
    LD,
    #[serde(rename = "TL&CL")]
    TLCL,
    #[serde(rename = "TR&CL")]
    TRCL,
}

impl BehaviorLabel {
    pub const ALL: [BehaviorLabel; 11] = [
        BehaviorLabel::LC,
        BehaviorLabel::TLC,
        BehaviorLabel::TRC,
        BehaviorLabel::TLA,
        BehaviorLabel::TRA,
        BehaviorLabel::LA,
        BehaviorLabel::TLD,
        BehaviorLabel::TRD,
        BehaviorLabel::LD,
        BehaviorLabel::TLCL,
        BehaviorLabel::TRCL,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BehaviorLabel::LC => "L&C",
            BehaviorLabel::TLC => "TL&C",
            BehaviorLabel::TRC => "TR&C",
            BehaviorLabel::TLA => "TL&A",
            BehaviorLabel::TRA => "TR&A",
            BehaviorLabel::LA => "L&A",
            BehaviorLabel::TLD => "TL&D",
            BehaviorLabel::TRD => "TR&D",
            BehaviorLabel::LD => "L&D",
            BehaviorLabel::TLCL => "TL&CL",
            BehaviorLabel::TRCL => "TR&CL",
        }
    }

    /// File-name friendly form, e.g. `TL_CL`.
    pub fn slug(&self) -> String {
        self.name().replace('&', "_")
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Self::ALL.into_iter().find(|l| l.name() == s || l.slug() == s)
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn is_lane_change(&self) -> bool {
        matches!(self, BehaviorLabel::TLCL | BehaviorLabel::TRCL)
    }

    /// Label of the mirrored manoeuvre (left and right swapped).
    pub fn mirrored(&self) -> Self {
        use BehaviorLabel::*;
        match self {
            TLC => TRC,
            TRC => TLC,
            TLA => TRA,
            TRA => TLA,
            TLD => TRD,
            TRD => TLD,
            TLCL => TRCL,
            TRCL => TLCL,
            other => *other,
        }
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_ax: f64,
    pub min_ax: f64,
    pub max_ax: f64,
    pub mean_abs_ay: f64,
    pub max_abs_ay: f64,
    pub signed_peak_ay: f64,
    pub net_heading_change: f64,
    pub net_lateral_displacement: f64,
    pub duration: f64,
    pub mean_v: f64,
}

impl FeatureVector {
    pub const LEN: usize = 10;
    pub const NAMES: [&'static str; 10] = [
        "mean_ax",
        "min_ax",
        "max_ax",
        "mean_abs_ay",
        "max_abs_ay",
        "signed_peak_ay",
        "net_heading_change",
        "net_lateral_displacement",
        "duration",
        "mean_v",
    ];

    pub fn zeros() -> Self {
        Self::from_array([0.0; 10])
    }

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.mean_ax,
            self.min_ax,
            self.max_ax,
            self.mean_abs_ay,
            self.max_abs_ay,
            self.signed_peak_ay,
            self.net_heading_change,
            self.net_lateral_displacement,
            self.duration,
            self.mean_v,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        Self {
            mean_ax: a[0],
            min_ax: a[1],
            max_ax: a[2],
            mean_abs_ay: a[3],
            max_abs_ay: a[4],
            signed_peak_ay: a[5],
            net_heading_change: a[6],
            net_lateral_displacement: a[7],
            duration: a[8],
            mean_v: a[9],
        }
    }

    /// Features of the same manoeuvre reflected across the road axis.
    pub fn mirrored(&self) -> Self {
        Self {
            signed_peak_ay: -self.signed_peak_ay,
            net_heading_change: -self.net_heading_change,
            net_lateral_displacement: -self.net_lateral_displacement,
            ..*self
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Summary statistics of the samples inside `interval`.
pub fn extract_features(track: &KinematicTrack, interval: &UnsafeInterval) -> Result<FeatureVector> {
    let inside: Vec<_> = track
        .samples
        .iter()
        .filter(|s| s.t >= interval.t_start - 1e-9 && s.t <= interval.t_end + 1e-9)
        .collect();
    if inside.is_empty() || !(interval.t_end > interval.t_start) {
        return Err(Error::EmptyInterval {
            t_start: interval.t_start,
            t_end: interval.t_end,
        });
    }
    let n = inside.len() as f64;
    let first = inside[0];
    let last = inside[inside.len() - 1];
    let mut peak_ay = 0.0f64;
    let (mut sum_ax, mut sum_abs_ay, mut sum_v) = (0.0, 0.0, 0.0);
    let (mut min_ax, mut max_ax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &inside {
        sum_ax += s.a_x;
        sum_abs_ay += s.a_y.abs();
        sum_v += s.v;
        min_ax = min_ax.min(s.a_x);
        max_ax = max_ax.max(s.a_x);
        if s.a_y.abs() > peak_ay.abs() {
            peak_ay = s.a_y;
        }
    }
    Ok(FeatureVector {
        mean_ax: sum_ax / n,
        min_ax,
        max_ax,
        mean_abs_ay: sum_abs_ay / n,
        max_abs_ay: peak_ay.abs(),
        signed_peak_ay: peak_ay,
        net_heading_change: wrap_angle(last.heading - first.heading),
        net_lateral_displacement: last.y - first.y,
        duration: interval.t_end - interval.t_start,
        mean_v: sum_v / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub heading_turn_threshold: f64,
    pub accel_cut: f64,
    /// Lateral displacement, as a fraction of the lane width, marking a lane change.
    pub lane_change_fraction: f64,
    pub lane_width: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            heading_turn_threshold: 0.15,
            accel_cut: 0.3,
            lane_change_fraction: 0.6,
            lane_width: 3.5,
        }
    }
}

/// Deterministic rule cascade: lane change, then turn direction, then the
/// longitudinal state from the mean acceleration.
pub fn rule_label(f: &FeatureVector, cfg: &RuleConfig) -> BehaviorLabel {
    use BehaviorLabel::*;
    let heading = f.net_heading_change;
    let turning = heading.abs() >= cfg.heading_turn_threshold;
    if !turning && f.net_lateral_displacement.abs() >= cfg.lane_change_fraction * cfg.lane_width {
        return if f.net_lateral_displacement > 0.0 { TLCL } else { TRCL };
    }
    let lon = if f.mean_ax > cfg.accel_cut {
        1
    } else if f.mean_ax < -cfg.accel_cut {
        -1
    } else {
        0
    };
    match (turning, heading > 0.0, lon) {
        (false, _, 0) => LC,
        (false, _, 1) => LA,
        (false, _, _) => LD,
        (true, true, 0) => TLC,
        (true, true, 1) => TLA,
        (true, true, _) => TLD,
        (true, false, 0) => TRC,
        (true, false, 1) => TRA,
        (true, false, _) => TRD,
    }
}

/// Runtime classifier: a trained model or the rule cascade.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Rules(RuleConfig),
    Model(ClassifierModel),
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::Rules(RuleConfig::default())
    }
}

impl Classifier {
    pub fn classify(&self, f: &FeatureVector) -> BehaviorLabel {
        match self {
            Classifier::Rules(cfg) => rule_label(f, cfg),
            Classifier::Model(m) => predict(m, f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::TriggerAxis;
    use crate::kinematics::{derive_kinematics, KinematicsConfig};
    use crate::model::{TrajectorySample, VehicleClass, VehicleTrack};

    fn features(disp: f64, heading: f64, mean_ax: f64) -> FeatureVector {
        FeatureVector {
            net_lateral_displacement: disp,
            net_heading_change: heading,
            mean_ax,
            duration: 2.0,
            ..FeatureVector::zeros()
        }
    }

    #[test]
    fn rule_examples() {
        let cfg = RuleConfig::default();
        assert_eq!(rule_label(&features(3.5, 0.01, 0.1), &cfg), BehaviorLabel::TLCL);
        assert_eq!(rule_label(&features(0.0, -0.3, -1.0), &cfg), BehaviorLabel::TRD);
        assert_eq!(rule_label(&features(0.0, 0.0, 0.0), &cfg), BehaviorLabel::LC);
        assert_eq!(rule_label(&features(-3.0, 0.0, 2.0), &cfg), BehaviorLabel::TRCL);
        assert_eq!(rule_label(&features(0.0, 0.0, 0.31), &cfg), BehaviorLabel::LA);
        assert_eq!(rule_label(&features(5.0, 0.2, 0.0), &cfg), BehaviorLabel::TLC);
    }

    #[test]
    fn zero_features_fall_back_to_lc() {
        assert_eq!(Classifier::default().classify(&FeatureVector::zeros()), BehaviorLabel::LC);
    }

    #[test]
    fn labels_round_trip_names() {
        assert_eq!(BehaviorLabel::ALL.len(), 11);
        for l in BehaviorLabel::ALL {
            assert_eq!(BehaviorLabel::parse(l.name()), Some(l));
            assert_eq!(BehaviorLabel::parse(&l.slug()), Some(l));
            assert_eq!(l.mirrored().mirrored(), l);
        }
    }

    fn track(points: impl Fn(f64) -> (f64, f64), n: usize) -> KinematicTrack {
        let raw = VehicleTrack {
            vehicle_id: "f".into(),
            vehicle_class: VehicleClass::Small,
            samples: (0..n)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    let (x, y) = points(t);
                    TrajectorySample { t, x, y, v: None, lane: None }
                })
                .collect(),
            sample_rate_hz: 10.0,
        };
        derive_kinematics(&raw, &KinematicsConfig::default()).unwrap()
    }

    fn interval(a: f64, b: f64) -> UnsafeInterval {
        UnsafeInterval {
            t_start: a,
            t_end: b,
            trigger_axis: TriggerAxis::Longitudinal,
            peak_energy: 0.0,
            peak_t: a,
        }
    }

    #[test]
    fn constant_deceleration_features() {
        let k = track(|t| (25.0 * t - 1.25 * t * t, 1.75), 60);
        let f = extract_features(&k, &interval(1.0, 4.0)).unwrap();
        assert!((f.mean_ax + 2.5).abs() < 1e-9);
        assert_eq!(f.net_lateral_displacement, 0.0);
        assert_eq!(rule_label(&f, &RuleConfig::default()), BehaviorLabel::LD);
    }

    #[test]
    fn left_lane_change_features() {
        // cosine lateral profile over 3 s starting at t = 1
        let k = track(
            |t| {
                let tau = ((t - 1.0) / 3.0).clamp(0.0, 1.0);
                (20.0 * t, 1.75 + 3.5 * 0.5 * (1.0 - (PI * tau).cos()))
            },
            60,
        );
        let f = extract_features(&k, &interval(0.5, 4.5)).unwrap();
        assert!((f.net_lateral_displacement - 3.5).abs() < 0.1);
        assert!(f.net_heading_change.abs() < 0.01);
        assert_eq!(rule_label(&f, &RuleConfig::default()), BehaviorLabel::TLCL);
    }

    #[test]
    fn left_turn_features() {
        // counterclockwise arc of radius 60 m at 15 m/s
        let w = 15.0 / 60.0;
        let k = track(|t| (60.0 * (w * t).sin(), 60.0 - 60.0 * (w * t).cos()), 60);
        let f = extract_features(&k, &interval(0.5, 5.0)).unwrap();
        assert!(f.net_heading_change > 0.0);
        assert!(f.mean_ax.abs() < 0.2);
        assert_eq!(rule_label(&f, &RuleConfig::default()), BehaviorLabel::TLC);
    }

    #[test]
    fn empty_interval_is_error() {
        let k = track(|t| (10.0 * t, 0.0), 20);
        assert!(matches!(
            extract_features(&k, &interval(100.0, 101.0)),
            Err(Error::EmptyInterval { .. })
        ));
    }
}
