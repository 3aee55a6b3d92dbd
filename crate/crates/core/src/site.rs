//! Observations from the measured expressway work zone: desired-speed
//! distributions at the undisturbed upstream camera (A) and at the work area
//! (B), demand, and mean speeds at B.

use crate::sim::speed::{ClassSpeeds, SpeedDistribution};

pub const CONTROL_POINTS: [f64; 9] = [35.0, 45.0, 55.0, 65.0, 75.0, 85.0, 95.0, 105.0, 110.0];

pub const A_SMALL: [f64; 9] = [0.0, 0.01, 0.03, 0.04, 0.2, 0.76, 0.85, 0.96, 1.0];
pub const A_LARGE: [f64; 9] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.43, 0.88, 0.98, 1.0];
pub const B_SMALL: [f64; 9] = [0.0, 0.01, 0.09, 0.28, 0.65, 0.86, 0.97, 1.0, 1.0];
pub const B_LARGE: [f64; 9] = [0.0, 0.02, 0.07, 0.30, 0.63, 0.84, 0.93, 0.98, 1.0];

/// Hourly volume at A (veh/h).
pub const VOLUME: f64 = 1760.0;
pub const LARGE_FRACTION: f64 = 0.22;

/// Mean speeds at B (km/h): small, large, all vehicles.
pub const B_MEANS: [f64; 3] = [75.4, 76.4, 75.7];

fn dist(p: [f64; 9]) -> SpeedDistribution {
    SpeedDistribution {
        control_points: CONTROL_POINTS.to_vec(),
        cumulative: p.to_vec(),
    }
}

pub fn position_a() -> ClassSpeeds {
    ClassSpeeds {
        small: dist(A_SMALL),
        large: dist(A_LARGE),
    }
}

pub fn position_b() -> ClassSpeeds {
    ClassSpeeds {
        small: dist(B_SMALL),
        large: dist(B_LARGE),
    }
}
