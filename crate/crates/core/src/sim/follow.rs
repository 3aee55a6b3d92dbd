//! Dead-band car following.

use super::{BehaviorParams, DrivingParams};

/// What a follower sees ahead: bumper-to-bumper gap (m) and the leader's speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    pub gap: f64,
    pub v: f64,
}

/// Strongest acceleration available at speed `v` (m/s) for a vehicle whose
/// standing-start maximum is `a_max`.
pub fn max_accel(a_max: f64, v: f64, behavior: &BehaviorParams) -> f64 {
    let (xs, fs) = (&behavior.accel_speeds, &behavior.accel_factors);
    let kmh = v * 3.6;
    let f = if kmh <= xs[0] {
        fs[0]
    } else if kmh >= xs[3] {
        fs[3]
    } else {
        let i = (1..4).find(|&i| kmh <= xs[i]).unwrap_or(3);
        fs[i - 1] + (fs[i] - fs[i - 1]) * (kmh - xs[i - 1]) / (xs[i] - xs[i - 1])
    };
    a_max * f
}

/// Free-road acceleration towards `desired_v`.
pub fn free_accel(v: f64, desired_v: f64, behavior: &BehaviorParams) -> f64 {
    behavior.k_free * (desired_v - v)
}

/// Acceleration imposed by a leader: a linear law on the gap error and speed
/// difference, silenced inside the sensitivity band, and never weaker than
/// the constant deceleration needed to stop closing before the standstill
/// distance once the gap surplus is used up.
pub fn leader_accel(v: f64, leader: Leader, driving: &DrivingParams, behavior: &BehaviorParams) -> f64 {
    let desired_gap = driving.cc0_standstill + driving.cc1_headway * v;
    let e = leader.gap - desired_gap;
    let dv = leader.v - v;
    let linear = if v > 1.0 && dv.abs() < behavior.dead_band_dv && e.abs() <= driving.cc2_variation / 2.0 {
        0.0
    } else {
        behavior.k_gap * e + behavior.k_speed * dv
    };
    // The braking bound eases off with surplus gap, so a slightly slower
    // leader far ahead does not pin the follower's acceleration at zero.
    let kinematic = if dv >= 0.0 {
        f64::INFINITY
    } else if leader.gap > driving.cc0_standstill {
        -dv * dv / (2.0 * (leader.gap - driving.cc0_standstill)) + behavior.k_gap * e.max(0.0)
    } else {
        -behavior.b_max
    };
    linear.min(kinematic)
}

/// Bounded acceleration of a vehicle at speed `v` given an optional leader.
pub fn follow_accel(
    v: f64,
    desired_v: f64,
    leader: Option<Leader>,
    driving: &DrivingParams,
    behavior: &BehaviorParams,
    a_max: f64,
) -> f64 {
    let mut a = free_accel(v, desired_v, behavior);
    if let Some(l) = leader {
        a = a.min(leader_accel(v, l, driving, behavior));
    }
    a.clamp(-behavior.b_max, max_accel(a_max, v, behavior))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> (DrivingParams, BehaviorParams) {
        (DrivingParams::default(), BehaviorParams::default())
    }

    #[test]
    fn free_flow_equilibrium() {
        let (d, b) = params();
        assert_eq!(follow_accel(25.0, 25.0, None, &d, &b, 3.5), 0.0);
    }

    #[test]
    fn dead_band_at_desired_gap() {
        let (d, b) = params();
        let v = 20.0;
        let gap = d.cc0_standstill + d.cc1_headway * v;
        let a = follow_accel(v, 30.0, Some(Leader { gap, v }), &d, &b, 3.5);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn bounded() {
        let (d, b) = params();
        let a = follow_accel(30.0, 30.0, Some(Leader { gap: 0.5, v: 0.0 }), &d, &b, 3.5);
        assert_eq!(a, -b.b_max);
        assert_eq!(follow_accel(0.0, 40.0, None, &d, &b, 3.5), 3.5);
        assert!((follow_accel(80.0 / 3.6, 40.0, None, &d, &b, 3.5) - 3.5 * 0.34).abs() < 1e-12);
    }

    #[test]
    fn acceleration_curve() {
        let b = BehaviorParams::default();
        assert_eq!(max_accel(3.5, 0.0, &b), 3.5);
        assert!((max_accel(3.5, 25.0 / 3.6, &b) - 3.5 * (1.0 + 0.57) / 2.0).abs() < 1e-12);
        assert_eq!(max_accel(3.5, 200.0, &b), 3.5 * 0.23);
    }

    /// Iterating the law behind a stationary leader converges to the
    /// standstill distance.
    #[test]
    fn stops_behind_stopped_leader() {
        let (d, b) = params();
        let dt = 0.1;
        let (mut gap, mut v) = (150.0, 20.0);
        for _ in 0..3000 {
            let a = follow_accel(v, 25.0, Some(Leader { gap, v: 0.0 }), &d, &b, 3.5);
            let nv = (v + a * dt).clamp(0.0, (gap - 0.01) / dt);
            gap -= nv * dt;
            v = nv;
            assert!(gap > 0.0);
        }
        assert!((gap - d.cc0_standstill).abs() <= 0.2, "gap {gap}");
        assert!(v < 0.05);
    }

    #[test]
    fn settles_behind_slower_leader() {
        let (d, b) = params();
        let dt = 0.1;
        let vl = 60.0 / 3.6;
        let (mut gap, mut v) = (80.0, 100.0 / 3.6);
        for _ in 0..6000 {
            let a = follow_accel(v, 100.0 / 3.6, Some(Leader { gap, v: vl }), &d, &b, 3.5);
            v = (v + a * dt).max(0.0);
            gap += (vl - v) * dt;
        }
        let g_star = d.cc0_standstill + d.cc1_headway * vl;
        assert!((v - vl).abs() < 0.2, "v {v}");
        assert!((gap - g_star).abs() <= d.cc2_variation, "gap {gap} vs {g_star}");
    }
}
