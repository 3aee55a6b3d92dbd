//! Lane-change decisions: closure-driven mandatory merges, discretionary
//! overtaking, gap acceptance, and removal of vehicles stuck at a closure.

use super::world::VehicleState;
use super::{BehaviorParams, DrivingParams};
use crate::model::{Region, TransitionStyle, WorkZoneLayout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Front bumper position (m).
    pub s: f64,
    pub v: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetLane {
    pub lane: u32,
    pub front: Option<Neighbor>,
    pub rear: Option<Neighbor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Neighborhood {
    /// Leader in the current lane.
    pub front: Option<Neighbor>,
    pub left: Option<TargetLane>,
    pub right: Option<TargetLane>,
}

impl Neighborhood {
    fn lane(&self, lane: u32) -> Option<&TargetLane> {
        [self.left.as_ref(), self.right.as_ref()]
            .into_iter()
            .flatten()
            .find(|t| t.lane == lane)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaneDecision {
    Stay,
    Begin { target: u32, duration: f64, mandatory: bool },
}

/// Target lane and block position for a vehicle whose lane closes ahead.
pub fn mandatory_target(layout: &WorkZoneLayout, lane: u32, s: f64) -> Option<(u32, f64)> {
    let block = layout.lane_block_x(lane)?;
    if s >= layout.closure_end_x() {
        return None;
    }
    let target = lane as i64 + layout.merge_direction() as i64;
    (0..layout.lane_count as i64)
        .contains(&target)
        .then_some((target as u32, block))
}

/// Where a driver with the given notice distance starts looking for a gap.
/// Changes out of a closed lane are never made before the warning area.
pub fn merge_start(layout: &WorkZoneLayout, notice: f64) -> f64 {
    let transition = layout.region_start(Region::UpstreamTransition);
    (transition - notice).max(layout.zone_start_x)
}

/// Discretionary changes keep to their side of the closure upstream of the
/// warning area and never enter a closed lane before it reopens.
pub fn discretionary_allowed(layout: &WorkZoneLayout, from: u32, to: u32, s: f64) -> bool {
    if to >= layout.lane_count {
        return false;
    }
    if s < layout.zone_start_x {
        layout.is_closed(from) == layout.is_closed(to)
    } else if s < layout.closure_end_x() {
        !layout.is_closed(to)
    } else {
        true
    }
}

fn closing_distance(closing_speed: f64, decel: f64) -> f64 {
    if closing_speed > 0.0 {
        closing_speed * closing_speed / (2.0 * decel)
    } else {
        0.0
    }
}

/// Front gap of at least the minimum headway and rear gap of at least the
/// rear vehicle's desired following distance, both widened by the distance
/// needed to absorb any closing speed at `decel`. `reluctance` in [0, 1] adds
/// that share of the driver's own headway to the front requirement.
pub fn gap_acceptable(
    vehicle: &VehicleState,
    target: &TargetLane,
    driving: &DrivingParams,
    decel: f64,
    reluctance: f64,
    rear_factor: f64,
) -> bool {
    if let Some(f) = target.front {
        let gap = f.s - f.length - vehicle.s;
        let wanted = driving.min_headway + reluctance * driving.cc1_headway * vehicle.v;
        if gap < wanted + closing_distance(vehicle.v - f.v, decel) {
            return false;
        }
    }
    if let Some(r) = target.rear {
        let gap = vehicle.s - vehicle.length - r.s;
        let needed =
            driving.cc0_standstill + rear_factor * driving.cc1_headway * r.v + closing_distance(r.v - vehicle.v, decel);
        if gap < needed {
            return false;
        }
    }
    true
}

/// Duration of a forced merge: the lateral move has to be completed before
/// the block point, and a gradual taper spreads it over its length.
pub fn mandatory_duration(v: f64, to_block: f64, layout: &WorkZoneLayout, behavior: &BehaviorParams) -> f64 {
    let v = v.max(0.1);
    let mut t = (to_block - behavior.urgency_margin) / v;
    if layout.upstream_transition_style == TransitionStyle::Gradual {
        let share = layout.upstream_transition_length / layout.closed_lanes.len().max(1) as f64;
        t = t.max(share / v);
    }
    t.clamp(behavior.min_lane_change_duration, behavior.lane_change_duration)
}

/// `gate_u` is a uniform draw deciding whether a discretionary change is
/// considered during this step.
pub fn lane_change_decision(
    vehicle: &VehicleState,
    nb: &Neighborhood,
    layout: &WorkZoneLayout,
    driving: &DrivingParams,
    behavior: &BehaviorParams,
    dt: f64,
    gate_u: f64,
) -> LaneDecision {
    if vehicle.lane_change.is_some() {
        return LaneDecision::Stay;
    }
    if let Some((target, block)) = mandatory_target(layout, vehicle.lane, vehicle.s) {
        if vehicle.s < merge_start(layout, vehicle.notice) {
            return discretionary(vehicle, nb, layout, driving, behavior, dt, gate_u);
        }
        let to_block = block - vehicle.s;
        let reluctance = ((to_block - behavior.urgency_margin) / behavior.relax_distance).clamp(0.0, 1.0);
        return match nb.lane(target) {
            Some(t) if gap_acceptable(vehicle, t, driving, behavior.merge_accept_decel, reluctance, behavior.merge_rear_factor) => LaneDecision::Begin {
                target,
                duration: mandatory_duration(vehicle.v, to_block, layout, behavior),
                mandatory: true,
            },
            _ => LaneDecision::Stay,
        };
    }
    discretionary(vehicle, nb, layout, driving, behavior, dt, gate_u)
}

fn discretionary(
    vehicle: &VehicleState,
    nb: &Neighborhood,
    layout: &WorkZoneLayout,
    driving: &DrivingParams,
    behavior: &BehaviorParams,
    dt: f64,
    gate_u: f64,
) -> LaneDecision {
    if vehicle.since_change < behavior.lane_change_cooldown
        || vehicle.a < -behavior.comfort_decel
        || gate_u >= behavior.discretionary_rate * dt
    {
        return LaneDecision::Stay;
    }
    let Some(front) = nb.front else {
        return LaneDecision::Stay;
    };
    let gap = front.s - front.length - vehicle.s;
    if gap > behavior.overtake_lookahead || front.v > vehicle.desired_here(layout, behavior) - behavior.overtake_advantage {
        return LaneDecision::Stay;
    }
    for t in [nb.left.as_ref(), nb.right.as_ref()].into_iter().flatten() {
        if !discretionary_allowed(layout, vehicle.lane, t.lane, vehicle.s) {
            continue;
        }
        let better = match t.front {
            None => true,
            Some(f) => {
                let tgap = f.s - f.length - vehicle.s;
                tgap > gap && (f.v >= front.v + behavior.overtake_advantage || tgap > behavior.overtake_lookahead)
            }
        };
        if better && gap_acceptable(vehicle, t, driving, behavior.comfort_decel, 1.0, 1.0) {
            return LaneDecision::Begin {
                target: t.lane,
                duration: behavior.lane_change_duration,
                mandatory: false,
            };
        }
    }
    LaneDecision::Stay
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diffusion {
    Keep,
    Remove,
}

/// A vehicle that has waited at least the diffusion time for its merge is
/// taken off the network.
pub fn diffusion_removal(wait_timer: f64, driving: &DrivingParams) -> Diffusion {
    if wait_timer >= driving.diffusion_wait - 1e-9 {
        Diffusion::Remove
    } else {
        Diffusion::Keep
    }
}
