//! Deterministic fixed-step microscopic traffic simulation of a work zone.
//!
//! Vehicles follow a dead-band car-following law parameterised by the five
//! calibrated driving parameters, merge out of closed lanes with gap
//! acceptance and courtesy yielding, overtake at random, and obey the posted
//! limit inside the zone. One replication runs on one thread; replications
//! are independent.

pub mod follow;
pub mod lane_change;
pub mod scenarios;
pub mod speed;
pub mod world;

use crate::error::{Error, Result};
use crate::model::{validate_layout, Region, VehicleClass, VehicleTrack, WorkZoneLayout};
use crate::par::{self, Execution};
use crate::site;
use serde::{Deserialize, Serialize};
use speed::ClassSpeeds;
use world::World;

/// The five calibrated car-following and lane-changing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrivingParams {
    /// Standstill distance CC0 (m).
    pub cc0_standstill: f64,
    /// Headway time CC1 (s).
    pub cc1_headway: f64,
    /// Following variation CC2 (m), the width of the sensitivity band.
    pub cc2_variation: f64,
    /// Waiting time before diffusion (s).
    pub diffusion_wait: f64,
    /// Minimum front gap accepted when changing lanes (m).
    pub min_headway: f64,
}

impl Default for DrivingParams {
    fn default() -> Self {
        Self {
            cc0_standstill: 1.5,
            cc1_headway: 0.7,
            cc2_variation: 4.0,
            diffusion_wait: 80.0,
            min_headway: 0.5,
        }
    }
}

impl DrivingParams {
    pub fn validate(&self) -> Vec<String> {
        let fields = [
            ("cc0_standstill", self.cc0_standstill),
            ("cc1_headway", self.cc1_headway),
            ("cc2_variation", self.cc2_variation),
            ("diffusion_wait", self.diffusion_wait),
            ("min_headway", self.min_headway),
        ];
        fields
            .iter()
            .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(n, _)| format!("{n} must be > 0"))
            .collect()
    }
}

/// Fixed behavioural constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BehaviorParams {
    /// Gain on the gap error (1/s²).
    pub k_gap: f64,
    /// Gain on the speed difference to the leader (1/s).
    pub k_speed: f64,
    /// Relaxation rate towards the desired speed (1/s).
    pub k_free: f64,
    pub b_max: f64,
    pub a_max_small: f64,
    pub a_max_large: f64,
    /// Speeds (km/h) at which `accel_factors` scale the class maximum
    /// acceleration; linear in between, flat outside.
    pub accel_speeds: [f64; 4],
    pub accel_factors: [f64; 4],
    /// Speed difference below which the sensitivity band applies (m/s).
    pub dead_band_dv: f64,
    pub small_length: f64,
    pub large_length: f64,
    /// Duration of an unhurried lane change (s).
    pub lane_change_duration: f64,
    /// Shortest lane change a driver will make when out of room (s).
    pub min_lane_change_duration: f64,
    /// Distance before a block point by which a merge must be complete (m).
    pub urgency_margin: f64,
    /// Range of the distance before the transition at which drivers react (m).
    pub notice_min: f64,
    pub notice_max: f64,
    /// Share of the rear vehicle's headway demanded by a forced merge.
    pub merge_rear_factor: f64,
    /// Distance before the block point over which a merging driver's
    /// front-gap demand relaxes from its own headway to the minimum (m).
    pub relax_distance: f64,
    /// Distance from which a stepped closure is recognised; a taper is seen
    /// from the notice distance (m).
    pub step_sight_distance: f64,
    /// Deceleration used to absorb closing speed in a forced merge (m/s²).
    pub merge_accept_decel: f64,
    /// Same for discretionary changes (m/s²).
    pub comfort_decel: f64,
    /// Strongest braking a driver accepts to let a merging vehicle in (m/s²).
    pub yield_decel: f64,
    /// How far ahead a driver watches the neighbouring lane for mergers (m).
    pub courtesy_range: f64,
    /// Rate at which discretionary changes are considered (1/s).
    pub discretionary_rate: f64,
    /// Speed gain that makes overtaking worthwhile (m/s).
    pub overtake_advantage: f64,
    /// A leader farther away than this does not prompt overtaking (m).
    pub overtake_lookahead: f64,
    pub lane_change_cooldown: f64,
    /// Share of the posted limit that drivers adopt as their desired speed.
    pub compliance_factor: f64,
    /// Below this speed a vehicle waiting to merge counts as blocked (m/s).
    pub blocked_speed: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            k_gap: 0.25,
            k_speed: 0.6,
            k_free: 0.4,
            b_max: 8.0,
            a_max_small: 3.5,
            a_max_large: 2.0,
            accel_speeds: [0.0, 50.0, 80.0, 120.0],
            accel_factors: [1.0, 0.57, 0.34, 0.23],
            dead_band_dv: 0.2,
            small_length: 4.5,
            large_length: 12.0,
            lane_change_duration: 3.0,
            min_lane_change_duration: 1.0,
            urgency_margin: 5.0,
            notice_min: 100.0,
            notice_max: 400.0,
            merge_rear_factor: 0.6,
            relax_distance: 200.0,
            step_sight_distance: 80.0,
            merge_accept_decel: 3.0,
            comfort_decel: 1.5,
            yield_decel: 3.0,
            courtesy_range: 60.0,
            discretionary_rate: 0.2,
            overtake_advantage: 2.0,
            overtake_lookahead: 80.0,
            lane_change_cooldown: 5.0,
            compliance_factor: 1.0,
            blocked_speed: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemandConfig {
    /// Total arrivals over all lanes (veh/h).
    pub volume: f64,
    pub large_fraction: f64,
    pub desired_speed: ClassSpeeds,
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self {
            volume: site::VOLUME,
            large_fraction: site::LARGE_FRACTION,
            desired_speed: site::position_a(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    pub layout: WorkZoneLayout,
    pub demand: DemandConfig,
    pub driving: DrivingParams,
    pub behavior: BehaviorParams,
    /// Replaces the layout's posted zone limit when set (km/h).
    pub warning_speed_limit: Option<f64>,
    pub sim_duration: f64,
    pub warmup: f64,
    pub step_dt: f64,
    pub seed: u64,
    pub replications: u32,
    /// Road simulated past the end of the zone (m).
    pub downstream_length: f64,
    /// Detector positions (m); empty places one 1 km upstream of the zone and
    /// one at the start of the work area.
    pub detectors: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario-2".into(),
            layout: WorkZoneLayout::default(),
            demand: DemandConfig::default(),
            driving: DrivingParams::default(),
            behavior: BehaviorParams::default(),
            warning_speed_limit: None,
            sim_duration: 3600.0,
            warmup: 300.0,
            step_dt: 0.1,
            seed: 1,
            replications: 3,
            downstream_length: 400.0,
            detectors: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn effective_layout(&self) -> WorkZoneLayout {
        let mut l = self.layout.clone();
        if self.warning_speed_limit.is_some() {
            l.warning_speed_limit = self.warning_speed_limit;
        }
        l
    }

    pub fn network_end(&self) -> f64 {
        self.layout.zone_end_x() + self.downstream_length
    }

    pub fn detector_positions(&self) -> Vec<f64> {
        if !self.detectors.is_empty() {
            return self.detectors.clone();
        }
        vec![
            (self.layout.zone_start_x - 1000.0).max(0.0),
            self.layout.region_start(Region::Work),
        ]
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = validate_layout(&self.effective_layout());
        v.extend(self.driving.validate());
        if !(self.demand.volume >= 0.0 && self.demand.volume.is_finite()) {
            v.push("demand volume must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.demand.large_fraction) {
            v.push("large_fraction must lie in [0, 1]".into());
        }
        for (name, d) in [("small", &self.demand.desired_speed.small), ("large", &self.demand.desired_speed.large)] {
            v.extend(d.validate().into_iter().map(|m| format!("{name} desired speed: {m}")));
        }
        if self.step_dt != 0.1 && self.step_dt != 0.05 {
            v.push("step_dt must be 0.1 or 0.05".into());
        }
        if self.replications == 0 {
            v.push("replications must be >= 1".into());
        }
        if !(self.sim_duration > 0.0) || !(self.warmup >= 0.0) {
            v.push("sim_duration must be > 0 and warmup >= 0".into());
        }
        if !(self.layout.zone_start_x > 0.0) {
            v.push("zone_start_x must leave room for an approach section".into());
        }
        if !(self.downstream_length >= 0.0) {
            v.push("downstream_length must be >= 0".into());
        }
        let b = &self.behavior;
        if !(b.notice_min > 0.0 && b.notice_max >= b.notice_min) {
            v.push("notice range must satisfy 0 < notice_min <= notice_max".into());
        }
        if !(b.min_lane_change_duration > 0.0 && b.lane_change_duration >= b.min_lane_change_duration) {
            v.push("lane change durations must be positive and ordered".into());
        }
        for p in self.detector_positions() {
            if !(0.0..self.network_end()).contains(&p) {
                v.push(format!("detector at {p} m lies outside the network"));
            }
        }
        v
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn replication_seed(&self, r: u32) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub injected: u64,
    pub exited: u64,
    /// Exits after the warmup.
    pub exited_measured: u64,
    pub removed: u64,
    pub on_network_at_end: u64,
    pub max_queue: usize,
    pub mandatory_changes: u64,
    pub discretionary_changes: u64,
    /// Steps where the collision guard demanded more than the braking limit.
    pub hard_caps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorEvent {
    pub t: f64,
    pub vehicle_id: String,
    pub class: VehicleClass,
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRecord {
    pub position: f64,
    pub events: Vec<DetectorEvent>,
}

impl DetectorRecord {
    pub fn speeds(&self, class: Option<VehicleClass>) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| class.is_none_or(|c| e.class == c))
            .map(|e| e.speed_kmh)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub replication: u32,
    pub seed: u64,
    pub tracks: Vec<VehicleTrack>,
    pub detectors: Vec<DetectorRecord>,
    pub stats: SimStats,
    /// Measured period (s), after the warmup.
    pub measured_duration: f64,
}

impl SimOutput {
    /// Vehicles leaving the network per hour during the measured period.
    pub fn throughput(&self) -> f64 {
        self.stats.exited_measured as f64 * 3600.0 / self.measured_duration
    }
}

/// Runs one replication, stepping until warmup plus duration.
pub fn run_replication(cfg: &ScenarioConfig, replication: u32) -> Result<SimOutput> {
    cfg.check()?;
    let seed = cfg.replication_seed(replication);
    let mut world = World::new(cfg, seed);
    let steps = ((cfg.warmup + cfg.sim_duration) / cfg.step_dt).round() as u64;
    for _ in 0..steps {
        world.step()?;
    }
    let (tracks, detectors, stats) = world.finish();
    Ok(SimOutput {
        replication,
        seed,
        tracks,
        detectors,
        stats,
        measured_duration: cfg.sim_duration,
    })
}

/// All replications of a scenario, replication `r` seeded with `seed + r`.
pub fn run_scenario(cfg: &ScenarioConfig, exec: Execution) -> Result<Vec<SimOutput>> {
    cfg.check()?;
    par::map_range(exec, cfg.replications as usize, |r| run_replication(cfg, r as u32))
        .into_iter()
        .collect()
}
