//! Fixed-step simulation state and integration.

use super::follow::{follow_accel, leader_accel, Leader};
use super::lane_change::{
    diffusion_removal, lane_change_decision, mandatory_target, merge_start, Diffusion, LaneDecision, Neighbor,
    Neighborhood, TargetLane,
};
use super::speed::sample_desired_speed;
use super::{BehaviorParams, DetectorEvent, DetectorRecord, ScenarioConfig, SimStats};
use crate::error::{Error, Result};
use crate::model::{TrajectorySample, VehicleClass, VehicleTrack, WorkZoneLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

/// Clearance kept to the leader's rear when capping speeds (m).
const MIN_CLEARANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneChange {
    pub from: u32,
    pub to: u32,
    pub elapsed: f64,
    pub duration: f64,
    pub mandatory: bool,
}

impl LaneChange {
    pub fn progress(&self) -> f64 {
        (self.elapsed / self.duration).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u64,
    pub class: VehicleClass,
    /// Lane used for following; switches to the target when a change starts.
    pub lane: u32,
    /// Front bumper position (m).
    pub s: f64,
    pub v: f64,
    pub a: f64,
    /// Unconstrained desired speed (m/s).
    pub desired_v: f64,
    pub lane_change: Option<LaneChange>,
    pub wait_timer: f64,
    /// How far before the transition the driver reacts to the closure (m).
    pub notice: f64,
    pub length: f64,
    pub a_max: f64,
    /// Time since the last lane change started (s).
    pub since_change: f64,
}

impl VehicleState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u64,
        class: VehicleClass,
        lane: u32,
        s: f64,
        v: f64,
        desired_v: f64,
        notice: f64,
        behavior: &BehaviorParams,
    ) -> Self {
        let (length, a_max) = match class {
            VehicleClass::Small => (behavior.small_length, behavior.a_max_small),
            VehicleClass::Large => (behavior.large_length, behavior.a_max_large),
        };
        Self {
            id,
            class,
            lane,
            s,
            v,
            a: 0.0,
            desired_v,
            lane_change: None,
            wait_timer: 0.0,
            notice,
            length,
            a_max,
            since_change: f64::INFINITY,
        }
    }

    /// Lateral position: lane center, or a cosine blend between lane centers
    /// while changing lanes.
    pub fn y(&self, layout: &WorkZoneLayout) -> f64 {
        match &self.lane_change {
            None => layout.lane_center_y(self.lane),
            Some(lc) => {
                let (a, b) = (layout.lane_center_y(lc.from), layout.lane_center_y(lc.to));
                a + (b - a) * 0.5 * (1.0 - (PI * lc.progress()).cos())
            }
        }
    }

    /// Desired speed at the current position, capped by any posted limit.
    pub fn desired_here(&self, layout: &WorkZoneLayout, behavior: &BehaviorParams) -> f64 {
        match layout.speed_limit_at(self.s) {
            Some(limit) => self.desired_v.min(limit / 3.6 * behavior.compliance_factor),
            None => self.desired_v,
        }
    }

    fn as_neighbor(&self) -> Neighbor {
        Neighbor {
            s: self.s,
            v: self.v,
            length: self.length,
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    class: VehicleClass,
    desired_v: f64,
    notice: f64,
}

pub struct World {
    cfg: ScenarioConfig,
    layout: WorkZoneLayout,
    step: u64,
    pub vehicles: Vec<VehicleState>,
    queues: Vec<VecDeque<Pending>>,
    next_arrival: Vec<f64>,
    inter_arrival: Option<Exp<f64>>,
    rng: ChaCha8Rng,
    next_id: u64,
    pub stats: SimStats,
    open_tracks: BTreeMap<u64, (VehicleClass, Vec<TrajectorySample>)>,
    tracks: Vec<VehicleTrack>,
    pub detectors: Vec<DetectorRecord>,
    network_end: f64,
    lanes: Vec<Vec<usize>>,
}

impl World {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        let layout = cfg.effective_layout();
        let n_lanes = layout.lane_count as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rate = cfg.demand.volume / 3600.0 / n_lanes as f64;
        let inter_arrival = (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
        let next_arrival = (0..n_lanes)
            .map(|_| inter_arrival.map_or(f64::INFINITY, |e| e.sample(&mut rng)))
            .collect();
        let detectors = cfg
            .detector_positions()
            .into_iter()
            .map(|position| DetectorRecord {
                position,
                events: Vec::new(),
            })
            .collect();
        Self {
            network_end: cfg.network_end(),
            layout,
            step: 0,
            vehicles: Vec::new(),
            queues: vec![VecDeque::new(); n_lanes],
            next_arrival,
            inter_arrival,
            rng,
            next_id: 1,
            stats: SimStats::default(),
            open_tracks: BTreeMap::new(),
            tracks: Vec::new(),
            detectors,
            lanes: vec![Vec::new(); n_lanes],
            cfg: cfg.clone(),
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.step_dt
    }

    pub fn layout(&self) -> &WorkZoneLayout {
        &self.layout
    }

    fn draw_pending(&mut self) -> Pending {
        let large = self.rng.random::<f64>() < self.cfg.demand.large_fraction;
        let class = if large { VehicleClass::Large } else { VehicleClass::Small };
        let u: f64 = self.rng.random();
        let desired_v = sample_desired_speed(self.cfg.demand.desired_speed.get(class), u) / 3.6;
        let b = &self.cfg.behavior;
        let notice = if b.notice_max > b.notice_min {
            self.rng.random_range(b.notice_min..b.notice_max)
        } else {
            b.notice_min
        };
        Pending {
            class,
            desired_v,
            notice,
        }
    }

    fn arrivals(&mut self, t1: f64) {
        for lane in 0..self.queues.len() {
            while self.next_arrival[lane] <= t1 {
                let p = self.draw_pending();
                self.queues[lane].push_back(p);
                let dt = self.inter_arrival.map_or(f64::INFINITY, |e| e.sample(&mut self.rng));
                self.next_arrival[lane] += dt;
            }
            self.stats.max_queue = self.stats.max_queue.max(self.queues[lane].len());
        }
    }

    fn entries(&mut self) {
        let (driving, behavior) = (self.cfg.driving, self.cfg.behavior);
        for lane in 0..self.queues.len() as u32 {
            let Some(p) = self.queues[lane as usize].front().cloned() else {
                continue;
            };
            let last = self
                .vehicles
                .iter()
                .filter(|v| v.lane == lane)
                .min_by(|a, b| a.s.total_cmp(&b.s));
            let v_entry = match last {
                None => Some(p.desired_v),
                Some(l) => {
                    let gap = l.s - l.length;
                    let free_gap = driving.cc0_standstill + driving.cc1_headway * p.desired_v + 10.0;
                    let v = if gap >= free_gap { p.desired_v } else { p.desired_v.min(l.v) };
                    (gap >= driving.cc0_standstill + driving.cc1_headway * v + 1.0).then_some(v)
                }
            };
            if let Some(v) = v_entry {
                self.queues[lane as usize].pop_front();
                let id = self.next_id;
                self.next_id += 1;
                let veh = VehicleState::new(id, p.class, lane, 0.0, v, p.desired_v, p.notice, &behavior);
                self.open_tracks.insert(id, (p.class, Vec::new()));
                self.vehicles.push(veh);
                self.stats.injected += 1;
            }
        }
    }

    fn rebuild_lanes(&mut self) {
        for l in &mut self.lanes {
            l.clear();
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            self.lanes[v.lane as usize].push(i);
        }
        let vehicles = &self.vehicles;
        for l in &mut self.lanes {
            l.sort_by(|&a, &b| order(&vehicles[a], &vehicles[b]));
        }
    }

    /// Vehicles directly ahead of and behind position `s` in `lane`.
    fn around(&self, lane: u32, me: &VehicleState) -> (Option<usize>, Option<usize>) {
        let list = &self.lanes[lane as usize];
        let k = list.partition_point(|&j| order(&self.vehicles[j], me).is_lt());
        let front = k.checked_sub(1).map(|x| list[x]);
        let rear = list[k..].iter().copied().find(|&j| self.vehicles[j].id != me.id);
        (front, rear)
    }

    fn neighborhood(&self, i: usize) -> Neighborhood {
        let me = &self.vehicles[i];
        let list = &self.lanes[me.lane as usize];
        let pos = list.iter().position(|&j| j == i).expect("vehicle indexed in its lane");
        let front = pos.checked_sub(1).map(|x| self.vehicles[list[x]].as_neighbor());
        let target = |lane: u32| {
            let (f, r) = self.around(lane, me);
            TargetLane {
                lane,
                front: f.map(|j| self.vehicles[j].as_neighbor()),
                rear: r.map(|j| self.vehicles[j].as_neighbor()),
            }
        };
        let n = self.layout.lane_count;
        Neighborhood {
            front,
            left: (me.lane + 1 < n).then(|| target(me.lane + 1)),
            right: me.lane.checked_sub(1).map(target),
        }
    }

    fn decide_lane_changes(&mut self, dt: f64) {
        let mut order_idx: Vec<usize> = (0..self.vehicles.len()).collect();
        order_idx.sort_by(|&a, &b| order(&self.vehicles[a], &self.vehicles[b]));
        for i in order_idx {
            let gate: f64 = self.rng.random();
            let nb = self.neighborhood(i);
            let decision = lane_change_decision(
                &self.vehicles[i],
                &nb,
                &self.layout,
                &self.cfg.driving,
                &self.cfg.behavior,
                dt,
                gate,
            );
            if let LaneDecision::Begin {
                target,
                duration,
                mandatory,
            } = decision
            {
                let from = self.vehicles[i].lane;
                self.lanes[from as usize].retain(|&j| j != i);
                let v = &mut self.vehicles[i];
                v.lane = target;
                v.lane_change = Some(LaneChange {
                    from,
                    to: target,
                    elapsed: 0.0,
                    duration,
                    mandatory,
                });
                v.since_change = 0.0;
                v.wait_timer = 0.0;
                if mandatory {
                    self.stats.mandatory_changes += 1;
                } else {
                    self.stats.discretionary_changes += 1;
                }
                let vehicles = &self.vehicles;
                let list = &mut self.lanes[target as usize];
                let k = list.partition_point(|&j| order(&vehicles[j], &vehicles[i]).is_lt());
                list.insert(k, i);
            }
        }
    }

    /// Closure ahead that the vehicle is already reacting to: (target, block).
    fn pending_merge(&self, v: &VehicleState) -> Option<(u32, f64)> {
        if v.lane_change.is_some() {
            return None;
        }
        let (target, block) = mandatory_target(&self.layout, v.lane, v.s)?;
        (v.s >= merge_start(&self.layout, v.notice)).then_some((target, block))
    }

    /// Nearest vehicle ahead in an adjacent lane waiting to merge into `lane`.
    fn courtesy_leader(&self, i: usize, merging: &[Option<u32>]) -> Option<Leader> {
        let me = &self.vehicles[i];
        let range = self.cfg.behavior.courtesy_range;
        let mut best: Option<Leader> = None;
        for adj in [me.lane.checked_sub(1), Some(me.lane + 1)].into_iter().flatten() {
            if adj >= self.layout.lane_count {
                continue;
            }
            let list = &self.lanes[adj as usize];
            let k = list.partition_point(|&j| order(&self.vehicles[j], me).is_lt());
            for &j in list[..k].iter().rev() {
                let o = &self.vehicles[j];
                let gap = o.s - o.length - me.s;
                if gap > range {
                    break;
                }
                if gap > 0.0 && merging[j] == Some(me.lane) {
                    if best.is_none_or(|b| gap < b.gap) {
                        best = Some(Leader { gap, v: o.v });
                    }
                    break;
                }
            }
        }
        best
    }

    /// Nearest vehicle in `target` whose front is past this vehicle's rear,
    /// within courtesy range, with the gap to its rear bumper (negative while
    /// the two overlap).
    fn target_front(&self, i: usize, target: u32) -> Option<Leader> {
        let me = &self.vehicles[i];
        let list = &self.lanes[target as usize];
        let tail = me.s - me.length;
        let k = list.partition_point(|&j| self.vehicles[j].s > tail);
        let &j = list[..k].last()?;
        let o = &self.vehicles[j];
        let gap = o.s - o.length - me.s;
        (gap <= self.cfg.behavior.courtesy_range).then_some(Leader { gap, v: o.v })
    }

    fn accelerate(&mut self, dt: f64) -> Vec<f64> {
        let (driving, behavior) = (&self.cfg.driving, &self.cfg.behavior);
        let merging: Vec<Option<u32>> = self.vehicles.iter().map(|v| self.pending_merge(v).map(|m| m.0)).collect();
        let mut new_v = vec![0.0; self.vehicles.len()];
        for lane in &self.lanes {
            for (k, &i) in lane.iter().enumerate() {
                let me = &self.vehicles[i];
                let desired = me.desired_here(&self.layout, behavior);
                let leader = k.checked_sub(1).map(|x| &self.vehicles[lane[x]]);
                let l = leader.map(|o| Leader {
                    gap: o.s - o.length - me.s,
                    v: o.v,
                });
                let mut a = follow_accel(me.v, desired, l, driving, behavior, me.a_max);
                // lanes are ordered downstream first, so the leader's new speed is known
                let mut cap = f64::INFINITY;
                if let Some(l) = l {
                    cap = new_v[lane[k - 1]] + (l.gap - MIN_CLEARANCE) / dt;
                }
                if let Some((target, block)) = self.pending_merge(me) {
                    let gap = block - me.s;
                    // drop back behind the target-lane vehicle ahead, gently
                    if let Some(f) = self.target_front(i, target) {
                        let seek = follow_accel(me.v, desired, Some(f), driving, behavior, me.a_max);
                        a = a.min(seek.max(-behavior.comfort_decel));
                    }
                    let seen = gap <= behavior.step_sight_distance;
                    if seen {
                        let stop = Leader { gap, v: 0.0 };
                        a = a.min(follow_accel(me.v, desired, Some(stop), driving, behavior, me.a_max));
                    }
                    cap = cap.min((gap - MIN_CLEARANCE) / dt);
                }
                if merging[i].is_none() {
                    if let Some(c) = self.courtesy_leader(i, &merging) {
                        let ac = leader_accel(me.v, c, driving, behavior);
                        if ac >= -behavior.yield_decel {
                            a = a.min(ac.max(-behavior.b_max));
                        }
                    }
                }
                let mut v = (me.v + a * dt).max(0.0);
                if v > cap {
                    v = cap.max(0.0);
                    if me.v - v > behavior.b_max * dt + 1e-9 {
                        self.stats.hard_caps += 1;
                    }
                }
                new_v[i] = v;
            }
        }
        new_v
    }

    /// Advances the world by one step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.step_dt;
        let t1 = (self.step + 1) as f64 * dt;
        self.arrivals(t1);
        self.entries();
        self.rebuild_lanes();
        self.decide_lane_changes(dt);
        let new_v = self.accelerate(dt);
        let measuring = t1 >= self.cfg.warmup - 1e-9;

        let mut gone: Vec<(usize, bool)> = Vec::new();
        let blocked_speed = self.cfg.behavior.blocked_speed;
        for (i, nv) in new_v.into_iter().enumerate() {
            let pending = self.pending_merge(&self.vehicles[i]).is_some();
            let v = &mut self.vehicles[i];
            let s_old = v.s;
            v.a = (nv - v.v) / dt;
            v.v = nv;
            v.s += nv * dt;
            v.since_change += dt;
            if let Some(lc) = &mut v.lane_change {
                lc.elapsed += dt;
                if lc.elapsed >= lc.duration - 1e-9 {
                    v.lane_change = None;
                }
            }
            if pending && nv < blocked_speed {
                v.wait_timer += dt;
            } else {
                v.wait_timer = 0.0;
            }
            if measuring {
                for d in &mut self.detectors {
                    if s_old < d.position && v.s >= d.position {
                        d.events.push(DetectorEvent {
                            t: t1,
                            vehicle_id: v.id.to_string(),
                            class: v.class,
                            speed_kmh: nv * 3.6,
                        });
                    }
                }
                let y = v.y(&self.layout);
                if let Some((_, samples)) = self.open_tracks.get_mut(&v.id) {
                    samples.push(TrajectorySample {
                        t: t1,
                        x: v.s,
                        y,
                        v: Some(nv),
                        lane: Some(v.lane),
                    });
                }
            }
            if v.s >= self.network_end {
                gone.push((i, true));
            } else if diffusion_removal(v.wait_timer, &self.cfg.driving) == Diffusion::Remove {
                gone.push((i, false));
            }
        }
        for &(i, exited) in gone.iter().rev() {
            let v = self.vehicles.swap_remove(i);
            if exited {
                self.stats.exited += 1;
                if measuring {
                    self.stats.exited_measured += 1;
                }
            } else {
                self.stats.removed += 1;
            }
            self.close_track(v.id);
        }
        self.step += 1;
        self.check_invariants()
    }

    fn close_track(&mut self, id: u64) {
        if let Some((class, samples)) = self.open_tracks.remove(&id) {
            if !samples.is_empty() {
                self.tracks.push(VehicleTrack {
                    vehicle_id: id.to_string(),
                    vehicle_class: class,
                    samples,
                    sample_rate_hz: 1.0 / self.cfg.step_dt,
                });
            }
        }
    }

    /// Collision-free lanes, nonnegative speeds, no vehicle inside a closure,
    /// and vehicle conservation.
    pub fn check_invariants(&self) -> Result<()> {
        let t = self.time();
        let mut by_lane: Vec<Vec<&VehicleState>> = vec![Vec::new(); self.layout.lane_count as usize];
        for v in &self.vehicles {
            if !(v.v >= 0.0) || !v.s.is_finite() {
                return Err(Error::InvariantViolated(format!("vehicle {} has speed {} at t={t}", v.id, v.v)));
            }
            if self.layout.lane_blocked_at(v.lane, v.s) {
                return Err(Error::InvariantViolated(format!(
                    "vehicle {} inside closed lane {} at x={} t={t}",
                    v.id, v.lane, v.s
                )));
            }
            by_lane[v.lane as usize].push(v);
        }
        for lane in &mut by_lane {
            lane.sort_by(|a, b| order(a, b));
            for w in lane.windows(2) {
                if w[0].s - w[0].length - w[1].s <= 0.0 {
                    return Err(Error::CollisionDetected {
                        follower: w[1].id,
                        leader: w[0].id,
                        t,
                    });
                }
            }
        }
        let s = &self.stats;
        if s.injected != s.exited + s.removed + self.vehicles.len() as u64 {
            return Err(Error::InvariantViolated(format!(
                "conservation: injected {} != exited {} + removed {} + on network {}",
                s.injected,
                s.exited,
                s.removed,
                self.vehicles.len()
            )));
        }
        Ok(())
    }

    /// Closes every open track and returns all tracks ordered by vehicle id.
    pub fn finish(mut self) -> (Vec<VehicleTrack>, Vec<DetectorRecord>, SimStats) {
        let ids: Vec<u64> = self.open_tracks.keys().copied().collect();
        for id in ids {
            self.close_track(id);
        }
        self.stats.on_network_at_end = self.vehicles.len() as u64;
        self.tracks.sort_by_key(|t| t.vehicle_id.parse::<u64>().unwrap_or(u64::MAX));
        (self.tracks, self.detectors, self.stats)
    }
}

/// Downstream first; ties broken by id.
fn order(a: &VehicleState, b: &VehicleState) -> std::cmp::Ordering {
    b.s.total_cmp(&a.s).then(a.id.cmp(&b.id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ScenarioConfig;

    fn quiet() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.demand.volume = 0.0;
        cfg.warmup = 0.0;
        cfg.behavior.discretionary_rate = 0.0;
        cfg
    }

    #[test]
    fn single_vehicle_reaches_desired_speed() {
        let cfg = quiet();
        let mut w = World::new(&cfg, 1);
        let mut v = VehicleState::new(1, VehicleClass::Small, 3, 0.0, 10.0, 25.0, 200.0, &cfg.behavior);
        v.since_change = 0.0;
        w.vehicles.push(v);
        w.stats.injected = 1;
        for _ in 0..300 {
            w.step().unwrap();
        }
        assert!((w.vehicles[0].v - 25.0).abs() < 0.1);
    }

    #[test]
    fn follower_settles_behind_slow_leader() {
        let cfg = quiet();
        let mut w = World::new(&cfg, 1);
        let b = &cfg.behavior;
        w.vehicles.push(VehicleState::new(1, VehicleClass::Small, 3, 150.0, 60.0 / 3.6, 60.0 / 3.6, 200.0, b));
        w.vehicles.push(VehicleState::new(2, VehicleClass::Small, 3, 40.0, 25.0, 100.0 / 3.6, 200.0, b));
        w.stats.injected = 2;
        for _ in 0..600 {
            w.step().unwrap();
        }
        let (l, f) = (&w.vehicles[0], &w.vehicles[1]);
        let g_star = cfg.driving.cc0_standstill + cfg.driving.cc1_headway * l.v;
        assert!((f.v - l.v).abs() < 0.2);
        assert!((l.s - l.length - f.s - g_star).abs() <= cfg.driving.cc2_variation);
    }
}
