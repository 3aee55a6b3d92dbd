//! Synthetic labelled manoeuvres for training and checking the classifier.
//!
//! Each sample is a generated trajectory pushed through the kinematics
//! pipeline; the label always comes from the rule cascade, never from the
//! generator's intent.

use super::{extract_features, rule_label, BehaviorLabel, FeatureVector, RuleConfig};
use crate::detect::{TriggerAxis, UnsafeInterval};
use crate::kinematics::{derive_kinematics, KinematicsConfig};
use crate::model::{TrajectorySample, VehicleClass, VehicleTrack};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const FINE_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manoeuvre {
    pub v0: f64,
    pub accel: f64,
    pub duration: f64,
    /// Net heading change of a turn (rad, positive left).
    pub heading_change: f64,
    /// Lateral offset of a lane change (m, positive left).
    pub lateral_shift: f64,
}

/// Samples the manoeuvre at `rate_hz` with one second of steady driving on
/// either side. Returns the track and the manoeuvre's time span.
pub fn render(m: &Manoeuvre, rate_hz: f64) -> (VehicleTrack, f64, f64) {
    let pad = 1.0;
    let dt = 1.0 / rate_hz;
    let n = ((m.duration + 2.0 * pad) * rate_hz).round() as usize + 1;
    let speed = |t: f64| {
        let tau = (t - pad).clamp(0.0, m.duration);
        m.v0 + m.accel * tau
    };
    let heading = |t: f64| {
        let tau = ((t - pad) / m.duration).clamp(0.0, 1.0);
        m.heading_change * 0.5 * (1.0 - (PI * tau).cos())
    };
    let shift = |t: f64| {
        let tau = ((t - pad) / m.duration).clamp(0.0, 1.0);
        m.lateral_shift * 0.5 * (1.0 - (PI * tau).cos())
    };
    let mut samples = Vec::with_capacity(n);
    let (mut x, mut y) = (0.0, 1.75);
    let h = dt / FINE_STEPS as f64;
    for i in 0..n {
        let t = i as f64 * dt;
        samples.push(TrajectorySample {
            t,
            x,
            y: y + shift(t),
            v: None,
            lane: None,
        });
        for k in 0..FINE_STEPS {
            let tm = t + (k as f64 + 0.5) * h;
            let (v, psi) = (speed(tm), heading(tm));
            x += v * psi.cos() * h;
            y += v * psi.sin() * h;
        }
    }
    let track = VehicleTrack {
        vehicle_id: "synthetic".into(),
        vehicle_class: VehicleClass::Small,
        samples,
        sample_rate_hz: rate_hz,
    };
    (track, pad, pad + m.duration)
}

fn draw(intent: BehaviorLabel, rng: &mut ChaCha8Rng) -> Manoeuvre {
    use BehaviorLabel::*;
    let v0 = rng.random_range(8.0..30.0);
    let mut duration: f64 = rng.random_range(2.0..5.0);
    let lon = match intent {
        LA | TLA | TRA => rng.random_range(0.7..2.5),
        LD | TLD | TRD => rng.random_range(-3.5..-0.7),
        TLCL | TRCL => rng.random_range(-1.0..1.0),
        _ => rng.random_range(-0.15..0.15),
    };
    if lon < 0.0 {
        duration = duration.min((v0 - 3.0) / -lon);
    }
    let turn = rng.random_range(0.3..1.0);
    let (heading_change, lateral_shift) = match intent {
        TLC | TLA | TLD => (turn, 0.0),
        TRC | TRA | TRD => (-turn, 0.0),
        TLCL => (0.0, rng.random_range(3.0..3.8)),
        TRCL => (0.0, -rng.random_range(3.0..3.8)),
        _ => (0.0, 0.0),
    };
    Manoeuvre {
        v0,
        accel: lon,
        duration: duration.max(1.5),
        heading_change,
        lateral_shift,
    }
}

/// Features and rule label of one manoeuvre.
pub fn sample(m: &Manoeuvre, rules: &RuleConfig) -> (FeatureVector, BehaviorLabel) {
    let (track, t0, t1) = render(m, 10.0);
    let k = derive_kinematics(&track, &KinematicsConfig::default()).expect("synthetic track is valid");
    let iv = UnsafeInterval {
        t_start: t0,
        t_end: t1,
        trigger_axis: TriggerAxis::Both,
        peak_energy: 0.0,
        peak_t: t0,
    };
    let f = extract_features(&k, &iv).expect("interval inside track");
    (f, rule_label(&f, rules))
}

/// Exactly `per_class` examples of every label, deterministic in `seed`.
pub fn generate(per_class: usize, seed: u64, rules: &RuleConfig) -> Vec<(FeatureVector, BehaviorLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 11];
    let mut out = Vec::with_capacity(per_class * 11);
    let mut attempts = 0usize;
    while counts.iter().any(|&c| c < per_class) {
        attempts += 1;
        assert!(attempts < per_class * 11 * 20, "corpus generator cannot fill every class");
        let intent = BehaviorLabel::ALL[attempts % 11];
        if counts[intent.index()] >= per_class {
            continue;
        }
        let (f, label) = sample(&draw(intent, &mut rng), rules);
        if counts[label.index()] < per_class {
            counts[label.index()] += 1;
            out.push((f, label));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intents_mostly_match_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rules = RuleConfig::default();
        let mut agree = 0;
        let total = 220;
        for i in 0..total {
            let intent = BehaviorLabel::ALL[i % 11];
            let (_, label) = sample(&draw(intent, &mut rng), &rules);
            agree += (label == intent) as usize;
        }
        assert!(agree as f64 / total as f64 > 0.9, "{agree}/{total}");
    }

    #[test]
    fn balanced_and_deterministic() {
        let rules = RuleConfig::default();
        let a = generate(25, 1, &rules);
        assert_eq!(a.len(), 25 * 11);
        for l in BehaviorLabel::ALL {
            assert_eq!(a.iter().filter(|(_, x)| *x == l).count(), 25);
        }
        assert_eq!(a, generate(25, 1, &rules));
    }
}
