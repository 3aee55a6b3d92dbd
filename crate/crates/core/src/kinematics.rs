//! Speed, curvature and longitudinal/lateral acceleration recovered from
//! sampled positions.
//!
//! With primes denoting time derivatives of the position `(x, y)`:
//!
//! ```text
//! v   = sqrt(x'^2 + y'^2)
//! rho = (x'^2 + y'^2)^(3/2) / (x'' y' - x' y'')
//! a_x = (x' x'' + y' y'') / v         (tangential)
//! a_y = (x'' y' - x' y'') / v = v^2 / rho   (normal)
//! ```
//!
//! A positive denominator means the path bends clockwise (a right turn in a
//! frame whose +y axis points left).

use crate::error::{Error, Result};
use crate::model::{KinematicSample, VehicleClass, VehicleTrack};
use serde::{Deserialize, Serialize};

pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicsConfig {
    /// Below this speed (m/s) both accelerations are reported as zero.
    pub epsilon_v: f64,
    /// Curvature denominators smaller than this count as straight motion.
    pub epsilon_d: f64,
    /// Allowed deviation of any sampling interval from the first one (s).
    pub dt_tolerance: f64,
    /// Apply a 3-sample moving average to positions before differencing.
    pub smooth: bool,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            epsilon_v: 0.1,
            epsilon_d: 1e-9,
            dt_tolerance: 1e-6,
            smooth: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicTrack {
    pub vehicle_id: String,
    pub vehicle_class: VehicleClass,
    pub samples: Vec<KinematicSample>,
    pub sample_rate_hz: f64,
}

impl KinematicTrack {
    pub fn t_span(&self) -> (f64, f64) {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => (0.0, 0.0),
        }
    }

    pub fn a_x(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.a_x).collect()
    }

    pub fn a_y(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.a_y).collect()
    }
}

/// First and second time derivatives of position at one interior sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
    pub ddx: f64,
    pub ddy: f64,
}

/// Sampling interval of a track, checked for uniformity.
pub fn sampling_interval(track: &VehicleTrack, tolerance: f64) -> Result<f64> {
    let s = &track.samples;
    if s.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            vehicle_id: track.vehicle_id.clone(),
            len: s.len(),
            min: MIN_SAMPLES,
        });
    }
    let dt = s[1].t - s[0].t;
    let (mut lo, mut hi) = (dt, dt);
    for w in s.windows(2) {
        let d = w[1].t - w[0].t;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(lo > 0.0) || hi - lo > tolerance {
        return Err(Error::NonUniformSampling {
            vehicle_id: track.vehicle_id.clone(),
            dt_min: lo,
            dt_max: hi,
        });
    }
    Ok((s[s.len() - 1].t - s[0].t) / (s.len() - 1) as f64)
}

fn moving_average(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                values[i]
            } else {
                (values[i - 1] + values[i] + values[i + 1]) / 3.0
            }
        })
        .collect()
}

/// Central-difference derivatives; the first and last samples are trimmed.
pub fn differentiate(track: &VehicleTrack, config: &KinematicsConfig) -> Result<Vec<Derivatives>> {
    let dt = sampling_interval(track, config.dt_tolerance)?;
    let mut xs: Vec<f64> = track.samples.iter().map(|s| s.x).collect();
    let mut ys: Vec<f64> = track.samples.iter().map(|s| s.y).collect();
    if config.smooth {
        xs = moving_average(&xs);
        ys = moving_average(&ys);
    }
    let dt2 = dt * dt;
    Ok((1..xs.len() - 1)
        .map(|i| Derivatives {
            t: track.samples[i].t,
            x: track.samples[i].x,
            y: track.samples[i].y,
            dx: (xs[i + 1] - xs[i - 1]) / (2.0 * dt),
            dy: (ys[i + 1] - ys[i - 1]) / (2.0 * dt),
            ddx: (xs[i + 1] - 2.0 * xs[i] + xs[i - 1]) / dt2,
            ddy: (ys[i + 1] - 2.0 * ys[i] + ys[i - 1]) / dt2,
        })
        .collect())
}

/// Signed curvature radius; `f64::INFINITY` when the motion is straight.
pub fn curvature_radius(d: &Derivatives, epsilon_d: f64) -> f64 {
    let denom = d.ddx * d.dy - d.dx * d.ddy;
    if denom.abs() < epsilon_d {
        return f64::INFINITY;
    }
    (d.dx * d.dx + d.dy * d.dy).powf(1.5) / denom
}

/// `(v, a_x, a_y)`; accelerations are zero below `epsilon_v`.
pub fn accelerations(d: &Derivatives, config: &KinematicsConfig) -> (f64, f64, f64) {
    let v = d.dx.hypot(d.dy);
    if v <= config.epsilon_v {
        return (v, 0.0, 0.0);
    }
    let a_x = (d.dx * d.ddx + d.dy * d.ddy) / v;
    let denom = d.ddx * d.dy - d.dx * d.ddy;
    let a_y = if denom.abs() < config.epsilon_d { 0.0 } else { denom / v };
    (v, a_x, a_y)
}

pub fn derive_kinematics(track: &VehicleTrack, config: &KinematicsConfig) -> Result<KinematicTrack> {
    let derivs = differentiate(track, config)?;
    let mut heading = 0.0;
    let samples = derivs
        .iter()
        .map(|d| {
            let (v, a_x, a_y) = accelerations(d, config);
            let rho = if v > config.epsilon_v {
                heading = d.dy.atan2(d.dx);
                curvature_radius(d, config.epsilon_d)
            } else {
                f64::INFINITY
            };
            KinematicSample {
                t: d.t,
                x: d.x,
                y: d.y,
                v,
                rho,
                a_x,
                a_y,
                heading,
            }
        })
        .collect();
    Ok(KinematicTrack {
        vehicle_id: track.vehicle_id.clone(),
        vehicle_class: track.vehicle_class,
        samples,
        sample_rate_hz: track.sample_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrajectorySample;

    fn track_from(f: impl Fn(f64) -> (f64, f64), n: usize, dt: f64) -> VehicleTrack {
        VehicleTrack {
            vehicle_id: "t".into(),
            vehicle_class: VehicleClass::Small,
            samples: (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    let (x, y) = f(t);
                    TrajectorySample { t, x, y, v: None, lane: None }
                })
                .collect(),
            sample_rate_hz: 1.0 / dt,
        }
    }

    #[test]
    fn linear_motion() {
        let tr = track_from(|t| (10.0 * t, 0.0), 50, 0.1);
        for d in differentiate(&tr, &KinematicsConfig::default()).unwrap() {
            assert!((d.dx - 10.0).abs() < 1e-9);
            assert!(d.ddx.abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_is_exact() {
        let tr = track_from(|t| (0.5 * 1.2 * t * t, 0.0), 50, 0.1);
        for d in differentiate(&tr, &KinematicsConfig::default()).unwrap() {
            assert!((d.ddx - 1.2).abs() < 1e-9, "{}", d.ddx);
        }
    }

    #[test]
    fn circle_derivative_matches_closed_form() {
        let tr = track_from(|t| (100.0 * (0.2 * t).cos(), 100.0 * (0.2 * t).sin()), 200, 0.1);
        for d in differentiate(&tr, &KinematicsConfig::default()).unwrap() {
            let exact = -20.0 * (0.2 * d.t).sin();
            let rel = (d.dx - exact).abs() / 20.0;
            assert!(rel < 1e-3, "t={} dx={} exact={}", d.t, d.dx, exact);
        }
    }

    #[test]
    fn straight_line_is_infinite_radius() {
        let tr = track_from(|t| (7.0 * t, 3.0 + 2.0 * t), 20, 0.1);
        let k = derive_kinematics(&tr, &KinematicsConfig::default()).unwrap();
        for s in &k.samples {
            assert!(s.rho.is_infinite());
            assert_eq!(s.a_y, 0.0);
            assert!(s.a_x.abs() < 1e-9);
        }
    }

    #[test]
    fn braking_straight_line() {
        let tr = track_from(|t| (20.0 * t - 0.5 * 2.5 * t * t, 1.75), 30, 0.1);
        let k = derive_kinematics(&tr, &KinematicsConfig::default()).unwrap();
        for s in &k.samples {
            assert!((s.a_x + 2.5).abs() < 1e-9);
            assert_eq!(s.a_y, 0.0);
        }
    }

    #[test]
    fn turn_direction_sign() {
        // counterclockwise = left turn, clockwise = right turn
        let ccw = track_from(|t| (100.0 * (0.2 * t).sin(), 100.0 - 100.0 * (0.2 * t).cos()), 60, 0.1);
        let cw = track_from(|t| (100.0 * (0.2 * t).sin(), -100.0 + 100.0 * (0.2 * t).cos()), 60, 0.1);
        let cfg = KinematicsConfig::default();
        let a = derive_kinematics(&ccw, &cfg).unwrap();
        let b = derive_kinematics(&cw, &cfg).unwrap();
        for (p, q) in a.samples.iter().zip(&b.samples) {
            assert!(p.rho < 0.0 && q.rho > 0.0);
            assert!((p.rho.abs() - 100.0).abs() < 0.1);
            assert!((p.rho + q.rho).abs() < 1e-6);
        }
    }

    #[test]
    fn stationary_vehicle() {
        let tr = track_from(|_| (5.0, 1.75), 20, 0.1);
        let k = derive_kinematics(&tr, &KinematicsConfig::default()).unwrap();
        assert!(k.samples.iter().all(|s| s.a_x == 0.0 && s.a_y == 0.0 && s.v == 0.0));
    }

    #[test]
    fn too_short_and_nonuniform() {
        let tr = track_from(|t| (t, 0.0), 4, 0.1);
        assert!(matches!(
            differentiate(&tr, &KinematicsConfig::default()),
            Err(Error::TooShort { .. })
        ));
        let mut tr = track_from(|t| (t, 0.0), 10, 0.1);
        tr.samples[5].t += 0.01;
        assert!(matches!(
            differentiate(&tr, &KinematicsConfig::default()),
            Err(Error::NonUniformSampling { .. })
        ));
    }

    #[test]
    fn trims_endpoints() {
        let tr = track_from(|t| (t, 0.0), 10, 0.1);
        let k = derive_kinematics(&tr, &KinematicsConfig::default()).unwrap();
        assert_eq!(k.samples.len(), 8);
        assert_eq!(k.samples[0].t, tr.samples[1].t);
    }
}
