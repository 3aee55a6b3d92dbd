//! Empirical desired-speed distributions.

use crate::error::{Error, Result};
use crate::model::VehicleClass;
use serde::{Deserialize, Serialize};

/// Piecewise-linear cumulative distribution over speeds in km/h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedDistribution {
    pub control_points: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl SpeedDistribution {
    pub fn new(control_points: Vec<f64>, cumulative: Vec<f64>) -> Result<Self> {
        let d = Self {
            control_points,
            cumulative,
        };
        let problems = d.validate();
        if problems.is_empty() {
            Ok(d)
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.control_points.len() != self.cumulative.len() {
            v.push("control_points and cumulative differ in length".into());
            return v;
        }
        if self.control_points.len() < 2 {
            v.push("speed distribution needs at least two control points".into());
            return v;
        }
        if self.control_points.windows(2).any(|w| !(w[1] > w[0])) {
            v.push("control points must be strictly ascending".into());
        }
        if self.cumulative.windows(2).any(|w| w[1] < w[0]) {
            v.push("cumulative proportions must be nondecreasing".into());
        }
        if self.cumulative.iter().any(|p| !(0.0..=1.0).contains(p)) {
            v.push("cumulative proportions must lie in [0, 1]".into());
        }
        if self.cumulative.last() != Some(&1.0) {
            v.push("cumulative distribution must end at 1".into());
        }
        v
    }

    /// Cumulative proportion at `speed`, linear between control points.
    pub fn cdf(&self, speed: f64) -> f64 {
        let (xs, ps) = (&self.control_points, &self.cumulative);
        if speed <= xs[0] {
            return ps[0];
        }
        for i in 1..xs.len() {
            if speed <= xs[i] {
                let f = (speed - xs[i - 1]) / (xs[i] - xs[i - 1]);
                return ps[i - 1] + f * (ps[i] - ps[i - 1]);
            }
        }
        1.0
    }

    /// Mean speed of the piecewise-uniform density (km/h).
    pub fn mean(&self) -> f64 {
        let (xs, ps) = (&self.control_points, &self.cumulative);
        let mut m = xs[0] * ps[0];
        for i in 1..xs.len() {
            m += (ps[i] - ps[i - 1]) * 0.5 * (xs[i] + xs[i - 1]);
        }
        m
    }

    /// Empirical distribution of observed speeds on the given control points.
    pub fn from_samples(control_points: &[f64], speeds: &[f64]) -> Self {
        let n = speeds.len().max(1) as f64;
        let mut cumulative: Vec<f64> = control_points
            .iter()
            .map(|&c| speeds.iter().filter(|&&s| s <= c).count() as f64 / n)
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            control_points: control_points.to_vec(),
            cumulative,
        }
    }
}

/// Inverse of the cumulative distribution; `u` is clamped into [0, 1] and the
/// result stays within the first and last control point.
pub fn sample_desired_speed(dist: &SpeedDistribution, u: f64) -> f64 {
    let (xs, ps) = (&dist.control_points, &dist.cumulative);
    let u = u.clamp(0.0, 1.0);
    if u <= ps[0] {
        return xs[0];
    }
    for i in 1..xs.len() {
        if u <= ps[i] && ps[i] > ps[i - 1] {
            let f = (u - ps[i - 1]) / (ps[i] - ps[i - 1]);
            return xs[i - 1] + f * (xs[i] - xs[i - 1]);
        }
    }
    *xs.last().unwrap()
}

/// Desired-speed distributions of both vehicle classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpeeds {
    pub small: SpeedDistribution,
    pub large: SpeedDistribution,
}

impl ClassSpeeds {
    pub fn get(&self, class: VehicleClass) -> &SpeedDistribution {
        match class {
            VehicleClass::Small => &self.small,
            VehicleClass::Large => &self.large,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::site;

    #[test]
    fn endpoints() {
        let d = site::position_a().large;
        assert_eq!(sample_desired_speed(&d, 1.0), 110.0);
        assert_eq!(sample_desired_speed(&d, 0.0), 35.0);
    }

    #[test]
    fn large_vehicles_at_a() {
        let d = site::position_a().large;
        assert!((sample_desired_speed(&d, 0.43) - 85.0).abs() < 1e-12);
        assert!((sample_desired_speed(&d, 0.215) - 80.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_cdf() {
        let d = site::position_b().small;
        for k in 1..100 {
            let u = k as f64 / 100.0;
            assert!((d.cdf(sample_desired_speed(&d, u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(SpeedDistribution::new(vec![1.0, 2.0], vec![0.0, 0.9]).is_err());
        assert!(SpeedDistribution::new(vec![2.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(SpeedDistribution::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn empirical_distribution() {
        let d = SpeedDistribution::from_samples(&[10.0, 20.0, 30.0], &[5.0, 15.0, 15.0, 25.0]);
        assert_eq!(d.cumulative, vec![0.25, 0.75, 1.0]);
    }
}
