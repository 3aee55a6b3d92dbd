//! Driving-parameter calibration with a 16-run orthogonal design.
//!
//! Each design row is simulated, the speeds passing the work-area detector
//! are compared with observations through two indicators (`p1` over the
//! cumulative speed distributions, `p2` over the class mean speeds), and the
//! level means per factor pick the best combination. A confirmation run then
//! checks the relative error ξ of every observed measure.

use crate::error::{Error, Result};
use crate::model::VehicleClass;
use crate::par::{self, Execution};
use crate::sim::speed::SpeedDistribution;
use crate::sim::{run_scenario, DrivingParams, ScenarioConfig};
use crate::site;
use serde::{Deserialize, Serialize};

pub const FACTORS: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Speeds (km/h) whose cumulative proportions enter `p1`.
pub const P1_POINTS: [f64; 8] = [35.0, 45.0, 55.0, 65.0, 75.0, 85.0, 95.0, 105.0];

/// Zero-based level of each factor in every design row.
const L16: [[usize; 5]; 16] = [
    [0, 0, 0, 0, 0],
    [0, 1, 1, 1, 1],
    [0, 2, 2, 2, 2],
    [0, 3, 3, 3, 3],
    [1, 0, 1, 2, 3],
    [1, 1, 0, 3, 2],
    [1, 2, 3, 0, 1],
    [1, 3, 2, 1, 0],
    [2, 0, 2, 3, 1],
    [2, 1, 3, 2, 0],
    [2, 2, 0, 1, 3],
    [2, 3, 1, 0, 2],
    [3, 0, 3, 1, 2],
    [3, 1, 2, 0, 3],
    [3, 2, 1, 3, 0],
    [3, 3, 0, 2, 1],
];

/// The orthogonal design, one row per run, levels counted from 0.
pub fn l16_design() -> [[usize; 5]; 16] {
    L16
}

/// Candidate values for standstill distance (A), headway time (B),
/// following variation (C), waiting time before diffusion (D) and minimum
/// headway (E).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorLevels {
    pub levels: [[f64; 4]; 5],
}

impl Default for FactorLevels {
    fn default() -> Self {
        Self {
            levels: [
                [0.5, 1.0, 1.5, 2.0],
                [0.7, 0.8, 0.9, 1.0],
                [3.0, 4.0, 5.0, 6.0],
                [60.0, 80.0, 100.0, 120.0],
                [0.5, 1.0, 1.5, 2.0],
            ],
        }
    }
}

impl FactorLevels {
    pub fn params(&self, levels: [usize; 5]) -> DrivingParams {
        let v = |f: usize| self.levels[f][levels[f]];
        DrivingParams {
            cc0_standstill: v(0),
            cc1_headway: v(1),
            cc2_variation: v(2),
            diffusion_wait: v(3),
            min_headway: v(4),
        }
    }
}

/// Combination label such as `A3B1C2D2E1` (levels printed from 1).
pub fn combo_label(levels: [usize; 5]) -> String {
    FACTORS
        .iter()
        .zip(levels)
        .map(|(f, l)| format!("{f}{}", l + 1))
        .collect()
}

/// How signed differences are folded into one indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorMode {
    /// Absolute value of the summed differences; offsetting errors cancel.
    #[default]
    Literal,
    /// Sum of absolute differences.
    Absolute,
}

fn fold(diffs: impl Iterator<Item = f64>, mode: IndicatorMode) -> f64 {
    match mode {
        IndicatorMode::Literal => diffs.sum::<f64>().abs(),
        IndicatorMode::Absolute => diffs.map(f64::abs).sum(),
    }
}

fn point_index(d: &SpeedDistribution, x: f64) -> Option<usize> {
    d.control_points.iter().position(|&c| (c - x).abs() < 1e-9)
}

/// Distribution indicator over the cumulative proportions at [`P1_POINTS`].
pub fn p1(sim: &SpeedDistribution, actual: &SpeedDistribution, mode: IndicatorMode) -> Result<f64> {
    if sim.control_points.len() != actual.control_points.len()
        || sim.cumulative.len() != sim.control_points.len()
        || actual.cumulative.len() != actual.control_points.len()
    {
        return Err(Error::MismatchedControlPoints);
    }
    let mut diffs = Vec::with_capacity(P1_POINTS.len());
    for x in P1_POINTS {
        match (point_index(sim, x), point_index(actual, x)) {
            (Some(i), Some(j)) => diffs.push(sim.cumulative[i] - actual.cumulative[j]),
            _ => return Err(Error::MismatchedControlPoints),
        }
    }
    Ok(fold(diffs.into_iter(), mode))
}

/// Mean-speed indicator over (small, large, all) in km/h.
pub fn p2(sim_means: [f64; 3], actual_means: [f64; 3], mode: IndicatorMode) -> f64 {
    fold(sim_means.iter().zip(actual_means).map(|(s, a)| s - a), mode)
}

/// Relative error in percent of a simulated value against the observed one.
pub fn xi(sim_value: f64, actual_value: f64) -> Result<f64> {
    if actual_value == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((actual_value - sim_value).abs() / actual_value.abs() * 100.0)
}

/// Observed speeds at the work-area camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub small: Option<SpeedDistribution>,
    pub large: Option<SpeedDistribution>,
    /// Mean speeds (km/h) of small, large and all vehicles.
    pub means: [f64; 3],
}

impl Default for Observations {
    fn default() -> Self {
        let b = site::position_b();
        Self {
            small: Some(b.small),
            large: Some(b.large),
            means: site::B_MEANS,
        }
    }
}

impl Observations {
    fn distributions(&self) -> Result<(&SpeedDistribution, &SpeedDistribution)> {
        let mut problems = Vec::new();
        for (name, d) in [("small", &self.small), ("large", &self.large)] {
            match d {
                None => problems.push(format!("observed {name}-vehicle speed distribution is missing")),
                Some(d) => problems.extend(d.validate().into_iter().map(|m| format!("observed {name}: {m}"))),
            }
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            problems.push("observed mean speeds must be finite".into());
        }
        match (&self.small, &self.large) {
            (Some(s), Some(l)) if problems.is_empty() => Ok((s, l)),
            _ => Err(Error::InvalidConfig(problems)),
        }
    }
}

/// Speeds measured at the detector during one design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub small: SpeedDistribution,
    pub large: SpeedDistribution,
    pub means: [f64; 3],
    pub counts: [usize; 2],
}

impl Measured {
    pub fn from_speeds(control_points: &[f64], small: &[f64], large: &[f64]) -> Self {
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let all: Vec<f64> = small.iter().chain(large).copied().collect();
        Self {
            small: SpeedDistribution::from_samples(control_points, small),
            large: SpeedDistribution::from_samples(control_points, large),
            means: [mean(small), mean(large), mean(&all)],
            counts: [small.len(), large.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalRun {
    /// Row of the design, from 1.
    pub index: usize,
    pub levels: [usize; 5],
    pub params: DrivingParams,
    pub measured: Measured,
    /// Sum of the small- and large-vehicle distribution indicators.
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMeans {
    pub p1: [[f64; 4]; 5],
    pub p2: [[f64; 4]; 5],
}

/// Mean indicator over the four runs holding each (factor, level).
pub fn level_means(runs: &[OrthogonalRun]) -> Result<LevelMeans> {
    if runs.len() != 16 {
        return Err(Error::IncompleteRuns(runs.len()));
    }
    let mut out = LevelMeans {
        p1: [[0.0; 4]; 5],
        p2: [[0.0; 4]; 5],
    };
    for run in runs {
        for (f, &l) in run.levels.iter().enumerate() {
            out.p1[f][l] += run.p1 / 4.0;
            out.p2[f][l] += run.p2 / 4.0;
        }
    }
    Ok(out)
}

/// Lowest mean level per factor; ties go to the lower level.
pub fn best_levels(means: &[[f64; 4]; 5]) -> [usize; 5] {
    let mut best = [0; 5];
    for (f, row) in means.iter().enumerate() {
        for l in 1..4 {
            if row[l] < row[best[f]] {
                best[f] = l;
            }
        }
    }
    best
}

fn ranks(row: &[f64; 4]) -> [usize; 4] {
    let mut r = [0; 4];
    for (i, v) in row.iter().enumerate() {
        r[i] = row.iter().enumerate().filter(|&(j, w)| w < v || (w == v && j < i)).count();
    }
    r
}

/// Level per factor with the lowest summed rank under both indicators; ties
/// go to the `p1` choice, then to the lower level.
pub fn combined_best(means: &LevelMeans) -> [usize; 5] {
    let by_p1 = best_levels(&means.p1);
    let mut best = [0; 5];
    for f in 0..5 {
        let (r1, r2) = (ranks(&means.p1[f]), ranks(&means.p2[f]));
        let score = |l: usize| (r1[l] + r2[l], l != by_p1[f], l);
        best[f] = (0..4).min_by_key(|&l| score(l)).unwrap_or(0);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiMeasure {
    pub name: String,
    pub actual: f64,
    pub simulated: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub measures: Vec<XiMeasure>,
    /// Observed measures left out because their value is zero.
    pub skipped: Vec<String>,
    pub within: usize,
    pub share_within: f64,
    pub passed: bool,
}

/// ξ for every nonzero observed measure: cumulative proportions of both
/// classes at every control point, then the three mean speeds.
pub fn validate_measures(
    measured: &Measured,
    actual: &Observations,
    tolerance_pct: f64,
    confidence: f64,
) -> Result<Validation> {
    let (obs_small, obs_large) = actual.distributions()?;
    let mut pairs: Vec<(String, f64, f64)> = Vec::new();
    for (name, obs, sim) in [("small", obs_small, &measured.small), ("large", obs_large, &measured.large)] {
        for (i, &x) in obs.control_points.iter().enumerate() {
            let j = point_index(sim, x).ok_or(Error::MismatchedControlPoints)?;
            pairs.push((format!("{name} cumulative at {x} km/h"), obs.cumulative[i], sim.cumulative[j]));
        }
    }
    for (i, name) in ["small", "large", "all"].iter().enumerate() {
        pairs.push((format!("{name} mean speed"), actual.means[i], measured.means[i]));
    }
    let mut measures = Vec::new();
    let mut skipped = Vec::new();
    for (name, a, s) in pairs {
        match xi(s, a) {
            Ok(x) => measures.push(XiMeasure {
                name,
                actual: a,
                simulated: s,
                xi: x,
            }),
            Err(Error::ZeroReference) => skipped.push(name),
            Err(e) => return Err(e),
        }
    }
    let within = measures.iter().filter(|m| m.xi <= tolerance_pct + 1e-12).count();
    let share_within = if measures.is_empty() {
        0.0
    } else {
        within as f64 / measures.len() as f64
    };
    Ok(Validation {
        passed: !measures.is_empty() && share_within >= confidence - 1e-12,
        measures,
        skipped,
        within,
        share_within,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub factors: FactorLevels,
    pub mode: IndicatorMode,
    /// Index into the scenario's detector list of the compared position.
    pub detector: usize,
    pub tolerance_pct: f64,
    /// Share of measures that must fall within the tolerance.
    pub confidence: f64,
    /// Added to the template seed for the confirmation run.
    pub confirmation_seed_offset: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            factors: FactorLevels::default(),
            mode: IndicatorMode::Literal,
            detector: 1,
            tolerance_pct: 10.0,
            confidence: 0.9,
            confirmation_seed_offset: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub runs: Vec<OrthogonalRun>,
    pub level_means: LevelMeans,
    pub best_p1: [usize; 5],
    pub best_p2: [usize; 5],
    pub best: [usize; 5],
    pub best_label: String,
    pub best_params: DrivingParams,
    pub confirmation: Measured,
    pub validation: Validation,
}

/// Simulates `template` with `params` and measures the chosen detector.
pub fn measure(
    template: &ScenarioConfig,
    params: DrivingParams,
    detector: usize,
    control_points: &[f64],
    exec: Execution,
) -> Result<Measured> {
    let cfg = ScenarioConfig {
        driving: params,
        ..template.clone()
    };
    let n = cfg.detector_positions().len();
    if detector >= n {
        return Err(Error::InvalidConfig(vec![format!(
            "calibration detector {detector} does not exist ({n} detectors)"
        )]));
    }
    let outs = run_scenario(&cfg, exec)?;
    let (mut small, mut large) = (Vec::new(), Vec::new());
    for o in &outs {
        small.extend(o.detectors[detector].speeds(Some(VehicleClass::Small)));
        large.extend(o.detectors[detector].speeds(Some(VehicleClass::Large)));
    }
    Ok(Measured::from_speeds(control_points, &small, &large))
}

/// Full procedure: 16 design runs, level means, best levels, confirmation.
pub fn calibrate(
    actual: &Observations,
    template: &ScenarioConfig,
    cfg: &CalibrationConfig,
    exec: Execution,
) -> Result<CalibrationResult> {
    let (obs_small, obs_large) = actual.distributions()?;
    if obs_small.control_points != obs_large.control_points {
        return Err(Error::MismatchedControlPoints);
    }
    template.check()?;
    let cps = obs_small.control_points.clone();
    let runs: Vec<OrthogonalRun> = par::map(exec, &l16_design(), |&levels| -> Result<OrthogonalRun> {
        let params = cfg.factors.params(levels);
        let measured = measure(template, params, cfg.detector, &cps, Execution::Sequential)?;
        let p1v = p1(&measured.small, obs_small, cfg.mode)? + p1(&measured.large, obs_large, cfg.mode)?;
        let p2v = p2(measured.means, actual.means, cfg.mode);
        Ok(OrthogonalRun {
            index: 0,
            levels,
            params,
            measured,
            p1: p1v,
            p2: p2v,
        })
    })
    .into_iter()
    .enumerate()
    .map(|(i, r)| r.map(|r| OrthogonalRun { index: i + 1, ..r }))
    .collect::<Result<_>>()?;

    let means = level_means(&runs)?;
    let best = combined_best(&means);
    let best_params = cfg.factors.params(best);
    let confirm_template = ScenarioConfig {
        seed: template.seed.wrapping_add(cfg.confirmation_seed_offset),
        ..template.clone()
    };
    let confirmation = measure(&confirm_template, best_params, cfg.detector, &cps, exec)?;
    let validation = validate_measures(&confirmation, actual, cfg.tolerance_pct, cfg.confidence)?;
    Ok(CalibrationResult {
        best_p1: best_levels(&means.p1),
        best_p2: best_levels(&means.p2),
        best,
        best_label: combo_label(best),
        best_params,
        runs,
        level_means: means,
        confirmation,
        validation,
    })
}
