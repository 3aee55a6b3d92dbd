//! Safety correction matrix and the assess, correct, reassess loop.
//!
//! Three problems are recognised from an [`AssessmentReport`]:
//!
//! * `1`: strong longitudinal acceleration or deceleration upstream of the work area;
//! * `2`: frequent forced lane changes upstream of the work area;
//! * `3`: longitudinal acceleration or deceleration in the termination area.
//!
//! Each maps to stepwise layout adjustments. The loop applies one adjustment
//! per iteration so every change in the audit trail has a single cause.

use crate::classify::BehaviorLabel;
use crate::density::{AssessmentReport, RegionGroup};
use crate::error::{Error, Result};
use crate::model::{TransitionStyle, WorkZoneLayout};
use crate::par::Execution;
use crate::pipeline::{assess_replications, default_grid, AnalysisConfig};
use crate::sim::{run_scenario, ScenarioConfig};
use serde::{Deserialize, Serialize};

/// Largest acceptable peak density per problem. The defaults are
/// illustrative; real values need local accident or baseline data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyThresholds {
    pub upstream_longitudinal: f64,
    pub upstream_lane_change: f64,
    pub termination_longitudinal: f64,
}

impl Default for SafetyThresholds {
    fn default() -> Self {
        Self {
            upstream_longitudinal: 3.0,
            upstream_lane_change: 3.0,
            termination_longitudinal: 3.0,
        }
    }
}

impl SafetyThresholds {
    pub fn uniform(t: f64) -> Self {
        Self {
            upstream_longitudinal: t,
            upstream_lane_change: t,
            termination_longitudinal: t,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        [
            ("upstream_longitudinal", self.upstream_longitudinal),
            ("upstream_lane_change", self.upstream_lane_change),
            ("termination_longitudinal", self.termination_longitudinal),
        ]
        .iter()
        .filter(|(_, v)| !(*v > 0.0))
        .map(|(n, _)| format!("threshold {n} must be > 0"))
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemFlag {
    /// Problem number, 1 to 3.
    pub index: u8,
    pub label: BehaviorLabel,
    pub group: RegionGroup,
    pub density: f64,
    pub threshold: f64,
}

fn strongest(report: &AssessmentReport, labels: &[BehaviorLabel], group: RegionGroup) -> Option<(BehaviorLabel, f64)> {
    labels
        .iter()
        .map(|&l| (l, report.density(l, group)))
        .fold(None, |best: Option<(BehaviorLabel, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
}

/// Problems whose peak density exceeds its threshold, in problem order.
/// The flag records the label with the highest density in its group.
pub fn assess(report: &AssessmentReport, thresholds: &SafetyThresholds) -> Vec<ProblemFlag> {
    use BehaviorLabel::*;
    let checks = [
        (1, &[LA, LD][..], RegionGroup::UpstreamOfWork, thresholds.upstream_longitudinal),
        (2, &[TLCL, TRCL][..], RegionGroup::UpstreamOfWork, thresholds.upstream_lane_change),
        (3, &[LA, LD][..], RegionGroup::Termination, thresholds.termination_longitudinal),
    ];
    checks
        .into_iter()
        .filter_map(|(index, labels, group, threshold)| {
            let (label, density) = strongest(report, labels, group)?;
            (density > threshold).then_some(ProblemFlag {
                index,
                label,
                group,
                density,
                threshold,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionKind {
    RaiseWarningLimit,
    LowerWarningLimit,
    SwitchTransitionToGradual,
    LengthenTransition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionAction {
    pub kind: CorrectionKind,
    /// Problem that asked for the action.
    pub flag: u8,
}

/// Limits and step sizes for layout adjustments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionBounds {
    pub min_limit: f64,
    /// Highest warning limit; `None` uses the layout's road limit.
    pub max_limit: Option<f64>,
    pub min_transition: f64,
    pub max_transition: f64,
    pub limit_step: f64,
    pub transition_step: f64,
}

impl Default for CorrectionBounds {
    fn default() -> Self {
        Self {
            min_limit: 40.0,
            max_limit: None,
            min_transition: 30.0,
            max_transition: 120.0,
            limit_step: 10.0,
            transition_step: 30.0,
        }
    }
}

/// Layout after one action, or `Clamped` when the action would leave the
/// bounds or does not apply to this layout.
pub fn apply(layout: &WorkZoneLayout, action: CorrectionKind, bounds: &CorrectionBounds) -> Result<WorkZoneLayout> {
    let mut out = layout.clone();
    let max_limit = bounds.max_limit.unwrap_or(layout.road_speed_limit);
    match action {
        CorrectionKind::RaiseWarningLimit => {
            let current = layout
                .warning_speed_limit
                .ok_or_else(|| Error::Clamped("no warning speed limit to raise".into()))?;
            let next = current + bounds.limit_step;
            if next > max_limit + 1e-9 {
                return Err(Error::Clamped(format!(
                    "warning limit {next} km/h would exceed {max_limit} km/h"
                )));
            }
            out.warning_speed_limit = Some(next);
        }
        CorrectionKind::LowerWarningLimit => {
            // without a posted limit, drivers are held to the road limit
            let current = layout.warning_speed_limit.unwrap_or(layout.road_speed_limit);
            let next = current - bounds.limit_step;
            if next < bounds.min_limit - 1e-9 {
                return Err(Error::Clamped(format!(
                    "warning limit {next} km/h would fall below {} km/h",
                    bounds.min_limit
                )));
            }
            out.warning_speed_limit = Some(next);
        }
        CorrectionKind::SwitchTransitionToGradual => {
            if layout.upstream_transition_style == TransitionStyle::Gradual {
                return Err(Error::Clamped("transition is already gradual".into()));
            }
            out.upstream_transition_style = TransitionStyle::Gradual;
        }
        CorrectionKind::LengthenTransition => {
            let next = layout.upstream_transition_length + bounds.transition_step;
            if next > bounds.max_transition + 1e-9 {
                return Err(Error::Clamped(format!(
                    "transition {next} m would exceed {} m",
                    bounds.max_transition
                )));
            }
            out.upstream_transition_length = next;
        }
    }
    Ok(out)
}

fn is_limit(kind: CorrectionKind) -> bool {
    matches!(kind, CorrectionKind::RaiseWarningLimit | CorrectionKind::LowerWarningLimit)
}

/// Applicable actions for the flagged problems, ordered by problem priority
/// 1, 3, 2. When raising and lowering the limit are both requested only the
/// higher-priority direction is kept.
pub fn recommend(
    flags: &[ProblemFlag],
    layout: &WorkZoneLayout,
    bounds: &CorrectionBounds,
) -> Result<Vec<CorrectionAction>> {
    use CorrectionKind::*;
    let mut order: Vec<u8> = flags.iter().map(|f| f.index).collect();
    order.sort_by_key(|i| match i {
        1 => 0,
        3 => 1,
        _ => 2,
    });
    order.dedup();

    let mut out: Vec<CorrectionAction> = Vec::new();
    let mut limit_direction: Option<CorrectionKind> = None;
    for flag in order {
        let wanted: Vec<CorrectionKind> = match flag {
            1 => vec![RaiseWarningLimit, SwitchTransitionToGradual],
            2 => {
                if apply(layout, LengthenTransition, bounds).is_ok() {
                    vec![LengthenTransition]
                } else {
                    vec![LowerWarningLimit]
                }
            }
            _ => vec![LowerWarningLimit],
        };
        for kind in wanted {
            if is_limit(kind) {
                match limit_direction {
                    Some(d) if d != kind => continue,
                    _ => {}
                }
            }
            if apply(layout, kind, bounds).is_err() || out.iter().any(|a| a.kind == kind) {
                continue;
            }
            if is_limit(kind) {
                limit_direction = Some(kind);
            }
            out.push(CorrectionAction { kind, flag });
        }
    }
    if out.is_empty() {
        return Err(Error::NoApplicableAction);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub iteration: usize,
    pub layout: WorkZoneLayout,
    pub report: AssessmentReport,
    pub flags: Vec<ProblemFlag>,
    pub recommended: Vec<CorrectionAction>,
    /// The action applied before the next iteration.
    pub applied: Option<CorrectionAction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopHistory {
    pub iterations: Vec<Iteration>,
    pub verdict: Verdict,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoopConfig {
    pub thresholds: SafetyThresholds,
    pub bounds: CorrectionBounds,
    pub analysis: AnalysisConfig,
}

/// Simulates a scenario and assesses its averaged report.
pub fn assess_scenario(cfg: &ScenarioConfig, analysis: &AnalysisConfig, exec: Execution) -> Result<AssessmentReport> {
    let layout = cfg.effective_layout();
    let outputs = run_scenario(cfg, exec)?;
    let tracks: Vec<_> = outputs.into_iter().map(|o| o.tracks).collect();
    let grid = default_grid(&layout);
    let (report, _) = assess_replications(&tracks, &layout, &grid, analysis, Some(cfg.name.clone()), exec)?;
    Ok(report)
}

/// Runs the loop with a caller-supplied assessment, so tests and other
/// front ends can substitute their own evaluation.
pub fn correction_loop_with<F>(
    initial: &WorkZoneLayout,
    cfg: &LoopConfig,
    max_iters: usize,
    mut evaluate: F,
) -> Result<LoopHistory>
where
    F: FnMut(&WorkZoneLayout) -> Result<AssessmentReport>,
{
    let problems = cfg.thresholds.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let mut layout = initial.clone();
    let mut iterations = Vec::new();
    for iteration in 1..=max_iters {
        let report = evaluate(&layout)?;
        let flags = assess(&report, &cfg.thresholds);
        if flags.is_empty() {
            iterations.push(Iteration {
                iteration,
                layout,
                report,
                flags,
                recommended: Vec::new(),
                applied: None,
            });
            return Ok(LoopHistory {
                iterations,
                verdict: Verdict::Safe,
                reason: "no density above its threshold".into(),
            });
        }
        let recommended = match recommend(&flags, &layout, &cfg.bounds) {
            Ok(r) => r,
            Err(Error::NoApplicableAction) => {
                iterations.push(Iteration {
                    iteration,
                    layout,
                    report,
                    flags,
                    recommended: Vec::new(),
                    applied: None,
                });
                return Ok(LoopHistory {
                    iterations,
                    verdict: Verdict::Unresolved,
                    reason: "no applicable correction action".into(),
                });
            }
            Err(e) => return Err(e),
        };
        let action = recommended[0];
        let next = apply(&layout, action.kind, &cfg.bounds)?;
        iterations.push(Iteration {
            iteration,
            layout,
            report,
            flags,
            recommended,
            applied: Some(action),
        });
        layout = next;
    }
    Ok(LoopHistory {
        iterations,
        verdict: Verdict::Unresolved,
        reason: format!("iteration limit {max_iters} reached"),
    })
}

/// Simulate, analyse and assess the scenario; while problems remain, apply
/// the first recommended action and repeat, at most `max_iters` times.
pub fn correction_loop(
    initial: &ScenarioConfig,
    cfg: &LoopConfig,
    max_iters: usize,
    exec: Execution,
) -> Result<LoopHistory> {
    initial.check()?;
    let base = ScenarioConfig {
        layout: initial.effective_layout(),
        warning_speed_limit: None,
        ..initial.clone()
    };
    correction_loop_with(&base.layout, cfg, max_iters, |layout| {
        let scenario = ScenarioConfig {
            layout: layout.clone(),
            ..base.clone()
        };
        scenario.check()?;
        assess_scenario(&scenario, &cfg.analysis, exec)
    })
}
