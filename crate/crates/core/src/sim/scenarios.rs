//! The eleven experiment scenarios: one factor varied at a time around the
//! measured layout (scenario 2).

use super::ScenarioConfig;
use crate::model::TransitionStyle;

/// Scenario `index` in 1..=11, or `None` outside that range.
pub fn scenario(index: u32) -> Option<ScenarioConfig> {
    let mut cfg = ScenarioConfig {
        name: format!("scenario-{index}"),
        ..ScenarioConfig::default()
    };
    let l = &mut cfg.layout;
    match index {
        1 => l.warning_length = 300.0,
        2 => {}
        3 => l.warning_length = 700.0,
        4..=7 => l.warning_speed_limit = Some([70.0, 60.0, 50.0, 40.0][(index - 4) as usize]),
        8..=10 => {
            l.upstream_transition_style = TransitionStyle::Gradual;
            l.upstream_transition_length = [30.0, 60.0, 90.0][(index - 8) as usize];
        }
        11 => l.work_length = 300.0,
        _ => return None,
    }
    Some(cfg)
}

pub fn all() -> Vec<ScenarioConfig> {
    (1..=11).filter_map(scenario).collect()
}
