//! Whole-pipeline configuration file.

use crate::classify::svm::ClassifierModel;
use crate::classify::{Classifier, RuleConfig};
use crate::correction::{CorrectionBounds, LoopConfig, SafetyThresholds};
use crate::density::DensityGridSpec;
use crate::detect::DetectionConfig;
use crate::error::{Error, Result};
use crate::kinematics::KinematicsConfig;
use crate::model::WorkZoneLayout;
use crate::pipeline::{default_grid, AnalysisConfig};
use crate::sim::ScenarioConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A trained model file, or the rule cascade when `model` is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierChoice {
    pub model: Option<PathBuf>,
    pub rules: RuleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub scenario: ScenarioConfig,
    pub kinematics: KinematicsConfig,
    pub detection: DetectionConfig,
    pub classifier: ClassifierChoice,
    /// Analysis grid; absent means 600 m upstream to 200 m past the zone.
    pub grid: Option<DensityGridSpec>,
    pub thresholds: SafetyThresholds,
    pub bounds: CorrectionBounds,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            kinematics: KinematicsConfig::default(),
            detection: DetectionConfig::default(),
            classifier: ClassifierChoice::default(),
            grid: None,
            thresholds: SafetyThresholds::default(),
            bounds: CorrectionBounds::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    /// Relative model paths resolve against `base` (normally the config
    /// file's directory).
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = super::read_json(path)?;
        if let (Some(m), Some(dir)) = (&cfg.classifier.model, path.parent()) {
            if m.is_relative() {
                cfg.classifier.model = Some(dir.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = self.scenario.validate();
        v.extend(self.detection.validate());
        v.extend(self.thresholds.validate());
        if let Some(g) = &self.grid {
            v.extend(g.validate(Some(&self.scenario.effective_layout())));
        }
        if let Some(m) = &self.classifier.model {
            if !m.is_file() {
                v.push(format!("classifier model {} does not exist", m.display()));
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

    pub fn grid_for(&self, layout: &WorkZoneLayout) -> DensityGridSpec {
        self.grid.unwrap_or_else(|| default_grid(layout))
    }

    pub fn analysis(&self) -> Result<AnalysisConfig> {
        let classifier = match &self.classifier.model {
            Some(path) => Classifier::Model(ClassifierModel::from_text(&std::fs::read_to_string(path)?)?),
            None => Classifier::Rules(self.classifier.rules),
        };
        Ok(AnalysisConfig {
            kinematics: self.kinematics,
            detection: self.detection,
            classifier,
        })
    }

    pub fn loop_config(&self) -> Result<LoopConfig> {
        Ok(LoopConfig {
            thresholds: self.thresholds,
            bounds: self.bounds,
            analysis: self.analysis()?,
        })
    }
}
