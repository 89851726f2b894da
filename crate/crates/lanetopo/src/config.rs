//! Tool configuration: one JSON document with defaults for every field and
//! a `key.path=value` override mechanism for ablations.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::DetectionRange;
use crate::metrics::{EvalConfig, ScaleFunction};
use crate::scenesim::{Layout, PerturbationConfig};
use crate::topology::InferenceConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("bad override \"{0}\": expected key=value")]
    BadOverride(String),
}

/// Hidden-layer shape of the relationship MLPs when parameters are seeded
/// rather than loaded from file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpArchitecture {
    pub hidden_layers: usize,
    /// Width of each hidden layer; defaults to the embedding dimension.
    pub hidden_width: Option<usize>,
}

impl Default for MlpArchitecture {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_width: None,
        }
    }
}

impl MlpArchitecture {
    /// Concrete hidden widths for an embedding of dimension `dim`.
    pub fn hidden_widths(&self, dim: usize) -> Vec<usize> {
        vec![self.hidden_width.unwrap_or(dim.max(1)); self.hidden_layers]
    }
}

/// Synthetic-dataset generation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_frames: usize,
    pub n_lanes: usize,
    pub n_tes: usize,
    pub layout: Layout,
    pub seed: u64,
    /// When set, instances carry seeded feature vectors of this width.
    pub feature_dim: Option<usize>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_frames: 20,
            n_lanes: 6,
            n_tes: 4,
            layout: Layout::Chain,
            seed: 7,
            feature_dim: None,
        }
    }
}

/// The complete tool configuration; every field has a default and is
/// validated on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub detection_range: DetectionRange,
    pub frechet_thresholds: Vec<f64>,
    pub iou_threshold: f64,
    /// Fréchet threshold for lane vertex matching in the topology scores.
    pub lane_match_threshold: f64,
    /// Prior detection-confidence gate before topology scoring.
    pub tau: f64,
    /// Endpoint-gap limit in meters for the geometric override.
    pub gap_limit: f64,
    pub f_scale: ScaleFunction,
    pub mlp: MlpArchitecture,
    pub generator: GeneratorConfig,
    pub perturbation: PerturbationConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            detection_range: DetectionRange::default(),
            frechet_thresholds: vec![1.0, 2.0, 3.0],
            iou_threshold: 0.75,
            lane_match_threshold: 1.5,
            tau: 0.3,
            gap_limit: 3.0,
            f_scale: ScaleFunction::Sqrt,
            mlp: MlpArchitecture::default(),
            generator: GeneratorConfig::default(),
            perturbation: PerturbationConfig::default(),
        }
    }
}

impl ToolConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.detection_range
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.frechet_thresholds.is_empty() {
            return Err(ConfigError::Invalid(
                "frechet_thresholds must be non-empty".to_string(),
            ));
        }
        if self
            .frechet_thresholds
            .iter()
            .any(|t| !t.is_finite() || *t <= 0.0)
        {
            return Err(ConfigError::Invalid(
                "frechet_thresholds must be positive finite meters".to_string(),
            ));
        }
        for (name, v) in [("iou_threshold", self.iou_threshold), ("tau", self.tau)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0,1]")));
            }
        }
        if !self.lane_match_threshold.is_finite() || self.lane_match_threshold <= 0.0 {
            return Err(ConfigError::Invalid(
                "lane_match_threshold must be positive".to_string(),
            ));
        }
        if !self.gap_limit.is_finite() || self.gap_limit < 0.0 {
            return Err(ConfigError::Invalid(
                "gap_limit must be finite and non-negative".to_string(),
            ));
        }
        self.perturbation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(dim) = self.generator.feature_dim {
            if dim == 0 {
                return Err(ConfigError::Invalid(
                    "generator.feature_dim must be at least 1".to_string(),
                ));
            }
        }
        Ok(())
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            frechet_thresholds: self.frechet_thresholds.clone(),
            iou_threshold: self.iou_threshold,
            lane_match_threshold: self.lane_match_threshold,
            scale: self.f_scale,
        }
    }

    pub fn inference_config(&self) -> InferenceConfig {
        InferenceConfig {
            tau: self.tau,
            gap_limit: self.gap_limit,
            range: self.detection_range,
        }
    }

    /// Builds a config from optional JSON text plus `key.path=value`
    /// overrides, then validates it. Override values parse as JSON where
    /// possible and fall back to strings.
    pub fn from_json_with_overrides(
        text: Option<&str>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let mut value: Value = match text {
            Some(t) => serde_json::from_str(t).map_err(|e| ConfigError::Parse(e.to_string()))?,
            None => Value::Object(serde_json::Map::new()),
        };
        if !value.is_object() {
            return Err(ConfigError::Parse(
                "config root must be a JSON object".to_string(),
            ));
        }
        for entry in overrides {
            let (key, raw) = entry
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(entry.clone()))?;
            if key.is_empty() {
                return Err(ConfigError::BadOverride(entry.clone()));
            }
            let parsed: Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut cursor = &mut value;
            let segments: Vec<&str> = key.split('.').collect();
            for (si, segment) in segments.iter().enumerate() {
                let obj = cursor.as_object_mut().ok_or_else(|| {
                    ConfigError::Invalid(format!("override key \"{key}\" crosses a non-object"))
                })?;
                if si + 1 == segments.len() {
                    obj.insert(segment.to_string(), parsed.clone());
                    break;
                }
                cursor = obj
                    .entry(segment.to_string())
                    .or_insert_with(|| Value::Object(serde_json::Map::new()));
            }
        }
        let config: ToolConfig =
            serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}
