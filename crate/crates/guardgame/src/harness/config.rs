//! Whole-experiment configuration with field-level validation.

use serde::{Deserialize, Serialize};

use crate::dist::RegularityParams;
use crate::harness::CorpusConfig;
use crate::pipeline::PipelineConfig;

/// Game-side defaults carried in the experiment file: regularity
/// parameters plus iteration tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameDefaults {
    pub params: RegularityParams,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for GameDefaults {
    fn default() -> Self {
        Self {
            params: RegularityParams::new(1000.0, 0.1, 0.5, 0.1).expect("valid defaults"),
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

/// One named validation problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Root configuration for `train` and `synth`: the corpus, the loop, the
/// game defaults, the root seed, and the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: String,
    pub corpus: CorpusConfig,
    pub pipeline: PipelineConfig,
    pub game: GameDefaults,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: "out".into(),
            corpus: CorpusConfig::default(),
            pipeline: PipelineConfig::default(),
            game: GameDefaults::default(),
        }
    }
}

impl ExperimentConfig {
    /// All field-level problems at once, for exit-code-2 diagnostics.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if self.out_dir.is_empty() {
            errors.push(FieldError::new("out_dir", "must not be empty"));
        }
        if let Err(e) = self.corpus.validate() {
            errors.push(FieldError::new("corpus", e.to_string()));
        }
        if self.pipeline.proposals_per_seed == 0 {
            errors.push(FieldError::new(
                "pipeline.proposals_per_seed",
                "must be positive",
            ));
        }
        if !(self.pipeline.sampling_temperature > 0.0) {
            errors.push(FieldError::new(
                "pipeline.sampling_temperature",
                "must be positive",
            ));
        }
        if !(0.0..=1.0).contains(&self.pipeline.scorer_flip_prob) {
            errors.push(FieldError::new(
                "pipeline.scorer_flip_prob",
                "must lie in [0, 1]",
            ));
        }
        if self.pipeline.iterations == 0 {
            errors.push(FieldError::new(
                "pipeline.iterations",
                "must be at least 1",
            ));
        }
        if let Err(e) = self.pipeline.filter.validate() {
            errors.push(FieldError::new("pipeline.filter", e.to_string()));
        }
        if !(self.game.tol > 0.0) {
            errors.push(FieldError::new("game.tol", "must be positive"));
        }
        if self.game.max_iters == 0 {
            errors.push(FieldError::new("game.max_iters", "must be positive"));
        }
        errors
    }
}
