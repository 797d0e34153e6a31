//! Experiment harness: configuration, synthetic corpora with language
//! imbalance, evaluation metrics, report emission, and the CLI command
//! implementations behind the `guardgame` binary.

mod cli;
mod config;
mod corpus;
mod metrics;
mod report;
mod seeds;

pub use cli::{
    cmd_bounds, cmd_eval, cmd_fixed_point, cmd_synth, cmd_train, CliError, ErrorRecord,
    EXIT_CONFIG, EXIT_RUNTIME,
};
pub use config::{ExperimentConfig, FieldError, GameDefaults};
pub use corpus::{
    build_candidate_catalog, default_refusal_phrases, parse_corpus_jsonl, synth_corpus,
    write_corpus_jsonl, CorpusConfig, CorpusHeader, SynthCorpus, TokenLayout,
};
pub use metrics::{confidence_histogram, eval_f1, f1_from_counts, ConfidenceHistogram, F1Scores};
pub use report::{reports_to_csv, IterationReport};
pub use seeds::{derive_seed, substream};
