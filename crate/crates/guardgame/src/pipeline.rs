//! The practical adversarial loop at toy scale: proposal generation,
//! harm-score filtering, misclassification partitioning, dataset
//! augmentation, preference construction, and the outer training loop.

mod data;
mod filter;
mod levels;
mod scorer;
mod training;

pub use data::{
    DatasetExample, DatasetState, ExampleId, LanguageId, Level, Proposal, ProposalId, Provenance,
    SeedExample, SeedId, SeedSet,
};
pub use filter::{filter_proposals, FilterConfig, FilterOutcome, RejectReason};
pub use levels::{assign_levels, build_preference_pairs, partition_by_classification, Partition};
pub use scorer::{score_harmfulness, HarmScorer, LabelEchoScorer};
pub use training::{
    augment_dataset, run_iteration, run_training, IterationOutcome, LanguageQuota,
    PipelineConfig, TrainingInputs, TrainingRun,
};
