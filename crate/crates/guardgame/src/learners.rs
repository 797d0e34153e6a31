//! Parametric toy learners for the practical loop: a 12-category
//! multi-label logistic classifier trained with binary cross-entropy, a
//! conditional softmax generator trained with DPO on constructed
//! preference pairs, and the Bradley-Terry preference probability.

mod categories;
mod classifier;
mod features;
mod generator;

pub use categories::{CategorySet, CATEGORY_COUNT};
pub use classifier::{
    bce_gradient, bce_multilabel_loss, classify, train_classifier, ClassExample,
    ClassifierTrainConfig, MultiLabelClassifier, TrainedClassifier,
};
pub use features::FeatureVector;
pub use generator::{
    bradley_terry_prob, dpo_gradient, dpo_loss, sample_proposals, sample_proposals_in_language,
    train_generator_dpo, Candidate, CandidateCatalog, ContextCandidates, DpoTrainConfig,
    GeneratorPolicy, PreferencePair, PreferenceStrength, TrainedGenerator,
};
