//! The outer adversarial loop: sample, score, classify, filter,
//! partition, augment, retrain, pair, and update the generator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{derive_seed, eval_f1, IterationReport};
use crate::learners::{
    sample_proposals_in_language, train_classifier, train_generator_dpo, CandidateCatalog,
    ClassExample, ClassifierTrainConfig, DpoTrainConfig, FeatureVector, GeneratorPolicy,
    MultiLabelClassifier, PreferenceStrength, CATEGORY_COUNT,
};
use crate::pipeline::{
    assign_levels, build_preference_pairs, filter_proposals, partition_by_classification,
    DatasetExample, DatasetState, ExampleId, FilterConfig, LanguageId, Partition, Proposal,
    ProposalId, Provenance, RejectReason, SeedExample, SeedSet,
};

/// How each seed's per-iteration proposal slots are spread over
/// languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LanguageQuota {
    /// Equal slots per language.
    Uniform,
    /// Slots proportional to the inverse of each language's current
    /// dataset count, so underrepresented languages get generated first.
    InverseProportional,
}

/// Loop configuration; `proposals_per_seed` is the `k` of the sampling
/// stage and `iterations` the outer `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub proposals_per_seed: usize,
    pub sampling_temperature: f64,
    pub filter: FilterConfig,
    pub scorer_flip_prob: f64,
    pub quota: LanguageQuota,
    pub pair_cap_per_seed: Option<usize>,
    pub classifier: ClassifierTrainConfig,
    pub dpo: DpoTrainConfig,
    pub iterations: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            proposals_per_seed: 8,
            sampling_temperature: 0.7,
            filter: FilterConfig::default(),
            scorer_flip_prob: 0.1,
            quota: LanguageQuota::InverseProportional,
            pair_cap_per_seed: None,
            classifier: ClassifierTrainConfig::default(),
            dpo: DpoTrainConfig::default(),
            iterations: 2,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.proposals_per_seed == 0 {
            return Err(Error::Config("proposals_per_seed must be positive".into()));
        }
        if !(self.sampling_temperature > 0.0) {
            return Err(Error::Config("sampling_temperature must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.scorer_flip_prob) {
            return Err(Error::Config("scorer_flip_prob must lie in [0, 1]".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        self.filter.validate()
    }
}

/// Everything an iteration reads but never mutates.
#[derive(Debug, Clone, Copy)]
pub struct TrainingInputs<'a> {
    pub seeds: &'a SeedSet,
    pub catalog: &'a CandidateCatalog,
    pub eval_set: &'a [SeedExample],
    pub language_names: &'a [String],
    pub alphabet_size: usize,
    pub config: &'a PipelineConfig,
}

/// Output of one loop iteration.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub state: DatasetState,
    pub classifier: MultiLabelClassifier,
    pub generator: GeneratorPolicy,
    pub report: IterationReport,
}

/// Appends the misclassified proposals to the dataset as synthetic
/// members. Labels and categories come from the seed (generation is
/// label-preserving by construction), the language from the proposal.
pub fn augment_dataset(
    state: &DatasetState,
    misclassified: &[Proposal],
    seeds: &SeedSet,
) -> Result<DatasetState> {
    let mut examples = state.examples.clone();
    let iteration = state.iteration + 1;
    for proposal in misclassified {
        let seed = seeds.get(proposal.seed_id)?;
        let admitted_verdict = proposal
            .verdict
            .ok_or(Error::UnclassifiedProposal { id: proposal.id.0 })?;
        examples.push(DatasetExample {
            id: ExampleId(examples.len() as u64),
            tokens: proposal.tokens.clone(),
            label: seed.label,
            categories: seed.categories.clone(),
            language: proposal.language,
            provenance: Provenance::Synthetic {
                iteration,
                proposal_id: proposal.id,
                admitted_verdict,
            },
        });
    }
    Ok(DatasetState {
        iteration,
        examples,
    })
}

/// Largest-remainder apportionment of `k` slots over the weights; ties
/// break toward lower indices.
fn allocate_slots(weights: &[f64], k: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * k as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &slot in order.iter().take(k - assigned) {
        counts[slot] += 1;
    }
    counts
}

fn quota_weights(quota: LanguageQuota, language_counts: &[u64]) -> Vec<f64> {
    match quota {
        LanguageQuota::Uniform => vec![1.0; language_counts.len()],
        LanguageQuota::InverseProportional => language_counts
            .iter()
            .map(|&c| 1.0 / (c.max(1) as f64))
            .collect(),
    }
}

fn dataset_to_class_examples(
    state: &DatasetState,
    alphabet_size: usize,
) -> Result<Vec<ClassExample>> {
    state
        .examples
        .iter()
        .map(|example| {
            let mut labels = vec![false; CATEGORY_COUNT];
            for &c in &example.categories {
                labels[c] = true;
            }
            Ok(ClassExample {
                features: FeatureVector::from_tokens(&example.tokens, alphabet_size)?,
                labels,
            })
        })
        .collect()
}

/// One pass of the two-player loop, reading the state at `t-1` and
/// emitting the state, retrained classifier, updated generator, and
/// report at `t`. Deterministic in `(inputs, root_seed)`: all randomness
/// flows through named substreams indexed by the iteration.
pub fn run_iteration(
    inputs: &TrainingInputs,
    state: &DatasetState,
    classifier: &MultiLabelClassifier,
    generator: &GeneratorPolicy,
    reference: &GeneratorPolicy,
    root_seed: u64,
) -> Result<IterationOutcome> {
    inputs.config.validate()?;
    let iteration = state.iteration + 1;
    let config = inputs.config;
    let num_languages = inputs.language_names.len();
    let mut warnings = Vec::new();

    // language quota for this iteration's sampling
    let language_counts = state.per_language_counts(num_languages);
    let weights = quota_weights(config.quota, &language_counts);
    let allocation = allocate_slots(&weights, config.proposals_per_seed);

    // sample k proposals per seed, each slot pinned to its quota language
    let mut rng = crate::harness::substream(root_seed, "sampling", iteration as u64);
    let mut proposals = Vec::with_capacity(inputs.seeds.len() * config.proposals_per_seed);
    let mut next_id = 0u64;
    for seed in inputs.seeds.iter() {
        for (language, &slots) in allocation.iter().enumerate() {
            for _ in 0..slots {
                proposals.push(sample_proposals_in_language(
                    inputs.catalog,
                    generator,
                    seed.id,
                    seed.label,
                    LanguageId(language as u8),
                    config.sampling_temperature,
                    &mut rng,
                    ProposalId(next_id),
                )?);
                next_id += 1;
            }
        }
    }
    let proposals_generated = proposals.len();

    // judge scores
    let mut scorer = crate::pipeline::LabelEchoScorer::new(
        config.scorer_flip_prob,
        derive_seed(root_seed, "scorer", iteration as u64),
    )?;
    for proposal in &mut proposals {
        crate::pipeline::score_harmfulness(&mut scorer, proposal)?;
    }

    // verdicts from the pre-update classifier
    for proposal in &mut proposals {
        let features = FeatureVector::from_tokens(&proposal.tokens, inputs.alphabet_size)?;
        let (_, verdict) = crate::learners::classify(classifier, &features);
        proposal.verdict = Some(verdict);
    }

    // filter for classifier-training data
    let outcome = filter_proposals(proposals, inputs.seeds, &config.filter)?;
    let rejected_refusal = outcome.reject_count(RejectReason::Refusal);
    let rejected_length = outcome.reject_count(RejectReason::Length);
    let rejected_score = outcome.reject_count(RejectReason::Score);
    if outcome.kept.is_empty() {
        warnings.push("no proposals survived filtering; dataset unchanged".into());
    }
    let kept_count = outcome.kept.len();

    let Partition {
        misclassified,
        correct,
    } = partition_by_classification(
        outcome.kept,
        classifier,
        inputs.seeds,
        inputs.alphabet_size,
    )?;

    // dataset augmentation and per-language bookkeeping of the additions
    let new_state = augment_dataset(state, &misclassified, inputs.seeds)?;
    let mut added_language_counts = vec![0u64; num_languages];
    for proposal in &misclassified {
        added_language_counts[proposal.language.0 as usize] += 1;
    }

    // retrain the classifier from scratch on the augmented dataset
    let class_examples = dataset_to_class_examples(&new_state, inputs.alphabet_size)?;
    let train_config = ClassifierTrainConfig {
        init_seed: derive_seed(root_seed, "classifier-init", iteration as u64),
        ..config.classifier
    };
    let trained = train_classifier(&class_examples, CATEGORY_COUNT, &train_config)?;
    if trained.diverged {
        warnings.push("classifier training flagged divergence".into());
    }

    // level assignment over every scored, classified proposal
    let mut all_proposals: Vec<Proposal> = misclassified
        .iter()
        .chain(correct.iter())
        .cloned()
        .chain(outcome.rejected.iter().map(|(p, _)| p.clone()))
        .collect();
    all_proposals.sort_by_key(|p| p.id);
    assign_levels(&mut all_proposals, inputs.seeds, &config.filter)?;
    let pairs = build_preference_pairs(&all_proposals, inputs.seeds, config.pair_cap_per_seed)?;
    let strong_pairs = pairs
        .iter()
        .filter(|p| p.strength == PreferenceStrength::Strong)
        .count();

    // DPO update against the frozen reference
    let new_generator = if pairs.is_empty() {
        warnings.push("no preference pairs; generator unchanged".into());
        generator.clone()
    } else {
        let trained_generator =
            train_generator_dpo(inputs.catalog, generator, reference, &pairs, &config.dpo)?;
        if trained_generator.diverged {
            warnings.push("generator training flagged divergence".into());
        }
        trained_generator.policy
    };

    let f1 = eval_f1(
        &trained.model,
        inputs.eval_set,
        num_languages,
        inputs.alphabet_size,
    )?;
    let report = IterationReport {
        iteration,
        dataset_size: new_state.len(),
        language_counts: new_state.per_language_counts(num_languages),
        proposals_generated,
        rejected_refusal,
        rejected_length,
        rejected_score,
        kept: kept_count,
        misclassified: misclassified.len(),
        correctly_classified: correct.len(),
        added_language_counts,
        pair_count: pairs.len(),
        strong_pairs,
        weak_pairs: pairs.len() - strong_pairs,
        classifier_train_loss: trained.final_loss(),
        classifier_diverged: trained.diverged,
        f1_overall: f1.overall,
        f1_per_language: f1.per_language,
        warnings,
    };

    Ok(IterationOutcome {
        state: new_state,
        classifier: trained.model,
        generator: new_generator,
        report,
    })
}

/// Result of a full training run. `reports[0]` is the pre-loop baseline
/// (the classifier trained on seeds alone); entries `1..=T` come from the
/// loop iterations.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub classifier: MultiLabelClassifier,
    pub generator: GeneratorPolicy,
    pub reports: Vec<IterationReport>,
    pub final_state: DatasetState,
}

/// Runs the full loop: baseline training on the seed dataset, then
/// `config.iterations` adversarial iterations. The DPO reference stays
/// pinned to the initial (uniform) generator throughout.
pub fn run_training(inputs: &TrainingInputs, root_seed: u64) -> Result<TrainingRun> {
    inputs.config.validate()?;
    let config = inputs.config;
    let num_languages = inputs.language_names.len();

    let mut state = DatasetState::from_seeds(inputs.seeds);
    let class_examples = dataset_to_class_examples(&state, inputs.alphabet_size)?;
    let baseline_config = ClassifierTrainConfig {
        init_seed: derive_seed(root_seed, "classifier-init", 0),
        ..config.classifier
    };
    let baseline = train_classifier(&class_examples, CATEGORY_COUNT, &baseline_config)?;
    let f1 = eval_f1(
        &baseline.model,
        inputs.eval_set,
        num_languages,
        inputs.alphabet_size,
    )?;
    let mut reports = vec![IterationReport {
        iteration: 0,
        dataset_size: state.len(),
        language_counts: state.per_language_counts(num_languages),
        proposals_generated: 0,
        rejected_refusal: 0,
        rejected_length: 0,
        rejected_score: 0,
        kept: 0,
        misclassified: 0,
        correctly_classified: 0,
        added_language_counts: vec![0; num_languages],
        pair_count: 0,
        strong_pairs: 0,
        weak_pairs: 0,
        classifier_train_loss: baseline.final_loss(),
        classifier_diverged: baseline.diverged,
        f1_overall: f1.overall,
        f1_per_language: f1.per_language,
        warnings: vec![],
    }];

    let reference = GeneratorPolicy::uniform(inputs.catalog, config.sampling_temperature)?;
    let mut classifier = baseline.model;
    let mut generator = reference.clone();
    for _ in 0..config.iterations {
        let outcome = run_iteration(
            inputs,
            &state,
            &classifier,
            &generator,
            &reference,
            root_seed,
        )?;
        state = outcome.state;
        classifier = outcome.classifier;
        generator = outcome.generator;
        reports.push(outcome.report);
    }

    Ok(TrainingRun {
        classifier,
        generator,
        reports,
        final_state: state,
    })
}
