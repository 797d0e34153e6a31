//! Conditional softmax generator over per-seed candidate pools, trained
//! with DPO against a frozen reference policy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::pipeline::{LanguageId, Level, Proposal, ProposalId, SeedId};

/// One sequence the generator can emit for a given context. The true
/// label records which token profile actually produced it; imperfect
/// generations flip it, and the filter stage exists to catch them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<u32>,
    pub language: LanguageId,
    pub true_label: Label,
}

/// Candidate pool for one conditioning context `(seed, prompt tag)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCandidates {
    pub seed_id: SeedId,
    pub prompt_tag: Label,
    pub candidates: Vec<Candidate>,
}

/// All generation contexts of an experiment, shared by the policy and
/// its frozen reference so their logits stay aligned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ContextCandidates>", into = "Vec<ContextCandidates>")]
pub struct CandidateCatalog {
    contexts: Vec<ContextCandidates>,
    #[serde(skip)]
    index: std::collections::BTreeMap<(SeedId, Label), usize>,
}

impl CandidateCatalog {
    pub fn new(contexts: Vec<ContextCandidates>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::Config("candidate catalog is empty".into()));
        }
        let mut index = std::collections::BTreeMap::new();
        for (i, context) in contexts.iter().enumerate() {
            if context.candidates.is_empty() {
                return Err(Error::Config(format!(
                    "context for seed {} has no candidates",
                    context.seed_id
                )));
            }
            if index
                .insert((context.seed_id, context.prompt_tag), i)
                .is_some()
            {
                return Err(Error::Config(format!(
                    "duplicate context (seed {}, tag {})",
                    context.seed_id, context.prompt_tag
                )));
            }
        }
        Ok(Self { contexts, index })
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn context(&self, index: usize) -> &ContextCandidates {
        &self.contexts[index]
    }

    pub fn contexts(&self) -> &[ContextCandidates] {
        &self.contexts
    }

    pub fn lookup(&self, seed_id: SeedId, tag: Label) -> Result<usize> {
        self.index
            .get(&(seed_id, tag))
            .copied()
            .ok_or(Error::UnknownContext {
                seed: seed_id.0,
                tag,
            })
    }
}

impl TryFrom<Vec<ContextCandidates>> for CandidateCatalog {
    type Error = Error;
    fn try_from(contexts: Vec<ContextCandidates>) -> Result<Self> {
        Self::new(contexts)
    }
}

impl From<CandidateCatalog> for Vec<ContextCandidates> {
    fn from(c: CandidateCatalog) -> Self {
        c.contexts
    }
}

/// Logit table aligned with a [`CandidateCatalog`]: one real vector per
/// context over its candidate pool, plus the sampling temperature.
/// Softmax of any row is a valid distribution; DPO log-probabilities are
/// always read at temperature one, the temperature only shapes sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorPolicy {
    pub logits: Vec<Vec<f64>>,
    pub temperature: f64,
}

impl GeneratorPolicy {
    /// Uniform policy (all-zero logits) over the catalog.
    pub fn uniform(catalog: &CandidateCatalog, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter {
                name: "temperature",
                message: format!("must be positive, got {temperature}"),
            });
        }
        Ok(Self {
            logits: catalog
                .contexts()
                .iter()
                .map(|c| vec![0.0; c.candidates.len()])
                .collect(),
            temperature,
        })
    }

    pub fn matches(&self, catalog: &CandidateCatalog) -> Result<()> {
        if self.logits.len() != catalog.len() {
            return Err(Error::ShapeMismatch(format!(
                "policy has {} contexts, catalog has {}",
                self.logits.len(),
                catalog.len()
            )));
        }
        for (i, row) in self.logits.iter().enumerate() {
            if row.len() != catalog.context(i).candidates.len() {
                return Err(Error::ShapeMismatch(format!(
                    "policy context {i} has {} logits for {} candidates",
                    row.len(),
                    catalog.context(i).candidates.len()
                )));
            }
        }
        Ok(())
    }

    /// Log-probabilities of one context row at temperature one.
    pub fn log_probs(&self, context: usize) -> Vec<f64> {
        log_softmax(&self.logits[context])
    }

    /// Sampling distribution of one context row at the given temperature.
    pub fn sampling_probs(&self, context: usize, temperature: f64) -> Vec<f64> {
        softmax_with_temperature(&self.logits[context], temperature)
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_normalizer = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|z| z - log_normalizer).collect()
}

fn softmax_with_temperature(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits
        .iter()
        .map(|z| ((z - max) / temperature).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / sum).collect()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Bradley-Terry preference probability `sigma(r_w - r_l)`.
pub fn bradley_terry_prob(reward_preferred: f64, reward_dispreferred: f64) -> f64 {
    sigmoid(reward_preferred - reward_dispreferred)
}

/// How hard a pair's ordering is asserted. Weak pairs arise when the
/// dispreferred side came from Level 3 instead of Level 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceStrength {
    Strong,
    Weak,
}

/// One constructed preference: a Level-1 proposal over a Level-2 or
/// Level-3 one from the same seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub seed_id: SeedId,
    pub preferred: Proposal,
    pub dispreferred: Proposal,
    pub strength: PreferenceStrength,
}

impl PreferencePair {
    pub fn new(preferred: Proposal, dispreferred: Proposal) -> Result<Self> {
        if preferred.seed_id != dispreferred.seed_id
            || preferred.prompt_tag != dispreferred.prompt_tag
        {
            return Err(Error::Config(
                "preference pair must share one generation context".into(),
            ));
        }
        if preferred.candidate_index == dispreferred.candidate_index {
            return Err(Error::Config(
                "preference pair needs two distinct proposals".into(),
            ));
        }
        let strength = match dispreferred.level {
            Some(Level::Two) => PreferenceStrength::Strong,
            Some(Level::Three) => PreferenceStrength::Weak,
            other => {
                return Err(Error::Config(format!(
                    "dispreferred proposal must be Level 2 or 3, got {other:?}"
                )))
            }
        };
        Ok(Self {
            seed_id: preferred.seed_id,
            preferred,
            dispreferred,
            strength,
        })
    }
}

fn pair_margin(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    reference: &GeneratorPolicy,
    pair: &PreferencePair,
    beta: f64,
) -> Result<f64> {
    let context = catalog.lookup(pair.seed_id, pair.preferred.prompt_tag)?;
    let policy_lp = policy.log_probs(context);
    let reference_lp = reference.log_probs(context);
    let w = pair.preferred.candidate_index;
    let l = pair.dispreferred.candidate_index;
    for (name, lp) in [("policy", &policy_lp), ("reference", &reference_lp)] {
        for idx in [w, l] {
            if !lp[idx].is_finite() {
                return Err(Error::Config(format!(
                    "{name} assigns zero probability to candidate {idx} of context {context}"
                )));
            }
        }
    }
    let delta_w = policy_lp[w] - reference_lp[w];
    let delta_l = policy_lp[l] - reference_lp[l];
    Ok(beta * (delta_w - delta_l))
}

/// Mean logistic DPO loss over the pairs: `-ln sigma(beta * (delta_w -
/// delta_l))` with `delta = ln p_policy - ln p_reference`. Equals `ln 2`
/// per pair when the policy sits on the reference.
pub fn dpo_loss(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    reference: &GeneratorPolicy,
    pairs: &[PreferencePair],
    beta: f64,
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    policy.matches(catalog)?;
    reference.matches(catalog)?;
    let mut total = 0.0;
    for pair in pairs {
        total += softplus(-pair_margin(catalog, policy, reference, pair, beta)?);
    }
    Ok(total / pairs.len() as f64)
}

/// Exact gradient of [`dpo_loss`] with respect to the policy logits.
/// Within one context the softmax normalizers cancel, so only the two
/// endpoint logits of each pair move.
pub fn dpo_gradient(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    reference: &GeneratorPolicy,
    pairs: &[PreferencePair],
    beta: f64,
) -> Result<Vec<Vec<f64>>> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    policy.matches(catalog)?;
    reference.matches(catalog)?;
    let mut gradient: Vec<Vec<f64>> = policy.logits.iter().map(|r| vec![0.0; r.len()]).collect();
    let scale = 1.0 / pairs.len() as f64;
    for pair in pairs {
        let context = catalog.lookup(pair.seed_id, pair.preferred.prompt_tag)?;
        let margin = pair_margin(catalog, policy, reference, pair, beta)?;
        let pull = sigmoid(-margin) * beta * scale;
        gradient[context][pair.preferred.candidate_index] -= pull;
        gradient[context][pair.dispreferred.candidate_index] += pull;
    }
    Ok(gradient)
}

/// DPO training configuration. `nll_weight` adds the auxiliary negative
/// log-likelihood of the preferred proposals (the RPO-style anchor);
/// zero keeps pure DPO semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpoTrainConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub nll_weight: f64,
}

impl Default for DpoTrainConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            learning_rate: 1.0,
            steps: 300,
            nll_weight: 0.0,
        }
    }
}

/// Trained policy plus the loss trace, with the same ten-consecutive-rises
/// divergence flag as classifier training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGenerator {
    pub policy: GeneratorPolicy,
    pub loss_history: Vec<f64>,
    pub diverged: bool,
}

fn training_objective(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    reference: &GeneratorPolicy,
    pairs: &[PreferencePair],
    config: &DpoTrainConfig,
) -> Result<f64> {
    let mut value = dpo_loss(catalog, policy, reference, pairs, config.beta)?;
    if config.nll_weight > 0.0 {
        let mut nll = 0.0;
        for pair in pairs {
            let context = catalog.lookup(pair.seed_id, pair.preferred.prompt_tag)?;
            nll -= policy.log_probs(context)[pair.preferred.candidate_index];
        }
        value += config.nll_weight * nll / pairs.len() as f64;
    }
    Ok(value)
}

/// Gradient-descends the (optionally NLL-anchored) DPO objective from
/// `policy`, holding `reference` frozen.
pub fn train_generator_dpo(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    reference: &GeneratorPolicy,
    pairs: &[PreferencePair],
    config: &DpoTrainConfig,
) -> Result<TrainedGenerator> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    let mut current = policy.clone();
    let mut loss_history = vec![training_objective(catalog, &current, reference, pairs, config)?];
    let mut consecutive_increases = 0usize;
    let mut diverged = false;
    for _ in 0..config.steps {
        let mut gradient = dpo_gradient(catalog, &current, reference, pairs, config.beta)?;
        if config.nll_weight > 0.0 {
            let scale = config.nll_weight / pairs.len() as f64;
            for pair in pairs {
                let context = catalog.lookup(pair.seed_id, pair.preferred.prompt_tag)?;
                let probs = softmax_with_temperature(&current.logits[context], 1.0);
                for (j, g) in gradient[context].iter_mut().enumerate() {
                    *g += scale * probs[j];
                }
                gradient[context][pair.preferred.candidate_index] -= scale;
            }
        }
        for (row, grad_row) in current.logits.iter_mut().zip(&gradient) {
            for (z, g) in row.iter_mut().zip(grad_row) {
                *z -= config.learning_rate * g;
            }
        }
        let loss = training_objective(catalog, &current, reference, pairs, config)?;
        if loss > *loss_history.last().unwrap() {
            consecutive_increases += 1;
            if consecutive_increases >= 10 {
                loss_history.push(loss);
                diverged = true;
                break;
            }
        } else {
            consecutive_increases = 0;
        }
        loss_history.push(loss);
    }
    Ok(TrainedGenerator {
        policy: current,
        loss_history,
        diverged,
    })
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random::<f64>();
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probs.len() - 1
}

fn proposal_from_candidate(
    context: &ContextCandidates,
    candidate_index: usize,
    id: ProposalId,
) -> Proposal {
    let candidate = &context.candidates[candidate_index];
    Proposal {
        id,
        seed_id: context.seed_id,
        candidate_index,
        tokens: candidate.tokens.clone(),
        prompt_tag: context.prompt_tag,
        language: candidate.language,
        true_label: candidate.true_label,
        harm_score: None,
        refusal: false,
        verdict: None,
        level: None,
    }
}

/// Draws `k` i.i.d. proposals from `softmax(logits / temperature)` for
/// one context. Deterministic given the rng seed; proposal ids count up
/// from `id_start`.
pub fn sample_proposals(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    seed_id: SeedId,
    prompt_tag: Label,
    k: usize,
    temperature: f64,
    rng_seed: u64,
    id_start: u64,
) -> Result<Vec<Proposal>> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            message: "must draw at least one proposal".into(),
        });
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            message: format!("must be positive, got {temperature}"),
        });
    }
    policy.matches(catalog)?;
    let context_index = catalog.lookup(seed_id, prompt_tag)?;
    let context = catalog.context(context_index);
    let probs = policy.sampling_probs(context_index, temperature);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok((0..k)
        .map(|j| {
            let candidate_index = sample_index(&probs, &mut rng);
            proposal_from_candidate(context, candidate_index, ProposalId(id_start + j as u64))
        })
        .collect())
}

/// Draws one proposal from the policy conditioned on a language: the
/// softmax restricted (renormalized) to that language's candidates. This
/// is the toy analogue of prompting the generator for a target language.
pub fn sample_proposals_in_language(
    catalog: &CandidateCatalog,
    policy: &GeneratorPolicy,
    seed_id: SeedId,
    prompt_tag: Label,
    language: LanguageId,
    temperature: f64,
    rng: &mut ChaCha8Rng,
    id: ProposalId,
) -> Result<Proposal> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            message: format!("must be positive, got {temperature}"),
        });
    }
    let context_index = catalog.lookup(seed_id, prompt_tag)?;
    let context = catalog.context(context_index);
    let member_indices: Vec<usize> = context
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.language == language)
        .map(|(i, _)| i)
        .collect();
    if member_indices.is_empty() {
        return Err(Error::EmptyLanguagePool {
            seed: seed_id.0,
            language: language.0,
        });
    }
    let restricted: Vec<f64> = member_indices
        .iter()
        .map(|&i| policy.logits[context_index][i])
        .collect();
    let probs = softmax_with_temperature(&restricted, temperature);
    let pick = member_indices[sample_index(&probs, rng)];
    Ok(proposal_from_candidate(context, pick, id))
}
