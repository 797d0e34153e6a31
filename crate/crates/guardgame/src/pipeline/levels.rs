//! Verdict partitioning, the four-level quality taxonomy, and preference
//! pair construction.

use crate::error::{Error, Result};
use crate::learners::{classify, FeatureVector, MultiLabelClassifier, PreferencePair};
use crate::pipeline::{FilterConfig, Level, Proposal, SeedSet};

/// Kept proposals split by classifier agreement with the seed label.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Verdict disagrees with the seed label: the adversarial wins.
    pub misclassified: Vec<Proposal>,
    /// Verdict agrees with the seed label.
    pub correct: Vec<Proposal>,
}

/// Splits filtered proposals by whether the classifier's binary verdict
/// contradicts the seed label. Verdicts are computed here when absent
/// and recorded on each proposal.
pub fn partition_by_classification(
    kept: Vec<Proposal>,
    classifier: &MultiLabelClassifier,
    seeds: &SeedSet,
    alphabet_size: usize,
) -> Result<Partition> {
    let mut misclassified = Vec::new();
    let mut correct = Vec::new();
    for mut proposal in kept {
        let seed = seeds.get(proposal.seed_id)?;
        let verdict = match proposal.verdict {
            Some(v) => v,
            None => {
                let features = FeatureVector::from_tokens(&proposal.tokens, alphabet_size)?;
                let (_, verdict) = classify(classifier, &features);
                proposal.verdict = Some(verdict);
                verdict
            }
        };
        if verdict != seed.label {
            misclassified.push(proposal);
        } else {
            correct.push(proposal);
        }
    }
    Ok(Partition {
        misclassified,
        correct,
    })
}

/// Assigns each scored, classified proposal its level:
///
/// | misclassified? | score matches seed? | level |
/// |---|---|---|
/// | yes | yes | 1 (best, preferred) |
/// | no  | yes | 2 (dispreferred)    |
/// | yes | no  | 3 (dispreferred, weak) |
/// | no  | no  | 4 (unsure)          |
pub fn assign_levels(
    proposals: &mut [Proposal],
    seeds: &SeedSet,
    config: &FilterConfig,
) -> Result<()> {
    for proposal in proposals.iter_mut() {
        let seed = seeds.get(proposal.seed_id)?;
        let score = proposal
            .harm_score
            .ok_or(Error::UnscoredProposal { id: proposal.id.0 })?;
        let verdict = proposal
            .verdict
            .ok_or(Error::UnclassifiedProposal { id: proposal.id.0 })?;
        let misclassified = verdict != seed.label;
        let matches = config.score_matches(score, seed.label);
        proposal.level = Some(match (misclassified, matches) {
            (true, true) => Level::One,
            (false, true) => Level::Two,
            (true, false) => Level::Three,
            (false, false) => Level::Four,
        });
    }
    Ok(())
}

/// Builds DPO pairs from leveled proposals, grouped by seed.
///
/// Per seed: without Level-1 proposals the seed is excluded; otherwise
/// every Level 1 pairs against every Level 2 (strong), falling back to
/// Level 3 (weak) when no Level 2 exists. `per_seed_cap` truncates a
/// seed's pair list in deterministic id order; `None` keeps all.
pub fn build_preference_pairs(
    proposals: &[Proposal],
    seeds: &SeedSet,
    per_seed_cap: Option<usize>,
) -> Result<Vec<PreferencePair>> {
    let mut by_seed: std::collections::BTreeMap<_, Vec<&Proposal>> =
        std::collections::BTreeMap::new();
    for proposal in proposals {
        seeds.get(proposal.seed_id)?;
        if proposal.level.is_none() {
            return Err(Error::Config(format!(
                "proposal {} has no level; assign levels first",
                proposal.id
            )));
        }
        by_seed.entry(proposal.seed_id).or_default().push(proposal);
    }
    let mut pairs = Vec::new();
    for (_, mut group) in by_seed {
        group.sort_by_key(|p| p.id);
        let of_level = |level: Level| -> Vec<&Proposal> {
            group
                .iter()
                .filter(|p| p.level == Some(level))
                .copied()
                .collect()
        };
        let preferred = of_level(Level::One);
        if preferred.is_empty() {
            continue;
        }
        let dispreferred = {
            let strong = of_level(Level::Two);
            if strong.is_empty() {
                of_level(Level::Three)
            } else {
                strong
            }
        };
        if dispreferred.is_empty() {
            continue;
        }
        let mut seed_pairs = Vec::new();
        for &winner in &preferred {
            for &loser in &dispreferred {
                // two samples of one candidate can level differently when
                // the judge flips; such a self-pair carries no signal
                if winner.candidate_index == loser.candidate_index {
                    continue;
                }
                seed_pairs.push(PreferencePair::new(winner.clone(), loser.clone())?);
            }
        }
        if let Some(cap) = per_seed_cap {
            seed_pairs.truncate(cap);
        }
        pairs.extend(seed_pairs);
    }
    Ok(pairs)
}
