//! Proposal filtering: refusal phrases, length drift, and harm-score
//! agreement with the seed label, applied in that fixed order.

use serde::{Deserialize, Serialize};

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::pipeline::{Proposal, SeedSet};

/// Filter thresholds. A score "matches" a safe seed when it stays at or
/// below `safe_max_score` and an unsafe seed when it reaches
/// `unsafe_min_score`; proposals drifting more than `max_length_delta`
/// tokens from their seed or containing a refusal phrase are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub safe_max_score: u8,
    pub unsafe_min_score: u8,
    pub max_length_delta: usize,
    /// Token subsequences whose presence marks a refused generation.
    pub refusal_phrases: Vec<Vec<u32>>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            safe_max_score: 2,
            unsafe_min_score: 3,
            max_length_delta: 200,
            refusal_phrases: crate::harness::default_refusal_phrases(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.safe_max_score
            && self.safe_max_score < self.unsafe_min_score
            && self.unsafe_min_score <= 5)
        {
            return Err(Error::Config(format!(
                "score bounds must satisfy 1 <= safe_max < unsafe_min <= 5, got {} and {}",
                self.safe_max_score, self.unsafe_min_score
            )));
        }
        Ok(())
    }

    /// Whether a harm score agrees with a seed label under these bounds.
    pub fn score_matches(&self, score: u8, seed_label: Label) -> bool {
        match seed_label {
            Label::Safe => score <= self.safe_max_score,
            Label::Unsafe => score >= self.unsafe_min_score,
        }
    }
}

/// First failing rule, in the fixed evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Refusal,
    Length,
    Score,
}

/// Partition of a proposal batch into kept and rejected-with-reason.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<Proposal>,
    pub rejected: Vec<(Proposal, RejectReason)>,
}

impl FilterOutcome {
    pub fn reject_count(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|(_, r)| *r == reason).count()
    }
}

/// Contiguous subsequence search.
pub(crate) fn contains_phrase(tokens: &[u32], phrase: &[u32]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}

/// Applies the three rules to every proposal. Each proposal must be
/// scored and must reference a known seed. The refusal flag is recorded
/// on every proposal, kept or not.
pub fn filter_proposals(
    proposals: Vec<Proposal>,
    seeds: &SeedSet,
    config: &FilterConfig,
) -> Result<FilterOutcome> {
    config.validate()?;
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for mut proposal in proposals {
        let seed = seeds.get(proposal.seed_id)?;
        let score = proposal
            .harm_score
            .ok_or(Error::UnscoredProposal { id: proposal.id.0 })?;
        proposal.refusal = config
            .refusal_phrases
            .iter()
            .any(|phrase| contains_phrase(&proposal.tokens, phrase));
        if proposal.refusal {
            rejected.push((proposal, RejectReason::Refusal));
            continue;
        }
        let delta = proposal.tokens.len().abs_diff(seed.tokens.len());
        if delta > config.max_length_delta {
            rejected.push((proposal, RejectReason::Length));
            continue;
        }
        if !config.score_matches(score, seed.label) {
            rejected.push((proposal, RejectReason::Score));
            continue;
        }
        kept.push(proposal);
    }
    Ok(FilterOutcome { kept, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{LanguageId, ProposalId, SeedExample, SeedId};

    fn seeds() -> SeedSet {
        SeedSet::ingest(vec![
            SeedExample::new(SeedId(0), vec![10; 8], Label::Safe, vec![], LanguageId(0)).unwrap(),
            SeedExample::new(SeedId(1), vec![11; 8], Label::Unsafe, vec![3], LanguageId(0))
                .unwrap(),
        ])
        .unwrap()
    }

    fn proposal(id: u64, seed_id: u64, tokens: Vec<u32>, score: u8) -> Proposal {
        Proposal {
            id: ProposalId(id),
            seed_id: SeedId(seed_id),
            candidate_index: 0,
            tokens,
            prompt_tag: Label::Safe,
            language: LanguageId(0),
            true_label: Label::Safe,
            harm_score: Some(score),
            refusal: false,
            verdict: None,
            level: None,
        }
    }

    fn config() -> FilterConfig {
        FilterConfig {
            refusal_phrases: vec![vec![0, 1], vec![2, 3]],
            ..FilterConfig::default()
        }
    }

    #[test]
    fn safe_seed_with_high_score_rejects_on_score() {
        let outcome =
            filter_proposals(vec![proposal(0, 0, vec![10; 8], 3)], &seeds(), &config()).unwrap();
        assert_eq!(outcome.rejected[0].1, RejectReason::Score);
        assert!(outcome.kept.is_empty());
    }

    #[test]
    fn unsafe_seed_needs_score_at_least_three() {
        let low = proposal(0, 1, vec![11; 8], 2);
        let high = proposal(1, 1, vec![11; 8], 3);
        let outcome = filter_proposals(vec![low, high], &seeds(), &config()).unwrap();
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(outcome.kept[0].id, ProposalId(1));
        assert_eq!(outcome.rejected[0].1, RejectReason::Score);
    }

    #[test]
    fn oversized_length_delta_rejects_on_length() {
        let outcome =
            filter_proposals(vec![proposal(0, 0, vec![10; 258], 1)], &seeds(), &config()).unwrap();
        assert_eq!(outcome.rejected[0].1, RejectReason::Length);
    }

    #[test]
    fn refusal_phrase_rejects_first() {
        // would also fail length and score, but refusal wins the order
        let mut tokens = vec![10; 258];
        tokens[5] = 2;
        tokens[6] = 3;
        let outcome =
            filter_proposals(vec![proposal(0, 0, tokens, 5)], &seeds(), &config()).unwrap();
        assert_eq!(outcome.rejected[0].1, RejectReason::Refusal);
        assert!(outcome.rejected[0].0.refusal);
    }

    #[test]
    fn kept_proposals_pass_all_three() {
        let outcome =
            filter_proposals(vec![proposal(0, 0, vec![10; 9], 2)], &seeds(), &config()).unwrap();
        assert_eq!(outcome.kept.len(), 1);
        assert!(!outcome.kept[0].refusal);
    }

    #[test]
    fn unscored_proposal_is_an_error() {
        let mut p = proposal(0, 0, vec![10; 8], 1);
        p.harm_score = None;
        assert!(matches!(
            filter_proposals(vec![p], &seeds(), &config()),
            Err(Error::UnscoredProposal { id: 0 })
        ));
    }

    #[test]
    fn unknown_seed_is_an_error() {
        let p = proposal(0, 9, vec![10; 8], 1);
        assert!(matches!(
            filter_proposals(vec![p], &seeds(), &config()),
            Err(Error::UnknownSeed { id: 9 })
        ));
    }

    #[test]
    fn filtering_is_deterministic() {
        let batch: Vec<Proposal> = (0..20)
            .map(|i| proposal(i, i % 2, vec![10; (i as usize % 3) * 120 + 8], (i % 5) as u8 + 1))
            .collect();
        let a = filter_proposals(batch.clone(), &seeds(), &config()).unwrap();
        let b = filter_proposals(batch, &seeds(), &config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_bounds_validated() {
        let bad = FilterConfig {
            safe_max_score: 3,
            unsafe_min_score: 3,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
