//! Seed examples, generated proposals, and the evolving training dataset.

use serde::{Deserialize, Serialize};

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::learners::CATEGORY_COUNT;

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(
    /// Identity of a seed example.
    SeedId
);
id_newtype!(
    /// Identity of a generated proposal within one iteration.
    ProposalId
);
id_newtype!(
    /// Identity of a dataset member.
    ExampleId
);

/// Index into the experiment's configured language list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageId(pub u8);

/// Quality level of a scored, classified proposal. Level 1 fools the
/// classifier while keeping a label-consistent harm rating and is the
/// preferred side of every constructed pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    One,
    Two,
    Three,
    Four,
}

impl Level {
    pub fn rank(self) -> u8 {
        match self {
            Level::One => 1,
            Level::Two => 2,
            Level::Three => 3,
            Level::Four => 4,
        }
    }
}

impl TryFrom<u8> for Level {
    type Error = Error;
    fn try_from(rank: u8) -> Result<Self> {
        match rank {
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            3 => Ok(Level::Three),
            4 => Ok(Level::Four),
            _ => Err(Error::InvalidParameter {
                name: "level",
                message: format!("{rank} is not in 1..=4"),
            }),
        }
    }
}

impl From<Level> for u8 {
    fn from(level: Level) -> Self {
        level.rank()
    }
}

/// A labeled seed example. Unsafe seeds carry at least one category
/// index; safe seeds carry none (the all-zero label vector).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedExample {
    pub id: SeedId,
    pub tokens: Vec<u32>,
    pub label: Label,
    pub categories: Vec<usize>,
    pub language: LanguageId,
}

impl SeedExample {
    pub fn new(
        id: SeedId,
        tokens: Vec<u32>,
        label: Label,
        categories: Vec<usize>,
        language: LanguageId,
    ) -> Result<Self> {
        validate_label_categories(label, &categories)?;
        Ok(Self {
            id,
            tokens,
            label,
            categories,
            language,
        })
    }

    /// 12-slot binary label vector for classifier training.
    pub fn label_vector(&self) -> Vec<bool> {
        let mut labels = vec![false; CATEGORY_COUNT];
        for &c in &self.categories {
            labels[c] = true;
        }
        labels
    }
}

pub(crate) fn validate_label_categories(label: Label, categories: &[usize]) -> Result<()> {
    match label {
        Label::Unsafe if categories.is_empty() => Err(Error::Config(
            "unsafe example needs at least one category".into(),
        )),
        Label::Safe if !categories.is_empty() => Err(Error::Config(
            "safe example must carry no categories".into(),
        )),
        _ => {
            let mut seen = std::collections::BTreeSet::new();
            for &c in categories {
                if c >= CATEGORY_COUNT {
                    return Err(Error::Config(format!(
                        "category index {c} outside 0..{CATEGORY_COUNT}"
                    )));
                }
                if !seen.insert(c) {
                    return Err(Error::Config(format!("duplicate category index {c}")));
                }
            }
            Ok(())
        }
    }
}

/// Seed collection with id lookup. Ingestion deduplicates by exact
/// token-sequence equality, keeping the first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    seeds: Vec<SeedExample>,
    by_id: std::collections::BTreeMap<SeedId, usize>,
}

impl SeedSet {
    pub fn ingest(seeds: Vec<SeedExample>) -> Result<Self> {
        let mut unique = Vec::new();
        let mut by_id = std::collections::BTreeMap::new();
        let mut seen_tokens = std::collections::BTreeSet::new();
        for seed in seeds {
            if !seen_tokens.insert(seed.tokens.clone()) {
                continue; // exact duplicate sequence
            }
            if by_id.contains_key(&seed.id) {
                return Err(Error::Config(format!("duplicate seed id {}", seed.id)));
            }
            by_id.insert(seed.id, unique.len());
            unique.push(seed);
        }
        if unique.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            seeds: unique,
            by_id,
        })
    }

    pub fn get(&self, id: SeedId) -> Result<&SeedExample> {
        self.by_id
            .get(&id)
            .map(|&i| &self.seeds[i])
            .ok_or(Error::UnknownSeed { id: id.0 })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SeedExample> {
        self.seeds.iter()
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

/// One generator sample on its way through the loop. Scoring fills
/// `harm_score`, classification fills `verdict`, and only then may
/// `level` be assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: ProposalId,
    pub seed_id: SeedId,
    /// Position of the sampled candidate in its generation context.
    pub candidate_index: usize,
    pub tokens: Vec<u32>,
    pub prompt_tag: Label,
    pub language: LanguageId,
    /// Ground-truth nature of the candidate's token profile; consulted by
    /// reference scorers, never by the classifier.
    pub true_label: Label,
    pub harm_score: Option<u8>,
    pub refusal: bool,
    pub verdict: Option<Label>,
    pub level: Option<Level>,
}

/// Where a dataset member came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    Synthetic {
        iteration: usize,
        proposal_id: ProposalId,
        /// Verdict the classifier gave at admission time; admission
        /// requires it to disagree with the inherited label.
        admitted_verdict: Label,
    },
}

/// One member of the evolving training multiset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub id: ExampleId,
    pub tokens: Vec<u32>,
    pub label: Label,
    pub categories: Vec<usize>,
    pub language: LanguageId,
    pub provenance: Provenance,
}

/// The training multiset at some iteration. Grows monotonically: each
/// augmentation appends the freshly misclassified proposals and never
/// removes anything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetState {
    pub iteration: usize,
    pub examples: Vec<DatasetExample>,
}

impl DatasetState {
    pub fn from_seeds(seeds: &SeedSet) -> Self {
        let examples = seeds
            .iter()
            .enumerate()
            .map(|(i, seed)| DatasetExample {
                id: ExampleId(i as u64),
                tokens: seed.tokens.clone(),
                label: seed.label,
                categories: seed.categories.clone(),
                language: seed.language,
                provenance: Provenance::Seed,
            })
            .collect();
        Self {
            iteration: 0,
            examples,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn per_language_counts(&self, num_languages: usize) -> Vec<u64> {
        let mut counts = vec![0u64; num_languages];
        for example in &self.examples {
            let slot = example.language.0 as usize;
            if slot < counts.len() {
                counts[slot] += 1;
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(id: u64, tokens: &[u32], label: Label) -> SeedExample {
        let categories = if label == Label::Unsafe { vec![0] } else { vec![] };
        SeedExample::new(SeedId(id), tokens.to_vec(), label, categories, LanguageId(0)).unwrap()
    }

    #[test]
    fn label_category_consistency_enforced() {
        assert!(SeedExample::new(
            SeedId(0),
            vec![1],
            Label::Unsafe,
            vec![],
            LanguageId(0)
        )
        .is_err());
        assert!(SeedExample::new(
            SeedId(0),
            vec![1],
            Label::Safe,
            vec![2],
            LanguageId(0)
        )
        .is_err());
        assert!(SeedExample::new(
            SeedId(0),
            vec![1],
            Label::Unsafe,
            vec![3, 3],
            LanguageId(0)
        )
        .is_err());
    }

    #[test]
    fn ingestion_deduplicates_exact_sequences() {
        let seeds = vec![
            seed(0, &[1, 2, 3], Label::Safe),
            seed(1, &[1, 2, 3], Label::Unsafe),
            seed(2, &[4, 5], Label::Unsafe),
        ];
        let set = SeedSet::ingest(seeds).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.get(SeedId(1)).is_err());
        assert_eq!(set.get(SeedId(2)).unwrap().tokens, vec![4, 5]);
    }

    #[test]
    fn label_vector_sets_category_slots() {
        let s = SeedExample::new(
            SeedId(0),
            vec![1],
            Label::Unsafe,
            vec![2, 7],
            LanguageId(1),
        )
        .unwrap();
        let v = s.label_vector();
        assert_eq!(v.iter().filter(|&&b| b).count(), 2);
        assert!(v[2] && v[7]);
    }

    #[test]
    fn dataset_counts_languages() {
        let seeds = SeedSet::ingest(vec![seed(0, &[1], Label::Safe), seed(1, &[2], Label::Safe)])
            .unwrap();
        let state = DatasetState::from_seeds(&seeds);
        assert_eq!(state.per_language_counts(2), vec![2, 0]);
        assert_eq!(state.iteration, 0);
    }

    #[test]
    fn level_serde_round_trip() {
        let json = serde_json::to_string(&Level::Three).unwrap();
        assert_eq!(json, "3");
        assert_eq!(serde_json::from_str::<Level>("3").unwrap(), Level::Three);
        assert!(serde_json::from_str::<Level>("5").is_err());
    }
}
