//! Synthetic toy corpora with configurable language imbalance, plus the
//! per-seed candidate pools the generator samples from.
//!
//! Tokens are partitioned into blocks: a few reserved refusal tokens, a
//! language-neutral common block, one benign block per language, and one
//! block per (language, category) cell. Harm signal is deliberately
//! language-specific, so a classifier trained mostly on the primary
//! language has nothing to transfer to the others and the rebalancing
//! effect of synthetic data is observable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::learners::{Candidate, CandidateCatalog, CategorySet, ContextCandidates, CATEGORY_COUNT};
use crate::pipeline::{LanguageId, SeedExample, SeedId, SeedSet};

const REFUSAL_TOKENS: usize = 4;
const COMMON_TOKENS: usize = 24;
const SAFE_TOKENS_PER_LANGUAGE: usize = 6;

/// The token subsequences marking refused generations; they live on four
/// reserved token ids that the corpus templates never emit organically.
pub fn default_refusal_phrases() -> Vec<Vec<u32>> {
    vec![vec![0, 1], vec![2, 3]]
}

/// Corpus generation parameters. Proportions follow the real-data
/// imbalance (a dominant primary language at 81.4%).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub alphabet_size: usize,
    pub languages: Vec<String>,
    pub language_proportions: Vec<f64>,
    pub unsafe_fraction: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub seq_len_min: usize,
    pub seq_len_max: usize,
    pub max_categories_per_example: usize,
    /// Candidate pool size per (seed, language).
    pub candidates_per_language: usize,
    /// Probability a candidate's token profile flips the seed label.
    pub candidate_label_flip_prob: f64,
    /// Probability a candidate embeds a refusal phrase.
    pub candidate_refusal_prob: f64,
    /// Probability a candidate is generated far longer than its seed.
    pub candidate_overlong_prob: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 196,
            languages: vec!["en".into(), "fr".into(), "es".into(), "de".into()],
            language_proportions: vec![0.814, 0.089, 0.052, 0.045],
            unsafe_fraction: 0.5,
            train_size: 600,
            test_size: 400,
            seq_len_min: 8,
            seq_len_max: 24,
            max_categories_per_example: 2,
            candidates_per_language: 6,
            candidate_label_flip_prob: 0.15,
            candidate_refusal_prob: 0.05,
            candidate_overlong_prob: 0.05,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() || self.languages.len() != self.language_proportions.len() {
            return Err(Error::Config(
                "languages and language_proportions must align and be non-empty".into(),
            ));
        }
        let sum: f64 = self.language_proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.language_proportions.iter().any(|&p| p < 0.0) {
            return Err(Error::Config(format!(
                "language proportions must be non-negative and sum to 1, got {sum}"
            )));
        }
        if !(0.0..=1.0).contains(&self.unsafe_fraction) {
            return Err(Error::Config("unsafe_fraction must lie in [0, 1]".into()));
        }
        if self.train_size == 0 || self.test_size == 0 {
            return Err(Error::Config("corpus sizes must be positive".into()));
        }
        if self.seq_len_min < 2 || self.seq_len_min > self.seq_len_max {
            return Err(Error::Config(
                "sequence length range must satisfy 2 <= min <= max".into(),
            ));
        }
        if self.max_categories_per_example == 0
            || self.max_categories_per_example > CATEGORY_COUNT
        {
            return Err(Error::Config(format!(
                "max_categories_per_example must lie in 1..={CATEGORY_COUNT}"
            )));
        }
        if self.candidates_per_language == 0 {
            return Err(Error::Config("candidates_per_language must be positive".into()));
        }
        for (name, p) in [
            ("candidate_label_flip_prob", self.candidate_label_flip_prob),
            ("candidate_refusal_prob", self.candidate_refusal_prob),
            ("candidate_overlong_prob", self.candidate_overlong_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        TokenLayout::new(self.alphabet_size, self.languages.len()).map(|_| ())
    }

    pub fn num_languages(&self) -> usize {
        self.languages.len()
    }
}

/// Block structure of the token alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLayout {
    pub alphabet_size: usize,
    pub num_languages: usize,
    category_tokens_per_cell: usize,
}

impl TokenLayout {
    pub fn new(alphabet_size: usize, num_languages: usize) -> Result<Self> {
        let fixed = REFUSAL_TOKENS + COMMON_TOKENS + num_languages * SAFE_TOKENS_PER_LANGUAGE;
        let cells = num_languages * CATEGORY_COUNT;
        if alphabet_size < fixed + cells {
            return Err(Error::Config(format!(
                "alphabet_size {alphabet_size} too small: need at least {} for {num_languages} languages",
                fixed + cells
            )));
        }
        Ok(Self {
            alphabet_size,
            num_languages,
            category_tokens_per_cell: (alphabet_size - fixed) / cells,
        })
    }

    fn common_start(&self) -> usize {
        REFUSAL_TOKENS
    }

    fn safe_start(&self, language: usize) -> usize {
        REFUSAL_TOKENS + COMMON_TOKENS + language * SAFE_TOKENS_PER_LANGUAGE
    }

    fn category_start(&self, language: usize, category: usize) -> usize {
        REFUSAL_TOKENS
            + COMMON_TOKENS
            + self.num_languages * SAFE_TOKENS_PER_LANGUAGE
            + (language * CATEGORY_COUNT + category) * self.category_tokens_per_cell
    }

    fn common_token(&self, rng: &mut ChaCha8Rng) -> u32 {
        (self.common_start() + rng.random_range(0..COMMON_TOKENS)) as u32
    }

    fn safe_token(&self, language: usize, rng: &mut ChaCha8Rng) -> u32 {
        (self.safe_start(language) + rng.random_range(0..SAFE_TOKENS_PER_LANGUAGE)) as u32
    }

    fn category_token(&self, language: usize, category: usize, rng: &mut ChaCha8Rng) -> u32 {
        (self.category_start(language, category)
            + rng.random_range(0..self.category_tokens_per_cell)) as u32
    }

    /// Samples one token sequence with the (language, label, categories)
    /// frequency profile.
    fn sequence(
        &self,
        language: usize,
        label: Label,
        categories: &[usize],
        length: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<u32> {
        (0..length)
            .map(|_| {
                let u: f64 = rng.random();
                match label {
                    Label::Safe => {
                        if u < 0.45 {
                            self.common_token(rng)
                        } else {
                            self.safe_token(language, rng)
                        }
                    }
                    Label::Unsafe => {
                        if u < 0.35 {
                            self.common_token(rng)
                        } else if u < 0.60 {
                            self.safe_token(language, rng)
                        } else {
                            let c = categories[rng.random_range(0..categories.len())];
                            self.category_token(language, c, rng)
                        }
                    }
                }
            })
            .collect()
    }
}

fn sample_language(proportions: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, &p) in proportions.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    proportions.len() - 1
}

fn sample_categories(max_categories: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let count = rng.random_range(1..=max_categories);
    let mut picked = std::collections::BTreeSet::new();
    while picked.len() < count {
        picked.insert(rng.random_range(0..CATEGORY_COUNT));
    }
    picked.into_iter().collect()
}

fn generate_example(
    id: u64,
    config: &CorpusConfig,
    layout: &TokenLayout,
    rng: &mut ChaCha8Rng,
) -> Result<SeedExample> {
    let language = sample_language(&config.language_proportions, rng);
    let label = if rng.random::<f64>() < config.unsafe_fraction {
        Label::Unsafe
    } else {
        Label::Safe
    };
    let categories = match label {
        Label::Unsafe => sample_categories(config.max_categories_per_example, rng),
        Label::Safe => vec![],
    };
    let length = rng.random_range(config.seq_len_min..=config.seq_len_max);
    let tokens = layout.sequence(language, label, &categories, length, rng);
    SeedExample::new(
        SeedId(id),
        tokens,
        label,
        categories,
        LanguageId(language as u8),
    )
}

/// Train seeds and a held-out test set, disjoint by exact token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub train: Vec<SeedExample>,
    pub test: Vec<SeedExample>,
}

/// Generates both splits deterministically from the root seed via the
/// `corpus-train` and `corpus-test` substreams.
pub fn synth_corpus(config: &CorpusConfig, root_seed: u64) -> Result<SynthCorpus> {
    config.validate()?;
    let layout = TokenLayout::new(config.alphabet_size, config.num_languages())?;

    let mut seen = std::collections::BTreeSet::new();
    let mut train = Vec::with_capacity(config.train_size);
    let mut rng = crate::harness::substream(root_seed, "corpus-train", 0);
    let mut next_id = 0u64;
    while train.len() < config.train_size {
        let example = generate_example(next_id, config, &layout, &mut rng)?;
        if seen.insert(example.tokens.clone()) {
            next_id += 1;
            train.push(example);
        }
    }

    let mut test = Vec::with_capacity(config.test_size);
    let mut rng = crate::harness::substream(root_seed, "corpus-test", 0);
    let mut attempts = 0usize;
    while test.len() < config.test_size {
        let example = generate_example(next_id, config, &layout, &mut rng)?;
        attempts += 1;
        if attempts > config.test_size * 100 {
            return Err(Error::Config(
                "token space too small to build a disjoint test split".into(),
            ));
        }
        if seen.insert(example.tokens.clone()) {
            next_id += 1;
            test.push(example);
        }
    }
    Ok(SynthCorpus { train, test })
}

/// Builds the per-seed candidate pools: for every seed, one context
/// keyed by its label prompt with `candidates_per_language` candidates in
/// every configured language. Imperfections (label flips, refusal
/// phrases, overlong outputs) are injected at the configured rates so
/// filtering has real work to do.
pub fn build_candidate_catalog(
    seeds: &SeedSet,
    config: &CorpusConfig,
    overlong_threshold: usize,
    root_seed: u64,
) -> Result<CandidateCatalog> {
    config.validate()?;
    let layout = TokenLayout::new(config.alphabet_size, config.num_languages())?;
    let phrases = default_refusal_phrases();
    let mut rng = crate::harness::substream(root_seed, "catalog", 0);
    let mut contexts = Vec::with_capacity(seeds.len());
    for seed in seeds.iter() {
        let mut candidates = Vec::new();
        for language in 0..config.num_languages() {
            for _ in 0..config.candidates_per_language {
                candidates.push(generate_candidate(
                    seed,
                    language,
                    config,
                    &layout,
                    overlong_threshold,
                    &phrases,
                    &mut rng,
                )?);
            }
        }
        contexts.push(ContextCandidates {
            seed_id: seed.id,
            prompt_tag: seed.label,
            candidates,
        });
    }
    CandidateCatalog::new(contexts)
}

fn generate_candidate(
    seed: &SeedExample,
    language: usize,
    config: &CorpusConfig,
    layout: &TokenLayout,
    overlong_threshold: usize,
    phrases: &[Vec<u32>],
    rng: &mut ChaCha8Rng,
) -> Result<Candidate> {
    let flipped = rng.random::<f64>() < config.candidate_label_flip_prob;
    let true_label = if flipped { seed.label.flip() } else { seed.label };
    let categories: Vec<usize> = match (true_label, flipped) {
        (Label::Unsafe, false) => seed.categories.clone(),
        (Label::Unsafe, true) => sample_categories(1, rng),
        (Label::Safe, _) => vec![],
    };

    let base_length = {
        let jitter = rng.random_range(0..5) as i64 - 2;
        (seed.tokens.len() as i64 + jitter).max(4) as usize
    };
    let length = if rng.random::<f64>() < config.candidate_overlong_prob {
        seed.tokens.len() + overlong_threshold + 1 + rng.random_range(0..8)
    } else {
        base_length
    };

    let mut tokens = layout.sequence(language, true_label, &categories, length, rng);
    if rng.random::<f64>() < config.candidate_refusal_prob {
        let phrase = &phrases[rng.random_range(0..phrases.len())];
        let at = rng.random_range(0..=tokens.len().saturating_sub(phrase.len()));
        tokens[at..at + phrase.len()].copy_from_slice(phrase);
    }
    Ok(Candidate {
        tokens,
        language: LanguageId(language as u8),
        true_label,
    })
}

/// Self-describing corpus header, the first JSONL line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub languages: Vec<String>,
    pub categories: CategorySet,
    pub alphabet_size: usize,
}

#[derive(Serialize, Deserialize)]
struct SeedRecord {
    id: u64,
    tokens: Vec<u32>,
    label: Label,
    categories: Vec<String>,
    language: String,
}

/// Serializes a corpus split: one header line, then one record per
/// example with language and category names spelled out.
pub fn write_corpus_jsonl(
    seeds: &[SeedExample],
    languages: &[String],
    categories: &CategorySet,
    alphabet_size: usize,
) -> Result<String> {
    let header = CorpusHeader {
        languages: languages.to_vec(),
        categories: categories.clone(),
        alphabet_size,
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for seed in seeds {
        let record = SeedRecord {
            id: seed.id.0,
            tokens: seed.tokens.clone(),
            label: seed.label,
            categories: seed
                .categories
                .iter()
                .map(|&c| categories.names()[c].clone())
                .collect(),
            language: languages
                .get(seed.language.0 as usize)
                .ok_or_else(|| {
                    Error::Config(format!("language index {} unnamed", seed.language.0))
                })?
                .clone(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a corpus file produced by [`write_corpus_jsonl`].
pub fn parse_corpus_jsonl(text: &str) -> Result<(CorpusHeader, Vec<SeedExample>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: CorpusHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| Error::Config("corpus file is empty".into()))?,
    )?;
    let mut seeds = Vec::new();
    for line in lines {
        let record: SeedRecord = serde_json::from_str(line)?;
        let language = header
            .languages
            .iter()
            .position(|l| *l == record.language)
            .ok_or_else(|| {
                Error::Config(format!("unknown language {:?} in corpus", record.language))
            })?;
        let categories = record
            .categories
            .iter()
            .map(|name| {
                header
                    .categories
                    .index_of(name)
                    .ok_or_else(|| Error::Config(format!("unknown category {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        seeds.push(SeedExample::new(
            SeedId(record.id),
            record.tokens,
            record.label,
            categories,
            LanguageId(language as u8),
        )?);
    }
    Ok((header, seeds))
}
