//! Bag-of-token feature encoding, the toy stand-in for text embedding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token counts over the alphabet plus a constant bias feature in the
/// last slot. Length is always `alphabet_size + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    counts: Vec<u32>,
}

impl FeatureVector {
    pub fn from_tokens(tokens: &[u32], alphabet_size: usize) -> Result<Self> {
        let mut counts = vec![0u32; alphabet_size + 1];
        for &token in tokens {
            if token as usize >= alphabet_size {
                return Err(Error::TokenOutOfRange {
                    token,
                    alphabet_size,
                });
            }
            counts[token as usize] += 1;
        }
        counts[alphabet_size] = 1; // bias
        Ok(Self { counts })
    }

    pub fn from_counts(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Config("feature vector needs a bias slot".into()));
        }
        Ok(Self { counts })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn bias_index(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn count(&self, index: usize) -> u32 {
        self.counts[index]
    }

    /// Inner product with a weight row of matching dimension.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.counts.len());
        self.counts
            .iter()
            .zip(weights)
            .map(|(&c, &w)| c as f64 * w)
            .sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}
