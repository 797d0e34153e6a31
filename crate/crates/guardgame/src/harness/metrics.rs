//! Held-out evaluation: F1 on the unsafe-positive convention and the
//! error-confidence histogram diagnostic.

use serde::{Deserialize, Serialize};

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::learners::{classify, FeatureVector, MultiLabelClassifier};
use crate::pipeline::SeedExample;

/// F1 with total edge conventions: no predicted and no actual positives
/// scores 1; no predicted positives against existing actual positives
/// scores 0.
pub fn f1_from_counts(true_positives: u64, false_positives: u64, false_negatives: u64) -> f64 {
    if true_positives == 0 {
        if false_positives == 0 && false_negatives == 0 {
            return 1.0;
        }
        return 0.0;
    }
    let tp = true_positives as f64;
    let precision = tp / (tp + false_positives as f64);
    let recall = tp / (tp + false_negatives as f64);
    2.0 * precision * recall / (precision + recall)
}

/// F1 overall and per language slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub overall: f64,
    pub per_language: Vec<f64>,
}

impl F1Scores {
    /// Mean F1 over the non-primary languages (slots 1..).
    pub fn minority_mean(&self) -> f64 {
        let minority = &self.per_language[1..];
        minority.iter().sum::<f64>() / minority.len() as f64
    }
}

/// Evaluates the binary verdict against labeled examples, slicing by
/// language. Unsafe is the positive class.
pub fn eval_f1(
    model: &MultiLabelClassifier,
    examples: &[SeedExample],
    num_languages: usize,
    alphabet_size: usize,
) -> Result<F1Scores> {
    let mut counts = vec![[0u64; 3]; num_languages + 1]; // [tp, fp, fn] per slice, slot 0 overall
    for example in examples {
        let features = FeatureVector::from_tokens(&example.tokens, alphabet_size)?;
        let (_, verdict) = classify(model, &features);
        let slot = example.language.0 as usize + 1;
        if slot > num_languages {
            return Err(Error::Config(format!(
                "example language {} outside the configured {num_languages} languages",
                example.language.0
            )));
        }
        let bucket = match (verdict, example.label) {
            (Label::Unsafe, Label::Unsafe) => Some(0),
            (Label::Unsafe, Label::Safe) => Some(1),
            (Label::Safe, Label::Unsafe) => Some(2),
            (Label::Safe, Label::Safe) => None,
        };
        if let Some(bucket) = bucket {
            counts[0][bucket] += 1;
            counts[slot][bucket] += 1;
        }
    }
    Ok(F1Scores {
        overall: f1_from_counts(counts[0][0], counts[0][1], counts[0][2]),
        per_language: counts[1..]
            .iter()
            .map(|c| f1_from_counts(c[0], c[1], c[2]))
            .collect(),
    })
}

/// Histogram of the classifier's max-category probability on its errors,
/// false positives and false negatives binned separately over [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceHistogram {
    pub bins: usize,
    pub false_positive_counts: Vec<u64>,
    pub false_negative_counts: Vec<u64>,
}

impl ConfidenceHistogram {
    pub fn false_positive_total(&self) -> u64 {
        self.false_positive_counts.iter().sum()
    }

    pub fn false_negative_total(&self) -> u64 {
        self.false_negative_counts.iter().sum()
    }

    /// CSV with one row per bin: lower edge, upper edge, and both counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,false_positives,false_negatives\n");
        let width = 1.0 / self.bins as f64;
        for b in 0..self.bins {
            out.push_str(&format!(
                "{},{},{},{}\n",
                b as f64 * width,
                (b + 1) as f64 * width,
                self.false_positive_counts[b],
                self.false_negative_counts[b]
            ));
        }
        out
    }
}

/// Buckets the max-category probability of every misclassified example.
/// Overconfident failure modes show up as mass near 1 for false
/// positives and near 0 for false negatives.
pub fn confidence_histogram(
    model: &MultiLabelClassifier,
    examples: &[SeedExample],
    bins: usize,
    alphabet_size: usize,
) -> Result<ConfidenceHistogram> {
    if bins < 2 {
        return Err(Error::InvalidParameter {
            name: "bins",
            message: format!("need at least 2 bins, got {bins}"),
        });
    }
    let mut false_positive_counts = vec![0u64; bins];
    let mut false_negative_counts = vec![0u64; bins];
    for example in examples {
        let features = FeatureVector::from_tokens(&example.tokens, alphabet_size)?;
        let (probabilities, verdict) = classify(model, &features);
        if verdict == example.label {
            continue;
        }
        let max_probability = probabilities.iter().cloned().fold(0.0, f64::max);
        let bin = ((max_probability * bins as f64) as usize).min(bins - 1);
        match verdict {
            Label::Unsafe => false_positive_counts[bin] += 1,
            Label::Safe => false_negative_counts[bin] += 1,
        }
    }
    Ok(ConfidenceHistogram {
        bins,
        false_positive_counts,
        false_negative_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{LanguageId, SeedId};

    fn example(id: u64, tokens: &[u32], label: Label, language: u8) -> SeedExample {
        let categories = if label == Label::Unsafe { vec![0] } else { vec![] };
        SeedExample::new(
            SeedId(id),
            tokens.to_vec(),
            label,
            categories,
            LanguageId(language),
        )
        .unwrap()
    }

    #[test]
    fn f1_edge_conventions() {
        assert_eq!(f1_from_counts(0, 0, 0), 1.0);
        assert_eq!(f1_from_counts(0, 0, 3), 0.0);
        assert_eq!(f1_from_counts(0, 2, 0), 0.0);
        assert_eq!(f1_from_counts(5, 0, 0), 1.0);
        // harmonic mean of P = R = 2/3
        let f1 = f1_from_counts(2, 1, 1);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_safe_classifier_scores_zero_with_positives_present() {
        let model = MultiLabelClassifier::zeros(12, 4).unwrap();
        let examples = vec![
            example(0, &[0], Label::Unsafe, 0),
            example(1, &[1], Label::Safe, 0),
        ];
        let scores = eval_f1(&model, &examples, 2, 3).unwrap();
        assert_eq!(scores.overall, 0.0);
        assert_eq!(scores.per_language, vec![0.0, 1.0]);
    }

    #[test]
    fn perfect_classifier_scores_one() {
        // token 0 drives category 0 strongly positive
        let mut model = MultiLabelClassifier::zeros(12, 3).unwrap();
        model.weights[0][0] = 40.0;
        model.weights[0][2] = -20.0;
        let examples = vec![
            example(0, &[0], Label::Unsafe, 0),
            example(1, &[1], Label::Safe, 1),
        ];
        let scores = eval_f1(&model, &examples, 2, 2).unwrap();
        assert_eq!(scores.overall, 1.0);
        assert_eq!(scores.per_language, vec![1.0, 1.0]);
    }

    #[test]
    fn f1_invariant_under_permutation() {
        let mut model = MultiLabelClassifier::zeros(12, 3).unwrap();
        model.weights[3][0] = 9.0;
        model.weights[3][2] = -2.0;
        let mut examples = vec![
            example(0, &[0, 0], Label::Unsafe, 0),
            example(1, &[1], Label::Safe, 1),
            example(2, &[0], Label::Safe, 1),
            example(3, &[1, 1], Label::Unsafe, 0),
        ];
        let forward = eval_f1(&model, &examples, 2, 2).unwrap();
        examples.reverse();
        let backward = eval_f1(&model, &examples, 2, 2).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn histogram_is_empty_for_perfect_classifier() {
        let mut model = MultiLabelClassifier::zeros(12, 3).unwrap();
        model.weights[0][0] = 40.0;
        model.weights[0][2] = -20.0;
        let examples = vec![
            example(0, &[0], Label::Unsafe, 0),
            example(1, &[1], Label::Safe, 0),
        ];
        let histogram = confidence_histogram(&model, &examples, 10, 2).unwrap();
        assert_eq!(histogram.false_positive_total(), 0);
        assert_eq!(histogram.false_negative_total(), 0);
    }

    #[test]
    fn constant_overconfident_output_lands_in_top_bin() {
        // bias-only logit fixed at p = 0.9 for one category
        let mut model = MultiLabelClassifier::zeros(12, 2).unwrap();
        model.weights[0][1] = (0.9f64 / 0.1).ln();
        let examples = vec![
            example(0, &[0], Label::Safe, 0),
            example(1, &[0], Label::Safe, 0),
        ];
        let histogram = confidence_histogram(&model, &examples, 10, 1).unwrap();
        assert_eq!(histogram.false_positive_counts[9], 2);
        assert_eq!(histogram.false_positive_total(), 2);
        let csv = histogram.to_csv();
        assert!(csv.lines().count() == 11);
        assert!(csv.contains("0.9,1,2,0"));
    }

    #[test]
    fn histogram_needs_two_bins() {
        let model = MultiLabelClassifier::zeros(12, 2).unwrap();
        assert!(confidence_histogram(&model, &[], 1, 1).is_err());
    }
}
