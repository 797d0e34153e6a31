//! Per-iteration metrics record and its JSONL/CSV emission.

use serde::{Deserialize, Serialize};

/// Everything measured in one loop iteration. Count identities hold by
/// construction: `kept = proposals_generated - rejected_*` and
/// `misclassified + correctly_classified = kept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub dataset_size: usize,
    /// Dataset composition per configured language.
    pub language_counts: Vec<u64>,
    pub proposals_generated: usize,
    pub rejected_refusal: usize,
    pub rejected_length: usize,
    pub rejected_score: usize,
    pub kept: usize,
    pub misclassified: usize,
    pub correctly_classified: usize,
    /// Languages of the examples added this iteration.
    pub added_language_counts: Vec<u64>,
    pub pair_count: usize,
    pub strong_pairs: usize,
    pub weak_pairs: usize,
    pub classifier_train_loss: f64,
    pub classifier_diverged: bool,
    pub f1_overall: f64,
    pub f1_per_language: Vec<f64>,
    pub warnings: Vec<String>,
}

impl IterationReport {
    /// The arithmetic identities every report must satisfy.
    pub fn counts_consistent(&self) -> bool {
        self.kept + self.rejected_refusal + self.rejected_length + self.rejected_score
            == self.proposals_generated
            && self.misclassified + self.correctly_classified == self.kept
            && self.added_language_counts.iter().sum::<u64>() == self.misclassified as u64
    }
}

/// One CSV summary row per iteration; language columns are suffixed with
/// the configured names.
pub fn reports_to_csv(reports: &[IterationReport], language_names: &[String]) -> String {
    let mut header = String::from(
        "iteration,dataset_size,proposals,rejected_refusal,rejected_length,rejected_score,kept,\
         misclassified,correct,pairs,strong_pairs,weak_pairs,classifier_loss,f1_overall",
    );
    for name in language_names {
        header.push_str(&format!(",f1_{name}"));
    }
    for name in language_names {
        header.push_str(&format!(",count_{name}"));
    }
    for name in language_names {
        header.push_str(&format!(",added_{name}"));
    }
    let mut out = header;
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.dataset_size,
            r.proposals_generated,
            r.rejected_refusal,
            r.rejected_length,
            r.rejected_score,
            r.kept,
            r.misclassified,
            r.correctly_classified,
            r.pair_count,
            r.strong_pairs,
            r.weak_pairs,
            r.classifier_train_loss,
            r.f1_overall
        ));
        for value in &r.f1_per_language {
            out.push_str(&format!(",{value}"));
        }
        for value in &r.language_counts {
            out.push_str(&format!(",{value}"));
        }
        for value in &r.added_language_counts {
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> IterationReport {
        IterationReport {
            iteration: 1,
            dataset_size: 12,
            language_counts: vec![10, 2],
            proposals_generated: 16,
            rejected_refusal: 1,
            rejected_length: 2,
            rejected_score: 3,
            kept: 10,
            misclassified: 4,
            correctly_classified: 6,
            added_language_counts: vec![1, 3],
            pair_count: 5,
            strong_pairs: 4,
            weak_pairs: 1,
            classifier_train_loss: 0.25,
            classifier_diverged: false,
            f1_overall: 0.5,
            f1_per_language: vec![0.6, 0.4],
            warnings: vec![],
        }
    }

    #[test]
    fn identities_checked() {
        let mut r = report();
        assert!(r.counts_consistent());
        r.kept = 9;
        assert!(!r.counts_consistent());
    }

    #[test]
    fn csv_shape() {
        let names = vec!["en".to_string(), "fr".to_string()];
        let csv = reports_to_csv(&[report()], &names);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.ends_with("f1_en,f1_fr,count_en,count_fr,added_en,added_fr"));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), header.split(',').count());
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let json = serde_json::to_string(&r).unwrap();
        let back: IterationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
