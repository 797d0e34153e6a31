//! Multi-label logistic classifier: independent sigmoid heads over
//! bag-of-token features, trained with full-batch gradient descent on the
//! summed binary cross-entropy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::learners::FeatureVector;

/// One labeled training example: features plus one binary flag per
/// category. Safe content carries the all-false vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassExample {
    pub features: FeatureVector,
    pub labels: Vec<bool>,
}

/// Independent logistic heads, one weight row per category, plus the
/// decision threshold(s). The binary verdict compares the maximum
/// category probability to the threshold, strictly: ties stay safe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelClassifier {
    pub weights: Vec<Vec<f64>>,
    pub threshold: f64,
    /// Optional per-category thresholds; when set, a category flags
    /// content by exceeding its own threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_category_thresholds: Option<Vec<f64>>,
}

impl MultiLabelClassifier {
    pub fn new(weights: Vec<Vec<f64>>, threshold: f64) -> Result<Self> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(Error::Config("classifier needs at least one weight row".into()));
        }
        let dim = weights[0].len();
        if weights.iter().any(|row| row.len() != dim) {
            return Err(Error::ShapeMismatch("ragged classifier weight rows".into()));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                message: format!("must lie in (0, 1), got {threshold}"),
            });
        }
        Ok(Self {
            weights,
            threshold,
            per_category_thresholds: None,
        })
    }

    pub fn zeros(num_categories: usize, feature_dim: usize) -> Result<Self> {
        Self::new(vec![vec![0.0; feature_dim]; num_categories], 0.5)
    }

    pub fn num_categories(&self) -> usize {
        self.weights.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights[0].len()
    }

    /// Per-category probabilities for one feature vector.
    pub fn probabilities(&self, features: &FeatureVector) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| sigmoid(features.dot(row)))
            .collect()
    }

    fn threshold_for(&self, category: usize) -> f64 {
        match &self.per_category_thresholds {
            Some(thresholds) => thresholds[category],
            None => self.threshold,
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln p + (1-y) ln(1-p)]` computed from the logit, which is exact
/// and immune to sigmoid saturation.
fn bce_term(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean over examples of the per-category binary cross-entropies, summed
/// across categories.
pub fn bce_multilabel_loss(
    model: &MultiLabelClassifier,
    dataset: &[ClassExample],
) -> Result<f64> {
    check_dataset(model, dataset)?;
    let mut total = 0.0;
    for example in dataset {
        for (c, row) in model.weights.iter().enumerate() {
            let z = example.features.dot(row);
            let y = if example.labels[c] { 1.0 } else { 0.0 };
            total += bce_term(z, y);
        }
    }
    Ok(total / dataset.len() as f64)
}

/// Exact gradient of [`bce_multilabel_loss`]: category `c` receives the
/// mean of `(p_c - y_c) * features`.
pub fn bce_gradient(
    model: &MultiLabelClassifier,
    dataset: &[ClassExample],
) -> Result<Vec<Vec<f64>>> {
    check_dataset(model, dataset)?;
    let mut gradient = vec![vec![0.0; model.feature_dim()]; model.num_categories()];
    for example in dataset {
        for (c, row) in model.weights.iter().enumerate() {
            let p = sigmoid(example.features.dot(row));
            let y = if example.labels[c] { 1.0 } else { 0.0 };
            let residual = p - y;
            for (g, &count) in gradient[c].iter_mut().zip(example.features.counts()) {
                *g += residual * count as f64;
            }
        }
    }
    let scale = 1.0 / dataset.len() as f64;
    for row in &mut gradient {
        for g in row {
            *g *= scale;
        }
    }
    Ok(gradient)
}

fn check_dataset(model: &MultiLabelClassifier, dataset: &[ClassExample]) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for example in dataset {
        if example.features.dim() != model.feature_dim() {
            return Err(Error::ShapeMismatch(format!(
                "example features have dim {}, model expects {}",
                example.features.dim(),
                model.feature_dim()
            )));
        }
        if example.labels.len() != model.num_categories() {
            return Err(Error::ShapeMismatch(format!(
                "example has {} labels, model has {} categories",
                example.labels.len(),
                model.num_categories()
            )));
        }
    }
    Ok(())
}

/// Training configuration. `l2` is a plain ridge penalty on non-bias
/// weights, off by default so the descended objective is the loss
/// verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub init_seed: u64,
    pub init_scale: f64,
    pub l2: f64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 250,
            init_seed: 0,
            init_scale: 0.01,
            l2: 0.0,
        }
    }
}

/// A trained model plus its loss trace. `diverged` flips when the
/// descended objective rose for ten consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub model: MultiLabelClassifier,
    /// Descended objective per epoch; entry 0 is the pre-training value.
    pub loss_history: Vec<f64>,
    pub diverged: bool,
}

impl TrainedClassifier {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("at least the initial loss")
    }
}

/// Trains a fresh model by full-batch gradient descent from a seeded
/// random initialization. Deterministic: the same seed and data yield
/// bit-identical weights.
pub fn train_classifier(
    dataset: &[ClassExample],
    num_categories: usize,
    config: &ClassifierTrainConfig,
) -> Result<TrainedClassifier> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let feature_dim = dataset[0].features.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let weights: Vec<Vec<f64>> = (0..num_categories)
        .map(|_| {
            (0..feature_dim)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * config.init_scale)
                .collect()
        })
        .collect();
    let mut model = MultiLabelClassifier::new(weights, 0.5)?;

    let objective = |m: &MultiLabelClassifier| -> Result<f64> {
        let mut value = bce_multilabel_loss(m, dataset)?;
        if config.l2 > 0.0 {
            let bias = m.feature_dim() - 1;
            let penalty: f64 = m
                .weights
                .iter()
                .map(|row| row[..bias].iter().map(|w| w * w).sum::<f64>())
                .sum();
            value += 0.5 * config.l2 * penalty;
        }
        Ok(value)
    };

    let mut loss_history = vec![objective(&model)?];
    let mut consecutive_increases = 0usize;
    let mut diverged = false;
    for _ in 0..config.epochs {
        let gradient = bce_gradient(&model, dataset)?;
        let bias = model.feature_dim() - 1;
        for (c, row) in model.weights.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                let mut g = gradient[c][j];
                if config.l2 > 0.0 && j != bias {
                    g += config.l2 * *w;
                }
                *w -= config.learning_rate * g;
            }
        }
        let loss = objective(&model)?;
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

    Ok(TrainedClassifier {
        model,
        loss_history,
        diverged,
    })
}

/// Scores one input: per-category probabilities plus the binary verdict.
/// Unsafe requires some category to strictly exceed its threshold.
pub fn classify(model: &MultiLabelClassifier, features: &FeatureVector) -> (Vec<f64>, Label) {
    let probabilities = model.probabilities(features);
    let flagged = probabilities
        .iter()
        .enumerate()
        .any(|(c, &p)| p > model.threshold_for(c));
    let verdict = if flagged { Label::Unsafe } else { Label::Safe };
    (probabilities, verdict)
}
