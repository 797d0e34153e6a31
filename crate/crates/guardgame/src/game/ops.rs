//! Reward, objective, and the two closed-form best responses.

use crate::dist::{kl_divergence, pair_index, ConditionalTable, Label, ProbVector, SeedJoint};
use crate::error::{Error, Result};
use crate::game::GameState;

/// Adversarial reward for a generated token: the negative log-likelihood
/// the classifier assigns to the true label. Zero for a perfectly
/// confident correct classifier, larger the less mass the true label gets.
pub fn reward(classifier: &ConditionalTable, label: Label, x_tilde: usize) -> Result<f64> {
    if x_tilde >= classifier.num_rows() {
        return Err(Error::ShapeMismatch(format!(
            "reward: outcome {x_tilde} outside classifier with {} rows",
            classifier.num_rows()
        )));
    }
    let p = classifier.prob(x_tilde, label.index());
    if p <= 0.0 {
        return Err(Error::InfiniteReward { x_tilde, label });
    }
    Ok(-p.ln())
}

/// The saddle objective: expected adversarial reward under the generator
/// minus `beta` times the KL penalty to the reference, averaged over the
/// seed joint. The generator ascends it, the classifier descends it.
pub fn minimax_objective(
    state: &GameState,
    rho: &SeedJoint,
    p_ref: &ConditionalTable,
    beta: f64,
) -> Result<f64> {
    state.check_shapes(rho, p_ref)?;
    let mut value = 0.0;
    for x in 0..rho.x_size() {
        for label in Label::ALL {
            let w = rho.weight(x, label);
            if w == 0.0 {
                continue;
            }
            let row = pair_index(x, label);
            let gen_row = state.generator.row(row);
            let mut expected_reward = 0.0;
            for xt in 0..gen_row.len() {
                let mass = gen_row.get(xt);
                if mass == 0.0 {
                    continue;
                }
                expected_reward += mass * reward(&state.classifier, label, xt)?;
            }
            let kl = kl_divergence(gen_row, p_ref.row(row))?;
            value += w * (expected_reward - beta * kl);
        }
    }
    Ok(value)
}

/// KL-regularized best response of the generator: each reference row is
/// exponentially tilted by the reward, `T(xt | x, y) ∝ ref(xt | x, y) *
/// p_cls(y | xt)^(-1/beta)`, then normalized.
///
/// Rows the reference rules out stay ruled out; a zero-mass classifier
/// entry under positive reference mass makes the tilt infinite and is
/// rejected (the gamma floor prevents this in regularized runs).
pub fn best_response_generator(
    classifier: &ConditionalTable,
    p_ref: &ConditionalTable,
    beta: f64,
) -> Result<ConditionalTable> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            message: format!("must be positive, got {beta}"),
        });
    }
    if p_ref.num_outcomes() != classifier.num_rows() {
        return Err(Error::ShapeMismatch(format!(
            "reference emits {} outcomes but the classifier conditions on {}",
            p_ref.num_outcomes(),
            classifier.num_rows()
        )));
    }
    let mut rows = Vec::with_capacity(p_ref.num_rows());
    for row_idx in 0..p_ref.num_rows() {
        let label = Label::from_index(row_idx % Label::COUNT)?;
        let ref_row = p_ref.row(row_idx);
        let mut weights = vec![0.0; ref_row.len()];
        for xt in 0..ref_row.len() {
            let ref_mass = ref_row.get(xt);
            if ref_mass == 0.0 {
                continue;
            }
            let r = reward(classifier, label, xt)?;
            weights[xt] = ref_mass * (r / beta).exp();
        }
        let normalizer: f64 = weights.iter().sum();
        if !normalizer.is_finite() || normalizer <= 0.0 {
            return Err(Error::DegenerateReference {
                row: row_idx,
                normalizer,
            });
        }
        rows.push(ProbVector::new(
            weights.into_iter().map(|w| w / normalizer).collect(),
        )?);
    }
    ConditionalTable::from_rows(rows)
}

/// What to do with a generated token no seed pair can reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroMarginalPolicy {
    /// Fail with [`Error::ZeroMarginal`].
    Error,
    /// Emit a uniform label row and flag the outcome index. Lets
    /// experiments probe near-degenerate marginals without crashing.
    #[default]
    UniformRow,
}

/// Best-response classifier plus the outcomes that needed the fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierResponse {
    pub table: ConditionalTable,
    /// Outcomes with zero marginal mass that received a uniform row.
    pub zero_marginal_rows: Vec<usize>,
}

/// Bayes-posterior best response of the classifier: for each generated
/// token, the label posterior under the joint `rho x generator`,
/// `T(y | xt) = sum_x rho(x,y) gen(xt | x,y) / sum_{x,y'} rho(x,y') gen(xt | x,y')`.
pub fn best_response_classifier(
    generator: &ConditionalTable,
    rho: &SeedJoint,
    policy: ZeroMarginalPolicy,
) -> Result<ClassifierResponse> {
    if generator.num_rows() != rho.pair_count() {
        return Err(Error::ShapeMismatch(format!(
            "generator has {} rows but the joint has {} pairs",
            generator.num_rows(),
            rho.pair_count()
        )));
    }
    let x_tilde_size = generator.num_outcomes();
    let mut rows = Vec::with_capacity(x_tilde_size);
    let mut zero_marginal_rows = Vec::new();
    for xt in 0..x_tilde_size {
        let mut joint = [0.0; Label::COUNT];
        for x in 0..rho.x_size() {
            for label in Label::ALL {
                joint[label.index()] +=
                    rho.weight(x, label) * generator.prob(pair_index(x, label), xt);
            }
        }
        let marginal: f64 = joint.iter().sum();
        if marginal <= 0.0 {
            match policy {
                ZeroMarginalPolicy::Error => return Err(Error::ZeroMarginal { x_tilde: xt }),
                ZeroMarginalPolicy::UniformRow => {
                    zero_marginal_rows.push(xt);
                    rows.push(ProbVector::uniform(Label::COUNT));
                }
            }
        } else {
            rows.push(ProbVector::new(joint.iter().map(|j| j / marginal).collect())?);
        }
    }
    Ok(ClassifierResponse {
        table: ConditionalTable::from_rows(rows)?,
        zero_marginal_rows,
    })
}
