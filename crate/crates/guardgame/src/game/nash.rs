//! Nash verification by fixed-point displacement and random unilateral
//! deviations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{clamp_floor, ConditionalTable, ProbVector, RegularityParams, SeedJoint};
use crate::error::Result;
use crate::game::ops::{
    best_response_classifier, best_response_generator, minimax_objective, ZeroMarginalPolicy,
};
use crate::game::GameState;

/// Outcome of [`verify_nash`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    /// L1 displacement of the classifier under its (floored) best response.
    pub classifier_fixed_point_gap: f64,
    /// L1 displacement of the generator under its best response.
    pub generator_fixed_point_gap: f64,
    /// Largest objective increase any sampled generator deviation achieved.
    pub max_generator_gain: f64,
    /// Largest objective decrease any sampled classifier deviation achieved.
    pub max_classifier_gain: f64,
    pub num_perturbations: usize,
    pub eps: f64,
    pub fixed_point_ok: bool,
    pub no_profitable_deviation: bool,
    pub passed: bool,
}

/// Checks that `state` is an `eps`-equilibrium: (i) both best responses
/// move the state by less than `eps` in L1; (ii) across
/// `num_perturbations` random feasible unilateral deviations per player,
/// the deviating player never improves the objective by more than `eps`.
/// The classifier's deviations respect the gamma floor.
pub fn verify_nash(
    state: &GameState,
    rho: &SeedJoint,
    p_ref: &ConditionalTable,
    params: &RegularityParams,
    num_perturbations: usize,
    eps: f64,
    seed: u64,
) -> Result<NashReport> {
    state.check_shapes(rho, p_ref)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let classifier_response =
        best_response_classifier(&state.generator, rho, ZeroMarginalPolicy::UniformRow)?
            .table
            .clamp_rows(params.gamma)?;
    let classifier_fixed_point_gap =
        crate::dist::l1_distance(&classifier_response, &state.classifier)?;
    let generator_response = best_response_generator(&state.classifier, p_ref, params.beta)?;
    let generator_fixed_point_gap =
        crate::dist::l1_distance(&generator_response, &state.generator)?;

    let base = minimax_objective(state, rho, p_ref, params.beta)?;
    let mut max_generator_gain = 0.0_f64;
    let mut max_classifier_gain = 0.0_f64;
    for _ in 0..num_perturbations {
        let deviated_generator = perturb_table(&state.generator, None, &mut rng)?;
        let value = minimax_objective(
            &GameState {
                classifier: state.classifier.clone(),
                generator: deviated_generator,
            },
            rho,
            p_ref,
            params.beta,
        )?;
        max_generator_gain = max_generator_gain.max(value - base);

        let deviated_classifier = perturb_table(&state.classifier, Some(params.gamma), &mut rng)?;
        let value = minimax_objective(
            &GameState {
                classifier: deviated_classifier,
                generator: state.generator.clone(),
            },
            rho,
            p_ref,
            params.beta,
        )?;
        max_classifier_gain = max_classifier_gain.max(base - value);
    }

    let fixed_point_ok = classifier_fixed_point_gap < eps && generator_fixed_point_gap < eps;
    let no_profitable_deviation = max_generator_gain <= eps && max_classifier_gain <= eps;
    Ok(NashReport {
        classifier_fixed_point_gap,
        generator_fixed_point_gap,
        max_generator_gain,
        max_classifier_gain,
        num_perturbations,
        eps,
        fixed_point_ok,
        no_profitable_deviation,
        passed: fixed_point_ok && no_profitable_deviation,
    })
}

/// Mixes every row toward an independent random point of the (floored)
/// simplex by a random amount. Stays feasible because the feasible set is
/// convex.
fn perturb_table(
    table: &ConditionalTable,
    floor: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<ConditionalTable> {
    let lambda: f64 = rng.random::<f64>();
    let mut rows = Vec::with_capacity(table.num_rows());
    for row in table.rows() {
        let mut target = random_simplex_point(row.len(), rng)?;
        if let Some(floor) = floor {
            target = clamp_floor(&target, floor)?;
        }
        let mixed: Vec<f64> = row
            .iter()
            .zip(target.iter())
            .map(|(&a, &b)| (1.0 - lambda) * a + lambda * b)
            .collect();
        rows.push(ProbVector::new(mixed)?);
    }
    ConditionalTable::from_rows(rows)
}

fn random_simplex_point(size: usize, rng: &mut ChaCha8Rng) -> Result<ProbVector> {
    // normalized unit exponentials give a uniform Dirichlet draw
    let draws: Vec<f64> = (0..size)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = draws.iter().sum();
    ProbVector::new(draws.into_iter().map(|d| d / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixed_point::iterate_to_fixed_point;

    fn instance() -> (SeedJoint, ConditionalTable, RegularityParams) {
        let rho = SeedJoint::with_uniform_x_marginal(&[0.35, 0.65]).unwrap();
        let p_ref = ConditionalTable::new(vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.5, 0.3],
            vec![0.3, 0.4, 0.3],
            vec![0.4, 0.2, 0.4],
        ])
        .unwrap();
        let params = RegularityParams::new(800.0, 0.01, 1.0, 0.05).unwrap();
        (rho, p_ref, params)
    }

    #[test]
    fn converged_state_passes() {
        let (rho, p_ref, params) = instance();
        let run = iterate_to_fixed_point(
            GameState::uniform(2, 3).unwrap(),
            &rho,
            &p_ref,
            &params,
            1e-12,
            10_000,
        )
        .unwrap();
        assert!(run.converged);
        let report = verify_nash(
            run.final_state(),
            &rho,
            &p_ref,
            &params,
            200,
            1e-6,
            7,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn displaced_state_fails_fixed_point_check() {
        let (rho, p_ref, params) = instance();
        // uniform classifier with the reference generator is displaced on
        // an asymmetric instance: the Bayes response moves it
        let state = GameState {
            classifier: ConditionalTable::uniform(3, 2).unwrap(),
            generator: p_ref.clone(),
        };
        let report = verify_nash(&state, &rho, &p_ref, &params, 50, 1e-6, 11).unwrap();
        assert!(!report.fixed_point_ok);
        assert!(report.classifier_fixed_point_gap > 1e-3);
        assert!(!report.passed);
    }
}
