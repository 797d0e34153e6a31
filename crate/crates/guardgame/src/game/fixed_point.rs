//! Simultaneous best-response iteration and its trajectory record.

use serde::{Deserialize, Serialize};

use crate::dist::{l1_distance, ConditionalTable, Label, RegularityParams, SeedJoint};
use crate::error::{Error, Result};
use crate::game::ops::{best_response_classifier, best_response_generator, ZeroMarginalPolicy};

/// One joint strategy profile: the classifier and generator tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub classifier: ConditionalTable,
    pub generator: ConditionalTable,
}

impl GameState {
    /// Uniform classifier and uniform generator for the given space sizes.
    pub fn uniform(x_size: usize, x_tilde_size: usize) -> Result<Self> {
        Ok(GameState {
            classifier: ConditionalTable::uniform(x_tilde_size, Label::COUNT)?,
            generator: ConditionalTable::uniform(x_size * Label::COUNT, x_tilde_size)?,
        })
    }

    /// L1 distance between two profiles, summed over both tables.
    pub fn l1_distance(&self, other: &GameState) -> Result<f64> {
        Ok(l1_distance(&self.classifier, &other.classifier)?
            + l1_distance(&self.generator, &other.generator)?)
    }

    pub(crate) fn check_shapes(&self, rho: &SeedJoint, p_ref: &ConditionalTable) -> Result<()> {
        if self.classifier.num_outcomes() != Label::COUNT {
            return Err(Error::ShapeMismatch(format!(
                "classifier rows must have {} label outcomes, got {}",
                Label::COUNT,
                self.classifier.num_outcomes()
            )));
        }
        if self.generator.num_rows() != rho.pair_count() {
            return Err(Error::ShapeMismatch(format!(
                "generator has {} rows but the joint has {} pairs",
                self.generator.num_rows(),
                rho.pair_count()
            )));
        }
        if !self.generator.same_shape(p_ref) {
            return Err(Error::ShapeMismatch(
                "generator and reference tables differ in shape".into(),
            ));
        }
        if self.generator.num_outcomes() != self.classifier.num_rows() {
            return Err(Error::ShapeMismatch(format!(
                "generator emits {} outcomes but the classifier conditions on {}",
                self.generator.num_outcomes(),
                self.classifier.num_rows()
            )));
        }
        Ok(())
    }
}

/// Record of one best-response iteration run.
///
/// `residuals[n]` is the L1 distance from state `n` to the final iterate,
/// the standard empirical stand-in when no analytic fixed point exists.
/// The ratio lists track successive residual ratios along the even and
/// odd subsequences, whose limiting value the contraction product bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<GameState>,
    pub residuals: Vec<f64>,
    pub successive_residuals: Vec<f64>,
    pub even_ratios: Vec<f64>,
    pub odd_ratios: Vec<f64>,
    pub converged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &GameState {
        self.states.last().expect("trajectory holds at least one state")
    }

    pub fn iterations(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_successive_residual(&self) -> f64 {
        self.successive_residuals.last().copied().unwrap_or(0.0)
    }

    /// Ratios from the tail of a subsequence whose denominators are still
    /// numerically meaningful (at least `floor`). Used to read off the
    /// empirical linear rate before residuals dissolve into rounding noise.
    pub fn eventual_ratios(&self, even: bool, floor: f64, count: usize) -> Vec<f64> {
        let residuals = &self.residuals;
        let start = if even { 0 } else { 1 };
        let mut ratios = Vec::new();
        let mut index = start;
        while index + 2 < residuals.len() {
            let denom = residuals[index];
            let numer = residuals[index + 2];
            if denom >= floor {
                ratios.push(numer / denom);
            }
            index += 2;
        }
        let keep = ratios.len().saturating_sub(count);
        ratios.split_off(keep)
    }
}

fn subsequence_ratios(residuals: &[f64], start: usize) -> Vec<f64> {
    let subsequence: Vec<f64> = residuals.iter().skip(start).step_by(2).copied().collect();
    subsequence
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                w[1] / w[0]
            } else if w[1] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Iterates the simultaneous best-response map
/// `(cls, gen) -> (clamp_gamma(T_cls(gen)), T_gen(cls))` until the
/// successive-state L1 distance drops below `tol` or `max_iters` is
/// reached. Running out of iterations yields a trajectory flagged
/// non-converged rather than an error.
pub fn iterate_to_fixed_point(
    initial: GameState,
    rho: &SeedJoint,
    p_ref: &ConditionalTable,
    params: &RegularityParams,
    tol: f64,
    max_iters: usize,
) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            message: format!("must be positive, got {tol}"),
        });
    }
    initial.check_shapes(rho, p_ref)?;

    let mut states = vec![initial];
    let mut successive_residuals = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let prev = states.last().expect("non-empty");
        let response =
            best_response_classifier(&prev.generator, rho, ZeroMarginalPolicy::UniformRow)?;
        let next = GameState {
            classifier: response.table.clamp_rows(params.gamma)?,
            generator: best_response_generator(&prev.classifier, p_ref, params.beta)?,
        };
        let delta = next.l1_distance(prev)?;
        states.push(next);
        successive_residuals.push(delta);
        if delta < tol {
            converged = true;
            break;
        }
    }

    let last = states.last().expect("non-empty").clone();
    let residuals = states
        .iter()
        .map(|s| s.l1_distance(&last))
        .collect::<Result<Vec<_>>>()?;
    let even_ratios = subsequence_ratios(&residuals, 0);
    let odd_ratios = subsequence_ratios(&residuals, 1);

    Ok(Trajectory {
        states,
        residuals,
        successive_residuals,
        even_ratios,
        odd_ratios,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ops::ClassifierResponse;

    fn small_instance() -> (SeedJoint, ConditionalTable, RegularityParams) {
        let rho = SeedJoint::with_uniform_x_marginal(&[0.4, 0.6]).unwrap();
        let p_ref = ConditionalTable::new(vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.5, 0.3],
            vec![0.3, 0.4, 0.3],
            vec![0.4, 0.2, 0.4],
        ])
        .unwrap();
        let params = RegularityParams::new(500.0, 0.01, 1.0, 0.05).unwrap();
        (rho, p_ref, params)
    }

    #[test]
    fn fixed_point_input_converges_in_one_step() {
        let (rho, p_ref, params) = small_instance();
        // run long enough to land on the fixed point, then restart there
        let warm = iterate_to_fixed_point(
            GameState::uniform(2, 3).unwrap(),
            &rho,
            &p_ref,
            &params,
            1e-13,
            10_000,
        )
        .unwrap();
        assert!(warm.converged);
        let restart = iterate_to_fixed_point(
            warm.final_state().clone(),
            &rho,
            &p_ref,
            &params,
            1e-9,
            10,
        )
        .unwrap();
        assert!(restart.converged);
        assert_eq!(restart.iterations(), 1);
        assert!(restart.final_successive_residual() < 1e-9);
    }

    #[test]
    fn non_converged_run_is_flagged_not_error() {
        let (rho, p_ref, params) = small_instance();
        let out = iterate_to_fixed_point(
            GameState::uniform(2, 3).unwrap(),
            &rho,
            &p_ref,
            &params,
            1e-30,
            3,
        )
        .unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations(), 3);
    }

    #[test]
    fn residuals_measure_distance_to_final() {
        let (rho, p_ref, params) = small_instance();
        let out = iterate_to_fixed_point(
            GameState::uniform(2, 3).unwrap(),
            &rho,
            &p_ref,
            &params,
            1e-11,
            10_000,
        )
        .unwrap();
        assert_eq!(out.residuals.len(), out.states.len());
        assert_eq!(*out.residuals.last().unwrap(), 0.0);
        let check = out.states[0].l1_distance(out.final_state()).unwrap();
        assert_eq!(out.residuals[0], check);
        // ratio lists cover each subsequence fully
        let even_len = (out.residuals.len() + 1) / 2;
        let odd_len = out.residuals.len() / 2;
        assert_eq!(out.even_ratios.len(), even_len - 1);
        assert_eq!(out.odd_ratios.len(), odd_len.saturating_sub(1));
    }

    #[test]
    fn classifier_stays_above_gamma_floor() {
        let (rho, p_ref, _) = small_instance();
        let params = RegularityParams::new(2.0, 0.2, 0.5, 0.05).unwrap();
        let out = iterate_to_fixed_point(
            GameState::uniform(2, 3).unwrap(),
            &rho,
            &p_ref,
            &params,
            1e-10,
            5_000,
        )
        .unwrap();
        for state in &out.states[1..] {
            for row in state.classifier.rows() {
                for &v in row.iter() {
                    assert!(v >= params.gamma - 1e-12);
                }
            }
        }
    }

    #[test]
    fn update_is_simultaneous() {
        // one step by hand: classifier responds to the OLD generator and
        // the generator responds to the OLD classifier
        let (rho, p_ref, params) = small_instance();
        let start = GameState {
            classifier: ConditionalTable::new(vec![
                vec![0.3, 0.7],
                vec![0.6, 0.4],
                vec![0.5, 0.5],
            ])
            .unwrap(),
            generator: p_ref.clone(),
        };
        let out =
            iterate_to_fixed_point(start.clone(), &rho, &p_ref, &params, 1e-12, 1).unwrap();
        let ClassifierResponse { table, .. } =
            best_response_classifier(&start.generator, &rho, ZeroMarginalPolicy::UniformRow)
                .unwrap();
        let expected_classifier = table.clamp_rows(params.gamma).unwrap();
        let expected_generator =
            best_response_generator(&start.classifier, &p_ref, params.beta).unwrap();
        assert_eq!(out.states[1].classifier, expected_classifier);
        assert_eq!(out.states[1].generator, expected_generator);
    }
}
