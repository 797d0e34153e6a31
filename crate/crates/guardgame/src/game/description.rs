//! JSON description of a game instance, the input format of the
//! `fixed-point` subcommand.

use serde::{Deserialize, Serialize};

use crate::dist::{ConditionalTable, FiniteAlphabet, Label, RegularityParams, SeedJoint};
use crate::error::{Error, Result};
use crate::game::GameState;

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iters() -> usize {
    10_000
}

/// Serialized game instance.
///
/// `rho` is flat in pair order (x-major, labels `(-1, +1)`); generator-side
/// tables list one row per pair in the same order; classifier rows are one
/// per generated token. Omitted initial tables default to the uniform
/// classifier and the reference generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameDescription {
    pub x_alphabet: FiniteAlphabet,
    pub x_tilde_alphabet: FiniteAlphabet,
    pub rho: Vec<f64>,
    pub p_ref: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_classifier: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_generator: Option<Vec<Vec<f64>>>,
    pub params: RegularityParams,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

/// A validated, ready-to-iterate instance.
#[derive(Debug, Clone)]
pub struct GameInstance {
    pub initial: GameState,
    pub rho: SeedJoint,
    pub p_ref: ConditionalTable,
    pub params: RegularityParams,
    pub tol: f64,
    pub max_iters: usize,
}

impl GameDescription {
    pub fn build(&self) -> Result<GameInstance> {
        let x_size = self.x_alphabet.len();
        let x_tilde_size = self.x_tilde_alphabet.len();
        let rho = SeedJoint::new(self.rho.clone(), x_size)?;
        let p_ref = ConditionalTable::new(self.p_ref.clone())?;
        if p_ref.num_rows() != x_size * Label::COUNT {
            return Err(Error::ShapeMismatch(format!(
                "p_ref needs {} rows for {} seeds, got {}",
                x_size * Label::COUNT,
                x_size,
                p_ref.num_rows()
            )));
        }
        if p_ref.num_outcomes() != x_tilde_size {
            return Err(Error::ShapeMismatch(format!(
                "p_ref rows must have {} outcomes, got {}",
                x_tilde_size,
                p_ref.num_outcomes()
            )));
        }
        let classifier = match &self.initial_classifier {
            Some(raw) => ConditionalTable::new(raw.clone())?,
            None => ConditionalTable::uniform(x_tilde_size, Label::COUNT)?,
        };
        let generator = match &self.initial_generator {
            Some(raw) => ConditionalTable::new(raw.clone())?,
            None => p_ref.clone(),
        };
        let initial = GameState {
            classifier,
            generator,
        };
        initial.check_shapes(&rho, &p_ref)?;
        Ok(GameInstance {
            initial,
            rho,
            p_ref,
            params: self.params,
            tol: self.tol,
            max_iters: self.max_iters,
        })
    }
}
