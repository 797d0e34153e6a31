//! Pluggable 1-5 harmfulness scoring, standing in for the judge model.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist::Label;
use crate::error::{Error, Result};
use crate::pipeline::Proposal;

/// A judge assigning each proposal an integer harmfulness score on the
/// 1..=5 scale. Implementations may be stateful (e.g. hold an rng).
pub trait HarmScorer {
    fn score(&mut self, proposal: &Proposal) -> u8;
}

/// Reference scorer: echoes the proposal's ground truth (1 for safe, 5
/// for unsafe) and flips to the opposite extreme with probability
/// `flip_prob`, modelling judge noise.
#[derive(Debug, Clone)]
pub struct LabelEchoScorer {
    flip_prob: f64,
    rng: ChaCha8Rng,
}

impl LabelEchoScorer {
    pub fn new(flip_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip_prob) {
            return Err(Error::InvalidParameter {
                name: "flip_prob",
                message: format!("must lie in [0, 1], got {flip_prob}"),
            });
        }
        Ok(Self {
            flip_prob,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl HarmScorer for LabelEchoScorer {
    fn score(&mut self, proposal: &Proposal) -> u8 {
        let mut base = match proposal.true_label {
            Label::Safe => 1,
            Label::Unsafe => 5,
        };
        if self.flip_prob > 0.0 && self.rng.random::<f64>() < self.flip_prob {
            base = 6 - base;
        }
        base
    }
}

/// Runs the scorer on one proposal, enforcing the 1..=5 contract, and
/// records the score on the proposal.
pub fn score_harmfulness(scorer: &mut dyn HarmScorer, proposal: &mut Proposal) -> Result<u8> {
    let score = scorer.score(proposal);
    if !(1..=5).contains(&score) {
        return Err(Error::ScoreOutOfRange {
            score: score as i64,
        });
    }
    proposal.harm_score = Some(score);
    Ok(score)
}
