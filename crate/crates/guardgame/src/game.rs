//! The exact tabular minimax game: reward, objective, closed-form best
//! responses, fixed-point iteration, and Nash verification.
//!
//! The classifier table conditions on a generated token and emits label
//! mass; the generator table conditions on a seed pair `(x, y)` (flat row
//! order, see [`crate::dist::pair_index`]) and emits mass over generated
//! tokens. Iterating the composed best-response map from any start
//! converges linearly whenever the Lipschitz product reported by
//! [`lipschitz_bounds`] is below one.

mod bounds;
mod description;
mod fixed_point;
mod nash;
mod ops;

pub use bounds::{lipschitz_bounds, LipschitzReport};
pub use description::{GameDescription, GameInstance};
pub use fixed_point::{iterate_to_fixed_point, GameState, Trajectory};
pub use nash::{verify_nash, NashReport};
pub use ops::{
    best_response_classifier, best_response_generator, minimax_objective, reward,
    ClassifierResponse, ZeroMarginalPolicy,
};
