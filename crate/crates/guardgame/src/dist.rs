//! Finite probability spaces: alphabets, stochastic vectors and tables,
//! distances, and the regularity floors that keep the game well-posed.

mod alphabet;
mod prob;
mod regularity;
mod table;

pub use alphabet::{FiniteAlphabet, Label};
pub use prob::{clamp_floor, kl_divergence, ProbVector, MASS_TOLERANCE, RENORMALIZE_WINDOW};
pub use regularity::{validate_regularity, ConditionCheck, RegularityParams, RegularityReport};
pub use table::{l1_distance, pair_index, ConditionalTable, SeedJoint};
