//! # guardgame
//!
//! A desk-scale simulator for the two-player guardrail game: an adversarial
//! generator proposes label-preserving variants of seed text while a
//! moderation classifier learns to keep up. The crate has two halves that
//! share one vocabulary:
//!
//! - [`dist`] and [`game`]: the exact tabular game on finite spaces.
//!   Closed-form best responses for both players, Lipschitz/contraction
//!   bounds, fixed-point iteration with linear-rate measurement, and Nash
//!   verification by random unilateral deviation.
//! - [`learners`], [`pipeline`] and [`harness`]: the practical training
//!   loop on synthetic toy corpora. A 12-category multi-label logistic
//!   classifier, a conditional softmax generator trained with DPO on
//!   constructed preference pairs, harm-score filtering, and the iterative
//!   dataset-augmentation loop with per-iteration reports.
//!
//! Everything is deterministic under a single root seed; reports and model
//! files are plain JSON/CSV.
//!
//! Start with the runnable examples (`cargo run --example fixed_point_game`,
//! `cargo run --example adversarial_loop`, ...) or the `guardgame` binary,
//! which exposes the same entry points as subcommands.

pub mod dist;
pub mod error;
pub mod game;
pub mod harness;
pub mod learners;
pub mod pipeline;

pub use error::{Error, Result};
