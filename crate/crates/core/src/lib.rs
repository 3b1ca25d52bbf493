//! Negated multiple-choice QA tooling.
//!
//! The crate has three parts:
//!
//! * [`transform`] builds two-choice negated question datasets from LAMA-style
//!   and OBQA-style sources, balances labels and negation surface forms, and
//!   generates a synthetic negated-sentiment corpus.
//! * [`eval`] renders prompts, scores questions against pluggable model
//!   backends (scripted or remote), parses chain-of-thought answers and turns
//!   outcomes into accuracies.
//! * [`analysis`] classifies scaling curves (positive, inverse, U-shaped,
//!   flat), fits linear and sigmoid subtask models and composes subtask curves
//!   into a predicted curve for the negated task.

pub mod analysis;
pub mod eval;
pub mod hashing;
pub mod transform;
