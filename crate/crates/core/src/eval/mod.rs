//! Prompt rendering, backend scoring and accuracy aggregation.

mod backend;
mod cache;
mod harness;
mod parse;
mod prompt;
mod remote;

pub use backend::{
    rank_choices, Backend, BackendDescriptor, BackendError, Capability, ChoiceRanking,
    ScriptEntry, ScriptedBackend,
};
pub use cache::{CacheKey, CachedResponse, ResponseCache, ScoringMode};
pub use harness::{
    evaluate_dataset, evaluate_task2, gold_index, render_jobs, sentence_pair, EvalOptions,
    EvalOutcome, EvalReport, EvalSummary, Evaluator, PromptJob,
};
pub use parse::{parse_cot_answer, Label};
pub use prompt::{
    render_pair_prompt, render_prompt, PromptMethod, PromptSpec, COT_DEMONSTRATIONS, HEADER, HINT,
    TASK2_HINT,
};
pub use remote::{CompletionsBackend, RetryPolicy};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no answer found in generation: {0:?}")]
    ParseFailure(String),
    #[error("{failed} of {total} backend calls failed (cap {cap:.1}%)", cap = .cap * 100.0)]
    TooManyBackendErrors { failed: usize, total: usize, cap: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("invalid backend manifest: {0}")]
    InvalidManifest(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, EvalError>;
