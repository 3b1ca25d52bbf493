use super::backend::{Backend, ChoiceRanking};
use super::cache::{CacheKey, CachedResponse, ResponseCache, ScoringMode};
use super::parse::parse_cot_answer;
use super::prompt::{render_pair_prompt, render_prompt, PromptMethod, PromptSpec};
use super::{BackendError, EvalError, Result};
use crate::hashing::derive_seed;
use crate::transform::McqRecord;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

const LABELS: [&str; 2] = ["A", "B"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Maximum number of in-flight backend requests.
    pub concurrency: usize,
    /// Abort once more than this fraction of records hit backend errors.
    pub max_error_fraction: f64,
    /// Generation budget for chain-of-thought prompts.
    pub max_new_tokens: usize,
    /// Seed for the per-pair label swap in same/different prompts.
    pub task2_seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            concurrency: 4,
            max_error_fraction: 0.05,
            max_new_tokens: 128,
            task2_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub record_id: String,
    /// `None` when the backend failed or the generation had no parsable answer.
    pub predicted_index: Option<usize>,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_label_scores: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_generation: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub parse_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Trailing line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub model: String,
    pub method: PromptMethod,
    pub accuracy: f64,
    pub n: usize,
    pub parse_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n: usize,
    pub correct: usize,
    pub parse_failures: usize,
    pub backend_errors: usize,
    pub ties: usize,
    pub outcomes: Vec<EvalOutcome>,
}

impl EvalReport {
    fn from_outcomes(outcomes: Vec<EvalOutcome>) -> Self {
        let n = outcomes.len();
        let correct = outcomes.iter().filter(|o| o.correct).count();
        EvalReport {
            accuracy: correct as f64 / n as f64,
            n,
            correct,
            parse_failures: outcomes.iter().filter(|o| o.parse_failure).count(),
            backend_errors: outcomes.iter().filter(|o| o.error.is_some()).count(),
            ties: outcomes.iter().filter(|o| o.tie).count(),
            outcomes,
        }
    }

    pub fn summary(&self, model: &str, method: PromptMethod) -> EvalSummary {
        EvalSummary {
            model: model.to_string(),
            method,
            accuracy: self.accuracy,
            n: self.n,
            parse_failures: self.parse_failures,
        }
    }
}

/// Index of the gold choice for `mcq` under `method`. Task-1 asks the
/// original question, whose answer is the other choice.
pub fn gold_index(mcq: &McqRecord, method: PromptMethod) -> usize {
    match method {
        PromptMethod::Task1Original => 1 - mcq.answer_index,
        _ => mcq.answer_index,
    }
}

/// Declarative (original, negated) sentences for the same/different task:
/// the question mark is dropped and the original answer fills the blank,
/// or is appended when the stem has none.
pub fn sentence_pair(mcq: &McqRecord) -> (String, String) {
    let to_sentence = |q: &str| {
        let stem = q.trim().trim_end_matches('?').trim_end();
        let filled = if stem.contains("___") {
            stem.replacen("___", &mcq.original_answer, 1)
        } else {
            format!("{stem} {}", mcq.original_answer)
        };
        format!("{filled}.")
    };
    (to_sentence(&mcq.original_question), to_sentence(&mcq.question))
}

/// Whether the options are shown as "A. different / B. the same" for this
/// pair. Keyed by pair text so the draw does not depend on dataset order.
fn task2_swapped(seed: u64, original: &str, negated: &str) -> bool {
    derive_seed(seed, &format!("{original}\n{negated}")) & 1 == 1
}

/// A rendered prompt and the index of its gold option.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptJob {
    pub record_id: String,
    pub prompt: String,
    pub gold_index: usize,
}

/// Every prompt `evaluate_dataset` would send for `dataset` under `spec`,
/// in dataset order. Same/different methods use [`sentence_pair`] and the
/// seeded label swap.
pub fn render_jobs(dataset: &[McqRecord], spec: &PromptSpec, task2_seed: u64) -> Vec<PromptJob> {
    dataset
        .iter()
        .map(|r| {
            if spec.method.is_task2() {
                let (original, negated) = sentence_pair(r);
                pair_job(r.id.clone(), &original, &negated, spec, task2_seed)
            } else {
                PromptJob {
                    record_id: r.id.clone(),
                    prompt: render_prompt(r, spec),
                    gold_index: gold_index(r, spec.method),
                }
            }
        })
        .collect()
}

fn pair_job(record_id: String, original: &str, negated: &str, spec: &PromptSpec, seed: u64) -> PromptJob {
    let swapped = task2_swapped(seed, original, negated);
    PromptJob {
        record_id,
        prompt: render_pair_prompt(original, negated, spec, swapped),
        // "different" is option B unless swapped.
        gold_index: if swapped { 0 } else { 1 },
    }
}

/// Scores datasets against one backend through a shared response cache.
pub struct Evaluator<'a> {
    backend: &'a dyn Backend,
    cache: &'a ResponseCache,
    opts: EvalOptions,
}

impl<'a> Evaluator<'a> {
    pub fn new(backend: &'a dyn Backend, cache: &'a ResponseCache, opts: EvalOptions) -> Self {
        Evaluator {
            backend,
            cache,
            opts,
        }
    }

    /// Accuracy of the backend on `dataset` under `spec`. Same/different
    /// methods are scored on [`sentence_pair`] of each record.
    pub fn evaluate_dataset(&self, dataset: &[McqRecord], spec: &PromptSpec) -> Result<EvalReport> {
        spec.validate()?;
        if dataset.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        self.run(render_jobs(dataset, spec, self.opts.task2_seed), spec.method)
    }

    /// Same/different accuracy over `(id, original, negated)` triples. The
    /// gold answer is always "different".
    pub fn evaluate_pairs(&self, pairs: &[(String, String, String)], spec: &PromptSpec) -> Result<EvalReport> {
        spec.validate()?;
        if !spec.method.is_task2() {
            return Err(EvalError::InvalidSpec(format!(
                "{} is not a same/different method",
                spec.method
            )));
        }
        if pairs.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        let jobs = pairs
            .iter()
            .map(|(id, original, negated)| pair_job(id.clone(), original, negated, spec, self.opts.task2_seed))
            .collect();
        self.run(jobs, spec.method)
    }

    fn run(&self, jobs: Vec<PromptJob>, method: PromptMethod) -> Result<EvalReport> {
        let n = jobs.len();
        let budget = (self.opts.max_error_fraction * n as f64).floor() as usize;
        let next = AtomicUsize::new(0);
        let errors = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let results: Mutex<Vec<Option<EvalOutcome>>> = Mutex::new(vec![None; n]);
        let workers = self.opts.concurrency.max(1).min(n);

        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let outcome = self.score(&jobs[i], method);
                    if outcome.error.is_some() && errors.fetch_add(1, Ordering::SeqCst) + 1 > budget {
                        abort.store(true, Ordering::SeqCst);
                    }
                    results.lock().unwrap()[i] = Some(outcome);
                });
            }
        });

        let failed = errors.load(Ordering::SeqCst);
        if failed > budget {
            return Err(EvalError::TooManyBackendErrors {
                failed,
                total: n,
                cap: self.opts.max_error_fraction,
            });
        }
        let outcomes = results
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|o| o.expect("every job is scored when not aborted"))
            .collect();
        Ok(EvalReport::from_outcomes(outcomes))
    }

    fn score(&self, job: &PromptJob, method: PromptMethod) -> EvalOutcome {
        let mut outcome = EvalOutcome {
            record_id: job.record_id.clone(),
            predicted_index: None,
            correct: false,
            raw_label_scores: None,
            raw_generation: None,
            tie: false,
            parse_failure: false,
            error: None,
        };
        if method.generates() {
            match self.generation(&job.prompt) {
                Ok(text) => {
                    match parse_cot_answer(&text) {
                        Ok(label) => outcome.predicted_index = Some(label.index()),
                        Err(_) => outcome.parse_failure = true,
                    }
                    outcome.raw_generation = Some(text);
                }
                Err(e) => outcome.error = Some(e.to_string()),
            }
        } else {
            match self.label_scores(&job.prompt) {
                Ok(scores) => {
                    let ranking = ChoiceRanking::from_scores(scores);
                    if ranking.tie {
                        log::debug!("{}: tie on {}, predicting A", self.backend.descriptor().model_name, job.record_id);
                    }
                    outcome.predicted_index = Some(ranking.predicted);
                    outcome.raw_label_scores = Some(scores);
                    outcome.tie = ranking.tie;
                }
                Err(e) => outcome.error = Some(e.to_string()),
            }
        }
        outcome.correct = outcome.predicted_index == Some(job.gold_index);
        if let Some(e) = &outcome.error {
            log::warn!("{}: {}", job.record_id, e);
        }
        outcome
    }

    fn cached(&self, prompt: &str, mode: ScoringMode) -> (CacheKey, Option<CachedResponse>) {
        let key = CacheKey::new(&self.backend.descriptor().model_name, prompt, mode);
        let hit = self.cache.get(&key);
        (key, hit)
    }

    fn store(&self, key: CacheKey, response: CachedResponse) {
        if let Err(e) = self.cache.insert(key, response) {
            log::warn!("response cache write failed: {e}");
        }
    }

    fn label_scores(&self, prompt: &str) -> std::result::Result<[f64; 2], BackendError> {
        let d = self.backend.descriptor();
        if !d.capability.can_rank() {
            return Err(BackendError::Unsupported {
                model: d.model_name.clone(),
                operation: "label ranking",
            });
        }
        let (key, hit) = self.cached(prompt, ScoringMode::RankLabels);
        if let Some(CachedResponse::Scores(s)) = hit {
            return Ok(s);
        }
        let scores = self.backend.score_labels(prompt, LABELS)?;
        self.store(key, CachedResponse::Scores(scores));
        Ok(scores)
    }

    fn generation(&self, prompt: &str) -> std::result::Result<String, BackendError> {
        let d = self.backend.descriptor();
        if !d.capability.can_generate() {
            return Err(BackendError::Unsupported {
                model: d.model_name.clone(),
                operation: "generation",
            });
        }
        let mode = ScoringMode::Generate {
            max_tokens: self.opts.max_new_tokens,
        };
        let (key, hit) = self.cached(prompt, mode);
        if let Some(CachedResponse::Generation(g)) = hit {
            return Ok(g);
        }
        let text = self.backend.generate(prompt, self.opts.max_new_tokens)?;
        self.store(key, CachedResponse::Generation(text.clone()));
        Ok(text)
    }
}

/// Accuracy and per-record outcomes with an in-memory cache.
pub fn evaluate_dataset(
    backend: &dyn Backend,
    dataset: &[McqRecord],
    spec: &PromptSpec,
    concurrency_limit: usize,
) -> Result<(f64, Vec<EvalOutcome>)> {
    let cache = ResponseCache::in_memory();
    let opts = EvalOptions {
        concurrency: concurrency_limit,
        ..EvalOptions::default()
    };
    let report = Evaluator::new(backend, &cache, opts).evaluate_dataset(dataset, spec)?;
    Ok((report.accuracy, report.outcomes))
}

/// Same/different accuracy over `(original, negated)` sentence pairs.
pub fn evaluate_task2(backend: &dyn Backend, pairs: &[(String, String)], spec: &PromptSpec, seed: u64) -> Result<f64> {
    let cache = ResponseCache::in_memory();
    let opts = EvalOptions {
        task2_seed: seed,
        ..EvalOptions::default()
    };
    let triples: Vec<_> = pairs
        .iter()
        .enumerate()
        .map(|(i, (o, n))| (format!("pair-{i}"), o.clone(), n.clone()))
        .collect();
    Ok(Evaluator::new(backend, &cache, opts).evaluate_pairs(&triples, spec)?.accuracy)
}
