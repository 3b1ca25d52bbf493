use super::{EvalError, Result};
use crate::hashing::sha256_hex;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Capability {
    RankChoices,
    Generate,
    Both,
}

impl Capability {
    pub fn can_rank(self) -> bool {
        matches!(self, Capability::RankChoices | Capability::Both)
    }

    pub fn can_generate(self) -> bool {
        matches!(self, Capability::Generate | Capability::Both)
    }
}

/// One model entry in a backend manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub family: String,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_count: Option<u64>,
    /// Position within the family, smallest model first.
    pub scale_rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub capability: Capability,
}

impl BackendDescriptor {
    /// Checks that `scale_rank` strictly increases within each family, in
    /// manifest order.
    pub fn validate_manifest(entries: &[BackendDescriptor]) -> Result<()> {
        let mut last: HashMap<&str, u32> = HashMap::new();
        let mut names = std::collections::HashSet::new();
        for e in entries {
            if !names.insert(e.model_name.as_str()) {
                return Err(EvalError::InvalidManifest(format!(
                    "duplicate model_name {:?}",
                    e.model_name
                )));
            }
            if let Some(&prev) = last.get(e.family.as_str()) {
                if e.scale_rank <= prev {
                    return Err(EvalError::InvalidManifest(format!(
                        "{}: scale_rank {} does not increase after {}",
                        e.family, e.scale_rank, prev
                    )));
                }
            }
            last.insert(&e.family, e.scale_rank);
        }
        Ok(())
    }

    pub fn load_manifest(path: &Path) -> Result<Vec<BackendDescriptor>> {
        let text = std::fs::read_to_string(path)?;
        let entries: Vec<BackendDescriptor> =
            serde_json::from_str(&text).map_err(|e| EvalError::InvalidManifest(e.to_string()))?;
        BackendDescriptor::validate_manifest(&entries)?;
        Ok(entries)
    }

    pub fn log_params(&self) -> Option<f64> {
        self.param_count.filter(|&p| p > 0).map(|p| (p as f64).log10())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("quota or rate limit after {attempts} attempt(s): {message}")]
    Quota {
        message: String,
        attempts: u32,
        retry_after_secs: Option<u64>,
    },
    #[error("backend cannot score labels: {0}")]
    MissingLogprobs(String),
    #[error("no scripted response for prompt hash {0}")]
    MissingScript(String),
    #[error("backend {model} does not support {operation}")]
    Unsupported { model: String, operation: &'static str },
    #[error("invalid backend response: {0}")]
    InvalidResponse(String),
}

/// A language model that can score the two option labels after a prompt,
/// generate a continuation, or both.
pub trait Backend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Comparable scores (likelihoods or log-likelihoods) for the next token
    /// being each of `labels`.
    fn score_labels(&self, prompt: &str, labels: [&str; 2]) -> std::result::Result<[f64; 2], BackendError>;

    fn generate(&self, prompt: &str, max_tokens: usize) -> std::result::Result<String, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRanking {
    pub scores: [f64; 2],
    pub predicted: usize,
    pub tie: bool,
}

impl ChoiceRanking {
    /// Argmax with exact ties going to the first label. NaN ranks lowest.
    pub fn from_scores(scores: [f64; 2]) -> Self {
        let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
        let (a, b) = (key(scores[0]), key(scores[1]));
        let tie = a == b;
        ChoiceRanking {
            scores,
            predicted: usize::from(b > a),
            tie,
        }
    }
}

/// Scores labels `A`/`B` and picks the higher one.
pub fn rank_choices(backend: &dyn Backend, prompt: &str, labels: [&str; 2]) -> Result<ChoiceRanking> {
    let d = backend.descriptor();
    if !d.capability.can_rank() {
        return Err(BackendError::Unsupported {
            model: d.model_name.clone(),
            operation: "label ranking",
        }
        .into());
    }
    let ranking = ChoiceRanking::from_scores(backend.score_labels(prompt, labels)?);
    if ranking.tie {
        log::debug!("{}: label scores tie, predicting {}", d.model_name, labels[0]);
    }
    Ok(ranking)
}

/// One line of a scripted-backend fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Scores {
        prompt_hash: String,
        #[serde(rename = "score_A")]
        score_a: f64,
        #[serde(rename = "score_B")]
        score_b: f64,
    },
    Generation {
        prompt_hash: String,
        generation: String,
    },
}

impl ScriptEntry {
    pub fn prompt_hash(&self) -> &str {
        match self {
            ScriptEntry::Scores { prompt_hash, .. } | ScriptEntry::Generation { prompt_hash, .. } => {
                prompt_hash
            }
        }
    }

    pub fn scores(prompt: &str, score_a: f64, score_b: f64) -> Self {
        ScriptEntry::Scores {
            prompt_hash: sha256_hex(prompt),
            score_a,
            score_b,
        }
    }

    pub fn generation(prompt: &str, generation: impl Into<String>) -> Self {
        ScriptEntry::Generation {
            prompt_hash: sha256_hex(prompt),
            generation: generation.into(),
        }
    }
}

#[derive(Debug, Default)]
struct Script {
    scores: HashMap<String, [f64; 2]>,
    generations: HashMap<String, String>,
}

/// Replays recorded responses keyed by the SHA-256 of the prompt.
#[derive(Debug)]
pub struct ScriptedBackend {
    descriptor: BackendDescriptor,
    script: Script,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(descriptor: BackendDescriptor, entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let mut script = Script::default();
        for e in entries {
            match e {
                ScriptEntry::Scores {
                    prompt_hash,
                    score_a,
                    score_b,
                } => {
                    script.scores.insert(prompt_hash, [score_a, score_b]);
                }
                ScriptEntry::Generation {
                    prompt_hash,
                    generation,
                } => {
                    script.generations.insert(prompt_hash, generation);
                }
            }
        }
        ScriptedBackend {
            descriptor,
            script,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_path(descriptor: BackendDescriptor, path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let entries: Vec<ScriptEntry> = crate::transform::read_jsonl(file).map_err(|e| match e {
            crate::transform::TransformError::Parse { line, message } => EvalError::Parse { line, message },
            other => EvalError::InvalidManifest(other.to_string()),
        })?;
        Ok(ScriptedBackend::new(descriptor, entries))
    }

    /// Number of score or generate requests served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Backend for ScriptedBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn score_labels(&self, prompt: &str, _labels: [&str; 2]) -> std::result::Result<[f64; 2], BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let hash = sha256_hex(prompt);
        self.script
            .scores
            .get(&hash)
            .copied()
            .ok_or(BackendError::MissingScript(hash))
    }

    fn generate(&self, prompt: &str, _max_tokens: usize) -> std::result::Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let hash = sha256_hex(prompt);
        self.script
            .generations
            .get(&hash)
            .cloned()
            .ok_or(BackendError::MissingScript(hash))
    }
}
