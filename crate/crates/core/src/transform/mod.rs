//! Construction of negated two-choice QA datasets.

mod balance;
mod build;
mod corpus;
mod dataset;
mod rules;
mod select;

pub use balance::{balance_labels, balance_negation_forms};
pub use build::{
    build_mcq_from_lama, build_mcq_from_obqa, extract_misprime, misprime_variant,
    obqa_mcq_with_distractor,
};
pub use corpus::{gen_sentiment_corpus, CorpusGenConfig, Sentiment};
pub use dataset::{
    generate_lama_dataset, generate_obqa_dataset, read_jsonl, write_jsonl, GenerateOptions,
    GenerateStats, OBQA_RULE_TYPES,
};
pub use rules::{apply_negation_rule, contains_negation, RuleLexicon};
pub use select::select_positive_subset;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("misprimed question has no '?' separator: {0:?}")]
    NoSeparator(String),
    #[error("choices are identical after case-folding: {0:?}")]
    DegenerateChoices(String),
    #[error("no {kind} trigger found in {stem:?}")]
    NoTriggerFound { kind: NegationType, stem: String },
    #[error("negation type {0} is not a rule-based transformation")]
    NotARule(NegationType),
    #[error("invalid source record: {0}")]
    InvalidRecord(String),
    #[error("only {available} records qualify, {requested} requested")]
    InsufficientPositive { available: usize, requested: usize },
    #[error("only {available} questions could be negated with {kind}, {requested} requested")]
    InsufficientRecords {
        kind: NegationType,
        available: usize,
        requested: usize,
    },
    #[error("no scaling curve for record {0}")]
    MissingCurve(String),
    #[error("negation ratio must lie in [0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for TransformError {
    fn from(e: std::io::Error) -> Self {
        TransformError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TransformError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LamaSubset {
    ConceptNet,
    GoogleRE,
    SQuAD,
    TREx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    ConceptNet,
    GoogleRE,
    SQuAD,
    TREx,
    OBQA,
}

impl From<LamaSubset> for Source {
    fn from(s: LamaSubset) -> Self {
        match s {
            LamaSubset::ConceptNet => Source::ConceptNet,
            LamaSubset::GoogleRE => Source::GoogleRE,
            LamaSubset::SQuAD => Source::SQuAD,
            LamaSubset::TREx => Source::TREx,
        }
    }
}

/// How a question was negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NegationType {
    /// "cause" -> "does not cause"
    ActionVerb,
    /// "is" -> "is not"
    LinkingVerb,
    /// "can" -> "can not"
    ModalVerb,
    /// "because" -> "not because"
    Conjunction,
    /// "able" -> "unable"
    Prefix,
    /// Stem kept, instruction to pick the wrong answer added.
    NegationPrompt,
    /// Negated question shipped with a LAMA-style source.
    LamaNative,
    /// Wrong choice prepended to an already negated question.
    Misprimed,
}

impl NegationType {
    pub fn is_rule(self) -> bool {
        !matches!(self, NegationType::LamaNative | NegationType::Misprimed)
    }
}

impl fmt::Display for NegationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Surface realisation of an inserted negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NegationForm {
    /// "is not", "does not", "can not"
    Full,
    /// "isn't", "doesn't", "can't"
    Contracted,
}

impl NegationForm {
    pub fn other(self) -> Self {
        match self {
            NegationForm::Full => NegationForm::Contracted,
            NegationForm::Contracted => NegationForm::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LamaSourceRecord {
    pub original_question: String,
    pub negated_question: String,
    pub answer: String,
    pub misprimed_question: String,
    pub subset: LamaSubset,
    pub file_id: String,
}

impl LamaSourceRecord {
    pub fn validate(&self) -> Result<()> {
        if !self.misprimed_question.contains('?') {
            return Err(TransformError::NoSeparator(self.misprimed_question.clone()));
        }
        if self.negated_question.trim().is_empty() {
            return Err(TransformError::InvalidRecord("empty negated_question".into()));
        }
        if self.answer.trim().is_empty() {
            return Err(TransformError::InvalidRecord("empty answer".into()));
        }
        Ok(())
    }

    pub fn record_id(&self) -> String {
        format!(
            "{:?}/{}/{}",
            self.subset,
            self.file_id,
            &crate::hashing::sha256_hex(&self.negated_question)[..12]
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObqaSourceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub stem: String,
    pub choices: Vec<String>,
    pub answer_index: usize,
}

impl ObqaSourceRecord {
    pub fn validate(&self) -> Result<()> {
        if self.choices.len() != 4 {
            return Err(TransformError::InvalidRecord(format!(
                "expected 4 choices, got {}",
                self.choices.len()
            )));
        }
        if self.answer_index > 3 {
            return Err(TransformError::InvalidRecord(format!(
                "answer_index {} out of range",
                self.answer_index
            )));
        }
        Ok(())
    }

    pub fn record_id(&self) -> String {
        match &self.id {
            Some(id) => id.clone(),
            None => format!("OBQA/{}", &crate::hashing::sha256_hex(&self.stem)[..12]),
        }
    }
}

/// One negated two-choice question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct McqRecord {
    pub id: String,
    pub question: String,
    pub choices: [String; 2],
    pub answer_index: usize,
    pub source: Source,
    pub negation_type: NegationType,
    pub original_question: String,
    pub original_answer: String,
    /// Set only when the rule admits both a full and a contracted form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negation_form: Option<NegationForm>,
}

impl McqRecord {
    pub fn correct_choice(&self) -> &str {
        &self.choices[self.answer_index]
    }

    pub fn distractor(&self) -> &str {
        &self.choices[1 - self.answer_index]
    }

    pub fn validate(&self) -> Result<()> {
        if self.answer_index > 1 {
            return Err(TransformError::InvalidRecord(format!(
                "{}: answer_index {}",
                self.id, self.answer_index
            )));
        }
        if fold(&self.choices[0]) == fold(&self.choices[1]) {
            return Err(TransformError::DegenerateChoices(self.choices[0].clone()));
        }
        if self.question == self.original_question {
            return Err(TransformError::InvalidRecord(format!(
                "{}: question equals original question",
                self.id
            )));
        }
        Ok(())
    }
}

pub(crate) fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}
