use super::{EvalError, Result};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::A => 0,
            Label::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::A
        } else {
            Label::B
        }
    }
}

fn answer_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // "answer is" in any case, optional punctuation/brackets, then a
    // case-sensitive A or B standing alone.
    RE.get_or_init(|| Regex::new(r#"(?i:answer is)[\s:*"'(\[]*([AB])\b"#).unwrap())
}

/// Label from the last "answer is X" in a chain-of-thought generation.
pub fn parse_cot_answer(generation: &str) -> Result<Label> {
    answer_regex()
        .captures_iter(generation)
        .last()
        .map(|c| if &c[1] == "A" { Label::A } else { Label::B })
        .ok_or_else(|| EvalError::ParseFailure(generation.to_string()))
}
