//! Prompt templates for the zero-shot, hinted, few-shot and chain-of-thought
//! protocols, plus the two subtask prompts.

use super::{EvalError, Result};
use crate::hashing::derive_seed;
use crate::transform::McqRecord;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const HEADER: &str =
    "The following are multiple choice questions (with answers) about common sense.";

pub const HINT: &str = "Note that if there is a negation in the question, we should choose the wrong answer to the original question.";

pub const TASK2_HINT: &str = "Negated sentences are different from original sentences.";

pub const COT_DEMONSTRATIONS: [&str; 3] = [
    "Question: If a cat has a body temp that is below average, it isn't in\n\
A. danger\n\
B. safe ranges\n\
Answer: Let's think step-by-step.\n\
First, let's answer non-negated question: \"If a cat has a body temp that is below average, it is in?\"\n\
For this non-negated question, we have A.\n\
Then, to answer the negated question, take the other answer, which would be B.\n\
So the answer is B.",
    "Question: As the barometer reading goes lower there is not a greater chance of\n\
A. sunshine\n\
B. getting wet\n\
Answer: Let's think step-by-step.\n\
First, let's answer non-negated question: \"As the barometer reading goes lower there is a greater chance of?\"\n\
For this non-negated question, we have B.\n\
Then, to answer the negated question, take the other answer, which would be A.\n\
So the answer is A.",
    "Question: Coral is a type of living organism which cannot be identified in\n\
A. saltwater locations that are open\n\
B. any where with liquid\n\
Answer: Let's think step-by-step.\n\
First, let's answer non-negated question: \"Coral is a type of living organism which can be identified in?\"\n\
For this non-negated question, we have A.\n\
Then, to answer the negated question, take the other answer, which would be B.\n\
So the answer is B.",
];

/// Plain few-shot demonstrations: the chain-of-thought questions with bare answers.
const PLAIN_DEMONSTRATIONS: [&str; 3] = [
    "Question: If a cat has a body temp that is below average, it isn't in\nA. danger\nB. safe ranges\nAnswer: B",
    "Question: As the barometer reading goes lower there is not a greater chance of\nA. sunshine\nB. getting wet\nAnswer: A",
    "Question: Coral is a type of living organism which cannot be identified in\nA. saltwater locations that are open\nB. any where with liquid\nAnswer: B",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMethod {
    #[serde(rename = "zeroshot")]
    ZeroShot,
    #[serde(rename = "hint")]
    ZeroShotHint,
    #[serde(rename = "fewshot")]
    FewShot,
    #[serde(rename = "cot")]
    FewShotCoT,
    #[serde(rename = "task1")]
    Task1Original,
    #[serde(rename = "task2")]
    Task2SameDifferent,
    #[serde(rename = "task2hint")]
    Task2SameDifferentHint,
}

impl PromptMethod {
    pub const ALL: [PromptMethod; 7] = [
        PromptMethod::ZeroShot,
        PromptMethod::ZeroShotHint,
        PromptMethod::FewShot,
        PromptMethod::FewShotCoT,
        PromptMethod::Task1Original,
        PromptMethod::Task2SameDifferent,
        PromptMethod::Task2SameDifferentHint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptMethod::ZeroShot => "zeroshot",
            PromptMethod::ZeroShotHint => "hint",
            PromptMethod::FewShot => "fewshot",
            PromptMethod::FewShotCoT => "cot",
            PromptMethod::Task1Original => "task1",
            PromptMethod::Task2SameDifferent => "task2",
            PromptMethod::Task2SameDifferentHint => "task2hint",
        }
    }

    pub fn is_task2(self) -> bool {
        matches!(
            self,
            PromptMethod::Task2SameDifferent | PromptMethod::Task2SameDifferentHint
        )
    }

    /// Methods answered by generating text rather than ranking labels.
    pub fn generates(self) -> bool {
        self == PromptMethod::FewShotCoT
    }
}

impl fmt::Display for PromptMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptMethod {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        PromptMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| EvalError::InvalidSpec(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub method: PromptMethod,
    /// First paragraph of the prompt; empty for the plain same/different prompt.
    pub header: String,
    /// Worked examples placed between the header and the question.
    pub demonstrations: Vec<String>,
    /// Sentence appended to the header.
    pub hint: Option<String>,
}

impl PromptSpec {
    /// Default spec for `method` with the stock demonstrations.
    pub fn for_method(method: PromptMethod) -> Self {
        let (header, demonstrations, hint) = match method {
            PromptMethod::ZeroShot | PromptMethod::Task1Original => (HEADER, vec![], None),
            PromptMethod::ZeroShotHint => (HEADER, vec![], Some(HINT)),
            PromptMethod::FewShot => (HEADER, PLAIN_DEMONSTRATIONS.to_vec(), None),
            PromptMethod::FewShotCoT => (HEADER, COT_DEMONSTRATIONS.to_vec(), None),
            PromptMethod::Task2SameDifferent => ("", vec![], None),
            PromptMethod::Task2SameDifferentHint => (TASK2_HINT, vec![], None),
        };
        PromptSpec {
            method,
            header: header.to_string(),
            demonstrations: demonstrations.into_iter().map(str::to_string).collect(),
            hint: hint.map(str::to_string),
        }
    }

    /// Few-shot spec with `k` demonstrations drawn from `pool` by a seeded
    /// ranking of record ids.
    pub fn few_shot_from_pool(pool: &[McqRecord], k: usize, seed: u64) -> Result<Self> {
        if pool.len() < k || k == 0 {
            return Err(EvalError::InvalidSpec(format!(
                "need {k} demonstrations, pool has {}",
                pool.len()
            )));
        }
        let mut ranked: Vec<_> = pool.iter().map(|r| (derive_seed(seed, &r.id), r)).collect();
        ranked.sort_by_key(|(h, r)| (*h, r.id.clone()));
        let demonstrations = ranked
            .into_iter()
            .take(k)
            .map(|(_, r)| {
                format!(
                    "{} {}",
                    question_block(&r.question, &r.choices),
                    if r.answer_index == 0 { "A" } else { "B" }
                )
            })
            .collect();
        Ok(PromptSpec {
            demonstrations,
            ..PromptSpec::for_method(PromptMethod::FewShot)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EvalError::InvalidSpec(format!("{}: {m}", self.method)));
        match self.method {
            PromptMethod::FewShotCoT | PromptMethod::FewShot if self.demonstrations.is_empty() => {
                bad("needs at least one demonstration")
            }
            PromptMethod::ZeroShot
            | PromptMethod::ZeroShotHint
            | PromptMethod::Task1Original
            | PromptMethod::Task2SameDifferent
            | PromptMethod::Task2SameDifferentHint
                if !self.demonstrations.is_empty() =>
            {
                bad("takes no demonstrations")
            }
            PromptMethod::ZeroShotHint if self.hint.is_none() => bad("needs a hint"),
            _ => Ok(()),
        }
    }

    fn header_text(&self) -> String {
        match &self.hint {
            Some(hint) if !self.header.is_empty() => format!("{} {hint}", self.header),
            Some(hint) => hint.clone(),
            None => self.header.clone(),
        }
    }

    fn preamble(&self) -> String {
        let mut out = String::new();
        let header = self.header_text();
        if !header.is_empty() {
            out.push_str(&header);
            out.push_str("\n\n");
        }
        for demo in &self.demonstrations {
            out.push_str(demo);
            out.push_str("\n\n");
        }
        out
    }
}

fn question_block(question: &str, choices: &[String; 2]) -> String {
    format!("Question: {question}\nA. {}\nB. {}\nAnswer:", choices[0], choices[1])
}

/// Exact prompt text for one question.
///
/// Task-1 prompts ask the original question; same/different prompts compare
/// the original and negated questions with "the same" as option A.
pub fn render_prompt(mcq: &McqRecord, spec: &PromptSpec) -> String {
    match spec.method {
        PromptMethod::Task1Original => {
            format!("{}{}", spec.preamble(), question_block(&mcq.original_question, &mcq.choices))
        }
        PromptMethod::Task2SameDifferent | PromptMethod::Task2SameDifferentHint => {
            render_pair_prompt(&mcq.original_question, &mcq.question, spec, false)
        }
        _ => format!("{}{}", spec.preamble(), question_block(&mcq.question, &mcq.choices)),
    }
}

/// Same/different prompt for a sentence pair. With `swapped` the options read
/// "A. different / B. the same".
pub fn render_pair_prompt(original: &str, negated: &str, spec: &PromptSpec, swapped: bool) -> String {
    let (a, b) = if swapped {
        ("different", "the same")
    } else {
        ("the same", "different")
    };
    format!(
        "{}Sentence 1: \"{original}\"\nSentence 2: \"{negated}\"\nQuestion: The above two sentences are?\nA. {a}\nB. {b}\nAnswer:",
        spec.preamble()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{NegationType, Source};

    fn child() -> McqRecord {
        McqRecord {
            id: "c".into(),
            question: "Child does not want?".into(),
            choices: ["love".into(), "marriage".into()],
            answer_index: 1,
            source: Source::ConceptNet,
            negation_type: NegationType::LamaNative,
            original_question: "Child wants?".into(),
            original_answer: "love".into(),
            negation_form: None,
        }
    }

    #[test]
    fn zero_shot_bytes() {
        assert_eq!(
            render_prompt(&child(), &PromptSpec::for_method(PromptMethod::ZeroShot)),
            "The following are multiple choice questions (with answers) about common sense.\n\nQuestion: Child does not want?\nA. love\nB. marriage\nAnswer:"
        );
    }

    #[test]
    fn hint_bytes() {
        assert_eq!(
            render_prompt(&child(), &PromptSpec::for_method(PromptMethod::ZeroShotHint)),
            "The following are multiple choice questions (with answers) about common sense. Note that if there is a negation in the question, we should choose the wrong answer to the original question.\n\nQuestion: Child does not want?\nA. love\nB. marriage\nAnswer:"
        );
    }

    #[test]
    fn cot_layout() {
        let p = render_prompt(&child(), &PromptSpec::for_method(PromptMethod::FewShotCoT));
        assert!(p.starts_with(&format!("{HEADER}\n\nQuestion: If a cat")));
        assert!(p.contains("So the answer is B.\n\nQuestion: As the barometer"));
        assert!(p.contains("So the answer is B.\n\nQuestion: Child does not want?\nA. love\nB. marriage\nAnswer:"));
        assert!(p.ends_with("Answer:"));
    }

    #[test]
    fn task1_uses_original_question() {
        assert_eq!(
            render_prompt(&child(), &PromptSpec::for_method(PromptMethod::Task1Original)),
            format!("{HEADER}\n\nQuestion: Child wants?\nA. love\nB. marriage\nAnswer:")
        );
    }

    #[test]
    fn task2_templates() {
        let weak = PromptSpec::for_method(PromptMethod::Task2SameDifferent);
        assert_eq!(
            render_pair_prompt("Child wants love.", "Child does not want love.", &weak, false),
            "Sentence 1: \"Child wants love.\"\nSentence 2: \"Child does not want love.\"\nQuestion: The above two sentences are?\nA. the same\nB. different\nAnswer:"
        );
        let strong = PromptSpec::for_method(PromptMethod::Task2SameDifferentHint);
        assert_eq!(
            render_pair_prompt("Child wants love.", "Child does not want love.", &strong, true),
            "Negated sentences are different from original sentences.\n\nSentence 1: \"Child wants love.\"\nSentence 2: \"Child does not want love.\"\nQuestion: The above two sentences are?\nA. different\nB. the same\nAnswer:"
        );
    }

    #[test]
    fn validation() {
        for m in PromptMethod::ALL {
            PromptSpec::for_method(m).validate().unwrap();
        }
        let mut cot = PromptSpec::for_method(PromptMethod::FewShotCoT);
        cot.demonstrations.clear();
        assert!(cot.validate().is_err());
        let mut zs = PromptSpec::for_method(PromptMethod::ZeroShot);
        zs.demonstrations.push("x".into());
        assert!(zs.validate().is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in PromptMethod::ALL {
            assert_eq!(m.name().parse::<PromptMethod>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("bogus".parse::<PromptMethod>().is_err());
    }

    #[test]
    fn pool_demonstrations_are_seeded() {
        let pool: Vec<_> = (0..10)
            .map(|i| McqRecord { id: format!("p{i}"), ..child() })
            .collect();
        let a = PromptSpec::few_shot_from_pool(&pool, 3, 1).unwrap();
        assert_eq!(a, PromptSpec::few_shot_from_pool(&pool, 3, 1).unwrap());
        assert_eq!(a.demonstrations.len(), 3);
        assert!(a.demonstrations[0].ends_with("Answer: B"));
        assert!(PromptSpec::few_shot_from_pool(&pool, 11, 1).is_err());
    }
}
