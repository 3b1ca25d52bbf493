//! Lexicon-driven negation rules.
//!
//! Each rule negates the first trigger word found in a stem. Stems that
//! already carry a negation are rejected instead of receiving a second one.

use super::{NegationForm, NegationType, Result, TransformError};
use regex::Regex;
use std::sync::OnceLock;

/// Auxiliary used to negate an inflected action verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Aux {
    Do,
    Does,
    Did,
}

impl Aux {
    fn full(self) -> &'static str {
        match self {
            Aux::Do => "do not",
            Aux::Does => "does not",
            Aux::Did => "did not",
        }
    }

    fn contracted(self) -> &'static str {
        match self {
            Aux::Do => "don't",
            Aux::Does => "doesn't",
            Aux::Did => "didn't",
        }
    }
}

#[derive(Debug, Clone)]
struct VerbForm {
    surface: String,
    base: String,
    aux: Aux,
}

/// Trigger words and their replacements for every rule-based negation type.
#[derive(Debug, Clone)]
pub struct RuleLexicon {
    /// `(verb, contracted form)`
    pub linking_verbs: Vec<(String, String)>,
    /// `(modal, contracted form if one exists)`
    pub modal_verbs: Vec<(String, Option<String>)>,
    /// Base forms; third-person and past forms are derived.
    pub action_verbs: Vec<String>,
    /// `(base, third person singular, past)` for verbs that do not inflect regularly.
    pub irregular_verbs: Vec<(String, String, String)>,
    pub conjunctions: Vec<String>,
    /// `(word, negated word)`
    pub prefixes: Vec<(String, String)>,
    pub negation_prompt: String,
    verb_forms: Vec<VerbForm>,
}

const LINKING: &[(&str, &str)] = &[
    ("is", "isn't"),
    ("are", "aren't"),
    ("was", "wasn't"),
    ("were", "weren't"),
];

const MODALS: &[(&str, Option<&str>)] = &[
    ("can", Some("can't")),
    ("will", Some("won't")),
    ("should", Some("shouldn't")),
    ("may", None),
    ("must", Some("mustn't")),
    ("could", Some("couldn't")),
    ("would", Some("wouldn't")),
    ("might", None),
];

const ACTION: &[&str] = &[
    "absorb", "affect", "allow", "attract", "become", "breathe", "carry", "cause", "come",
    "consume", "contain", "convert", "create", "damage", "decrease", "depend", "dissolve", "eat",
    "evaporate", "find", "fly", "get", "give", "go", "grow", "harm", "help", "hold", "include",
    "increase", "keep", "lead", "live", "make", "mean", "melt", "move", "need", "pollute",
    "prevent", "produce", "protect", "provide", "reflect", "release", "rely", "require", "run",
    "see", "show", "survive", "take", "transfer", "travel", "want",
];

const IRREGULAR: &[(&str, &str, &str)] = &[
    ("become", "becomes", "became"),
    ("come", "comes", "came"),
    ("eat", "eats", "ate"),
    ("find", "finds", "found"),
    ("fly", "flies", "flew"),
    ("get", "gets", "got"),
    ("give", "gives", "gave"),
    ("go", "goes", "went"),
    ("grow", "grows", "grew"),
    ("hold", "holds", "held"),
    ("keep", "keeps", "kept"),
    ("lead", "leads", "led"),
    ("make", "makes", "made"),
    ("mean", "means", "meant"),
    ("run", "runs", "ran"),
    ("see", "sees", "saw"),
    ("take", "takes", "took"),
];

const CONJUNCTIONS: &[&str] = &["because", "since"];

const PREFIXES: &[(&str, &str)] = &[
    ("able", "unable"),
    ("active", "inactive"),
    ("available", "unavailable"),
    ("aware", "unaware"),
    ("certain", "uncertain"),
    ("common", "uncommon"),
    ("complete", "incomplete"),
    ("correct", "incorrect"),
    ("dependent", "independent"),
    ("direct", "indirect"),
    ("effective", "ineffective"),
    ("efficient", "inefficient"),
    ("healthy", "unhealthy"),
    ("known", "unknown"),
    ("legal", "illegal"),
    ("likely", "unlikely"),
    ("natural", "unnatural"),
    ("necessary", "unnecessary"),
    ("possible", "impossible"),
    ("regular", "irregular"),
    ("renewable", "nonrenewable"),
    ("responsible", "irresponsible"),
    ("safe", "unsafe"),
    ("stable", "unstable"),
    ("usual", "unusual"),
    ("visible", "invisible"),
];

/// Words after which a lexicon verb is not a finite verb ("to use", "can cause",
/// "the need").
const VERB_BLOCKERS: &[&str] = &[
    "to", "can", "could", "will", "would", "should", "may", "might", "must", "do", "does", "did",
    "the", "a", "an", "this", "that", "its", "their", "his", "her", "our", "your", "my", "of",
];

const NEGATION_PROMPT: &str = "Choose the wrong answer:";

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z]+(?:'[A-Za-z]+)*").unwrap())
}

fn third_person(base: &str) -> String {
    let bytes = base.as_bytes();
    let n = bytes.len();
    let consonant_y = n >= 2 && bytes[n - 1] == b'y' && !b"aeiou".contains(&bytes[n - 2]);
    if consonant_y {
        format!("{}ies", &base[..n - 1])
    } else if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| base.ends_with(s)) {
        format!("{base}es")
    } else {
        format!("{base}s")
    }
}

fn past(base: &str) -> String {
    let bytes = base.as_bytes();
    let n = bytes.len();
    let consonant_y = n >= 2 && bytes[n - 1] == b'y' && !b"aeiou".contains(&bytes[n - 2]);
    if consonant_y {
        format!("{}ied", &base[..n - 1])
    } else if base.ends_with('e') {
        format!("{base}d")
    } else {
        format!("{base}ed")
    }
}

/// Is there already a negation marker in `text`?
pub fn contains_negation(text: &str) -> bool {
    word_regex().find_iter(text).any(|m| {
        let w = m.as_str().to_lowercase();
        matches!(w.as_str(), "not" | "no" | "never" | "cannot" | "nor") || w.ends_with("n't")
    })
}

fn match_case(template: &str, replacement: &str) -> String {
    let upper = template.chars().next().is_some_and(char::is_uppercase);
    if !upper {
        return replacement.to_string();
    }
    let mut chars = replacement.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Outcome of a rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Negated {
    pub text: String,
    /// `true` when the matched trigger has distinct full and contracted forms.
    pub dual_form: bool,
}

impl Default for RuleLexicon {
    fn default() -> Self {
        RuleLexicon::new(
            LINKING.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            MODALS.iter().map(|(a, b)| (a.to_string(), b.map(str::to_string))).collect(),
            ACTION.iter().map(|s| s.to_string()).collect(),
            IRREGULAR
                .iter()
                .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
                .collect(),
            CONJUNCTIONS.iter().map(|s| s.to_string()).collect(),
            PREFIXES.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            NEGATION_PROMPT.to_string(),
        )
    }
}

impl RuleLexicon {
    pub fn new(
        linking_verbs: Vec<(String, String)>,
        modal_verbs: Vec<(String, Option<String>)>,
        action_verbs: Vec<String>,
        irregular_verbs: Vec<(String, String, String)>,
        conjunctions: Vec<String>,
        prefixes: Vec<(String, String)>,
        negation_prompt: String,
    ) -> Self {
        let mut verb_forms = Vec::new();
        for base in &action_verbs {
            let (third, past_form) = irregular_verbs
                .iter()
                .find(|(b, _, _)| b == base)
                .map(|(_, t, p)| (t.clone(), p.clone()))
                .unwrap_or_else(|| (third_person(base), past(base)));
            for (surface, aux) in [(base.clone(), Aux::Do), (third, Aux::Does), (past_form, Aux::Did)] {
                verb_forms.push(VerbForm {
                    surface,
                    base: base.clone(),
                    aux,
                });
            }
        }
        RuleLexicon {
            linking_verbs,
            modal_verbs,
            action_verbs,
            irregular_verbs,
            conjunctions,
            prefixes,
            negation_prompt,
            verb_forms,
        }
    }

    pub fn shared() -> &'static RuleLexicon {
        static LEXICON: OnceLock<RuleLexicon> = OnceLock::new();
        LEXICON.get_or_init(RuleLexicon::default)
    }

    /// Negates the first trigger of `kind` in `stem`.
    pub fn negate(&self, stem: &str, kind: NegationType, form: NegationForm) -> Result<Negated> {
        if !kind.is_rule() {
            return Err(TransformError::NotARule(kind));
        }
        let no_trigger = || TransformError::NoTriggerFound {
            kind,
            stem: stem.to_string(),
        };
        if stem.trim().is_empty() || contains_negation(stem) {
            return Err(no_trigger());
        }
        if kind == NegationType::NegationPrompt {
            return Ok(Negated {
                text: format!("{} {}", self.negation_prompt, stem.trim_start()),
                dual_form: false,
            });
        }

        let words: Vec<_> = word_regex().find_iter(stem).collect();
        for (i, m) in words.iter().enumerate() {
            let word = m.as_str();
            let lower = word.to_lowercase();
            let replacement: Option<(String, bool)> = match kind {
                NegationType::LinkingVerb => self
                    .linking_verbs
                    .iter()
                    .find(|(v, _)| *v == lower)
                    .map(|(v, c)| match form {
                        NegationForm::Full => (format!("{v} not"), true),
                        NegationForm::Contracted => (c.clone(), true),
                    }),
                NegationType::ModalVerb => {
                    self.modal_verbs
                        .iter()
                        .find(|(v, _)| *v == lower)
                        .map(|(v, c)| match (form, c) {
                            (NegationForm::Contracted, Some(c)) => (c.clone(), true),
                            (_, c) => (format!("{v} not"), c.is_some()),
                        })
                }
                NegationType::ActionVerb => {
                    let blocked = i > 0 && {
                        let prev = words[i - 1].as_str().to_lowercase();
                        VERB_BLOCKERS.contains(&prev.as_str())
                    };
                    if blocked {
                        None
                    } else {
                        self.verb_forms.iter().find(|f| f.surface == lower).map(|f| {
                            let aux = match form {
                                NegationForm::Full => f.aux.full(),
                                NegationForm::Contracted => f.aux.contracted(),
                            };
                            (format!("{aux} {}", f.base), true)
                        })
                    }
                }
                NegationType::Conjunction => self
                    .conjunctions
                    .iter()
                    .find(|c| **c == lower)
                    .map(|c| (format!("not {c}"), false)),
                NegationType::Prefix => self
                    .prefixes
                    .iter()
                    .find(|(w, _)| *w == lower)
                    .map(|(_, neg)| (neg.clone(), false)),
                NegationType::NegationPrompt | NegationType::LamaNative | NegationType::Misprimed => {
                    unreachable!("handled above")
                }
            };
            if let Some((replacement, dual_form)) = replacement {
                let mut text = String::with_capacity(stem.len() + 8);
                text.push_str(&stem[..m.start()]);
                text.push_str(&match_case(word, &replacement));
                text.push_str(&stem[m.end()..]);
                return Ok(Negated { text, dual_form });
            }
        }
        Err(no_trigger())
    }
}

/// Negates `stem` with the built-in lexicon.
pub fn apply_negation_rule(stem: &str, kind: NegationType, form: NegationForm) -> Result<String> {
    RuleLexicon::shared().negate(stem, kind, form).map(|n| n.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use NegationForm::*;
    use NegationType::*;

    #[test]
    fn linking_verb_contracted() {
        assert_eq!(
            apply_negation_rule("Pushing on a pedal is an example of", LinkingVerb, Contracted)
                .unwrap(),
            "Pushing on a pedal isn't an example of"
        );
        assert_eq!(
            apply_negation_rule("Pushing on a pedal is an example of", LinkingVerb, Full).unwrap(),
            "Pushing on a pedal is not an example of"
        );
    }

    #[test]
    fn prefix_rule() {
        assert_eq!(apply_negation_rule("able", Prefix, Full).unwrap(), "unable");
        assert_eq!(
            apply_negation_rule("Rain is likely when", Prefix, Contracted).unwrap(),
            "Rain is unlikely when"
        );
    }

    #[test]
    fn modal_rule() {
        assert_eq!(
            apply_negation_rule("it can cause rain because heat rises", ModalVerb, Full).unwrap(),
            "it can not cause rain because heat rises"
        );
        assert_eq!(
            apply_negation_rule("it can cause rain because heat rises", ModalVerb, Contracted)
                .unwrap(),
            "it can't cause rain because heat rises"
        );
        let may = RuleLexicon::shared().negate("plants may wilt", ModalVerb, Contracted).unwrap();
        assert_eq!(may.text, "plants may not wilt");
        assert!(!may.dual_form);
    }

    #[test]
    fn action_verb_inflections() {
        assert_eq!(
            apply_negation_rule("Friction causes heat", ActionVerb, Full).unwrap(),
            "Friction does not cause heat"
        );
        assert_eq!(
            apply_negation_rule("Plants need sunlight to grow", ActionVerb, Contracted).unwrap(),
            "Plants don't need sunlight to grow"
        );
        assert_eq!(
            apply_negation_rule("The ice melted because", ActionVerb, Full).unwrap(),
            "The ice did not melt because"
        );
        assert_eq!(
            apply_negation_rule("Birds flew south", ActionVerb, Contracted).unwrap(),
            "Birds didn't fly south"
        );
        // "to use" is not a finite verb; "produces" is.
        assert_eq!(
            apply_negation_rule("to use energy a plant produces sugar", ActionVerb, Full).unwrap(),
            "to use energy a plant does not produce sugar"
        );
    }

    #[test]
    fn conjunction_rule() {
        assert_eq!(
            apply_negation_rule("Worms are decomposers because", Conjunction, Full).unwrap(),
            "Worms are decomposers not because"
        );
    }

    #[test]
    fn first_trigger_wins_and_case_is_kept() {
        assert_eq!(
            apply_negation_rule("Is the sun a star or is it a planet", LinkingVerb, Contracted)
                .unwrap(),
            "Isn't the sun a star or is it a planet"
        );
    }

    #[test]
    fn negation_prompt_wraps_stem() {
        let out = apply_negation_rule("The sun is a", NegationPrompt, Full).unwrap();
        assert_eq!(out, "Choose the wrong answer: The sun is a");
    }

    #[test]
    fn missing_trigger_is_an_error() {
        let err = apply_negation_rule("Photosynthesis happens in", LinkingVerb, Full).unwrap_err();
        assert!(matches!(err, TransformError::NoTriggerFound { .. }));
        assert!(matches!(
            apply_negation_rule("", NegationPrompt, Full),
            Err(TransformError::NoTriggerFound { .. })
        ));
    }

    #[test]
    fn already_negated_stems_are_rejected() {
        for stem in ["The sun is not a", "It isn't a", "Birds cannot", "It never is"] {
            assert!(
                matches!(
                    apply_negation_rule(stem, LinkingVerb, Full),
                    Err(TransformError::NoTriggerFound { .. })
                ),
                "{stem}"
            );
        }
    }

    #[test]
    fn native_kinds_are_not_rules() {
        assert!(matches!(
            apply_negation_rule("x is", LamaNative, Full),
            Err(TransformError::NotARule(LamaNative))
        ));
    }

    #[test]
    fn inflection_helpers() {
        assert_eq!(third_person("carry"), "carries");
        assert_eq!(third_person("reach"), "reaches");
        assert_eq!(third_person("play"), "plays");
        assert_eq!(past("carry"), "carried");
        assert_eq!(past("cause"), "caused");
        assert_eq!(past("absorb"), "absorbed");
    }
}
