use super::rules::RuleLexicon;
use super::{
    fold, LamaSourceRecord, McqRecord, NegationForm, NegationType, ObqaSourceRecord, Result,
    Source, TransformError,
};
use crate::hashing::rng_for;
use rand::Rng;

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn uppercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Pulls the wrong answer out of a misprimed question ("Marriage? Child wants?").
///
/// The text before the first `?` is returned trimmed. Its first character is
/// lower-cased unless `reference_answer` starts with an upper-case letter, so
/// the misprime matches the casing style of the answer it will sit next to.
pub fn extract_misprime(misprimed_question: &str, reference_answer: Option<&str>) -> Result<String> {
    let (prime, _) = misprimed_question
        .split_once('?')
        .ok_or_else(|| TransformError::NoSeparator(misprimed_question.to_string()))?;
    let prime = prime.trim();
    let keep_case = reference_answer
        .and_then(|a| a.trim().chars().next())
        .is_some_and(char::is_uppercase);
    Ok(if keep_case {
        prime.to_string()
    } else {
        lowercase_first(prime)
    })
}

/// Negated question with the original answer as distractor and the misprime as
/// the correct choice. Choices are `[original answer, misprime]`; the label
/// balancer decides the final order.
pub fn build_mcq_from_lama(rec: &LamaSourceRecord) -> Result<McqRecord> {
    rec.validate()?;
    let misprime = extract_misprime(&rec.misprimed_question, Some(&rec.answer))?;
    let answer = rec.answer.trim().to_string();
    if misprime.is_empty() || fold(&misprime) == fold(&answer) {
        return Err(TransformError::DegenerateChoices(answer));
    }
    let question = rec.negated_question.trim().to_string();
    if question == rec.original_question.trim() {
        return Err(TransformError::InvalidRecord(format!(
            "negated question equals original: {question:?}"
        )));
    }
    Ok(McqRecord {
        id: rec.record_id(),
        question,
        choices: [answer.clone(), misprime],
        answer_index: 1,
        source: rec.subset.into(),
        negation_type: NegationType::LamaNative,
        original_question: rec.original_question.trim().to_string(),
        original_answer: answer,
        negation_form: None,
    })
}

/// Indices of the choices that differ from the answer after case-folding.
fn incorrect_choices(rec: &ObqaSourceRecord) -> Vec<usize> {
    let answer = fold(&rec.choices[rec.answer_index]);
    let mut seen: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (i, c) in rec.choices.iter().enumerate() {
        let f = fold(c);
        if i != rec.answer_index && f != answer && !f.is_empty() && !seen.contains(&f) {
            seen.push(f);
            out.push(i);
        }
    }
    out
}

/// Builds the OBQA-derived question with an explicit distractor index.
///
/// `distractor_index` names the original incorrect choice that becomes the
/// correct answer of the negated question.
pub fn obqa_mcq_with_distractor(
    rec: &ObqaSourceRecord,
    kind: NegationType,
    form: NegationForm,
    distractor_index: usize,
) -> Result<McqRecord> {
    rec.validate()?;
    if !kind.is_rule() {
        return Err(TransformError::NotARule(kind));
    }
    let answer = rec.choices[rec.answer_index].trim().to_string();
    let new_correct = rec
        .choices
        .get(distractor_index)
        .map(|c| c.trim().to_string())
        .ok_or_else(|| TransformError::InvalidRecord(format!("no choice {distractor_index}")))?;
    if distractor_index == rec.answer_index || fold(&new_correct) == fold(&answer) {
        return Err(TransformError::DegenerateChoices(answer));
    }
    let negated = RuleLexicon::shared().negate(&rec.stem, kind, form)?;
    Ok(McqRecord {
        id: format!("{}/{:?}", rec.record_id(), kind),
        question: negated.text,
        choices: [answer.clone(), new_correct],
        answer_index: 1,
        source: Source::OBQA,
        negation_type: kind,
        original_question: rec.stem.clone(),
        original_answer: answer,
        negation_form: negated.dual_form.then_some(form),
    })
}

/// Negates the stem and turns a uniformly sampled incorrect choice into the
/// correct answer. The draw is seeded by `(seed, record id)`.
pub fn build_mcq_from_obqa(
    rec: &ObqaSourceRecord,
    kind: NegationType,
    form: NegationForm,
    seed: u64,
) -> Result<McqRecord> {
    rec.validate()?;
    let candidates = incorrect_choices(rec);
    if candidates.is_empty() {
        return Err(TransformError::DegenerateChoices(
            rec.choices[rec.answer_index].clone(),
        ));
    }
    let mut rng = rng_for(seed, &rec.record_id());
    let pick = candidates[rng.gen_range(0..candidates.len())];
    obqa_mcq_with_distractor(rec, kind, form, pick)
}

/// Prepends the distractor (the answer before negation) to the question.
pub fn misprime_variant(mcq: &McqRecord) -> McqRecord {
    let prime = uppercase_first(mcq.distractor().trim());
    McqRecord {
        id: format!("{}+misprime", mcq.id),
        question: format!("{prime}? {}", mcq.question),
        negation_type: NegationType::Misprimed,
        negation_form: None,
        ..mcq.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::LamaSubset;

    fn child_wants() -> LamaSourceRecord {
        LamaSourceRecord {
            original_question: "Child wants?".into(),
            negated_question: "Child does not want?".into(),
            answer: "love".into(),
            misprimed_question: "Marriage? Child wants?".into(),
            subset: LamaSubset::ConceptNet,
            file_id: "test".into(),
        }
    }

    fn pedal() -> ObqaSourceRecord {
        ObqaSourceRecord {
            id: None,
            stem: "Pushing on a pedal is an example of?".into(),
            choices: vec!["patching".into(), "force".into(), "practice".into(), "speed".into()],
            answer_index: 1,
        }
    }

    #[test]
    fn misprime_extraction() {
        assert_eq!(extract_misprime("Marriage? Child wants?", None).unwrap(), "marriage");
        assert_eq!(extract_misprime("X? Y?", None).unwrap(), "x");
        assert_eq!(extract_misprime("Tokyo? Japan's capital is?", None).unwrap(), "tokyo");
        assert_eq!(
            extract_misprime("Microsoft? iPhone is made by?", Some("Apple")).unwrap(),
            "Microsoft"
        );
        assert_eq!(
            extract_misprime("no separator", None),
            Err(TransformError::NoSeparator("no separator".into()))
        );
    }

    #[test]
    fn lama_golden() {
        let mcq = build_mcq_from_lama(&child_wants()).unwrap();
        assert_eq!(mcq.question, "Child does not want?");
        assert_eq!(mcq.choices, ["love".to_string(), "marriage".to_string()]);
        assert_eq!(mcq.correct_choice(), "marriage");
        assert_eq!(mcq.distractor(), "love");
        assert_eq!(mcq.source, Source::ConceptNet);
        mcq.validate().unwrap();
    }

    #[test]
    fn lama_cats() {
        let rec = LamaSourceRecord {
            original_question: "Cats like?".into(),
            negated_question: "Cats do not like?".into(),
            answer: "milk".into(),
            misprimed_question: "Water? Cats like?".into(),
            ..child_wants()
        };
        let mcq = build_mcq_from_lama(&rec).unwrap();
        assert_eq!(mcq.correct_choice(), "water");
        assert_eq!(mcq.distractor(), "milk");
    }

    #[test]
    fn lama_degenerate() {
        let rec = LamaSourceRecord {
            answer: "x".into(),
            misprimed_question: "X? Y?".into(),
            ..child_wants()
        };
        assert!(matches!(build_mcq_from_lama(&rec), Err(TransformError::DegenerateChoices(_))));
    }

    #[test]
    fn obqa_golden() {
        let mcq =
            obqa_mcq_with_distractor(&pedal(), NegationType::LinkingVerb, NegationForm::Contracted, 3)
                .unwrap();
        assert_eq!(mcq.question, "Pushing on a pedal isn't an example of?");
        assert_eq!(mcq.choices, ["force".to_string(), "speed".to_string()]);
        assert_eq!(mcq.correct_choice(), "speed");
        assert_eq!(mcq.negation_form, Some(NegationForm::Contracted));
    }

    #[test]
    fn obqa_sampling_is_seeded_and_never_picks_the_answer() {
        for seed in 0..200 {
            let a = build_mcq_from_obqa(&pedal(), NegationType::LinkingVerb, NegationForm::Full, seed)
                .unwrap();
            let b = build_mcq_from_obqa(&pedal(), NegationType::LinkingVerb, NegationForm::Full, seed)
                .unwrap();
            assert_eq!(a, b);
            assert_ne!(a.correct_choice(), "force");
            assert_eq!(a.distractor(), "force");
        }
    }

    #[test]
    fn obqa_degenerate_choices() {
        let rec = ObqaSourceRecord {
            choices: vec!["force".into(); 4],
            ..pedal()
        };
        assert!(matches!(
            build_mcq_from_obqa(&rec, NegationType::LinkingVerb, NegationForm::Full, 0),
            Err(TransformError::DegenerateChoices(_))
        ));
    }

    #[test]
    fn obqa_propagates_missing_trigger() {
        let rec = ObqaSourceRecord {
            stem: "Photosynthesis happens in".into(),
            ..pedal()
        };
        assert!(matches!(
            build_mcq_from_obqa(&rec, NegationType::LinkingVerb, NegationForm::Full, 0),
            Err(TransformError::NoTriggerFound { .. })
        ));
    }

    #[test]
    fn misprime_examples() {
        let mcq = build_mcq_from_lama(&child_wants()).unwrap();
        let v = misprime_variant(&mcq);
        assert_eq!(v.question, "Love? Child does not want?");
        assert_eq!(v.choices, mcq.choices);
        assert_eq!(v.answer_index, mcq.answer_index);
        assert_eq!(v.negation_type, NegationType::Misprimed);

        let iphone = McqRecord {
            question: "iPhone is not made by?".into(),
            choices: ["Apple".into(), "Samsung".into()],
            original_question: "iPhone is made by?".into(),
            original_answer: "Apple".into(),
            ..mcq.clone()
        };
        assert_eq!(misprime_variant(&iphone).question, "Apple? iPhone is not made by?");

        let twice = misprime_variant(&v);
        assert_eq!(twice.question, "Love? Love? Child does not want?");
    }
}
