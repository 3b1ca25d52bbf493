use super::rules::RuleLexicon;
use super::{McqRecord, NegationForm};
use crate::hashing::derive_seed;

/// Reorders choices so that gold labels split evenly between A and B.
///
/// Records are ranked by a hash of `(seed, id)`; the first half of that ranking
/// gets gold label A and the rest B. Only choice order changes, and a record's
/// label does not depend on its position in `dataset`.
pub fn balance_labels(dataset: &[McqRecord], seed: u64) -> Vec<McqRecord> {
    let n = dataset.len();
    let mut order: Vec<(u64, usize)> = dataset
        .iter()
        .enumerate()
        .map(|(i, r)| (derive_seed(seed, &r.id), i))
        .collect();
    order.sort_unstable();

    // With an odd count the spare record goes to A or B by a seeded coin.
    let extra_to_a = derive_seed(seed, "\u{0}label-parity") & 1 == 0;
    let a_count = if extra_to_a { n.div_ceil(2) } else { n / 2 };

    let mut target = vec![1usize; n];
    for &(_, i) in order.iter().take(a_count) {
        target[i] = 0;
    }

    dataset
        .iter()
        .zip(target)
        .map(|(r, t)| {
            let mut r = r.clone();
            if r.answer_index != t {
                r.choices.swap(0, 1);
                r.answer_index = t;
            }
            r
        })
        .collect()
}

/// Regenerates questions in the minority surface form ("not" vs "n't") until
/// the two forms are within one of each other.
///
/// Only records tagged with a negation form take part; single-form rules such
/// as prefixes are left untouched.
pub fn balance_negation_forms(dataset: &[McqRecord]) -> Vec<McqRecord> {
    let mut out = dataset.to_vec();
    let count = |form: NegationForm, out: &[McqRecord]| {
        out.iter().filter(|r| r.negation_form == Some(form)).count()
    };
    let full = count(NegationForm::Full, &out);
    let contracted = count(NegationForm::Contracted, &out);
    let (majority, excess) = if full > contracted {
        (NegationForm::Full, full - contracted)
    } else {
        (NegationForm::Contracted, contracted - full)
    };
    let mut to_flip = excess / 2;
    if to_flip == 0 {
        return out;
    }

    let mut candidates: Vec<(u64, usize)> = out
        .iter()
        .enumerate()
        .filter(|(_, r)| r.negation_form == Some(majority) && r.negation_type.is_rule())
        .map(|(i, r)| (derive_seed(0, &r.id), i))
        .collect();
    candidates.sort_unstable();

    let lexicon = RuleLexicon::shared();
    let minority = majority.other();
    for (_, i) in candidates {
        if to_flip == 0 {
            break;
        }
        let rec = &out[i];
        match lexicon.negate(&rec.original_question, rec.negation_type, minority) {
            Ok(n) if n.dual_form && n.text != rec.question => {
                out[i].question = n.text;
                out[i].negation_form = Some(minority);
                to_flip -= 1;
            }
            _ => log::warn!("could not regenerate {} in {:?} form", rec.id, minority),
        }
    }
    out
}
