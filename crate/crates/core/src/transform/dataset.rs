//! Whole-dataset generation from source corpora, plus line-delimited JSON IO.

use super::{
    balance_labels, balance_negation_forms, build_mcq_from_lama, build_mcq_from_obqa,
    misprime_variant, LamaSourceRecord, McqRecord, NegationForm, NegationType, ObqaSourceRecord,
    Result, TransformError,
};
use crate::hashing::derive_seed;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

/// Rule types applied to OBQA stems, rarest trigger first so that the greedy
/// assignment of stems to types does not starve the narrow rules.
pub const OBQA_RULE_TYPES: [NegationType; 6] = [
    NegationType::Prefix,
    NegationType::Conjunction,
    NegationType::ModalVerb,
    NegationType::ActionVerb,
    NegationType::LinkingVerb,
    NegationType::NegationPrompt,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    /// Maximum questions drawn from one LAMA file.
    pub per_file_cap: usize,
    /// Exact number of OBQA questions per negation type.
    pub per_type: usize,
    pub seed: u64,
    /// Emit the misprimed variant of every question.
    pub misprime: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            per_file_cap: 50,
            per_type: 50,
            seed: 0,
            misprime: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerateStats {
    pub input_records: usize,
    pub output_records: usize,
    /// Source records that could not be turned into a question, by reason.
    pub skipped: BTreeMap<String, usize>,
    /// Output counts per LAMA file or per OBQA negation type.
    pub groups: BTreeMap<String, usize>,
}

impl GenerateStats {
    fn skip(&mut self, err: &TransformError) {
        let reason = match err {
            TransformError::NoSeparator(_) => "no_separator",
            TransformError::DegenerateChoices(_) => "degenerate_choices",
            TransformError::NoTriggerFound { .. } => "no_trigger",
            TransformError::InvalidRecord(_) => "invalid_record",
            _ => "other",
        };
        *self.skipped.entry(reason.to_string()).or_default() += 1;
    }
}

fn finish(mut out: Vec<McqRecord>, opts: &GenerateOptions) -> Vec<McqRecord> {
    if opts.misprime {
        out = out.iter().map(misprime_variant).collect();
    }
    balance_labels(&out, opts.seed)
}

/// Builds questions from LAMA-style records, keeping at most
/// `per_file_cap` per `(subset, file_id)`, sampled without replacement.
pub fn generate_lama_dataset(
    records: &[LamaSourceRecord],
    opts: &GenerateOptions,
) -> Result<(Vec<McqRecord>, GenerateStats)> {
    let mut stats = GenerateStats {
        input_records: records.len(),
        ..Default::default()
    };
    let mut groups: BTreeMap<(String, String), Vec<(usize, McqRecord)>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (i, rec) in records.iter().enumerate() {
        match build_mcq_from_lama(rec) {
            Ok(mcq) => {
                if !seen.insert(mcq.id.clone()) {
                    *stats.skipped.entry("duplicate".into()).or_default() += 1;
                    continue;
                }
                groups
                    .entry((format!("{:?}", rec.subset), rec.file_id.clone()))
                    .or_default()
                    .push((i, mcq));
            }
            Err(e) => stats.skip(&e),
        }
    }

    let mut out = Vec::new();
    for ((subset, file), mut members) in groups {
        members.sort_by_key(|(i, m)| (derive_seed(opts.seed, &m.id), *i));
        members.truncate(opts.per_file_cap);
        members.sort_by_key(|(i, _)| *i);
        stats.groups.insert(format!("{subset}/{file}"), members.len());
        out.extend(members.into_iter().map(|(_, m)| m));
    }
    let out = finish(out, opts);
    stats.output_records = out.len();
    Ok((out, stats))
}

/// Builds exactly `per_type` questions for each rule type from OBQA-style
/// records. Each source stem is used by at most one type.
pub fn generate_obqa_dataset(
    records: &[ObqaSourceRecord],
    opts: &GenerateOptions,
) -> Result<(Vec<McqRecord>, GenerateStats)> {
    let mut stats = GenerateStats {
        input_records: records.len(),
        ..Default::default()
    };
    let mut ranked: Vec<(u64, usize)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (derive_seed(opts.seed, &r.record_id()), i))
        .collect();
    ranked.sort_unstable();

    let mut used = vec![false; records.len()];
    let mut out = Vec::new();
    for kind in OBQA_RULE_TYPES {
        let mut produced = 0;
        for &(_, i) in &ranked {
            if produced == opts.per_type {
                break;
            }
            if used[i] {
                continue;
            }
            let rec = &records[i];
            let form = if derive_seed(opts.seed, &format!("{}\u{0}form", rec.record_id())) & 1 == 0 {
                NegationForm::Full
            } else {
                NegationForm::Contracted
            };
            match build_mcq_from_obqa(rec, kind, form, opts.seed) {
                Ok(mcq) => {
                    used[i] = true;
                    produced += 1;
                    out.push(mcq);
                }
                Err(TransformError::NoTriggerFound { .. }) => {}
                Err(e) => {
                    used[i] = true;
                    stats.skip(&e);
                }
            }
        }
        if produced < opts.per_type {
            return Err(TransformError::InsufficientRecords {
                kind,
                available: produced,
                requested: opts.per_type,
            });
        }
        stats.groups.insert(format!("{kind}"), produced);
    }
    let out = finish(balance_negation_forms(&out), opts);
    stats.output_records = out.len();
    Ok((out, stats))
}

/// Reads one JSON object per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| TransformError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: &[T]) -> Result<()> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| TransformError::Io(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::LamaSubset;

    fn lama(file: &str, i: usize) -> LamaSourceRecord {
        LamaSourceRecord {
            original_question: format!("Thing {i} wants?"),
            negated_question: format!("Thing {i} does not want?"),
            answer: format!("answer{i}"),
            misprimed_question: format!("Prime{i}? Thing {i} wants?"),
            subset: LamaSubset::TREx,
            file_id: file.into(),
        }
    }

    fn obqa(i: usize, stem: &str) -> ObqaSourceRecord {
        ObqaSourceRecord {
            id: Some(format!("q{i}")),
            stem: stem.into(),
            choices: vec![format!("a{i}"), format!("b{i}"), format!("c{i}"), format!("d{i}")],
            answer_index: i % 4,
        }
    }

    #[test]
    fn lama_per_file_cap() {
        let mut recs: Vec<_> = (0..80).map(|i| lama("P17", i)).collect();
        recs.extend((100..120).map(|i| lama("P19", i)));
        let opts = GenerateOptions { per_file_cap: 50, seed: 7, ..Default::default() };
        let (out, stats) = generate_lama_dataset(&recs, &opts).unwrap();
        assert_eq!(out.len(), 70);
        assert_eq!(stats.groups["TREx/P17"], 50);
        assert_eq!(stats.groups["TREx/P19"], 20);
        let a = out.iter().filter(|r| r.answer_index == 0).count();
        assert!(a.abs_diff(out.len() - a) <= 1);
        let (again, _) = generate_lama_dataset(&recs, &opts).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn lama_skips_bad_records() {
        let mut bad = lama("P1", 0);
        bad.misprimed_question = "missing separator".into();
        let mut degenerate = lama("P1", 1);
        degenerate.misprimed_question = "Answer1? x?".into();
        let (out, stats) =
            generate_lama_dataset(&[bad, degenerate, lama("P1", 2)], &GenerateOptions::default())
                .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(stats.skipped["no_separator"], 1);
        assert_eq!(stats.skipped["degenerate_choices"], 1);
    }

    fn obqa_pool() -> Vec<ObqaSourceRecord> {
        let templates = [
            "It is likely that item {} is",
            "Item {} floats because",
            "Item {} can be used to",
            "Item {} causes",
            "Item {} is an example of",
            "Item {} relates to",
        ];
        let mut pool = Vec::new();
        for (t, template) in templates.iter().enumerate() {
            for j in 0..6 {
                let i = t * 100 + j;
                pool.push(obqa(i, &template.replace("{}", &i.to_string())));
            }
        }
        pool
    }

    #[test]
    fn obqa_exact_per_type() {
        let opts = GenerateOptions { per_type: 3, seed: 1, ..Default::default() };
        let (out, stats) = generate_obqa_dataset(&obqa_pool(), &opts).unwrap();
        assert_eq!(out.len(), 18);
        for kind in OBQA_RULE_TYPES {
            assert_eq!(out.iter().filter(|r| r.negation_type == kind).count(), 3, "{kind}");
            assert_eq!(stats.groups[&kind.to_string()], 3);
        }
        let full = out.iter().filter(|r| r.negation_form == Some(NegationForm::Full)).count();
        let contracted =
            out.iter().filter(|r| r.negation_form == Some(NegationForm::Contracted)).count();
        assert!(full.abs_diff(contracted) <= 1);
        for r in &out {
            r.validate().unwrap();
        }
    }

    #[test]
    fn obqa_insufficient() {
        let opts = GenerateOptions { per_type: 7, ..Default::default() };
        assert!(matches!(
            generate_obqa_dataset(&obqa_pool(), &opts),
            Err(TransformError::InsufficientRecords { kind: NegationType::Prefix, .. })
        ));
    }

    #[test]
    fn misprime_flag() {
        let opts = GenerateOptions { misprime: true, ..Default::default() };
        let (out, _) = generate_lama_dataset(&[lama("P1", 3)], &opts).unwrap();
        assert_eq!(out[0].question, "Answer3? Thing 3 does not want?");
        assert_eq!(out[0].negation_type, NegationType::Misprimed);
    }

    #[test]
    fn jsonl_round_trip_keeps_field_order() {
        let (out, _) = generate_lama_dataset(&[lama("P1", 3)], &GenerateOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &out).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let keys = [
            "\"id\"", "\"question\"", "\"choices\"", "\"answer_index\"", "\"source\"",
            "\"negation_type\"", "\"original_question\"", "\"original_answer\"",
        ];
        let positions: Vec<_> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        let back: Vec<McqRecord> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn jsonl_parse_error_has_line() {
        let err = read_jsonl::<McqRecord>("\n{bad".as_bytes()).unwrap_err();
        assert!(matches!(err, TransformError::Parse { line: 2, .. }));
    }
}
