use super::{McqRecord, Result, TransformError};
use crate::analysis::{classify_shape, Shape, ScalingCurve};
use crate::hashing::derive_seed;
use std::collections::HashMap;

/// Keeps records whose original (non-negated) question scales positively, then
/// draws `sample_n` of them without replacement.
///
/// The draw ranks qualifying records by a hash of `(seed, id)`, so it is
/// independent of input order. The sample is returned in dataset order.
pub fn select_positive_subset(
    dataset: &[McqRecord],
    original_curves: &HashMap<String, ScalingCurve>,
    delta: f64,
    sample_n: usize,
    seed: u64,
) -> Result<Vec<McqRecord>> {
    let mut qualifying = Vec::new();
    for (i, rec) in dataset.iter().enumerate() {
        let curve = original_curves
            .get(&rec.id)
            .ok_or_else(|| TransformError::MissingCurve(rec.id.clone()))?;
        let label = classify_shape(curve, delta)
            .map_err(|e| TransformError::InvalidRecord(format!("{}: {e}", rec.id)))?;
        if label.value == Shape::Positive {
            qualifying.push((derive_seed(seed, &rec.id), i));
        }
    }
    if qualifying.len() < sample_n {
        return Err(TransformError::InsufficientPositive {
            available: qualifying.len(),
            requested: sample_n,
        });
    }
    qualifying.sort_unstable();
    let mut picked: Vec<usize> = qualifying.into_iter().take(sample_n).map(|(_, i)| i).collect();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| dataset[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CurvePoint;
    use crate::transform::{NegationType, Source};

    fn rec(id: &str) -> McqRecord {
        McqRecord {
            id: id.into(),
            question: "q not?".into(),
            choices: ["a".into(), "b".into()],
            answer_index: 0,
            source: Source::ConceptNet,
            negation_type: NegationType::LamaNative,
            original_question: "q?".into(),
            original_answer: "b".into(),
            negation_form: None,
        }
    }

    fn curve(acc: &[f64]) -> ScalingCurve {
        ScalingCurve::new(
            "f",
            "m",
            acc.iter()
                .enumerate()
                .map(|(i, &a)| CurvePoint::new(i as u32, a))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hand_classified_pool() {
        let ds = vec![rec("pos"), rec("flat"), rec("inv"), rec("u")];
        let curves: HashMap<_, _> = [
            ("pos", curve(&[0.44, 0.47, 0.61, 0.76])),
            ("flat", curve(&[0.5, 0.5, 0.5, 0.5])),
            ("inv", curve(&[0.7, 0.6, 0.55])),
            ("u", curve(&[0.6, 0.4, 0.7])),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let out = select_positive_subset(&ds, &curves, 0.01, 1, 0).unwrap();
        assert_eq!(out, vec![rec("pos")]);
        assert!(matches!(
            select_positive_subset(&ds, &curves, 0.01, 2, 0),
            Err(TransformError::InsufficientPositive { available: 1, requested: 2 })
        ));
    }

    #[test]
    fn missing_curve() {
        let ds = vec![rec("a")];
        assert_eq!(
            select_positive_subset(&ds, &HashMap::new(), 0.01, 0, 0),
            Err(TransformError::MissingCurve("a".into()))
        );
    }

    #[test]
    fn sample_is_seeded_and_order_preserving() {
        let ds: Vec<_> = (0..40).map(|i| rec(&format!("r{i}"))).collect();
        let curves: HashMap<_, _> =
            ds.iter().map(|r| (r.id.clone(), curve(&[0.4, 0.5, 0.6]))).collect();
        let a = select_positive_subset(&ds, &curves, 0.01, 10, 3).unwrap();
        let b = select_positive_subset(&ds, &curves, 0.01, 10, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        let positions: Vec<_> = a.iter().map(|r| ds.iter().position(|d| d == r).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
