use super::{AnalysisError, Result, ScalingCurve};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const DEFAULT_DELTA: f64 = 0.01;

/// Slack for comparing accuracy differences against `delta`: published
/// accuracies have two decimals, and e.g. `0.40 - 0.39` is a hair below
/// `0.01` in binary floating point.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Positive,
    Inverse,
    UShaped,
    Flat,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Shape::Positive => "Positive",
            Shape::Inverse => "Inverse",
            Shape::UShaped => "U-Shape",
            Shape::Flat => "Flat",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeDiagnostics {
    /// First index attaining the minimum accuracy.
    pub min_index: usize,
    /// Largest accuracy at or before the minimum, minus the minimum.
    pub drop: f64,
    /// Largest accuracy at or after the minimum, minus the minimum.
    pub recovery: f64,
    /// Last accuracy minus first accuracy.
    pub endpoint_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeLabel {
    pub value: Shape,
    pub diagnostics: ShapeDiagnostics,
}

/// Labels a curve as U-shaped, positive, inverse or flat.
///
/// With `i*` the first index of the minimum accuracy, the curve is U-shaped
/// when it falls by at least `delta` before `i*` and rises by at least `delta`
/// after it. Otherwise the endpoint difference decides between positive and
/// inverse, and anything within `delta` is flat.
pub fn classify_shape(curve: &ScalingCurve, delta: f64) -> Result<ShapeLabel> {
    let acc = curve.accuracies();
    if acc.len() < 3 {
        return Err(AnalysisError::TooFewPoints(acc.len(), 3));
    }
    let n = acc.len();
    let min_index = acc
        .iter()
        .enumerate()
        .fold(0, |best, (i, &a)| if a < acc[best] { i } else { best });
    let min = acc[min_index];
    let max_of = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let drop = max_of(&acc[..=min_index]) - min;
    let recovery = max_of(&acc[min_index..]) - min;
    let endpoint_delta = acc[n - 1] - acc[0];

    let at_least = |v: f64| v >= delta - EPS;
    let value = if at_least(drop) && at_least(recovery) {
        Shape::UShaped
    } else if at_least(endpoint_delta) {
        Shape::Positive
    } else if at_least(-endpoint_delta) {
        Shape::Inverse
    } else {
        Shape::Flat
    };
    Ok(ShapeLabel {
        value,
        diagnostics: ShapeDiagnostics {
            min_index,
            drop,
            recovery,
            endpoint_delta,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label(acc: &[f64], delta: f64) -> Shape {
        classify_shape(&ScalingCurve::from_accuracies("f", "m", acc).unwrap(), delta)
            .unwrap()
            .value
    }

    #[test]
    fn examples() {
        assert_eq!(label(&[0.54, 0.54, 0.36, 0.33], 0.01), Shape::Inverse);
        assert_eq!(label(&[0.61, 0.53, 0.48, 0.31, 0.56, 0.71], 0.01), Shape::UShaped);
        assert_eq!(label(&[0.34, 0.45, 0.47, 0.89, 0.98, 0.98], 0.01), Shape::Positive);
        assert_eq!(label(&[0.7, 0.7, 0.7], 0.01), Shape::Flat);
        assert_eq!(label(&[0.5, 0.4, 0.6], 0.05), Shape::UShaped);
    }

    #[test]
    fn diagnostics() {
        let c = ScalingCurve::from_accuracies("f", "m", &[0.5, 0.4, 0.6]).unwrap();
        let d = classify_shape(&c, 0.05).unwrap().diagnostics;
        assert_eq!(d.min_index, 1);
        assert!((d.drop - 0.1).abs() < 1e-12);
        assert!((d.recovery - 0.2).abs() < 1e-12);
        assert!((d.endpoint_delta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn tie_at_minimum_takes_first_index() {
        let c = ScalingCurve::from_accuracies("Cohere", "fewshot", &[0.51, 0.52, 0.08, 0.08]).unwrap();
        let l = classify_shape(&c, 0.01).unwrap();
        assert_eq!(l.diagnostics.min_index, 2);
        assert_eq!(l.value, Shape::Inverse);
    }

    #[test]
    fn too_few_points() {
        let c = ScalingCurve::from_accuracies("f", "m", &[0.5, 0.6]).unwrap();
        assert_eq!(classify_shape(&c, 0.01), Err(AnalysisError::TooFewPoints(2, 3)));
    }

    proptest! {
        #[test]
        fn invariant_under_constant_shift(
            acc in prop::collection::vec(0.0f64..0.5, 3..8),
            shift in 0.0f64..0.5,
        ) {
            // Round to a 1e-3 grid so the shifted differences stay clear of the
            // comparison slack.
            let acc: Vec<f64> = acc.iter().map(|a| (a * 1000.0).round() / 1000.0).collect();
            let shift = (shift * 1000.0).round() / 1000.0;
            let shifted: Vec<f64> = acc.iter().map(|a| a + shift).collect();
            prop_assert_eq!(label(&acc, 0.0105), label(&shifted, 0.0105));
        }
    }
}
