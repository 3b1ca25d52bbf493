use anyhow::{Context, Result};
use negscale::analysis::{
    classify_shape, fit_linear, fit_sigmoid, predict_composed_curve, transition_point_ordering,
    LinearFit, ScalingCurve, Shape, ShapeDiagnostics, SigmoidFit, SubtaskCurves,
    TransitionOrdering,
};
use negscale::eval::PromptMethod;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmoid: Option<SigmoidFit>,
}

/// Composed curve predicted from the family's task-1 and task-2 curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedPrediction {
    pub task2_method: PromptMethod,
    pub accuracies: Vec<f64>,
    /// Before clamping to [0, 1].
    pub raw: Vec<f64>,
    pub shape: Shape,
    /// Mean |predicted - observed| over the shared grid.
    pub mean_abs_error: f64,
}

/// One line of an analysis file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAnalysis {
    pub curve: ScalingCurve,
    pub shape: Shape,
    pub diagnostics: ShapeDiagnostics,
    pub fits: Fits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_composed: Option<ComposedPrediction>,
}

/// Subtask method whose curve, composed with task 1, should track `method`.
fn task2_partner(method: &str) -> Option<PromptMethod> {
    match method.parse::<PromptMethod>().ok()? {
        PromptMethod::ZeroShot => Some(PromptMethod::Task2SameDifferent),
        PromptMethod::ZeroShotHint => Some(PromptMethod::Task2SameDifferentHint),
        _ => None,
    }
}

fn is_task2(method: &str) -> bool {
    method.parse::<PromptMethod>().is_ok_and(PromptMethod::is_task2)
}

/// Shape labels and fits for every curve. Task-1 curves get a linear fit and
/// same/different curves a sigmoid fit. Zero-shot and hinted curves get a
/// composed prediction when the family also has the matching subtask curves.
pub fn analyze_curves(curves: &[ScalingCurve], delta: f64) -> Result<Vec<CurveAnalysis>> {
    let lookup: BTreeMap<(&str, &str), &ScalingCurve> = curves
        .iter()
        .map(|c| ((c.family.as_str(), c.method.as_str()), c))
        .collect();
    let mut out = Vec::with_capacity(curves.len());
    for c in curves {
        let context = || format!("curve {}/{}", c.family, c.method);
        let label = classify_shape(c, delta).with_context(context)?;
        let axis = c.preferred_axis();
        let mut fits = Fits::default();
        if c.method == PromptMethod::Task1Original.name() {
            fits.linear = Some(fit_linear(c, axis).with_context(context)?);
        }
        if is_task2(&c.method) {
            fits.sigmoid = Some(fit_sigmoid(c, axis).with_context(context)?);
        }
        let predicted_composed = match task2_partner(&c.method) {
            Some(t2_method) => {
                let t1 = lookup.get(&(c.family.as_str(), PromptMethod::Task1Original.name()));
                let t2 = lookup.get(&(c.family.as_str(), t2_method.name()));
                match (t1, t2) {
                    (Some(&t1), Some(&t2)) => predict(c, t1, t2, t2_method, delta).with_context(context)?,
                    _ => None,
                }
            }
            None => None,
        };
        out.push(CurveAnalysis {
            curve: c.clone(),
            shape: label.value,
            diagnostics: label.diagnostics,
            fits,
            predicted_composed,
        });
    }
    Ok(out)
}

fn predict(
    observed: &ScalingCurve,
    t1: &ScalingCurve,
    t2: &ScalingCurve,
    t2_method: PromptMethod,
    delta: f64,
) -> Result<Option<ComposedPrediction>> {
    if t1.ranks() != observed.ranks() {
        log::warn!(
            "{}: subtask grid differs from {} grid, skipping composed prediction",
            observed.family,
            observed.method
        );
        return Ok(None);
    }
    let sub = SubtaskCurves::new(t1.clone(), t2.clone())?;
    let predicted = predict_composed_curve(&sub)?;
    let accuracies = predicted.curve.accuracies();
    let mean_abs_error = accuracies
        .iter()
        .zip(observed.accuracies())
        .map(|(p, o)| (p - o).abs())
        .sum::<f64>()
        / accuracies.len() as f64;
    Ok(Some(ComposedPrediction {
        task2_method: t2_method,
        shape: classify_shape(&predicted.curve, delta)?.value,
        accuracies,
        raw: predicted.raw,
        mean_abs_error,
    }))
}

/// Per family, same/different curves ordered by sigmoid transition point.
pub fn transitions(analyses: &[CurveAnalysis]) -> Result<Vec<(String, TransitionOrdering)>> {
    let mut by_family: BTreeMap<&str, Vec<(String, SigmoidFit)>> = BTreeMap::new();
    for a in analyses {
        if let Some(fit) = a.fits.sigmoid {
            by_family
                .entry(a.curve.family.as_str())
                .or_default()
                .push((a.curve.method.clone(), fit));
        }
    }
    by_family
        .into_iter()
        .map(|(family, fits)| Ok((family.to_string(), transition_point_ordering(&fits)?)))
        .collect()
}
