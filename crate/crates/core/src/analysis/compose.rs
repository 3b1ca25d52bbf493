//! Composition of a question-answering curve (task 1) and a
//! negation-discrimination curve (task 2) into a negated-QA curve.

use super::fit::sigmoid_band;
use super::{AnalysisError, CurvePoint, Result, ScalingCurve};
use serde::{Deserialize, Serialize};

/// Negation-understanding score: chance (0.5) maps to 0, perfect to 1.
fn negation_score(t2: f64) -> f64 {
    (t2 - 0.5) / 0.5
}

/// Accuracy on the negated task before clamping.
///
/// With probability `s2` the model flips its task-1 answer (correct with
/// probability `t1`); otherwise it repeats the task-1 answer, which is wrong
/// for the negated question whenever it was right for the original.
pub fn compose_accuracy_raw(t1: f64, t2: f64) -> f64 {
    let s2 = negation_score(t2);
    t1 * s2 + (1.0 - t1) * (1.0 - s2)
}

/// [`compose_accuracy_raw`] clamped to `[0, 1]`; `t2 < 0.5` can push the raw
/// value outside.
pub fn compose_accuracy(t1: f64, t2: f64) -> f64 {
    compose_accuracy_raw(t1, t2).clamp(0.0, 1.0)
}

/// Task-1 and task-2 curves measured on the same model grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskCurves {
    pub t1: ScalingCurve,
    pub t2: ScalingCurve,
}

impl SubtaskCurves {
    pub fn new(t1: ScalingCurve, t2: ScalingCurve) -> Result<Self> {
        if t1.ranks() != t2.ranks() {
            return Err(AnalysisError::GridMismatch);
        }
        Ok(SubtaskCurves { t1, t2 })
    }

    pub fn s2(&self) -> Vec<f64> {
        self.t2.points.iter().map(|p| negation_score(p.accuracy)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedCurve {
    pub curve: ScalingCurve,
    /// Unclamped composed values, one per point.
    pub raw: Vec<f64>,
}

/// Pointwise composition over the shared grid. Family and method come from
/// the task-1 curve.
pub fn predict_composed_curve(sub: &SubtaskCurves) -> Result<PredictedCurve> {
    if sub.t1.ranks() != sub.t2.ranks() {
        return Err(AnalysisError::GridMismatch);
    }
    let mut raw = Vec::with_capacity(sub.t1.points.len());
    let points = sub
        .t1
        .points
        .iter()
        .zip(&sub.t2.points)
        .map(|(p1, p2)| {
            let r = compose_accuracy_raw(p1.accuracy, p2.accuracy);
            raw.push(r);
            CurvePoint {
                scale_rank: p1.scale_rank,
                log_params: p1.log_params,
                accuracy: r.clamp(0.0, 1.0),
            }
        })
        .collect();
    let curve = ScalingCurve::new(sub.t1.family.clone(), sub.t1.method.clone(), points)?;
    Ok(PredictedCurve { curve, raw })
}

/// Linear task-1 curve from `start` at the first grid point to `end` at the last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSpec {
    pub start: f64,
    pub end: f64,
}

impl Default for LinearSpec {
    fn default() -> Self {
        LinearSpec { start: 0.5, end: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidSpec {
    pub mu: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub grid: Vec<f64>,
    pub t1: ScalingCurve,
    pub t2: ScalingCurve,
    pub composed: ScalingCurve,
}

/// Synthetic task-1, task-2 and composed curves over `grid`. Curve points use
/// the grid index as `scale_rank`; the x values are kept in `grid`.
pub fn simulate_decomposition(
    grid: &[f64],
    t1_spec: LinearSpec,
    t2_spec: SigmoidSpec,
) -> Result<Simulation> {
    if grid.len() < 5 {
        return Err(AnalysisError::InvalidGrid(format!(
            "{} points, at least 5 required",
            grid.len()
        )));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidGrid("grid must be finite and strictly increasing".into()));
    }
    if !t2_spec.tau.is_finite() || t2_spec.tau <= 0.0 || !t2_spec.mu.is_finite() {
        return Err(AnalysisError::InvalidGrid("sigmoid needs finite mu and tau > 0".into()));
    }
    let (x0, xn) = (grid[0], grid[grid.len() - 1]);
    let t1: Vec<f64> = grid
        .iter()
        .map(|x| t1_spec.start + (t1_spec.end - t1_spec.start) * (x - x0) / (xn - x0))
        .collect();
    let t2: Vec<f64> = grid.iter().map(|&x| sigmoid_band(x, t2_spec.mu, t2_spec.tau)).collect();
    let composed: Vec<f64> = t1.iter().zip(&t2).map(|(&a, &b)| compose_accuracy(a, b)).collect();
    let curve = |method: &str, acc: &[f64]| {
        ScalingCurve::from_accuracies("simulation", method, &acc.iter().map(|a| a.clamp(0.0, 1.0)).collect::<Vec<_>>())
    };
    Ok(Simulation {
        grid: grid.to_vec(),
        t1: curve("task1", &t1)?,
        t2: curve("task2", &t2)?,
        composed: curve("composed", &composed)?,
    })
}
