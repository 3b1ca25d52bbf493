//! Scaling-curve analysis: shape classification, subtask fits and composition.

mod compose;
mod fit;
mod shape;

pub use compose::{
    compose_accuracy, compose_accuracy_raw, predict_composed_curve, simulate_decomposition,
    PredictedCurve, Simulation, SigmoidSpec, LinearSpec, SubtaskCurves,
};
pub use fit::{
    fit_linear, fit_sigmoid, sigmoid_band, sigmoid_rss, transition_point_ordering, LinearFit,
    SigmoidFit, TransitionOrdering, SIGMOID_TAU_MAX, SIGMOID_TAU_MIN,
};
pub use shape::{classify_shape, Shape, ShapeDiagnostics, ShapeLabel, DEFAULT_DELTA};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("curve has {0} points, at least {1} required")]
    TooFewPoints(usize, usize),
    #[error("scale axis is degenerate (all x equal)")]
    DegenerateAxis,
    #[error("subtask curves do not share a scale grid")]
    GridMismatch,
    #[error("fits mix scale axes")]
    AxisMismatch,
    #[error("log_params missing on some points")]
    MissingLogParams,
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Which x coordinate a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleAxis {
    /// Ordinal position of the model within its family.
    #[default]
    Rank,
    /// `log10` of the parameter count.
    LogParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub scale_rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_params: Option<f64>,
    pub accuracy: f64,
}

impl CurvePoint {
    pub fn new(scale_rank: u32, accuracy: f64) -> Self {
        CurvePoint {
            scale_rank,
            log_params: None,
            accuracy,
        }
    }
}

/// Accuracy as a function of model scale for one family and prompting method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub family: String,
    pub method: String,
    pub points: Vec<CurvePoint>,
}

impl ScalingCurve {
    pub fn new(
        family: impl Into<String>,
        method: impl Into<String>,
        points: Vec<CurvePoint>,
    ) -> Result<Self> {
        let curve = ScalingCurve {
            family: family.into(),
            method: method.into(),
            points,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Curve on ranks `0..n` from a list of accuracies.
    pub fn from_accuracies(
        family: impl Into<String>,
        method: impl Into<String>,
        accuracies: &[f64],
    ) -> Result<Self> {
        let points = accuracies
            .iter()
            .enumerate()
            .map(|(i, &a)| CurvePoint::new(i as u32, a))
            .collect();
        ScalingCurve::new(family, method, points)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.points.windows(2) {
            if w[1].scale_rank <= w[0].scale_rank {
                return Err(AnalysisError::InvalidCurve(format!(
                    "{}/{}: scale_rank not strictly increasing",
                    self.family, self.method
                )));
            }
        }
        for p in &self.points {
            if !(0.0..=1.0).contains(&p.accuracy) {
                return Err(AnalysisError::InvalidCurve(format!(
                    "{}/{}: accuracy {} outside [0, 1]",
                    self.family, self.method, p.accuracy
                )));
            }
            if p.log_params.is_some_and(|v| !v.is_finite()) {
                return Err(AnalysisError::InvalidCurve("non-finite log_params".into()));
            }
        }
        Ok(())
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.accuracy).collect()
    }

    pub fn ranks(&self) -> Vec<u32> {
        self.points.iter().map(|p| p.scale_rank).collect()
    }

    /// `LogParams` when every point carries a parameter count, else `Rank`.
    pub fn preferred_axis(&self) -> ScaleAxis {
        if !self.points.is_empty() && self.points.iter().all(|p| p.log_params.is_some()) {
            ScaleAxis::LogParams
        } else {
            ScaleAxis::Rank
        }
    }

    pub fn axis_values(&self, axis: ScaleAxis) -> Result<Vec<f64>> {
        self.points
            .iter()
            .map(|p| match axis {
                ScaleAxis::Rank => Ok(p.scale_rank as f64),
                ScaleAxis::LogParams => p.log_params.ok_or(AnalysisError::MissingLogParams),
            })
            .collect()
    }
}
