//! Least-squares fits for subtask curves.
//!
//! Task 1 (answering the original question) is fitted with a straight line.
//! Task 2 (telling negated from original sentences) is fitted with a logistic
//! curve pinned between chance (0.5) and perfect accuracy (1.0), leaving only
//! the transition point `mu` and width `tau` free.

use super::{AnalysisError, Result, ScaleAxis, ScalingCurve};
use serde::{Deserialize, Serialize};

pub const SIGMOID_TAU_MIN: f64 = 0.05;
pub const SIGMOID_TAU_MAX: f64 = 5.0;
const MU_STEP: f64 = 0.01;
const TAU_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub rss: f64,
    pub axis: ScaleAxis,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    /// Transition point in axis units.
    pub mu: f64,
    pub tau: f64,
    pub rss: f64,
    pub axis: ScaleAxis,
}

impl SigmoidFit {
    pub fn predict(&self, x: f64) -> f64 {
        sigmoid_band(x, self.mu, self.tau)
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `0.5 + 0.5 * logistic((x - mu) / tau)`
pub fn sigmoid_band(x: f64, mu: f64, tau: f64) -> f64 {
    0.5 + 0.5 * logistic((x - mu) / tau)
}

pub fn sigmoid_rss(xs: &[f64], ys: &[f64], mu: f64, tau: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - sigmoid_band(x, mu, tau);
            r * r
        })
        .sum()
}

fn axis_data(curve: &ScalingCurve, axis: ScaleAxis, min_points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if curve.points.len() < min_points {
        return Err(AnalysisError::TooFewPoints(curve.points.len(), min_points));
    }
    let xs = curve.axis_values(axis)?;
    let first = xs[0];
    if xs.iter().all(|&x| x == first) {
        return Err(AnalysisError::DegenerateAxis);
    }
    Ok((xs, curve.accuracies()))
}

/// Ordinary least squares of accuracy on the chosen scale axis.
pub fn fit_linear(curve: &ScalingCurve, axis: ScaleAxis) -> Result<LinearFit> {
    let (xs, ys) = axis_data(curve, axis, 2)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        rss,
        axis,
    })
}

/// Least-squares logistic fit in the `[0.5, 1.0]` band.
///
/// A grid over `mu ∈ [min_x - 1, max_x + 1]` (step 0.01) and log-spaced
/// `tau ∈ [0.05, 5]` picks a start point; a pattern search over
/// `(mu, ln tau)` inside the same box refines it.
pub fn fit_sigmoid(curve: &ScalingCurve, axis: ScaleAxis) -> Result<SigmoidFit> {
    let (xs, ys) = axis_data(curve, axis, 3)?;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (ltau_lo, ltau_hi) = (SIGMOID_TAU_MIN.ln(), SIGMOID_TAU_MAX.ln());
    let ltau_step = (ltau_hi - ltau_lo) / (TAU_STEPS - 1) as f64;

    let objective = |mu: f64, ltau: f64| sigmoid_rss(&xs, &ys, mu, ltau.exp());

    let mu_steps = ((hi - lo) / MU_STEP).round() as usize;
    let mut best = (f64::INFINITY, lo, ltau_lo);
    for i in 0..=mu_steps {
        let mu = lo + i as f64 * MU_STEP;
        for j in 0..TAU_STEPS {
            let ltau = ltau_lo + j as f64 * ltau_step;
            let rss = objective(mu, ltau);
            if rss < best.0 {
                best = (rss, mu, ltau);
            }
        }
    }

    let (mut rss, mut mu, mut ltau) = best;
    let mut steps = [MU_STEP, ltau_step];
    while steps[0] > 1e-12 || steps[1] > 1e-12 {
        let mut improved = false;
        for (dmu, dltau) in [
            (steps[0], 0.0),
            (-steps[0], 0.0),
            (0.0, steps[1]),
            (0.0, -steps[1]),
        ] {
            let cand_mu = (mu + dmu).clamp(lo, hi);
            let cand_ltau = (ltau + dltau).clamp(ltau_lo, ltau_hi);
            let cand = objective(cand_mu, cand_ltau);
            if cand < rss {
                rss = cand;
                mu = cand_mu;
                ltau = cand_ltau;
                improved = true;
            }
        }
        if !improved {
            steps[0] *= 0.5;
            steps[1] *= 0.5;
        }
    }

    Ok(SigmoidFit {
        mu,
        tau: ltau.exp(),
        rss,
        axis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionComparison {
    pub earlier: String,
    pub later: String,
    pub mu_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionOrdering {
    /// Fits sorted by `mu`, ties kept in input order.
    pub ordered: Vec<(String, SigmoidFit)>,
    pub comparisons: Vec<TransitionComparison>,
}

/// Sorts labelled sigmoid fits by transition point.
pub fn transition_point_ordering(fits: &[(String, SigmoidFit)]) -> Result<TransitionOrdering> {
    if let Some((_, first)) = fits.first() {
        if fits.iter().any(|(_, f)| f.axis != first.axis) {
            return Err(AnalysisError::AxisMismatch);
        }
    }
    let mut ordered = fits.to_vec();
    ordered.sort_by(|a, b| a.1.mu.total_cmp(&b.1.mu));
    let mut comparisons = Vec::new();
    for (i, (a, fa)) in ordered.iter().enumerate() {
        for (b, fb) in &ordered[i + 1..] {
            comparisons.push(TransitionComparison {
                earlier: a.clone(),
                later: b.clone(),
                mu_gap: fb.mu - fa.mu,
            });
        }
    }
    Ok(TransitionOrdering {
        ordered,
        comparisons,
    })
}
