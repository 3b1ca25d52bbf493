//! Results files: one `EvalOutcome` per line followed by an `EvalSummary` line.

use anyhow::{bail, Context, Result};
use negscale::analysis::{CurvePoint, ScalingCurve};
use negscale::eval::{BackendDescriptor, EvalOutcome, EvalSummary, PromptMethod};
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn write_results(path: &Path, outcomes: &[EvalOutcome], summary: &EvalSummary) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for o in outcomes {
        serde_json::to_writer(&mut w, o)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<EvalSummary> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some(last) = text.lines().rev().find(|l| !l.trim().is_empty()) else {
        bail!("{} is empty", path.display());
    };
    serde_json::from_str(last).with_context(|| format!("{}: last line is not a summary", path.display()))
}

/// Accuracy-vs-scale curves, one per (family, method), in first-seen order.
/// Points carry `log10(param_count)` when the descriptor has it.
pub fn build_curves(entries: &[(BackendDescriptor, PromptMethod, EvalSummary)]) -> Result<Vec<ScalingCurve>> {
    let mut groups: Vec<((String, PromptMethod), Vec<CurvePoint>)> = Vec::new();
    for (d, method, summary) in entries {
        let key = (d.family.clone(), *method);
        let point = CurvePoint {
            scale_rank: d.scale_rank,
            log_params: d.log_params(),
            accuracy: summary.accuracy,
        };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, points)) => points.push(point),
            None => groups.push((key, vec![point])),
        }
    }
    groups
        .into_iter()
        .map(|((family, method), mut points)| {
            points.sort_by_key(|p| p.scale_rank);
            Ok(ScalingCurve::new(&family, method.name(), points)?)
        })
        .collect()
}
