use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use negscale::analysis::{classify_shape, predict_composed_curve, ScalingCurve, SubtaskCurves};
use negscale::eval::{EvalOptions, Evaluator, PromptMethod, PromptSpec, ResponseCache};
use negscale::transform::{generate_lama_dataset, generate_obqa_dataset, GenerateOptions, McqRecord};
use negscale_cli::analyze::{analyze_curves, CurveAnalysis};
use negscale_cli::backends::{find_backend, load_manifest, open_backend};
use negscale_cli::config::{RunConfig, SimulateConfig};
use negscale_cli::pipeline::{read_source, run_pipeline, simulate, write_json_lines, SimulationOutput};
use negscale_cli::report::{emit_report, emit_simulation_plot, summary_text};
use negscale_cli::results::write_results;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Negated multiple-choice QA: dataset generation, model evaluation and
/// scaling-trend analysis.
#[derive(Parser)]
#[command(name = "negscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceKind {
    Lama,
    Obqa,
}

#[derive(Subcommand)]
enum Command {
    /// Build a negated two-choice dataset from LAMA-style or OBQA-style records.
    Generate {
        /// Source format of the input file.
        #[arg(long, value_enum)]
        source: SourceKind,
        /// Source records, one JSON object per line.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output dataset (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Maximum questions drawn from one LAMA file.
        #[arg(long, default_value_t = 50)]
        per_file_cap: usize,
        /// Questions per OBQA negation type.
        #[arg(long, default_value_t = 50)]
        per_type: usize,
        /// Seed for sampling and label balancing.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the misprimed variant of every question.
        #[arg(long)]
        misprime: bool,
    },
    /// Score a dataset against one backend with one prompting method.
    Evaluate {
        /// Model name as listed in the backend manifest.
        #[arg(long)]
        backend: String,
        /// Backend manifest (JSON array of descriptors).
        #[arg(long, default_value = "backends.json")]
        manifest: PathBuf,
        /// Prompting method: zeroshot, hint, fewshot, cot, task1, task2 or task2hint.
        #[arg(long)]
        method: PromptMethod,
        /// Dataset produced by `generate`.
        #[arg(long)]
        data: PathBuf,
        /// Results file: one outcome per line, then a summary line.
        #[arg(long)]
        out: PathBuf,
        /// Maximum concurrent backend requests.
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        /// Response cache file; responses are kept in memory when omitted.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Seed for the order of same/different sentence pairs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Abort when more than this fraction of requests fail.
        #[arg(long, default_value_t = 0.05)]
        max_error_fraction: f64,
        /// Token budget for chain-of-thought generations.
        #[arg(long, default_value_t = 128)]
        max_new_tokens: usize,
    },
    /// Classify scaling curves, fit subtask models and predict composed curves.
    Analyze {
        /// Scaling curves, one JSON object per line.
        #[arg(long)]
        curves: PathBuf,
        /// Noise threshold of the shape classifier.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Task-1 and task-2 curve files; writes the composed prediction per family.
        #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
        decompose: Option<Vec<PathBuf>>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a linear task 1 composed with a sigmoid task 2.
    Simulate {
        /// Scale grid as start:stop:step, stop inclusive.
        #[arg(long, default_value = "0:5:0.1")]
        grid: String,
        /// Transition point of the task-2 sigmoid.
        #[arg(long, default_value_t = 2.5)]
        mu: f64,
        /// Width of the task-2 sigmoid.
        #[arg(long, default_value_t = 0.3)]
        tau: f64,
        /// Task-1 accuracy at the first grid point.
        #[arg(long, default_value_t = 0.5)]
        t1_start: f64,
        /// Task-1 accuracy at the last grid point.
        #[arg(long, default_value_t = 1.0)]
        t1_end: f64,
        /// Noise threshold used to label the composed curve.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render plots, the accuracy CSV and the text summary.
    Plot {
        /// analysis.jsonl written by `analyze`.
        #[arg(long)]
        analysis: PathBuf,
        /// simulation.json written by `simulate`.
        #[arg(long)]
        simulation: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from a TOML config, skipping stages whose inputs are unchanged.
    Run {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate {
            source,
            input,
            out,
            per_file_cap,
            per_type,
            seed,
            misprime,
        } => {
            let opts = GenerateOptions {
                per_file_cap,
                per_type,
                seed,
                misprime,
            };
            let (data, stats) = match source {
                SourceKind::Lama => generate_lama_dataset(&read_source(&input)?, &opts)?,
                SourceKind::Obqa => generate_obqa_dataset(&read_source(&input)?, &opts)?,
            };
            write_json_lines(&out, &data)?;
            println!("{}", serde_json::to_string(&stats)?);
        }
        Command::Evaluate {
            backend,
            manifest,
            method,
            data,
            out,
            concurrency,
            cache,
            seed,
            max_error_fraction,
            max_new_tokens,
        } => {
            let descriptors = load_manifest(&manifest)?;
            let descriptor = find_backend(&descriptors, &backend)?;
            let backend = open_backend(descriptor, manifest.parent().unwrap_or(Path::new(".")))?;
            let cache = match cache {
                Some(p) => ResponseCache::open(&p).with_context(|| format!("opening cache {}", p.display()))?,
                None => ResponseCache::in_memory(),
            };
            let opts = EvalOptions {
                concurrency,
                max_error_fraction,
                max_new_tokens,
                task2_seed: seed,
            };
            let dataset: Vec<McqRecord> = read_source(&data)?;
            let report = Evaluator::new(backend.as_ref(), &cache, opts)
                .evaluate_dataset(&dataset, &PromptSpec::for_method(method))?;
            let summary = report.summary(&descriptor.model_name, method);
            write_results(&out, &report.outcomes, &summary)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Analyze {
            curves,
            delta,
            decompose,
            out,
        } => {
            let curves: Vec<ScalingCurve> = read_source(&curves)?;
            let analyses = analyze_curves(&curves, delta)?;
            write_json_lines(&out.join("analysis.jsonl"), &analyses)?;
            std::fs::write(out.join("summary.txt"), summary_text(&analyses)?)?;
            if let Some(paths) = decompose {
                let predictions = decompose_files(&paths[0], &paths[1], delta)?;
                write_json_lines(&out.join("decomposition.jsonl"), &predictions)?;
            }
            print!("{}", summary_text(&analyses)?);
        }
        Command::Simulate {
            grid,
            mu,
            tau,
            t1_start,
            t1_end,
            delta,
            out,
        } => {
            let sim_cfg = SimulateConfig {
                grid,
                mu,
                tau,
                t1_start,
                t1_end,
            };
            let result = simulate(&sim_cfg, delta)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("simulation.json"), serde_json::to_string_pretty(&result)? + "\n")?;
            emit_simulation_plot(&result.simulation, &result.composed_shape.to_string(), &out)?;
            println!("composed curve: {}", result.composed_shape);
        }
        Command::Plot { analysis, simulation, out } => {
            let analyses: Vec<CurveAnalysis> = read_source(&analysis)?;
            let mut files = emit_report(&analyses, &out)?;
            if let Some(path) = simulation {
                let sim: SimulationOutput = serde_json::from_str(&std::fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?;
                files.push(emit_simulation_plot(&sim.simulation, &sim.composed_shape.to_string(), &out)?);
            }
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let manifest = run_pipeline(&cfg)?;
            println!(
                "{} stages, {} executed, {} backend calls",
                manifest.stages.len(),
                manifest.executed().len(),
                manifest.backend_calls()
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Decomposition {
    family: String,
    predicted: ScalingCurve,
    raw: Vec<f64>,
    shape: negscale::analysis::Shape,
}

/// Composed predictions for every family present in both curve files.
fn decompose_files(t1_path: &Path, t2_path: &Path, delta: f64) -> Result<Vec<Decomposition>> {
    let t1: Vec<ScalingCurve> = read_source(t1_path)?;
    let t2: Vec<ScalingCurve> = read_source(t2_path)?;
    let mut out = Vec::new();
    for a in &t1 {
        let Some(b) = t2.iter().find(|b| b.family == a.family) else {
            log::warn!("{}: no task-2 curve, skipping", a.family);
            continue;
        };
        let predicted = predict_composed_curve(&SubtaskCurves::new(a.clone(), b.clone())?)
            .with_context(|| format!("family {}", a.family))?;
        out.push(Decomposition {
            family: a.family.clone(),
            shape: classify_shape(&predicted.curve, delta)?.value,
            predicted: predicted.curve,
            raw: predicted.raw,
        });
    }
    if out.is_empty() {
        bail!("no family appears in both {} and {}", t1_path.display(), t2_path.display());
    }
    Ok(out)
}
