//! Staged end-to-end run: generate, evaluate, analyze, simulate, plot.
//!
//! Each stage is keyed by a hash of its inputs. A stage is skipped when the
//! previous manifest recorded the same input hash and every output it listed
//! is still on disk with the recorded content hash.

use crate::analyze::{analyze_curves, CurveAnalysis};
use crate::backends::{load_manifest, open_backend, Endpoint};
use crate::config::{parse_grid, RunConfig, SimulateConfig};
use crate::report::{emit_report, emit_simulation_plot, slug};
use crate::results::{build_curves, read_summary, write_results};
use anyhow::{Context, Result};
use negscale::analysis::{classify_shape, simulate_decomposition, ScalingCurve, Shape, Simulation};
use negscale::eval::{
    Backend, BackendDescriptor, BackendError, EvalOptions, Evaluator, PromptMethod, PromptSpec,
    ResponseCache,
};
use negscale::hashing::sha256_hex;
use negscale::transform::{
    balance_labels, generate_lama_dataset, generate_obqa_dataset, read_jsonl, write_jsonl,
    GenerateOptions, LamaSourceRecord, McqRecord, ObqaSourceRecord,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_FILE: &str = "run_manifest.json";
const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub input_hash: String,
    /// Output path (relative to the output directory) to content hash.
    pub outputs: BTreeMap<String, String>,
    pub skipped: bool,
    pub backend_calls: usize,
    pub started_at: u64,
    pub finished_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub started_at: u64,
    pub finished_at: u64,
}

impl RunManifest {
    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn backend_calls(&self) -> usize {
        self.stages.iter().map(|s| s.backend_calls).sum()
    }

    /// Every output file of the run with its content hash.
    pub fn output_hashes(&self) -> BTreeMap<String, String> {
        self.stages.iter().flat_map(|s| s.outputs.clone()).collect()
    }

    /// Names of stages that actually ran (were not short-circuited).
    pub fn executed(&self) -> Vec<&str> {
        self.stages.iter().filter(|s| !s.skipped).map(|s| s.name.as_str()).collect()
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(std::fs::read(path).with_context(|| format!("reading {}", path.display()))?))
}

fn value_hash(v: &serde_json::Value) -> String {
    sha256_hex(v.to_string())
}

struct Stages<'a> {
    out_dir: &'a Path,
    previous: BTreeMap<String, StageRecord>,
    records: Vec<StageRecord>,
}

impl Stages<'_> {
    fn intact(&self, rec: &StageRecord) -> bool {
        rec.outputs
            .iter()
            .all(|(rel, hash)| file_hash(&self.out_dir.join(rel)).is_ok_and(|h| &h == hash))
    }

    /// Runs `body` unless the previous run already produced its outputs from
    /// the same inputs. `body` returns the files it wrote and the number of
    /// backend calls it made.
    fn run(
        &mut self,
        name: &str,
        input_hash: String,
        body: impl FnOnce() -> Result<(Vec<PathBuf>, usize)>,
    ) -> Result<StageRecord> {
        if let Some(prev) = self.previous.get(name) {
            if prev.input_hash == input_hash && self.intact(prev) {
                log::info!("{name}: unchanged, skipping");
                let t = now();
                let rec = StageRecord {
                    skipped: true,
                    backend_calls: 0,
                    started_at: t,
                    finished_at: t,
                    ..prev.clone()
                };
                self.records.push(rec.clone());
                return Ok(rec);
            }
        }
        log::info!("{name}: running");
        let started_at = now();
        let (paths, backend_calls) = body().with_context(|| format!("stage {name} failed"))?;
        let mut outputs = BTreeMap::new();
        for p in paths {
            let rel = p
                .strip_prefix(self.out_dir)
                .unwrap_or(&p)
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            outputs.insert(rel, file_hash(&p)?);
        }
        let rec = StageRecord {
            name: name.to_string(),
            input_hash,
            outputs,
            skipped: false,
            backend_calls,
            started_at,
            finished_at: now(),
        };
        self.records.push(rec.clone());
        Ok(rec)
    }
}

/// Counts requests that reach the wrapped backend.
struct Counting<'a> {
    inner: &'a dyn Backend,
    calls: AtomicUsize,
}

impl Backend for Counting<'_> {
    fn descriptor(&self) -> &BackendDescriptor {
        self.inner.descriptor()
    }

    fn score_labels(&self, prompt: &str, labels: [&str; 2]) -> Result<[f64; 2], BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.score_labels(prompt, labels)
    }

    fn generate(&self, prompt: &str, max_tokens: usize) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(prompt, max_tokens)
    }
}

pub fn read_source<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

pub fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_jsonl(std::io::BufWriter::new(std::fs::File::create(path)?), items)?;
    Ok(())
}

/// Builds the dataset from whichever sources the config names. Each source is
/// generated and balanced on its own; the union is re-balanced.
pub fn generate_dataset(cfg: &RunConfig) -> Result<Vec<McqRecord>> {
    let opts = GenerateOptions {
        per_file_cap: cfg.per_file_cap,
        per_type: cfg.per_type,
        seed: cfg.seed,
        misprime: cfg.misprime,
    };
    let mut all = Vec::new();
    if let Some(path) = &cfg.lama {
        let (data, stats) = generate_lama_dataset(&read_source::<LamaSourceRecord>(path)?, &opts)?;
        log::info!("lama: {} of {} records kept, skipped {:?}", stats.output_records, stats.input_records, stats.skipped);
        all.extend(data);
    }
    if let Some(path) = &cfg.obqa {
        let (data, stats) = generate_obqa_dataset(&read_source::<ObqaSourceRecord>(path)?, &opts)?;
        log::info!("obqa: {} of {} records kept, skipped {:?}", stats.output_records, stats.input_records, stats.skipped);
        all.extend(data);
    }
    Ok(balance_labels(&all, cfg.seed))
}

fn supports(d: &BackendDescriptor, method: PromptMethod) -> bool {
    if method.generates() {
        d.capability.can_generate()
    } else {
        d.capability.can_rank()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub simulation: Simulation,
    pub composed_shape: Shape,
}

pub fn simulate(sim_cfg: &SimulateConfig, delta: f64) -> Result<SimulationOutput> {
    let (t1, t2) = sim_cfg.specs();
    let simulation = simulate_decomposition(&parse_grid(&sim_cfg.grid)?, t1, t2)?;
    let composed_shape = classify_shape(&simulation.composed, delta)?.value;
    Ok(SimulationOutput {
        simulation,
        composed_shape,
    })
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunManifest> {
    let out_dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(out_dir)?;
    std::fs::create_dir_all(&cfg.cache_dir)?;
    let started_at = now();
    let previous = match RunManifest::load(out_dir) {
        Ok(m) => m.stages.into_iter().map(|s| (s.name.clone(), s)).collect(),
        Err(_) => BTreeMap::new(),
    };
    let mut stages = Stages {
        out_dir,
        previous,
        records: Vec::new(),
    };

    // generate
    let dataset_path = out_dir.join("dataset.jsonl");
    let source_hash = |p: &Option<PathBuf>| p.as_deref().map(file_hash).transpose();
    let gen_input = json!({
        "version": TOOL_VERSION,
        "lama": source_hash(&cfg.lama)?,
        "obqa": source_hash(&cfg.obqa)?,
        "seed": cfg.seed,
        "per_file_cap": cfg.per_file_cap,
        "per_type": cfg.per_type,
        "misprime": cfg.misprime,
    });
    let gen = stages.run("generate", value_hash(&gen_input), || {
        write_json_lines(&dataset_path, &generate_dataset(cfg)?)?;
        Ok((vec![dataset_path.clone()], 0))
    })?;
    let dataset_hash = gen.outputs["dataset.jsonl"].clone();
    let mut dataset: Option<Vec<McqRecord>> = None;

    // evaluate
    let manifest = load_manifest(&cfg.backends)?;
    let manifest_dir = cfg.backends.parent().unwrap_or(Path::new("."));
    let cache = ResponseCache::open(&cfg.cache_dir.join("responses.jsonl"))?;
    let opts = EvalOptions {
        concurrency: cfg.concurrency,
        max_error_fraction: cfg.max_error_fraction,
        max_new_tokens: cfg.max_new_tokens,
        task2_seed: cfg.seed,
    };
    let mut evaluated = Vec::new();
    for d in &manifest {
        let endpoint_key = match Endpoint::parse(d, manifest_dir)? {
            Endpoint::Script(p) => file_hash(&p)?,
            Endpoint::Remote(url) => url,
        };
        for &method in &cfg.methods {
            if !supports(d, method) {
                log::warn!("{}: capability {:?} cannot run {method}, skipping", d.model_name, d.capability);
                continue;
            }
            let spec = PromptSpec::for_method(method);
            let input = json!({
                "version": TOOL_VERSION,
                "dataset": dataset_hash,
                "backend": d,
                "endpoint": endpoint_key,
                "spec": spec,
                "seed": cfg.seed,
                "max_new_tokens": cfg.max_new_tokens,
                "max_error_fraction": cfg.max_error_fraction,
            });
            let path = out_dir
                .join("results")
                .join(format!("{}__{}.jsonl", slug(&d.model_name), method));
            let name = format!("evaluate/{}/{}", d.model_name, method);
            let rec = stages.run(&name, value_hash(&input), || {
                if dataset.is_none() {
                    dataset = Some(read_source(&dataset_path)?);
                }
                let data = dataset.as_deref().unwrap_or_default();
                let backend = open_backend(d, manifest_dir)?;
                let counting = Counting {
                    inner: backend.as_ref(),
                    calls: AtomicUsize::new(0),
                };
                let report = Evaluator::new(&counting, &cache, opts).evaluate_dataset(data, &spec)?;
                log::info!(
                    "{} {}: accuracy {:.3} over {} ({} parse failures, {} ties)",
                    d.model_name,
                    method,
                    report.accuracy,
                    report.n,
                    report.parse_failures,
                    report.ties
                );
                write_results(&path, &report.outcomes, &report.summary(&d.model_name, method))?;
                Ok((vec![path.clone()], counting.calls.load(Ordering::SeqCst)))
            })?;
            let hash = rec.outputs.values().next().cloned().unwrap_or_default();
            evaluated.push((d.clone(), method, path, hash));
        }
    }

    // analyze
    let curves_path = out_dir.join("curves.jsonl");
    let analysis_path = out_dir.join("analysis.jsonl");
    let analyze_input = json!({
        "version": TOOL_VERSION,
        "delta": cfg.delta,
        "results": evaluated.iter().map(|(d, m, _, h)| json!([d, m, h])).collect::<Vec<_>>(),
    });
    let analysis = stages.run("analyze", value_hash(&analyze_input), || {
        let entries = evaluated
            .iter()
            .map(|(d, m, path, _)| Ok((d.clone(), *m, read_summary(path)?)))
            .collect::<Result<Vec<_>>>()?;
        let curves = build_curves(&entries)?;
        write_json_lines(&curves_path, &curves)?;
        write_json_lines(&analysis_path, &analyze_curves(&curves, cfg.delta)?)?;
        Ok((vec![curves_path.clone(), analysis_path.clone()], 0))
    })?;

    // simulate
    let simulation_path = out_dir.join("simulation.json");
    let simulation = match &cfg.simulate {
        Some(sim_cfg) => {
            let input = json!({ "version": TOOL_VERSION, "simulate": sim_cfg, "delta": cfg.delta });
            Some(stages.run("simulate", value_hash(&input), || {
                let out = simulate(sim_cfg, cfg.delta)?;
                std::fs::write(&simulation_path, serde_json::to_string_pretty(&out)? + "\n")?;
                Ok((vec![simulation_path.clone()], 0))
            })?)
        }
        None => None,
    };

    // plot
    let report_dir = out_dir.join("report");
    let plot_input = json!({
        "version": TOOL_VERSION,
        "analysis": analysis.outputs,
        "simulation": simulation.as_ref().map(|s| &s.outputs),
    });
    stages.run("plot", value_hash(&plot_input), || {
        let analyses: Vec<CurveAnalysis> = read_source(&analysis_path)?;
        let mut files = emit_report(&analyses, &report_dir)?;
        if simulation.is_some() {
            let out: SimulationOutput = serde_json::from_str(&std::fs::read_to_string(&simulation_path)?)?;
            files.push(emit_simulation_plot(&out.simulation, &out.composed_shape.to_string(), &report_dir)?);
        }
        Ok((files, 0))
    })?;

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        stages: stages.records,
        started_at,
        finished_at: now(),
    };
    std::fs::write(out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Curves written by a finished run.
pub fn load_curves(out_dir: &Path) -> Result<Vec<ScalingCurve>> {
    read_source(&out_dir.join("curves.jsonl"))
}
