//! End-to-end runs over scripted backends built in a temp directory.

use negscale::eval::{render_jobs, BackendDescriptor, Capability, PromptMethod, PromptSpec, ScriptEntry};
use negscale::hashing::sha256_hex;
use negscale::transform::{write_jsonl, LamaSourceRecord, LamaSubset, McqRecord};
use negscale_cli::config::RunConfig;
use negscale_cli::pipeline::{file_hash, read_source, run_pipeline, RunManifest};
use std::path::{Path, PathBuf};
use std::process::Command;

const SEED: u64 = 11;
const METHODS: [PromptMethod; 5] = [
    PromptMethod::ZeroShot,
    PromptMethod::ZeroShotHint,
    PromptMethod::Task1Original,
    PromptMethod::Task2SameDifferent,
    PromptMethod::Task2SameDifferentHint,
];
const RANKS: u32 = 4;

fn lama_records() -> Vec<LamaSourceRecord> {
    (0..24)
        .map(|i| LamaSourceRecord {
            original_question: format!("Thing{i} wants?"),
            negated_question: format!("Thing{i} does not want?"),
            answer: format!("answer{i}"),
            misprimed_question: format!("Wrong{i}? Thing{i} wants?"),
            subset: if i % 2 == 0 { LamaSubset::ConceptNet } else { LamaSubset::TREx },
            file_id: format!("file{}", i % 3),
        })
        .collect()
}

fn descriptor(family: &str, rank: u32) -> BackendDescriptor {
    BackendDescriptor {
        family: family.into(),
        model_name: format!("{family}-{rank}"),
        param_count: Some(10u64.pow(8 + rank)),
        scale_rank: rank,
        endpoint: Some(format!("script:scripts/{family}-{rank}.jsonl")),
        capability: Capability::RankChoices,
    }
}

/// Whether the scripted model answers `record_id` correctly. Roughly `target`
/// of the questions are answered correctly.
fn answers_correctly(model: &str, method: PromptMethod, record_id: &str, target: f64) -> bool {
    let h = sha256_hex(format!("{model}/{method}/{record_id}"));
    (u64::from_str_radix(&h[..8], 16).unwrap() as f64 / u32::MAX as f64) < target
}

fn target(method: PromptMethod, rank: u32) -> f64 {
    let r = rank as f64 / (RANKS - 1) as f64;
    match method {
        PromptMethod::Task1Original => 0.5 + 0.4 * r,
        PromptMethod::Task2SameDifferent | PromptMethod::Task2SameDifferentHint => {
            if r > 0.5 {
                0.95
            } else {
                0.5
            }
        }
        _ => 0.6 - 0.3 * r,
    }
}

struct Fixture {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Fixture {
    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn load(&self) -> RunConfig {
        RunConfig::load(&self.config).unwrap()
    }

    fn out(&self) -> PathBuf {
        self.path("out")
    }
}

/// Writes sources, a manifest of two families, a script per model covering
/// every prompt the pipeline will send, and a config. Scripts are rendered
/// from the dataset of a first pipeline-independent generation.
fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_jsonl(std::fs::File::create(root.join("lama.jsonl")).unwrap(), &lama_records()).unwrap();

    let config = root.join("run.toml");
    std::fs::write(
        &config,
        format!(
            r#"
seed = {SEED}
lama = "lama.jsonl"
backends = "backends.json"
methods = ["zeroshot", "hint", "task1", "task2", "task2hint"]
concurrency = 3
cache_dir = "cache"
output_dir = "out"

[simulate]
grid = "0:5:0.1"
mu = 2.5
tau = 0.3
"#
        ),
    )
    .unwrap();
    let descriptors: Vec<BackendDescriptor> = ["Alpha", "Beta"]
        .iter()
        .flat_map(|f| (0..RANKS).map(|r| descriptor(f, r)))
        .collect();
    std::fs::write(root.join("backends.json"), serde_json::to_string_pretty(&descriptors).unwrap()).unwrap();

    let cfg = RunConfig::load(&config).unwrap();
    let dataset = negscale_cli::pipeline::generate_dataset(&cfg).unwrap();
    std::fs::create_dir_all(root.join("scripts")).unwrap();
    for d in &descriptors {
        let mut entries = Vec::new();
        for method in METHODS {
            for job in render_jobs(&dataset, &PromptSpec::for_method(method), SEED) {
                let ok = answers_correctly(&d.model_name, method, &job.record_id, target(method, d.scale_rank));
                let picked = if ok { job.gold_index } else { 1 - job.gold_index };
                let mut scores = [-2.0, -2.0];
                scores[picked] = -0.5;
                entries.push(ScriptEntry::scores(&job.prompt, scores[0], scores[1]));
            }
        }
        let path = root.join(format!("scripts/{}.jsonl", d.model_name));
        write_jsonl(std::fs::File::create(path).unwrap(), &entries).unwrap();
    }
    Fixture { dir, config }
}

fn expected_accuracy(dataset: &[McqRecord], model: &str, method: PromptMethod, rank: u32) -> f64 {
    let correct = dataset
        .iter()
        .filter(|r| answers_correctly(model, method, &r.id, target(method, rank)))
        .count();
    correct as f64 / dataset.len() as f64
}

fn on_disk_hashes(out: &Path, m: &RunManifest) -> Vec<(String, String)> {
    m.output_hashes()
        .keys()
        .map(|rel| (rel.clone(), file_hash(&out.join(rel)).unwrap()))
        .collect()
}

#[test]
fn full_run_then_rerun_is_free_and_identical() {
    let fx = fixture();
    let cfg = fx.load();
    let first = run_pipeline(&cfg).unwrap();

    let dataset: Vec<McqRecord> = read_source(&fx.out().join("dataset.jsonl")).unwrap();
    assert_eq!(dataset.len(), 24);
    let n_eval = 2 * RANKS as usize * METHODS.len();
    assert_eq!(first.stages.len(), 1 + n_eval + 3);
    assert_eq!(first.backend_calls(), n_eval * dataset.len());
    assert!(first.stages.iter().all(|s| !s.skipped));

    // Every output is listed with the hash of what is on disk.
    for (rel, hash) in on_disk_hashes(&fx.out(), &first) {
        assert_eq!(first.output_hashes()[&rel], hash, "{rel}");
    }
    for f in ["report/accuracies.csv", "report/summary.txt", "report/scaling_alpha.svg", "report/scaling_beta.svg", "report/simulation.svg"] {
        assert!(first.output_hashes().contains_key(f), "{f} missing from manifest");
    }

    // Accuracies match an independent count over the dataset.
    let curves = negscale_cli::pipeline::load_curves(&fx.out()).unwrap();
    assert_eq!(curves.len(), 2 * METHODS.len());
    for c in &curves {
        let method: PromptMethod = c.method.parse().unwrap();
        for p in &c.points {
            let model = format!("{}-{}", c.family, p.scale_rank);
            let want = expected_accuracy(&dataset, &model, method, p.scale_rank);
            assert_eq!(p.accuracy, want, "{model} {method}");
        }
    }

    let second = run_pipeline(&cfg).unwrap();
    assert_eq!(second.backend_calls(), 0);
    assert!(second.executed().is_empty(), "{:?}", second.executed());
    assert_eq!(second.output_hashes(), first.output_hashes());
    assert_eq!(
        RunManifest::load(&fx.out()).unwrap().output_hashes(),
        first.output_hashes()
    );
}

#[test]
fn fresh_directories_reproduce_output_bytes() {
    let fx = fixture();
    let cfg = fx.load();
    let first = run_pipeline(&cfg).unwrap();

    let mut other = cfg.clone();
    other.output_dir = fx.path("out2");
    other.cache_dir = fx.path("cache2");
    let second = run_pipeline(&other).unwrap();
    assert!(second.backend_calls() > 0);
    assert_eq!(second.output_hashes(), first.output_hashes());
}

#[test]
fn corrupt_results_file_reruns_only_its_stage() {
    let fx = fixture();
    let cfg = fx.load();
    let first = run_pipeline(&cfg).unwrap();

    let target = fx.out().join("results/beta-2__task2.jsonl");
    let mut text = std::fs::read_to_string(&target).unwrap();
    text.insert_str(0, "garbage\n");
    std::fs::write(&target, text).unwrap();

    let again = run_pipeline(&cfg).unwrap();
    assert_eq!(again.executed(), ["evaluate/Beta-2/task2"]);
    // Served from the response cache.
    assert_eq!(again.backend_calls(), 0);
    assert_eq!(again.output_hashes(), first.output_hashes());
}

#[test]
fn only_stages_with_changed_inputs_rerun() {
    let fx = fixture();
    let cfg = fx.load();
    let first = run_pipeline(&cfg).unwrap();

    let mut other = cfg.clone();
    other.simulate.as_mut().unwrap().mu = 4.0;
    let again = run_pipeline(&other).unwrap();
    assert_eq!(again.executed(), ["simulate", "plot"]);

    // A source record that cannot become a question changes the source hash
    // but not the dataset bytes, so nothing past generate reruns.
    let mut records = lama_records();
    records.push(LamaSourceRecord {
        misprimed_question: "Answer0? Thing0 wants?".into(),
        ..records[0].clone()
    });
    write_jsonl(std::fs::File::create(fx.path("lama.jsonl")).unwrap(), &records).unwrap();
    let again = run_pipeline(&cfg).unwrap();
    assert_eq!(again.executed(), ["generate", "simulate", "plot"]);
    assert_eq!(again.backend_calls(), 0);
    assert_eq!(again.output_hashes(), first.output_hashes());
}

#[test]
fn missing_script_entry_names_the_stage() {
    let fx = fixture();
    std::fs::write(fx.path("scripts/Alpha-1.jsonl"), "").unwrap();
    let err = run_pipeline(&fx.load()).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("evaluate/Alpha-1/zeroshot"), "{msg}");
}

fn negscale() -> Command {
    Command::new(env!("CARGO_BIN_EXE_negscale"))
}

#[test]
fn binary_run_and_exit_codes() {
    let fx = fixture();
    let status = negscale().arg("run").arg("--config").arg(&fx.config).status().unwrap();
    assert!(status.success());
    assert!(fx.out().join("run_manifest.json").is_file());

    let status = negscale()
        .args(["run", "--config"])
        .arg(fx.path("missing.toml"))
        .status()
        .unwrap();
    assert!(!status.success());

    let out = fx.path("sim");
    let status = negscale()
        .args(["simulate", "--grid", "0:5:0.1", "--mu", "2.5", "--tau", "0.3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("simulation.json").is_file() && out.join("simulation.svg").is_file());

    let status = negscale()
        .args(["plot", "--analysis"])
        .arg(fx.out().join("analysis.jsonl"))
        .arg("--simulation")
        .arg(out.join("simulation.json"))
        .arg("--out")
        .arg(fx.path("plots"))
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(fx.path("plots/accuracies.csv")).unwrap(),
        std::fs::read(fx.out().join("report/accuracies.csv")).unwrap()
    );
}

#[test]
fn binary_single_stage_commands() {
    let fx = fixture();
    let data = fx.path("data.jsonl");
    let status = negscale()
        .args(["generate", "--source", "lama", "--seed", &SEED.to_string(), "--in"])
        .arg(fx.path("lama.jsonl"))
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    let dataset: Vec<McqRecord> = read_source(&data).unwrap();
    assert_eq!(dataset.len(), 24);

    let results = fx.path("alpha3-task1.jsonl");
    let status = negscale()
        .args(["evaluate", "--backend", "Alpha-3", "--method", "task1", "--seed", &SEED.to_string(), "--manifest"])
        .arg(fx.path("backends.json"))
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(&results)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = negscale_cli::results::read_summary(&results).unwrap();
    assert_eq!(
        summary.accuracy,
        expected_accuracy(&dataset, "Alpha-3", PromptMethod::Task1Original, 3)
    );

    let status = negscale()
        .args(["evaluate", "--backend", "Nope", "--method", "task1", "--manifest"])
        .arg(fx.path("backends.json"))
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(fx.path("x.jsonl"))
        .status()
        .unwrap();
    assert!(!status.success());
}
