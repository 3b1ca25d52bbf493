use anyhow::{bail, ensure, Context, Result};
use negscale::analysis::{LinearSpec, SigmoidSpec, DEFAULT_DELTA};
use negscale::eval::PromptMethod;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Parameters of an end-to-end run, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// LAMA-style source records (JSON lines).
    #[serde(default)]
    pub lama: Option<PathBuf>,
    /// OBQA-style source records (JSON lines).
    #[serde(default)]
    pub obqa: Option<PathBuf>,
    /// JSON array of backend descriptors.
    pub backends: PathBuf,
    pub methods: Vec<PromptMethod>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub cache_dir: PathBuf,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub output_dir: PathBuf,
    #[serde(default = "default_cap")]
    pub per_file_cap: usize,
    #[serde(default = "default_cap")]
    pub per_type: usize,
    #[serde(default)]
    pub misprime: bool,
    #[serde(default = "default_error_fraction")]
    pub max_error_fraction: f64,
    #[serde(default = "default_new_tokens")]
    pub max_new_tokens: usize,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// `start:stop:step`, stop inclusive.
    pub grid: String,
    pub mu: f64,
    pub tau: f64,
    #[serde(default = "default_t1_start")]
    pub t1_start: f64,
    #[serde(default = "default_t1_end")]
    pub t1_end: f64,
}

impl SimulateConfig {
    pub fn specs(&self) -> (LinearSpec, SigmoidSpec) {
        (
            LinearSpec {
                start: self.t1_start,
                end: self.t1_end,
            },
            SigmoidSpec {
                mu: self.mu,
                tau: self.tau,
            },
        )
    }
}

fn default_concurrency() -> usize {
    4
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_cap() -> usize {
    50
}
fn default_error_fraction() -> f64 {
    0.05
}
fn default_new_tokens() -> usize {
    128
}
fn default_t1_start() -> f64 {
    LinearSpec::default().start
}
fn default_t1_end() -> f64 {
    LinearSpec::default().end
}

impl RunConfig {
    /// Reads and validates `path`. Relative paths in the file are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.lama, &mut self.obqa].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.backends);
        fix(&mut self.cache_dir);
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.lama.is_some() || self.obqa.is_some(),
            "config needs at least one of `lama` or `obqa`"
        );
        for p in [&self.lama, &self.obqa].into_iter().flatten().chain([&self.backends]) {
            ensure!(p.is_file(), "{} does not exist", p.display());
        }
        ensure!(!self.methods.is_empty(), "config lists no methods");
        ensure!(self.delta > 0.0, "delta must be positive, got {}", self.delta);
        ensure!(self.concurrency >= 1, "concurrency must be at least 1");
        ensure!(
            (0.0..=1.0).contains(&self.max_error_fraction),
            "max_error_fraction must lie in [0, 1]"
        );
        if let Some(sim) = &self.simulate {
            parse_grid(&sim.grid)?;
            ensure!(sim.tau > 0.0, "simulate.tau must be positive");
        }
        Ok(())
    }
}

/// Expands `start:stop:step` into grid points, including `stop` when it lies
/// on the grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        bail!("grid must be start:stop:step, got {spec:?}");
    };
    let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in grid {spec:?}"));
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    ensure!(step > 0.0 && step.is_finite(), "grid step must be positive");
    ensure!(stop > start, "grid stop must exceed start");
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}
