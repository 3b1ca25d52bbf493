use anyhow::{bail, Context, Result};
use negscale::eval::{Backend, BackendDescriptor, CompletionsBackend, RetryPolicy, ScriptedBackend};
use std::path::{Path, PathBuf};

/// Where a backend's responses come from, decoded from its `endpoint`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `script:PATH`, a recorded fixture (relative to the manifest).
    Script(PathBuf),
    /// An `http://` or `https://` completions server.
    Remote(String),
}

impl Endpoint {
    pub fn parse(descriptor: &BackendDescriptor, manifest_dir: &Path) -> Result<Self> {
        let Some(endpoint) = descriptor.endpoint.as_deref() else {
            bail!("backend {} has no endpoint", descriptor.model_name);
        };
        if let Some(path) = endpoint.strip_prefix("script:") {
            let path = Path::new(path);
            Ok(Endpoint::Script(if path.is_relative() {
                manifest_dir.join(path)
            } else {
                path.to_path_buf()
            }))
        } else if endpoint.starts_with("http://") || endpoint.starts_with("https://") {
            Ok(Endpoint::Remote(endpoint.to_string()))
        } else {
            bail!(
                "backend {}: endpoint {endpoint:?} is neither script:PATH nor http(s)://",
                descriptor.model_name
            )
        }
    }
}

pub fn open_backend(descriptor: &BackendDescriptor, manifest_dir: &Path) -> Result<Box<dyn Backend>> {
    match Endpoint::parse(descriptor, manifest_dir)? {
        Endpoint::Script(path) => Ok(Box::new(
            ScriptedBackend::from_path(descriptor.clone(), &path)
                .with_context(|| format!("loading script {}", path.display()))?,
        )),
        Endpoint::Remote(_) => Ok(Box::new(CompletionsBackend::new(
            descriptor.clone(),
            RetryPolicy::default(),
        )?)),
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<BackendDescriptor>> {
    BackendDescriptor::load_manifest(path).with_context(|| format!("loading backend manifest {}", path.display()))
}

pub fn find_backend<'a>(manifest: &'a [BackendDescriptor], name: &str) -> Result<&'a BackendDescriptor> {
    manifest
        .iter()
        .find(|d| d.model_name == name)
        .with_context(|| format!("no backend named {name:?} in manifest"))
}
