use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

/// Everything needed to rerun a report: it is embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub tool_version: &'static str,
    pub backend: &'static str,
    pub config_paths: BTreeMap<&'static str, String>,
    pub seed: Option<u64>,
    pub output_paths: Vec<String>,
}

fn resolve(p: &Path) -> String {
    std::path::absolute(p)
        .unwrap_or_else(|_| p.to_path_buf())
        .display()
        .to_string()
}

impl RunManifest {
    pub fn new(subcommand: &'static str) -> Self {
        RunManifest {
            subcommand,
            tool_version: env!("CARGO_PKG_VERSION"),
            backend: bfly_core::par::backend(),
            config_paths: BTreeMap::new(),
            seed: None,
            output_paths: Vec::new(),
        }
    }

    pub fn config(mut self, name: &'static str, path: &Path) -> Self {
        self.config_paths.insert(name, resolve(path));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn output(mut self, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            self.output_paths.push(resolve(p));
        }
        self
    }

    /// The manifest as a single CSV comment line.
    pub fn csv_line(&self) -> String {
        format!("# manifest: {}\n", serde_json::to_string(self).expect("manifest serializes"))
    }
}
