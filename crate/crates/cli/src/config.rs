//! JSON run configuration.
//!
//! Minimal example:
//!
//! ```json
//! {
//!   "master_seed": 7,
//!   "networks": [
//!     { "name": "citeseer", "family": "citation", "path": "data/citeseer.edges" },
//!     { "name": "ba", "family": "social",
//!       "synthetic": { "model": "barabasi_albert", "m": 4 }, "n": 2000 }
//!   ]
//! }
//! ```
//!
//! Everything else has a default. `models` entries are partial model specs:
//! `{"kind": "gbm", "n_rounds": 50}` fills the remaining fields from the
//! defaults of that kind.

use std::path::{Path, PathBuf};

use keynode::diffusion::{NetworkFamily, TaskId, ThresholdSet};
use keynode::graph::SyntheticModel;
use keynode::labeling::{BinMethod, BinSpec, DEFAULT_K_MAX, DEFAULT_MIN_BIN_SIZE, DEFAULT_TOP_FRACTION};
use keynode::models::{ModelKind, ModelSpec};
use keynode::rng::stable_hash;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CACHE_ENV: &str = "KEYNODE_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub name: String,
    pub family: NetworkFamily,
    /// Edge-list file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Generated graph instead of a file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_seed: Option<u64>,
    /// Defaults to true for citation networks, false for social ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directed: Option<bool>,
    #[serde(default)]
    pub skip_header: bool,
    /// Overrides the family thresholds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

impl NetworkConfig {
    pub fn is_directed(&self) -> bool {
        self.directed.unwrap_or(self.family != NetworkFamily::Social)
    }

    pub fn threshold_set(&self) -> CliResult<ThresholdSet> {
        let set = match &self.thresholds {
            Some(v) => ThresholdSet {
                values: v.clone(),
                family: self.family,
            },
            None => ThresholdSet::for_family(self.family).ok_or_else(|| {
                CliError::Config(format!("network {}: custom family needs explicit thresholds", self.name))
            })?,
        };
        set.validate()
            .map_err(|e| CliError::Config(format!("network {}: {e}", self.name)))?;
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportanceConfig {
    /// Defaults to the first social network, else the first network.
    #[serde(default)]
    pub network: Option<String>,
    #[serde(default = "default_importance_task")]
    pub task: TaskId,
    /// Defaults to the smallest `select_k` over the threshold groups.
    #[serde(default)]
    pub k: Option<usize>,
    /// Index into `models`.
    #[serde(default)]
    pub model: usize,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_background")]
    pub background_size: usize,
}

fn default_importance_task() -> TaskId {
    TaskId::InfluenceRange
}
fn default_sample_size() -> usize {
    keynode::importance::DEFAULT_SAMPLE_SIZE
}
fn default_permutations() -> usize {
    keynode::importance::DEFAULT_PERMUTATIONS
}
fn default_background() -> usize {
    keynode::importance::DEFAULT_BACKGROUND_SIZE
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            network: None,
            task: default_importance_task(),
            k: None,
            model: 0,
            sample_size: default_sample_size(),
            permutations: default_permutations(),
            background_size: default_background(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub networks: Vec<NetworkConfig>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_min_bin")]
    pub min_bin_size: usize,
    #[serde(default = "default_methods")]
    pub binning: Vec<BinMethod>,
    #[serde(default = "default_top_fraction")]
    pub fixed_top_fraction: f64,
    #[serde(default = "default_models")]
    pub models: Vec<serde_json::Value>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<TaskId>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Ordered `[train, test]` pairs; every ordered pair when absent.
    #[serde(default)]
    pub cross_pairs: Option<Vec<(String, String)>>,
    #[serde(default)]
    pub importance: ImportanceConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_cache")]
    pub cache_dir: PathBuf,
}

fn default_runs() -> usize {
    100
}
fn default_k_values() -> Vec<usize> {
    vec![2, 3, 4, 5]
}
fn default_k_max() -> usize {
    DEFAULT_K_MAX
}
fn default_min_bin() -> usize {
    DEFAULT_MIN_BIN_SIZE
}
fn default_methods() -> Vec<BinMethod> {
    vec![BinMethod::SmartKmeans, BinMethod::FixedTopPercent]
}
fn default_top_fraction() -> f64 {
    DEFAULT_TOP_FRACTION
}
fn default_models() -> Vec<serde_json::Value> {
    vec![serde_json::json!({ "kind": "gbm" })]
}
fn default_tasks() -> Vec<TaskId> {
    TaskId::ALL.to_vec()
}
fn default_trials() -> usize {
    keynode::evaluation::DEFAULT_TRIALS
}
fn default_output() -> PathBuf {
    PathBuf::from("keynode-out")
}
fn default_cache() -> PathBuf {
    PathBuf::from("keynode-cache")
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub runs: Option<usize>,
    pub trials: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads, applies environment and flag overrides, resolves relative
    /// paths against the config file's directory and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for net in &mut cfg.networks {
            if let Some(p) = &net.path {
                if p.is_relative() {
                    net.path = Some(base.join(p));
                }
            }
        }
        if let Ok(dir) = std::env::var(CACHE_ENV) {
            if !dir.is_empty() {
                cfg.cache_dir = PathBuf::from(dir);
            }
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.master_seed {
            self.master_seed = s;
        }
        if let Some(r) = o.runs {
            self.runs = r;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(d) = &o.cache_dir {
            self.cache_dir = d.clone();
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.networks.is_empty() {
            return bad("no networks configured".into());
        }
        let mut names: Vec<&str> = self.networks.iter().map(|n| n.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("network names must be unique".into());
        }
        for net in &self.networks {
            if net.name.is_empty() || !net.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("network name {:?} must be [A-Za-z0-9_-]+", net.name));
            }
            match (&net.path, &net.synthetic) {
                (Some(p), None) => {
                    if !p.is_file() {
                        return bad(format!("network {}: edge list {} does not exist", net.name, p.display()));
                    }
                }
                (None, Some(_)) => {
                    if net.n.unwrap_or(0) == 0 {
                        return bad(format!("network {}: synthetic graphs need n >= 1", net.name));
                    }
                }
                _ => return bad(format!("network {}: give exactly one of path or synthetic", net.name)),
            }
            net.threshold_set()?;
        }
        if self.runs == 0 || self.trials == 0 {
            return bad("runs and trials must be at least 1".into());
        }
        if self.k_values.is_empty() || self.tasks.is_empty() || self.models.is_empty() {
            return bad("k_values, tasks and models must be nonempty".into());
        }
        for &k in &self.k_values {
            BinSpec::smart(k).validate(self.k_max).map_err(|e| CliError::Config(e.to_string()))?;
        }
        BinSpec::fixed_top(self.fixed_top_fraction)
            .validate(self.k_max)
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.model_specs()?;
        if let Some(pairs) = &self.cross_pairs {
            for (a, b) in pairs {
                for name in [a, b] {
                    if self.network(name).is_none() {
                        return bad(format!("cross pair names unknown network {name:?}"));
                    }
                }
            }
        }
        let imp = &self.importance;
        if let Some(name) = &imp.network {
            if self.network(name).is_none() {
                return bad(format!("importance names unknown network {name:?}"));
            }
        }
        if imp.model >= self.models.len() {
            return bad(format!("importance model index {} out of range", imp.model));
        }
        if let Some(k) = imp.k {
            BinSpec::smart(k).validate(self.k_max).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if imp.sample_size == 0 || imp.permutations == 0 || imp.background_size == 0 {
            return bad("importance sizes must be at least 1".into());
        }
        Ok(())
    }

    pub fn network(&self, name: &str) -> Option<&NetworkConfig> {
        self.networks.iter().find(|n| n.name == name)
    }

    /// Fully specified models; unset seeds derive from the master seed.
    pub fn model_specs(&self) -> CliResult<Vec<ModelSpec>> {
        self.models
            .iter()
            .enumerate()
            .map(|(i, partial)| {
                let obj = partial
                    .as_object()
                    .ok_or_else(|| CliError::Config(format!("models[{i}] is not an object")))?;
                let kind: ModelKind = obj
                    .get("kind")
                    .and_then(|k| k.as_str())
                    .ok_or_else(|| CliError::Config(format!("models[{i}] lacks a kind")))?
                    .parse()
                    .map_err(|e: keynode::Error| CliError::Config(format!("models[{i}]: {e}")))?;
                let base = ModelSpec::new(kind, stable_hash(self.master_seed, &[0x40D3, i as u64]));
                let mut full = serde_json::to_value(&base).expect("model specs serialize");
                if let Some(key) = obj.keys().find(|k| full.get(k.as_str()).is_none()) {
                    return Err(CliError::Config(format!("models[{i}]: unknown field {key:?} for {kind}")));
                }
                for (key, v) in obj {
                    full[key] = v.clone();
                }
                let spec: ModelSpec = serde_json::from_value(full)
                    .map_err(|e| CliError::Config(format!("models[{i}]: {e}")))?;
                spec.params
                    .validate()
                    .map_err(|e| CliError::Config(format!("models[{i}]: {e}")))?;
                Ok(spec)
            })
            .collect()
    }

    /// Label specs produced by the label stage.
    pub fn bin_specs(&self) -> Vec<BinSpec> {
        let mut out = Vec::new();
        for &method in &self.binning {
            if method == BinMethod::FixedTopPercent {
                out.push(BinSpec::fixed_top(self.fixed_top_fraction));
            } else {
                out.extend(self.k_values.iter().map(|&k| BinSpec { method, k, param: None }));
            }
        }
        if !out.iter().any(|s| s.method == BinMethod::SmartKmeans && s.k == 2) {
            // the binning comparison always needs smart k=2
            out.push(BinSpec::smart(2));
        }
        out
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        match &self.cross_pairs {
            Some(p) => p.clone(),
            None => {
                let mut out = Vec::new();
                for a in &self.networks {
                    for b in &self.networks {
                        if a.name != b.name {
                            out.push((a.name.clone(), b.name.clone()));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn importance_network(&self) -> &NetworkConfig {
        match &self.importance.network {
            Some(name) => self.network(name).expect("validated"),
            None => self
                .networks
                .iter()
                .find(|n| n.family == NetworkFamily::Social)
                .unwrap_or(&self.networks[0]),
        }
    }
}
