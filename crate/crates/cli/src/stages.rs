//! Pipeline stages and their cache keys.
//!
//! Per network: ingest -> centrality -> featurize, ingest -> simulate ->
//! label; train, evaluate and compare-bins read labels and features.
//! generalize runs per ordered network pair and importance on one network.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::rc::Rc;

use anyhow::Context;
use keynode::centrality::{compute_all_centralities, read_centralities_csv, write_centralities_csv, CentralityMeta};
use keynode::diffusion::{read_records_csv, simulate_all, write_records_csv, SimulationMeta, SimulationRecord, TaskId};
use keynode::evaluation::{
    compare_label_sets, cross_network_eval, evaluate_labels, label_records, write_reports_csv, BinningComparison,
    EvalOptions, EvalReport, LabelMode, NetworkDataset, TaskLabels,
};
use keynode::features::{fit_standardizer, write_features_csv, Standardizer};
use keynode::graph::{generate_synthetic, load_edge_list_with, EdgeListOptions, Graph};
use keynode::importance::{importance_report, ImportanceOptions, ImportanceReport};
use keynode::labeling::{select_k, write_labels_csv, BinMethod, BinSpec, LabelGroupMeta};
use keynode::models::{train, ModelSpec, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::cache::{file_sha256, Cache, StageKey, StageRun};
use crate::config::{NetworkConfig, RunConfig};
use crate::error::{CliError, CliResult};

/// Stage names in execution order.
pub const STAGES: [&str; 10] = [
    "ingest",
    "centrality",
    "simulate",
    "featurize",
    "label",
    "train",
    "evaluate",
    "compare-bins",
    "generalize",
    "importance",
];

const INGEST_VERSION: u32 = 1;
const CENTRALITY_VERSION: u32 = 1;
const SIMULATE_VERSION: u32 = 1;
const FEATURIZE_VERSION: u32 = 1;
const LABEL_VERSION: u32 = 1;
const TRAIN_VERSION: u32 = 1;
const EVALUATE_VERSION: u32 = 1;
const COMPARE_VERSION: u32 = 1;
const GENERALIZE_VERSION: u32 = 1;
const IMPORTANCE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Upstream stages are computed when missing.
    Pipeline,
    /// Upstream stages must already be cached.
    Single,
}

/// Graph file written by ingest. Keeps isolated nodes and ids exactly.
#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    directed: bool,
    checksum: String,
    #[serde(default)]
    names: Option<Vec<String>>,
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelEntry {
    pub task: TaskId,
    pub spec: BinSpec,
    /// None when the labeling could not be produced.
    pub file: Option<String>,
    pub skipped: Option<String>,
    pub top_shares: Vec<f64>,
    pub groups: Vec<LabelGroupMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell<T> {
    pub task: TaskId,
    pub k: usize,
    pub model: usize,
    pub result: Option<T>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEntry {
    pub task: TaskId,
    pub k: usize,
    pub model: usize,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceArtifact {
    pub network: String,
    pub task: TaskId,
    pub k: usize,
    pub model: usize,
    pub report: ImportanceReport,
}

pub fn label_file(task: TaskId, spec: &BinSpec) -> String {
    format!("labels_{}_{}_k{}", task.name(), spec.method.name(), spec.k)
}

fn model_file(task: TaskId, k: usize, model: usize) -> String {
    format!("model_{}_k{}_m{}.json", task.name(), k, model)
}

fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> anyhow::Result<String> {
    let bytes = serde_json::to_vec_pretty(value)?;
    fs::write(dir.join(file), bytes).with_context(|| format!("writing {file}"))?;
    Ok(file.to_owned())
}

fn create(dir: &Path, file: &str) -> anyhow::Result<BufWriter<fs::File>> {
    let f = fs::File::create(dir.join(file)).with_context(|| format!("creating {file}"))?;
    Ok(BufWriter::new(f))
}

/// Errors that make one grid cell unusable without failing the stage.
fn cell_skip(e: &keynode::Error) -> bool {
    matches!(
        e,
        keynode::Error::Split(_)
            | keynode::Error::Evaluation(_)
            | keynode::Error::Degenerate(_)
            | keynode::Error::Training(_)
    )
}

pub struct Pipeline<'a> {
    pub cfg: &'a RunConfig,
    pub cache: Cache,
    pub mode: Mode,
    runs: RefCell<BTreeMap<(usize, String), StageRun>>,
    datasets: RefCell<BTreeMap<String, Rc<NetworkDataset>>>,
    records: RefCell<BTreeMap<String, Rc<Vec<SimulationRecord>>>>,
    model_specs: Vec<ModelSpec>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a RunConfig, mode: Mode) -> CliResult<Self> {
        Ok(Pipeline {
            cfg,
            cache: Cache::new(&cfg.cache_dir),
            mode,
            runs: RefCell::new(BTreeMap::new()),
            datasets: RefCell::new(BTreeMap::new()),
            records: RefCell::new(BTreeMap::new()),
            model_specs: cfg.model_specs()?,
        })
    }

    /// Every stage run touched so far, in stage order then scope.
    pub fn runs(&self) -> Vec<StageRun> {
        self.runs.borrow().values().cloned().collect()
    }

    fn obtain<F>(&self, k: StageKey, requester: Option<&'static str>, compute: F) -> CliResult<StageRun>
    where
        F: FnOnce(&Path) -> anyhow::Result<Vec<String>>,
    {
        let order = STAGES.iter().position(|s| *s == k.stage).expect("known stage");
        let memo = (order, k.scope.to_owned());
        if let Some(run) = self.runs.borrow().get(&memo) {
            return Ok(run.clone());
        }
        let run = match (self.mode, requester) {
            (Mode::Single, Some(by)) => self
                .cache
                .lookup(&k)
                .map_err(|e| CliError::stage(k.stage, e))?
                .ok_or_else(|| CliError::Dependency {
                    stage: by,
                    missing: format!("{} [{}]", k.stage, k.scope),
                })?,
            _ => self.cache.run(&k, compute).map_err(|e| CliError::stage(k.stage, e))?,
        };
        self.runs.borrow_mut().insert(memo, run.clone());
        Ok(run)
    }

    fn net(&self, name: &str) -> &'a NetworkConfig {
        self.cfg.network(name).expect("validated network name")
    }

    // -----------------------------------------------------------------------

    pub fn ingest(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let net = self.net(name);
        let source = match (&net.path, &net.synthetic) {
            (Some(p), _) => {
                let sum = file_sha256(p).map_err(|e| CliError::stage("ingest", e))?;
                serde_json::json!({ "file_sha256": sum, "skip_header": net.skip_header })
            }
            (None, Some(model)) => serde_json::json!({
                "synthetic": model,
                "n": net.n,
                "graph_seed": net.graph_seed.unwrap_or(self.cfg.master_seed),
            }),
            (None, None) => unreachable!("validated"),
        };
        let key = StageKey {
            stage: "ingest",
            scope: name,
            version: INGEST_VERSION,
            params: serde_json::json!({ "source": source, "directed": net.is_directed() }),
            upstream: vec![],
        };
        self.obtain(key, requester, |dir| {
            let g = match (&net.path, &net.synthetic) {
                (Some(p), _) => load_edge_list_with(
                    p,
                    &EdgeListOptions {
                        directed: net.is_directed(),
                        skip_header: net.skip_header,
                    },
                )?,
                (None, Some(model)) => {
                    let g = generate_synthetic(
                        *model,
                        net.n.unwrap_or(0),
                        net.graph_seed.unwrap_or(self.cfg.master_seed),
                    )?;
                    if net.directed.is_some() && g.is_directed() != net.is_directed() {
                        log::warn!("{name}: synthetic model fixes directedness, ignoring the directed flag");
                    }
                    g
                }
                (None, None) => unreachable!(),
            };
            log::info!("{name}: {} nodes, {} arcs", g.n(), g.arc_count());
            let file = GraphFile {
                n: g.n(),
                directed: g.is_directed(),
                checksum: g.checksum(),
                names: g.node_names().map(<[String]>::to_vec),
                edges: g.arcs().filter(|&(u, v)| g.is_directed() || u < v).collect(),
            };
            Ok(vec![write_json(dir, "graph.json", &file)?])
        })
    }

    pub fn graph(&self, name: &str, requester: &'static str) -> CliResult<Graph> {
        let run = self.ingest(name, Some(requester))?;
        let load = || -> anyhow::Result<Graph> {
            let f: GraphFile = run.read_json("graph.json")?;
            let mut g = Graph::from_edges(f.n, f.edges, f.directed)?;
            if let Some(names) = f.names {
                g = g.with_names(names)?;
            }
            anyhow::ensure!(g.checksum() == f.checksum, "graph checksum mismatch");
            Ok(g)
        };
        load().map_err(|e| CliError::stage(requester, e))
    }

    pub fn centrality(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let up = self.ingest(name, Some("centrality"))?;
        let key = StageKey {
            stage: "centrality",
            scope: name,
            version: CENTRALITY_VERSION,
            params: serde_json::json!({}),
            upstream: vec![up.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let g = self.graph(name, "centrality")?;
        self.obtain(key, requester, |dir| {
            let maps = compute_all_centralities(&g)?;
            write_centralities_csv(&maps, create(dir, "centralities.csv")?)?;
            Ok(vec![
                "centralities.csv".into(),
                write_json(dir, "centrality.json", &CentralityMeta::new(&g))?,
            ])
        })
    }

    /// A finished run that can be reused without loading upstream data.
    fn cached_or_memo(&self, key: &StageKey) -> CliResult<Option<StageRun>> {
        let order = STAGES.iter().position(|s| *s == key.stage).expect("known stage");
        if let Some(run) = self.runs.borrow().get(&(order, key.scope.to_owned())) {
            return Ok(Some(run.clone()));
        }
        let hit = self.cache.lookup(key).map_err(|e| CliError::stage(key.stage, e))?;
        if let Some(run) = &hit {
            log::info!("{} [{}]: cache hit {}", key.stage, key.scope, run.index.key);
            self.runs.borrow_mut().insert((order, key.scope.to_owned()), run.clone());
        }
        Ok(hit)
    }

    pub fn simulate(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let net = self.net(name);
        let thresholds = net.threshold_set()?;
        let up = self.ingest(name, Some("simulate"))?;
        let key = StageKey {
            stage: "simulate",
            scope: name,
            version: SIMULATE_VERSION,
            params: serde_json::json!({
                "thresholds": thresholds.values,
                "runs": self.cfg.runs,
                "master_seed": self.cfg.master_seed,
            }),
            upstream: vec![up.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let g = self.graph(name, "simulate")?;
        let runs = self.cfg.runs;
        let seed = self.cfg.master_seed;
        self.obtain(key, requester, |dir| {
            let step = AtomicStep::new();
            let progress = |done: usize, total: usize| {
                if let Some(pct) = step.advance(done, total) {
                    log::info!("simulate [{name}]: {pct}% ({done}/{total})");
                }
            };
            let records = simulate_all(&g, &thresholds, runs, seed, Some(&progress))?;
            write_records_csv(&records, create(dir, "records.csv")?)?;
            Ok(vec![
                "records.csv".into(),
                write_json(dir, "simulation.json", &SimulationMeta::new(&g, &thresholds, runs, seed))?,
            ])
        })
    }

    pub fn featurize(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let net = self.net(name);
        let thresholds = net.threshold_set()?;
        let up = self.centrality(name, Some("featurize"))?;
        let key = StageKey {
            stage: "featurize",
            scope: name,
            version: FEATURIZE_VERSION,
            params: serde_json::json!({ "thresholds": thresholds.values }),
            upstream: vec![up.checksum.clone()],
        };
        self.obtain(key, requester, |dir| {
            let maps = read_centralities_csv(fs::File::open(up.path("centralities.csv"))?)?;
            let x = keynode::features::assemble_features(&maps, &thresholds)?;
            write_features_csv(&x, create(dir, "features.csv")?)?;
            let scaler = fit_standardizer(&x)?;
            Ok(vec!["features.csv".into(), write_json(dir, "scaler.json", &scaler)?])
        })
    }

    /// Simulation records of one network, loaded once.
    pub fn records(&self, name: &str, requester: &'static str) -> CliResult<Rc<Vec<SimulationRecord>>> {
        let sim = self.simulate(name, Some(requester))?;
        if let Some(r) = self.records.borrow().get(&sim.checksum) {
            return Ok(r.clone());
        }
        let load = || -> anyhow::Result<Vec<SimulationRecord>> {
            Ok(read_records_csv(fs::File::open(sim.path("records.csv"))?)?)
        };
        let recs = Rc::new(load().map_err(|e| CliError::stage(requester, e))?);
        self.records.borrow_mut().insert(sim.checksum.clone(), recs.clone());
        Ok(recs)
    }

    /// Raw records and features of one network, loaded once.
    pub fn dataset(&self, name: &str, requester: &'static str) -> CliResult<Rc<NetworkDataset>> {
        let sim = self.simulate(name, Some(requester))?;
        let cent = self.centrality(name, Some(requester))?;
        let memo = format!("{}:{}", sim.checksum, cent.checksum);
        if let Some(ds) = self.datasets.borrow().get(&memo) {
            return Ok(ds.clone());
        }
        let net = self.net(name);
        let records = self.records(name, requester)?;
        let load = || -> anyhow::Result<NetworkDataset> {
            let records = records.as_ref().clone();
            let maps = read_centralities_csv(fs::File::open(cent.path("centralities.csv"))?)?;
            Ok(NetworkDataset::from_parts(
                name,
                net.family,
                net.threshold_set().map_err(|e| anyhow::anyhow!("{e}"))?,
                records,
                &maps,
            )?)
        };
        let ds = Rc::new(load().map_err(|e| CliError::stage(requester, e))?);
        self.datasets.borrow_mut().insert(memo, ds.clone());
        Ok(ds)
    }

    /// k used by the importance stage.
    pub fn importance_k(&self, requester: &'static str) -> CliResult<usize> {
        let imp = &self.cfg.importance;
        if let Some(k) = imp.k {
            return Ok(k);
        }
        let net = self.cfg.importance_network();
        let thresholds = net.threshold_set()?;
        let records = self.records(&net.name, requester)?;
        let t = thresholds.len();
        let mut best: Option<usize> = None;
        for (ti, p) in thresholds.values.iter().enumerate() {
            let values: Vec<f64> = records.iter().skip(ti).step_by(t).map(|r| imp.task.value(r)).collect();
            match select_k(&values, self.cfg.k_max, self.cfg.min_bin_size) {
                Ok(k) => best = Some(best.map_or(k, |b: usize| b.min(k))),
                Err(e) => log::warn!("importance k selection at threshold {p}: {e}"),
            }
        }
        Ok(best.unwrap_or(2))
    }

    fn label_specs(&self, name: &str, requester: &'static str) -> CliResult<Vec<(TaskId, BinSpec)>> {
        let mut specs: Vec<(TaskId, BinSpec)> = Vec::new();
        for &task in &self.cfg.tasks {
            for spec in self.cfg.bin_specs() {
                specs.push((task, spec));
            }
        }
        if self.cfg.importance_network().name == name {
            let k = self.importance_k(requester)?;
            let extra = (self.cfg.importance.task, BinSpec::smart(k));
            if !specs.contains(&extra) {
                specs.push(extra);
            }
        }
        Ok(specs)
    }

    pub fn label(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let up = self.simulate(name, Some("label"))?;
        let specs = self.label_specs(name, "label")?;
        let key = StageKey {
            stage: "label",
            scope: name,
            version: LABEL_VERSION,
            params: serde_json::json!({
                "specs": specs,
                "mode": LabelMode::PerThreshold,
                "master_seed": self.cfg.master_seed,
            }),
            upstream: vec![up.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let records = self.records(name, "label")?;
        let thresholds = self.net(name).threshold_set()?;
        let seed = self.cfg.master_seed;
        self.obtain(key, requester, |dir| {
            let mut files = Vec::new();
            let mut entries = Vec::new();
            for (task, spec) in &specs {
                match label_records(&records, &thresholds, *task, spec, LabelMode::PerThreshold, seed) {
                    Ok(labels) => {
                        let base = label_file(*task, spec);
                        files.push(write_json(dir, &format!("{base}.json"), &labels)?);
                        let nodes: Vec<usize> = (0..records.len() / thresholds.len()).collect();
                        let sets: Vec<(Vec<usize>, _)> = labels.groups.iter().map(|g| (nodes.clone(), g.clone())).collect();
                        write_labels_csv(&sets, create(dir, &format!("{base}.csv"))?)?;
                        files.push(format!("{base}.csv"));
                        entries.push(LabelEntry {
                            task: *task,
                            spec: *spec,
                            file: Some(format!("{base}.json")),
                            skipped: None,
                            top_shares: labels.top_shares(),
                            groups: labels.groups.iter().map(LabelGroupMeta::of).collect(),
                        });
                    }
                    Err(e @ (keynode::Error::Degenerate(_) | keynode::Error::InvalidParameter(_))) => {
                        log::warn!("label [{name}]: {} {} k={} skipped: {e}", task.name(), spec.method, spec.k);
                        entries.push(LabelEntry {
                            task: *task,
                            spec: *spec,
                            file: None,
                            skipped: Some(e.to_string()),
                            top_shares: vec![],
                            groups: vec![],
                        });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            files.push(write_json(dir, "labels.json", &entries)?);
            Ok(files)
        })
    }

    fn labels(&self, run: &StageRun, task: TaskId, spec: &BinSpec) -> anyhow::Result<Option<TaskLabels>> {
        let entries: Vec<LabelEntry> = run.read_json("labels.json")?;
        match entries.iter().find(|e| e.task == task && e.spec == *spec) {
            Some(LabelEntry { file: Some(f), .. }) => Ok(Some(run.read_json(f)?)),
            _ => Ok(None),
        }
    }

    fn model_params(&self) -> serde_json::Value {
        serde_json::to_value(&self.model_specs).expect("specs serialize")
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            trials: self.cfg.trials,
            min_bin_size: self.cfg.min_bin_size,
            ..Default::default()
        }
    }

    pub fn train(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let labels = self.label(name, Some("train"))?;
        let feats = self.featurize(name, Some("train"))?;
        let mut cells: Vec<(TaskId, usize, usize)> = Vec::new();
        for &task in &self.cfg.tasks {
            for &k in &self.cfg.k_values {
                for m in 0..self.model_specs.len() {
                    cells.push((task, k, m));
                }
            }
        }
        if self.cfg.importance_network().name == name {
            let imp = (self.cfg.importance.task, self.importance_k("train")?, self.cfg.importance.model);
            if !cells.contains(&imp) {
                cells.push(imp);
            }
        }
        let key = StageKey {
            stage: "train",
            scope: name,
            version: TRAIN_VERSION,
            params: serde_json::json!({ "cells": cells, "models": self.model_params() }),
            upstream: vec![labels.checksum.clone(), feats.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let ds = self.dataset(name, "train")?;
        self.obtain(key, requester, |dir| {
            let scaler: Standardizer = feats.read_json("scaler.json")?;
            let x = scaler.apply(&ds.features)?;
            let mut files = vec![];
            let mut entries = Vec::new();
            for &(task, k, m) in &cells {
                let Some(l) = self.labels(&labels, task, &BinSpec::smart(k))? else {
                    log::warn!("train [{name}]: no labels for {} k={k}", task.name());
                    continue;
                };
                match train(&self.model_specs[m], &x, &l.rows) {
                    Ok(model) => {
                        let file = model_file(task, k, m);
                        fs::write(dir.join(&file), model.to_json()?)?;
                        files.push(file.clone());
                        entries.push(ModelEntry { task, k, model: m, file });
                    }
                    Err(e) if cell_skip(&e) => log::warn!("train [{name}]: {} k={k} m{m} skipped: {e}", task.name()),
                    Err(e) => return Err(e.into()),
                }
            }
            files.push(write_json(dir, "scaler.json", &scaler)?);
            files.push(write_json(dir, "models.json", &entries)?);
            Ok(files)
        })
    }

    pub fn evaluate(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let labels = self.label(name, Some("evaluate"))?;
        let feats = self.featurize(name, Some("evaluate"))?;
        let opts = self.eval_options();
        let key = StageKey {
            stage: "evaluate",
            scope: name,
            version: EVALUATE_VERSION,
            params: serde_json::json!({
                "tasks": self.cfg.tasks,
                "k_values": self.cfg.k_values,
                "models": self.model_params(),
                "options": opts,
                "master_seed": self.cfg.master_seed,
            }),
            upstream: vec![labels.checksum.clone(), feats.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let ds = self.dataset(name, "evaluate")?;
        self.obtain(key, requester, |dir| {
            let mut cells = Vec::new();
            for &task in &self.cfg.tasks {
                for &k in &self.cfg.k_values {
                    let l = self.labels(&labels, task, &BinSpec::smart(k))?;
                    for (m, spec) in self.model_specs.iter().enumerate() {
                        let cell = match &l {
                            None => skipped(task, k, m, "labels unavailable".into()),
                            Some(l) => match evaluate_labels(&ds, l, spec, &opts, self.cfg.master_seed) {
                                Ok(r) => {
                                    log::info!(
                                        "evaluate [{name}]: {} k={k} {} F1 {:.4} +- {:.4}",
                                        task.name(),
                                        spec.kind(),
                                        r.f1_macro_mean,
                                        r.f1_macro_std
                                    );
                                    ok_cell(task, k, m, r)
                                }
                                Err(e) if cell_skip(&e) => skipped(task, k, m, e.to_string()),
                                Err(e) => return Err(e.into()),
                            },
                        };
                        cells.push(cell);
                    }
                }
            }
            write_cells(dir, &cells)
        })
    }

    pub fn compare_bins(&self, name: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let labels = self.label(name, Some("compare-bins"))?;
        let feats = self.featurize(name, Some("compare-bins"))?;
        let opts = self.eval_options();
        let fixed = BinSpec::fixed_top(self.cfg.fixed_top_fraction);
        let key = StageKey {
            stage: "compare-bins",
            scope: name,
            version: COMPARE_VERSION,
            params: serde_json::json!({
                "tasks": self.cfg.tasks,
                "model": self.model_specs[0],
                "fixed": fixed,
                "options": opts,
                "master_seed": self.cfg.master_seed,
            }),
            upstream: vec![labels.checksum.clone(), feats.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let ds = self.dataset(name, "compare-bins")?;
        self.obtain(key, requester, |dir| {
            let mut out: Vec<Cell<BinningComparison>> = Vec::new();
            for &task in &self.cfg.tasks {
                let smart = self.labels(&labels, task, &BinSpec::smart(2))?;
                let fixed_l = self.labels(&labels, task, &fixed)?;
                let cell = match (smart, fixed_l) {
                    (Some(a), Some(b)) => {
                        match compare_label_sets(&ds, &a, &b, &self.model_specs[0], &opts, self.cfg.master_seed) {
                            Ok(c) => {
                                log::info!(
                                    "compare-bins [{name}]: {} smart {:.4} fixed {:.4}",
                                    task.name(),
                                    c.smart.f1_macro_mean,
                                    c.fixed.f1_macro_mean
                                );
                                ok_cell(task, 2, 0, c)
                            }
                            Err(e) if cell_skip(&e) => skipped(task, 2, 0, e.to_string()),
                            Err(e) => return Err(e.into()),
                        }
                    }
                    _ => skipped(task, 2, 0, "labels unavailable".into()),
                };
                out.push(cell);
            }
            Ok(vec![write_json(dir, "comparisons.json", &out)?])
        })
    }

    pub fn generalize(&self, train_net: &str, test_net: &str, requester: Option<&'static str>) -> CliResult<StageRun> {
        let scope = format!("{train_net}--{test_net}");
        let mut upstream = Vec::new();
        for n in [train_net, test_net] {
            upstream.push(self.simulate(n, Some("generalize"))?.checksum);
            upstream.push(self.centrality(n, Some("generalize"))?.checksum);
        }
        let opts = self.eval_options();
        let key = StageKey {
            stage: "generalize",
            scope: &scope,
            version: GENERALIZE_VERSION,
            params: serde_json::json!({
                "tasks": self.cfg.tasks,
                "k_values": self.cfg.k_values,
                "models": self.model_params(),
                "options": opts,
                "master_seed": self.cfg.master_seed,
            }),
            upstream,
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let a = self.dataset(train_net, "generalize")?;
        let b = self.dataset(test_net, "generalize")?;
        self.obtain(key, requester, |dir| {
            let mut cells = Vec::new();
            for &task in &self.cfg.tasks {
                for &k in &self.cfg.k_values {
                    for (m, spec) in self.model_specs.iter().enumerate() {
                        let cell = match cross_network_eval(&a, &b, task, k, spec, &opts, self.cfg.master_seed) {
                            Ok(r) => {
                                log::info!(
                                    "generalize [{scope}]: {} k={k} {} F1 {:.4}",
                                    task.name(),
                                    spec.kind(),
                                    r.f1_macro_mean
                                );
                                ok_cell(task, k, m, r)
                            }
                            Err(e) if cell_skip(&e) => skipped(task, k, m, e.to_string()),
                            Err(e) => return Err(e.into()),
                        };
                        cells.push(cell);
                    }
                }
            }
            write_cells(dir, &cells)
        })
    }

    pub fn importance(&self, requester: Option<&'static str>) -> CliResult<StageRun> {
        let net = self.cfg.importance_network();
        let name = net.name.as_str();
        let trained = self.train(name, Some("importance"))?;
        let feats = self.featurize(name, Some("importance"))?;
        let imp = &self.cfg.importance;
        let k = self.importance_k("importance")?;
        let opts = ImportanceOptions {
            sample_size: imp.sample_size,
            permutations: imp.permutations,
            background_size: imp.background_size,
            keep_per_sample: false,
        };
        let key = StageKey {
            stage: "importance",
            scope: name,
            version: IMPORTANCE_VERSION,
            params: serde_json::json!({
                "task": imp.task,
                "k": k,
                "model": imp.model,
                "options": opts,
                "master_seed": self.cfg.master_seed,
            }),
            upstream: vec![trained.checksum.clone(), feats.checksum.clone()],
        };
        if let Some(run) = self.cached_or_memo(&key)? {
            return Ok(run);
        }
        let ds = self.dataset(name, "importance")?;
        self.obtain(key, requester, |dir| {
            let entries: Vec<ModelEntry> = trained.read_json("models.json")?;
            let entry = entries
                .iter()
                .find(|e| e.task == imp.task && e.k == k && e.model == imp.model)
                .with_context(|| format!("no trained model for {} k={k}", imp.task.name()))?;
            let model = TrainedModel::from_json(&trained.read(&entry.file)?)?;
            let scaler: Standardizer = trained.read_json("scaler.json")?;
            let x = scaler.apply(&ds.features)?;
            let mut opts = opts.clone();
            if opts.sample_size > x.n_rows() {
                log::warn!("importance: sample size capped at {} rows", x.n_rows());
                opts.sample_size = x.n_rows();
            }
            let report = importance_report(&model, &x, &opts, self.cfg.master_seed)?;
            for (i, (f, v)) in report.ranking().iter().enumerate() {
                log::info!("importance [{name}]: {:>2}. {f} {v:.5}", i + 1);
            }
            let mut csv = create(dir, "importance.csv")?;
            report.write_ranked_csv(&mut csv)?;
            drop(csv);
            let art = ImportanceArtifact {
                network: name.to_owned(),
                task: imp.task,
                k,
                model: imp.model,
                report,
            };
            Ok(vec![write_json(dir, "importance.json", &art)?, "importance.csv".into()])
        })
    }

    /// Every stage for every network, in dependency order.
    pub fn run_all(&self) -> CliResult<()> {
        for net in &self.cfg.networks {
            self.ingest(&net.name, None)?;
        }
        for net in &self.cfg.networks {
            self.centrality(&net.name, None)?;
            self.simulate(&net.name, None)?;
            self.featurize(&net.name, None)?;
            self.label(&net.name, None)?;
        }
        for net in &self.cfg.networks {
            self.train(&net.name, None)?;
            self.evaluate(&net.name, None)?;
            self.compare_bins(&net.name, None)?;
        }
        for (a, b) in self.cfg.pairs() {
            self.generalize(&a, &b, None)?;
        }
        self.importance(None)?;
        Ok(())
    }
}

fn ok_cell<T>(task: TaskId, k: usize, model: usize, result: T) -> Cell<T> {
    Cell {
        task,
        k,
        model,
        result: Some(result),
        skipped: None,
    }
}

fn skipped<T>(task: TaskId, k: usize, model: usize, reason: String) -> Cell<T> {
    log::warn!("{} k={k} m{model} skipped: {reason}", task.name());
    Cell {
        task,
        k,
        model,
        result: None,
        skipped: Some(reason),
    }
}

fn write_cells(dir: &Path, cells: &[Cell<EvalReport>]) -> anyhow::Result<Vec<String>> {
    let reports: Vec<EvalReport> = cells.iter().filter_map(|c| c.result.clone()).collect();
    write_reports_csv(&reports, create(dir, "reports.csv")?)?;
    Ok(vec![write_json(dir, "reports.json", &cells)?, "reports.csv".into()])
}

/// Emits a percentage each time progress crosses another tenth.
struct AtomicStep(std::sync::atomic::AtomicUsize);

impl AtomicStep {
    fn new() -> Self {
        AtomicStep(std::sync::atomic::AtomicUsize::new(0))
    }

    fn advance(&self, done: usize, total: usize) -> Option<usize> {
        let tenth = done * 10 / total.max(1);
        let prev = self.0.fetch_max(tenth, std::sync::atomic::Ordering::Relaxed);
        (tenth > prev).then_some(tenth * 10)
    }
}

/// Convenience for looking up a labeling produced by the label stage.
pub fn find_label<'e>(entries: &'e [LabelEntry], task: TaskId, method: BinMethod, k: usize) -> Option<&'e LabelEntry> {
    entries.iter().find(|e| e.task == task && e.spec.method == method && e.spec.k == k)
}
