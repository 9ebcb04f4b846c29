//! Browser bindings: generate a graph, run cascades from one node, compare
//! Smart Bins against a fixed top fraction, rank nodes by centrality.
//!
//! Every method returns a JSON string so the page needs no bindings beyond
//! `JSON.parse`.

use keynode::centrality::{compute_centrality, CentralityId};
use keynode::diffusion::{run_seed, run_cascade, simulate_node};
use keynode::graph::{generate_synthetic, Graph, SyntheticModel};
use keynode::labeling::{apply_bins, BinSpec, LabelSet};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Demo {
    graph: Graph,
}

#[derive(Serialize)]
struct Summary {
    nodes: usize,
    arcs: usize,
    directed: bool,
    max_out_degree: usize,
    hub: usize,
}

#[derive(Serialize)]
struct CascadeStats {
    node: usize,
    p: f64,
    runs: usize,
    mean_range: f64,
    mean_peak: f64,
    mean_peak_time: f64,
    /// (range, count) pairs, ascending range.
    histogram: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct BinView {
    method: &'static str,
    k: usize,
    boundaries: Vec<f64>,
    class_counts: Vec<usize>,
    top_share: f64,
}

#[derive(Serialize)]
struct BinComparison {
    p: f64,
    runs: usize,
    /// Mean range of every node, node order.
    values: Vec<f64>,
    smart: BinView,
    fixed: BinView,
}

#[derive(Serialize)]
struct Ranking {
    measure: &'static str,
    top: Vec<(usize, f64)>,
    error: Option<String>,
}

type Out = Result<String, String>;

fn to_json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn view(method: &'static str, ls: &LabelSet) -> BinView {
    BinView {
        method,
        k: ls.k,
        boundaries: ls.boundaries.clone(),
        class_counts: ls.class_counts(),
        top_share: ls.top_share(),
    }
}

/// `model` is one of `ba`, `dba`, `er`, `der`; `param` is m for the
/// preferential-attachment models and p for the random ones.
pub fn build_graph(model: &str, n: usize, param: f64, seed: u64) -> Result<Graph, String> {
    let m = param.round().max(1.0) as usize;
    let model = match model {
        "ba" => SyntheticModel::BarabasiAlbert { m },
        "dba" => SyntheticModel::DirectedBarabasiAlbert { m },
        "er" => SyntheticModel::ErdosRenyi { p: param },
        "der" => SyntheticModel::DirectedErdosRenyi { p: param },
        other => return Err(format!("unknown model {other:?}")),
    };
    generate_synthetic(model, n, seed).map_err(|e| e.to_string())
}

pub fn summary_json(g: &Graph) -> Out {
    let hub = (0..g.n()).max_by_key(|&v| (g.out_degree(v), std::cmp::Reverse(v))).unwrap_or(0);
    to_json(&Summary {
        nodes: g.n(),
        arcs: g.arc_count(),
        directed: g.is_directed(),
        max_out_degree: if g.n() == 0 { 0 } else { g.out_degree(hub) },
        hub,
    })
}

/// Repeated independent cascades from one node.
pub fn cascade_json(g: &Graph, node: usize, p: f64, runs: usize, seed: u64) -> Out {
    if runs == 0 {
        return Err("runs must be positive".into());
    }
    let mut counts = std::collections::BTreeMap::new();
    let (mut range, mut peak, mut time) = (0.0, 0.0, 0.0);
    for r in 0..runs {
        let out = run_cascade(g, node, p, run_seed(seed, node, 0, r)).map_err(|e| e.to_string())?;
        *counts.entry(out.range).or_insert(0) += 1;
        range += out.range as f64;
        peak += out.peak as f64;
        time += out.peak_time as f64;
    }
    let n = runs as f64;
    to_json(&CascadeStats {
        node,
        p,
        runs,
        mean_range: range / n,
        mean_peak: peak / n,
        mean_peak_time: time / n,
        histogram: counts.into_iter().collect(),
    })
}

/// Mean range of every node at one threshold, binned two ways.
pub fn bins_json(g: &Graph, p: f64, runs: usize, k: usize, top_fraction: f64, seed: u64) -> Out {
    let values = (0..g.n())
        .map(|v| simulate_node(g, v, p, 0, runs, seed).map(|r| r.mean_range))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    let smart = apply_bins(&values, &BinSpec::smart(k), seed).map_err(|e| e.to_string())?;
    let fixed = apply_bins(&values, &BinSpec::fixed_top(top_fraction), seed).map_err(|e| e.to_string())?;
    to_json(&BinComparison {
        p,
        runs,
        smart: view("smart_kmeans", &smart),
        fixed: view("fixed_top_percent", &fixed),
        values,
    })
}

/// Top `top` nodes of each centrality measure.
pub fn centralities_json(g: &Graph, top: usize) -> Out {
    let rankings: Vec<Ranking> = CentralityId::ALL
        .iter()
        .map(|&id| match compute_centrality(g, id) {
            Ok(map) => {
                let mut order: Vec<(usize, f64)> = map.scores.into_iter().enumerate().collect();
                order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                order.truncate(top);
                Ranking {
                    measure: id.name(),
                    top: order,
                    error: None,
                }
            }
            Err(e) => Ranking {
                measure: id.name(),
                top: vec![],
                error: Some(e.to_string()),
            },
        })
        .collect();
    to_json(&rankings)
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(model: &str, n: usize, param: f64, seed: u64) -> Result<Demo, JsError> {
        build_graph(model, n, param, seed).map(|graph| Demo { graph }).map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> Result<String, JsError> {
        js(summary_json(&self.graph))
    }

    pub fn cascade(&self, node: usize, p: f64, runs: usize, seed: u64) -> Result<String, JsError> {
        js(cascade_json(&self.graph, node, p, runs, seed))
    }

    pub fn bins(&self, p: f64, runs: usize, k: usize, top_fraction: f64, seed: u64) -> Result<String, JsError> {
        js(bins_json(&self.graph, p, runs, k, top_fraction, seed))
    }

    pub fn centralities(&self, top: usize) -> Result<String, JsError> {
        js(centralities_json(&self.graph, top))
    }
}
