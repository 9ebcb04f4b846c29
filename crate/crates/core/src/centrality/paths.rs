//! Shortest-path measures on the directed graph: closeness, harmonic, local
//! reaching, betweenness (Brandes) and load (Newman flow splitting).

use std::collections::VecDeque;

use crate::graph::{bfs_distances, Graph, NodeId};
use crate::par;

/// Sources are split into this many fixed chunks; partial sums are merged in
/// chunk order so results do not depend on the worker count.
const SOURCE_CHUNKS: usize = 32;

/// Per-node reachability summary over outgoing shortest paths.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Reach {
    pub reached: usize,
    pub dist_sum: usize,
    pub harmonic: f64,
}

pub(crate) fn reach_summaries(g: &Graph) -> Vec<Reach> {
    par::map_range(g.n(), |v| {
        let dist = bfs_distances(g.out_adjacency(), v);
        let mut r = Reach::default();
        for (u, &d) in dist.iter().enumerate() {
            if u != v && d != usize::MAX {
                r.reached += 1;
                r.dist_sum += d;
                r.harmonic += 1.0 / d as f64;
            }
        }
        r
    })
}

/// Wasserman-Faust closeness: `(r / s) * (r / (n - 1))` with `r` reachable
/// nodes at total distance `s`.
pub(crate) fn closeness_from(summary: &[Reach]) -> Vec<f64> {
    let n = summary.len();
    summary
        .iter()
        .map(|r| {
            if r.dist_sum == 0 || n < 2 {
                0.0
            } else {
                let reached = r.reached as f64;
                (reached / r.dist_sum as f64) * (reached / (n - 1) as f64)
            }
        })
        .collect()
}

pub(crate) fn harmonic_from(summary: &[Reach]) -> Vec<f64> {
    summary.iter().map(|r| r.harmonic).collect()
}

pub(crate) fn local_reaching_from(summary: &[Reach]) -> Vec<f64> {
    let n = summary.len();
    summary
        .iter()
        .map(|r| if n < 2 { 0.0 } else { r.reached as f64 / (n - 1) as f64 })
        .collect()
}

/// BFS from `s` recording visit order, path counts and predecessors.
struct ShortestPathDag {
    order: Vec<NodeId>,
    sigma: Vec<f64>,
    dist: Vec<usize>,
    preds: Vec<Vec<NodeId>>,
}

impl ShortestPathDag {
    fn new(n: usize) -> Self {
        ShortestPathDag {
            order: Vec::with_capacity(n),
            sigma: vec![0.0; n],
            dist: vec![usize::MAX; n],
            preds: vec![Vec::new(); n],
        }
    }

    fn run(&mut self, g: &Graph, s: NodeId) {
        for &v in &self.order {
            self.sigma[v] = 0.0;
            self.dist[v] = usize::MAX;
            self.preds[v].clear();
        }
        self.order.clear();
        let mut queue = VecDeque::new();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            self.order.push(v);
            let dv = self.dist[v];
            for &w in g.out_neighbors(v) {
                if self.dist[w] == usize::MAX {
                    self.dist[w] = dv + 1;
                    queue.push_back(w);
                }
                if self.dist[w] == dv + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
    }
}

fn accumulate<F>(g: &Graph, per_source: F) -> Vec<f64>
where
    F: Fn(&ShortestPathDag, NodeId, &mut Vec<f64>, &mut [f64]) + Sync + Send,
{
    let n = g.n();
    let partials = par::map_slice(&par::fixed_chunks(n, SOURCE_CHUNKS), |range| {
        let mut dag = ShortestPathDag::new(n);
        let mut scratch = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for s in range.clone() {
            dag.run(g, s);
            per_source(&dag, s, &mut scratch, &mut acc);
        }
        acc
    });
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Raw (unnormalized) Brandes betweenness over ordered pairs.
pub(crate) fn betweenness_raw(g: &Graph) -> Vec<f64> {
    accumulate(g, |dag, s, delta, acc| {
        for &v in &dag.order {
            delta[v] = 0.0;
        }
        for &w in dag.order.iter().rev() {
            let coeff = (1.0 + delta[w]) / dag.sigma[w];
            for &v in &dag.preds[w] {
                delta[v] += dag.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += delta[w];
            }
        }
    })
}

/// Raw load: each target sends one unit back toward the source, split
/// equally among shortest-path predecessors at every node.
pub(crate) fn load_raw(g: &Graph) -> Vec<f64> {
    accumulate(g, |dag, s, flow, acc| {
        for &v in &dag.order {
            flow[v] = 1.0;
        }
        for &w in dag.order.iter().rev() {
            if w == s {
                continue;
            }
            let preds = &dag.preds[w];
            let share = flow[w] / preds.len() as f64;
            for &v in preds {
                if v != s {
                    flow[v] += share;
                }
            }
        }
        for &v in &dag.order {
            if v != s {
                acc[v] += flow[v] - 1.0;
            }
        }
    })
}

/// Scale by `1 / ((n - 1)(n - 2))`; left raw with a warning when `n < 3`.
pub(crate) fn normalize_pairs(mut raw: Vec<f64>, measure: &str) -> Vec<f64> {
    let n = raw.len();
    if n < 3 {
        log::warn!("{measure}: n={n} < 3, reporting unnormalized values");
        return raw;
    }
    let scale = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
    for x in &mut raw {
        *x *= scale;
    }
    raw
}
