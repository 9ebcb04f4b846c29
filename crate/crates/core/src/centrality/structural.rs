use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{triangles_per_node, Adjacency, Graph, NodeId};

pub(crate) fn degree(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|v| (g.in_degree(v) + g.out_degree(v)) as f64).collect()
}

pub(crate) fn in_degree(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|v| g.in_degree(v) as f64).collect()
}

pub(crate) fn out_degree(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|v| g.out_degree(v) as f64).collect()
}

/// Mean total degree of out-neighbours, 0 without out-neighbours.
pub(crate) fn avg_neighbor_degree(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|v| {
            let nb = g.out_neighbors(v);
            if nb.is_empty() {
                0.0
            } else {
                let total: usize = nb.iter().map(|&u| g.in_degree(u) + g.out_degree(u)).sum();
                total as f64 / nb.len() as f64
            }
        })
        .collect()
}

pub(crate) fn clustering(und: &Adjacency) -> Vec<f64> {
    let tri = triangles_per_node(und);
    (0..und.node_count())
        .map(|v| {
            let d = und.degree(v) as f64;
            if d < 2.0 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (d * (d - 1.0))
            }
        })
        .collect()
}

/// k-core numbers by bucket peeling (Batagelj-Zaversnik).
pub(crate) fn core_number(und: &Adjacency) -> Vec<f64> {
    let n = und.node_count();
    if n == 0 {
        return Vec::new();
    }
    let mut deg: Vec<usize> = (0..n).map(|v| und.degree(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;
    for i in 0..n {
        let v = vert[i];
        for &u in und.neighbors(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg.into_iter().map(|d| d as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    score: f64,
    node: NodeId,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // max score first, then the lowest node id
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Scores below this count as "no votes left".
const VOTE_EPS: f64 = 1e-9;

/// VoteRank selection order. Every node votes for its out-neighbours with
/// its current ability (initially 1); the node with the most votes is
/// selected, stops voting, and each of its voters loses `1 / <k>` ability,
/// where `<k>` is the mean out-degree.
pub(crate) fn vote_rank_order(g: &Graph) -> Vec<NodeId> {
    let n = g.n();
    if n == 0 || g.arc_count() == 0 {
        return Vec::new();
    }
    let weaken = n as f64 / g.arc_count() as f64;
    let mut ability = vec![1.0f64; n];
    let mut score: Vec<f64> = (0..n).map(|v| g.in_degree(v) as f64).collect();
    let mut selected = vec![false; n];
    let mut heap: BinaryHeap<Candidate> = (0..n).map(|v| Candidate { score: score[v], node: v }).collect();
    let mut order = Vec::new();

    fn change_ability(
        g: &Graph,
        u: NodeId,
        new_ability: f64,
        ability: &mut [f64],
        score: &mut [f64],
        selected: &[bool],
        heap: &mut BinaryHeap<Candidate>,
    ) {
        let delta = new_ability - ability[u];
        if delta == 0.0 {
            return;
        }
        ability[u] = new_ability;
        for &w in g.out_neighbors(u) {
            if !selected[w] {
                score[w] += delta;
                heap.push(Candidate { score: score[w], node: w });
            }
        }
    }

    while let Some(top) = heap.pop() {
        if selected[top.node] || top.score != score[top.node] {
            continue;
        }
        if top.score <= VOTE_EPS {
            break;
        }
        let v = top.node;
        selected[v] = true;
        order.push(v);
        change_ability(g, v, 0.0, &mut ability, &mut score, &selected, &mut heap);
        for &u in g.in_neighbors(v) {
            let weakened = (ability[u] - weaken).max(0.0);
            change_ability(g, u, weakened, &mut ability, &mut score, &selected, &mut heap);
        }
    }
    order
}

/// `(n - rank) / n` for selected nodes (rank 0 is the first pick), 0 otherwise.
pub(crate) fn vote_rank(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut scores = vec![0.0; n];
    for (rank, v) in vote_rank_order(g).into_iter().enumerate() {
        scores[v] = (n - rank) as f64 / n as f64;
    }
    scores
}
