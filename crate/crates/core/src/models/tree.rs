//! Exact greedy decision trees on presorted feature orders: Gini
//! classification trees grown depth-first and second-order regression
//! trees grown best-first.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::ProjectRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Leaf output: class fractions for classification, one value for
    /// regression. Empty on internal nodes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub value: Vec<f64>,
}

/// Flat node list, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            match node.split {
                Some(s) => i = if row[s.feature] <= s.threshold { s.left } else { s.right } as usize,
                None => return &node.value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i].split {
                Some(s) => 1 + go(t, s.left as usize).max(go(t, s.right as usize)),
                None => 0,
            }
        }
        go(self, 0)
    }
}

/// Per-feature sample lists of one node, each sorted by that feature.
pub(super) type Orders = Vec<Vec<u32>>;

pub(super) fn presort(x: &[f64], d: usize, active: &[u32]) -> Orders {
    (0..d)
        .map(|f| {
            let mut o = active.to_vec();
            o.sort_by(|&a, &b| x[a as usize * d + f].total_cmp(&x[b as usize * d + f]).then(a.cmp(&b)));
            o
        })
        .collect()
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Splits every per-feature list by `goes_left`, keeping sort order.
fn partition(orders: Orders, goes_left: &[bool]) -> (Orders, Orders) {
    let mut left = Vec::with_capacity(orders.len());
    let mut right = Vec::with_capacity(orders.len());
    for o in orders {
        let (l, r): (Vec<u32>, Vec<u32>) = o.into_iter().partition(|&i| goes_left[i as usize]);
        left.push(l);
        right.push(r);
    }
    (left, right)
}

fn mark(x: &[f64], d: usize, rows: &[u32], feature: usize, threshold: f64, goes_left: &mut [bool]) {
    for &i in rows {
        goes_left[i as usize] = x[i as usize * d + feature] <= threshold;
    }
}

pub(super) fn bootstrap_counts(n: usize, rng: &mut ProjectRng) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

// ---------------------------------------------------------------------------
// classification

pub(super) struct ClassTreeOptions {
    pub max_depth: Option<usize>,
    pub max_features: usize,
    pub min_samples_leaf: usize,
}

struct ClassSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

fn class_totals(rows: &[u32], y: &[usize], w: &[f64], c: usize) -> Vec<f64> {
    let mut t = vec![0.0; c];
    for &i in rows {
        t[y[i as usize]] += w[i as usize];
    }
    t
}

fn sq_over(t: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        0.0
    } else {
        t.iter().map(|v| v * v).sum::<f64>() / total
    }
}

#[allow(clippy::too_many_arguments)]
fn best_class_split_on(
    x: &[f64],
    d: usize,
    f: usize,
    order: &[u32],
    y: &[usize],
    w: &[f64],
    tot: &[f64],
    min_leaf: usize,
    best: &mut Option<ClassSplit>,
) -> bool {
    let n = order.len();
    let first = x[order[0] as usize * d + f];
    let last = x[order[n - 1] as usize * d + f];
    if first == last {
        return false;
    }
    let total: f64 = tot.iter().sum();
    let mut left = vec![0.0; tot.len()];
    let mut right = tot.to_vec();
    let mut wl = 0.0;
    for pos in 0..n - 1 {
        let i = order[pos] as usize;
        let wi = w[i];
        left[y[i]] += wi;
        right[y[i]] -= wi;
        wl += wi;
        let here = x[i * d + f];
        let next = x[order[pos + 1] as usize * d + f];
        if here == next || pos + 1 < min_leaf || n - pos - 1 < min_leaf {
            continue;
        }
        let score = sq_over(&left, wl) + sq_over(&right, total - wl);
        if best.as_ref().is_none_or(|b| score > b.score) {
            *best = Some(ClassSplit {
                score,
                feature: f,
                threshold: midpoint(here, next),
            });
        }
    }
    true
}

/// Gini tree on the rows of `sorted` (per-feature orders over all rows)
/// with positive weight. Leaves hold weighted class fractions.
#[allow(clippy::too_many_arguments)]
pub(super) fn fit_class_tree(
    x: &[f64],
    d: usize,
    sorted: &Orders,
    y: &[usize],
    w: &[f64],
    n_classes: usize,
    opts: &ClassTreeOptions,
    rng: &mut ProjectRng,
) -> Tree {
    let root: Orders = sorted
        .iter()
        .map(|o| o.iter().copied().filter(|&i| w[i as usize] > 0.0).collect())
        .collect();
    let mut nodes = vec![TreeNode {
        split: None,
        value: Vec::new(),
    }];
    let mut goes_left = vec![false; y.len()];
    let mut stack = vec![(0usize, root, 0usize)];
    let mut features: Vec<usize> = (0..d).collect();
    while let Some((id, orders, depth)) = stack.pop() {
        let rows = &orders[0];
        let tot = class_totals(rows, y, w, n_classes);
        let total: f64 = tot.iter().sum();
        let pure = tot.iter().filter(|&&t| t > 0.0).count() <= 1;
        let depth_ok = opts.max_depth.is_none_or(|m| depth < m);
        let mut best = None;
        if !pure && depth_ok && rows.len() >= 2 * opts.min_samples_leaf {
            let subsample = opts.max_features < d;
            if subsample {
                // fresh feature order per node; constant features do not count
                for j in 0..d {
                    let k = rng.random_range(j..d);
                    features.swap(j, k);
                }
            } else {
                features.sort_unstable();
            }
            let mut visited = 0;
            for &f in &features {
                if visited >= opts.max_features && best.is_some() {
                    break;
                }
                if best_class_split_on(x, d, f, &orders[f], y, w, &tot, opts.min_samples_leaf, &mut best) {
                    visited += 1;
                }
            }
        }
        match best {
            None => {
                nodes[id].value = tot.iter().map(|t| t / total).collect();
            }
            Some(s) => {
                mark(x, d, rows, s.feature, s.threshold, &mut goes_left);
                let (l, r) = partition(orders, &goes_left);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                nodes.push(TreeNode {
                    split: None,
                    value: Vec::new(),
                });
                nodes.push(TreeNode {
                    split: None,
                    value: Vec::new(),
                });
                nodes[id].split = Some(Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: li as u32,
                    right: ri as u32,
                });
                stack.push((ri, r, depth + 1));
                stack.push((li, l, depth + 1));
            }
        }
    }
    Tree { nodes }
}

// ---------------------------------------------------------------------------
// regression on gradient statistics

pub(super) struct RegTreeOptions {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub min_hessian_leaf: f64,
    pub lambda: f64,
}

struct RegSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Pending {
    node: usize,
    orders: Orders,
    split: Option<RegSplit>,
}

fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

fn best_reg_split(x: &[f64], d: usize, orders: &Orders, g: &[f64], h: &[f64], opts: &RegTreeOptions) -> Option<RegSplit> {
    let rows = &orders[0];
    let n = rows.len();
    if n < 2 * opts.min_samples_leaf {
        return None;
    }
    let gt: f64 = rows.iter().map(|&i| g[i as usize]).sum();
    let ht: f64 = rows.iter().map(|&i| h[i as usize]).sum();
    let parent = score(gt, ht, opts.lambda);
    let mut best: Option<RegSplit> = None;
    for (f, order) in orders.iter().enumerate() {
        let (mut gl, mut hl) = (0.0, 0.0);
        for pos in 0..n - 1 {
            let i = order[pos] as usize;
            gl += g[i];
            hl += h[i];
            let here = x[i * d + f];
            let next = x[order[pos + 1] as usize * d + f];
            if here == next || pos + 1 < opts.min_samples_leaf || n - pos - 1 < opts.min_samples_leaf {
                continue;
            }
            let hr = ht - hl;
            if hl < opts.min_hessian_leaf || hr < opts.min_hessian_leaf {
                continue;
            }
            let gain = score(gl, hl, opts.lambda) + score(gt - gl, hr, opts.lambda) - parent;
            if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(RegSplit {
                    gain,
                    feature: f,
                    threshold: midpoint(here, next),
                });
            }
        }
    }
    best
}

/// Best-first regression tree on per-row gradients `g` and hessians `h`
/// (already multiplied by sample weights). `root` holds the rows to use,
/// sorted per feature.
pub(super) fn fit_reg_tree(x: &[f64], d: usize, root: &Orders, g: &[f64], h: &[f64], opts: &RegTreeOptions) -> Tree {
    let n_total = g.len();
    let mut nodes = vec![TreeNode {
        split: None,
        value: Vec::new(),
    }];
    let mut pending = vec![Pending {
        node: 0,
        split: best_reg_split(x, d, root, g, h, opts),
        orders: root.clone(),
    }];
    let mut done: Vec<Pending> = Vec::new();
    let mut goes_left = vec![false; n_total];
    while pending.len() + done.len() < opts.max_leaves {
        let pick = pending
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.split.as_ref().map(|s| (i, s.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (i, gain)| match acc {
                Some((_, bg)) if bg >= gain => acc,
                _ => Some((i, gain)),
            });
        let Some((i, _)) = pick else { break };
        let leaf = pending.remove(i);
        let s = leaf.split.expect("picked leaf has a split");
        mark(x, d, &leaf.orders[0], s.feature, s.threshold, &mut goes_left);
        let (l, r) = partition(leaf.orders, &goes_left);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        for _ in 0..2 {
            nodes.push(TreeNode {
                split: None,
                value: Vec::new(),
            });
        }
        nodes[leaf.node].split = Some(Split {
            feature: s.feature,
            threshold: s.threshold,
            left: li as u32,
            right: ri as u32,
        });
        for (node, orders) in [(li, l), (ri, r)] {
            let split = best_reg_split(x, d, &orders, g, h, opts);
            let p = Pending { node, orders, split };
            if p.split.is_some() {
                pending.push(p);
            } else {
                done.push(p);
            }
        }
    }
    for p in pending.into_iter().chain(done) {
        let rows = &p.orders[0];
        let gs: f64 = rows.iter().map(|&i| g[i as usize]).sum();
        let hs: f64 = rows.iter().map(|&i| h[i as usize]).sum();
        nodes[p.node].value = vec![leaf_value(gs, hs, opts.lambda)];
    }
    Tree { nodes }
}

/// Deterministic single Gini tree on all rows, every feature considered at
/// every split.
pub(super) fn fit_plain_class_tree(
    x: &[f64],
    d: usize,
    y: &[usize],
    w: &[f64],
    n_classes: usize,
    max_depth: Option<usize>,
) -> Tree {
    let opts = ClassTreeOptions {
        max_depth,
        max_features: d,
        min_samples_leaf: 1,
    };
    // the generator is never drawn from without feature subsampling
    let mut rng = crate::rng::rng_for(0, &[]);
    let all: Vec<u32> = (0..y.len() as u32).collect();
    fit_class_tree(x, d, &presort(x, d, &all), y, w, n_classes, &opts, &mut rng)
}
