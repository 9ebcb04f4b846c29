//! Discretization of continuous influence scores into ordered classes.
//!
//! Class `k - 1` always holds the largest values. Clustering methods work on
//! the sorted distinct values with multiplicities, so equal values always
//! share a class and every class is a contiguous value interval.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::TaskId;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_K_MAX: usize = 5;
pub const DEFAULT_MIN_BIN_SIZE: usize = 10;
pub const DEFAULT_TOP_FRACTION: f64 = 0.05;
pub const KMEANS_N_INIT: usize = 10;
pub const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMethod {
    SmartKmeans,
    SmartDpExact,
    FixedTopPercent,
    Quantile,
    Uniform,
}

impl BinMethod {
    pub fn name(self) -> &'static str {
        match self {
            BinMethod::SmartKmeans => "smart_kmeans",
            BinMethod::SmartDpExact => "smart_dp_exact",
            BinMethod::FixedTopPercent => "fixed_top_percent",
            BinMethod::Quantile => "quantile",
            BinMethod::Uniform => "uniform",
        }
    }

    pub fn is_clustering(self) -> bool {
        matches!(self, BinMethod::SmartKmeans | BinMethod::SmartDpExact)
    }
}

impl std::fmt::Display for BinMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BinMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            BinMethod::SmartKmeans,
            BinMethod::SmartDpExact,
            BinMethod::FixedTopPercent,
            BinMethod::Quantile,
            BinMethod::Uniform,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown binning method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub method: BinMethod,
    pub k: usize,
    pub param: Option<f64>,
}

impl BinSpec {
    pub fn smart(k: usize) -> Self {
        BinSpec {
            method: BinMethod::SmartKmeans,
            k,
            param: None,
        }
    }

    pub fn fixed_top(fraction: f64) -> Self {
        BinSpec {
            method: BinMethod::FixedTopPercent,
            k: 2,
            param: Some(fraction),
        }
    }

    pub fn validate(&self, k_max: usize) -> Result<()> {
        if self.k < 2 || self.k > k_max {
            return Err(Error::InvalidParameter(format!(
                "bin count {} outside 2..={k_max}",
                self.k
            )));
        }
        if self.method == BinMethod::FixedTopPercent {
            if self.k != 2 {
                return Err(Error::InvalidParameter("fixed top-percent bins are binary".into()));
            }
            let f = self.param.unwrap_or(DEFAULT_TOP_FRACTION);
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidParameter(format!("top fraction {f} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: Vec<usize>,
    /// Number of classes actually produced.
    pub k: usize,
    /// Ascending class centres (clustering methods only).
    pub centroids: Vec<f64>,
    /// Smallest value in each class `1..k`.
    pub boundaries: Vec<f64>,
    pub spec: BinSpec,
    pub source_task: Option<TaskId>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    /// Within-class sum of squares.
    pub inertia: f64,
}

impl LabelSet {
    pub fn with_source(mut self, task: TaskId, threshold: f64) -> Self {
        self.source_task = Some(task);
        self.threshold = Some(threshold);
        self
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Fraction of samples in the top class.
    pub fn top_share(&self) -> f64 {
        let counts = self.class_counts();
        counts[self.k - 1] as f64 / self.labels.len() as f64
    }

    /// The centroid each sample is associated with (clustering methods).
    pub fn assigned_centroids(&self) -> Option<Vec<f64>> {
        if self.centroids.is_empty() {
            None
        } else {
            Some(self.labels.iter().map(|&l| self.centroids[l]).collect())
        }
    }
}

/// Sorted distinct values with multiplicities and the inverse mapping.
struct Distinct {
    xs: Vec<f64>,
    w: Vec<f64>,
    /// Distinct index of each input sample.
    index: Vec<usize>,
}

impl Distinct {
    fn new(values: &[f64]) -> Self {
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut xs: Vec<f64> = Vec::new();
        let mut w: Vec<f64> = Vec::new();
        for x in sorted {
            if xs.last() == Some(&x) {
                *w.last_mut().unwrap() += 1.0;
            } else {
                xs.push(x);
                w.push(1.0);
            }
        }
        let index = values
            .iter()
            .map(|v| xs.partition_point(|x| x < v))
            .collect();
        Distinct { xs, w, index }
    }

    fn len(&self) -> usize {
        self.xs.len()
    }
}

/// Weighted prefix sums on values shifted by their mean, for O(1) segment SSE.
struct Prefix {
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    shift: f64,
}

impl Prefix {
    fn new(d: &Distinct) -> Self {
        let total: f64 = d.w.iter().sum();
        let shift = d.xs.iter().zip(&d.w).map(|(x, w)| x * w).sum::<f64>() / total;
        let m = d.len();
        let (mut w, mut s1, mut s2) = (vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1]);
        for i in 0..m {
            let y = d.xs[i] - shift;
            w[i + 1] = w[i] + d.w[i];
            s1[i + 1] = s1[i] + d.w[i] * y;
            s2[i + 1] = s2[i] + d.w[i] * y * y;
        }
        Prefix { w, s1, s2, shift }
    }

    /// Sum of squared deviations of distinct range `i..j` from its mean.
    fn sse(&self, i: usize, j: usize) -> f64 {
        let w = self.w[j] - self.w[i];
        if w <= 0.0 {
            return 0.0;
        }
        let s1 = self.s1[j] - self.s1[i];
        let s2 = self.s2[j] - self.s2[i];
        (s2 - s1 * s1 / w).max(0.0)
    }

    fn mean(&self, i: usize, j: usize) -> f64 {
        let w = self.w[j] - self.w[i];
        (self.s1[j] - self.s1[i]) / w + self.shift
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Degenerate("no values to bin".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in binning input".into()));
    }
    Ok(())
}

fn check_clusterable(values: &[f64], k: usize) -> Result<Distinct> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k={k} must be at least 2")));
    }
    check_values(values)?;
    let d = Distinct::new(values);
    if d.len() < k {
        return Err(Error::Degenerate(format!(
            "{} distinct values cannot form {k} clusters",
            d.len()
        )));
    }
    Ok(d)
}

/// Builds a LabelSet from cut positions over the distinct values
/// (`cuts[0] = 0`, `cuts[k] = m`, all segments nonempty).
fn from_cuts(d: &Distinct, cuts: &[usize], spec: BinSpec, seed: Option<u64>) -> LabelSet {
    let k = cuts.len() - 1;
    let mut class_of = vec![0usize; d.len()];
    for c in 0..k {
        for slot in &mut class_of[cuts[c]..cuts[c + 1]] {
            *slot = c;
        }
    }
    // summed directly, the prefix sums are only for searching
    let centroids: Vec<f64> = (0..k)
        .map(|c| {
            let seg = cuts[c]..cuts[c + 1];
            let wsum: f64 = d.w[seg.clone()].iter().sum();
            let xsum: f64 = seg.map(|i| d.w[i] * d.xs[i]).sum();
            xsum / wsum
        })
        .collect();
    let inertia = (0..d.len())
        .map(|i| d.w[i] * (d.xs[i] - centroids[class_of[i]]).powi(2))
        .sum();
    LabelSet {
        labels: d.index.iter().map(|&i| class_of[i]).collect(),
        k,
        centroids,
        boundaries: cuts[1..k].iter().map(|&i| d.xs[i]).collect(),
        spec,
        source_task: None,
        threshold: None,
        seed,
        inertia,
    }
}

// ---------------------------------------------------------------------------
// Lloyd

/// Cut positions for nearest-centroid assignment; a value exactly halfway
/// between two centroids goes to the lower class.
fn assign(xs: &[f64], centroids: &[f64]) -> Vec<usize> {
    let k = centroids.len();
    let mut cuts = Vec::with_capacity(k + 1);
    cuts.push(0);
    for j in 0..k - 1 {
        let mid = 0.5 * (centroids[j] + centroids[j + 1]);
        let cut = xs.partition_point(|&x| x <= mid).max(cuts[j]);
        cuts.push(cut);
    }
    cuts.push(xs.len());
    cuts
}

/// Greedy k-means++: each new centre is the best of `2 + ln k` candidates
/// drawn proportionally to squared distance.
fn kmeans_pp_init<R: Rng>(d: &Distinct, k: usize, rng: &mut R) -> Vec<f64> {
    let m = d.len();
    let total: f64 = d.w.iter().sum();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let pick = |weights: &[f64], total: f64, rng: &mut R| -> usize {
        let mut target = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if target < w {
                return i;
            }
            target -= w;
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    };
    let first = pick(&d.w, total, rng);
    let mut centers = vec![d.xs[first]];
    let mut d2: Vec<f64> = d.xs.iter().map(|x| (x - d.xs[first]).powi(2)).collect();
    while centers.len() < k {
        let weights: Vec<f64> = (0..m).map(|i| d.w[i] * d2[i]).collect();
        let mass: f64 = weights.iter().sum();
        let next = if mass > 0.0 {
            let mut best = (f64::INFINITY, 0usize);
            for _ in 0..trials {
                let cand = pick(&weights, mass, rng);
                let c = d.xs[cand];
                let potential: f64 = (0..m).map(|i| d.w[i] * d2[i].min((d.xs[i] - c).powi(2))).sum();
                if potential < best.0 {
                    best = (potential, cand);
                }
            }
            best.1
        } else {
            // every point coincides with a centre already
            (0..m).find(|&i| !centers.contains(&d.xs[i])).unwrap_or(0)
        };
        let c = d.xs[next];
        centers.push(c);
        for i in 0..m {
            d2[i] = d2[i].min((d.xs[i] - c).powi(2));
        }
    }
    centers.sort_by(f64::total_cmp);
    centers
}

/// Moves the centroid of each empty cluster onto the value farthest from its
/// current centroid.
fn relocate_empty(xs: &[f64], centroids: &mut [f64], cuts: &[usize]) {
    let k = centroids.len();
    for c in 0..k {
        if cuts[c] != cuts[c + 1] {
            continue;
        }
        let current = assign(xs, centroids);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for j in 0..k {
            for x in &xs[current[j]..current[j + 1]] {
                let dist = (x - centroids[j]).powi(2);
                if dist > best.0 {
                    best = (dist, 0);
                    best.1 = xs.partition_point(|v| v < x);
                }
            }
        }
        centroids[c] = xs[best.1];
        centroids.sort_by(f64::total_cmp);
    }
}

/// One Lloyd run from a k-means++ start; `None` if it ends with an empty cluster.
fn lloyd_run<R: Rng>(d: &Distinct, prefix: &Prefix, k: usize, rng: &mut R) -> Option<(Vec<usize>, f64)> {
    let mut centroids = kmeans_pp_init(d, k, rng);
    for _ in 0..KMEANS_MAX_ITER {
        let cuts = assign(&d.xs, &centroids);
        if cuts.windows(2).any(|w| w[0] == w[1]) {
            relocate_empty(&d.xs, &mut centroids, &cuts);
            continue;
        }
        let next: Vec<f64> = (0..k).map(|c| prefix.mean(cuts[c], cuts[c + 1])).collect();
        if next == centroids {
            break;
        }
        centroids = next;
    }
    let cuts = assign(&d.xs, &centroids);
    if cuts.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let inertia = (0..k).map(|c| prefix.sse(cuts[c], cuts[c + 1])).sum();
    Some((cuts, inertia))
}

/// Smart Bins: 1-D k-means (Lloyd, k-means++ seeding, 10 restarts, lowest
/// inertia kept), classes ordered by centroid.
pub fn smart_bins_kmeans(values: &[f64], k: usize, seed: u64) -> Result<LabelSet> {
    let d = check_clusterable(values, k)?;
    let prefix = Prefix::new(&d);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..KMEANS_N_INIT {
        let mut rng = rng::rng_for(seed, &[restart as u64]);
        if let Some((cuts, inertia)) = lloyd_run(&d, &prefix, k, &mut rng) {
            if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
                best = Some((cuts, inertia));
            }
        }
    }
    let cuts = match best {
        Some((cuts, _)) => cuts,
        None => dp_cuts(&d, &prefix, k),
    };
    Ok(from_cuts(&d, &cuts, BinSpec::smart(k), Some(seed)))
}

// ---------------------------------------------------------------------------
// Exact dynamic programme

/// Optimal cuts by layered DP with divide-and-conquer optimisation (the
/// optimal split point is monotone for 1-D squared error).
fn dp_cuts(d: &Distinct, prefix: &Prefix, k: usize) -> Vec<usize> {
    let m = d.len();
    // cost[j] = best SSE of the first j distinct values in `layer` segments
    let mut cost: Vec<f64> = (0..=m).map(|j| prefix.sse(0, j)).collect();
    let mut argmin: Vec<Vec<usize>> = Vec::with_capacity(k);
    argmin.push(vec![0; m + 1]);
    for layer in 2..=k {
        let mut next = vec![f64::INFINITY; m + 1];
        let mut arg = vec![0usize; m + 1];
        solve_layer(prefix, &cost, &mut next, &mut arg, layer, m, layer - 1, m - 1);
        cost = next;
        argmin.push(arg);
    }
    let mut cuts = vec![m];
    let mut j = m;
    for layer in (1..k).rev() {
        j = argmin[layer][j];
        cuts.push(j);
    }
    cuts.push(0);
    cuts.reverse();
    cuts.dedup();
    cuts
}

#[allow(clippy::too_many_arguments)]
fn solve_layer(
    prefix: &Prefix,
    prev: &[f64],
    next: &mut [f64],
    arg: &mut [usize],
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    // segments must be nonempty: next[j] splits at i with layer-1 <= i < j
    if lo > hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = (f64::INFINITY, opt_lo);
    for i in opt_lo..=opt_hi.min(mid - 1) {
        let c = prev[i] + prefix.sse(i, mid);
        if c < best.0 {
            best = (c, i);
        }
    }
    next[mid] = best.0;
    arg[mid] = best.1;
    if mid > lo {
        solve_layer(prefix, prev, next, arg, lo, mid - 1, opt_lo, best.1);
    }
    solve_layer(prefix, prev, next, arg, mid + 1, hi, best.1, opt_hi);
}

/// Globally optimal 1-D k-means partition (deterministic).
pub fn smart_bins_dp_exact(values: &[f64], k: usize) -> Result<LabelSet> {
    let d = check_clusterable(values, k)?;
    let prefix = Prefix::new(&d);
    let cuts = dp_cuts(&d, &prefix, k);
    Ok(from_cuts(
        &d,
        &cuts,
        BinSpec {
            method: BinMethod::SmartDpExact,
            k,
            param: None,
        },
        None,
    ))
}

// ---------------------------------------------------------------------------
// Baselines

fn from_class_edges(values: &[f64], edges: &[f64], spec: BinSpec) -> LabelSet {
    // class = number of edges <= value, then empty classes are squeezed out
    let raw: Vec<usize> = values
        .iter()
        .map(|v| edges.partition_point(|e| e <= v))
        .collect();
    relabel_dense(values, raw, spec)
}

fn relabel_dense(values: &[f64], raw: Vec<usize>, spec: BinSpec) -> LabelSet {
    let width = raw.iter().copied().max().unwrap_or(0) + 1;
    let mut present = vec![false; width];
    for &l in &raw {
        present[l] = true;
    }
    let mut remap = vec![0usize; width];
    let mut k = 0;
    for (c, &p) in present.iter().enumerate() {
        if p {
            remap[c] = k;
            k += 1;
        }
    }
    if k < spec.k {
        log::warn!(
            "{}: {} of {} bins empty, merged into neighbours",
            spec.method,
            spec.k - k,
            spec.k
        );
    }
    let labels: Vec<usize> = raw.into_iter().map(|l| remap[l]).collect();
    let mut min_of = vec![f64::INFINITY; k];
    let (mut sum, mut cnt) = (vec![0.0; k], vec![0.0; k]);
    for (&l, &v) in labels.iter().zip(values) {
        min_of[l] = min_of[l].min(v);
        sum[l] += v;
        cnt[l] += 1.0;
    }
    let means: Vec<f64> = sum.iter().zip(&cnt).map(|(s, c)| s / c).collect();
    let inertia = labels
        .iter()
        .zip(values)
        .map(|(&l, &v)| (v - means[l]).powi(2))
        .sum();
    LabelSet {
        labels,
        k,
        centroids: Vec::new(),
        boundaries: min_of[1..].to_vec(),
        spec,
        source_task: None,
        threshold: None,
        seed: None,
        inertia,
    }
}

fn check_not_constant(values: &[f64]) -> Result<(f64, f64)> {
    check_values(values)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::Degenerate("constant values cannot be binned".into()));
    }
    Ok((lo, hi))
}

/// Binary labels: class 1 holds every value at or above the
/// `(1 - top_fraction)` quantile, ties included.
pub fn fixed_bins_top_percent(values: &[f64], top_fraction: f64) -> Result<LabelSet> {
    let spec = BinSpec::fixed_top(top_fraction);
    spec.validate(2)?;
    let (lo, _) = check_not_constant(values)?;
    let mut desc = values.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let nominal = ((top_fraction * values.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let cut = desc[nominal.min(values.len()) - 1];
    // when the cut hits the minimum, everything above the minimum is top class
    let labels: Vec<usize> = if cut > lo {
        values.iter().map(|&v| usize::from(v >= cut)).collect()
    } else {
        values.iter().map(|&v| usize::from(v > lo)).collect()
    };
    Ok(relabel_dense(values, labels, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Quantile,
    Uniform,
}

/// Equal-count (quantile) or equal-width (uniform) bins; empty bins merge
/// into their neighbours with a warning.
pub fn baseline_bins(values: &[f64], k: usize, kind: BaselineKind) -> Result<LabelSet> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k={k} must be at least 2")));
    }
    let (lo, hi) = check_not_constant(values)?;
    let method = match kind {
        BaselineKind::Quantile => BinMethod::Quantile,
        BaselineKind::Uniform => BinMethod::Uniform,
    };
    let spec = BinSpec {
        method,
        k,
        param: None,
    };
    let n = values.len();
    let edges: Vec<f64> = match kind {
        BaselineKind::Quantile => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            (1..k).map(|i| sorted[(i * n / k).min(n - 1)]).collect()
        }
        BaselineKind::Uniform => {
            let width = (hi - lo) / k as f64;
            (1..k).map(|i| lo + width * i as f64).collect()
        }
    };
    Ok(from_class_edges(values, &edges, spec))
}

/// Dispatch on a [`BinSpec`].
pub fn apply_bins(values: &[f64], spec: &BinSpec, seed: u64) -> Result<LabelSet> {
    match spec.method {
        BinMethod::SmartKmeans => smart_bins_kmeans(values, spec.k, seed),
        BinMethod::SmartDpExact => smart_bins_dp_exact(values, spec.k),
        BinMethod::FixedTopPercent => fixed_bins_top_percent(values, spec.param.unwrap_or(DEFAULT_TOP_FRACTION)),
        BinMethod::Quantile => baseline_bins(values, spec.k, BaselineKind::Quantile),
        BinMethod::Uniform => baseline_bins(values, spec.k, BaselineKind::Uniform),
    }
}

/// Largest `k <= k_max` whose exact clustering leaves at least
/// `min_bin_size` samples in every bin; 2 when none qualifies.
pub fn select_k(values: &[f64], k_max: usize, min_bin_size: usize) -> Result<usize> {
    if k_max < 2 {
        return Err(Error::Selection(format!("k_max={k_max} must be at least 2")));
    }
    if values.len() < 2 * min_bin_size {
        return Err(Error::Selection(format!(
            "{} values cannot fill two bins of {min_bin_size}",
            values.len()
        )));
    }
    for k in (2..=k_max).rev() {
        match smart_bins_dp_exact(values, k) {
            Ok(ls) if ls.class_counts().iter().all(|&c| c >= min_bin_size) => return Ok(k),
            Ok(_) | Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(2)
}

/// Metadata written next to a label CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMeta {
    pub method: BinMethod,
    pub k: usize,
    pub param: Option<f64>,
    pub seed: Option<u64>,
    pub groups: Vec<LabelGroupMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGroupMeta {
    pub task: Option<TaskId>,
    pub threshold: Option<f64>,
    pub k: usize,
    pub centroids: Vec<f64>,
    pub boundaries: Vec<f64>,
    pub class_counts: Vec<usize>,
}

impl LabelGroupMeta {
    pub fn of(ls: &LabelSet) -> Self {
        LabelGroupMeta {
            task: ls.source_task,
            threshold: ls.threshold,
            k: ls.k,
            centroids: ls.centroids.clone(),
            boundaries: ls.boundaries.clone(),
            class_counts: ls.class_counts(),
        }
    }
}

/// Writes `node,threshold,task,label` rows; `nodes[i]` is the node of sample `i`.
pub fn write_labels_csv<W: Write>(sets: &[(Vec<usize>, LabelSet)], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["node", "threshold", "task", "label"])?;
    for (nodes, ls) in sets {
        let task = ls.source_task.map(|t| t.name()).unwrap_or("");
        let thr = ls.threshold.map(|t| t.to_string()).unwrap_or_default();
        for (node, label) in nodes.iter().zip(&ls.labels) {
            wtr.write_record([node.to_string(), thr.clone(), task.to_owned(), label.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<labels csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_labels_nondecreasing(values: &[f64], ls: &LabelSet) -> bool {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        idx.windows(2).all(|w| ls.labels[w[0]] <= ls.labels[w[1]])
    }

    #[test]
    fn separated_clusters() {
        let v = [0.0, 0.1, 10.0, 10.1];
        let ls = smart_bins_kmeans(&v, 2, 0).unwrap();
        assert_eq!(ls.labels, vec![0, 0, 1, 1]);
        assert!((ls.centroids[0] - 0.05).abs() < 1e-12);
        assert!((ls.centroids[1] - 10.05).abs() < 1e-12);
        assert_eq!(ls.boundaries, vec![10.0]);
    }

    #[test]
    fn dp_obvious_split() {
        let ls = smart_bins_dp_exact(&[9.0, 1.0, 10.0, 2.0], 2).unwrap();
        assert_eq!(ls.labels, vec![1, 0, 1, 0]);
        assert_eq!(ls.inertia, 1.0);
    }

    #[test]
    fn dp_zero_inertia_at_distinct_count() {
        let v = [3.0, 1.0, 1.0, 2.0, 3.0, 7.0];
        let ls = smart_bins_dp_exact(&v, 4).unwrap();
        assert_eq!(ls.inertia, 0.0);
        assert_eq!(ls.labels, vec![2, 0, 0, 1, 2, 3]);
    }

    #[test]
    fn too_few_distinct_values() {
        assert!(matches!(smart_bins_kmeans(&[1.0, 1.0, 2.0], 3, 0), Err(Error::Degenerate(_))));
        assert!(matches!(smart_bins_dp_exact(&[1.0, 1.0], 2), Err(Error::Degenerate(_))));
        assert!(smart_bins_kmeans(&[1.0, 2.0], 1, 0).is_err());
        assert!(smart_bins_kmeans(&[1.0, f64::NAN], 2, 0).is_err());
    }

    #[test]
    fn midpoint_ties_go_down() {
        let cuts = assign(&[0.0, 1.0, 2.0], &[0.0, 2.0]);
        assert_eq!(cuts, vec![0, 2, 3]);
    }

    #[test]
    fn fixed_top_five_percent() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let ls = fixed_bins_top_percent(&v, 0.05).unwrap();
        let top: Vec<f64> = v.iter().zip(&ls.labels).filter(|(_, &l)| l == 1).map(|(x, _)| *x).collect();
        assert_eq!(top, vec![96.0, 97.0, 98.0, 99.0, 100.0]);
    }

    #[test]
    fn fixed_top_includes_ties() {
        let ls = fixed_bins_top_percent(&[0.0, 0.0, 5.0, 5.0, 5.0], 0.2).unwrap();
        assert_eq!(ls.labels, vec![0, 0, 1, 1, 1]);
        // cut at the minimum falls back to "above the minimum"
        let ls = fixed_bins_top_percent(&[1.0, 1.0, 1.0, 2.0], 0.9).unwrap();
        assert_eq!(ls.labels, vec![0, 0, 0, 1]);
        assert!(fixed_bins_top_percent(&[2.0; 5], 0.2).is_err());
        assert!(fixed_bins_top_percent(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn quantile_bins_equal_counts() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let ls = baseline_bins(&v, 4, BaselineKind::Quantile).unwrap();
        assert_eq!(ls.class_counts(), vec![25; 4]);
    }

    #[test]
    fn uniform_bins_split_by_width() {
        let ls = baseline_bins(&[0.0, 1.0, 2.0, 100.0], 2, BaselineKind::Uniform).unwrap();
        assert_eq!(ls.labels, vec![0, 0, 0, 1]);
        // middle bin empty -> merged
        let ls = baseline_bins(&[0.0, 1.0, 2.0, 100.0], 3, BaselineKind::Uniform).unwrap();
        assert_eq!(ls.k, 2);
        assert_eq!(ls.labels, vec![0, 0, 0, 1]);
        assert!(baseline_bins(&[4.0; 3], 2, BaselineKind::Uniform).is_err());
    }

    #[test]
    fn select_k_rules() {
        let mut two_point = vec![1.0; 50];
        two_point.extend(vec![5.0; 50]);
        assert_eq!(select_k(&two_point, 5, 10).unwrap(), 2);
        let uniform: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        assert_eq!(select_k(&uniform, 5, 10).unwrap(), 5);
        assert!(select_k(&uniform[..15], 5, 10).is_err());
        assert!(select_k(&uniform, 1, 10).is_err());
    }

    #[test]
    fn kmeans_properties_on_skewed_sample() {
        let v: Vec<f64> = (0..500).map(|i| ((i * 7919) % 500) as f64).map(|x| (x / 60.0).exp()).collect();
        for k in 2..=5 {
            let ls = smart_bins_kmeans(&v, k, 3).unwrap();
            assert_eq!(ls.k, k);
            assert!(ls.class_counts().iter().all(|&c| c > 0));
            assert!(ls.centroids.windows(2).all(|w| w[0] < w[1]));
            assert!(sorted_labels_nondecreasing(&v, &ls));
            let dp = smart_bins_dp_exact(&v, k).unwrap();
            assert!(dp.inertia <= ls.inertia * (1.0 + 1e-12));
            assert!(sorted_labels_nondecreasing(&v, &dp));
        }
    }

    #[test]
    fn top_share_and_centroid_assignment() {
        let ls = smart_bins_kmeans(&[0.0, 0.2, 0.1, 9.0], 2, 1).unwrap();
        assert_eq!(ls.top_share(), 0.25);
        let a = ls.assigned_centroids().unwrap();
        assert_eq!(a[3], 9.0);
        assert!((a[0] - 0.1).abs() < 1e-12);
    }
}
