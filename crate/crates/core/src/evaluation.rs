//! Task labels, stratified node-level splits, within- and cross-network
//! evaluation, macro F1, and the smart-versus-fixed binning comparison.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::centrality::{compute_all_centralities, NodeScoreMap};
use crate::diffusion::{simulate_all, NetworkFamily, SimulationRecord, TaskId, ThresholdSet};
use crate::error::{Error, Result};
use crate::features::{assemble_features, fit_standardizer, FeatureMatrix};
use crate::graph::Graph;
use crate::labeling::{apply_bins, smart_bins_dp_exact, BinSpec, LabelSet, DEFAULT_MIN_BIN_SIZE, DEFAULT_TOP_FRACTION};
use crate::models::{train, ModelSpec};
use crate::rng::{rng_for, stable_hash};

pub const DEFAULT_TRIALS: usize = 5;
pub const TEST_FRACTION: f64 = 0.2;
pub const SPLIT_RETRIES: usize = 20;

// ---------------------------------------------------------------------------
// scoring

/// Row = true class, column = predicted class, over `classes`.
pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], classes: &[usize]) -> Vec<Vec<usize>> {
    let pos = |l: usize| classes.iter().position(|&c| c == l);
    let mut m = vec![vec![0; classes.len()]; classes.len()];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if let (Some(i), Some(j)) = (pos(t), pos(p)) {
            m[i][j] += 1;
        }
    }
    m
}

/// F1 of each class present in `y_true`, in ascending class order.
pub fn per_class_f1(y_true: &[usize], y_pred: &[usize]) -> Result<Vec<(usize, f64)>> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Evaluation(format!(
            "f1 needs equal nonempty inputs, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut classes = y_true.to_vec();
    classes.sort_unstable();
    classes.dedup();
    Ok(classes
        .into_iter()
        .map(|c| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            let mut fn_ = 0usize;
            for (&t, &p) in y_true.iter().zip(y_pred) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            let denom = 2 * tp + fp + fn_;
            let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
            (c, f1)
        })
        .collect())
}

/// Unweighted mean of per-class F1 over the classes present in `y_true`.
pub fn f1_macro(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let per = per_class_f1(y_true, y_pred)?;
    Ok(per.iter().map(|(_, f)| f).sum::<f64>() / per.len() as f64)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

// ---------------------------------------------------------------------------
// datasets and labels

/// Everything the evaluation needs from one processed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDataset {
    pub name: String,
    pub family: NetworkFamily,
    pub thresholds: ThresholdSet,
    /// Node-major `(node, threshold)` records.
    pub records: Vec<SimulationRecord>,
    /// Raw (unscaled) features in the same row order as `records`.
    pub features: FeatureMatrix,
}

impl NetworkDataset {
    pub fn from_parts(
        name: impl Into<String>,
        family: NetworkFamily,
        thresholds: ThresholdSet,
        records: Vec<SimulationRecord>,
        centralities: &[NodeScoreMap],
    ) -> Result<Self> {
        let features = assemble_features(centralities, &thresholds)?;
        if records.len() != features.n_rows() {
            return Err(Error::Assembly(format!(
                "{} simulation records for {} feature rows",
                records.len(),
                features.n_rows()
            )));
        }
        for (rec, key) in records.iter().zip(&features.keys) {
            if rec.node != key.0 || rec.threshold != key.1 {
                return Err(Error::Assembly(format!(
                    "record ({}, {}) does not line up with feature row ({}, {})",
                    rec.node, rec.threshold, key.0, key.1
                )));
            }
        }
        Ok(NetworkDataset {
            name: name.into(),
            family,
            thresholds,
            records,
            features,
        })
    }

    /// Simulates and computes centralities in one go.
    pub fn build(
        name: impl Into<String>,
        family: NetworkFamily,
        g: &Graph,
        thresholds: ThresholdSet,
        runs: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let records = simulate_all(g, &thresholds, runs, master_seed, None)?;
        let cent = compute_all_centralities(g)?;
        Self::from_parts(name, family, thresholds, records, &cent)
    }

    pub fn n_nodes(&self) -> usize {
        self.records.len() / self.thresholds.len()
    }

    /// Task values of every node at one threshold, in node order.
    pub fn task_values(&self, task: TaskId, threshold_index: usize) -> Vec<f64> {
        let t = self.thresholds.len();
        self.records
            .iter()
            .skip(threshold_index)
            .step_by(t)
            .map(|r| task.value(r))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// One labeling per threshold group.
    #[default]
    PerThreshold,
    /// One labeling over all samples of the network.
    Pooled,
}

/// Labels of every sample row of a dataset for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLabels {
    pub task: TaskId,
    pub spec: BinSpec,
    pub mode: LabelMode,
    /// One set per threshold, or a single pooled set.
    pub groups: Vec<LabelSet>,
    /// Label per feature row.
    pub rows: Vec<usize>,
}

impl TaskLabels {
    /// Largest label of each node across its rows.
    pub fn node_max(&self, thresholds: usize) -> Vec<usize> {
        self.rows
            .chunks(thresholds)
            .map(|c| c.iter().copied().max().unwrap_or(0))
            .collect()
    }

    /// Top-class share per group.
    pub fn top_shares(&self) -> Vec<f64> {
        self.groups.iter().map(LabelSet::top_share).collect()
    }
}

pub fn label_dataset(ds: &NetworkDataset, task: TaskId, spec: &BinSpec, mode: LabelMode, seed: u64) -> Result<TaskLabels> {
    label_records(&ds.records, &ds.thresholds, task, spec, mode, seed)
}

/// Same as [`label_dataset`] from node-major records alone.
pub fn label_records(
    records: &[SimulationRecord],
    thresholds: &ThresholdSet,
    task: TaskId,
    spec: &BinSpec,
    mode: LabelMode,
    seed: u64,
) -> Result<TaskLabels> {
    let t = thresholds.len();
    if t == 0 || records.len() % t != 0 {
        return Err(Error::Assembly(format!("{} records for {t} thresholds", records.len())));
    }
    let n = records.len() / t;
    let task_idx = TaskId::ALL.iter().position(|&x| x == task).unwrap_or(0) as u64;
    let (groups, rows) = match mode {
        LabelMode::PerThreshold => {
            let groups = (0..t)
                .map(|ti| {
                    let values: Vec<f64> = records.iter().skip(ti).step_by(t).map(|r| task.value(r)).collect();
                    let group_seed = stable_hash(seed, &[task_idx, ti as u64]);
                    apply_bins(&values, spec, group_seed).map(|ls| ls.with_source(task, thresholds.values[ti]))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut rows = vec![0; n * t];
            for (ti, g) in groups.iter().enumerate() {
                for (v, &l) in g.labels.iter().enumerate() {
                    rows[v * t + ti] = l;
                }
            }
            (groups, rows)
        }
        LabelMode::Pooled => {
            let values: Vec<f64> = records.iter().map(|r| task.value(r)).collect();
            let mut ls = apply_bins(&values, spec, stable_hash(seed, &[task_idx]))?;
            ls.source_task = Some(task);
            let rows = ls.labels.clone();
            (vec![ls], rows)
        }
    };
    Ok(TaskLabels {
        task,
        spec: *spec,
        mode,
        groups,
        rows,
    })
}

/// Fails unless exact k-means with `k` bins leaves at least `min_bin_size`
/// samples in every bin of every threshold group.
pub fn check_k_feasible(ds: &NetworkDataset, task: TaskId, k: usize, min_bin_size: usize) -> Result<()> {
    for (ti, &p) in ds.thresholds.values.iter().enumerate() {
        let values = ds.task_values(task, ti);
        let ok = match smart_bins_dp_exact(&values, k) {
            Ok(ls) => ls.class_counts().iter().all(|&c| c >= min_bin_size),
            Err(Error::Degenerate(_)) => false,
            Err(e) => return Err(e),
        };
        if !ok {
            return Err(Error::Evaluation(format!(
                "k={k} infeasible for {} on {} at threshold {p} (bins below {min_bin_size})",
                task.name(),
                ds.name
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// splits and trials

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerFit {
    /// Fit on the training rows of each split.
    #[default]
    TrainSplit,
    /// Fit on all rows of the network.
    FullNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub trials: usize,
    pub test_fraction: f64,
    pub scaler: ScalerFit,
    pub label_mode: LabelMode,
    pub min_bin_size: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            trials: DEFAULT_TRIALS,
            test_fraction: TEST_FRACTION,
            scaler: ScalerFit::TrainSplit,
            label_mode: LabelMode::PerThreshold,
            min_bin_size: DEFAULT_MIN_BIN_SIZE,
        }
    }
}

/// Node-level split, stratified by `strata[v]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Seed that produced the accepted split.
    pub seed: u64,
    pub attempts: usize,
}

fn stratified_once<K: Ord + Copy>(strata: &[K], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut keys: Vec<K> = strata.to_vec();
    keys.sort();
    keys.dedup();
    let mut rng = rng_for(seed, &[]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for key in keys {
        let mut members: Vec<usize> = (0..strata.len()).filter(|&v| strata[v] == key).collect();
        members.shuffle(&mut rng);
        let size = members.len();
        let mut n_test = (test_fraction * size as f64).round() as usize;
        if size >= 2 {
            n_test = n_test.clamp(1, size - 1);
        }
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn rows_of(nodes: &[usize], t: usize) -> Vec<usize> {
    nodes.iter().flat_map(|&v| (v * t)..(v * t + t)).collect()
}

fn classes_of(labels: &[usize], rows: &[usize]) -> Vec<usize> {
    let mut c: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// Stratified split retried until every class of every label arm appears on
/// both sides.
pub fn split_nodes<K: Ord + Copy>(
    strata: &[K],
    arms: &[&[usize]],
    thresholds: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<NodeSplit> {
    for attempt in 0..SPLIT_RETRIES {
        let s = stable_hash(seed, &[attempt as u64]);
        let (train, test) = stratified_once(strata, test_fraction, s);
        let (tr, te) = (rows_of(&train, thresholds), rows_of(&test, thresholds));
        let all: Vec<usize> = (0..strata.len() * thresholds).collect();
        let ok = arms.iter().all(|labels| {
            let every = classes_of(labels, &all);
            classes_of(labels, &tr) == every && classes_of(labels, &te) == every
        });
        if ok {
            return Ok(NodeSplit {
                train,
                test,
                seed: s,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::Split(format!(
        "no split kept every class on both sides after {SPLIT_RETRIES} attempts"
    )))
}

/// Outcome of one fitted and scored model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub f1_macro: f64,
    pub per_class_f1: Vec<(usize, f64)>,
    pub y_true: Vec<usize>,
    pub y_pred: Vec<usize>,
}

/// Trains on `(x_train, y_train)` and scores on `(x_test, y_test)`. Both
/// matrices must already be scaled.
pub fn fit_and_score(
    spec: &ModelSpec,
    x_train: &FeatureMatrix,
    y_train: &[usize],
    x_test: &FeatureMatrix,
    y_test: &[usize],
) -> Result<TrialResult> {
    let model = train(spec, x_train, y_train)?;
    let y_pred = model.predict(x_test)?;
    Ok(TrialResult {
        f1_macro: f1_macro(y_test, &y_pred)?,
        per_class_f1: per_class_f1(y_test, &y_pred)?,
        y_true: y_test.to_vec(),
        y_pred,
    })
}

fn scaled_pair(x: &FeatureMatrix, train_rows: &[usize], test_rows: &[usize], mode: ScalerFit) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let xtr = x.select_rows(train_rows);
    let xte = x.select_rows(test_rows);
    let scaler = match mode {
        ScalerFit::TrainSplit => fit_standardizer(&xtr)?,
        ScalerFit::FullNetwork => fit_standardizer(x)?,
    };
    Ok((scaler.apply(&xtr)?, scaler.apply(&xte)?))
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TaskId,
    pub k: usize,
    pub labeling: BinSpec,
    pub label_mode: LabelMode,
    pub model: ModelSpec,
    pub train_network: String,
    pub test_network: String,
    pub trials: usize,
    pub trial_f1: Vec<f64>,
    pub f1_macro_mean: f64,
    pub f1_macro_std: f64,
    /// Classes of the confusion matrix, ascending.
    pub classes: Vec<usize>,
    /// Mean per-class F1 over the trials.
    pub per_class_f1: Vec<f64>,
    /// Summed over trials.
    pub confusion: Vec<Vec<usize>>,
    pub support: Vec<usize>,
    pub split: String,
    pub scaler: String,
    pub master_seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn report_from(
    results: &[TrialResult],
    task: TaskId,
    labeling: BinSpec,
    label_mode: LabelMode,
    model: &ModelSpec,
    train_network: &str,
    test_network: &str,
    split: &str,
    scaler: &str,
    master_seed: u64,
) -> EvalReport {
    let mut classes: Vec<usize> = results.iter().flat_map(|r| r.y_true.iter().copied()).collect();
    classes.sort_unstable();
    classes.dedup();
    let c = classes.len();
    let mut confusion = vec![vec![0; c]; c];
    let mut f1_sum = vec![0.0; c];
    let mut f1_cnt = vec![0usize; c];
    for r in results {
        let m = confusion_matrix(&r.y_true, &r.y_pred, &classes);
        for i in 0..c {
            for j in 0..c {
                confusion[i][j] += m[i][j];
            }
        }
        for &(cls, f) in &r.per_class_f1 {
            let i = classes.binary_search(&cls).expect("class listed");
            f1_sum[i] += f;
            f1_cnt[i] += 1;
        }
    }
    let trial_f1: Vec<f64> = results.iter().map(|r| r.f1_macro).collect();
    let (mean, std) = mean_std(&trial_f1);
    EvalReport {
        task,
        k: labeling.k,
        labeling,
        label_mode,
        model: model.clone(),
        train_network: train_network.to_owned(),
        test_network: test_network.to_owned(),
        trials: results.len(),
        trial_f1,
        f1_macro_mean: mean,
        f1_macro_std: std,
        per_class_f1: f1_sum.iter().zip(&f1_cnt).map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 }).collect(),
        support: confusion.iter().map(|row| row.iter().sum()).collect(),
        confusion,
        classes,
        split: split.to_owned(),
        scaler: scaler.to_owned(),
        master_seed,
    }
}

fn split_description(fraction: f64) -> String {
    format!("stratified node-level, test fraction {fraction}")
}

/// Runs `opts.trials` paired trials; every trial uses one split for all
/// label arms. Returns per-arm trial results.
pub fn paired_trials(
    ds: &NetworkDataset,
    arms: &[&[usize]],
    spec: &ModelSpec,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<Vec<Vec<TrialResult>>> {
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let t = ds.thresholds.len();
    for arm in arms {
        if arm.len() != ds.features.n_rows() {
            return Err(Error::Evaluation(format!(
                "{} labels for {} rows",
                arm.len(),
                ds.features.n_rows()
            )));
        }
    }
    let strata: Vec<Vec<usize>> = (0..ds.n_nodes())
        .map(|v| {
            arms.iter()
                .map(|a| a[v * t..(v + 1) * t].iter().copied().max().unwrap_or(0))
                .collect()
        })
        .collect();
    let strata_ref: Vec<&[usize]> = strata.iter().map(Vec::as_slice).collect();
    let per_trial = crate::par::map_range(opts.trials, |trial| -> Result<Vec<TrialResult>> {
        let split = split_nodes(
            &strata_ref,
            arms,
            t,
            opts.test_fraction,
            stable_hash(master_seed, &[trial as u64, 0]),
        )?;
        let (tr, te) = (rows_of(&split.train, t), rows_of(&split.test, t));
        let (xtr, xte) = scaled_pair(&ds.features, &tr, &te, opts.scaler)?;
        let mut model = spec.clone();
        model.seed = stable_hash(spec.seed, &[trial as u64]);
        arms.iter()
            .map(|labels| {
                let ytr: Vec<usize> = tr.iter().map(|&r| labels[r]).collect();
                let yte: Vec<usize> = te.iter().map(|&r| labels[r]).collect();
                fit_and_score(&model, &xtr, &ytr, &xte, &yte)
            })
            .collect()
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..arms.len())
        .map(|a| per_trial.iter().map(|r| r[a].clone()).collect())
        .collect())
}

/// Within-network evaluation of precomputed labels.
pub fn evaluate_labels(
    ds: &NetworkDataset,
    labels: &TaskLabels,
    spec: &ModelSpec,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<EvalReport> {
    let results = paired_trials(ds, &[&labels.rows], spec, opts, master_seed)?;
    Ok(report_from(
        &results[0],
        labels.task,
        labels.spec,
        labels.mode,
        spec,
        &ds.name,
        &ds.name,
        &split_description(opts.test_fraction),
        scaler_name(opts.scaler),
        master_seed,
    ))
}

fn scaler_name(s: ScalerFit) -> &'static str {
    match s {
        ScalerFit::TrainSplit => "fit on train split",
        ScalerFit::FullNetwork => "fit on full network",
    }
}

/// Smart Bins with `k` classes, stratified 80/20 node splits, mean and
/// standard deviation of macro F1 over the trials.
pub fn within_network_eval(
    ds: &NetworkDataset,
    task: TaskId,
    k: usize,
    spec: &ModelSpec,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<EvalReport> {
    let labels = label_dataset(ds, task, &BinSpec::smart(k), opts.label_mode, master_seed)?;
    evaluate_labels(ds, &labels, spec, opts, master_seed)
}

/// Trains on every sample of `train_ds` and scores every sample of
/// `test_ds`. Labels and scalers are computed per network.
pub fn cross_network_eval(
    train_ds: &NetworkDataset,
    test_ds: &NetworkDataset,
    task: TaskId,
    k: usize,
    spec: &ModelSpec,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<EvalReport> {
    check_k_feasible(train_ds, task, k, opts.min_bin_size)?;
    check_k_feasible(test_ds, task, k, opts.min_bin_size)?;
    let bins = BinSpec::smart(k);
    let ytr = label_dataset(train_ds, task, &bins, opts.label_mode, master_seed)?;
    let yte = label_dataset(test_ds, task, &bins, opts.label_mode, master_seed)?;
    let xtr = fit_standardizer(&train_ds.features)?.apply(&train_ds.features)?;
    let xte = fit_standardizer(&test_ds.features)?.apply(&test_ds.features)?;
    let result = fit_and_score(spec, &xtr, &ytr.rows, &xte, &yte.rows)?;
    Ok(report_from(
        &[result],
        task,
        bins,
        opts.label_mode,
        spec,
        &train_ds.name,
        &test_ds.name,
        "all samples of each network",
        "fit per network",
        master_seed,
    ))
}

/// Paired reports for two labelings evaluated on identical splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningComparison {
    pub network: String,
    pub task: TaskId,
    pub smart: EvalReport,
    pub fixed: EvalReport,
    /// `(smart, fixed)` macro F1 per trial.
    pub paired_f1: Vec<(f64, f64)>,
    pub smart_top_share: Vec<f64>,
    pub fixed_top_share: Vec<f64>,
}

pub fn compare_label_sets(
    ds: &NetworkDataset,
    a: &TaskLabels,
    b: &TaskLabels,
    spec: &ModelSpec,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<BinningComparison> {
    let results = paired_trials(ds, &[&a.rows, &b.rows], spec, opts, master_seed)?;
    let split = split_description(opts.test_fraction);
    let scaler = scaler_name(opts.scaler);
    let ra = report_from(&results[0], a.task, a.spec, a.mode, spec, &ds.name, &ds.name, &split, scaler, master_seed);
    let rb = report_from(&results[1], b.task, b.spec, b.mode, spec, &ds.name, &ds.name, &split, scaler, master_seed);
    Ok(BinningComparison {
        network: ds.name.clone(),
        task: a.task,
        paired_f1: ra.trial_f1.iter().copied().zip(rb.trial_f1.iter().copied()).collect(),
        smart: ra,
        fixed: rb,
        smart_top_share: a.top_shares(),
        fixed_top_share: b.top_shares(),
    })
}

/// Smart Bins (k = 2) against the fixed top-5% labeling.
pub fn binning_comparison(
    ds: &NetworkDataset,
    task: TaskId,
    spec: &ModelSpec,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<BinningComparison> {
    let smart = label_dataset(ds, task, &BinSpec::smart(2), opts.label_mode, master_seed)?;
    let fixed = label_dataset(ds, task, &BinSpec::fixed_top(DEFAULT_TOP_FRACTION), opts.label_mode, master_seed)?;
    compare_label_sets(ds, &smart, &fixed, spec, opts, master_seed)
}

/// Flat grid `task,k,model,train,test,trial,f1`.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["task", "k", "model", "labeling", "train", "test", "trial", "f1"])?;
    for r in reports {
        for (trial, f1) in r.trial_f1.iter().enumerate() {
            wtr.write_record([
                r.task.name().to_owned(),
                r.k.to_string(),
                r.model.kind().name().to_owned(),
                r.labeling.method.name().to_owned(),
                r.train_network.clone(),
                r.test_network.clone(),
                trial.to_string(),
                f1.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<report csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_examples() {
        assert_eq!(f1_macro(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(f1_macro(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.5);
        let v = f1_macro(&[0, 0, 0, 1], &[0, 0, 0, 0]).unwrap();
        assert!((v - 3.0 / 7.0).abs() < 1e-15);
        assert!(f1_macro(&[], &[]).is_err());
        // predicted-only classes do not enter the average
        assert_eq!(f1_macro(&[0, 0], &[0, 3]).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn confusion_rows_are_supports() {
        let m = confusion_matrix(&[0, 0, 1, 2, 2, 2], &[0, 1, 1, 2, 0, 2], &[0, 1, 2]);
        assert_eq!(m, vec![vec![1, 1, 0], vec![0, 1, 0], vec![1, 0, 2]]);
    }

    #[test]
    fn stratified_split_keeps_classes_and_nodes_apart() {
        let strata: Vec<usize> = (0..50).map(|v| usize::from(v % 10 == 0)).collect();
        let labels: Vec<usize> = strata.iter().flat_map(|&s| [s, s]).collect();
        let split = split_nodes(&strata, &[&labels], 2, 0.2, 7).unwrap();
        assert_eq!(split.train.len() + split.test.len(), 50);
        assert!(split.train.iter().all(|v| !split.test.contains(v)));
        assert_eq!(split.test.iter().filter(|&&v| strata[v] == 1).count(), 1);
        assert_eq!(split.test.len(), 10);
    }

    #[test]
    fn split_fails_when_a_class_has_one_node() {
        let strata = vec![0, 0, 0, 0, 1];
        let err = split_nodes(&strata, &[&strata], 1, 0.2, 0).unwrap_err();
        assert!(matches!(err, Error::Split(_)));
    }
}
