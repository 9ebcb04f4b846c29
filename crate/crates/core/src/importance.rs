//! Monte Carlo Shapley attributions by permutation sampling.
//!
//! Out-of-coalition features take their values from a background row.
//! Permutation `p` uses background row `p mod B` of a shuffled background
//! order, so with a permutation count that is a multiple of `B` the
//! attributions of one sample sum exactly to `f(x)` minus the background
//! mean of `f`.

use std::io::Write;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{argmax, TrainedModel};
use crate::rng::{rng_for, stable_hash};

pub const DEFAULT_SAMPLE_SIZE: usize = 500;
pub const DEFAULT_PERMUTATIONS: usize = 200;
pub const DEFAULT_BACKGROUND_SIZE: usize = 100;

/// Anything that maps a feature row to per-class scores.
pub trait Scorer: Sync {
    fn n_features(&self) -> usize;
    fn scores(&self, row: &[f64]) -> Vec<f64>;
}

impl Scorer for TrainedModel {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.proba_row(row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    /// Standard error of each attribution over the permutations.
    pub std_err: Vec<f64>,
    /// Class whose score is explained (highest score at `x`).
    pub target: usize,
    pub fx: f64,
    /// Mean target score over the background rows used.
    pub background_mean: f64,
    /// Standard error of the attribution sum.
    pub sum_std_err: f64,
}

/// Attributions for one row against a row-major background.
pub fn shapley_values<S: Scorer + ?Sized>(
    scorer: &S,
    x: &[f64],
    background: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<ShapleyEstimate> {
    let d = scorer.n_features();
    if x.len() != d || background.len() % d.max(1) != 0 {
        return Err(Error::InvalidParameter(format!(
            "row of width {} or background of {} values for {d} features",
            x.len(),
            background.len()
        )));
    }
    let b = background.len() / d.max(1);
    if permutations == 0 || b == 0 {
        return Err(Error::InvalidParameter(
            "shapley sampling needs permutations >= 1 and a nonempty background".into(),
        ));
    }
    let fx_all = scorer.scores(x);
    let target = argmax(&fx_all);
    let fx = fx_all[target];
    let mut rng = rng_for(seed, &[]);
    let mut bg_order: Vec<usize> = (0..b).collect();
    bg_order.shuffle(&mut rng);
    let mut perm: Vec<usize> = (0..d).collect();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let (mut tot, mut tot_sq, mut bg_sum) = (0.0, 0.0, 0.0);
    let mut z = vec![0.0; d];
    for p in 0..permutations {
        perm.shuffle(&mut rng);
        let bi = bg_order[p % b];
        z.copy_from_slice(&background[bi * d..(bi + 1) * d]);
        let base = scorer.scores(&z)[target];
        bg_sum += base;
        let mut prev = base;
        for &j in &perm {
            z[j] = x[j];
            let cur = scorer.scores(&z)[target];
            let delta = cur - prev;
            sum[j] += delta;
            sum_sq[j] += delta * delta;
            prev = cur;
        }
        let total = prev - base;
        tot += total;
        tot_sq += total * total;
    }
    let m = permutations as f64;
    let se = |s: f64, s2: f64| {
        if permutations < 2 {
            f64::INFINITY
        } else {
            let var = ((s2 - s * s / m) / (m - 1.0)).max(0.0);
            (var / m).sqrt()
        }
    };
    Ok(ShapleyEstimate {
        values: sum.iter().map(|s| s / m).collect(),
        std_err: sum.iter().zip(&sum_sq).map(|(&s, &s2)| se(s, s2)).collect(),
        target,
        fx,
        background_mean: bg_sum / m,
        sum_std_err: se(tot, tot_sq),
    })
}

/// [`shapley_values`] for a trained model, checking the background columns.
pub fn shapley_sample(
    model: &TrainedModel,
    x: &[f64],
    background: &FeatureMatrix,
    permutations: usize,
    seed: u64,
) -> Result<ShapleyEstimate> {
    model.check_features(background)?;
    shapley_values(model, x, background.values(), permutations, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    pub mean_abs_shapley: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample_shapley: Option<Vec<Vec<f64>>>,
    pub sample_rows: Vec<usize>,
    pub samples_used: usize,
    pub permutations_per_sample: usize,
    pub background_size: usize,
    pub seed: u64,
}

impl ImportanceReport {
    /// `(feature, mean |shapley|)` by decreasing importance; equal values
    /// keep column order.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut r: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.mean_abs_shapley.iter().copied())
            .collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1));
        r
    }

    /// 1-based rank of a feature.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranking().iter().position(|(n, _)| n == feature).map(|p| p + 1)
    }

    pub fn write_ranked_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["feature", "mean_abs_shapley"])?;
        for (name, v) in self.ranking() {
            wtr.write_record([name, v.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<importance csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceOptions {
    pub sample_size: usize,
    pub permutations: usize,
    pub background_size: usize,
    pub keep_per_sample: bool,
}

impl Default for ImportanceOptions {
    fn default() -> Self {
        ImportanceOptions {
            sample_size: DEFAULT_SAMPLE_SIZE,
            permutations: DEFAULT_PERMUTATIONS,
            background_size: DEFAULT_BACKGROUND_SIZE,
            keep_per_sample: false,
        }
    }
}

/// Mean |Shapley| over a seeded sample of rows of `x`. The background is a
/// seeded uniform sample of rows of `x` as well.
pub fn importance_report(model: &TrainedModel, x: &FeatureMatrix, opts: &ImportanceOptions, seed: u64) -> Result<ImportanceReport> {
    model.check_features(x)?;
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::InvalidParameter("importance of an empty matrix".into()));
    }
    if opts.sample_size == 0 || opts.sample_size > n {
        return Err(Error::InvalidParameter(format!(
            "sample size {} outside 1..={n}",
            opts.sample_size
        )));
    }
    let mut rng = rng_for(seed, &[0]);
    let mut sample_rows = index::sample(&mut rng, n, opts.sample_size).into_vec();
    sample_rows.sort_unstable();
    let mut rng = rng_for(seed, &[1]);
    let mut bg_rows = index::sample(&mut rng, n, opts.background_size.clamp(1, n)).into_vec();
    bg_rows.sort_unstable();
    let background = x.select_rows(&bg_rows);
    let estimates = crate::par::map_range(sample_rows.len(), |i| {
        let row = sample_rows[i];
        shapley_values(
            model,
            x.row(row),
            background.values(),
            opts.permutations,
            stable_hash(seed, &[2, row as u64]),
        )
        .map(|e| e.values)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let d = x.n_cols();
    let mut mean_abs = vec![0.0; d];
    for e in &estimates {
        for (m, v) in mean_abs.iter_mut().zip(e) {
            *m += v.abs();
        }
    }
    let s = estimates.len() as f64;
    mean_abs.iter_mut().for_each(|m| *m /= s);
    Ok(ImportanceReport {
        feature_names: x.feature_names.clone(),
        mean_abs_shapley: mean_abs,
        per_sample_shapley: opts.keep_per_sample.then_some(estimates),
        samples_used: sample_rows.len(),
        sample_rows,
        permutations_per_sample: opts.permutations,
        background_size: bg_rows.len(),
        seed,
    })
}
