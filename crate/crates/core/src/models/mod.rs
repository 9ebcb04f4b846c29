//! Multiclass classifiers: multinomial logistic regression, k-nearest
//! neighbours, random forest and gradient-boosted trees.
//!
//! Labels may be any `usize` values; a model stores the sorted label
//! vocabulary seen in training and only ever predicts from it. Whenever two
//! classes score the same, the lower one wins.

mod gbm;
mod knn;
mod logreg;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use logreg::LogregProblem;
pub use tree::{Split, Tree, TreeNode};

/// Serialization format version of [`TrainedModel`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    Knn,
    RandomForest,
    Gbm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Logreg, ModelKind::Knn, ModelKind::RandomForest, ModelKind::Gbm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Gbm => "gbm",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model kind {s:?}")))
    }
}

/// Features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(c) => c.clamp(1, d.max(1)),
        }
    }
}

/// Hyperparameters by model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Logreg {
        lambda: f64,
        max_iter: usize,
        tol: f64,
    },
    Knn {
        k: usize,
    },
    RandomForest {
        n_trees: usize,
        /// `None` grows until leaves are pure.
        max_depth: Option<usize>,
        max_features: MaxFeatures,
        bootstrap: bool,
        min_samples_leaf: usize,
    },
    Gbm {
        n_rounds: usize,
        learning_rate: f64,
        max_leaves: usize,
        min_samples_leaf: usize,
        min_hessian_leaf: f64,
        lambda: f64,
    },
}

impl ModelParams {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Logreg => ModelParams::Logreg {
                lambda: 1e-4,
                max_iter: 500,
                tol: 1e-6,
            },
            ModelKind::Knn => ModelParams::Knn { k: 5 },
            ModelKind::RandomForest => ModelParams::RandomForest {
                n_trees: 100,
                max_depth: None,
                max_features: MaxFeatures::Sqrt,
                bootstrap: true,
                min_samples_leaf: 1,
            },
            ModelKind::Gbm => ModelParams::Gbm {
                n_rounds: 100,
                learning_rate: 0.1,
                max_leaves: 31,
                min_samples_leaf: 5,
                min_hessian_leaf: 1e-3,
                lambda: 0.0,
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Logreg { .. } => ModelKind::Logreg,
            ModelParams::Knn { .. } => ModelKind::Knn,
            ModelParams::RandomForest { .. } => ModelKind::RandomForest,
            ModelParams::Gbm { .. } => ModelKind::Gbm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            ModelParams::Logreg { lambda, max_iter, tol } => {
                if !(lambda >= 0.0) || max_iter == 0 || !(tol > 0.0) {
                    return bad(format!("logreg lambda={lambda} max_iter={max_iter} tol={tol}"));
                }
            }
            ModelParams::Knn { k } => {
                if k == 0 {
                    return bad("knn needs k >= 1".into());
                }
            }
            ModelParams::RandomForest {
                n_trees,
                min_samples_leaf,
                max_depth,
                ..
            } => {
                if n_trees == 0 || min_samples_leaf == 0 || max_depth == Some(0) {
                    return bad("random forest needs trees, depth and leaf size >= 1".into());
                }
            }
            ModelParams::Gbm {
                n_rounds,
                learning_rate,
                max_leaves,
                min_samples_leaf,
                min_hessian_leaf,
                lambda,
            } => {
                if n_rounds == 0
                    || !(learning_rate > 0.0)
                    || max_leaves < 2
                    || min_samples_leaf == 0
                    || !(min_hessian_leaf >= 0.0)
                    || !(lambda >= 0.0)
                {
                    return bad("invalid gbm hyperparameters".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    None,
    /// `n / (classes * count_c)`.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: ModelParams,
    pub seed: u64,
    #[serde(default)]
    pub class_weight: ClassWeight,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelSpec {
            params: ModelParams::default_for(kind),
            seed,
            class_weight: ClassWeight::None,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }
}

/// Fitted state by model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Logreg {
        /// `classes x (d + 1)`, bias last.
        weights: Vec<Vec<f64>>,
        iterations: usize,
        grad_norm: f64,
        converged: bool,
    },
    Knn {
        k: usize,
        /// Row-major training points.
        points: Vec<f64>,
        targets: Vec<usize>,
        weights: Vec<f64>,
    },
    RandomForest {
        trees: Vec<Tree>,
    },
    Gbm {
        init: Vec<f64>,
        learning_rate: f64,
        /// One tree per class per round.
        rounds: Vec<Vec<Tree>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub spec: ModelSpec,
    /// Sorted label vocabulary; internal class `c` predicts `classes[c]`.
    pub classes: Vec<usize>,
    pub feature_names: Vec<String>,
    pub state: ModelState,
}

/// Checks rows, labels and features; returns the label vocabulary and
/// per-row class indices.
fn prepare(x: &FeatureMatrix, y: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if x.n_rows() != y.len() {
        return Err(Error::Training(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if let Some(pos) = x.values().iter().position(|v| !v.is_finite()) {
        let d = x.n_cols();
        return Err(Error::Validation(format!(
            "non-finite feature {} in row {}",
            x.feature_names[pos % d],
            pos / d
        )));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 classes, got {}",
            classes.len()
        )));
    }
    let idx = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label in vocabulary"))
        .collect();
    Ok((classes, idx))
}

fn sample_weights(cw: ClassWeight, y: &[usize], n_classes: usize) -> Vec<f64> {
    match cw {
        ClassWeight::None => vec![1.0; y.len()],
        ClassWeight::Balanced => {
            let mut counts = vec![0usize; n_classes];
            for &c in y {
                counts[c] += 1;
            }
            let n = y.len() as f64;
            y.iter()
                .map(|&c| n / (n_classes as f64 * counts[c] as f64))
                .collect()
        }
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn train(spec: &ModelSpec, x: &FeatureMatrix, y: &[usize]) -> Result<TrainedModel> {
    spec.params.validate()?;
    let (classes, yi) = prepare(x, y)?;
    let c = classes.len();
    let w = sample_weights(spec.class_weight, &yi, c);
    let d = x.n_cols();
    let state = match spec.params {
        ModelParams::Logreg { lambda, max_iter, tol } => {
            let problem = LogregProblem {
                x: x.values(),
                d,
                y: &yi,
                weights: &w,
                n_classes: c,
                lambda,
            };
            logreg::fit(&problem, max_iter, tol)
        }
        ModelParams::Knn { k } => ModelState::Knn {
            k,
            points: x.values().to_vec(),
            targets: yi,
            weights: w,
        },
        ModelParams::RandomForest {
            n_trees,
            max_depth,
            max_features,
            bootstrap,
            min_samples_leaf,
        } => {
            let opts = tree::ClassTreeOptions {
                max_depth,
                max_features: max_features.resolve(d),
                min_samples_leaf,
            };
            let all: Vec<u32> = (0..yi.len() as u32).collect();
            let sorted = tree::presort(x.values(), d, &all);
            let trees = crate::par::map_range(n_trees, |t| {
                let mut rng = crate::rng::rng_for(spec.seed, &[t as u64]);
                let mut tw = w.clone();
                if bootstrap {
                    let counts = tree::bootstrap_counts(yi.len(), &mut rng);
                    for (wi, k) in tw.iter_mut().zip(counts) {
                        *wi *= k as f64;
                    }
                }
                tree::fit_class_tree(x.values(), d, &sorted, &yi, &tw, c, &opts, &mut rng)
            });
            ModelState::RandomForest { trees }
        }
        ModelParams::Gbm {
            n_rounds,
            learning_rate,
            max_leaves,
            min_samples_leaf,
            min_hessian_leaf,
            lambda,
        } => {
            let opts = tree::RegTreeOptions {
                max_leaves,
                min_samples_leaf,
                min_hessian_leaf,
                lambda,
            };
            gbm::fit(x.values(), d, &yi, &w, c, n_rounds, learning_rate, &opts)
        }
    };
    log::debug!("trained {} on {} rows, {} classes", spec.kind(), y.len(), c);
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        classes,
        feature_names: x.feature_names.clone(),
        state,
    })
}

/// Single Gini tree grown on every row with every feature considered at
/// each split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub classes: Vec<usize>,
    pub feature_names: Vec<String>,
    pub tree: Tree,
}

pub fn fit_decision_tree(x: &FeatureMatrix, y: &[usize], max_depth: Option<usize>) -> Result<DecisionTree> {
    let (classes, yi) = prepare(x, y)?;
    let w = vec![1.0; yi.len()];
    let tree = tree::fit_plain_class_tree(x.values(), x.n_cols(), &yi, &w, classes.len(), max_depth);
    Ok(DecisionTree {
        classes,
        feature_names: x.feature_names.clone(),
        tree,
    })
}

impl DecisionTree {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        if x.feature_names != self.feature_names {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                actual: x.feature_names.clone(),
            });
        }
        Ok(x.rows().map(|r| self.classes[argmax(self.tree.leaf(r))]).collect())
    }
}

impl TrainedModel {
    /// Logistic regression with all weights zero; every row scores the
    /// classes equally.
    pub fn zero_logreg(classes: Vec<usize>, feature_names: Vec<String>) -> Self {
        let d = feature_names.len();
        TrainedModel {
            version: MODEL_FORMAT_VERSION,
            spec: ModelSpec::new(ModelKind::Logreg, 0),
            state: ModelState::Logreg {
                weights: vec![vec![0.0; d + 1]; classes.len()],
                iterations: 0,
                grad_norm: 0.0,
                converged: false,
            },
            classes,
            feature_names,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn check_features(&self, x: &FeatureMatrix) -> Result<()> {
        if x.feature_names != self.feature_names {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                actual: x.feature_names.clone(),
            });
        }
        Ok(())
    }

    /// Class probabilities for one raw feature row (internal class order).
    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        debug_assert_eq!(row.len(), self.n_features());
        let c = self.n_classes();
        match &self.state {
            ModelState::Logreg { weights, .. } => logreg::proba(weights, row),
            ModelState::Knn {
                k,
                points,
                targets,
                weights,
            } => knn::proba(points, targets, weights, row, *k, c),
            ModelState::RandomForest { trees } => {
                let mut p = vec![0.0; c];
                for t in trees {
                    p[argmax(t.leaf(row))] += 1.0;
                }
                let m = trees.len() as f64;
                p.iter_mut().for_each(|v| *v /= m);
                p
            }
            ModelState::Gbm {
                init,
                learning_rate,
                rounds,
            } => gbm::proba(init, *learning_rate, rounds, rounds.len(), row),
        }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_features(x)?;
        Ok(crate::par::map_range(x.n_rows(), |i| self.proba_row(x.row(i))))
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba(x)?
            .iter()
            .map(|p| self.classes[argmax(p)])
            .collect())
    }

    /// Gbm probabilities using only the first `rounds` boosting rounds.
    pub fn staged_proba(&self, x: &FeatureMatrix, rounds: usize) -> Result<Vec<Vec<f64>>> {
        self.check_features(x)?;
        match &self.state {
            ModelState::Gbm {
                init,
                learning_rate,
                rounds: trees,
            } => Ok((0..x.n_rows())
                .map(|i| gbm::proba(init, *learning_rate, trees, rounds.min(trees.len()), x.row(i)))
                .collect()),
            _ => Err(Error::InvalidParameter("staged predictions need a gbm model".into())),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }
}

/// Mean negative log-likelihood of `y` under `proba` (rows in class order of
/// `classes`).
pub fn log_loss(proba: &[Vec<f64>], y: &[usize], classes: &[usize]) -> f64 {
    let total: f64 = proba
        .iter()
        .zip(y)
        .map(|(p, l)| {
            let c = classes.binary_search(l).expect("label in vocabulary");
            -p[c].max(1e-300).ln()
        })
        .sum();
    total / y.len() as f64
}
