use keynode::diffusion::{NetworkFamily, TaskId, ThresholdSet};
use keynode::evaluation::*;
use keynode::graph::{generate_synthetic, SyntheticModel};
use keynode::labeling::BinSpec;
use keynode::models::{ModelKind, ModelParams, ModelSpec};
use keynode::rng::rng_for;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use std::sync::OnceLock;

mod support;

fn dataset() -> &'static NetworkDataset {
    static DS: OnceLock<NetworkDataset> = OnceLock::new();
    DS.get_or_init(|| {
        let g = generate_synthetic(SyntheticModel::DirectedBarabasiAlbert { m: 2 }, 400, 17).unwrap();
        NetworkDataset::build("fixture", NetworkFamily::Citation, &g, ThresholdSet::citation(), 30, 5).unwrap()
    })
}

fn small_gbm(seed: u64) -> ModelSpec {
    let mut spec = ModelSpec::new(ModelKind::Gbm, seed);
    if let ModelParams::Gbm { n_rounds, .. } = &mut spec.params {
        *n_rounds = 30;
    }
    spec
}

#[test]
fn f1_macro_matches_confusion_oracle() {
    support::f1_matches_oracle().unwrap();
    for c in support::confusion_matrices() {
        let (yt, yp) = support::expand(&c);
        let classes: Vec<usize> = (0..c.len()).collect();
        assert_eq!(confusion_matrix(&yt, &yp, &classes), c);
    }
}

#[test]
fn reports_are_reproducible_and_consistent() {
    let ds = dataset();
    let opts = EvalOptions { trials: 3, ..Default::default() };
    let a = within_network_eval(ds, TaskId::InfluenceRange, 2, &small_gbm(1), &opts, 9).unwrap();
    let b = within_network_eval(ds, TaskId::InfluenceRange, 2, &small_gbm(1), &opts, 9).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_eq!(a.trial_f1.len(), 3);
    assert!(a.trial_f1.iter().all(|f| (0.0..=1.0).contains(f)));
    let supports: usize = a.support.iter().sum();
    // every trial tests a fifth of the nodes, all thresholds each
    assert!(supports > 0 && supports % 3 == 0);
    for (row, &s) in a.confusion.iter().zip(&a.support) {
        assert_eq!(row.iter().sum::<usize>(), s);
    }
}

#[test]
fn shuffled_labels_score_near_chance() {
    let ds = dataset();
    let k = 3;
    let n = ds.n_nodes();
    let mut rng = rng_for(42, &[]);
    let mut node_labels: Vec<usize> = (0..n).map(|v| v % k).collect();
    node_labels.shuffle(&mut rng);
    let rows: Vec<usize> = node_labels.iter().flat_map(|&l| [l; 3]).collect();
    let opts = EvalOptions { trials: 5, ..Default::default() };
    let res = paired_trials(ds, &[&rows], &small_gbm(3), &opts, 4).unwrap();
    let mean = res[0].iter().map(|r| r.f1_macro).sum::<f64>() / res[0].len() as f64;
    assert!((mean - 1.0 / k as f64).abs() <= 0.1, "mean F1 {mean}");
}

#[test]
fn identical_arms_score_identically() {
    let ds = dataset();
    let labels = label_dataset(ds, TaskId::PeakTime, &BinSpec::smart(2), LabelMode::PerThreshold, 1).unwrap();
    let opts = EvalOptions { trials: 2, ..Default::default() };
    let cmp = compare_label_sets(ds, &labels, &labels, &small_gbm(0), &opts, 2).unwrap();
    for (a, b) in &cmp.paired_f1 {
        assert_eq!(a, b);
    }
}

#[test]
fn knn_memorizes_its_training_set() {
    let ds = dataset();
    let labels = label_dataset(ds, TaskId::InfluenceRange, &BinSpec::smart(2), LabelMode::PerThreshold, 1).unwrap();
    let x = keynode::features::fit_standardizer(&ds.features).unwrap().apply(&ds.features).unwrap();
    let mut spec = ModelSpec::new(ModelKind::Knn, 0);
    spec.params = ModelParams::Knn { k: 1 };
    // duplicate feature rows with different labels cannot be memorized
    let mut seen = std::collections::HashMap::new();
    let mut keep = Vec::new();
    for i in 0..x.n_rows() {
        let key: Vec<u64> = x.row(i).iter().map(|v| v.to_bits()).collect();
        if seen.insert(key, i).is_none() {
            keep.push(i);
        }
    }
    let xs = x.select_rows(&keep);
    let ys: Vec<usize> = keep.iter().map(|&i| labels.rows[i]).collect();
    let res = fit_and_score(&spec, &xs, &ys, &xs, &ys).unwrap();
    assert_eq!(res.f1_macro, 1.0);
}

#[test]
fn self_generalization_is_at_least_held_out_score() {
    let ds = dataset();
    let opts = EvalOptions { trials: 3, ..Default::default() };
    let within = within_network_eval(ds, TaskId::InfluenceRange, 2, &small_gbm(1), &opts, 3).unwrap();
    let cross = cross_network_eval(ds, ds, TaskId::InfluenceRange, 2, &small_gbm(1), &opts, 3).unwrap();
    assert!(cross.f1_macro_mean >= within.f1_macro_mean, "{} < {}", cross.f1_macro_mean, within.f1_macro_mean);
}

#[test]
fn infeasible_k_is_rejected() {
    let ds = dataset();
    let opts = EvalOptions { min_bin_size: 1000, ..Default::default() };
    let err = cross_network_eval(ds, ds, TaskId::InfluenceRange, 3, &small_gbm(1), &opts, 3).unwrap_err();
    assert!(matches!(err, keynode::Error::Evaluation(_)));
}

#[test]
fn reports_csv_has_one_line_per_trial() {
    let ds = dataset();
    let opts = EvalOptions { trials: 2, ..Default::default() };
    let r = within_network_eval(ds, TaskId::InfluencePeak, 2, &small_gbm(1), &opts, 3).unwrap();
    let mut buf = Vec::new();
    write_reports_csv(&[r.clone(), r], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("task,k,model,labeling,train,test,trial,f1"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_are_disjoint_and_keep_classes(
        strata in proptest::collection::vec(0usize..4, 10..120),
        t in 1usize..4,
        seed in any::<u64>(),
    ) {
        let labels: Vec<usize> = strata.iter().flat_map(|&s| std::iter::repeat_n(s, t)).collect();
        if let Ok(split) = split_nodes(&strata, &[&labels], t, 0.2, seed) {
            let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..strata.len()).collect::<Vec<_>>());
            let mut classes = strata.clone();
            classes.sort_unstable();
            classes.dedup();
            for c in classes {
                prop_assert!(split.train.iter().any(|&v| strata[v] == c));
                prop_assert!(split.test.iter().any(|&v| strata[v] == c));
            }
        } else {
            // only possible when some class has a single node
            let singles = (0..4).any(|c| strata.iter().filter(|&&s| s == c).count() == 1);
            prop_assert!(singles);
        }
    }
}
