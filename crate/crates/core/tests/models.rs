use keynode::features::FeatureMatrix;
use keynode::models::*;
use keynode::rng::rng_for;
use proptest::prelude::*;
use rand::Rng;

mod support;

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn blobs(n: usize, sep: f64, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = rng_for(seed, &[]);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = i % 2;
        let centre = if c == 0 { -sep } else { sep };
        rows.push(vec![centre + normal(&mut rng), centre + normal(&mut rng)]);
        y.push(c);
    }
    (FeatureMatrix::from_rows(names(2), &rows).unwrap(), y)
}

fn accuracy(a: &[usize], b: &[usize]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

#[test]
fn logreg_separates_blobs() {
    let (x, y) = blobs(100, 4.0, 1);
    let m = train(&ModelSpec::new(ModelKind::Logreg, 0), &x, &y).unwrap();
    assert!(accuracy(&m.predict(&x).unwrap(), &y) >= 0.99);
}

#[test]
fn logreg_reports_convergence() {
    let (x, y) = blobs(200, 1.0, 2);
    let m = train(&ModelSpec::new(ModelKind::Logreg, 0), &x, &y).unwrap();
    match m.state {
        ModelState::Logreg {
            grad_norm,
            converged,
            iterations,
            ..
        } => {
            assert!(converged, "stopped at {iterations} with {grad_norm}");
            assert!(grad_norm <= 1e-6);
        }
        _ => unreachable!(),
    }
}

fn noiseless(n: usize, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = rng_for(seed, &[]);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let r = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let label = if r[0] < 0.4 {
            0
        } else if r[1] < 0.5 {
            1
        } else {
            2
        };
        rows.push(r);
        y.push(label);
    }
    (FeatureMatrix::from_rows(names(3), &rows).unwrap(), y)
}

#[test]
fn gbm_fits_noiseless_data() {
    let (x, y) = noiseless(50, 3);
    let m = train(&ModelSpec::new(ModelKind::Gbm, 0), &x, &y).unwrap();
    assert_eq!(accuracy(&m.predict(&x).unwrap(), &y), 1.0);
}

#[test]
fn gbm_training_loss_never_increases() {
    let (x, y) = blobs(300, 0.7, 4);
    let m = train(&ModelSpec::new(ModelKind::Gbm, 0), &x, &y).unwrap();
    let mut prev = f64::INFINITY;
    for r in 0..=100 {
        let loss = log_loss(&m.staged_proba(&x, r).unwrap(), &y, &m.classes);
        assert!(loss <= prev + 1e-12, "round {r}: {loss} > {prev}");
        prev = loss;
    }
}

#[test]
fn knn_one_neighbour_memorizes() {
    let (x, y) = noiseless(80, 5);
    let mut spec = ModelSpec::new(ModelKind::Knn, 0);
    spec.params = ModelParams::Knn { k: 1 };
    let m = train(&spec, &x, &y).unwrap();
    assert_eq!(m.predict(&x).unwrap(), y);
}

#[test]
fn knn_vote_tie_goes_to_lower_class() {
    let x = FeatureMatrix::from_rows(names(1), &[vec![-1.0], vec![1.0]]).unwrap();
    let mut spec = ModelSpec::new(ModelKind::Knn, 0);
    spec.params = ModelParams::Knn { k: 2 };
    let m = train(&spec, &x, &[4, 2]).unwrap();
    let q = FeatureMatrix::from_rows(names(1), &[vec![0.0], vec![5.0]]).unwrap();
    assert_eq!(m.predict(&q).unwrap(), vec![2, 2]);
}

#[test]
fn zero_weights_predict_lowest_class() {
    let (x, _) = blobs(20, 1.0, 6);
    let m = TrainedModel::zero_logreg(vec![0, 1, 2], names(2));
    assert_eq!(m.predict(&x).unwrap(), vec![0; 20]);
}

#[test]
fn symmetric_blobs_give_even_odds_at_midpoint() {
    let (half, yh) = blobs(50, 2.0, 7);
    let mut rows: Vec<Vec<f64>> = half.rows().map(<[f64]>::to_vec).collect();
    rows.extend(half.rows().map(|r| r.iter().map(|v| -v).collect::<Vec<_>>()));
    let mut y = yh.clone();
    y.extend(yh.iter().map(|c| 1 - c));
    let x = FeatureMatrix::from_rows(names(2), &rows).unwrap();
    let m = train(&ModelSpec::new(ModelKind::Logreg, 0), &x, &y).unwrap();
    let mid = FeatureMatrix::from_rows(names(2), &[vec![0.0, 0.0]]).unwrap();
    let p = &m.predict_proba(&mid).unwrap()[0];
    assert!((p[0] - 0.5).abs() < 1e-6 && (p[1] - 0.5).abs() < 1e-6, "{p:?}");
}

#[test]
fn identical_trees_vote_unanimously() {
    let (x, y) = blobs(60, 0.5, 8);
    let mut spec = ModelSpec::new(ModelKind::RandomForest, 3);
    spec.params = ModelParams::RandomForest {
        n_trees: 7,
        max_depth: Some(3),
        max_features: MaxFeatures::All,
        bootstrap: false,
        min_samples_leaf: 1,
    };
    let m = train(&spec, &x, &y).unwrap();
    for p in m.predict_proba(&x).unwrap() {
        assert!(p.iter().all(|&v| v == 0.0 || v == 1.0), "{p:?}");
    }
}

#[test]
fn one_tree_forest_is_a_decision_tree() {
    for seed in 0..5 {
        let (x, y) = blobs(120, 0.6, 20 + seed);
        let mut spec = ModelSpec::new(ModelKind::RandomForest, seed);
        spec.params = ModelParams::RandomForest {
            n_trees: 1,
            max_depth: None,
            max_features: MaxFeatures::All,
            bootstrap: false,
            min_samples_leaf: 1,
        };
        let forest = train(&spec, &x, &y).unwrap();
        let tree = fit_decision_tree(&x, &y, None).unwrap();
        let (q, _) = blobs(200, 0.6, 99);
        assert_eq!(forest.predict(&q).unwrap(), tree.predict(&q).unwrap());
        match &forest.state {
            ModelState::RandomForest { trees } => assert_eq!(trees[0], tree.tree),
            _ => unreachable!(),
        }
    }
}

#[test]
fn logreg_gradient_matches_finite_differences() {
    support::logreg_gradient().unwrap();
}

#[test]
fn training_is_deterministic() {
    let (x, y) = noiseless(150, 9);
    for kind in ModelKind::ALL {
        let spec = ModelSpec::new(kind, 11);
        let a = train(&spec, &x, &y).unwrap().to_json().unwrap();
        let b = train(&spec, &x, &y).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn forest_is_independent_of_worker_count() {
    let (x, y) = noiseless(150, 10);
    let spec = ModelSpec::new(ModelKind::RandomForest, 5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train(&spec, &x, &y).unwrap().to_json().unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(8));
}

#[test]
fn probabilities_sum_to_one_for_every_kind() {
    let (x, y) = noiseless(90, 12);
    let (q, _) = noiseless(40, 13);
    for kind in ModelKind::ALL {
        let m = train(&ModelSpec::new(kind, 0), &x, &y).unwrap();
        for p in m.predict_proba(&q).unwrap() {
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "{kind}: {p:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn predictions_come_from_training_labels(
        seed in 0u64..1000,
        labels in proptest::collection::vec(prop_oneof![Just(3usize), Just(8), Just(11)], 30),
        kind in prop_oneof![Just(ModelKind::Logreg), Just(ModelKind::Knn), Just(ModelKind::RandomForest), Just(ModelKind::Gbm)],
    ) {
        let (x, _) = noiseless(30, seed);
        let mut vocab = labels.clone();
        vocab.sort_unstable();
        vocab.dedup();
        prop_assume!(vocab.len() >= 2);
        let mut spec = ModelSpec::new(kind, seed);
        if let ModelParams::RandomForest { n_trees, .. } = &mut spec.params {
            *n_trees = 10;
        }
        if let ModelParams::Gbm { n_rounds, .. } = &mut spec.params {
            *n_rounds = 10;
        }
        let m = train(&spec, &x, &labels).unwrap();
        prop_assert_eq!(&m.classes, &vocab);
        let (q, _) = noiseless(20, seed + 1);
        for p in m.predict(&q).unwrap() {
            prop_assert!(vocab.contains(&p));
        }
    }
}
