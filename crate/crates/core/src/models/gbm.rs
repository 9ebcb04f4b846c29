use super::tree::{fit_reg_tree, presort, RegTreeOptions, Tree};
use super::ModelState;

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

/// Softmax boosting: each round fits one Newton-step regression tree per
/// class on the current cross-entropy gradients.
#[allow(clippy::too_many_arguments)]
pub(super) fn fit(
    x: &[f64],
    d: usize,
    y: &[usize],
    w: &[f64],
    n_classes: usize,
    n_rounds: usize,
    learning_rate: f64,
    opts: &RegTreeOptions,
) -> ModelState {
    let n = y.len();
    let mut prior = vec![0.0; n_classes];
    for (&c, &wi) in y.iter().zip(w) {
        prior[c] += wi;
    }
    let total: f64 = prior.iter().sum();
    let init: Vec<f64> = prior.iter().map(|p| (p / total).ln()).collect();
    let rows: Vec<u32> = (0..n as u32).filter(|&i| w[i as usize] > 0.0).collect();
    let sorted = presort(x, d, &rows);
    let mut raw: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
    let mut rounds: Vec<Vec<Tree>> = Vec::with_capacity(n_rounds);
    for _ in 0..n_rounds {
        let mut proba = raw.clone();
        proba.chunks_mut(n_classes).for_each(softmax_in_place);
        let trees = crate::par::map_range(n_classes, |k| {
            let mut g = vec![0.0; n];
            let mut h = vec![0.0; n];
            for i in 0..n {
                let p = proba[i * n_classes + k];
                let target = if y[i] == k { 1.0 } else { 0.0 };
                g[i] = w[i] * (p - target);
                h[i] = w[i] * (p * (1.0 - p)).max(1e-16);
            }
            fit_reg_tree(x, d, &sorted, &g, &h, opts)
        });
        for i in 0..n {
            let row = &x[i * d..(i + 1) * d];
            for (k, t) in trees.iter().enumerate() {
                raw[i * n_classes + k] += learning_rate * t.leaf(row)[0];
            }
        }
        rounds.push(trees);
    }
    ModelState::Gbm {
        init,
        learning_rate,
        rounds,
    }
}

pub(super) fn proba(init: &[f64], learning_rate: f64, rounds: &[Vec<Tree>], upto: usize, row: &[f64]) -> Vec<f64> {
    let mut z = init.to_vec();
    for trees in &rounds[..upto] {
        for (k, t) in trees.iter().enumerate() {
            z[k] += learning_rate * t.leaf(row)[0];
        }
    }
    softmax_in_place(&mut z);
    z
}
