/// Weighted vote fractions of the `k` nearest training points (Euclidean).
/// Equal distances keep the earlier training row.
pub(super) fn proba(
    points: &[f64],
    targets: &[usize],
    weights: &[f64],
    row: &[f64],
    k: usize,
    n_classes: usize,
) -> Vec<f64> {
    let d = row.len();
    let k = k.min(targets.len());
    let mut dist: Vec<(f64, usize)> = points
        .chunks(d)
        .enumerate()
        .map(|(i, p)| (p.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    let mut votes = vec![0.0; n_classes];
    for &(_, i) in &dist {
        votes[targets[i]] += weights[i];
    }
    let total: f64 = votes.iter().sum();
    votes.iter_mut().for_each(|v| *v /= total);
    votes
}
