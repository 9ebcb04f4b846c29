//! Oracles and property checks shared by the unit tests and the acceptance
//! target. Each check returns a one-line summary or the first violation.
#![allow(dead_code)]

use keynode::centrality::{compute_centrality, CentralityId};
use keynode::diffusion::*;
use keynode::evaluation::f1_macro;
use keynode::graph::*;
use keynode::importance::{shapley_values, Scorer};
use keynode::labeling::{smart_bins_dp_exact, smart_bins_kmeans};
use keynode::models::LogregProblem;
use keynode::rng::rng_for;
use rand::Rng;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------------------
// diffusion

pub fn random_digraph(n: usize, p: f64, seed: u64) -> Graph {
    generate_synthetic(SyntheticModel::DirectedErdosRenyi { p }, n, seed).unwrap()
}

/// Level sizes of a BFS from `s`; level 0 is the seed.
pub fn bfs_levels(g: &Graph, s: usize) -> Vec<usize> {
    let dist = bfs_distances(g.out_adjacency(), s);
    let depth = dist.iter().filter(|&&d| d != usize::MAX).max().copied().unwrap();
    let mut levels = vec![0; depth + 1];
    for d in dist.into_iter().filter(|&d| d != usize::MAX) {
        levels[d] += 1;
    }
    levels
}

/// With p = 1 a cascade is a BFS: range, peak and peak time are exact.
pub fn certain_cascade_is_bfs() -> Check {
    let mut rng = rng_for(31, &[]);
    let mut nodes = 0;
    for case in 0..50 {
        let n = rng.random_range(5..60);
        let g = random_digraph(n, rng.random_range(0.02..0.2), case);
        for s in 0..n {
            let out = run_cascade(&g, s, 1.0, case).unwrap();
            let levels = bfs_levels(&g, s);
            let reach = reachable_set(&g, s).unwrap().len();
            ensure!(out.range == reach, "graph {case} node {s}: range {} vs reachable {reach}", out.range);
            let peak = *levels.iter().max().unwrap();
            ensure!(out.peak == peak, "graph {case} node {s}: peak {} vs {peak}", out.peak);
            // earliest level of maximal size
            let t = levels.iter().position(|&c| c == peak).unwrap();
            ensure!(out.peak_time == t, "graph {case} node {s}: peak time {} vs {t}", out.peak_time);
            nodes += 1;
        }
    }
    Ok(format!("50 digraphs, {nodes} seeds exact"))
}

/// Per-node mean range of IC and SIR(gamma = 1) within 4 pooled SE.
pub fn sir_matches_cascade() -> Check {
    let g = random_digraph(100, 0.03, 5);
    let runs = 10_000;
    let beta = 0.2;
    let stats = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (m, v)
    };
    let mut worst: f64 = 0.0;
    for node in 0..g.n() {
        let ic: Vec<f64> = (0..runs)
            .map(|r| run_cascade(&g, node, beta, run_seed(1, node, 0, r)).unwrap().range as f64)
            .collect();
        let sir: Vec<f64> = (0..runs)
            .map(|r| run_sir_gamma1(&g, node, beta, run_seed(2, node, 0, r)).unwrap().range as f64)
            .collect();
        let (m1, v1) = stats(&ic);
        let (m2, v2) = stats(&sir);
        let se = (v1 / runs as f64 + v2 / runs as f64).sqrt();
        if se == 0.0 {
            ensure!(m1 == m2, "node {node}: IC {m1} vs SIR {m2} with zero variance");
            continue;
        }
        let z = (m1 - m2).abs() / se;
        worst = worst.max(z);
        ensure!(z <= 4.0, "node {node}: IC {m1} vs SIR {m2}, z = {z:.2}");
    }
    Ok(format!("100 nodes x 10000 runs, max |z| {worst:.2}"))
}

/// simulate_all CSV bytes at 1, 4 and 8 worker threads.
pub fn simulation_thread_invariance() -> Check {
    let g = generate_synthetic(SyntheticModel::DirectedBarabasiAlbert { m: 2 }, 200, 3).unwrap();
    let thresholds = ThresholdSet::citation();
    let run = |threads| {
        let records = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_all(&g, &thresholds, 50, 9, None).unwrap());
        let mut buf = Vec::new();
        write_records_csv(&records, &mut buf).unwrap();
        buf
    };
    let one = run(1);
    for t in [4, 8] {
        ensure!(run(t) == one, "output differs at {t} threads");
    }
    Ok(format!("{} bytes identical at 1/4/8 threads", one.len()))
}

// ---------------------------------------------------------------------------
// labeling

pub fn continuous_values(rng: &mut impl Rng, n: usize, kind: u32) -> Vec<f64> {
    (0..n)
        .map(|_| match kind {
            0 => rng.random_range(0.0..1.0),
            1 => -rng.random_range(f64::EPSILON..1.0f64).ln(),
            2 => rng.random_range(0..4) as f64 * 3.0 + normal(rng),
            _ => normal(rng).exp(),
        })
        .collect()
}

/// Lloyd inertia within 1% of the exact DP optimum on 100 datasets.
pub fn lloyd_near_dp() -> Check {
    let mut rng = rng_for(3, &[]);
    let mut worst: f64 = 1.0;
    for case in 0..100u64 {
        let n = rng.random_range(50..=5000);
        let k = rng.random_range(2..=5);
        let values = continuous_values(&mut rng, n, (case % 4) as u32);
        let lloyd = smart_bins_kmeans(&values, k, case).unwrap();
        let dp = smart_bins_dp_exact(&values, k).unwrap();
        ensure!(dp.inertia <= lloyd.inertia * (1.0 + 1e-12), "case {case}: DP above Lloyd");
        let ratio = lloyd.inertia / dp.inertia;
        worst = worst.max(ratio);
        ensure!(ratio <= 1.01, "case {case} n={n} k={k}: ratio {ratio}");
    }
    Ok(format!("100 datasets, worst ratio {worst:.5}"))
}

// ---------------------------------------------------------------------------
// centrality

const INF: usize = usize::MAX;

/// Floyd-Warshall over the arc list.
pub fn all_pairs(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v) in g.arcs() {
        d[u][v] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != INF && d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Every simple path from `s` to `t` with exactly `len` arcs.
pub fn shortest_paths(g: &Graph, s: usize, t: usize, len: usize) -> Vec<Vec<usize>> {
    fn walk(g: &Graph, t: usize, len: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if path.len() - 1 == len {
            if last == t {
                out.push(path.clone());
            }
            return;
        }
        for &w in g.out_neighbors(last) {
            if !path.contains(&w) {
                path.push(w);
                walk(g, t, len, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, t, len, &mut vec![s], &mut out);
    out
}

fn scale(n: usize) -> f64 {
    if n < 3 {
        1.0
    } else {
        1.0 / ((n - 1) as f64 * (n - 2) as f64)
    }
}

pub fn betweenness_oracle(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let d = all_pairs(g);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || d[s][t] == INF {
                continue;
            }
            let paths = shortest_paths(g, s, t, d[s][t]);
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    b[v] += 1.0 / paths.len() as f64;
                }
            }
        }
    }
    b.iter().map(|x| x * scale(n)).collect()
}

/// One unit leaves `t` and walks back toward `s`, splitting evenly over the
/// shortest-path predecessors of each node it reaches.
pub fn load_oracle(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let d = all_pairs(g);
    let mut load = vec![0.0; n];
    fn back(g: &Graph, d: &[Vec<usize>], s: usize, w: usize, share: f64, load: &mut [f64]) {
        if w == s {
            return;
        }
        let preds: Vec<usize> =
            g.in_neighbors(w).iter().copied().filter(|&u| d[s][u] != INF && d[s][u] + 1 == d[s][w]).collect();
        for &u in &preds {
            let part = share / preds.len() as f64;
            if u != s {
                load[u] += part;
            }
            back(g, d, s, u, part, load);
        }
    }
    for s in 0..n {
        for t in 0..n {
            if s != t && d[s][t] != INF {
                back(g, &d, s, t, 1.0, &mut load);
            }
        }
    }
    load.iter().map(|x| x * scale(n)).collect()
}

pub fn closeness_oracle(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let d = all_pairs(g);
    (0..n)
        .map(|v| {
            let reach: Vec<usize> = (0..n).filter(|&u| u != v && d[v][u] != INF).map(|u| d[v][u]).collect();
            let total: usize = reach.iter().sum();
            if total == 0 {
                0.0
            } else {
                let r = reach.len() as f64;
                (r / total as f64) * (r / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn harmonic_oracle(g: &Graph) -> Vec<f64> {
    let d = all_pairs(g);
    (0..g.n())
        .map(|v| (0..g.n()).filter(|&u| u != v && d[v][u] != INF).map(|u| 1.0 / d[v][u] as f64).sum())
        .collect()
}

/// Transitive closure by repeated boolean squaring.
pub fn local_reaching_oracle(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut r = vec![vec![false; n]; n];
    for (v, row) in r.iter_mut().enumerate() {
        row[v] = true;
    }
    for (u, v) in g.arcs() {
        r[u][v] = true;
    }
    for _ in 0..n {
        let prev = r.clone();
        for i in 0..n {
            for j in 0..n {
                r[i][j] = r[i][j] || (0..n).any(|k| prev[i][k] && prev[k][j]);
            }
        }
    }
    (0..n)
        .map(|v| {
            if n < 2 {
                0.0
            } else {
                (r[v].iter().filter(|&&x| x).count() - 1) as f64 / (n - 1) as f64
            }
        })
        .collect()
}

pub fn check_against_oracles(g: &Graph, label: &str) -> Result<(), String> {
    let cases: [(CentralityId, fn(&Graph) -> Vec<f64>); 5] = [
        (CentralityId::Betweenness, betweenness_oracle),
        (CentralityId::Load, load_oracle),
        (CentralityId::Closeness, closeness_oracle),
        (CentralityId::Harmonic, harmonic_oracle),
        (CentralityId::LocalReaching, local_reaching_oracle),
    ];
    for (measure, oracle) in cases {
        let got = compute_centrality(g, measure).unwrap().scores;
        let want = oracle(g);
        for (v, (a, b)) in got.iter().zip(&want).enumerate() {
            ensure!((a - b).abs() <= 1e-9, "{label} {measure} node {v}: {a} vs {b}");
        }
    }
    Ok(())
}

pub fn graph_from_mask(n: usize, pairs: &[(usize, usize)], mask: u64, directed: bool) -> Graph {
    let edges = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p);
    Graph::from_edges(n, edges, directed).unwrap()
}

/// Every graph on `n` nodes; directed ones use ordered pairs.
pub fn exhaustive_oracles(n: usize, directed: bool) -> Check {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| if directed { u != v } else { u < v })
        .collect();
    let total = 1u64 << pairs.len();
    for mask in 0..total {
        check_against_oracles(&graph_from_mask(n, &pairs, mask, directed), &format!("n={n} mask {mask}"))?;
    }
    Ok(format!("{total} graphs on {n} nodes"))
}

/// Seeded random graphs on 5 to 8 nodes, a third of them undirected.
pub fn random_oracles(count: usize) -> Check {
    let mut rng = rng_for(11, &[]);
    for case in 0..count {
        let n = rng.random_range(5..=8);
        let p = rng.random_range(0.1..0.6);
        let directed = case % 3 != 0;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && (directed || u < v) && rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, edges, directed).unwrap();
        check_against_oracles(&g, &format!("case {case}"))?;
    }
    Ok(format!("{count} random graphs on 5-8 nodes"))
}

// ---------------------------------------------------------------------------
// evaluation

/// F1 of class i is 2 C[i][i] / (row_i + col_i), averaged over classes
/// with nonzero support.
pub fn f1_from_matrix(c: &[Vec<usize>]) -> f64 {
    let k = c.len();
    let mut total = 0.0;
    let mut present = 0;
    for i in 0..k {
        let row: usize = c[i].iter().sum();
        if row == 0 {
            continue;
        }
        let col: usize = (0..k).map(|r| c[r][i]).sum();
        total += 2.0 * c[i][i] as f64 / (row + col) as f64;
        present += 1;
    }
    total / present as f64
}

/// 20 fixed confusion matrices, some with an absent class.
pub fn confusion_matrices() -> Vec<Vec<Vec<usize>>> {
    let mut rng = rng_for(41, &[]);
    (0..20)
        .map(|case| {
            let k = 2 + case % 4;
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| {
                            if i == k - 1 && case % 5 == 0 {
                                0
                            } else {
                                rng.random_range(0..9) + usize::from(i == j)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn expand(c: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let (mut yt, mut yp) = (Vec::new(), Vec::new());
    for (i, row) in c.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            yt.extend(std::iter::repeat_n(i, count));
            yp.extend(std::iter::repeat_n(j, count));
        }
    }
    (yt, yp)
}

pub fn f1_matches_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for (case, c) in confusion_matrices().iter().enumerate() {
        let (yt, yp) = expand(c);
        let got = f1_macro(&yt, &yp).unwrap();
        let want = f1_from_matrix(c);
        worst = worst.max((got - want).abs());
        ensure!((got - want).abs() <= 1e-12, "case {case}: {got} vs {want}");
    }
    Ok(format!("20 matrices, max error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// models

pub fn logreg_gradient() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = rng_for(seed, &[1]);
        let (n, d, c) = (12, 3, 3);
        let x: Vec<f64> = (0..n * d).map(|_| normal(&mut rng)).collect();
        let y: Vec<usize> = (0..n).map(|i| i % c).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let problem = LogregProblem {
            x: &x,
            d,
            y: &y,
            weights: &w,
            n_classes: c,
            lambda: 0.3,
        };
        let theta: Vec<f64> = (0..problem.n_params()).map(|_| normal(&mut rng)).collect();
        let (_, grad) = problem.loss_and_grad(&theta);
        let h = 1e-5;
        let fd: Vec<f64> = (0..theta.len())
            .map(|i| {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[i] += h;
                down[i] -= h;
                (problem.loss_and_grad(&up).0 - problem.loss_and_grad(&down).0) / (2.0 * h)
            })
            .collect();
        let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
        ensure!(diff / scale <= 1e-5, "seed {seed}: relative error {}", diff / scale);
    }
    Ok(format!("10 problems, max relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// importance

pub struct Linear(pub Vec<f64>);

impl Scorer for Linear {
    fn n_features(&self) -> usize {
        self.0.len()
    }
    fn scores(&self, row: &[f64]) -> Vec<f64> {
        vec![self.0.iter().zip(row).map(|(w, x)| w * x).sum()]
    }
}

/// Smooth nonlinear scorer with interactions.
pub struct Bumpy;

impl Scorer for Bumpy {
    fn n_features(&self) -> usize {
        4
    }
    fn scores(&self, r: &[f64]) -> Vec<f64> {
        let z = r[0] * r[1] + (r[2]).sin() - 0.5 * r[3] * r[0];
        let p = 1.0 / (1.0 + (-z).exp());
        vec![p, 1.0 - p]
    }
}

pub fn background(rows: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, &[]);
    (0..rows * d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Linear model: phi_j = w_j (x_j - mean_j), within 3 SE.
pub fn shapley_linear_closed_form() -> Check {
    let w = vec![1.5, -2.0, 0.0, 0.7];
    let bg = background(37, 4, 1);
    let x = [0.3, 1.1, -0.4, 2.0];
    // 2000 is not a multiple of 37, so background weights are uneven
    let est = shapley_values(&Linear(w.clone()), &x, &bg, 2000, 3).unwrap();
    for j in 0..4 {
        let mean: f64 = (0..37).map(|b| bg[b * 4 + j]).sum::<f64>() / 37.0;
        let want = w[j] * (x[j] - mean);
        let tol = 3.0 * est.std_err[j] + 1e-12;
        ensure!(
            (est.values[j] - want).abs() <= tol,
            "feature {j}: {} vs {want} (se {})",
            est.values[j],
            est.std_err[j]
        );
    }
    Ok("4 features within 3 SE".into())
}

/// Attributions sum to f(x) minus the background mean, within 3 SE.
pub fn shapley_efficiency() -> Check {
    let bg = background(50, 4, 2);
    for s in 0..10u64 {
        let x = &background(1, 4, 100 + s)[..];
        let est = shapley_values(&Bumpy, x, &bg, 333, s).unwrap();
        let full_mean: f64 = (0..50).map(|b| Bumpy.scores(&bg[b * 4..b * 4 + 4])[est.target]).sum::<f64>() / 50.0;
        let sum: f64 = est.values.iter().sum();
        let gap = est.fx - full_mean;
        ensure!(
            (sum - gap).abs() <= 3.0 * est.sum_std_err,
            "sample {s}: {sum} vs {gap} (se {})",
            est.sum_std_err
        );
        // exact against the background rows actually visited
        ensure!((sum - (est.fx - est.background_mean)).abs() <= 1e-12, "sample {s}: visited gap not exact");
    }
    Ok("10 samples within 3 SE".into())
}
