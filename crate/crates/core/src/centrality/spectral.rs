use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph};

pub const EIGENVECTOR_TOL: f64 = 1e-6;
pub const EIGENVECTOR_MAX_ITER: usize = 1000;
pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-9;
pub const PAGERANK_MAX_ITER: usize = 1000;

/// One step of the shifted power iteration `x <- (A + I) x / ||(A + I) x||`.
pub(crate) fn eigenvector_step(und: &Adjacency, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut next = x.to_vec();
    for v in 0..n {
        for &u in und.neighbors(v) {
            next[u] += x[v];
        }
    }
    let norm = next.iter().map(|z| z * z).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in &mut next {
            *z /= norm;
        }
    }
    next
}

/// Eigenvector centrality of the undirected projection.
pub(crate) fn eigenvector(g: &Graph) -> Result<Vec<f64>> {
    eigenvector_with(&g.undirected_projection(), EIGENVECTOR_TOL, EIGENVECTOR_MAX_ITER)
}

pub(crate) fn eigenvector_with(und: &Adjacency, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = und.node_count();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let next = eigenvector_step(und, &x);
        let err: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if err < n as f64 * tol {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        measure: "eigenvector".into(),
        iterations: max_iter,
    })
}

/// PageRank with uniform teleport; dangling mass is spread uniformly.
pub(crate) fn pagerank(g: &Graph) -> Result<Vec<f64>> {
    let n = g.n();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&v| g.out_degree(v) == 0).map(|v| x[v]).sum();
        let base = (1.0 - PAGERANK_DAMPING) / nf + PAGERANK_DAMPING * dangling / nf;
        let mut next = vec![base; n];
        for (v, &xv) in x.iter().enumerate() {
            let d = g.out_degree(v);
            if d > 0 {
                let share = PAGERANK_DAMPING * xv / d as f64;
                for &w in g.out_neighbors(v) {
                    next[w] += share;
                }
            }
        }
        let err: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if err < nf * PAGERANK_TOL {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        measure: "pagerank".into(),
        iterations: PAGERANK_MAX_ITER,
    })
}
