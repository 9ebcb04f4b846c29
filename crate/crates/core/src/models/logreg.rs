use super::ModelState;

/// Weighted multinomial cross-entropy with an L2 penalty on the non-bias
/// weights. Parameters are laid out class-major, `n_classes x (d + 1)`,
/// bias last.
pub struct LogregProblem<'a> {
    /// Row-major `n x d` features.
    pub x: &'a [f64],
    pub d: usize,
    /// Class index of each row.
    pub y: &'a [usize],
    pub weights: &'a [f64],
    pub n_classes: usize,
    pub lambda: f64,
}

impl LogregProblem<'_> {
    pub fn n_params(&self) -> usize {
        self.n_classes * (self.d + 1)
    }

    pub fn loss_and_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (c, d) = (self.n_classes, self.d);
        let stride = d + 1;
        let total_w: f64 = self.weights.iter().sum();
        let mut loss = 0.0;
        let mut grad = vec![0.0; w.len()];
        let mut z = vec![0.0; c];
        for (i, row) in self.x.chunks(d).enumerate() {
            for (k, zk) in z.iter_mut().enumerate() {
                let wk = &w[k * stride..(k + 1) * stride];
                *zk = wk[d] + row.iter().zip(wk).map(|(a, b)| a * b).sum::<f64>();
            }
            let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = zmax + z.iter().map(|v| (v - zmax).exp()).sum::<f64>().ln();
            let wi = self.weights[i] / total_w;
            loss += wi * (lse - z[self.y[i]]);
            for k in 0..c {
                let coef = wi * ((z[k] - lse).exp() - if k == self.y[i] { 1.0 } else { 0.0 });
                let gk = &mut grad[k * stride..(k + 1) * stride];
                for (g, &xj) in gk.iter_mut().zip(row) {
                    *g += coef * xj;
                }
                gk[d] += coef;
            }
        }
        for k in 0..c {
            for j in 0..d {
                let v = w[k * stride + j];
                loss += 0.5 * self.lambda * v * v;
                grad[k * stride + j] += self.lambda * v;
            }
        }
        (loss, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const HISTORY: usize = 10;

/// L-BFGS with Armijo backtracking from zero weights.
pub(super) fn fit(p: &LogregProblem<'_>, max_iter: usize, tol: f64) -> ModelState {
    let n = p.n_params();
    let mut w = vec![0.0; n];
    let (mut f, mut g) = p.loss_and_grad(&w);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= tol;
    while !converged && iterations < max_iter {
        iterations += 1;
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let a = dot(s, &q) / dot(y, s);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), a) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = dot(y, &q) / dot(y, s);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if s_hist.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let (fc, gc) = p.loss_and_grad(&cand);
            if fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((w_new, f_new, g_new)) = accepted else {
            break;
        };
        let s: Vec<f64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        w = w_new;
        f = f_new;
        g = g_new;
        converged = inf_norm(&g) <= tol;
    }
    let grad_norm = inf_norm(&g);
    if !converged {
        log::warn!("logreg stopped after {iterations} iterations with gradient norm {grad_norm:.3e} (loss {f:.6})");
    }
    ModelState::Logreg {
        weights: w.chunks(p.d + 1).map(<[f64]>::to_vec).collect(),
        iterations,
        grad_norm,
        converged,
    }
}

pub(super) fn proba(weights: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
    let d = row.len();
    let z: Vec<f64> = weights
        .iter()
        .map(|w| w[d] + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
