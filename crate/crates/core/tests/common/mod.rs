// Independent reference computations for integration tests. Nothing here
// calls into the library's numerics: matrices are assembled from the edge
// list, spectra come from nalgebra, nodal data from a plain DFS.
#![allow(dead_code)]

use nalgebra::DMatrix;
use nodal_core::Graph;

/// `-W + diag(q)` built straight from the edge list.
pub fn dense_h(g: &Graph, q: &[f64]) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (v, &x) in q.iter().enumerate() {
        m[(v, v)] = x;
    }
    for (e, &w) in g.edges().iter().zip(g.weights()) {
        m[(e.i, e.j)] -= w;
        m[(e.j, e.i)] -= w;
    }
    m
}

pub struct RefSpectrum {
    pub values: Vec<f64>,
    /// Column `k` of the nalgebra solution, reordered ascending.
    pub vectors: Vec<Vec<f64>>,
}

impl RefSpectrum {
    pub fn range(&self) -> f64 {
        (self.values[self.values.len() - 1] - self.values[0]).max(1.0)
    }

    /// 1-based positions of eigenvalues within `tol` of `lambda`.
    pub fn positions(&self, lambda: f64, tol: f64) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&k| (self.values[k] - lambda).abs() <= tol)
            .map(|k| k + 1)
            .collect()
    }

    /// Simple eigenvalue with no component below `1e-8` of the largest.
    pub fn is_generic(&self, n: usize) -> bool {
        let k = n - 1;
        let tol = 1e-8 * self.range();
        let below = k == 0 || self.values[k] - self.values[k - 1] > tol;
        let above = k + 1 == self.values.len() || self.values[k + 1] - self.values[k] > tol;
        let f = &self.vectors[k];
        let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        below && above && f.iter().all(|x| x.abs() > 1e-8 * max)
    }
}

pub fn ref_spectrum(m: &DMatrix<f64>) -> RefSpectrum {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    RefSpectrum {
        values: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        vectors: order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect(),
    }
}

pub fn residual(m: &DMatrix<f64>, f: &[f64], lambda: f64) -> f64 {
    let n = f.len();
    (0..n)
        .map(|i| ((0..n).map(|j| m[(i, j)] * f[j]).sum::<f64>() - lambda * f[i]).abs())
        .fold(0.0, f64::max)
}

pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(ν, ζ, ℓ)` by depth-first search over same-sign edges. `ℓ` is the
/// cycle rank of the same-sign subgraph.
pub fn sign_domains(g: &Graph, f: &[f64]) -> (usize, usize, usize) {
    let n = g.vertex_count();
    let mut adj = vec![Vec::new(); n];
    let mut zeta = 0;
    let mut inner = 0;
    for e in g.edges() {
        if (f[e.i] > 0.0) == (f[e.j] > 0.0) {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
            inner += 1;
        } else {
            zeta += 1;
        }
    }
    let mut seen = vec![false; n];
    let mut nu = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        nu += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    (nu, zeta, inner + nu - n)
}

/// Domain label per vertex, numbered in order of first vertex.
pub fn sign_labels(g: &Graph, f: &[f64]) -> Vec<usize> {
    let n = g.vertex_count();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for e in g.edges() {
                let u = if e.i == v {
                    e.j
                } else if e.j == v {
                    e.i
                } else {
                    continue;
                };
                if label[u] == usize::MAX && (f[u] > 0.0) == (f[v] > 0.0) {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    label
}

/// Smallest `k` admitting a proper colouring, by trying `k = 1, 2, …` with
/// plain backtracking in vertex order.
pub fn chromatic(g: &Graph) -> usize {
    let n = g.vertex_count();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            g.edges()
                .iter()
                .filter_map(|e| {
                    if e.i == v {
                        Some(e.j)
                    } else if e.j == v {
                        Some(e.i)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    fn fill(v: usize, k: usize, adj: &[Vec<usize>], col: &mut Vec<usize>) -> bool {
        if v == adj.len() {
            return true;
        }
        for c in 0..k {
            if adj[v].iter().all(|&u| u >= v || col[u] != c) {
                col[v] = c;
                if fill(v + 1, k, adj, col) {
                    return true;
                }
            }
        }
        false
    }
    (1..=n)
        .find(|&k| fill(0, k, &adj, &mut vec![usize::MAX; n]))
        .unwrap_or(n)
}

/// Max deviation between `a` and `±b`, minimized over the sign.
pub fn up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let minus = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x + y).abs()));
    plus.min(minus)
}
