//! The discrete Schrödinger operator `H = -W + Q` and its dense diagonalization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Edge, Graph};
use crate::surgery::SurgeryStep;
use crate::{Error, Result};

/// Relative off-diagonal tolerance accepted by the eigensolver.
pub const TOL_EIG: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
/// Minimal eigenvalue gap, relative to the spectral range.
pub const GAP_TOL: f64 = 1e-8;
/// Minimal component magnitude, relative to the largest component.
pub const COMP_TOL: f64 = 1e-8;

/// On-site potential, one value per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Potential(pub Vec<f64>);

impl Potential {
    pub fn zeros(n: usize) -> Self {
        Potential(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Potential {
    fn from(v: Vec<f64>) -> Self {
        Potential(v)
    }
}

/// Adds independent uniform noise in `[-magnitude, magnitude]` to every entry.
pub fn jitter_potential(q: &Potential, seed: u64, magnitude: f64) -> Potential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Potential(
        q.0.iter()
            .map(|&x| x + rng.gen_range(-magnitude..=magnitude))
            .collect(),
    )
}

/// Dense Schrödinger operator on a factor of a base graph.
///
/// The operator remembers the base graph and potential together with the
/// edges deleted so far and the parameter `α` used for each deletion, so the
/// current matrix is always `H(G) + Σ B(α_e)`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    graph: Graph,
    potential: Potential,
    steps: Vec<SurgeryStep>,
    present: Vec<bool>,
    diagonal: Vec<f64>,
    matrix: DMatrix<f64>,
}

/// `H(G) = -W(G) + Q` with `W` the weighted adjacency matrix.
pub fn assemble_hamiltonian(g: &Graph, q: &Potential) -> Result<Hamiltonian> {
    if q.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: q.len(),
        });
    }
    if q.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("potential"));
    }
    let n = g.vertex_count();
    let mut matrix = DMatrix::zeros(n, n);
    for (e, &w) in g.edges().iter().zip(g.weights()) {
        matrix[(e.i, e.j)] = -w;
        matrix[(e.j, e.i)] = -w;
    }
    for (v, &x) in q.0.iter().enumerate() {
        matrix[(v, v)] = x;
    }
    Ok(Hamiltonian {
        graph: g.clone(),
        potential: q.clone(),
        steps: Vec::new(),
        present: vec![true; g.edge_count()],
        diagonal: q.0.clone(),
        matrix,
    })
}

/// Graph Laplacian `D - W`, i.e. the Schrödinger operator with the weighted
/// degrees as potential.
pub fn assemble_laplacian(g: &Graph) -> Hamiltonian {
    let q = Potential((0..g.vertex_count()).map(|v| g.weighted_degree(v)).collect());
    assemble_hamiltonian(g, &q).expect("degree potential matches the graph")
}

impl Hamiltonian {
    pub fn new(g: &Graph, q: &Potential) -> Result<Self> {
        assemble_hamiltonian(g, q)
    }

    /// Base graph (before any deletion).
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn steps(&self) -> &[SurgeryStep] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Current diagonal, i.e. the compensated potential.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.graph.edge_index(e).is_some_and(|k| self.present[k])
    }

    pub fn edge_weight(&self, e: Edge) -> Option<f64> {
        self.graph.edge_index(e).map(|k| self.graph.weight(k))
    }

    /// Edges of the current factor, sorted.
    pub fn present_edges(&self) -> Vec<Edge> {
        self.graph
            .edges()
            .iter()
            .zip(&self.present)
            .filter(|(_, &p)| p)
            .map(|(&e, _)| e)
            .collect()
    }

    /// The current factor as a graph; fails if it is disconnected.
    pub fn factor_graph(&self) -> Result<Graph> {
        self.graph.factor(&self.present_edges())
    }

    /// Applies one more deletion step `H + B(α)` for an edge of the current
    /// factor.
    pub fn with_step(&self, step: SurgeryStep) -> Result<Hamiltonian> {
        let k = self
            .graph
            .edge_index(step.edge)
            .filter(|&k| self.present[k])
            .ok_or(Error::MissingEdge(step.edge))?;
        if !(step.alpha.is_finite() && step.alpha != 0.0) {
            return Err(Error::AlphaNearZero(step.alpha));
        }
        let w = self.graph.weight(k);
        let Edge { i, j } = step.edge;
        let mut next = self.clone();
        next.present[k] = false;
        next.diagonal[i] -= w * step.alpha;
        next.diagonal[j] -= w / step.alpha;
        next.matrix[(i, i)] = next.diagonal[i];
        next.matrix[(j, j)] = next.diagonal[j];
        next.matrix[(i, j)] = 0.0;
        next.matrix[(j, i)] = 0.0;
        next.steps.push(step);
        Ok(next)
    }

    /// Base operator with a different set of deletion steps.
    pub fn with_steps(&self, steps: &[SurgeryStep]) -> Result<Hamiltonian> {
        let mut h = self.base();
        for &s in steps {
            h = h.with_step(s)?;
        }
        Ok(h)
    }

    /// The operator of the base graph with no deletions.
    pub fn base(&self) -> Hamiltonian {
        assemble_hamiltonian(&self.graph, &self.potential).expect("base data already validated")
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|c| self.matrix[(r, c)] * f[c]).sum())
            .collect()
    }

    /// `‖Hf - λf‖∞`.
    pub fn residual(&self, f: &[f64], lambda: f64) -> f64 {
        self.apply(f)
            .iter()
            .zip(f)
            .map(|(hf, x)| (hf - lambda * x).abs())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eigendecompose(self)
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// Outcome of the non-degeneracy test for one eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonDegeneracy {
    pub index: usize,
    pub nondegenerate: bool,
    /// Distance to the nearest other eigenvalue.
    pub gap: f64,
    /// Smallest `|f_i| / ‖f‖∞`.
    pub min_component: f64,
    pub simple: bool,
    pub nonvanishing: bool,
}

impl NonDegeneracy {
    pub fn reason(&self) -> String {
        match (self.simple, self.nonvanishing) {
            (true, true) => "non-degenerate".into(),
            (false, true) => format!("eigenvalue not simple (gap {:e})", self.gap),
            (true, false) => format!("vanishing component ({:e})", self.min_component),
            (false, false) => format!(
                "eigenvalue not simple (gap {:e}) and vanishing component ({:e})",
                self.gap, self.min_component
            ),
        }
    }
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// `λ_n`, 1-based.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    /// Eigenvector of `λ_n`, 1-based.
    pub fn vector(&self, n: usize) -> &[f64] {
        let len = self.len();
        &self.vectors.as_slice()[(n - 1) * len..n * len]
    }

    pub fn range(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Scale used for relative spectral tolerances.
    pub fn scale(&self) -> f64 {
        let r = self.range();
        if r > 0.0 {
            r
        } else {
            self.values.iter().fold(1.0, |m, x| m.max(x.abs()))
        }
    }

    /// Distance from `λ_n` to its nearest neighbour in the spectrum.
    pub fn gap(&self, n: usize) -> f64 {
        let k = n - 1;
        let mut gap = f64::INFINITY;
        if k > 0 {
            gap = gap.min(self.values[k] - self.values[k - 1]);
        }
        if k + 1 < self.len() {
            gap = gap.min(self.values[k + 1] - self.values[k]);
        }
        gap
    }

    /// Smallest separation between successive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// 1-based position of the eigenvalue closest to `lambda`, if it lies
    /// within `tol`.
    pub fn position_of(&self, lambda: f64, tol: f64) -> Option<usize> {
        let (k, d) = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &x)| (k, (x - lambda).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        (d <= tol).then_some(k + 1)
    }

    pub fn nondegeneracy(&self, n: usize) -> Result<NonDegeneracy> {
        self.check(n)?;
        let gap = self.gap(n);
        let simple = gap > GAP_TOL * self.scale();
        let f = self.vector(n);
        let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let min = f.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        let min_component = if max > 0.0 { min / max } else { 0.0 };
        let nonvanishing = min_component > COMP_TOL;
        Ok(NonDegeneracy {
            index: n,
            nondegenerate: simple && nonvanishing,
            gap,
            min_component,
            simple,
            nonvanishing,
        })
    }

    /// Returns an error describing the failure if eigenpair `n` is degenerate.
    pub fn require_nondegenerate(&self, n: usize) -> Result<()> {
        let d = self.nondegeneracy(n)?;
        if d.nondegenerate {
            Ok(())
        } else {
            Err(Error::DegenerateEigenpair {
                index: n,
                reason: d.reason(),
            })
        }
    }
}

/// Non-degeneracy of eigenpair `n`: simple eigenvalue and no vanishing
/// component.
pub fn is_nondegenerate(s: &Spectrum, n: usize) -> Result<NonDegeneracy> {
    s.nondegeneracy(n)
}

pub fn eigendecompose(h: &Hamiltonian) -> Result<Spectrum> {
    symmetric_eigen(h.matrix())
}

/// Cyclic Jacobi diagonalization of a symmetric matrix.
///
/// Eigenvalues come back ascending. Each eigenvector is signed so that its
/// first component of largest magnitude is positive.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<Spectrum> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let frob = a.norm();
    let off_norm = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += a[(p, q)] * a[(p, q)];
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    let mut off = off_norm(&a);
    for _ in 0..MAX_SWEEPS {
        if off <= 1e-15 * frob || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // negligible relative to both diagonal entries
                if apq.abs() * 1e18 < app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        off = off_norm(&a);
    }
    if !converged && off > TOL_EIG * frob {
        return Err(Error::ConvergenceFailure {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut lead = 0;
        for r in 1..n {
            if v[(r, k)].abs() > v[(lead, k)].abs() {
                lead = r;
            }
        }
        let sign = if v[(lead, k)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, col)] = sign * v[(r, k)];
        }
    }
    Ok(Spectrum { values, vectors })
}
