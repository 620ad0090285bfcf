//! Block operators on partitions, equipartitions, the tree-partition
//! eigenvector construction and local charts of the equipartition manifold.
//!
//! For a partition `P` every deleted edge `e = (i, j)`, `i < j`, carries a
//! parameter `α_e`: the edge is removed and `-w α_e`, `-w/α_e` are added to
//! the potentials at `i` and `j`. The resulting operator `H(P; α)` is block
//! diagonal with one block per domain. `(P, α)` is an equipartition when all
//! blocks share the same ground energy `Λ`.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::UnionFind;
use crate::graph::{Edge, Partition};
use crate::nodal::{analyze_eigenvector, analyze_nodal};
use crate::operator::{symmetric_eigen, Hamiltonian, Potential, Spectrum};
use crate::surgery::{SurgeryStep, ALPHA_MIN, POSITION_TOL};
use crate::{Error, Result};

/// Absolute tolerance on the spread of the block ground energies.
pub const EQUI_TOL: f64 = 1e-9;
/// Most negative entry tolerated in a block ground state.
pub const NONNEG_TOL: f64 = 1e-12;

/// One diagonal block: the domain's vertices (ascending) and its operator.
#[derive(Debug, Clone)]
pub struct Block {
    pub vertices: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

/// `H(P; α)` stored as its diagonal blocks.
#[derive(Debug, Clone)]
pub struct BlockHamiltonian {
    partition: Partition,
    potential: Potential,
    alpha: Vec<f64>,
    blocks: Vec<Block>,
}

/// Lowest eigenpair of one block, extended by zeros to all vertices.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<f64>,
}

fn check_alpha(p: &Partition, alpha: &[f64]) -> Result<()> {
    if alpha.len() != p.zeta() {
        return Err(Error::DimensionMismatch {
            expected: p.zeta(),
            got: alpha.len(),
        });
    }
    if let Some(&a) = alpha
        .iter()
        .find(|a| !a.is_finite() || a.abs() <= ALPHA_MIN)
    {
        return Err(Error::AlphaNearZero(a));
    }
    Ok(())
}

/// Builds the blocks of `H(P; α)`; `alpha` is aligned with
/// [`Partition::removed_edges`].
pub fn block_hamiltonian(p: &Partition, q: &Potential, alpha: &[f64]) -> Result<BlockHamiltonian> {
    let g = p.graph();
    if q.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: q.len(),
        });
    }
    check_alpha(p, alpha)?;
    let mut diag = q.0.clone();
    for (&k, &a) in p.removed_edge_indices().iter().zip(alpha) {
        let e = g.edges()[k];
        let w = g.weight(k);
        diag[e.i] -= w * a;
        diag[e.j] -= w / a;
    }
    let domains = p.domains();
    let mut local = vec![0usize; g.vertex_count()];
    for vs in &domains {
        for (idx, &v) in vs.iter().enumerate() {
            local[v] = idx;
        }
    }
    let mut blocks: Vec<Block> = domains
        .into_iter()
        .map(|vertices| {
            let mut matrix = DMatrix::zeros(vertices.len(), vertices.len());
            for (idx, &v) in vertices.iter().enumerate() {
                matrix[(idx, idx)] = diag[v];
            }
            Block { vertices, matrix }
        })
        .collect();
    for (k, e) in g.edges().iter().enumerate() {
        let d = p.domain_of(e.i);
        if d == p.domain_of(e.j) {
            let (a, b) = (local[e.i], local[e.j]);
            blocks[d].matrix[(a, b)] = -g.weight(k);
            blocks[d].matrix[(b, a)] = -g.weight(k);
        }
    }
    Ok(BlockHamiltonian {
        partition: p.clone(),
        potential: q.clone(),
        alpha: alpha.to_vec(),
        blocks,
    })
}

impl BlockHamiltonian {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The blocks placed back at their vertex positions.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let n = self.partition.graph().vertex_count();
        let mut m = DMatrix::zeros(n, n);
        for b in &self.blocks {
            for (r, &vr) in b.vertices.iter().enumerate() {
                for (c, &vc) in b.vertices.iter().enumerate() {
                    m[(vr, vc)] = b.matrix[(r, c)];
                }
            }
        }
        m
    }

    /// Normalized, non-negative ground state of every block.
    pub fn ground_states(&self) -> Result<Vec<GroundState>> {
        let n = self.partition.graph().vertex_count();
        self.blocks
            .iter()
            .map(|b| {
                let s = symmetric_eigen(&b.matrix)?;
                let local = s.vector(1);
                // the solver makes the largest entry positive
                if let Some(x) = local.iter().find(|&&x| x < -NONNEG_TOL) {
                    return Err(Error::InvalidInput(format!(
                        "block ground state has a negative entry {x:e}"
                    )));
                }
                let mut vector = vec![0.0; n];
                for (&v, &x) in b.vertices.iter().zip(local) {
                    vector[v] = x.max(0.0);
                }
                Ok(GroundState {
                    energy: s.value(1),
                    vector,
                })
            })
            .collect()
    }
}

/// A partition together with parameters that equalize the block ground
/// energies.
#[derive(Debug, Clone)]
pub struct EquipartitionPoint {
    pub partition: Partition,
    pub potential: Potential,
    /// Aligned with [`Partition::removed_edges`].
    pub alpha: Vec<f64>,
    /// Ground energy of domain 0.
    pub lambda: f64,
    pub energies: Vec<f64>,
    pub ground_states: Vec<Vec<f64>>,
}

/// Serialized form of an [`EquipartitionPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquipartitionRecord {
    pub labels: Vec<usize>,
    pub alpha: BTreeMap<String, f64>,
    pub lambda: f64,
}

impl EquipartitionPoint {
    /// Evaluates `(P, α)` and checks that it is an equipartition in the
    /// negative orthant.
    pub fn from_alpha(p: &Partition, q: &Potential, alpha: &[f64]) -> Result<Self> {
        let point = Self::evaluate(p, q, alpha)?;
        if let Some(a) = point.alpha.iter().find(|&&a| a >= 0.0) {
            return Err(Error::NotEquipartition(format!(
                "parameter {a} outside the negative orthant"
            )));
        }
        let spread = point.spread();
        if spread > EQUI_TOL {
            return Err(Error::NotEquipartition(format!(
                "ground energies spread by {spread:e}"
            )));
        }
        Ok(point)
    }

    /// Block data at `(P, α)` without the equipartition checks.
    pub fn evaluate(p: &Partition, q: &Potential, alpha: &[f64]) -> Result<Self> {
        let bh = block_hamiltonian(p, q, alpha)?;
        let gs = bh.ground_states()?;
        let energies: Vec<f64> = gs.iter().map(|g| g.energy).collect();
        Ok(EquipartitionPoint {
            partition: p.clone(),
            potential: q.clone(),
            alpha: alpha.to_vec(),
            lambda: energies[0],
            energies,
            ground_states: gs.into_iter().map(|g| g.vector).collect(),
        })
    }

    /// `max_k λ_1(P_k) - min_k λ_1(P_k)`.
    pub fn spread(&self) -> f64 {
        let max = self.energies.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.energies.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }

    pub fn alpha_of(&self, e: Edge) -> Option<f64> {
        self.partition
            .removed_edges()
            .iter()
            .position(|&x| x == e)
            .map(|k| self.alpha[k])
    }

    pub fn record(&self) -> EquipartitionRecord {
        EquipartitionRecord {
            labels: self.partition.labels().to_vec(),
            alpha: self
                .partition
                .removed_edges()
                .iter()
                .zip(&self.alpha)
                .map(|(e, &a)| (e.key(), a))
                .collect(),
            lambda: self.lambda,
        }
    }
}

/// The equipartition generated by eigenvector `n`: its nodal partition with
/// `α_e = f_j / f_i` on every sign-flip edge.
pub fn induced_equipartition(h: &Hamiltonian, s: &Spectrum, n: usize) -> Result<EquipartitionPoint> {
    let a = analyze_eigenvector(h.graph(), s, n)?;
    let f = s.vector(n);
    let alpha: Vec<f64> = a
        .partition
        .removed_edges()
        .iter()
        .map(|e| f[e.j] / f[e.i])
        .collect();
    EquipartitionPoint::from_alpha(&a.partition, h.potential(), &alpha)
}

/// Breadth-first order over a tree partition graph starting at domain 0:
/// `(parent domain, child domain, connecting edge index into removed edges)`.
fn tree_order(p: &Partition) -> Vec<(usize, usize, usize)> {
    let mg = p.multigraph();
    let mut adj = vec![Vec::new(); p.nu()];
    for (k, e) in mg.edges().iter().enumerate() {
        adj[e.a].push((e.b, k));
        adj[e.b].push((e.a, k));
    }
    let mut seen = vec![false; p.nu()];
    seen[0] = true;
    let mut order = Vec::new();
    let mut queue = VecDeque::from([0]);
    while let Some(d) = queue.pop_front() {
        for &(u, k) in &adj[d] {
            if !seen[u] {
                seen[u] = true;
                order.push((d, u, k));
                queue.push_back(u);
            }
        }
    }
    order
}

/// Assembles `f = Σ t_k g(P_k; γ)` for a tree equipartition with the root
/// at the domain of vertex 0, `t_root = 1`, and `f_j = γ_e f_i` across every
/// deleted edge. Returns the normalized vector and the position of `Λ` in
/// `σ(G)`.
pub fn tree_equipartition_eigenvector(
    p: &Partition,
    ep: &EquipartitionPoint,
) -> Result<(Vec<f64>, usize)> {
    if p != &ep.partition {
        return Err(Error::InvalidInput(
            "equipartition belongs to a different partition".into(),
        ));
    }
    if !p.multigraph().is_tree() {
        return Err(Error::NotTreePartition);
    }
    if ep.alpha.iter().any(|&a| a >= 0.0) {
        return Err(Error::NotEquipartition(
            "parameters must be negative".into(),
        ));
    }
    if ep.spread() > EQUI_TOL {
        return Err(Error::NotEquipartition(format!(
            "ground energies spread by {:e}",
            ep.spread()
        )));
    }
    let removed = p.removed_edges();
    let gs = &ep.ground_states;
    let mut t = vec![0.0; p.nu()];
    t[0] = 1.0;
    for (parent, child, k) in tree_order(p) {
        let e = removed[k];
        let gamma = ep.alpha[k];
        let (gi, gj) = (gs[p.domain_of(e.i)][e.i], gs[p.domain_of(e.j)][e.j]);
        t[child] = if p.domain_of(e.i) == parent {
            t[parent] * gamma * gi / gj
        } else {
            t[parent] * gj / (gamma * gi)
        };
    }
    let n = p.graph().vertex_count();
    let mut f = vec![0.0; n];
    for (k, g) in gs.iter().enumerate() {
        for v in 0..n {
            f[v] += t[k] * g[v];
        }
    }
    normalize(&mut f);
    let h = Hamiltonian::new(p.graph(), &ep.potential)?;
    let s = h.spectrum()?;
    let position = s
        .position_of(ep.lambda, POSITION_TOL * s.scale())
        .ok_or_else(|| Error::NotEquipartition("energy is not an eigenvalue of H(G)".into()))?;
    Ok((f, position))
}

fn normalize(f: &mut [f64]) {
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lead = f
        .iter()
        .cloned()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let scale = if lead < 0.0 { -norm } else { norm };
    for x in f.iter_mut() {
        *x /= scale;
    }
}

/// Settings for the multi-start Newton search on tree partitions.
#[derive(Debug, Clone, Copy)]
pub struct EquipartitionSearch {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Starting log-magnitudes `ln|α|` are drawn uniformly from this range.
    pub log_range: (f64, f64),
}

impl Default for EquipartitionSearch {
    fn default() -> Self {
        EquipartitionSearch {
            starts: 8,
            seed: 0,
            max_iterations: 100,
            log_range: (-2.5, 2.5),
        }
    }
}

/// Residual `λ_1(P_k) - λ_1(P_0)` for `k ≥ 1` and its Jacobian with respect
/// to `s = ln(-α)`.
fn equi_residual(
    p: &Partition,
    q: &Potential,
    s: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let alpha: Vec<f64> = s.iter().map(|x| -x.exp()).collect();
    let point = EquipartitionPoint::evaluate(p, q, &alpha)?;
    let dim = p.nu() - 1;
    let g = p.graph();
    // dE_d/dα_e for every domain d
    let mut de = DMatrix::<f64>::zeros(p.nu(), dim);
    for (col, (&k, &a)) in p.removed_edge_indices().iter().zip(&alpha).enumerate() {
        let e = g.edges()[k];
        let w = g.weight(k);
        let (di, dj) = (p.domain_of(e.i), p.domain_of(e.j));
        let gi = point.ground_states[di][e.i];
        let gj = point.ground_states[dj][e.j];
        de[(di, col)] += -w * gi * gi * a;
        de[(dj, col)] += w * gj * gj / (a * a) * a;
    }
    let r = DVector::from_fn(dim, |k, _| point.energies[k + 1] - point.energies[0]);
    let jac = DMatrix::from_fn(dim, dim, |r, c| de[(r + 1, c)] - de[(0, c)]);
    Ok((r, jac))
}

fn newton_equipartition(
    p: &Partition,
    q: &Potential,
    start: Vec<f64>,
    max_iterations: usize,
) -> Option<Vec<f64>> {
    let mut s = start;
    let (mut r, mut jac) = equi_residual(p, q, &s).ok()?;
    for _ in 0..max_iterations {
        let norm = r.norm();
        if r.amax() <= 1e-13 {
            return Some(s.iter().map(|x| -x.exp()).collect());
        }
        let mut step = jac.clone().lu().solve(&(-&r))?;
        let len = step.amax();
        if !len.is_finite() {
            return None;
        }
        if len > 2.0 {
            step *= 2.0 / len;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = s.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if let Ok((rt, jt)) = equi_residual(p, q, &trial) {
                if rt.norm() < (1.0 - 1e-4 * t) * norm {
                    s = trial;
                    r = rt;
                    jac = jt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r.amax() <= 1e-11).then(|| s.iter().map(|x| -x.exp()).collect())
}

/// Multi-start Newton search for equipartitions of a tree partition in the
/// negative orthant. Returns every distinct point found (possibly none).
pub fn find_tree_equipartitions(
    h: &Hamiltonian,
    p: &Partition,
    search: &EquipartitionSearch,
) -> Result<Vec<EquipartitionPoint>> {
    if p.graph() != h.graph() {
        return Err(Error::InvalidInput("partition of a different graph".into()));
    }
    if !p.multigraph().is_tree() {
        return Err(Error::NotTreePartition);
    }
    let q = h.potential();
    if p.nu() == 1 {
        return Ok(vec![EquipartitionPoint::from_alpha(p, q, &[])?]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut found: Vec<EquipartitionPoint> = Vec::new();
    for _ in 0..search.starts {
        let start: Vec<f64> = (0..p.nu() - 1)
            .map(|_| rng.gen_range(search.log_range.0..search.log_range.1))
            .collect();
        let Some(alpha) = newton_equipartition(p, q, start, search.max_iterations) else {
            continue;
        };
        let Ok(point) = EquipartitionPoint::from_alpha(p, q, &alpha) else {
            continue;
        };
        let duplicate = found.iter().any(|f| {
            f.alpha
                .iter()
                .zip(&point.alpha)
                .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()))
        });
        if !duplicate {
            found.push(point);
        }
    }
    Ok(found)
}

/// First equipartition found by [`find_tree_equipartitions`].
pub fn find_tree_equipartition(
    h: &Hamiltonian,
    p: &Partition,
    search: &EquipartitionSearch,
) -> Result<EquipartitionPoint> {
    find_tree_equipartitions(h, p, search)?
        .into_iter()
        .next()
        .ok_or(Error::NotFound)
}

/// Which deleted edges become chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChartRule {
    /// Lexicographically smallest coordinate set.
    #[default]
    LexFirst,
    /// Lexicographically largest coordinate set.
    LexLast,
}

/// Local parametrization of the equipartition manifold around a point by the
/// parameters `ξ` of `η` deleted edges `X(P)`. The remaining `ν - 1`
/// deleted edges form a spanning tree of the partition graph.
#[derive(Debug, Clone)]
pub struct ManifoldChart {
    base: Hamiltonian,
    center: EquipartitionPoint,
    x: Vec<usize>,
    bridges: Vec<usize>,
    center_xi: Vec<f64>,
    reference_gap: f64,
}

/// One point of the chart: `Λ`, the full parameter vector and the
/// Courant-sharp eigenvector `ψ` of `G_ξ`.
#[derive(Debug, Clone)]
pub struct ChartPoint {
    pub xi: Vec<f64>,
    pub lambda: f64,
    /// Aligned with [`Partition::removed_edges`].
    pub alpha: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ManifoldChart {
    pub fn new(base: &Hamiltonian, center: EquipartitionPoint, rule: ChartRule) -> Result<Self> {
        if !base.steps().is_empty() || center.partition.graph() != base.graph() {
            return Err(Error::InvalidInput(
                "chart needs the undeleted operator of the partition's graph".into(),
            ));
        }
        let p = &center.partition;
        let mg = p.multigraph();
        let mut order: Vec<usize> = (0..mg.edge_count()).collect();
        if rule == ChartRule::LexFirst {
            order.reverse();
        }
        let mut uf = UnionFind::new(p.nu());
        let (mut x, mut bridges) = (Vec::new(), Vec::new());
        for k in order {
            let e = mg.edges()[k];
            if uf.union(e.a, e.b) {
                bridges.push(k);
            } else {
                x.push(k);
            }
        }
        x.sort_unstable();
        bridges.sort_unstable();
        let center_xi = x.iter().map(|&k| center.alpha[k]).collect();
        let reference_gap = base.spectrum()?.min_gap();
        Ok(ManifoldChart {
            base: base.clone(),
            center,
            x,
            bridges,
            center_xi,
            reference_gap,
        })
    }

    /// Chart around the equipartition induced by eigenvector `n`.
    pub fn at_eigenvector(h: &Hamiltonian, s: &Spectrum, n: usize, rule: ChartRule) -> Result<Self> {
        let center = induced_equipartition(h, s, n)?;
        Self::new(h, center, rule)
    }

    pub fn partition(&self) -> &Partition {
        &self.center.partition
    }

    pub fn center(&self) -> &EquipartitionPoint {
        &self.center
    }

    pub fn eta(&self) -> usize {
        self.x.len()
    }

    pub fn center_xi(&self) -> &[f64] {
        &self.center_xi
    }

    /// Coordinate edges `X(P)`, sorted.
    pub fn x_edges(&self) -> Vec<Edge> {
        let removed = self.partition().removed_edges();
        self.x.iter().map(|&k| removed[k]).collect()
    }

    pub fn bridge_edges(&self) -> Vec<Edge> {
        let removed = self.partition().removed_edges();
        self.bridges.iter().map(|&k| removed[k]).collect()
    }

    pub fn base(&self) -> &Hamiltonian {
        &self.base
    }

    /// Radius of a ball around the center on which no parameter reaches zero
    /// and, by Weyl's inequality, `Λ` moves by at most a tenth of the
    /// smallest gap of `σ(G)`.
    pub fn radius(&self) -> f64 {
        if self.x.is_empty() {
            return 0.0;
        }
        let g = self.base.graph();
        let removed = self.partition().removed_edge_indices();
        let mut lipschitz = 0.0;
        let mut min_xi = f64::INFINITY;
        for (&k, &xi) in self.x.iter().zip(&self.center_xi) {
            let w = g.weight(removed[k]);
            lipschitz += w * (1.0 + 1.0 / (0.9 * xi * xi));
            min_xi = min_xi.min(xi.abs());
        }
        0.1 * min_xi.min(self.reference_gap / lipschitz)
    }

    /// Operator of `G_ξ`: `G` with the coordinate edges deleted.
    pub fn g_xi(&self, xi: &[f64]) -> Result<Hamiltonian> {
        if xi.len() != self.eta() {
            return Err(Error::DimensionMismatch {
                expected: self.eta(),
                got: xi.len(),
            });
        }
        let steps: Vec<SurgeryStep> = self
            .x_edges()
            .into_iter()
            .zip(xi)
            .map(|(edge, &alpha)| SurgeryStep { edge, alpha })
            .collect();
        self.base.with_steps(&steps)
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if let Some(&x) = xi.iter().find(|&&x| !(x < -ALPHA_MIN)) {
            return Err(Error::ChartLeft(format!(
                "coordinate {x} outside the negative orthant"
            )));
        }
        Ok(())
    }

    /// `Λ(ξ)` with the full point; see [`chart_evaluate`].
    pub fn evaluate(&self, xi: &[f64]) -> Result<ChartPoint> {
        let h = self.g_xi(xi)?;
        self.check_xi(xi)?;
        let nu = self.partition().nu();
        let s = h.spectrum()?;
        s.require_nondegenerate(nu)?;
        let psi = s.vector(nu).to_vec();
        let lambda = s.value(nu);
        let factor = h.factor_graph()?;
        let nodal = analyze_nodal(&factor, &psi)?;
        if nodal.partition.labels() != self.partition().labels() {
            return Err(Error::ChartLeft(format!(
                "nodal partition of psi has {} domains and differs from the chart's",
                nodal.nu
            )));
        }
        if (lambda - self.center.lambda).abs() >= self.reference_gap {
            return Err(Error::ChartLeft(format!(
                "energy moved by {:e}, more than the smallest spectral gap",
                (lambda - self.center.lambda).abs()
            )));
        }
        let removed = self.partition().removed_edges();
        let mut alpha = self.center.alpha.clone();
        for (&k, &x) in self.x.iter().zip(xi) {
            alpha[k] = x;
        }
        for &k in &self.bridges {
            let e = removed[k];
            alpha[k] = psi[e.j] / psi[e.i];
        }
        Ok(ChartPoint {
            xi: xi.to_vec(),
            lambda,
            alpha,
            psi,
        })
    }

    pub fn lambda(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.evaluate(xi)?.lambda)
    }

    /// Exact gradient `∂Λ/∂ξ_e = w(-ψ_i² + ψ_j²/ξ_e²)`.
    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let point = self.evaluate(xi)?;
        let g = self.base.graph();
        let removed = self.partition().removed_edge_indices();
        Ok(self
            .x
            .iter()
            .zip(xi)
            .map(|(&k, &x)| {
                let idx = removed[k];
                let e = g.edges()[idx];
                let (pi, pj) = (point.psi[e.i], point.psi[e.j]);
                g.weight(idx) * (-pi * pi + pj * pj / (x * x))
            })
            .collect())
    }

    /// Exact Hessian `∂²Λ/∂ξ_a∂ξ_b` from second-order perturbation theory:
    /// `ψᵀ H_ab ψ + 2 Σ_{k≠ν} (ψᵀ H_a ψ_k)(ψ_kᵀ H_b ψ) / (Λ - λ_k)`, where
    /// `H_a` is the diagonal derivative of the operator along `ξ_a`.
    pub fn hessian(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.evaluate(xi)?;
        let h = self.g_xi(xi)?;
        let s = h.spectrum()?;
        let nu = self.partition().nu();
        let psi = s.vector(nu);
        let lambda = s.value(nu);
        let g = self.base.graph();
        let removed = self.partition().removed_edge_indices();
        let eta = self.eta();
        // (edge, weight) per coordinate; H_a = diag(-w at i, w/ξ² at j)
        let coords: Vec<(Edge, f64)> = self
            .x
            .iter()
            .map(|&k| (g.edges()[removed[k]], g.weight(removed[k])))
            .collect();
        let overlaps = DMatrix::from_fn(eta, s.len(), |a, k| {
            let (e, w) = coords[a];
            let phi = s.vector(k + 1);
            -w * psi[e.i] * phi[e.i] + w / (xi[a] * xi[a]) * psi[e.j] * phi[e.j]
        });
        let mut hess = DMatrix::zeros(eta, eta);
        for a in 0..eta {
            let (e, w) = coords[a];
            hess[(a, a)] = -2.0 * w / xi[a].powi(3) * psi[e.j] * psi[e.j];
        }
        for k in (1..=s.len()).filter(|&k| k != nu) {
            let denom = lambda - s.value(k);
            for a in 0..eta {
                for b in 0..eta {
                    hess[(a, b)] += 2.0 * overlaps[(a, k - 1)] * overlaps[(b, k - 1)] / denom;
                }
            }
        }
        Ok(hess)
    }
}

impl ChartPoint {
    pub fn to_equipartition(&self, chart: &ManifoldChart) -> Result<EquipartitionPoint> {
        EquipartitionPoint::evaluate(chart.partition(), chart.base().potential(), &self.alpha)
    }
}

/// Evaluates the chart at `ξ`: builds `G_ξ`, takes its `ν`-th eigenvector,
/// checks that its nodal partition is the chart's partition, and reads the
/// bridge parameters off the eigenvector.
pub fn chart_evaluate(c: &ManifoldChart, xi: &[f64]) -> Result<ChartPoint> {
    c.evaluate(xi)
}

/// Lagrange multipliers and critical-point residuals for eigenpair `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeCertificate {
    pub n: usize,
    /// `c_k = Σ_{v ∈ P_k} f_v²`.
    pub c: Vec<f64>,
    /// `c_χ(i) g_i² - c_χ(j) g_j² / α²` per deleted edge.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub sum_c: f64,
    /// `min_± ‖Σ ±√c_k g_k ∓ f‖∞`.
    pub reconstruction_error: f64,
}

/// Builds `f = Σ ±√c_k g(P_k; α)` with signs from the two-colouring of the
/// partition graph (domain 0 positive).
pub fn reconstruct_from_multipliers(ep: &EquipartitionPoint, c: &[f64]) -> Result<Vec<f64>> {
    let coloring = ep
        .partition
        .multigraph()
        .two_coloring()
        .ok_or_else(|| Error::InvalidInput("partition is not bipartite".into()))?;
    let n = ep.partition.graph().vertex_count();
    let mut f = vec![0.0; n];
    for (k, g) in ep.ground_states.iter().enumerate() {
        let sign = if coloring[k] == coloring[0] { 1.0 } else { -1.0 };
        let amp = sign * c[k].sqrt();
        for v in 0..n {
            f[v] += amp * g[v];
        }
    }
    Ok(f)
}

fn multiplier_residuals(ep: &EquipartitionPoint, c: &[f64]) -> Vec<f64> {
    let p = &ep.partition;
    p.removed_edges()
        .iter()
        .zip(&ep.alpha)
        .map(|(e, &a)| {
            let (di, dj) = (p.domain_of(e.i), p.domain_of(e.j));
            let gi = ep.ground_states[di][e.i];
            let gj = ep.ground_states[dj][e.j];
            c[di] * gi * gi - c[dj] * gj * gj / (a * a)
        })
        .collect()
}

pub fn lagrange_certificate(h: &Hamiltonian, s: &Spectrum, n: usize) -> Result<LagrangeCertificate> {
    let ep = induced_equipartition(h, s, n)?;
    let f = s.vector(n);
    let p = &ep.partition;
    let mut c = vec![0.0; p.nu()];
    for (v, x) in f.iter().enumerate() {
        c[p.domain_of(v)] += x * x;
    }
    let residuals = multiplier_residuals(&ep, &c);
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let rebuilt = reconstruct_from_multipliers(&ep, &c)?;
    let plus = rebuilt.iter().zip(f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let minus = rebuilt.iter().zip(f).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
    Ok(LagrangeCertificate {
        n,
        sum_c: c.iter().sum(),
        c,
        residuals,
        max_residual,
        reconstruction_error: plus.min(minus),
    })
}

/// Converse direction: at an equipartition point, solve the critical-point
/// conditions on a spanning tree of the partition graph for the multipliers
/// (normalized to `Σ c_k = 1`), then rebuild the candidate eigenvector.
///
/// Returns `(c, residuals over all deleted edges, f)`. Small residuals on the
/// edges outside the spanning tree mean the point is critical.
pub fn multipliers_from_point(ep: &EquipartitionPoint) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let p = &ep.partition;
    let removed = p.removed_edges();
    let mut c = vec![0.0; p.nu()];
    c[0] = 1.0;
    for (parent, child, k) in tree_order_spanning(p) {
        let e = removed[k];
        let a = ep.alpha[k];
        let (di, dj) = (p.domain_of(e.i), p.domain_of(e.j));
        let gi = ep.ground_states[di][e.i];
        let gj = ep.ground_states[dj][e.j];
        // c_di gi² = c_dj gj² / a²
        c[child] = if di == parent {
            c[parent] * gi * gi * a * a / (gj * gj)
        } else {
            c[parent] * gj * gj / (a * a * gi * gi)
        };
    }
    let total: f64 = c.iter().sum();
    for x in &mut c {
        *x /= total;
    }
    let residuals = multiplier_residuals(ep, &c);
    let f = reconstruct_from_multipliers(ep, &c)?;
    Ok((c, residuals, f))
}

/// BFS spanning tree of a (multi)partition graph from domain 0.
fn tree_order_spanning(p: &Partition) -> Vec<(usize, usize, usize)> {
    tree_order(p)
}
