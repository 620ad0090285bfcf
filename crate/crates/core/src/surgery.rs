//! Edge deletion with potential compensation and the rank-one family
//! `H(G'; α) = H(G) + B(α)`.
//!
//! For an edge `(i, j)` of weight `w`, `B(α)` has the four entries
//! `B_ii = -wα`, `B_ij = B_ji = w`, `B_jj = -w/α`. It removes the edge from
//! the operator and shifts the potential at both endpoints. `B(α)` is
//! `-(w/α) v vᵀ` with `v = α e_i - e_j`, so it is negative semi-definite for
//! `α > 0` and positive semi-definite for `α < 0`, and `B(α) f = 0` exactly
//! when `f_j = α f_i`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::graph::Edge;
use crate::nodal::{analyze_nodal, check_nonvanishing};
use crate::operator::{eigendecompose, Hamiltonian, Spectrum, GAP_TOL};
use crate::{Error, Result};

/// Parameters closer to zero than this are rejected.
pub const ALPHA_MIN: f64 = 1e-6;
/// Tolerance for matching an eigenvalue inside another spectrum, relative to
/// the spectral range.
pub const POSITION_TOL: f64 = 1e-8;
/// Relative width at which the bisection for critical points stops.
pub const BISECTION_TOL: f64 = 1e-13;
/// Extent and density of the log-spaced bracketing grid for `|α|`.
pub const SCAN_DECADES: (i32, i32) = (-6, 6);
pub const SCAN_POINTS_PER_DECADE: usize = 16;
/// Second derivatives smaller than this fraction of the sum of the magnitudes
/// of their terms carry no reliable sign.
pub const CURVATURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeryStep {
    pub edge: Edge,
    pub alpha: f64,
}

/// The rank-one matrix `B(α)` for one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationB {
    pub edge: Edge,
    pub alpha: f64,
    pub weight: f64,
}

impl PerturbationB {
    pub fn new(edge: Edge, alpha: f64) -> Self {
        Self::weighted(edge, alpha, 1.0)
    }

    pub fn weighted(edge: Edge, alpha: f64, weight: f64) -> Self {
        PerturbationB {
            edge,
            alpha,
            weight,
        }
    }

    pub fn dense(&self, n: usize) -> DMatrix<f64> {
        let Edge { i, j } = self.edge;
        let mut b = DMatrix::zeros(n, n);
        b[(i, i)] = -self.weight * self.alpha;
        b[(j, j)] = -self.weight / self.alpha;
        b[(i, j)] = self.weight;
        b[(j, i)] = self.weight;
        b
    }

    /// The only non-zero eigenvalue, `-w(α + 1/α)`.
    pub fn nonzero_eigenvalue(&self) -> f64 {
        -self.weight * (self.alpha + 1.0 / self.alpha)
    }

    /// `(Bf)_i` and `(Bf)_j`; all other entries vanish.
    pub fn apply(&self, f: &[f64]) -> (f64, f64) {
        let Edge { i, j } = self.edge;
        let w = self.weight;
        (
            w * (-self.alpha * f[i] + f[j]),
            w * (f[i] - f[j] / self.alpha),
        )
    }
}

fn rayleigh(h: &Hamiltonian, f: &[f64]) -> f64 {
    let hf = h.apply(f);
    let num: f64 = hf.iter().zip(f).map(|(a, b)| a * b).sum();
    let den: f64 = f.iter().map(|x| x * x).sum();
    num / den
}

/// Deletes `edge` and shifts the potential so that `f` stays an eigenvector
/// with the same eigenvalue: `q_i -= w f_j/f_i`, `q_j -= w f_i/f_j`.
pub fn delete_edge_compensated(h: &Hamiltonian, f: &[f64], edge: Edge) -> Result<Hamiltonian> {
    if f.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: f.len(),
        });
    }
    if !h.has_edge(edge) {
        return Err(Error::MissingEdge(edge));
    }
    check_nonvanishing(f)?;
    let lambda = rayleigh(h, f);
    let norm = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if h.residual(f, lambda) > 1e-8 * h.norm_inf().max(1.0) * norm {
        return Err(Error::InvalidInput(
            "vector is not an eigenvector of the operator".into(),
        ));
    }
    let factor = h.factor_graph()?;
    if factor.is_bridge(edge) {
        return Err(Error::Disconnects(edge));
    }
    h.with_step(SurgeryStep {
        edge,
        alpha: f[edge.j] / f[edge.i],
    })
}

/// `H(G'; α) = H + B(α)` for an edge of the current factor.
pub fn parametrized_hamiltonian(h: &Hamiltonian, edge: Edge, alpha: f64) -> Result<Hamiltonian> {
    if !alpha.is_finite() || alpha.abs() <= ALPHA_MIN {
        return Err(Error::AlphaNearZero(alpha));
    }
    h.with_step(SurgeryStep { edge, alpha })
}

/// One sample of the `m`-th eigenvalue branch.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub alpha: f64,
    pub lambda: f64,
    pub vector: Vec<f64>,
}

pub fn eigenvalue_curve(
    h: &Hamiltonian,
    edge: Edge,
    m: usize,
    alphas: &[f64],
) -> Result<Vec<CurvePoint>> {
    eigenvalue_curve_with(Execution::default(), h, edge, m, alphas)
}

pub fn eigenvalue_curve_with(
    exec: Execution,
    h: &Hamiltonian,
    edge: Edge,
    m: usize,
    alphas: &[f64],
) -> Result<Vec<CurvePoint>> {
    check_branch_index(h, m)?;
    exec.map(alphas, |&alpha| {
        let s = parametrized_hamiltonian(h, edge, alpha)?.spectrum()?;
        Ok(CurvePoint {
            alpha,
            lambda: s.value(m),
            vector: s.vector(m).to_vec(),
        })
    })
    .into_iter()
    .collect()
}

fn check_branch_index(h: &Hamiltonian, m: usize) -> Result<()> {
    if m == 0 || m > h.dim() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: h.dim(),
        });
    }
    Ok(())
}

/// Gap reference for branches of `H + B(α)`. The spectral range of the
/// perturbed operator grows like `|α| + 1/|α|` through one isolated
/// eigenvalue, so it would hide genuine gaps among the others.
fn branch_scale(h: &Hamiltonian) -> f64 {
    h.norm_inf().max(1.0)
}

struct BranchSample {
    lambda: f64,
    vector: Vec<f64>,
    derivative: f64,
}

fn branch_sample(h: &Hamiltonian, edge: Edge, m: usize, alpha: f64) -> Result<BranchSample> {
    let hp = parametrized_hamiltonian(h, edge, alpha)?;
    let s = hp.spectrum()?;
    if s.gap(m) <= GAP_TOL * branch_scale(h) {
        return Err(Error::DegenerateBranch { branch: m, alpha });
    }
    let w = h.edge_weight(edge).unwrap_or(1.0);
    let lambda = s.value(m);
    let mut f = s.vector(m).to_vec();
    refine_shifted_component(&hp, edge, alpha, lambda, &mut f, branch_scale(h));
    let (fi, fj) = (f[edge.i], f[edge.j]);
    Ok(BranchSample {
        lambda,
        derivative: w * (-fi * fi + fj * fj / (alpha * alpha)),
        vector: f,
    })
}

/// Recomputes the endpoint component carrying the larger shift (`j` when
/// `|α| < 1`, else `i`) from its row of the eigen-equation,
/// `f_c = -Σ_{k≠c} H'_ck f_k / (H'_cc - λ)`.
///
/// A large shift nearly decouples that vertex, so its component is small and
/// the dense solver only resolves it to an absolute accuracy of order
/// `ε‖H'‖`. The row quotient has full relative accuracy whenever the
/// denominator dominates `‖H‖`.
fn refine_shifted_component(
    hp: &Hamiltonian,
    edge: Edge,
    alpha: f64,
    lambda: f64,
    f: &mut [f64],
    scale: f64,
) {
    let c = if alpha.abs() < 1.0 { edge.j } else { edge.i };
    let a = hp.matrix();
    let den = a[(c, c)] - lambda;
    if den.abs() <= 4.0 * scale {
        return;
    }
    let num: f64 = (0..f.len()).filter(|&k| k != c).map(|k| a[(c, k)] * f[k]).sum();
    f[c] = -num / den;
}

/// `dλ_m/dα = w(-f_i² + f_j²/α²)` from first-order perturbation theory,
/// with `f` the normalized `m`-th eigenvector of `H + B(α)`.
pub fn d_lambda_d_alpha(h: &Hamiltonian, edge: Edge, m: usize, alpha: f64) -> Result<f64> {
    check_branch_index(h, m)?;
    Ok(branch_sample(h, edge, m, alpha)?.derivative)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSign {
    Positive,
    Negative,
}

impl AlphaSign {
    pub fn of(alpha: f64) -> Self {
        if alpha > 0.0 {
            AlphaSign::Positive
        } else {
            AlphaSign::Negative
        }
    }

    pub fn factor(self) -> f64 {
        match self {
            AlphaSign::Positive => 1.0,
            AlphaSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Max,
    Min,
}

/// A relevant critical point `α = f_j(α)/f_i(α)` of the `m`-th branch.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub alpha: f64,
    pub kind: CriticalKind,
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// Branch index in `σ(G'; α)`.
    pub branch: usize,
    /// Position of `lambda` in `σ(G)`.
    pub position: usize,
}

/// Log-spaced `|α|` grid with the given sign.
pub fn alpha_grid(sign: AlphaSign, decades: (i32, i32), per_decade: usize) -> Vec<f64> {
    let count = (decades.1 - decades.0) as usize * per_decade;
    (0..=count)
        .map(|k| {
            let exponent = decades.0 as f64 + k as f64 / per_decade as f64;
            sign.factor() * 10f64.powf(exponent)
        })
        .collect()
}

/// `d²λ_m/dα²` from second-order perturbation theory, together with the sum
/// of the magnitudes of its terms.
///
/// With `B' = w(-e_i e_iᵀ + e_j e_jᵀ/α²)` and `B'' = -(2w/α³) e_j e_jᵀ`:
/// `λ'' = fᵀB''f + 2 Σ_{k≠m} (fᵀB'φ_k)² / (λ_m - λ_k)`.
pub fn d2_lambda_d_alpha2(h: &Hamiltonian, edge: Edge, m: usize, alpha: f64) -> Result<(f64, f64)> {
    check_branch_index(h, m)?;
    let s = parametrized_hamiltonian(h, edge, alpha)?.spectrum()?;
    if s.gap(m) <= GAP_TOL * branch_scale(h) {
        return Err(Error::DegenerateBranch { branch: m, alpha });
    }
    let w = h.edge_weight(edge).unwrap_or(1.0);
    let f = s.vector(m);
    let (fi, fj) = (f[edge.i], f[edge.j]);
    let direct = -2.0 * w * fj * fj / (alpha * alpha * alpha);
    let (mut value, mut size) = (direct, direct.abs());
    for k in (1..=s.len()).filter(|&k| k != m) {
        let phi = s.vector(k);
        let overlap = w * (-fi * phi[edge.i] + fj * phi[edge.j] / (alpha * alpha));
        let term = 2.0 * overlap * overlap / (s.value(m) - s.value(k));
        value += term;
        size += term.abs();
    }
    Ok((value, size))
}

/// Classifies a critical point of the `m`-th branch by the sign of the exact
/// second derivative.
pub fn classify_critical(
    h: &Hamiltonian,
    edge: Edge,
    m: usize,
    alpha: f64,
) -> Result<CriticalKind> {
    let (value, size) = d2_lambda_d_alpha2(h, edge, m, alpha)?;
    if value.abs() <= CURVATURE_TOL * size {
        return Err(Error::DegenerateData {
            edge,
            reason: format!("no definite curvature at alpha = {alpha} (second derivative {value:e})"),
        });
    }
    Ok(if value < 0.0 {
        CriticalKind::Max
    } else {
        CriticalKind::Min
    })
}

/// Searches the `m`-th branch of `H + B(α)` for relevant critical points
/// with the given sign of `α`.
///
/// The derivative is sampled on a log-spaced grid, every sign change is
/// bisected, and only roots where `B(α) f = 0` and `λ` lies in `σ(H)` are
/// kept. Results are sorted by `|α|`.
pub fn find_critical_alpha(
    h: &Hamiltonian,
    edge: Edge,
    m: usize,
    sign: AlphaSign,
) -> Result<Vec<CriticalPoint>> {
    check_branch_index(h, m)?;
    if !h.has_edge(edge) {
        return Err(Error::MissingEdge(edge));
    }
    let spec_g = eigendecompose(h)?;
    let tol = POSITION_TOL * spec_g.scale();
    let grid = alpha_grid(sign, SCAN_DECADES, SCAN_POINTS_PER_DECADE);
    let derivs: Vec<Option<f64>> = grid
        .iter()
        .map(|&a| branch_sample(h, edge, m, a).ok().map(|s| s.derivative))
        .collect();

    let mut found = Vec::new();
    for k in 0..grid.len() - 1 {
        let (Some(da), Some(db)) = (derivs[k], derivs[k + 1]) else {
            continue;
        };
        if da == 0.0 {
            if let Some(cp) = accept_root(h, &spec_g, edge, m, grid[k], tol) {
                found.push(cp);
            }
            continue;
        }
        if da * db > 0.0 || db == 0.0 {
            continue;
        }
        let Ok(root) = bisect(h, edge, m, grid[k], grid[k + 1], da) else {
            continue;
        };
        if let Some(cp) = accept_root(h, &spec_g, edge, m, root, tol) {
            found.push(cp);
        }
    }
    if found.is_empty() {
        return Err(Error::NoCriticalPoint {
            branch: m,
            sign: sign.factor() as i8,
        });
    }
    Ok(found)
}

fn bisect(h: &Hamiltonian, edge: Edge, m: usize, a: f64, b: f64, da: f64) -> Result<f64> {
    let (mut lo, mut hi, mut dlo) = (a, b, da);
    for _ in 0..200 {
        if (hi - lo).abs() <= BISECTION_TOL * lo.abs().max(hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let dm = branch_sample(h, edge, m, mid)?.derivative;
        if dm == 0.0 {
            return Ok(mid);
        }
        if dm * dlo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            dlo = dm;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn accept_root(
    h: &Hamiltonian,
    spec_g: &Spectrum,
    edge: Edge,
    m: usize,
    alpha: f64,
    tol: f64,
) -> Option<CriticalPoint> {
    let sample = branch_sample(h, edge, m, alpha).ok()?;
    let f = &sample.vector;
    let scale = f[edge.i].abs().max(f[edge.j].abs());
    // relevant iff f_j = α f_i, i.e. B(α) f = 0
    if (alpha * f[edge.i] - f[edge.j]).abs() > 1e-7 * scale.max(alpha.abs() * scale) {
        return None;
    }
    let position = spec_g.position_of(sample.lambda, tol)?;
    if position.abs_diff(m) > 1 {
        return None;
    }
    let kind = classify_critical(h, edge, m, alpha).ok()?;
    Some(CriticalPoint {
        alpha,
        kind,
        lambda: sample.lambda,
        vector: sample.vector,
        branch: m,
        position,
    })
}

/// Smallest slack of the Weyl interlacing inequalities between `σ(G)` and
/// `σ(G'; α)`; non-negative when they interlace.
///
/// For `α > 0` (`B ≤ 0`): `λ_k(G'; α) ≤ λ_k(G) ≤ λ_{k+1}(G'; α)`.
/// For `α < 0` (`B ≥ 0`): `λ_k(G) ≤ λ_k(G'; α) ≤ λ_{k+1}(G)`.
pub fn interlacing_slack(spec_g: &Spectrum, spec_gp: &Spectrum, alpha: f64) -> f64 {
    let (lower, upper) = if alpha > 0.0 {
        (spec_gp.values(), spec_g.values())
    } else {
        (spec_g.values(), spec_gp.values())
    };
    let n = lower.len();
    let mut slack = f64::INFINITY;
    for k in 0..n {
        slack = slack.min(upper[k] - lower[k]);
        if k + 1 < n {
            slack = slack.min(lower[k + 1] - upper[k]);
        }
    }
    slack
}

/// Change of spectral position and nodal data when one edge is added back.
///
/// `G'` is the factor without the edge; `G` the one with it. Differences are
/// taken as value on `G` minus value on `G'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookkeepingRecord {
    pub edge: Edge,
    pub alpha_c: f64,
    pub kind: CriticalKind,
    /// 1 for a maximum, 0 for a minimum.
    pub big_m: u8,
    /// Position of the shared eigenvalue in `σ(G'; α_c)`.
    pub m: usize,
    /// Position in `σ(G)`.
    pub n: usize,
    pub delta_n: i64,
    pub delta_ell: i64,
    pub delta_nu: i64,
}

impl BookkeepingRecord {
    /// `Δℓ - Δν = M - Δn`.
    pub fn identity_holds(&self) -> bool {
        self.delta_ell - self.delta_nu == self.big_m as i64 - self.delta_n
    }

    /// `M - Δn` equals 1 for `α_c > 0` and 0 for `α_c < 0`.
    pub fn sign_rule_holds(&self) -> bool {
        let expected = if self.alpha_c > 0.0 { 1 } else { 0 };
        self.big_m as i64 - self.delta_n == expected
    }
}

/// Fills a [`BookkeepingRecord`] for the step `G → G'` that deleted `edge`
/// with parameter `alpha_c`.
///
/// The shared eigenvector is located in `σ(G')` as the eigenpair satisfying
/// `B(α_c) f = 0` that is also an eigenpair of `H(G)`. The extremum type
/// comes from the curvature of the branch, the positions from both spectra,
/// and the nodal changes from direct counts on both factors.
pub fn bookkeeping(
    h_g: &Hamiltonian,
    h_gprime: &Hamiltonian,
    edge: Edge,
    alpha_c: f64,
) -> Result<BookkeepingRecord> {
    let expected = parametrized_hamiltonian(h_g, edge, alpha_c)?;
    let mismatch = (expected.matrix() - h_gprime.matrix()).amax();
    if mismatch > 1e-12 * h_g.norm_inf().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "H(G') differs from H(G) + B(alpha_c) by {mismatch:e}"
        )));
    }
    let degenerate = |reason: String| Error::DegenerateData { edge, reason };

    let spec_gp = eigendecompose(h_gprime)?;
    let spec_g = eigendecompose(h_g)?;
    let norm = h_g.norm_inf().max(1.0);
    let (m, residual) = (1..=spec_gp.len())
        .map(|k| (k, h_g.residual(spec_gp.vector(k), spec_gp.value(k))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty spectrum");
    if residual > 1e-8 * norm {
        return Err(degenerate(format!(
            "no eigenvector shared by G and G' (best residual {residual:e})"
        )));
    }
    if spec_gp.gap(m) <= GAP_TOL * branch_scale(h_g) {
        return Err(degenerate(format!("eigenvalue {m} of G' is not simple")));
    }
    let lambda = spec_gp.value(m);
    let n = spec_g
        .position_of(lambda, POSITION_TOL * spec_g.scale())
        .ok_or_else(|| degenerate("shared eigenvalue not found in sigma(G)".into()))?;
    if spec_g.gap(n) <= GAP_TOL * spec_g.scale() {
        return Err(degenerate(format!("eigenvalue {n} of G is not simple")));
    }
    let f = spec_gp.vector(m);

    let kind = classify_critical(h_g, edge, m, alpha_c)?;
    let big_m = u8::from(kind == CriticalKind::Max);

    let on_g = analyze_nodal(&h_g.factor_graph()?, f).map_err(|e| degenerate(e.to_string()))?;
    let on_gp =
        analyze_nodal(&h_gprime.factor_graph()?, f).map_err(|e| degenerate(e.to_string()))?;
    let record = BookkeepingRecord {
        edge,
        alpha_c,
        kind,
        big_m,
        m,
        n,
        delta_n: n as i64 - m as i64,
        delta_ell: on_g.ell as i64 - on_gp.ell as i64,
        delta_nu: on_g.nu as i64 - on_gp.nu as i64,
    };
    if !record.identity_holds() {
        return Err(Error::BookkeepingViolation {
            edge,
            lhs: record.delta_ell - record.delta_nu,
            rhs: big_m as i64 - record.delta_n,
        });
    }
    Ok(record)
}

/// Result of cutting a graph down to a spanning tree along an eigenvector.
#[derive(Debug, Clone)]
pub struct Chain {
    pub tree: Hamiltonian,
    /// Starting spectral index on `G`.
    pub n: usize,
    /// Position of the eigenvector on the final tree.
    pub m: usize,
    /// One record per deleted edge, in deletion order.
    pub records: Vec<BookkeepingRecord>,
    pub nu: usize,
    pub ell: usize,
    /// Nodal domains of the eigenvector on the tree.
    pub tree_nu: usize,
}

impl Chain {
    pub fn sum_m(&self) -> usize {
        self.records.iter().map(|r| r.big_m as usize).sum()
    }

    /// `n + ℓ_n - Σ M(e)`, which must equal `ν_n`.
    pub fn replay_nu(&self) -> i64 {
        self.n as i64 + self.ell as i64 - self.sum_m() as i64
    }
}

/// Deletes non-bridge edges in sorted order, compensating with eigenvector
/// `n`, until a spanning tree remains.
pub fn chain_to_spanning_tree(h: &Hamiltonian, s: &Spectrum, n: usize) -> Result<Chain> {
    s.require_nondegenerate(n)?;
    let f = s.vector(n).to_vec();
    let start = analyze_nodal(&h.factor_graph()?, &f)?;
    let mut current = h.clone();
    let mut position = n;
    let mut records = Vec::new();
    loop {
        let factor = current.factor_graph()?;
        let Some(&edge) = factor.edges().iter().find(|&&e| !factor.is_bridge(e)) else {
            break;
        };
        let step = records.len();
        let fail = |reason: String| Error::IntermediateDegeneracy { step, edge, reason };
        let next = delete_edge_compensated(&current, &f, edge).map_err(|e| fail(e.to_string()))?;
        let alpha = f[edge.j] / f[edge.i];
        let record = match bookkeeping(&current, &next, edge, alpha) {
            Ok(r) => r,
            Err(e @ Error::BookkeepingViolation { .. }) => return Err(e),
            Err(e) => return Err(fail(e.to_string())),
        };
        if record.n != position {
            return Err(fail(format!(
                "position drifted: expected {position}, found {}",
                record.n
            )));
        }
        position = record.m;
        records.push(record);
        current = next;
    }
    let tree_nu = analyze_nodal(&current.factor_graph()?, &f)?.nu;
    Ok(Chain {
        tree: current,
        n,
        m: position,
        records,
        nu: start.nu,
        ell: start.ell,
        tree_nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::operator::Potential;
    use approx::assert_abs_diff_eq;

    fn four_cycle() -> Hamiltonian {
        Hamiltonian::new(&Graph::cycle(4), &Potential(vec![0.13, -0.41, 0.37, 0.05])).unwrap()
    }

    #[test]
    fn perturbation_entries_and_eigenvalue() {
        let e = Edge::new(1, 3);
        let b = PerturbationB::new(e, -1.0);
        let d = b.dense(4);
        assert_eq!(d.iter().filter(|x| **x != 0.0).count(), 4);
        assert_eq!((d[(1, 1)], d[(1, 3)], d[(3, 3)]), (1.0, 1.0, 1.0));
        assert_eq!(b.nonzero_eigenvalue(), 2.0);
        assert_eq!(PerturbationB::new(e, 1.0).nonzero_eigenvalue(), -2.0);
        let s = crate::operator::symmetric_eigen(&PerturbationB::new(e, 1.0).dense(4)).unwrap();
        assert!(s.values().iter().all(|&x| x <= 1e-15));
    }

    #[test]
    fn compensated_shifts_on_path_ground_state() {
        let g = Graph::path(3);
        let h = Hamiltonian::new(&g, &Potential::zeros(3)).unwrap();
        let r2 = 2f64.sqrt();
        let f = [0.5, r2 / 2.0, 0.5];
        let e = Edge::new(0, 1);
        // (0, 1) is a bridge of the path, so the checked deletion refuses it
        assert!(matches!(
            delete_edge_compensated(&h, &f, e),
            Err(Error::Disconnects(_))
        ));
        let cut = parametrized_hamiltonian(&h, e, f[1] / f[0]).unwrap();
        assert_abs_diff_eq!(cut.diagonal()[0], -r2, epsilon = 1e-15);
        assert_abs_diff_eq!(cut.diagonal()[1], -1.0 / r2, epsilon = 1e-15);
        assert!(cut.residual(&f, -r2) < 1e-14);

        let c = Graph::cycle(4);
        let hc = Hamiltonian::new(&c, &Potential::zeros(4)).unwrap();
        let fc = [0.5; 4];
        let cut = delete_edge_compensated(&hc, &fc, e).unwrap();
        assert_eq!(cut.diagonal()[0], -1.0);
        assert_eq!(cut.diagonal()[1], -1.0);
        assert!(cut.residual(&fc, -2.0) < 1e-14);
        assert!(matches!(
            delete_edge_compensated(&hc, &[1.0, 0.0, 1.0, 1.0], e),
            Err(Error::ZeroComponent { vertex: 1 })
        ));
    }

    #[test]
    fn weighted_shifts_scale_with_weight() {
        let g = Graph::with_weights(4, &[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
            .unwrap();
        let h = Hamiltonian::new(&g, &Potential(vec![0.3, -0.2, 0.5, 0.1])).unwrap();
        let s = h.spectrum().unwrap();
        let f = s.vector(2);
        let cut = delete_edge_compensated(&h, f, Edge::new(0, 1)).unwrap();
        assert_abs_diff_eq!(cut.diagonal()[0], 0.3 - 2.0 * f[1] / f[0], epsilon = 1e-14);
        assert_abs_diff_eq!(cut.diagonal()[1], -0.2 - 2.0 * f[0] / f[1], epsilon = 1e-14);
        assert!(cut.residual(f, s.value(2)) < 1e-12);
    }

    #[test]
    fn alpha_near_zero_is_rejected() {
        let h = four_cycle();
        assert!(matches!(
            parametrized_hamiltonian(&h, Edge::new(0, 1), 1e-7),
            Err(Error::AlphaNearZero(_))
        ));
        let hp = parametrized_hamiltonian(&h, Edge::new(0, 1), 0.5).unwrap();
        assert_eq!(hp.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn derivative_vanishes_at_compensating_alpha() {
        let h = four_cycle();
        let s = h.spectrum().unwrap();
        let e = Edge::new(0, 1);
        for n in 1..=4 {
            let f = s.vector(n);
            let alpha = f[1] / f[0];
            let cut = delete_edge_compensated(&h, f, e).unwrap();
            let m = cut.spectrum().unwrap().position_of(s.value(n), 1e-9).unwrap();
            let d = d_lambda_d_alpha(&h, e, m, alpha).unwrap();
            assert!(d.abs() < 1e-10, "n={n} d={d}");
        }
    }

    #[test]
    fn curvature_matches_second_difference() {
        let h = four_cycle();
        let e = Edge::new(0, 1);
        for m in 1..=4 {
            for alpha in [0.7, -1.3, 2.5] {
                let (exact, _) = d2_lambda_d_alpha2(&h, e, m, alpha).unwrap();
                let at = |a: f64| parametrized_hamiltonian(&h, e, a).unwrap().spectrum().unwrap().value(m);
                let t = 1e-4;
                let fd = (at(alpha + t) - 2.0 * at(alpha) + at(alpha - t)) / (t * t);
                assert!((exact - fd).abs() < 1e-4 * (1.0 + exact.abs()), "m={m} {exact} vs {fd}");
            }
        }
    }

    #[test]
    fn four_cycle_chains() {
        let h = four_cycle();
        let s = h.spectrum().unwrap();
        for n in 1..=4 {
            let chain = chain_to_spanning_tree(&h, &s, n).unwrap();
            assert_eq!(chain.records.len(), 1);
            assert!(chain.records[0].identity_holds());
            assert!(chain.records[0].sign_rule_holds());
            assert_eq!(chain.replay_nu(), chain.nu as i64);
            assert_eq!(chain.tree_nu, chain.m);
        }
    }

    #[test]
    fn tree_chain_is_empty() {
        let g = Graph::path(4);
        let h = Hamiltonian::new(&g, &Potential(vec![0.3, -0.1, 0.4, 0.2])).unwrap();
        let s = h.spectrum().unwrap();
        let chain = chain_to_spanning_tree(&h, &s, 3).unwrap();
        assert!(chain.records.is_empty());
        assert_eq!(chain.m, 3);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = alpha_grid(AlphaSign::Negative, (-1, 1), 2);
        assert_eq!(g.len(), 5);
        assert_abs_diff_eq!(g[0], -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[4], -10.0, epsilon = 1e-13);
    }
}
