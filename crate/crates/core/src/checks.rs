//! Per-instance verification drivers. Every check turns one ensemble
//! instance into rows of pass / fail / skip verdicts with a numeric metric.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{mix_seed, Instance};
use crate::equipartition::{
    find_tree_equipartitions, induced_equipartition, lagrange_certificate,
    tree_equipartition_eigenvector, EquipartitionSearch,
};
use crate::exec::Execution;
use crate::graph::{Edge, Partition};
use crate::morse::verify_morse_theorem_with;
use crate::nodal::{analyze_eigenvector, analyze_nodal, courant_bounds_report};
use crate::operator::{Hamiltonian, Spectrum};
use crate::oracle::{chromatic_number_bruteforce, nodal_count_bruteforce, MAX_ORACLE_VERTICES};
use crate::surgery::{
    chain_to_spanning_tree, delete_edge_compensated, find_critical_alpha, interlacing_slack,
    parametrized_hamiltonian, AlphaSign, POSITION_TOL,
};
use crate::{Error, Result};

/// Residual bound relative to `‖H‖∞` for eigen-equations.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative agreement required between a located and an exact critical `α`.
pub const ALPHA_TOL: f64 = 1e-8;
/// Smallest interlacing slack accepted.
pub const SLACK_TOL: f64 = -1e-10;
/// Bound on Lagrange residuals.
pub const LAGRANGE_TOL: f64 = 1e-10;
/// Bound on the reconstruction error of the eigenvector from multipliers.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Iru,
    Bounds,
    Interlace,
    Surgery,
    TreeEqui,
    Lagrange,
    Morse,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Iru,
        Check::Bounds,
        Check::Interlace,
        Check::Surgery,
        Check::TreeEqui,
        Check::Lagrange,
        Check::Morse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Iru => "iru",
            Check::Bounds => "bounds",
            Check::Interlace => "interlace",
            Check::Surgery => "surgery",
            Check::TreeEqui => "tree-equi",
            Check::Lagrange => "lagrange",
            Check::Morse => "morse",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown check '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Not applicable or numerically degenerate; `detail` says why.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub instance: usize,
    pub seed: u64,
    pub check: Check,
    pub n: Option<usize>,
    pub status: Status,
    pub metric: Option<f64>,
    pub detail: String,
}

struct Rows<'a> {
    inst: &'a Instance,
    check: Check,
    rows: Vec<CheckRow>,
}

impl<'a> Rows<'a> {
    fn new(inst: &'a Instance, check: Check) -> Self {
        Rows {
            inst,
            check,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, n: Option<usize>, status: Status, metric: Option<f64>, detail: impl Into<String>) {
        self.rows.push(CheckRow {
            instance: self.inst.index,
            seed: self.inst.seed,
            check: self.check,
            n,
            status,
            metric,
            detail: detail.into(),
        });
    }

    fn verdict(&mut self, n: Option<usize>, ok: bool, metric: Option<f64>, detail: impl Into<String>) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.push(n, status, metric, detail);
    }

    /// Numerical failures become skips, anything else a failure.
    fn error(&mut self, n: Option<usize>, e: &Error) {
        let status = if e.is_numerical() { Status::Skip } else { Status::Fail };
        self.push(n, status, None, e.to_string());
    }
}

/// Runs one check on one instance.
pub fn run_check(check: Check, inst: &Instance, exec: Execution) -> Vec<CheckRow> {
    let mut rows = Rows::new(inst, check);
    let setup = Hamiltonian::new(&inst.graph, &inst.potential).and_then(|h| {
        let s = h.spectrum()?;
        Ok((h, s))
    });
    let (h, s) = match setup {
        Ok(x) => x,
        Err(e) => {
            rows.error(None, &e);
            return rows.rows;
        }
    };
    match check {
        Check::Iru => check_iru(&mut rows, &h, &s),
        Check::Bounds => check_bounds(&mut rows, &h, &s),
        Check::Interlace => check_interlace(&mut rows, &h, &s),
        Check::Surgery => check_surgery(&mut rows, &h, &s),
        Check::TreeEqui => check_tree_equi(&mut rows, &h, &s),
        Check::Lagrange => check_lagrange(&mut rows, &h, &s),
        Check::Morse => check_morse(&mut rows, &h, &s, exec),
    }
    rows.rows
}

/// Nowhere-vanishing random vector with entries of magnitude in `[0.1, 1]`.
pub fn random_signed_vector(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let x: f64 = rng.gen_range(0.1..=1.0);
            if rng.gen_bool(0.5) {
                x
            } else {
                -x
            }
        })
        .collect()
}

fn check_iru(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum) {
    let g = h.graph();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rows.inst.seed, 1));
    let mut vectors = vec![(None, random_signed_vector(&mut rng, g.vertex_count()))];
    for n in 1..=s.len() {
        if s.require_nondegenerate(n).is_ok() {
            vectors.push((Some(n), s.vector(n).to_vec()));
        }
    }
    for (n, f) in vectors {
        match analyze_nodal(g, &f) {
            Ok(a) => {
                let brute = nodal_count_bruteforce(g, &f).ok();
                let ok = a.nu as i64 == a.identity_rhs() && brute == Some((a.nu, a.zeta, a.ell));
                rows.verdict(
                    n,
                    ok,
                    Some((a.nu as i64 - a.identity_rhs()) as f64),
                    format!(
                        "nu={} zeta={} beta={} ell={} oracle={brute:?}",
                        a.nu,
                        a.zeta,
                        g.betti(),
                        a.ell
                    ),
                );
            }
            Err(e) => rows.error(n, &e),
        }
    }
}

fn check_bounds(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum) {
    let g = h.graph();
    let chi = if g.vertex_count() <= MAX_ORACLE_VERTICES {
        chromatic_number_bruteforce(g).ok()
    } else {
        None
    };
    for n in 1..=s.len() {
        match courant_bounds_report(g, s, n) {
            Ok(r) => {
                let chromatic = chi.map_or(true, |c| r.nu + c <= g.vertex_count() + 2);
                let fiedler = !g.is_tree() || r.courant_sharp;
                rows.verdict(
                    Some(n),
                    r.all_hold() && chromatic && fiedler,
                    Some(r.nu as f64),
                    format!(
                        "nu={} zeta={} beta={} ell={} chi={chi:?}",
                        r.nu, r.zeta, r.beta, r.ell
                    ),
                );
            }
            Err(e) => rows.error(Some(n), &e),
        }
    }
}

/// Log-spaced `α` values of both signs used by the interlacing check.
pub fn interlace_grid() -> Vec<f64> {
    let mut grid = Vec::new();
    for k in -8..=8 {
        let a = 10f64.powf(k as f64 / 4.0);
        grid.push(a);
        grid.push(-a);
    }
    grid
}

fn check_interlace(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum) {
    let g = h.graph();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rows.inst.seed, 2));
    let Some(&edge) = g.edges().choose(&mut rng) else {
        rows.push(None, Status::Skip, None, "graph has no edges");
        return;
    };
    let mut worst = f64::INFINITY;
    for alpha in interlace_grid() {
        match parametrized_hamiltonian(h, edge, alpha).and_then(|hp| hp.spectrum()) {
            Ok(sp) => worst = worst.min(interlacing_slack(s, &sp, alpha) / s.scale().max(1.0)),
            Err(e) => {
                rows.error(None, &e);
                return;
            }
        }
    }
    rows.verdict(None, worst >= SLACK_TOL, Some(worst), format!("edge {edge}"));
}

fn check_surgery(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum) {
    let g = h.graph();
    let norm = h.norm_inf().max(1.0);
    for n in 1..=s.len() {
        if let Err(e) = s.require_nondegenerate(n) {
            rows.error(Some(n), &e);
            continue;
        }
        let f = s.vector(n);
        for &edge in g.edges().iter().filter(|&&e| !g.is_bridge(e)) {
            match surgery_round_trip(h, s, n, edge) {
                Ok(detail) => {
                    let ok = detail.residual < RESIDUAL_TOL * norm && detail.alpha_error <= ALPHA_TOL;
                    rows.verdict(
                        Some(n),
                        ok,
                        Some(detail.alpha_error),
                        format!(
                            "edge {edge} alpha_c={} residual={:e} m={} position={}",
                            f[edge.j] / f[edge.i],
                            detail.residual,
                            detail.m,
                            detail.position
                        ),
                    );
                }
                Err(e) => rows.error(Some(n), &e),
            }
        }
        match chain_to_spanning_tree(h, s, n) {
            Ok(chain) => {
                let identities = chain.records.iter().all(|r| r.identity_holds() && r.sign_rule_holds());
                let replay = chain.replay_nu() == chain.nu as i64;
                rows.verdict(
                    Some(n),
                    identities && replay,
                    Some(chain.sum_m() as f64),
                    format!(
                        "chain of {} steps, sum M={}, replay nu={} (nu={})",
                        chain.records.len(),
                        chain.sum_m(),
                        chain.replay_nu(),
                        chain.nu
                    ),
                );
            }
            Err(e) => rows.error(Some(n), &e),
        }
    }
}

/// Outcome of deleting one edge with compensation and locating the critical
/// point of the corresponding branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    pub residual: f64,
    /// Relative error `|α - α_c| / |α_c|` of the closest located root.
    pub alpha_error: f64,
    /// Branch followed in `σ(G')`.
    pub m: usize,
    /// Position of the root's eigenvalue in `σ(G)`.
    pub position: usize,
}

/// Compensated deletion of `edge` for eigenpair `n`, followed by the
/// critical-point search on the branch that carries `λ_n` in `σ(G')`.
pub fn surgery_round_trip(h: &Hamiltonian, s: &Spectrum, n: usize, edge: Edge) -> Result<RoundTrip> {
    let f = s.vector(n);
    let lambda = s.value(n);
    let hp = delete_edge_compensated(h, f, edge)?;
    let residual = hp.residual(f, lambda);
    let sp = hp.spectrum()?;
    let m = sp
        .position_of(lambda, POSITION_TOL * sp.scale())
        .ok_or_else(|| Error::DegenerateData {
            edge,
            reason: "eigenvalue lost after deletion".into(),
        })?;
    let alpha_c = f[edge.j] / f[edge.i];
    let roots = find_critical_alpha(h, edge, m, AlphaSign::of(alpha_c))?;
    let best = roots
        .iter()
        .min_by(|a, b| (a.alpha - alpha_c).abs().total_cmp(&(b.alpha - alpha_c).abs()))
        .expect("non-empty root list");
    let alpha_error = (best.alpha - alpha_c).abs() / alpha_c.abs();
    let lambda_ok = (best.lambda - lambda).abs() <= POSITION_TOL * s.scale();
    let position = if lambda_ok { best.position } else { usize::MAX };
    if position.abs_diff(m) > 1 {
        return Err(Error::DegenerateData {
            edge,
            reason: format!("located root has eigenvalue {} instead of {lambda}", best.lambda),
        });
    }
    Ok(RoundTrip {
        residual,
        alpha_error,
        m,
        position,
    })
}

/// Tree partitions used by the tree-equipartition check: nodal partitions
/// of eigenvectors with `η = 0`, plus partitions obtained by cutting random
/// spanning-tree edges whenever the result is a tree partition.
pub fn tree_partitions(h: &Hamiltonian, s: &Spectrum, rng: &mut impl Rng) -> Vec<Partition> {
    let g = h.graph();
    let mut out: Vec<Partition> = Vec::new();
    for n in 2..=s.len() {
        if let Ok(a) = analyze_eigenvector(g, s, n) {
            if a.partition.multigraph().is_tree() && !out.contains(&a.partition) {
                out.push(a.partition);
            }
        }
    }
    let tree = g.spanning_tree();
    for _ in 0..4 {
        if tree.is_empty() {
            break;
        }
        let cuts = rng.gen_range(1..=tree.len().min(3));
        let mut uf = crate::dsu::UnionFind::new(g.vertex_count());
        let mut keep = tree.clone();
        keep.shuffle(rng);
        for e in &keep[cuts..] {
            uf.union(e.i, e.j);
        }
        let Ok(p) = Partition::from_labels(g, &uf.labels()) else {
            continue;
        };
        if p.multigraph().is_tree() && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn check_tree_equi(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rows.inst.seed, 3));
    let norm = h.norm_inf().max(1.0);
    let partitions = tree_partitions(h, s, &mut rng);
    if partitions.is_empty() {
        rows.push(None, Status::Skip, None, "no tree partition");
        return;
    }
    for p in partitions {
        let search = EquipartitionSearch {
            seed: rng.gen(),
            ..Default::default()
        };
        let found = match find_tree_equipartitions(h, &p, &search) {
            Ok(f) => f,
            Err(e) => {
                rows.error(Some(p.nu()), &e);
                continue;
            }
        };
        if found.is_empty() {
            rows.push(Some(p.nu()), Status::Skip, None, "no equipartition found");
            continue;
        }
        if found.len() > 1 {
            rows.verdict(
                Some(p.nu()),
                false,
                Some(found.len() as f64),
                format!("{} distinct equipartitions", found.len()),
            );
            continue;
        }
        match tree_equipartition_eigenvector(&p, &found[0]) {
            Ok((f, position)) => {
                let residual = h.residual(&f, found[0].lambda);
                let nodal = analyze_nodal(h.graph(), &f).map(|a| a.partition == p).unwrap_or(false);
                rows.verdict(
                    Some(position),
                    residual < RESIDUAL_TOL * norm && position == p.nu() && nodal,
                    Some(residual / norm),
                    format!("nu={} position={position} lambda={}", p.nu(), found[0].lambda),
                );
            }
            Err(e) => rows.error(Some(p.nu()), &e),
        }
    }
}

fn check_lagrange(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum) {
    for n in 1..=s.len() {
        match lagrange_certificate(h, s, n) {
            Ok(c) => rows.verdict(
                Some(n),
                c.max_residual < LAGRANGE_TOL
                    && c.reconstruction_error < RECONSTRUCTION_TOL
                    && c.c.iter().all(|&x| x > 0.0),
                Some(c.max_residual),
                format!(
                    "domains={} reconstruction={:e}",
                    c.c.len(),
                    c.reconstruction_error
                ),
            ),
            Err(e) => rows.error(Some(n), &e),
        }
    }
}

fn check_morse(rows: &mut Rows, h: &Hamiltonian, s: &Spectrum, exec: Execution) {
    for n in 1..=s.len() {
        if let Err(e) = induced_equipartition(h, s, n) {
            rows.error(Some(n), &e);
            continue;
        }
        match verify_morse_theorem_with(exec, h.graph(), h.potential(), n) {
            Ok(r) => rows.verdict(
                Some(n),
                r.agreement,
                Some(r.index_hessian as f64),
                format!(
                    "eta={} deficiency={} hessian={:?} difference index={:?}",
                    r.eta, r.deficiency, r.hessian_eigenvalues, r.fd_index
                ),
            ),
            Err(Error::Disagreement(r)) => rows.verdict(
                Some(n),
                false,
                Some(r.index_hessian as f64),
                format!(
                    "eta={} deficiency={} hessian index={} sequential index={} eigenvalues={:?}",
                    r.eta, r.deficiency, r.index_hessian, r.index_sequential, r.hessian_eigenvalues
                ),
            ),
            Err(e @ Error::DegenerateHessian(_)) => rows.push(Some(n), Status::Skip, None, e.to_string()),
            Err(e) => rows.error(Some(n), &e),
        }
    }
}

/// Tally of a set of rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
}

impl Summary {
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a CheckRow>) -> Self {
        let mut s = Summary::default();
        for r in rows {
            s.rows += 1;
            match r.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Skip => s.skip += 1,
            }
        }
        s
    }

    pub fn passed(&self) -> bool {
        self.fail == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleConfig, Family};

    fn instances(family: Family, count: usize) -> Vec<Instance> {
        EnsembleConfig {
            family,
            v_min: 3,
            v_max: 7,
            beta_cap: 2,
            seed: 11,
            count,
            ..Default::default()
        }
        .instances()
        .unwrap()
    }

    #[test]
    fn every_check_passes_on_a_small_ensemble() {
        for inst in instances(Family::ErdosRenyiConnected, 4) {
            for check in Check::ALL {
                let rows = run_check(check, &inst, Execution::Sequential);
                assert!(!rows.is_empty());
                for r in &rows {
                    assert_ne!(r.status, Status::Fail, "{r:?}");
                }
            }
        }
    }

    #[test]
    fn trees_are_courant_sharp() {
        for inst in instances(Family::Tree, 5) {
            let rows = run_check(Check::Bounds, &inst, Execution::Sequential);
            assert!(rows.iter().all(|r| r.status != Status::Fail));
        }
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        let rows = [CheckRow {
            instance: 0,
            seed: 0,
            check: Check::Iru,
            n: None,
            status: Status::Skip,
            metric: None,
            detail: String::new(),
        }];
        let s = Summary::of(&rows);
        assert_eq!((s.rows, s.skip), (1, 1));
        assert!(s.passed());
    }
}
