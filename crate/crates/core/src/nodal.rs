//! Nodal domains, sign-flip edges and constant-sign cycles of a vector on a graph.

use serde::{Deserialize, Serialize};

use crate::dsu::UnionFind;
use crate::graph::{Graph, Partition};
use crate::operator::{Spectrum, COMP_TOL};
use crate::{Error, Result};

/// Nodal structure of a nowhere-vanishing vector.
#[derive(Debug, Clone)]
pub struct NodalAnalysis {
    pub signs: Vec<i8>,
    /// Number of nodal domains ν.
    pub nu: usize,
    /// Number of sign-flip edges ζ.
    pub zeta: usize,
    /// Independent cycles inside single nodal domains ℓ.
    pub ell: usize,
    pub partition: Partition,
    /// Spectral index when the vector is an eigenvector.
    pub n: Option<usize>,
}

impl NodalAnalysis {
    /// `ζ - β + ℓ + 1`, which must equal ν.
    pub fn identity_rhs(&self) -> i64 {
        let beta = self.partition.graph().betti() as i64;
        self.zeta as i64 - beta + self.ell as i64 + 1
    }
}

/// Rejects vectors with a component below `COMP_TOL · ‖f‖∞`.
pub(crate) fn check_nonvanishing(f: &[f64]) -> Result<()> {
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(v) = f.iter().position(|x| !(x.abs() > COMP_TOL * max)) {
        return Err(Error::ZeroComponent { vertex: v });
    }
    Ok(())
}

pub fn analyze_nodal(g: &Graph, f: &[f64]) -> Result<NodalAnalysis> {
    if f.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: f.len(),
        });
    }
    check_nonvanishing(f)?;
    let signs: Vec<i8> = f.iter().map(|&x| if x > 0.0 { 1 } else { -1 }).collect();
    let mut uf = UnionFind::new(g.vertex_count());
    let mut zeta = 0;
    let mut same_sign_edges = 0;
    for e in g.edges() {
        if signs[e.i] == signs[e.j] {
            uf.union(e.i, e.j);
            same_sign_edges += 1;
        } else {
            zeta += 1;
        }
    }
    let nu = uf.components();
    // Σ_k (E_k - V_k + 1) over the domains
    let ell = same_sign_edges + nu - g.vertex_count();
    let partition = Partition::from_labels(g, &uf.labels())?;
    let analysis = NodalAnalysis {
        signs,
        nu,
        zeta,
        ell,
        partition,
        n: None,
    };
    debug_assert_eq!(analysis.nu as i64, analysis.identity_rhs());
    Ok(analysis)
}

/// Nodal analysis of eigenvector `n` of `s`, requiring a non-degenerate pair.
pub fn analyze_eigenvector(g: &Graph, s: &Spectrum, n: usize) -> Result<NodalAnalysis> {
    s.require_nondegenerate(n)?;
    let mut a = analyze_nodal(g, s.vector(n))?;
    a.n = Some(n);
    Ok(a)
}

/// Nodal counts of eigenpair `n` together with the classical and sharpened
/// bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub nu: usize,
    pub zeta: usize,
    pub beta: usize,
    pub ell: usize,
    /// `n - β`
    pub lower_classic: i64,
    /// `n - (β - ℓ)`
    pub lower_sharp: i64,
    /// `n`
    pub upper: i64,
    /// `n - 1`
    pub zeta_lower: i64,
    /// `n + (β - ℓ) - 1`
    pub zeta_upper: i64,
    pub courant_sharp: bool,
    pub classic_holds: bool,
    pub sharp_holds: bool,
    pub zeta_holds: bool,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.classic_holds && self.sharp_holds && self.zeta_holds
    }
}

pub fn courant_bounds_report(g: &Graph, s: &Spectrum, n: usize) -> Result<BoundsReport> {
    let a = analyze_eigenvector(g, s, n)?;
    let (nu, zeta, ell) = (a.nu as i64, a.zeta as i64, a.ell as i64);
    let beta = g.betti() as i64;
    let n_i = n as i64;
    let lower_classic = n_i - beta;
    let lower_sharp = n_i - (beta - ell);
    let zeta_lower = n_i - 1;
    let zeta_upper = n_i + (beta - ell) - 1;
    Ok(BoundsReport {
        n,
        nu: a.nu,
        zeta: a.zeta,
        beta: g.betti(),
        ell: a.ell,
        lower_classic,
        lower_sharp,
        upper: n_i,
        zeta_lower,
        zeta_upper,
        courant_sharp: a.nu == n,
        classic_holds: lower_classic <= nu && nu <= n_i,
        sharp_holds: lower_sharp <= nu && nu <= n_i,
        zeta_holds: zeta_lower <= zeta && zeta <= zeta_upper,
    })
}

/// `n - ν_n`.
pub fn nodal_deficiency(g: &Graph, s: &Spectrum, n: usize) -> Result<usize> {
    let a = analyze_eigenvector(g, s, n)?;
    n.checked_sub(a.nu).ok_or_else(|| Error::DegenerateEigenpair {
        index: n,
        reason: format!("more nodal domains ({}) than the index", a.nu),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Hamiltonian, Potential};

    #[test]
    fn counts_on_small_graphs() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let a = analyze_nodal(&g, &[1.0, 1.0]).unwrap();
        assert_eq!((a.nu, a.zeta, a.ell), (1, 0, 0));

        let c = Graph::cycle(4);
        let a = analyze_nodal(&c, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!((a.nu, a.zeta, a.ell), (4, 4, 0));
        assert_eq!(a.identity_rhs(), 4);
        assert!(a.partition.multigraph().is_bipartite());

        let a = analyze_nodal(&c, &[1.0; 4]).unwrap();
        assert_eq!((a.nu, a.zeta, a.ell), (1, 0, 1));
        assert_eq!(a.identity_rhs(), 1);
    }

    #[test]
    fn zero_components_are_rejected() {
        let c = Graph::cycle(4);
        assert!(matches!(
            analyze_nodal(&c, &[1.0, 0.0, 1.0, -1.0]),
            Err(Error::ZeroComponent { vertex: 1 })
        ));
        assert!(matches!(
            analyze_nodal(&c, &[1.0, 1e-12, 1.0, -1.0]),
            Err(Error::ZeroComponent { vertex: 1 })
        ));
        assert!(matches!(
            analyze_nodal(&c, &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn four_cycle_bounds() {
        let c = Graph::cycle(4);
        let q = Potential(vec![0.1, 0.2, 0.3, 0.4]);
        let s = Hamiltonian::new(&c, &q).unwrap().spectrum().unwrap();
        let r = courant_bounds_report(&c, &s, 1).unwrap();
        assert_eq!(r.nu, 1);
        assert!(r.courant_sharp && r.all_hold());
        for n in 1..=4 {
            if let Ok(d) = nodal_deficiency(&c, &s, n) {
                assert!(d <= 1);
            }
        }
        assert_eq!(nodal_deficiency(&c, &s, 4).unwrap(), 0);
    }

    #[test]
    fn single_edge_deficiency() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let s = Hamiltonian::new(&g, &Potential::zeros(2))
            .unwrap()
            .spectrum()
            .unwrap();
        assert_eq!(nodal_deficiency(&g, &s, 2).unwrap(), 0);
        assert_eq!(analyze_eigenvector(&g, &s, 2).unwrap().n, Some(2));
    }

    #[test]
    fn degenerate_pairs_are_rejected() {
        let c = Graph::cycle(3);
        let s = Hamiltonian::new(&c, &Potential::zeros(3))
            .unwrap()
            .spectrum()
            .unwrap();
        assert!(matches!(
            courant_bounds_report(&c, &s, 2),
            Err(Error::DegenerateEigenpair { .. })
        ));
    }
}
