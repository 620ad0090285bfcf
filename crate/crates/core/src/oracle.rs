//! Brute-force cross-checks. Nothing here reuses the main-path code for the
//! quantity it checks.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::equipartition::ManifoldChart;
use crate::exec::Execution;
use crate::graph::Graph;
use crate::{Error, Result};

/// Largest vertex count accepted by the exponential oracles.
pub const MAX_ORACLE_VERTICES: usize = 15;

/// Outcome of comparing an oracle with the main path on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub instance: String,
    pub agreement: bool,
    pub details: String,
}

/// `(ν, ζ, ℓ)` by labelling domains with breadth-first search and counting
/// cycles per domain as `E_k - V_k + 1`.
pub fn nodal_count_bruteforce(g: &Graph, f: &[f64]) -> Result<(usize, usize, usize)> {
    let n = g.vertex_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let max = f.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for (v, x) in f.iter().enumerate() {
        if x.abs() <= 1e-8 * max || x.is_nan() {
            return Err(Error::ZeroComponent { vertex: v });
        }
    }
    let positive: Vec<bool> = f.iter().map(|&x| x > 0.0).collect();
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.i].push(e.j);
        adj[e.j].push(e.i);
    }
    let mut label = vec![usize::MAX; n];
    let mut domains = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = domains;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if label[u] == usize::MAX && positive[u] == positive[v] {
                    label[u] = domains;
                    queue.push_back(u);
                }
            }
        }
        domains += 1;
    }
    let mut vertices = vec![0i64; domains];
    let mut inner = vec![0i64; domains];
    for v in 0..n {
        vertices[label[v]] += 1;
    }
    let mut zeta = 0;
    for e in g.edges() {
        if positive[e.i] != positive[e.j] {
            zeta += 1;
        } else {
            inner[label[e.i]] += 1;
        }
    }
    let ell: i64 = (0..domains).map(|k| inner[k] - vertices[k] + 1).sum();
    Ok((domains, zeta, ell as usize))
}

/// Smallest `k` with a proper `k`-colouring, by backtracking.
pub fn chromatic_number_bruteforce(g: &Graph) -> Result<usize> {
    let n = g.vertex_count();
    if n > MAX_ORACLE_VERTICES {
        return Err(Error::TooLarge {
            size: n,
            limit: MAX_ORACLE_VERTICES,
        });
    }
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.i].push(e.j);
        adj[e.j].push(e.i);
    }
    fn colour(v: usize, k: usize, adj: &[Vec<usize>], colours: &mut [usize]) -> bool {
        if v == adj.len() {
            return true;
        }
        // symmetry breaking: vertex v uses at most one new colour
        let used = colours[..v].iter().copied().max().map_or(0, |c| c + 1);
        for c in 0..k.min(used + 1) {
            if adj[v].iter().all(|&u| u >= v || colours[u] != c) {
                colours[v] = c;
                if colour(v + 1, k, adj, colours) {
                    return true;
                }
            }
        }
        false
    }
    let mut colours = vec![0; n];
    Ok((1..=n)
        .find(|&k| colour(0, k, &adj, &mut colours))
        .unwrap_or(n))
}

/// Local type of the chart center read off a ring of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanClass {
    Minimum,
    Maximum,
    Saddle,
    Undetermined,
}

impl ScanClass {
    /// Morse index implied by the class on an `η`-dimensional chart.
    pub fn index(self, eta: usize) -> Option<usize> {
        match self {
            ScanClass::Minimum => Some(0),
            ScanClass::Maximum => Some(eta),
            ScanClass::Saddle if eta == 2 => Some(1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub xi: Vec<f64>,
    /// `None` when the sample left the chart.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeScan {
    pub eta: usize,
    /// Requested radius in relative coordinates `ξ = ξ_c(1 + t)`.
    pub radius: f64,
    /// Radius of the ring that produced `class`, after any halving.
    pub ring_radius: f64,
    pub center_lambda: f64,
    pub grid: Vec<ScanSample>,
    /// `Λ - Λ_c` on a ring of directions around the center, antipodal
    /// directions `k` and `k + len/2`.
    pub ring: Vec<Option<f64>>,
    pub ascent_arcs: usize,
    pub descent_arcs: usize,
    /// Smallest and largest curvature of the even part of the ring,
    /// normalised so they estimate the extreme Hessian eigenvalues in `t`.
    pub curvature: Option<(f64, f64)>,
    pub skipped: usize,
    pub class: ScanClass,
}

/// Number of ring directions for two-dimensional charts.
pub const RING_DIRECTIONS: usize = 16;
/// Ring halvings tried when samples leave the chart or higher-order terms
/// still show.
pub const MAX_RING_HALVINGS: usize = 10;
/// Relative rounding floor of a single `Λ` evaluation.
const NOISE: f64 = 1e-13;

/// Samples `Λ` on a uniform grid of side `samples` over `t ∈ [-radius,
/// radius]^η`, with `ξ = ξ_c(1 + t)`, and classifies the center from rings
/// of directions around it.
///
/// The class comes from the even part `(d(u) + d(-u))/2` of the ring, which
/// cancels odd-order terms; for two coordinates its quadratic form is read
/// off by a discrete Fourier fit, so a narrow ascent or descent cone between
/// ring directions is still seen. A verdict is kept only if it holds on the
/// ring and on the ring of half the radius, the curvature scales
/// quadratically between the two and stands clear of rounding and of the fit
/// residual. Otherwise the ring is halved; a ring that never resolves gives
/// [`ScanClass::Undetermined`].
pub fn landscape_scan(chart: &ManifoldChart, radius: f64, samples: usize) -> Result<LandscapeScan> {
    landscape_scan_with(Execution::default(), chart, radius, samples)
}

pub fn landscape_scan_with(
    exec: Execution,
    chart: &ManifoldChart,
    radius: f64,
    samples: usize,
) -> Result<LandscapeScan> {
    let eta = chart.eta();
    if !(1..=2).contains(&eta) {
        return Err(Error::InvalidInput(format!(
            "landscape scans need a chart of dimension 1 or 2, got {eta}"
        )));
    }
    if !(radius > 0.0 && radius < 1.0) || samples < 2 {
        return Err(Error::InvalidInput(
            "scan radius must lie in (0, 1) and samples be at least 2".into(),
        ));
    }
    let center = chart.center_xi().to_vec();
    let center_lambda = chart.lambda(&center)?;
    let at = |t: &[f64]| -> Vec<f64> { center.iter().zip(t).map(|(c, t)| c * (1.0 + t)).collect() };
    let eval = |x: &Vec<f64>| -> Result<Option<f64>> {
        match chart.lambda(x) {
            Ok(l) => Ok(Some(l)),
            Err(Error::ChartLeft(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let axis: Vec<f64> = (0..samples)
        .map(|k| -radius + 2.0 * radius * k as f64 / (samples - 1) as f64)
        .collect();
    let points: Vec<Vec<f64>> = if eta == 1 {
        axis.iter().map(|&a| at(&[a])).collect()
    } else {
        axis.iter()
            .flat_map(|&a| axis.iter().map(move |&b| [a, b]))
            .map(|t| at(&t))
            .collect()
    };
    let grid_values = exec
        .map(&points, eval)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut skipped = grid_values.iter().filter(|v| v.is_none()).count();
    let grid = points
        .into_iter()
        .zip(grid_values)
        .map(|(xi, lambda)| ScanSample { xi, lambda })
        .collect();

    let directions: Vec<Vec<f64>> = if eta == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..RING_DIRECTIONS)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / RING_DIRECTIONS as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    };
    let ring_at = |rho: f64| -> Result<Vec<Option<f64>>> {
        let xs: Vec<Vec<f64>> = directions
            .iter()
            .map(|u| at(&u.iter().map(|x| rho * x).collect::<Vec<_>>()))
            .collect();
        Ok(exec
            .map(&xs, eval)
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .map(|v| v.map(|l| l - center_lambda))
            .collect())
    };
    let noise = NOISE * center_lambda.abs().max(1.0);

    let mut rho = radius;
    let mut outer = ring_at(rho)?;
    let mut class = ScanClass::Undetermined;
    let mut curvature = None;
    for _ in 0..MAX_RING_HALVINGS {
        let inner = ring_at(0.5 * rho)?;
        skipped += outer.iter().filter(|v| v.is_none()).count();
        let (Some(a), Some(b)) = (ring_fit(&outer), ring_fit(&inner)) else {
            rho *= 0.5;
            outer = inner;
            continue;
        };
        let scale = |f: RingFit, r: f64| (2.0 * f.lo / (r * r), 2.0 * f.hi / (r * r));
        let (lo_a, hi_a) = scale(a, rho);
        let (lo_b, hi_b) = scale(b, 0.5 * rho);
        curvature = Some((lo_b, hi_b));
        let quadratic = (lo_a - lo_b).abs() <= 0.25 * lo_b.abs() && (hi_a - hi_b).abs() <= 0.25 * hi_b.abs();
        let signal = b.lo.abs().min(b.hi.abs());
        if signal <= 10.0 * noise {
            // shrinking only sinks the signal further into rounding
            outer = inner;
            rho *= 0.5;
            break;
        }
        if quadratic && a.class() == b.class() && signal > 10.0 * b.residual {
            class = b.class();
            outer = inner;
            rho *= 0.5;
            break;
        }
        rho *= 0.5;
        outer = inner;
    }
    let (ascent_arcs, descent_arcs) = ring_arcs(&outer);
    Ok(LandscapeScan {
        eta,
        radius,
        ring_radius: rho,
        center_lambda,
        grid,
        ring: outer,
        ascent_arcs,
        descent_arcs,
        curvature,
        skipped,
        class,
    })
}

/// Extremes of the even part of a ring over all directions.
#[derive(Debug, Clone, Copy)]
struct RingFit {
    lo: f64,
    hi: f64,
    residual: f64,
}

impl RingFit {
    fn class(&self) -> ScanClass {
        if self.lo > 0.0 {
            ScanClass::Minimum
        } else if self.hi < 0.0 {
            ScanClass::Maximum
        } else {
            ScanClass::Saddle
        }
    }
}

fn ring_fit(ring: &[Option<f64>]) -> Option<RingFit> {
    let d: Vec<f64> = ring.iter().copied().collect::<Option<_>>()?;
    let half = d.len() / 2;
    let even: Vec<f64> = (0..half).map(|k| 0.5 * (d[k] + d[k + half])).collect();
    if half == 1 {
        return Some(RingFit {
            lo: even[0],
            hi: even[0],
            residual: 0.0,
        });
    }
    // even[k] sits at angle πk/half; a quadratic form there is
    // A + Bc cos 2θ + Bs sin 2θ
    let n = half as f64;
    let angle = |k: usize| 2.0 * std::f64::consts::PI * k as f64 / n;
    let a = even.iter().sum::<f64>() / n;
    let bc = 2.0 / n * (0..half).map(|k| even[k] * angle(k).cos()).sum::<f64>();
    let bs = 2.0 / n * (0..half).map(|k| even[k] * angle(k).sin()).sum::<f64>();
    let residual = (0..half)
        .map(|k| (even[k] - a - bc * angle(k).cos() - bs * angle(k).sin()).abs())
        .fold(0.0, f64::max);
    let b = bc.hypot(bs);
    Some(RingFit {
        lo: a - b,
        hi: a + b,
        residual,
    })
}

/// Maximal runs of positive and of negative values around the ring.
fn ring_arcs(ring: &[Option<f64>]) -> (usize, usize) {
    let Some(d) = ring.iter().copied().collect::<Option<Vec<f64>>>() else {
        return (0, 0);
    };
    let signs: Vec<bool> = d.iter().map(|&x| x > 0.0).collect();
    if signs.iter().all(|&s| s) {
        return (1, 0);
    }
    if signs.iter().all(|&s| !s) {
        return (0, 1);
    }
    let n = signs.len();
    let (mut up, mut down) = (0, 0);
    for k in (0..n).filter(|&k| signs[k] != signs[(k + n - 1) % n]) {
        if signs[k] {
            up += 1;
        } else {
            down += 1;
        }
    }
    (up, down)
}

impl LandscapeScan {
    /// Writes the grid as CSV: one column per coordinate, then `lambda`
    /// (empty for skipped samples).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.eta).map(|k| format!("xi{k}")).collect();
        header.push("lambda".into());
        w.write_record(&header).map_err(io_err)?;
        for s in &self.grid {
            let mut row: Vec<String> = s.xi.iter().map(|x| format!("{x:.15e}")).collect();
            row.push(s.lambda.map(|l| format!("{l:.15e}")).unwrap_or_default());
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equipartition::ChartRule;
    use crate::nodal::analyze_nodal;
    use crate::operator::{Hamiltonian, Potential};

    #[test]
    fn nodal_counts_on_four_cycle() {
        let c = Graph::cycle(4);
        assert_eq!(nodal_count_bruteforce(&c, &[1.0, -1.0, 1.0, -1.0]).unwrap(), (4, 4, 0));
        assert_eq!(nodal_count_bruteforce(&c, &[1.0; 4]).unwrap(), (1, 0, 1));
        assert!(matches!(
            nodal_count_bruteforce(&c, &[1.0, 0.0, 1.0, 1.0]),
            Err(Error::ZeroComponent { vertex: 1 })
        ));
    }

    #[test]
    fn nodal_counts_match_main_path() {
        let g = Graph::complete(5);
        let f = [0.3, -1.2, 0.7, 0.4, -0.1];
        let a = analyze_nodal(&g, &f).unwrap();
        assert_eq!(nodal_count_bruteforce(&g, &f).unwrap(), (a.nu, a.zeta, a.ell));
    }

    #[test]
    fn chromatic_numbers() {
        assert_eq!(chromatic_number_bruteforce(&Graph::cycle(4)).unwrap(), 2);
        assert_eq!(chromatic_number_bruteforce(&Graph::cycle(5)).unwrap(), 3);
        assert_eq!(chromatic_number_bruteforce(&Graph::complete(4)).unwrap(), 4);
        assert_eq!(chromatic_number_bruteforce(&Graph::path(1)).unwrap(), 1);
        assert!(matches!(
            chromatic_number_bruteforce(&Graph::path(16)),
            Err(Error::TooLarge { size: 16, limit: 15 })
        ));
    }

    #[test]
    fn ring_fit_sees_narrow_cones() {
        // d(θ) = cos²θ - 1e-4 sin²θ: descent only within ~0.01 rad of ±π/2,
        // which no ring direction hits except exactly π/2 itself
        let ring: Vec<Option<f64>> = (0..RING_DIRECTIONS)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.3) / RING_DIRECTIONS as f64;
                Some(t.cos().powi(2) - 1e-4 * t.sin().powi(2))
            })
            .collect();
        assert!(ring.iter().all(|d| d.unwrap() > 0.0));
        let fit = ring_fit(&ring).unwrap();
        assert!((fit.lo + 1e-4).abs() < 1e-12 && (fit.hi - 1.0).abs() < 1e-12);
        assert_eq!(fit.class(), ScanClass::Saddle);
        assert_eq!(ring_arcs(&ring), (1, 0));
        assert_eq!(ring_fit(&[Some(1.0), Some(2.0)]).unwrap().class(), ScanClass::Minimum);
        assert_eq!(ring_fit(&[Some(-1.0), Some(-0.5)]).unwrap().class(), ScanClass::Maximum);
        assert!(ring_fit(&[Some(-1.0), None]).is_none());
        let saddle: Vec<Option<f64>> = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0].map(Some).to_vec();
        assert_eq!(ring_arcs(&saddle), (2, 2));
    }

    #[test]
    fn four_cycle_scans() {
        let g = Graph::cycle(4);
        let h = Hamiltonian::new(&g, &Potential(vec![0.13, -0.41, 0.37, 0.05])).unwrap();
        let s = h.spectrum().unwrap();
        let chart = ManifoldChart::at_eigenvector(&h, &s, 4, ChartRule::LexFirst).unwrap();
        let scan = landscape_scan(&chart, 1e-2, 5).unwrap();
        assert_eq!(scan.grid.len(), 5);
        assert!(scan.class.index(1).is_some());
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("xi0,lambda\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
