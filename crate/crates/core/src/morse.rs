//! Morse index of the equipartition energy at a critical point, computed
//! from the Hessian on a chart and, independently, from the extremum types
//! met while re-adding the chart edges one at a time.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::equipartition::{ChartRule, ManifoldChart};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::nodal::nodal_deficiency;
use crate::operator::{symmetric_eigen, Hamiltonian, Potential, Spectrum};
use crate::surgery::{bookkeeping, BookkeepingRecord, SurgeryStep};
use crate::{Error, Result};

/// Relative finite-difference step per chart coordinate.
pub const FD_STEP: f64 = 1e-4;
/// Largest admissible absolute gradient component at a critical point.
pub const GRAD_TOL: f64 = 1e-7;
/// Hessian eigenvalues below `HESS_TOL · ‖Hess‖` in magnitude are degenerate.
pub const HESS_TOL: f64 = 1e-6;
/// Step halvings tried when a stencil point leaves the chart.
pub const MAX_HALVINGS: usize = 4;

/// Hessian of `Λ` at the chart center in the relative coordinates
/// `ξ_k = ξ̃_k (1 + t_k)`.
///
/// The index is read off the exact second-order perturbation Hessian. A
/// Richardson-extrapolated central-difference Hessian is computed alongside
/// as an independent check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianIndex {
    pub index: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// Exact gradient with respect to `ξ` at the center.
    pub gradient: Vec<f64>,
    pub fd: Option<FdHessian>,
    /// Why the difference Hessian is missing.
    pub fd_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdHessian {
    pub index: usize,
    pub eigenvalues: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// Central-difference gradient in relative coordinates.
    pub gradient: Vec<f64>,
    /// Relative step of the coarser stencil.
    pub step: f64,
    pub halvings: usize,
}

impl HessianIndex {
    /// Whether both Hessians have the same number of negative eigenvalues.
    pub fn fd_agrees(&self) -> Option<bool> {
        self.fd.as_ref().map(|f| f.index == self.index)
    }
}

/// Index from the edge re-addition chain `G_ξ → G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialIndex {
    pub index: usize,
    /// Position of the eigenvalue in `σ(G_ξ)`.
    pub start_position: usize,
    /// Position in `σ(G)` after all edges are back.
    pub end_position: usize,
    pub records: Vec<BookkeepingRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub n: usize,
    pub nu: usize,
    pub deficiency: usize,
    pub eta: usize,
    pub index_hessian: usize,
    pub index_sequential: usize,
    pub hessian_eigenvalues: Vec<f64>,
    /// Index of the difference Hessian, when it could be computed.
    pub fd_index: Option<usize>,
    pub gradient_norm: f64,
    pub records: Vec<BookkeepingRecord>,
    pub agreement: bool,
}

impl std::fmt::Display for MorseReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "n={} nu={} deficiency={} eta={} hessian index={} difference index={:?} sequential index={} hessian eigenvalues={:?}",
            self.n,
            self.nu,
            self.deficiency,
            self.eta,
            self.index_hessian,
            self.fd_index,
            self.index_sequential,
            self.hessian_eigenvalues
        )
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Central differences of `Λ` in relative coordinates with step `t`:
/// `(Hessian, gradient)`.
fn stencil(exec: Execution, chart: &ManifoldChart, t: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let center = chart.center_xi();
    let eta = center.len();
    let at = |offsets: &[(usize, f64)]| {
        let mut x = center.to_vec();
        for &(k, d) in offsets {
            x[k] *= 1.0 + d;
        }
        x
    };
    // points: center, ±t e_k, then (±t, ±t) for k < l
    let mut points: Vec<Vec<f64>> = vec![at(&[])];
    for k in 0..eta {
        points.push(at(&[(k, t)]));
        points.push(at(&[(k, -t)]));
    }
    let mut pairs = Vec::new();
    for k in 0..eta {
        for l in k + 1..eta {
            pairs.push((k, l));
            for (sk, sl) in [(t, t), (t, -t), (-t, t), (-t, -t)] {
                points.push(at(&[(k, sk), (l, sl)]));
            }
        }
    }
    let values = exec
        .map(&points, |x| chart.lambda(x))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let f0 = values[0];
    let mut hess = DMatrix::zeros(eta, eta);
    let mut grad = vec![0.0; eta];
    for k in 0..eta {
        let (fp, fm) = (values[1 + 2 * k], values[2 + 2 * k]);
        grad[k] = (fp - fm) / (2.0 * t);
        hess[(k, k)] = (fp - 2.0 * f0 + fm) / (t * t);
    }
    for (p, &(k, l)) in pairs.iter().enumerate() {
        let base = 1 + 2 * eta + 4 * p;
        let v = &values[base..base + 4];
        let mixed = (v[0] - v[1] - v[2] + v[3]) / (4.0 * t * t);
        hess[(k, l)] = mixed;
        hess[(l, k)] = mixed;
    }
    Ok((hess, grad))
}

/// Richardson-extrapolated difference Hessian, halving the step when a
/// stencil point leaves the chart.
pub fn fd_hessian(exec: Execution, chart: &ManifoldChart) -> Result<FdHessian> {
    let mut step = FD_STEP;
    let mut halvings = 0;
    loop {
        let coarse = stencil(exec, chart, step);
        let fine = coarse.and_then(|c| Ok((c, stencil(exec, chart, 0.5 * step)?)));
        match fine {
            Ok(((hc, _), (hf, grad))) => {
                let hess = (&hf * 4.0 - &hc) / 3.0;
                let eigenvalues = symmetric_eigen(&hess)?.values().to_vec();
                return Ok(FdHessian {
                    index: eigenvalues.iter().filter(|&&x| x < 0.0).count(),
                    eigenvalues,
                    hessian: rows(&hess),
                    gradient: grad,
                    step,
                    halvings,
                });
            }
            Err(Error::ChartLeft(_)) if halvings < MAX_HALVINGS => {
                halvings += 1;
                step *= 0.5;
            }
            Err(Error::ChartLeft(reason)) => {
                return Err(Error::ChartLeft(format!(
                    "stencil still leaves the chart after {MAX_HALVINGS} halvings: {reason}"
                )))
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn morse_index_hessian(chart: &ManifoldChart) -> Result<HessianIndex> {
    morse_index_hessian_with(Execution::default(), chart)
}

/// Counts the negative eigenvalues of the Hessian of `Λ` at the chart
/// center. Eigenvalues within `HESS_TOL · ‖Hess‖` of zero make the critical
/// point degenerate.
pub fn morse_index_hessian_with(exec: Execution, chart: &ManifoldChart) -> Result<HessianIndex> {
    let center = chart.center_xi();
    let gradient = chart.gradient(center)?;
    if let Some(&g) = gradient.iter().find(|g| !(g.abs() <= GRAD_TOL)) {
        return Err(Error::NotCritical(g));
    }
    if center.is_empty() {
        return Ok(HessianIndex {
            index: 0,
            eigenvalues: Vec::new(),
            hessian: Vec::new(),
            gradient,
            fd: None,
            fd_note: Some("zero-dimensional chart".into()),
        });
    }
    let eta = center.len();
    let exact = chart.hessian(center)?;
    let scaled = DMatrix::from_fn(eta, eta, |a, b| exact[(a, b)] * center[a].abs() * center[b].abs());
    let eigenvalues = symmetric_eigen(&scaled)?.values().to_vec();
    let norm = eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tol = HESS_TOL * norm;
    if norm == 0.0 || eigenvalues.iter().any(|x| x.abs() <= tol) {
        return Err(Error::DegenerateHessian(eigenvalues));
    }
    let (fd, fd_note) = match fd_hessian(exec, chart) {
        Ok(fd) => (Some(fd), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(HessianIndex {
        index: eigenvalues.iter().filter(|&&x| x < -tol).count(),
        eigenvalues,
        hessian: rows(&scaled),
        gradient,
        fd,
        fd_note,
    })
}

/// Re-adds the chart edges to `G_ξ` in the given order (indices into
/// [`ManifoldChart::x_edges`]), summing the maximum indicator of every step.
pub fn sequential_index_for_chart(chart: &ManifoldChart, order: &[usize]) -> Result<SequentialIndex> {
    let x = chart.x_edges();
    let xi = chart.center_xi();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..x.len()).collect::<Vec<_>>() {
        return Err(Error::InvalidInput(format!(
            "order {order:?} is not a permutation of the {} chart edges",
            x.len()
        )));
    }
    let mut remaining: Vec<usize> = (0..x.len()).collect();
    let steps_for = |idx: &[usize]| -> Vec<SurgeryStep> {
        idx.iter()
            .map(|&k| SurgeryStep {
                edge: x[k],
                alpha: xi[k],
            })
            .collect()
    };
    let mut current = chart.base().with_steps(&steps_for(&remaining))?;
    let spec = current.spectrum()?;
    let start = spec
        .position_of(chart.center().lambda, crate::surgery::POSITION_TOL * spec.scale())
        .ok_or_else(|| Error::IntermediateDegeneracy {
            step: 0,
            edge: x.first().copied().unwrap_or(crate::graph::Edge::new(0, 0)),
            reason: "energy is not an eigenvalue of the chart operator".into(),
        })?;
    let mut position = start;
    let mut records = Vec::with_capacity(x.len());
    for (step, &k) in order.iter().enumerate() {
        remaining.retain(|&r| r != k);
        let next = chart.base().with_steps(&steps_for(&remaining))?;
        let wrap = |e: Error| Error::IntermediateDegeneracy {
            step,
            edge: x[k],
            reason: e.to_string(),
        };
        let record = bookkeeping(&next, &current, x[k], xi[k]).map_err(wrap)?;
        if record.m != position {
            return Err(Error::IntermediateDegeneracy {
                step,
                edge: x[k],
                reason: format!("expected position {position}, found {}", record.m),
            });
        }
        position = record.n;
        records.push(record);
        current = next;
    }
    Ok(SequentialIndex {
        index: records.iter().map(|r| r.big_m as usize).sum(),
        start_position: start,
        end_position: position,
        records,
    })
}

/// Sequential index of eigenpair `n` along the lexicographic chart, edges
/// re-added in ascending order.
pub fn morse_index_sequential(h: &Hamiltonian, s: &Spectrum, n: usize) -> Result<SequentialIndex> {
    let chart = ManifoldChart::at_eigenvector(h, s, n, ChartRule::LexFirst)?;
    let order: Vec<usize> = (0..chart.eta()).collect();
    sequential_index_for_chart(&chart, &order)
}

pub fn verify_morse_theorem(g: &Graph, q: &Potential, n: usize) -> Result<MorseReport> {
    verify_morse_theorem_with(Execution::default(), g, q, n)
}

/// Runs both index computations for eigenpair `n` and compares them with the
/// nodal deficiency.
pub fn verify_morse_theorem_with(
    exec: Execution,
    g: &Graph,
    q: &Potential,
    n: usize,
) -> Result<MorseReport> {
    let h = Hamiltonian::new(g, q)?;
    let s = h.spectrum()?;
    let deficiency = nodal_deficiency(g, &s, n)?;
    let chart = ManifoldChart::at_eigenvector(&h, &s, n, ChartRule::LexFirst)?;
    let hess = morse_index_hessian_with(exec, &chart)?;
    let order: Vec<usize> = (0..chart.eta()).collect();
    let seq = sequential_index_for_chart(&chart, &order)?;
    let agreement = hess.index == deficiency && seq.index == deficiency && seq.end_position == n;
    let report = MorseReport {
        n,
        nu: n - deficiency,
        deficiency,
        eta: chart.eta(),
        index_hessian: hess.index,
        index_sequential: seq.index,
        fd_index: hess.fd.as_ref().map(|f| f.index),
        hessian_eigenvalues: hess.eigenvalues,
        gradient_norm: hess.gradient.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        records: seq.records,
        agreement,
    };
    if !agreement {
        return Err(Error::Disagreement(Box::new(report)));
    }
    Ok(report)
}
