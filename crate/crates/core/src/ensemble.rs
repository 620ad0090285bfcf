//! Seeded random instances: connected simple graphs with uniform potentials.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::operator::Potential;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Tree,
    CyclePlusChords,
    ErdosRenyiConnected,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Tree => "tree",
            Family::CyclePlusChords => "cycle-plus-chords",
            Family::ErdosRenyiConnected => "erdos-renyi-connected",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(Family::Tree),
            "cycle-plus-chords" => Ok(Family::CyclePlusChords),
            "erdos-renyi-connected" => Ok(Family::ErdosRenyiConnected),
            other => Err(Error::InvalidInput(format!("unknown graph family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub family: Family,
    pub v_min: usize,
    pub v_max: usize,
    pub beta_cap: usize,
    /// Potentials are uniform on `[-scale, scale]`.
    pub potential_scale: f64,
    pub seed: u64,
    pub count: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            family: Family::ErdosRenyiConnected,
            v_min: 3,
            v_max: 10,
            beta_cap: 4,
            potential_scale: 1.0,
            seed: 0,
            count: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub index: usize,
    /// Seed of this instance's generator; reproduces it on its own.
    pub seed: u64,
    pub graph: Graph,
    pub potential: Potential,
}

/// splitmix64 finalizer, used to derive per-instance seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.v_min == 0 || self.v_min > self.v_max {
            return Err(Error::InvalidInput(format!(
                "invalid vertex range {}..={}",
                self.v_min, self.v_max
            )));
        }
        if self.family == Family::CyclePlusChords && self.v_min < 3 {
            return Err(Error::InvalidInput(
                "cycles need at least 3 vertices".into(),
            ));
        }
        if self.family == Family::CyclePlusChords && self.beta_cap == 0 {
            return Err(Error::InvalidInput("cycles need a Betti cap of at least 1".into()));
        }
        if !(self.potential_scale >= 0.0) || !self.potential_scale.is_finite() {
            return Err(Error::InvalidInput("potential scale must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn instance(&self, index: usize) -> Result<Instance> {
        self.validate()?;
        let seed = mix_seed(self.seed, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = rng.gen_range(self.v_min..=self.v_max);
        let edges = match self.family {
            Family::Tree => random_tree(&mut rng, v),
            Family::CyclePlusChords => cycle_plus_chords(&mut rng, v, self.beta_cap),
            Family::ErdosRenyiConnected => erdos_renyi_connected(&mut rng, v, self.beta_cap),
        };
        let graph = Graph::new(v, &edges)?;
        let s = self.potential_scale;
        let potential = Potential(
            (0..v)
                .map(|_| if s > 0.0 { rng.gen_range(-s..=s) } else { 0.0 })
                .collect(),
        );
        Ok(Instance {
            index,
            seed,
            graph,
            potential,
        })
    }

    pub fn instances(&self) -> Result<Vec<Instance>> {
        (0..self.count).map(|k| self.instance(k)).collect()
    }
}

/// Uniform random recursive tree on a random labelling.
fn random_tree(rng: &mut ChaCha8Rng, v: usize) -> Vec<(usize, usize)> {
    let mut labels: Vec<usize> = (0..v).collect();
    labels.shuffle(rng);
    (1..v)
        .map(|k| {
            let parent = rng.gen_range(0..k);
            (labels[parent], labels[k])
        })
        .collect()
}

fn non_edges(v: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut present = vec![false; v * v];
    for &(a, b) in edges {
        present[a * v + b] = true;
        present[b * v + a] = true;
    }
    let mut out = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            if !present[a * v + b] {
                out.push((a, b));
            }
        }
    }
    out
}

fn cycle_plus_chords(rng: &mut ChaCha8Rng, v: usize, beta_cap: usize) -> Vec<(usize, usize)> {
    let mut labels: Vec<usize> = (0..v).collect();
    labels.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..v).map(|k| (labels[k], labels[(k + 1) % v])).collect();
    let mut candidates = non_edges(v, &edges);
    candidates.shuffle(rng);
    let chords = rng.gen_range(0..beta_cap).min(candidates.len());
    edges.extend(candidates.into_iter().take(chords));
    edges
}

/// `G(V, p)` conditioned on being connected with `β ≤ beta_cap`; `p` targets
/// roughly `V - 1 + beta_cap / 2` edges. Falls back to a random tree plus
/// chords if rejection sampling keeps failing.
fn erdos_renyi_connected(rng: &mut ChaCha8Rng, v: usize, beta_cap: usize) -> Vec<(usize, usize)> {
    if v == 1 {
        return Vec::new();
    }
    let pairs = v * (v - 1) / 2;
    let target = (v - 1) as f64 + beta_cap as f64 / 2.0;
    let p = (target / pairs as f64).min(1.0);
    for _ in 0..10_000 {
        let mut edges = Vec::new();
        for a in 0..v {
            for b in a + 1..v {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        if edges.len() + 1 < v || edges.len() + 1 - v > beta_cap {
            continue;
        }
        if connected(v, &edges) {
            return edges;
        }
    }
    let mut edges = random_tree(rng, v);
    let mut candidates = non_edges(v, &edges);
    candidates.shuffle(rng);
    let extra = rng.gen_range(0..=beta_cap).min(candidates.len());
    edges.extend(candidates.into_iter().take(extra));
    edges
}

fn connected(v: usize, edges: &[(usize, usize)]) -> bool {
    let mut uf = crate::dsu::UnionFind::new(v);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    uf.components() == 1
}
