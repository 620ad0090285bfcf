//! Graph files and number formatting.
//!
//! ```json
//! {"vertices": 3, "edges": [[0, 1], [1, 2, 0.5]], "potential": [0.1, 0.0, -0.2]}
//! ```
//! Edge weights and the potential are optional (defaults 1.0 and zeros).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::operator::Potential;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Plain([usize; 2]),
    Weighted(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("graph JSON: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_graph(g: &Graph, q: &Potential) -> Self {
        let weighted = g.is_weighted();
        let edges = g
            .edges()
            .iter()
            .zip(g.weights())
            .map(|(e, &w)| {
                if weighted {
                    EdgeSpec::Weighted(e.i, e.j, w)
                } else {
                    EdgeSpec::Plain([e.i, e.j])
                }
            })
            .collect();
        GraphFile {
            vertices: g.vertex_count(),
            edges,
            potential: Some(q.0.clone()),
        }
    }

    /// Validated graph and potential.
    pub fn build(&self) -> Result<(Graph, Potential)> {
        let edges: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|e| match *e {
                EdgeSpec::Plain([i, j]) => (i, j, 1.0),
                EdgeSpec::Weighted(i, j, w) => (i, j, w),
            })
            .collect();
        let g = Graph::with_weights(self.vertices, &edges)?;
        let q = match &self.potential {
            Some(q) if q.len() != self.vertices => {
                return Err(Error::DimensionMismatch {
                    expected: self.vertices,
                    got: q.len(),
                })
            }
            Some(q) if q.iter().any(|x| !x.is_finite()) => {
                return Err(Error::NonFinite("potential"))
            }
            Some(q) => Potential(q.clone()),
            None => Potential::zeros(self.vertices),
        };
        Ok((g, q))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph files always serialize")
    }
}

/// Formats `x` with 15 significant digits in scientific notation.
pub fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

/// Rounds `x` to 15 significant digits, for JSON output.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    fmt15(x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_weighted_edges() {
        let f = GraphFile::parse(r#"{"vertices": 3, "edges": [[1, 0], [1, 2, 0.5]]}"#).unwrap();
        let (g, q) = f.build().unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weights(), &[1.0, 0.5]);
        assert_eq!(q, Potential::zeros(3));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(GraphFile::parse("{").is_err());
        assert!(GraphFile::parse(r#"{"vertices": 2, "edges": [[0, 1]], "extra": 1}"#).is_err());
        assert!(GraphFile::parse(r#"{"vertices": 2, "edges": [[0, 1, 2, 3]]}"#).is_err());
        let f = GraphFile::parse(r#"{"vertices": 3, "edges": [[0, 1]]}"#).unwrap();
        assert!(matches!(f.build(), Err(Error::Disconnected { .. })));
        let f = GraphFile::parse(r#"{"vertices": 2, "edges": [[0, 1]], "potential": [1]}"#).unwrap();
        assert!(matches!(f.build(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn round_trips() {
        let g = Graph::with_weights(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let q = Potential(vec![0.5, -0.25, 0.0]);
        let f = GraphFile::from_graph(&g, &q);
        let back = GraphFile::parse(&f.to_json()).unwrap().build().unwrap();
        assert_eq!(back, (g, q));
    }

    #[test]
    fn fifteen_digits() {
        assert_eq!(fmt15(1.0 / 3.0), "3.33333333333333e-1");
        assert_eq!(round15(0.1 + 0.2), 0.3);
    }
}
