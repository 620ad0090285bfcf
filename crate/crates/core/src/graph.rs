//! Simple connected graphs, spanning trees, partitions and partition multigraphs.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsu::UnionFind;
use crate::{Error, Result};

/// Undirected edge stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
}

impl Edge {
    /// Builds the edge with endpoints in canonical order.
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge { i: a, j: b }
        } else {
            Edge { i: b, j: a }
        }
    }

    pub fn key(&self) -> String {
        format!("{}-{}", self.i, self.j)
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.i {
            self.j
        } else {
            self.i
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// A finite, simple, connected graph with positive edge weights.
///
/// Edges are kept sorted; the edge index used throughout the crate is the
/// position in that sorted list.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
    // (neighbour, edge index), neighbours ascending
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Unweighted graph.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        Self::with_weights(n, &weighted)
    }

    pub fn with_weights(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let g = Self::build(n, edges)?;
        let components = g.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    fn build(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut list: Vec<(Edge, f64)> = Vec::with_capacity(edges.len());
        for &(a, b, w) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, count: n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = Edge::new(a, b);
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight { edge: e, weight: w });
            }
            list.push((e, w));
        }
        list.sort_by(|x, y| x.0.cmp(&y.0));
        for pair in list.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateEdge(pair[0].0));
            }
        }
        let (edges, weights): (Vec<Edge>, Vec<f64>) = list.into_iter().unzip();
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.i].push((e.j, k));
            adjacency[e.j].push((e.i, k));
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        Ok(Graph {
            n,
            edges,
            weights,
            adjacency,
        })
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        Self::new(n, &edges).expect("path graph is valid")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let mut edges: Vec<_> = (1..n).map(|k| (k - 1, k)).collect();
        edges.push((0, n - 1));
        Self::new(n, &edges).expect("cycle graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        Self::new(n, &edges).expect("complete graph is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.iter().any(|&w| w != 1.0)
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edge_index(e).is_some()
    }

    /// Neighbours of `v` with the connecting edge index, ascending.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, k)| self.weights[k]).sum()
    }

    /// First Betti number `E - V + 1`.
    pub fn betti(&self) -> usize {
        self.edges.len() + 1 - self.n
    }

    pub fn is_tree(&self) -> bool {
        self.betti() == 0
    }

    fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        uf.components()
    }

    /// Spanning tree by depth-first search from vertex 0, visiting
    /// neighbours in ascending order. Returned edges are sorted.
    pub fn spanning_tree(&self) -> Vec<Edge> {
        let mut seen = vec![false; self.n];
        let mut tree = Vec::with_capacity(self.n - 1);
        let mut stack = vec![(0usize, 0usize)];
        seen[0] = true;
        while let Some(&mut (v, ref mut cursor)) = stack.last_mut() {
            if let Some(&(u, k)) = self.adjacency[v].get(*cursor) {
                *cursor += 1;
                if !seen[u] {
                    seen[u] = true;
                    tree.push(self.edges[k]);
                    stack.push((u, 0));
                }
            } else {
                stack.pop();
            }
        }
        tree.sort_unstable();
        tree
    }

    /// True if deleting `e` disconnects the graph.
    pub fn is_bridge(&self, e: Edge) -> bool {
        let mut uf = UnionFind::new(self.n);
        for &f in &self.edges {
            if f != e {
                uf.union(f.i, f.j);
            }
        }
        uf.components() > 1
    }

    /// Factor with `e` deleted; fails if `e` is missing or a bridge.
    pub fn without_edge(&self, e: Edge) -> Result<Graph> {
        let k = self.edge_index(e).ok_or(Error::MissingEdge(e))?;
        let rest: Vec<_> = self
            .edges
            .iter()
            .zip(&self.weights)
            .enumerate()
            .filter(|&(idx, _)| idx != k)
            .map(|(_, (f, &w))| (f.i, f.j, w))
            .collect();
        Self::with_weights(self.n, &rest).map_err(|err| match err {
            Error::Disconnected { .. } => Error::Disconnects(e),
            other => other,
        })
    }

    /// Spanning subgraph keeping only the listed edges (must be connected).
    pub fn factor(&self, keep: &[Edge]) -> Result<Graph> {
        let mut list = Vec::with_capacity(keep.len());
        for &e in keep {
            let k = self.edge_index(e).ok_or(Error::MissingEdge(e))?;
            list.push((e.i, e.j, self.weights[k]));
        }
        Self::with_weights(self.n, &list)
    }
}

/// A ν-partition: connected domains obtained by deleting only edges that run
/// between different domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    graph: Graph,
    domain_of: Vec<usize>,
    nu: usize,
    removed: Vec<usize>,
}

impl Partition {
    /// Builds the partition whose domains are the label classes. Labels are
    /// renumbered `0..ν` in order of first appearance, so vertex 0 always
    /// lies in domain 0.
    pub fn from_labels(g: &Graph, labels: &[usize]) -> Result<Self> {
        if labels.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: g.vertex_count(),
                got: labels.len(),
            });
        }
        let mut map: HashMap<usize, usize> = HashMap::new();
        let domain_of: Vec<usize> = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        let nu = map.len();
        let mut uf = UnionFind::new(g.vertex_count());
        let mut removed = Vec::new();
        for (k, e) in g.edges().iter().enumerate() {
            if domain_of[e.i] == domain_of[e.j] {
                uf.union(e.i, e.j);
            } else {
                removed.push(k);
            }
        }
        if uf.components() != nu {
            // some class splits into several components; name the first one
            let mut root_of = vec![usize::MAX; nu];
            for v in 0..g.vertex_count() {
                let r = uf.find(v);
                let d = domain_of[v];
                if root_of[d] == usize::MAX {
                    root_of[d] = r;
                } else if root_of[d] != r {
                    let label = labels[v];
                    return Err(Error::DisconnectedDomain { label });
                }
            }
        }
        Ok(Partition {
            graph: g.clone(),
            domain_of,
            nu,
            removed,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn domain_of(&self, v: usize) -> usize {
        self.domain_of[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.domain_of
    }

    /// Vertices of every domain, ascending.
    pub fn domains(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nu];
        for (v, &d) in self.domain_of.iter().enumerate() {
            out[d].push(v);
        }
        out
    }

    /// Indices (into the parent graph's edge list) of the deleted edges.
    pub fn removed_edge_indices(&self) -> &[usize] {
        &self.removed
    }

    pub fn removed_edges(&self) -> Vec<Edge> {
        self.removed.iter().map(|&k| self.graph.edges()[k]).collect()
    }

    /// ζ(G; P), the number of deleted edges.
    pub fn zeta(&self) -> usize {
        self.removed.len()
    }

    /// Sum of the Betti numbers of the domains.
    pub fn ell(&self) -> usize {
        let inner = self.graph.edge_count() - self.removed.len();
        inner + self.nu - self.graph.vertex_count()
    }

    /// Dimension of the local equipartition manifold, `ζ - (ν - 1)`.
    pub fn eta(&self) -> usize {
        self.zeta() + 1 - self.nu
    }

    pub fn multigraph(&self) -> PartitionGraph {
        partition_multigraph(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiEdge {
    pub a: usize,
    pub b: usize,
    /// The base-graph edge this multigraph edge comes from.
    pub edge: Edge,
}

/// Multigraph with one vertex per domain and one edge per deleted edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGraph {
    vertex_count: usize,
    multi_edges: Vec<MultiEdge>,
}

pub fn partition_multigraph(p: &Partition) -> PartitionGraph {
    let multi_edges = p
        .removed_edges()
        .into_iter()
        .map(|e| MultiEdge {
            a: p.domain_of(e.i),
            b: p.domain_of(e.j),
            edge: e,
        })
        .collect();
    PartitionGraph {
        vertex_count: p.nu(),
        multi_edges,
    }
}

impl PartitionGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.multi_edges.len()
    }

    pub fn edges(&self) -> &[MultiEdge] {
        &self.multi_edges
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.vertex_count);
        for e in &self.multi_edges {
            uf.union(e.a, e.b);
        }
        uf.components() == 1
    }

    pub fn is_tree(&self) -> bool {
        self.multi_edges.len() + 1 == self.vertex_count && self.is_connected()
    }

    /// Two-colouring by breadth-first search; `None` if an odd cycle exists.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.multi_edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        let mut color = vec![u8::MAX; self.vertex_count];
        for s in 0..self.vertex_count {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &u in &adj[v] {
                    if color[u] == u8::MAX {
                        color[u] = 1 - color[v];
                        queue.push_back(u);
                    } else if color[u] == color[v] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn betti_numbers() {
        assert_eq!(Graph::path(3).betti(), 0);
        assert_eq!(Graph::cycle(4).betti(), 1);
        assert_eq!(Graph::complete(4).betti(), 3);
        assert!(Graph::path(3).is_tree());
        assert!(!Graph::cycle(4).is_tree());
    }

    #[test]
    fn construction_rejects_invalid_graphs() {
        assert!(matches!(Graph::new(0, &[]), Err(Error::EmptyGraph)));
        assert!(matches!(Graph::new(2, &[(0, 0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(
            Graph::new(2, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(_))
        ));
        assert!(matches!(
            Graph::new(3, &[(0, 1)]),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(matches!(
            Graph::new(2, &[(0, 2)]),
            Err(Error::VertexOutOfRange { vertex: 2, .. })
        ));
        assert!(matches!(
            Graph::with_weights(2, &[(0, 1, 0.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(Graph::new(1, &[]).is_ok());
    }

    #[test]
    fn spanning_trees() {
        let p = Graph::path(3);
        assert_eq!(p.spanning_tree(), p.edges().to_vec());
        let c = Graph::cycle(4);
        assert_eq!(
            c.spanning_tree(),
            vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(2, 3)]
        );
    }

    #[test]
    fn bridges_and_edge_removal() {
        let c = Graph::cycle(4);
        assert!(!c.is_bridge(Edge::new(0, 1)));
        let t = c.without_edge(Edge::new(0, 1)).unwrap();
        assert!(t.is_tree());
        assert!(t.is_bridge(Edge::new(1, 2)));
        assert!(matches!(
            t.without_edge(Edge::new(1, 2)),
            Err(Error::Disconnects(_))
        ));
        assert!(matches!(
            t.without_edge(Edge::new(0, 1)),
            Err(Error::MissingEdge(_))
        ));
    }

    #[test]
    fn partitions_from_labels() {
        let p = Partition::from_labels(&Graph::path(3), &[0, 0, 1]).unwrap();
        assert_eq!(p.nu(), 2);
        assert_eq!(p.removed_edges(), vec![Edge::new(1, 2)]);

        let c = Graph::cycle(4);
        assert!(matches!(
            Partition::from_labels(&c, &[0, 1, 0, 1]),
            Err(Error::DisconnectedDomain { .. })
        ));
        let s = Partition::from_labels(&c, &[0, 1, 2, 3]).unwrap();
        assert_eq!(s.nu(), 4);
        assert_eq!(s.zeta(), 4);
        assert_eq!(s.ell(), 0);
        assert_eq!(s.eta(), 1);
    }

    #[test]
    fn labels_are_renumbered_from_vertex_zero() {
        let p = Partition::from_labels(&Graph::path(3), &[7, 7, 2]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1]);
    }

    #[test]
    fn partition_multigraphs() {
        let c = Graph::cycle(4);
        let s = Partition::from_labels(&c, &[0, 1, 2, 3]).unwrap();
        let m = s.multigraph();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.edge_count(), 4);
        assert!(m.is_bipartite());
        assert!(!m.is_tree());

        let p = Partition::from_labels(&Graph::path(3), &[0, 1, 1]).unwrap();
        let m = p.multigraph();
        assert_eq!(m.vertex_count(), 2);
        assert_eq!(m.edge_count(), 1);
        assert!(m.is_tree());

        let tri = Partition::from_labels(&Graph::cycle(3), &[0, 1, 2]).unwrap();
        assert!(!tri.multigraph().is_bipartite());
    }

    #[test]
    fn parallel_multigraph_edges() {
        // two domains joined by two edges
        let c = Graph::cycle(4);
        let p = Partition::from_labels(&c, &[0, 0, 1, 1]).unwrap();
        let m = p.multigraph();
        assert_eq!(m.edge_count(), 2);
        assert!(!m.is_tree());
        assert!(m.is_bipartite());
        assert_eq!(p.eta(), 1);
    }
}
