//! Linear minimization oracles over path polytopes.
//!
//! The vertices of the feasible region are source-to-sink paths (possibly
//! scaled, possibly together with the origin). Minimizing a linear cost over
//! that set reduces to a shortest-path computation, which on a DAG is a
//! single dynamic-programming pass in topological order; negative costs are
//! fine and the total work is Θ(|V| + |E|).

use crate::graph::FlowGraph;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum LmoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("edge index {0} out of range")]
    EdgeOutOfRange(usize),
}

/// Why a node sequence fails to describe a path of the graph.
#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum PathError {
    #[error("path must contain at least two nodes")]
    TooShort,
    #[error("no edge from {from} to {to}")]
    MissingEdge { from: usize, to: usize },
    #[error("path runs from {start} to {end}, expected source {expected_start} to sink {expected_end}")]
    WrongEndpoints {
        start: usize,
        end: usize,
        expected_start: usize,
        expected_end: usize,
    },
}

/// A source-to-sink path, stored both as its node sequence and as the set of
/// edge indices it uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathVertex {
    node_seq: Vec<usize>,
    edge_indices: Vec<usize>, // ascending, one per hop
}

impl PathVertex {
    /// Builds a path from its node sequence, validating each hop against `g`
    /// and the endpoints against source and sink.
    pub fn from_nodes(g: &FlowGraph, node_seq: Vec<usize>) -> Result<Self, PathError> {
        if node_seq.len() < 2 {
            return Err(PathError::TooShort);
        }
        let start = node_seq[0];
        let end = *node_seq.last().unwrap();
        if start != g.source() || end != g.sink() {
            return Err(PathError::WrongEndpoints {
                start,
                end,
                expected_start: g.source(),
                expected_end: g.sink(),
            });
        }
        let mut edge_indices = Vec::with_capacity(node_seq.len() - 1);
        for pair in node_seq.windows(2) {
            match g.edge_index(pair[0], pair[1]) {
                Some(e) => edge_indices.push(e),
                None => {
                    return Err(PathError::MissingEdge {
                        from: pair[0],
                        to: pair[1],
                    })
                }
            }
        }
        edge_indices.sort_unstable();
        Ok(PathVertex {
            node_seq,
            edge_indices,
        })
    }

    /// Internal constructor for paths produced by the DP backtracks, which
    /// are valid by construction.
    fn from_walk(node_seq: Vec<usize>, mut edge_indices: Vec<usize>) -> Self {
        debug_assert_eq!(node_seq.len(), edge_indices.len() + 1);
        edge_indices.sort_unstable();
        PathVertex {
            node_seq,
            edge_indices,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.node_seq
    }

    /// Edge indices used by the path, ascending.
    pub fn edge_indices(&self) -> &[usize] {
        &self.edge_indices
    }

    pub fn edge_count(&self) -> usize {
        self.edge_indices.len()
    }

    /// Dense 0/1 incidence vector of length `num_edges`.
    pub fn incidence(&self, num_edges: usize) -> Vec<f64> {
        let mut v = vec![0.0; num_edges];
        for &e in &self.edge_indices {
            v[e] = 1.0;
        }
        v
    }

    /// Inner product of the incidence vector with `costs`.
    pub fn dot(&self, costs: &[f64]) -> f64 {
        self.edge_indices.iter().map(|&e| costs[e]).sum()
    }

    /// Adds `weight` times the incidence vector into `out`.
    pub fn add_scaled_into(&self, weight: f64, out: &mut [f64]) {
        for &e in &self.edge_indices {
            out[e] += weight;
        }
    }
}

/// A vertex of the scaled-and-augmented polytope used by the Poisson solver:
/// either `scale` times a path's incidence vector, or the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaledVertex {
    Path { path: PathVertex, scale: f64 },
    Origin,
}

impl ScaledVertex {
    pub fn unit(path: PathVertex) -> Self {
        ScaledVertex::Path { path, scale: 1.0 }
    }

    pub fn is_origin(&self) -> bool {
        matches!(self, ScaledVertex::Origin)
    }

    pub fn path(&self) -> Option<&PathVertex> {
        match self {
            ScaledVertex::Path { path, .. } => Some(path),
            ScaledVertex::Origin => None,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            ScaledVertex::Path { scale, .. } => *scale,
            ScaledVertex::Origin => 0.0,
        }
    }

    pub fn dot(&self, costs: &[f64]) -> f64 {
        match self {
            ScaledVertex::Path { path, scale } => scale * path.dot(costs),
            ScaledVertex::Origin => 0.0,
        }
    }

    pub fn add_scaled_into(&self, weight: f64, out: &mut [f64]) {
        if let ScaledVertex::Path { path, scale } = self {
            path.add_scaled_into(weight * scale, out);
        }
    }

    pub fn incidence(&self, num_edges: usize) -> Vec<f64> {
        let mut v = vec![0.0; num_edges];
        self.add_scaled_into(1.0, &mut v);
        v
    }
}

/// Minimum-cost source-to-sink path under per-edge `costs`.
///
/// Costs may be negative. When two incoming edges give a node the same path
/// cost, the edge with the smaller index wins, so identical inputs always
/// produce the identical path.
pub fn shortest_path_lmo(g: &FlowGraph, costs: &[f64]) -> Result<PathVertex, LmoError> {
    if costs.len() != g.edge_count() {
        return Err(LmoError::Dimension {
            expected: g.edge_count(),
            got: costs.len(),
        });
    }
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    dist[g.source()] = 0.0;
    for &u in g.topo_order() {
        if u == g.source() {
            continue;
        }
        // In-edge lists are ascending, so a strict improvement test keeps
        // the smallest edge index among cost ties.
        for &e in g.in_edges(u) {
            let tail = g.edge(e).0;
            let cand = dist[tail] + costs[e];
            if cand < dist[u] {
                dist[u] = cand;
                parent[u] = e;
            }
        }
    }
    Ok(backtrack(g, &parent, g.sink()))
}

fn backtrack(g: &FlowGraph, parent: &[usize], from: usize) -> PathVertex {
    let mut nodes = vec![from];
    let mut edges = Vec::new();
    let mut u = from;
    while u != g.source() {
        let e = parent[u];
        edges.push(e);
        u = g.edge(e).0;
        nodes.push(u);
    }
    nodes.reverse();
    PathVertex::from_walk(nodes, edges)
}

/// LMO over the scaled path polytope augmented with the origin.
///
/// Returns `scale` times the cheapest path when that vertex has
/// non-positive cost, and the origin otherwise (the origin wins ties at
/// exactly zero only when the path cost is positive, i.e. never).
pub fn scaled_lmo(g: &FlowGraph, costs: &[f64], scale: f64) -> Result<ScaledVertex, LmoError> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(LmoError::InvalidScale(scale));
    }
    let path = shortest_path_lmo(g, costs)?;
    let scaled_cost = scale * path.dot(costs);
    if scaled_cost <= 0.0 {
        Ok(ScaledVertex::Path { path, scale })
    } else {
        Ok(ScaledVertex::Origin)
    }
}

/// Some source-to-sink path through the given edge, chosen deterministically
/// (fewest hops on each side, ties to the smaller edge index).
pub fn path_through_edge(g: &FlowGraph, edge: usize) -> Result<PathVertex, LmoError> {
    if edge >= g.edge_count() {
        return Err(LmoError::EdgeOutOfRange(edge));
    }
    let n = g.node_count();
    let (tail, head) = g.edge(edge);

    // Hop counts from the source, pulled over in-edges as in the LMO.
    let mut fwd_parent = vec![usize::MAX; n];
    let mut fwd_dist = vec![f64::INFINITY; n];
    fwd_dist[g.source()] = 0.0;
    for &u in g.topo_order() {
        for &e in g.in_edges(u) {
            let t = g.edge(e).0;
            let cand = fwd_dist[t] + 1.0;
            if cand < fwd_dist[u] {
                fwd_dist[u] = cand;
                fwd_parent[u] = e;
            }
        }
    }
    // Hop counts to the sink, pushed over out-edges in reverse order.
    let mut bwd_next = vec![usize::MAX; n];
    let mut bwd_dist = vec![f64::INFINITY; n];
    bwd_dist[g.sink()] = 0.0;
    for &u in g.topo_order().iter().rev() {
        for &e in g.out_edges(u) {
            let h = g.edge(e).1;
            let cand = bwd_dist[h] + 1.0;
            if cand < bwd_dist[u] {
                bwd_dist[u] = cand;
                bwd_next[u] = e;
            }
        }
    }

    // Stitch source→tail, the requested edge, and head→sink together.
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut u = tail;
    while u != g.source() {
        let e = fwd_parent[u];
        edges.push(e);
        nodes.push(u);
        u = g.edge(e).0;
    }
    nodes.push(g.source());
    nodes.reverse();
    edges.reverse();
    edges.push(edge);
    nodes.push(head);
    u = head;
    while u != g.sink() {
        let e = bwd_next[u];
        edges.push(e);
        u = g.edge(e).1;
        nodes.push(u);
    }
    Ok(PathVertex::from_walk(nodes, edges))
}
