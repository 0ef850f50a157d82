//! Single-source single-sink DAG representation and validation.
//!
//! Node `0` is always the source and node `n − 1` the sink. Edges are stored
//! in construction order and that order indexes every flow, cost, and
//! gradient vector in the crate.

use std::collections::HashMap;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum GraphError {
    /// The edge set contains a directed cycle.
    #[error("graph contains a directed cycle")]
    Cycle,
    /// A structural requirement failed (degrees, reachability, node ids).
    #[error("invalid graph structure: {0}")]
    Structure(String),
    /// The same (tail, head) pair appears more than once.
    #[error("duplicate edge ({tail}, {head})")]
    DuplicateEdge { tail: usize, head: usize },
    /// A vector's length does not match the graph's edge count.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// A pseudo-flow entry is negative or not finite.
    #[error("invalid flow value {value} at edge {index}")]
    InvalidFlowValue { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// A validated DAG with designated source (node 0) and sink (node n − 1).
///
/// Every node lies on at least one source-to-sink path, the source has
/// in-degree 0, the sink has out-degree 0, and there are no parallel edges.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    topo_order: Vec<usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

impl FlowGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.node_count - 1
    }

    /// Edges as (tail, head) pairs, in the order that indexes flow vectors.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }

    /// Nodes in a topological order (source first, sink last).
    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Indices of edges entering `node`, ascending.
    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    /// Indices of edges leaving `node`, ascending.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    /// Edge index for a (tail, head) pair, if that edge exists.
    pub fn edge_index(&self, tail: usize, head: usize) -> Option<usize> {
        self.edge_lookup.get(&(tail, head)).copied()
    }
}

/// Validates and builds a [`FlowGraph`] from an edge list.
///
/// Rejects cycles, duplicate edges, out-of-range node ids, a source with
/// incoming edges, a sink with outgoing edges, and any node that does not lie
/// on a source-to-sink path.
pub fn build_dag(node_count: usize, edges: Vec<(usize, usize)>) -> Result<FlowGraph> {
    if node_count < 2 {
        return Err(GraphError::Structure(format!(
            "need at least 2 nodes, got {node_count}"
        )));
    }
    let mut edge_lookup = HashMap::with_capacity(edges.len());
    let mut in_edges = vec![Vec::new(); node_count];
    let mut out_edges = vec![Vec::new(); node_count];
    for (idx, &(tail, head)) in edges.iter().enumerate() {
        if tail >= node_count || head >= node_count {
            return Err(GraphError::Structure(format!(
                "edge ({tail}, {head}) references a node outside 0..{node_count}"
            )));
        }
        if edge_lookup.insert((tail, head), idx).is_some() {
            return Err(GraphError::DuplicateEdge { tail, head });
        }
        out_edges[tail].push(idx);
        in_edges[head].push(idx);
    }

    let source = 0;
    let sink = node_count - 1;
    if !in_edges[source].is_empty() {
        return Err(GraphError::Structure(
            "source (node 0) has incoming edges".into(),
        ));
    }
    if !out_edges[sink].is_empty() {
        return Err(GraphError::Structure(format!(
            "sink (node {sink}) has outgoing edges"
        )));
    }

    // Kahn's algorithm; seeding the queue in node-id order keeps the
    // resulting topological order deterministic.
    let mut remaining: Vec<usize> = (0..node_count).map(|u| in_edges[u].len()).collect();
    let mut queue: std::collections::VecDeque<usize> = (0..node_count)
        .filter(|&u| remaining[u] == 0)
        .collect();
    let mut topo_order = Vec::with_capacity(node_count);
    while let Some(u) = queue.pop_front() {
        topo_order.push(u);
        for &e in &out_edges[u] {
            let head = edges[e].1;
            remaining[head] -= 1;
            if remaining[head] == 0 {
                queue.push_back(head);
            }
        }
    }
    if topo_order.len() != node_count {
        return Err(GraphError::Cycle);
    }

    // Every node must be reachable from the source and reach the sink.
    let mut from_source = vec![false; node_count];
    from_source[source] = true;
    for &u in &topo_order {
        if !from_source[u] {
            continue;
        }
        for &e in &out_edges[u] {
            from_source[edges[e].1] = true;
        }
    }
    let mut to_sink = vec![false; node_count];
    to_sink[sink] = true;
    for &u in topo_order.iter().rev() {
        if !to_sink[u] {
            continue;
        }
        for &e in &in_edges[u] {
            to_sink[edges[e].0] = true;
        }
    }
    for u in 0..node_count {
        if !from_source[u] || !to_sink[u] {
            return Err(GraphError::Structure(format!(
                "node {u} is not on any source-to-sink path"
            )));
        }
    }

    Ok(FlowGraph {
        node_count,
        edges,
        topo_order,
        in_edges,
        out_edges,
        edge_lookup,
    })
}

/// Upper bound on the number of paths needed for an exact decomposition of
/// any flow on `g`: |E| − |V| + 2.
pub fn cyclomatic_bound(g: &FlowGraph) -> usize {
    // Validity implies connectivity, so |E| ≥ |V| − 1 and the bound is ≥ 1.
    g.edge_count() + 2 - g.node_count()
}

/// Whether `x` conserves flow at every interior node: |inflow − outflow| ≤ tol.
pub fn is_flow(g: &FlowGraph, x: &[f64], tol: f64) -> Result<bool> {
    if x.len() != g.edge_count() {
        return Err(GraphError::Dimension {
            expected: g.edge_count(),
            got: x.len(),
        });
    }
    for u in 0..g.node_count() {
        if u == g.source() || u == g.sink() {
            continue;
        }
        let inflow: f64 = g.in_edges(u).iter().map(|&e| x[e]).sum();
        let outflow: f64 = g.out_edges(u).iter().map(|&e| x[e]).sum();
        if (inflow - outflow).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A nonnegative value per edge. Node balance is not assumed; measured data
/// typically violates it.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoFlow {
    values: Vec<f64>,
}

impl PseudoFlow {
    /// Wraps a value vector, rejecting negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(GraphError::InvalidFlowValue { index, value });
            }
        }
        Ok(PseudoFlow { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest edge value (0 for an empty vector).
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Total value leaving the source.
    pub fn source_outflow(&self, g: &FlowGraph) -> Result<f64> {
        if self.len() != g.edge_count() {
            return Err(GraphError::Dimension {
                expected: g.edge_count(),
                got: self.len(),
            });
        }
        Ok(g.out_edges(g.source()).iter().map(|&e| self.values[e]).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::example_graph;

    #[test]
    fn builds_the_six_node_example() {
        let g = example_graph();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 7);
        assert_eq!(g.source(), 0);
        assert_eq!(g.sink(), 5);
        assert_eq!(g.topo_order()[0], 0);
        assert_eq!(*g.topo_order().last().unwrap(), 5);
        assert_eq!(g.edge_index(0, 2), Some(1));
        assert_eq!(g.edge_index(2, 0), None);
    }

    #[test]
    fn two_node_single_edge_is_minimal() {
        let g = build_dag(2, vec![(0, 1)]).unwrap();
        assert_eq!(cyclomatic_bound(&g), 1);
    }

    #[test]
    fn rejects_cycles() {
        let err = build_dag(4, vec![(0, 1), (1, 2), (2, 1), (2, 3)]).unwrap_err();
        assert_eq!(err, GraphError::Cycle);
    }

    #[test]
    fn rejects_self_loop_as_cycle() {
        let err = build_dag(3, vec![(0, 1), (1, 1), (1, 2)]).unwrap_err();
        assert_eq!(err, GraphError::Cycle);
    }

    #[test]
    fn rejects_duplicate_edges() {
        let err = build_dag(3, vec![(0, 1), (0, 1), (1, 2)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge { tail: 0, head: 1 });
    }

    #[test]
    fn rejects_node_off_every_path() {
        // Node 1 dangles: reachable from the source but never reaches the sink.
        let err = build_dag(4, vec![(0, 1), (0, 2), (2, 3)]).unwrap_err();
        assert!(matches!(err, GraphError::Structure(_)), "{err:?}");
    }

    #[test]
    fn rejects_edges_into_source_and_out_of_sink() {
        // An in-edge of the source both closes a cycle and violates the
        // endpoint rules; either rejection is fine.
        let err = build_dag(3, vec![(0, 1), (1, 2), (0, 2), (2, 0)]).unwrap_err();
        assert!(
            matches!(err, GraphError::Cycle | GraphError::Structure(_)),
            "{err:?}"
        );
        let err = build_dag(4, vec![(0, 3), (0, 1), (1, 2), (2, 3), (3, 2)]).unwrap_err();
        assert!(
            matches!(err, GraphError::Cycle | GraphError::Structure(_)),
            "{err:?}"
        );
        let err = build_dag(3, vec![(0, 2), (1, 0), (1, 2), (0, 1)]).unwrap_err();
        assert!(
            matches!(err, GraphError::Cycle | GraphError::Structure(_)),
            "{err:?}"
        );
    }

    #[test]
    fn rejects_out_of_range_nodes() {
        let err = build_dag(3, vec![(0, 1), (1, 5)]).unwrap_err();
        assert!(matches!(err, GraphError::Structure(_)), "{err:?}");
    }

    #[test]
    fn cyclomatic_bound_of_example_is_three() {
        assert_eq!(cyclomatic_bound(&example_graph()), 3);
    }

    #[test]
    fn example_flow_conserves() {
        let g = example_graph();
        let r = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0];
        assert!(is_flow(&g, &r, 0.0).unwrap());
    }

    #[test]
    fn all_ones_on_example_conserves() {
        // Direct summation: every interior node of the example has equal
        // in- and out-degree, so the all-ones vector balances exactly.
        let g = example_graph();
        assert!(is_flow(&g, &[1.0; 7], 0.0).unwrap());
    }

    #[test]
    fn unbalanced_vector_is_not_a_flow() {
        let g = example_graph();
        let mut x = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0];
        x[4] += 0.5; // breaks node c and node d
        assert!(!is_flow(&g, &x, 1e-9).unwrap());
        assert!(is_flow(&g, &x, 1.0).unwrap());
    }

    #[test]
    fn is_flow_checks_dimensions() {
        let g = example_graph();
        let err = is_flow(&g, &[1.0; 3], 0.0).unwrap_err();
        assert_eq!(
            err,
            GraphError::Dimension {
                expected: 7,
                got: 3
            }
        );
    }

    #[test]
    fn pseudoflow_rejects_bad_entries() {
        assert!(PseudoFlow::new(vec![0.0, 1.5]).is_ok());
        let err = PseudoFlow::new(vec![1.0, -0.25]).unwrap_err();
        assert!(matches!(err, GraphError::InvalidFlowValue { index: 1, .. }));
        assert!(PseudoFlow::new(vec![f64::NAN]).is_err());
        assert!(PseudoFlow::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn pseudoflow_summaries() {
        let g = example_graph();
        let r = PseudoFlow::new(vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.max_value(), 2.0);
        assert_eq!(r.source_outflow(&g).unwrap(), 3.0);
    }
}
