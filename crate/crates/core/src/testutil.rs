//! Shared fixtures for unit tests.

use crate::graph::{build_dag, FlowGraph, PseudoFlow};

/// The six-node splice-graph example used throughout the unit tests.
///
/// Nodes: 0 = s, 1 = a, 2 = b, 3 = c, 4 = d, 5 = t. Edge order fixes the
/// flow-vector indexing: s-a, s-b, a-c, b-c, c-d, c-t, d-t.
pub(crate) fn example_graph() -> FlowGraph {
    build_dag(6, vec![(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)]).unwrap()
}

/// The integral flow carried by {s-a-c-d-t: 1, s-b-c-t: 2} on [`example_graph`].
pub(crate) fn example_flow() -> PseudoFlow {
    PseudoFlow::new(vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0]).unwrap()
}
