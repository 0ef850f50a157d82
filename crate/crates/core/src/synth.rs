//! Seeded synthetic instances: random DAGs with planted path decompositions.
//!
//! Graphs use only forward edges under a random topological labeling, with
//! every non-source node fed from an earlier node and every non-sink node
//! draining to a later one, so the DAG shape invariants hold by
//! construction. Planting integer-weighted random walks yields an exact
//! flow together with its ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::graph::{build_dag, FlowGraph, PseudoFlow};
use crate::metrics::GroundTruth;

/// Shape parameters for one synthetic instance.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    /// Number of nodes, at least 2.
    pub node_count: usize,
    /// Desired total edge count; the generator stops adding extras once
    /// reached, and may fall short only when the DAG is near-complete.
    pub edge_target: usize,
    /// Number of planted source-to-sink walks (duplicates merge).
    pub path_count: usize,
    /// Planted weights are drawn uniformly from 1..=max_weight.
    pub max_weight: u64,
}

/// A generated instance: the DAG, the exact planted flow, and its truth.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub graph: FlowGraph,
    pub flow: PseudoFlow,
    pub truth: GroundTruth,
}

/// Random DAG on `node_count` labeled nodes with edges only from lower to
/// higher labels. Node 0 is the source, the last node the sink.
pub fn random_dag(node_count: usize, edge_target: usize, rng: &mut ChaCha8Rng) -> FlowGraph {
    assert!(node_count >= 2, "a DAG needs a source and a sink");
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut present: HashSet<(usize, usize)> = HashSet::new();
    let mut add = |edges: &mut Vec<(usize, usize)>, e: (usize, usize)| {
        if present.insert(e) {
            edges.push(e);
            true
        } else {
            false
        }
    };
    // Feed every non-source node from somewhere earlier.
    for v in 1..node_count {
        let u = rng.gen_range(0..v);
        add(&mut edges, (u, v));
    }
    // Drain every non-sink node to somewhere later.
    let mut has_out = vec![false; node_count];
    for &(u, _) in &edges {
        has_out[u] = true;
    }
    for (u, &covered) in has_out.iter().enumerate().take(node_count - 1) {
        if !covered {
            let v = rng.gen_range(u + 1..node_count);
            add(&mut edges, (u, v));
        }
    }
    // Fill toward the target with random forward edges; retries are capped
    // so dense targets terminate even when most pairs already exist.
    let mut attempts = 0;
    let max_attempts = 50 * edge_target.max(1);
    while edges.len() < edge_target && attempts < max_attempts {
        attempts += 1;
        let u = rng.gen_range(0..node_count - 1);
        let v = rng.gen_range(u + 1..node_count);
        add(&mut edges, (u, v));
    }
    build_dag(node_count, edges).expect("forward-only construction satisfies DAG shape rules")
}

/// Plants `path_count` random source-to-sink walks with integer weights,
/// returning the exact flow they carry and the merged ground truth.
pub fn plant_paths(
    g: &FlowGraph,
    path_count: usize,
    max_weight: u64,
    rng: &mut ChaCha8Rng,
) -> (PseudoFlow, GroundTruth) {
    assert!(path_count >= 1, "need at least one planted path");
    assert!(max_weight >= 1, "planted weights start at 1");
    let mut entries = Vec::with_capacity(path_count);
    for _ in 0..path_count {
        let mut nodes = vec![g.source()];
        let mut u = g.source();
        while u != g.sink() {
            let outs = g.out_edges(u);
            let e = outs[rng.gen_range(0..outs.len())];
            u = g.edge(e).1;
            nodes.push(u);
        }
        let weight = rng.gen_range(1..=max_weight) as f64;
        entries.push((weight, nodes));
    }
    let truth = GroundTruth::from_entries(g, &entries).expect("walks follow real edges");
    let flow = PseudoFlow::new(truth.true_flow().to_vec()).expect("planted flow is nonnegative");
    (flow, truth)
}

/// One fully seeded instance.
pub fn synth_instance(config: &SynthConfig, seed: u64) -> SynthInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_dag(config.node_count, config.edge_target, &mut rng);
    let (flow, truth) = plant_paths(&graph, config.path_count, config.max_weight, &mut rng);
    SynthInstance { graph, flow, truth }
}
