//! Sparse path decompositions of flows on directed acyclic graphs.
//!
//! Given a DAG with a single source and sink and a nonnegative value per edge
//! (a "pseudo-flow": node balance is not assumed), this crate finds a small
//! set of source-to-sink paths with positive weights whose weighted sum
//! approximates the input. The solver is a blended pairwise conditional
//! gradient method over the convex hull of path incidence vectors, with a
//! least-squares objective (distance to the ray spanned by the input) or a
//! Poisson log-likelihood objective on node in-flows. For integer inputs the
//! least-squares variant can terminate early as soon as rounding the active
//! set yields an exact integral decomposition.
//!
//! Modules follow the pipeline: [`graph`] and [`io`] load instances, [`bpcg`]
//! solves, [`decompose`] turns active sets into weighted path lists,
//! [`metrics`] scores them against ground truth, [`perturb`] adds seeded
//! integer noise, [`synth`] generates random instances, and [`oracle`] holds
//! slow reference implementations used for verification.

pub mod bpcg;
pub mod decompose;
pub mod graph;
pub mod io;
pub mod lmo;
pub mod loss;
pub mod metrics;
pub mod oracle;
pub mod perturb;
pub mod synth;

mod vecmath;

pub use bpcg::{
    active_set_extremes, fw_gap, solve, ActiveSet, PoissonScaleMode, SolverConfig, SolverReport,
    Termination,
};
pub use decompose::{
    conic_decomposition, exact_match, integral_decomposition, optimal_cone_scale, Decomposition,
};
pub use graph::{build_dag, cyclomatic_bound, is_flow, FlowGraph, PseudoFlow};
pub use lmo::{scaled_lmo, shortest_path_lmo, PathVertex, ScaledVertex};
pub use loss::{LeastSquaresLoss, LossKind, PoissonLoss};
pub use metrics::GroundTruth;

#[cfg(test)]
pub(crate) mod testutil;
