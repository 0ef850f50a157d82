//! Blended pairwise conditional gradient solver over path polytopes.
//!
//! Each iteration computes the gradient, asks the LMO for the best vertex
//! v_t, and compares two descent directions: the pairwise direction between
//! the worst and best atoms already in the active set, and the Frank-Wolfe
//! direction toward v_t. The pairwise branch moves weight between existing
//! atoms without growing the active set; the FW branch is taken only when it
//! is strictly better, which keeps decompositions sparse. Per-iteration cost
//! is one gradient, one shortest path, and one line search.
//!
//! The least-squares objective admits an exact step size, and on integer
//! inputs the solver can optionally stop as soon as rounding the active-set
//! weights reproduces the input exactly.

use std::time::Instant;

use crate::decompose::{self, DecomposeError};
use crate::graph::{FlowGraph, GraphError, PseudoFlow};
use crate::lmo::{self, LmoError, ScaledVertex};
use crate::loss::{LeastSquaresLoss, LossError, LossKind, PoissonLoss};
use crate::vecmath::dot;

/// Weight renormalization / iterate resync cadence, in iterations.
const RESYNC_PERIOD: usize = 100;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("active set is empty")]
    EmptyActiveSet,
    #[error("active set weights must be positive and sum to 1, got sum {0}")]
    BadWeights(f64),
    #[error("duplicate atom in active set")]
    DuplicateAtom,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Lmo(#[from] LmoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

pub type Result<T> = std::result::Result<T, SolveError>;

/// How the hull scale M is chosen for the Poisson solver.
///
/// `SourceOutflow` sizes the hull by the total flow leaving the source, so
/// flows of the input's plausible total value are feasible even when a
/// single edge carries less. `MaxEdgeFlow` uses the largest edge value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonScaleMode {
    SourceOutflow,
    MaxEdgeFlow,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub loss_kind: LossKind,
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub time_limit_seconds: f64,
    /// Stop as soon as rounding the active set reproduces the input exactly.
    /// Least-squares only.
    pub early_termination: bool,
    pub poisson_scale_mode: PoissonScaleMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            loss_kind: LossKind::LeastSquares,
            max_iterations: 5000,
            gap_tolerance: 1e-10,
            time_limit_seconds: 1800.0,
            early_termination: false,
            poisson_scale_mode: PoissonScaleMode::SourceOutflow,
        }
    }
}

impl SolverConfig {
    pub fn least_squares() -> Self {
        SolverConfig::default()
    }

    /// Least squares with early termination to integral decompositions.
    pub fn least_squares_integral() -> Self {
        SolverConfig {
            early_termination: true,
            ..SolverConfig::default()
        }
    }

    pub fn poisson() -> Self {
        SolverConfig {
            loss_kind: LossKind::Poisson,
            ..SolverConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(SolveError::Config("max_iterations must be at least 1".into()));
        }
        if !self.gap_tolerance.is_finite() || self.gap_tolerance < 0.0 {
            return Err(SolveError::Config(format!(
                "gap_tolerance must be a nonnegative finite number, got {}",
                self.gap_tolerance
            )));
        }
        if self.time_limit_seconds.is_nan() || self.time_limit_seconds <= 0.0 {
            return Err(SolveError::Config(format!(
                "time_limit_seconds must be positive, got {}",
                self.time_limit_seconds
            )));
        }
        if self.early_termination && self.loss_kind == LossKind::Poisson {
            return Err(SolveError::Config(
                "early termination applies to the least-squares loss only".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The Frank-Wolfe gap fell to the configured tolerance.
    GapConverged,
    /// Rounding the active set reproduced the input exactly.
    EarlyExactMatch,
    IterationLimit,
    TimeLimit,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::GapConverged => "GapConverged",
            Termination::EarlyExactMatch => "EarlyExactMatch",
            Termination::IterationLimit => "IterationLimit",
            Termination::TimeLimit => "TimeLimit",
        };
        f.write_str(s)
    }
}

/// Solve telemetry. `primal_trace` has `iterations + 1` entries (the initial
/// point plus one per completed iteration); `gap_trace` has one entry per
/// gap evaluation, aligned so `gap_trace[t]` was measured at the iterate
/// with objective `primal_trace[t]`.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: usize,
    pub termination: Termination,
    pub primal_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub wall_time_seconds: f64,
    pub final_active_set_size: usize,
}

/// Convex combination of polytope vertices together with its dense iterate.
///
/// Weights are positive and sum to 1 (to within accumulated rounding; the
/// solver renormalizes periodically). The iterate always equals the weighted
/// sum of the atoms up to a drift of about 1e-10, and is rebuilt from the
/// atoms whenever weights are renormalized.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    atoms: Vec<ScaledVertex>,
    weights: Vec<f64>,
    iterate: Vec<f64>,
}

impl ActiveSet {
    /// Builds a validated active set: non-empty, positive weights summing to
    /// 1 (tolerance 1e-9), no duplicate atoms.
    pub fn new(atoms: Vec<ScaledVertex>, weights: Vec<f64>, num_edges: usize) -> Result<Self> {
        if atoms.is_empty() {
            return Err(SolveError::EmptyActiveSet);
        }
        if atoms.len() != weights.len() {
            return Err(SolveError::Dimension {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SolveError::BadWeights(sum));
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i] == atoms[j] {
                    return Err(SolveError::DuplicateAtom);
                }
            }
        }
        let mut set = ActiveSet {
            atoms,
            weights,
            iterate: vec![0.0; num_edges],
        };
        set.resync();
        Ok(set)
    }

    /// The empty set over `num_edges` edges; its iterate is the origin.
    pub fn empty(num_edges: usize) -> Self {
        ActiveSet {
            atoms: Vec::new(),
            weights: Vec::new(),
            iterate: vec![0.0; num_edges],
        }
    }

    fn single(atom: ScaledVertex, num_edges: usize) -> Self {
        let mut iterate = vec![0.0; num_edges];
        atom.add_scaled_into(1.0, &mut iterate);
        ActiveSet {
            atoms: vec![atom],
            weights: vec![1.0],
            iterate,
        }
    }

    pub fn atoms(&self) -> &[ScaledVertex] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iterate(&self) -> &[f64] {
        &self.iterate
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn find(&self, v: &ScaledVertex) -> Option<usize> {
        self.atoms.iter().position(|a| a == v)
    }

    /// Moves `gamma` of weight from atom `away` onto atom `local`, dropping
    /// `away` when its whole weight is transferred.
    fn pairwise_step(&mut self, away: usize, local: usize, gamma: f64) {
        self.atoms[local].add_scaled_into(gamma, &mut self.iterate);
        self.atoms[away].add_scaled_into(-gamma, &mut self.iterate);
        // The exact iterate is a hull point, but subtracting the away
        // contribution can leave rounding residue below zero on its edges;
        // clamp it out so loss domains stay valid.
        if let Some(path) = self.atoms[away].path() {
            for &e in path.edge_indices() {
                if self.iterate[e] < 0.0 {
                    debug_assert!(self.iterate[e] > -1e-9, "residue {}", self.iterate[e]);
                    self.iterate[e] = 0.0;
                }
            }
        }
        self.weights[local] += gamma;
        self.weights[away] -= gamma;
        if self.weights[away] <= 0.0 {
            self.atoms.remove(away);
            self.weights.remove(away);
        }
    }

    /// Blends toward vertex `v`: x ← (1 − γ)x + γv. A full step resets the
    /// set to `{v}`; otherwise `v` is merged into the set.
    fn fw_step(&mut self, v: ScaledVertex, gamma: f64) {
        if gamma >= 1.0 {
            *self = ActiveSet::single(v, self.iterate.len());
            return;
        }
        for w in &mut self.weights {
            *w *= 1.0 - gamma;
        }
        for xi in &mut self.iterate {
            *xi *= 1.0 - gamma;
        }
        v.add_scaled_into(gamma, &mut self.iterate);
        match self.find(&v) {
            Some(i) => self.weights[i] += gamma,
            None => {
                self.atoms.push(v);
                self.weights.push(gamma);
            }
        }
    }

    /// Rescales weights to sum exactly to 1 and rebuilds the iterate.
    pub fn renormalize(&mut self) {
        let sum: f64 = self.weights.iter().sum();
        if sum > 0.0 {
            for w in &mut self.weights {
                *w /= sum;
            }
        }
        self.resync();
    }

    /// Rebuilds the iterate from the atoms, clearing accumulated drift.
    pub fn resync(&mut self) {
        self.iterate.iter_mut().for_each(|x| *x = 0.0);
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            atom.add_scaled_into(w, &mut self.iterate);
        }
    }

    /// Max-norm distance between the stored iterate and Σ w·atom.
    pub fn drift(&self) -> f64 {
        let mut fresh = vec![0.0; self.iterate.len()];
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            atom.add_scaled_into(w, &mut fresh);
        }
        self.iterate
            .iter()
            .zip(&fresh)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Frank-Wolfe gap ⟨gradient, x − v⟩; nonnegative whenever `v` exactly
/// minimizes the gradient over a set containing `x`.
pub fn fw_gap(gradient: &[f64], x: &[f64], v: &[f64]) -> Result<f64> {
    if gradient.len() != x.len() {
        return Err(SolveError::Dimension {
            expected: gradient.len(),
            got: x.len(),
        });
    }
    if gradient.len() != v.len() {
        return Err(SolveError::Dimension {
            expected: gradient.len(),
            got: v.len(),
        });
    }
    Ok(dot(gradient, x) - dot(gradient, v))
}

/// Indices of the atoms with the largest and smallest inner product against
/// the gradient (the away and local vertices). Ties keep the lowest index.
pub fn active_set_extremes(set: &ActiveSet, gradient: &[f64]) -> Result<(usize, usize)> {
    if set.is_empty() {
        return Err(SolveError::EmptyActiveSet);
    }
    let mut away = 0;
    let mut local = 0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for (i, atom) in set.atoms().iter().enumerate() {
        let d = atom.dot(gradient);
        if d > max {
            max = d;
            away = i;
        }
        if d < min {
            min = d;
            local = i;
        }
    }
    Ok((away, local))
}

enum LossModel {
    Ls(LeastSquaresLoss),
    Poisson(PoissonLoss, f64),
}

impl LossModel {
    fn value(&self, x: &[f64]) -> std::result::Result<f64, LossError> {
        match self {
            LossModel::Ls(l) => l.value(x),
            LossModel::Poisson(l, _) => l.value(x),
        }
    }

    fn gradient(&self, x: &[f64]) -> std::result::Result<Vec<f64>, LossError> {
        match self {
            LossModel::Ls(l) => l.gradient(x),
            LossModel::Poisson(l, _) => l.gradient(x),
        }
    }

    fn lmo(&self, g: &FlowGraph, grad: &[f64]) -> std::result::Result<ScaledVertex, LmoError> {
        match self {
            LossModel::Ls(_) => Ok(ScaledVertex::unit(lmo::shortest_path_lmo(g, grad)?)),
            LossModel::Poisson(_, scale) => lmo::scaled_lmo(g, grad, *scale),
        }
    }

    fn step(&self, x: &[f64], d: &[f64], gamma_max: f64) -> std::result::Result<f64, LossError> {
        match self {
            LossModel::Ls(l) => l.step_size(x, d, gamma_max),
            LossModel::Poisson(l, _) => l.line_search(x, d, gamma_max),
        }
    }
}

/// Greedy path family covering every edge: repeatedly route a path through
/// the least-covered edge. Used to initialize the Poisson solver with an
/// iterate whose node in-flows are all positive.
fn edge_cover_paths(g: &FlowGraph) -> std::result::Result<Vec<crate::lmo::PathVertex>, LmoError> {
    let mut cover = vec![0usize; g.edge_count()];
    let mut paths = Vec::new();
    while cover.contains(&0) {
        let e = (0..cover.len()).min_by_key(|&i| (cover[i], i)).unwrap();
        let p = lmo::path_through_edge(g, e)?;
        for &pe in p.edge_indices() {
            cover[pe] += 1;
        }
        paths.push(p);
    }
    Ok(paths)
}

fn initial_active_set(
    g: &FlowGraph,
    r: &PseudoFlow,
    config: &SolverConfig,
) -> Result<(ActiveSet, LossModel)> {
    match config.loss_kind {
        LossKind::LeastSquares => {
            let loss = LeastSquaresLoss::new(r)?;
            let p0 = lmo::shortest_path_lmo(g, &vec![1.0; g.edge_count()])?;
            let set = ActiveSet::single(ScaledVertex::unit(p0), g.edge_count());
            Ok((set, LossModel::Ls(loss)))
        }
        LossKind::Poisson => {
            let loss = PoissonLoss::new(g, r)?;
            let scale = match config.poisson_scale_mode {
                PoissonScaleMode::SourceOutflow => r.source_outflow(g)?,
                PoissonScaleMode::MaxEdgeFlow => r.max_value(),
            };
            if scale.is_nan() || scale <= 0.0 {
                return Err(SolveError::Config(format!(
                    "poisson hull scale must be positive, got {scale} \
                     (reference flow has no mass under the chosen scale mode)"
                )));
            }
            let paths = edge_cover_paths(g)?;
            let k = paths.len();
            let atoms: Vec<ScaledVertex> = paths
                .into_iter()
                .map(|path| ScaledVertex::Path { path, scale })
                .collect();
            let weights = vec![1.0 / k as f64; k];
            let set = ActiveSet::new(atoms, weights, g.edge_count())?;
            Ok((set, LossModel::Poisson(loss, scale)))
        }
    }
}

fn rounding_matches(active: &ActiveSet, r: &PseudoFlow) -> Result<bool> {
    let d = decompose::integral_decomposition(active, r)?;
    Ok(decompose::exact_match(&d, r)?)
}

/// Runs the solver on a pseudo-flow, returning the final active set and a
/// report. The iterate lives in the unit path hull for least squares and in
/// the scaled, origin-augmented hull for Poisson; use the `decompose` module
/// to turn the result into conic path weights.
pub fn solve(g: &FlowGraph, r: &PseudoFlow, config: &SolverConfig) -> Result<(ActiveSet, SolverReport)> {
    config.validate()?;
    if r.len() != g.edge_count() {
        return Err(SolveError::Dimension {
            expected: g.edge_count(),
            got: r.len(),
        });
    }
    let start = Instant::now();
    let (mut active, model) = initial_active_set(g, r, config)?;
    let mut primal_trace = vec![model.value(active.iterate())?];
    let mut gap_trace: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let mut termination = None;

    if config.early_termination && rounding_matches(&active, r)? {
        termination = Some(Termination::EarlyExactMatch);
    }

    while termination.is_none() {
        if iterations >= config.max_iterations {
            termination = Some(Termination::IterationLimit);
            break;
        }
        if start.elapsed().as_secs_f64() > config.time_limit_seconds {
            termination = Some(Termination::TimeLimit);
            break;
        }

        let grad = model.gradient(active.iterate())?;
        let v = model.lmo(g, &grad)?;
        let gap = dot(&grad, active.iterate()) - v.dot(&grad);
        gap_trace.push(gap);
        if gap <= config.gap_tolerance {
            termination = Some(Termination::GapConverged);
            break;
        }

        let (away, local) = active_set_extremes(&active, &grad)?;
        let away_dot = active.atoms()[away].dot(&grad);
        let local_dot = active.atoms()[local].dot(&grad);

        if away_dot - local_dot >= gap {
            // Pairwise: shift weight from the worst atom to the best one.
            let gamma_max = active.weights()[away];
            let mut d = active.atoms()[away].incidence(g.edge_count());
            active.atoms()[local].add_scaled_into(-1.0, &mut d);
            let gamma = model.step(active.iterate(), &d, gamma_max)?;
            active.pairwise_step(away, local, gamma);
        } else {
            // Frank-Wolfe: blend toward the LMO vertex.
            let mut d = active.iterate().to_vec();
            v.add_scaled_into(-1.0, &mut d);
            let gamma = model.step(active.iterate(), &d, 1.0)?;
            active.fw_step(v, gamma);
        }

        iterations += 1;
        if iterations.is_multiple_of(RESYNC_PERIOD) {
            active.renormalize();
        }
        primal_trace.push(model.value(active.iterate())?);
        if config.early_termination && rounding_matches(&active, r)? {
            termination = Some(Termination::EarlyExactMatch);
        }
    }

    active.renormalize();
    let report = SolverReport {
        iterations,
        termination: termination.expect("loop sets termination before exiting"),
        primal_trace,
        gap_trace,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        final_active_set_size: active.len(),
    };
    Ok((active, report))
}
