//! From convex active sets to conic path decompositions.
//!
//! The solver works with convex combinations on a (possibly scaled) path
//! hull; the user wants nonnegative path weights whose sum reproduces the
//! input flow. Rescaling by α* = ⟨x,r⟩/‖x‖² maps the iterate to the best
//! point on its ray, and rounding the rescaled weights to integers gives the
//! early-termination test: if the rounded decomposition reproduces r
//! exactly, the instance is solved.

use crate::bpcg::ActiveSet;
use crate::graph::PseudoFlow;
use crate::lmo::{PathVertex, ScaledVertex};
use crate::loss::LossKind;
use crate::vecmath::{dot, norm_sq};

/// Conic weights below this are dropped from real-valued decompositions.
const WEIGHT_FLOOR: f64 = 1e-9;

/// Componentwise tolerance used by [`exact_match`] when the reference flow
/// has non-integer entries.
const REAL_MATCH_TOL: f64 = 1e-9;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("iterate is identically zero; no cone scale exists")]
    ZeroIterate,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("integral rounding requires unit-scale path atoms")]
    UnscaledAtomsRequired,
    #[error("weights must be nonnegative, got {0}")]
    NegativeWeight(f64),
}

pub type Result<T> = std::result::Result<T, DecomposeError>;

/// A weighted set of source-to-sink paths together with the flow it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    paths: Vec<PathVertex>,
    weights: Vec<f64>,
    reconstruction: Vec<f64>,
}

impl Decomposition {
    /// Builds a decomposition over `num_edges` edges, merging duplicate
    /// paths by summing their weights and dropping zero-weight paths.
    pub fn new(paths: Vec<PathVertex>, weights: Vec<f64>, num_edges: usize) -> Result<Self> {
        if paths.len() != weights.len() {
            return Err(DecomposeError::Dimension {
                expected: paths.len(),
                got: weights.len(),
            });
        }
        let mut merged_paths: Vec<PathVertex> = Vec::with_capacity(paths.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(paths.len());
        for (path, weight) in paths.into_iter().zip(weights) {
            if weight.is_nan() || weight < 0.0 {
                return Err(DecomposeError::NegativeWeight(weight));
            }
            match merged_paths.iter().position(|p| *p == path) {
                Some(i) => merged_weights[i] += weight,
                None => {
                    merged_paths.push(path);
                    merged_weights.push(weight);
                }
            }
        }
        let mut paths = Vec::with_capacity(merged_paths.len());
        let mut weights = Vec::with_capacity(merged_paths.len());
        for (path, weight) in merged_paths.into_iter().zip(merged_weights) {
            if weight > 0.0 {
                paths.push(path);
                weights.push(weight);
            }
        }
        let mut reconstruction = vec![0.0; num_edges];
        for (path, &weight) in paths.iter().zip(&weights) {
            path.add_scaled_into(weight, &mut reconstruction);
        }
        Ok(Decomposition {
            paths,
            weights,
            reconstruction,
        })
    }

    /// The empty decomposition (reconstruction is the zero vector).
    pub fn empty(num_edges: usize) -> Self {
        Decomposition {
            paths: Vec::new(),
            weights: Vec::new(),
            reconstruction: vec![0.0; num_edges],
        }
    }

    pub fn paths(&self) -> &[PathVertex] {
        &self.paths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ_k weight_k · incidence(path_k).
    pub fn reconstruction(&self) -> &[f64] {
        &self.reconstruction
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Weight of the given path, if present.
    pub fn weight_of(&self, path: &PathVertex) -> Option<f64> {
        self.paths
            .iter()
            .position(|p| p == path)
            .map(|i| self.weights[i])
    }
}

/// The α ≥ 0 minimizing ‖α·x − r‖²: α* = ⟨x,r⟩/‖x‖², clamped at zero.
pub fn optimal_cone_scale(x: &[f64], r: &PseudoFlow) -> Result<f64> {
    if x.len() != r.len() {
        return Err(DecomposeError::Dimension {
            expected: r.len(),
            got: x.len(),
        });
    }
    let xx = norm_sq(x);
    if xx == 0.0 {
        return Err(DecomposeError::ZeroIterate);
    }
    Ok((dot(x, r.values()) / xx).max(0.0))
}

/// Rounds the rescaled active-set weights to integers: μ_k = ⌊α*·λ_k⌉ with
/// ties to even. Zero-weight paths are dropped; the result can be empty.
///
/// Requires unit-scale path atoms (the least-squares hull).
pub fn integral_decomposition(set: &ActiveSet, r: &PseudoFlow) -> Result<Decomposition> {
    for atom in set.atoms() {
        match atom {
            ScaledVertex::Path { scale, .. } if *scale == 1.0 => {}
            _ => return Err(DecomposeError::UnscaledAtomsRequired),
        }
    }
    let alpha = optimal_cone_scale(set.iterate(), r)?;
    let mut paths = Vec::with_capacity(set.len());
    let mut weights = Vec::with_capacity(set.len());
    for (atom, &lambda) in set.atoms().iter().zip(set.weights()) {
        let mu = (alpha * lambda).round_ties_even();
        if mu > 0.0 {
            paths.push(atom.path().expect("validated above").clone());
            weights.push(mu);
        }
    }
    Decomposition::new(paths, weights, r.len())
}

/// Whether the decomposition reproduces `r` componentwise: exactly when `r`
/// is integral (integer weights on 0/1 incidence vectors sum exactly in
/// floating point), else to within 1e-9.
pub fn exact_match(d: &Decomposition, r: &PseudoFlow) -> Result<bool> {
    if d.reconstruction().len() != r.len() {
        return Err(DecomposeError::Dimension {
            expected: r.len(),
            got: d.reconstruction().len(),
        });
    }
    let integral = r.values().iter().all(|v| v.fract() == 0.0);
    let tol = if integral { 0.0 } else { REAL_MATCH_TOL };
    Ok(d
        .reconstruction()
        .iter()
        .zip(r.values())
        .all(|(a, b)| (a - b).abs() <= tol))
}

/// Real-weighted conic decomposition of the final active set.
///
/// Least squares: path weights α*·λ_k with α* the optimal cone scale of the
/// iterate. Poisson: each path atom already carries the hull scale, so its
/// conic weight is scale·λ_k and the origin atom is discarded. Weights below
/// 1e-9 are dropped.
pub fn conic_decomposition(
    set: &ActiveSet,
    r: &PseudoFlow,
    loss_kind: LossKind,
) -> Result<Decomposition> {
    let mut paths = Vec::with_capacity(set.len());
    let mut weights = Vec::with_capacity(set.len());
    match loss_kind {
        LossKind::LeastSquares => {
            let alpha = optimal_cone_scale(set.iterate(), r)?;
            for (atom, &lambda) in set.atoms().iter().zip(set.weights()) {
                if let Some(path) = atom.path() {
                    let w = alpha * lambda;
                    if w >= WEIGHT_FLOOR {
                        paths.push(path.clone());
                        weights.push(w);
                    }
                }
            }
        }
        LossKind::Poisson => {
            for (atom, &lambda) in set.atoms().iter().zip(set.weights()) {
                if let ScaledVertex::Path { path, scale } = atom {
                    let w = scale * lambda;
                    if w >= WEIGHT_FLOOR {
                        paths.push(path.clone());
                        weights.push(w);
                    }
                }
            }
        }
    }
    Decomposition::new(paths, weights, r.len())
}
