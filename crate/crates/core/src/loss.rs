//! Objectives measuring how well an edge vector explains the input flow.
//!
//! Least squares compares against the *ray* spanned by the input rather than
//! the input itself: f(x) = ½‖x − (⟨x,r⟩/‖r‖²)·r‖². That makes the value
//! invariant to rescaling r, so the solver can work on the unit path hull
//! and the scale is recovered afterwards. The Poisson objective instead
//! treats each node's in-flow as the mean of a Poisson count:
//! f(x) = Σ_u [X_u − R_u·log X_u] over non-source nodes, with X_u (resp.
//! R_u) the in-flow of x (resp. r) at u.

use crate::graph::{FlowGraph, PseudoFlow};
use crate::vecmath::{dot, norm_sq};

/// Which objective the solver minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    LeastSquares,
    Poisson,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum LossError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("negative or non-finite entry {value} at index {index}")]
    NegativeFlow { index: usize, value: f64 },
    #[error("reference flow is identically zero")]
    ZeroReference,
}

pub type Result<T> = std::result::Result<T, LossError>;

/// Relative threshold below which the least-squares step denominator is
/// treated as zero (direction parallel to the reference ray).
const FLAT_DENOM_TOL: f64 = 1e-14;

/// Floor applied inside Poisson logarithms so the objective stays finite on
/// the boundary of the feasible region.
pub const DOMAIN_EPSILON: f64 = 1e-12;

/// Golden-section iterations for the Poisson line search.
const GOLDEN_ITERS: usize = 64;

/// Squared distance to the ray spanned by the reference flow, halved.
#[derive(Debug, Clone)]
pub struct LeastSquaresLoss {
    r: Vec<f64>,
    r_norm_sq: f64,
}

impl LeastSquaresLoss {
    pub fn new(r: &PseudoFlow) -> Result<Self> {
        let r = r.values().to_vec();
        let r_norm_sq = norm_sq(&r);
        if r_norm_sq == 0.0 {
            return Err(LossError::ZeroReference);
        }
        Ok(LeastSquaresLoss { r, r_norm_sq })
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.r.len() {
            return Err(LossError::Dimension {
                expected: self.r.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn reference(&self) -> &[f64] {
        &self.r
    }

    /// f(x) = ½‖x − (⟨x,r⟩/‖r‖²)·r‖².
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let tau = dot(x, &self.r) / self.r_norm_sq;
        let v = x
            .iter()
            .zip(&self.r)
            .map(|(xi, ri)| {
                let d = xi - tau * ri;
                d * d
            })
            .sum::<f64>();
        Ok(0.5 * v)
    }

    /// ∇f(x) = x − (⟨x,r⟩/‖r‖²)·r, the residual of projecting x onto the ray.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let tau = dot(x, &self.r) / self.r_norm_sq;
        Ok(x.iter().zip(&self.r).map(|(xi, ri)| xi - tau * ri).collect())
    }

    /// Exact minimizer of γ ↦ f(x − γ·d) clamped to [0, gamma_max].
    ///
    /// The objective is a parabola in γ; its vertex is
    /// (‖r‖²⟨x,d⟩ − ⟨d,r⟩⟨x,r⟩) / (‖d‖²‖r‖² − ⟨d,r⟩²). A vanishing
    /// denominator means d is parallel to the ray, where f is constant
    /// along d; the full step is returned so the solver can still drop
    /// atoms in that case.
    pub fn step_size(&self, x: &[f64], d: &[f64], gamma_max: f64) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(d)?;
        let dd = norm_sq(d);
        let dr = dot(d, &self.r);
        let denom = dd * self.r_norm_sq - dr * dr;
        if denom <= FLAT_DENOM_TOL * dd * self.r_norm_sq {
            return Ok(gamma_max);
        }
        let xd = dot(x, d);
        let xr = dot(x, &self.r);
        let gamma = (self.r_norm_sq * xd - dr * xr) / denom;
        Ok(gamma.max(0.0).min(gamma_max))
    }
}

/// Poisson negative log-likelihood of node in-flows (constants dropped).
#[derive(Debug, Clone)]
pub struct PoissonLoss {
    edge_heads: Vec<usize>,
    node_targets: Vec<f64>,
    node_count: usize,
    source: usize,
}

impl PoissonLoss {
    pub fn new(g: &FlowGraph, r: &PseudoFlow) -> Result<Self> {
        if r.len() != g.edge_count() {
            return Err(LossError::Dimension {
                expected: g.edge_count(),
                got: r.len(),
            });
        }
        let edge_heads: Vec<usize> = g.edges().iter().map(|&(_, h)| h).collect();
        let mut node_targets = vec![0.0; g.node_count()];
        for (e, &h) in edge_heads.iter().enumerate() {
            node_targets[h] += r.values()[e];
        }
        Ok(PoissonLoss {
            edge_heads,
            node_targets,
            node_count: g.node_count(),
            source: g.source(),
        })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.edge_heads.len() {
            return Err(LossError::Dimension {
                expected: self.edge_heads.len(),
                got: x.len(),
            });
        }
        for (index, &value) in x.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(LossError::NegativeFlow { index, value });
            }
        }
        Ok(())
    }

    /// Per-node in-flow targets R_u computed from the reference.
    pub fn node_targets(&self) -> &[f64] {
        &self.node_targets
    }

    /// Per-node in-flows X_u of an edge vector.
    pub fn node_inflows(&self, x: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.node_count];
        for (e, &h) in self.edge_heads.iter().enumerate() {
            sums[h] += x[e];
        }
        sums
    }

    /// f(x) = Σ_{u ≠ source} X_u − R_u·log(max(X_u, ε)).
    ///
    /// Nodes with R_u = 0 contribute only the linear term, so empty in-flow
    /// there is free rather than infinitely penalized.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    /// ∂f/∂x_e = 1 − R_h / max(X_h, ε) where h is the head of edge e.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let sums = self.node_inflows(x);
        Ok(self
            .edge_heads
            .iter()
            .map(|&h| {
                if self.node_targets[h] > 0.0 {
                    1.0 - self.node_targets[h] / sums[h].max(DOMAIN_EPSILON)
                } else {
                    1.0
                }
            })
            .collect())
    }

    /// Approximate minimizer of γ ↦ f(x − γ·d) over [0, γ_safe] by
    /// golden-section search, where γ_safe shrinks gamma_max just enough to
    /// keep the trial point componentwise nonnegative.
    ///
    /// The returned step never increases the objective: γ = 0 is always a
    /// candidate, and the feasible endpoint is snapped to exactly when it is
    /// the best point seen (so full pairwise steps still drop atoms).
    pub fn line_search(&self, x: &[f64], d: &[f64], gamma_max: f64) -> Result<f64> {
        self.check(x)?;
        if d.len() != x.len() {
            return Err(LossError::Dimension {
                expected: x.len(),
                got: d.len(),
            });
        }
        if d.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }

        // Largest step keeping x − γ·d ≥ 0. Moving past it is never useful
        // (the objective is +∞ flavored there), so shrink by 1% for safety
        // when the cap binds before gamma_max.
        let mut feas = f64::INFINITY;
        for (xi, di) in x.iter().zip(d) {
            if *di > 0.0 {
                feas = feas.min(xi / di);
            }
        }
        let hi = if gamma_max <= feas {
            gamma_max
        } else {
            0.99 * feas
        };
        if hi <= 0.0 {
            return Ok(0.0);
        }

        let mut trial = vec![0.0; x.len()];
        let mut eval = |gamma: f64| -> f64 {
            for i in 0..x.len() {
                // Clamp rounding noise; the cap above keeps true trials ≥ 0.
                trial[i] = (x[i] - gamma * d[i]).max(0.0);
            }
            self.value_unchecked(&trial)
        };

        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let inv_phi2 = 1.0 - inv_phi;
        let (mut a, mut b) = (0.0, hi);
        let mut c = a + inv_phi2 * (b - a);
        let mut m = a + inv_phi * (b - a);
        let mut fc = eval(c);
        let mut fm = eval(m);
        for _ in 0..GOLDEN_ITERS {
            if b - a <= 1e-12 * hi.max(1.0) {
                break;
            }
            if fc < fm {
                b = m;
                m = c;
                fm = fc;
                c = a + inv_phi2 * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = m;
                fc = fm;
                m = a + inv_phi * (b - a);
                fm = eval(m);
            }
        }
        let mid = 0.5 * (a + b);
        let f_mid = eval(mid);
        let f_zero = eval(0.0);
        let f_hi = eval(hi);
        // Endpoint preferences: the feasible cap on ties (sparser active
        // sets), zero over the interior on ties (stationary points).
        if f_hi <= f_mid && f_hi <= f_zero {
            Ok(hi)
        } else if f_mid < f_zero {
            Ok(mid)
        } else {
            Ok(0.0)
        }
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        let sums = self.node_inflows(x);
        let mut total = 0.0;
        for (u, (&sum, &target)) in sums.iter().zip(&self.node_targets).enumerate() {
            if u == self.source {
                continue;
            }
            total += sum;
            if target > 0.0 {
                total -= target * sum.max(DOMAIN_EPSILON).ln();
            }
        }
        total
    }
}
