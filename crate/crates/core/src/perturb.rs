//! Seeded noise models that turn an exact flow into a pseudo-flow.
//!
//! Each edge draws from its own ChaCha8 stream (base seed, stream = edge
//! index), so results are independent of edge evaluation order and bitwise
//! reproducible across platforms. Poisson noise replaces rₑ with a draw
//! from Poisson(rₑ); binomial noise draws from Binomial(2·round(rₑ), ½),
//! which has mean round(rₑ) and variance round(rₑ)/2.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphError, PseudoFlow};

pub type Result<T> = std::result::Result<T, GraphError>;

/// Uniform draw in [0, 1) with 53 random bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// ln(k!) — exact summation up to 20!, a four-term Stirling series above.
fn ln_factorial(k: u64) -> f64 {
    if k <= 20 {
        let mut acc = 0.0;
        for i in 2..=k {
            acc += (i as f64).ln();
        }
        return acc;
    }
    let n = k as f64;
    let n2 = n * n;
    (n + 0.5) * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + 1.0 / (12.0 * n)
        - 1.0 / (360.0 * n * n2)
        + 1.0 / (1260.0 * n2 * n2 * n)
}

/// Poisson(λ) by sequential inversion. Suitable for small λ: expected work
/// is O(λ).
fn poisson_inversion(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let u = uniform(rng);
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
        // Guard against fp stall in the extreme tail.
        if p < 1e-300 && u > cdf {
            return k;
        }
    }
    k
}

/// Poisson(λ) by transformed rejection with squeeze (PTRS). Constant
/// expected work for λ ≥ 10; used here for λ ≥ 30.
fn poisson_ptrs(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = uniform(rng) - 0.5;
        let v = uniform(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = -lambda + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

fn poisson_draw(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        0
    } else if lambda < 30.0 {
        poisson_inversion(rng, lambda)
    } else {
        poisson_ptrs(rng, lambda)
    }
}

/// Binomial(n, ½) as a popcount of n fair bits.
fn binomial_half(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    let mut total = 0u64;
    let mut remaining = n;
    while remaining >= 64 {
        total += rng.next_u64().count_ones() as u64;
        remaining -= 64;
    }
    if remaining > 0 {
        let mask = (1u64 << remaining) - 1;
        total += (rng.next_u64() & mask).count_ones() as u64;
    }
    total
}

fn per_edge_rng(seed: u64, edge: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(edge as u64);
    rng
}

/// Replaces each edge value rₑ with a Poisson(rₑ) draw. Zero edges stay
/// zero. The result is integer-valued but generally not a balanced flow.
pub fn perturb_poisson(flow: &PseudoFlow, seed: u64) -> Result<PseudoFlow> {
    let values = flow
        .values()
        .iter()
        .enumerate()
        .map(|(e, &r)| poisson_draw(&mut per_edge_rng(seed, e), r) as f64)
        .collect();
    PseudoFlow::new(values)
}

/// Replaces each edge value rₑ with a Binomial(2·round(rₑ), ½) draw, which
/// keeps the mean at round(rₑ) with variance round(rₑ)/2.
pub fn perturb_binomial(flow: &PseudoFlow, seed: u64) -> Result<PseudoFlow> {
    let values = flow
        .values()
        .iter()
        .enumerate()
        .map(|(e, &r)| {
            let n = 2 * r.round_ties_even() as u64;
            binomial_half(&mut per_edge_rng(seed, e), n) as f64
        })
        .collect();
    PseudoFlow::new(values)
}
