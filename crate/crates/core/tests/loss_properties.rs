//! Property checks for the loss implementations: gradients against finite
//! differences, line searches against grid scans, convexity along segments.

use flowdec::synth::{synth_instance, SynthConfig};
use flowdec::{LeastSquaresLoss, PoissonLoss, PseudoFlow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(seed: u64) -> SynthConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5f5f);
    SynthConfig {
        node_count: rng.gen_range(4..12),
        edge_target: rng.gen_range(6..20),
        path_count: rng.gen_range(1..5),
        max_weight: 6,
    }
}

/// Strictly positive random point, safely inside the Poisson domain.
fn interior_point(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.1..4.0)).collect()
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[i] += h;
            lo[i] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        })
        .collect()
}

fn assert_gradients_close(analytic: &[f64], numeric: &[f64], context: &str) {
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let scale = a.abs().max(n.abs()).max(1.0);
        assert!(
            (a - n).abs() <= 1e-6 * scale,
            "{context}: coordinate {i}: analytic {a}, numeric {n}"
        );
    }
}

#[test]
fn ls_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for seed in 0..30 {
        let inst = synth_instance(&config(seed), seed);
        let loss = LeastSquaresLoss::new(&inst.flow).unwrap();
        let x = interior_point(inst.flow.len(), &mut rng);
        let analytic = loss.gradient(&x).unwrap();
        let numeric = central_difference(|p| loss.value(p).unwrap(), &x, 1e-5);
        assert_gradients_close(&analytic, &numeric, &format!("seed {seed}"));
    }
}

#[test]
fn poisson_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for seed in 0..30 {
        let inst = synth_instance(&config(seed), seed);
        let loss = PoissonLoss::new(&inst.graph, &inst.flow).unwrap();
        let x = interior_point(inst.flow.len(), &mut rng);
        let analytic = loss.gradient(&x).unwrap();
        let numeric = central_difference(|p| loss.value(p).unwrap(), &x, 1e-5);
        assert_gradients_close(&analytic, &numeric, &format!("seed {seed}"));
    }
}

#[test]
fn ls_value_is_homogeneous_of_degree_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let inst = synth_instance(&config(0), 0);
    let loss = LeastSquaresLoss::new(&inst.flow).unwrap();
    for _ in 0..100 {
        let x = interior_point(inst.flow.len(), &mut rng);
        let c: f64 = rng.gen_range(0.1..10.0);
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let f = loss.value(&x).unwrap();
        let fc = loss.value(&scaled).unwrap();
        assert!(
            (fc - c * c * f).abs() <= 1e-9 * (1.0 + fc.abs()),
            "f(cx) = {fc}, c²f(x) = {}",
            c * c * f
        );
    }
}

#[test]
fn ls_value_is_zero_exactly_on_the_reference_ray() {
    let inst = synth_instance(&config(1), 1);
    let loss = LeastSquaresLoss::new(&inst.flow).unwrap();
    for c in [0.25, 1.0, 3.5] {
        let x: Vec<f64> = inst.flow.values().iter().map(|v| c * v).collect();
        assert!(loss.value(&x).unwrap() <= 1e-18);
    }
}

#[test]
fn ls_step_size_is_the_segment_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for seed in 0..20 {
        let inst = synth_instance(&config(seed), seed);
        let loss = LeastSquaresLoss::new(&inst.flow).unwrap();
        for _ in 0..50 {
            let x = interior_point(inst.flow.len(), &mut rng);
            let d: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let gamma_max = rng.gen_range(0.1..2.0);
            let gamma = loss.step_size(&x, &d, gamma_max).unwrap();
            assert!((0.0..=gamma_max).contains(&gamma));
            let at = |t: f64| {
                let p: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - t * b).collect();
                loss.value(&p).unwrap()
            };
            let f_star = at(gamma);
            // No grid point does meaningfully better.
            for k in 0..=200 {
                let t = gamma_max * k as f64 / 200.0;
                assert!(
                    f_star <= at(t) + 1e-9,
                    "step {gamma} beaten at t={t}: {f_star} > {}",
                    at(t)
                );
            }
        }
    }
}

#[test]
fn poisson_line_search_beats_a_grid_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for seed in 0..20 {
        let inst = synth_instance(&config(seed), seed);
        let loss = PoissonLoss::new(&inst.graph, &inst.flow).unwrap();
        for _ in 0..20 {
            let x = interior_point(inst.flow.len(), &mut rng);
            let d: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let gamma_max = 1.0;
            let gamma = loss.line_search(&x, &d, gamma_max).unwrap();
            assert!((0.0..=gamma_max).contains(&gamma));
            let point = |t: f64| -> Vec<f64> {
                x.iter().zip(&d).map(|(a, b)| (a - t * b).max(0.0)).collect()
            };
            let f_star = loss.value(&point(gamma)).unwrap();
            let f_zero = loss.value(&x).unwrap();
            // Never worse than staying put.
            assert!(f_star <= f_zero + 1e-12);
            // Within a loose tolerance of the best grid value over the
            // feasibility-capped interval the search itself explores.
            let feas = x
                .iter()
                .zip(&d)
                .filter(|(_, &de)| de > 0.0)
                .map(|(&xe, &de)| xe / de)
                .fold(f64::INFINITY, f64::min);
            let hi = if gamma_max <= feas { gamma_max } else { 0.99 * feas };
            let mut best = f_zero;
            for k in 0..=100 {
                let t = hi * k as f64 / 100.0;
                best = best.min(loss.value(&point(t)).unwrap());
            }
            assert!(
                f_star <= best + 1e-6 * (1.0 + best.abs()),
                "line search {f_star} vs grid best {best}"
            );
        }
    }
}

#[test]
fn poisson_value_is_convex_along_segments() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let inst = synth_instance(&config(2), 2);
    let loss = PoissonLoss::new(&inst.graph, &inst.flow).unwrap();
    for _ in 0..200 {
        let a = interior_point(inst.flow.len(), &mut rng);
        let b = interior_point(inst.flow.len(), &mut rng);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let fa = loss.value(&a).unwrap();
        let fb = loss.value(&b).unwrap();
        let fm = loss.value(&mid).unwrap();
        assert!(fm <= 0.5 * (fa + fb) + 1e-9 * (1.0 + fa.abs() + fb.abs()));
    }
}

#[test]
fn poisson_inflows_accumulate_by_head() {
    let inst = synth_instance(&config(3), 3);
    let loss = PoissonLoss::new(&inst.graph, &inst.flow).unwrap();
    let x: Vec<f64> = (0..inst.flow.len()).map(|e| e as f64 + 0.5).collect();
    let inflows = loss.node_inflows(&x);
    for (u, &inflow) in inflows.iter().enumerate() {
        let expected: f64 = inst.graph.in_edges(u).iter().map(|&e| x[e]).sum();
        assert_eq!(inflow, expected);
    }
    // Targets are the reference inflows.
    assert_eq!(loss.node_targets(), loss.node_inflows(inst.flow.values()));
}

#[test]
fn zero_reference_is_rejected() {
    let zero = PseudoFlow::new(vec![0.0; 7]).unwrap();
    assert!(LeastSquaresLoss::new(&zero).is_err());
}
