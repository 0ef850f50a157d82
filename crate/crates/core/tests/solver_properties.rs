//! End-to-end solver invariants on synthetic instances: feasibility,
//! monotone progress, gap certificates, early termination, determinism.

use flowdec::oracle::reference_ls_optimum;
use flowdec::perturb::perturb_poisson;
use flowdec::synth::{synth_instance, SynthConfig};
use flowdec::{
    cyclomatic_bound, exact_match, integral_decomposition, solve, SolverConfig, Termination,
};

const SMALL: SynthConfig = SynthConfig {
    node_count: 10,
    edge_target: 18,
    path_count: 4,
    max_weight: 5,
};

fn assert_feasible_ls(set: &flowdec::ActiveSet) {
    let sum: f64 = set.weights().iter().sum();
    assert!((sum - 1.0).abs() <= 1e-9, "weights sum to {sum}");
    assert!(set.weights().iter().all(|&w| w > 0.0));
    for &v in set.iterate() {
        assert!((-1e-12..=1.0 + 1e-12).contains(&v), "iterate entry {v}");
    }
    assert!(set.drift() <= 1e-9);
}

#[test]
fn ls_solves_noiseless_instances_to_near_zero() {
    for seed in 0..30 {
        let inst = synth_instance(&SMALL, seed);
        let (set, report) = solve(&inst.graph, &inst.flow, &SolverConfig::least_squares()).unwrap();
        let final_primal = *report.primal_trace.last().unwrap();
        assert!(
            final_primal <= 1e-9,
            "seed {seed}: primal {final_primal} after {} iterations ({})",
            report.iterations,
            report.termination
        );
        assert_feasible_ls(&set);
        assert_eq!(report.final_active_set_size, set.len());
    }
}

#[test]
fn ls_primal_trace_never_increases() {
    for seed in 0..20 {
        let inst = synth_instance(&SMALL, seed);
        let r = perturb_poisson(&inst.flow, seed).unwrap();
        if r.values().iter().all(|&v| v == 0.0) {
            continue;
        }
        let (_, report) = solve(&inst.graph, &r, &SolverConfig::least_squares()).unwrap();
        for w in report.primal_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "increase {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn gap_certifies_primal_optimality() {
    // Convexity gives f(x_t) − f* ≤ gap_t; the oracle value is ≥ f*, so it
    // must also sit under every certificate.
    for seed in 0..15 {
        let inst = synth_instance(&SMALL, seed);
        let r = perturb_poisson(&inst.flow, seed ^ 0xabc).unwrap();
        if r.values().iter().all(|&v| v == 0.0) {
            continue;
        }
        let (_, report) = solve(&inst.graph, &r, &SolverConfig::least_squares()).unwrap();
        let f_ref = reference_ls_optimum(&inst.graph, &r, 1_000_000).unwrap();
        for (t, &gap) in report.gap_trace.iter().enumerate() {
            let primal = report.primal_trace[t];
            assert!(
                primal - f_ref <= gap + 1e-9,
                "seed {seed}, iteration {t}: primal {primal}, reference {f_ref}, gap {gap}"
            );
        }
        let final_primal = *report.primal_trace.last().unwrap();
        assert!(
            final_primal <= f_ref + 1e-7,
            "seed {seed}: primal {final_primal} vs reference {f_ref}"
        );
    }
}

#[test]
fn integral_mode_recovers_exact_decompositions() {
    for seed in 0..30 {
        let inst = synth_instance(&SMALL, seed);
        let (set, report) =
            solve(&inst.graph, &inst.flow, &SolverConfig::least_squares_integral()).unwrap();
        assert_eq!(report.termination, Termination::EarlyExactMatch, "seed {seed}");
        let d = integral_decomposition(&set, &inst.flow).unwrap();
        assert!(exact_match(&d, &inst.flow).unwrap());
        assert_eq!(d.reconstruction(), inst.flow.values());
        assert!(d.weights().iter().all(|&w| w.fract() == 0.0 && w >= 1.0));
        assert!(
            d.len() <= cyclomatic_bound(&inst.graph),
            "seed {seed}: {} paths vs bound {}",
            d.len(),
            cyclomatic_bound(&inst.graph)
        );
    }
}

#[test]
fn poisson_trace_is_monotone_and_set_stays_normalized() {
    for seed in 0..15 {
        let inst = synth_instance(&SMALL, seed);
        let r = perturb_poisson(&inst.flow, seed ^ 0x77).unwrap();
        if r.source_outflow(&inst.graph).unwrap() == 0.0 {
            continue;
        }
        let (set, report) = solve(&inst.graph, &r, &SolverConfig::poisson()).unwrap();
        for w in report.primal_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "increase {} -> {}", w[0], w[1]);
        }
        let sum: f64 = set.weights().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
        assert!(set.iterate().iter().all(|&v| v >= -1e-12));
    }
}

#[test]
fn solver_is_deterministic() {
    let inst = synth_instance(&SMALL, 5);
    let r = perturb_poisson(&inst.flow, 123).unwrap();
    let (set_a, rep_a) = solve(&inst.graph, &r, &SolverConfig::least_squares()).unwrap();
    let (set_b, rep_b) = solve(&inst.graph, &r, &SolverConfig::least_squares()).unwrap();
    assert_eq!(rep_a.primal_trace, rep_b.primal_trace);
    assert_eq!(rep_a.gap_trace, rep_b.gap_trace);
    assert_eq!(rep_a.iterations, rep_b.iterations);
    assert_eq!(set_a.iterate(), set_b.iterate());
    assert_eq!(set_a.weights(), set_b.weights());
}

#[test]
fn trace_lengths_follow_the_termination_kind() {
    let inst = synth_instance(&SMALL, 8);
    let (_, report) = solve(&inst.graph, &inst.flow, &SolverConfig::least_squares()).unwrap();
    match report.termination {
        Termination::GapConverged => {
            assert_eq!(report.gap_trace.len(), report.iterations + 1);
        }
        Termination::IterationLimit | Termination::TimeLimit => {
            assert_eq!(report.gap_trace.len(), report.iterations);
        }
        Termination::EarlyExactMatch => unreachable!("early termination is off"),
    }
    assert_eq!(report.primal_trace.len(), report.iterations + 1);

    let mut capped = SolverConfig::least_squares();
    capped.max_iterations = 1;
    capped.gap_tolerance = 0.0;
    let noisy = perturb_poisson(&inst.flow, 9).unwrap();
    let (_, report) = solve(&inst.graph, &noisy, &capped).unwrap();
    assert_eq!(report.termination, Termination::IterationLimit);
    assert_eq!(report.iterations, 1);
    assert_eq!(report.primal_trace.len(), 2);
    assert_eq!(report.gap_trace.len(), 1);
}

#[test]
fn tiny_time_limit_stops_the_solver() {
    let inst = synth_instance(&SMALL, 11);
    let noisy = perturb_poisson(&inst.flow, 2).unwrap();
    let mut config = SolverConfig::least_squares();
    config.time_limit_seconds = 1e-9;
    config.gap_tolerance = 0.0;
    let (_, report) = solve(&inst.graph, &noisy, &config).unwrap();
    assert_eq!(report.termination, Termination::TimeLimit);
    assert!(report.wall_time_seconds < 1.0);
}

#[test]
fn wider_instances_stay_within_the_sparsity_bound_after_rounding() {
    // Bigger graphs with several planted paths: integral mode must still
    // finish with an exact match and a support within the general bound.
    let config = SynthConfig {
        node_count: 20,
        edge_target: 40,
        path_count: 6,
        max_weight: 9,
    };
    for seed in 100..110 {
        let inst = synth_instance(&config, seed);
        let (set, report) =
            solve(&inst.graph, &inst.flow, &SolverConfig::least_squares_integral()).unwrap();
        assert_eq!(report.termination, Termination::EarlyExactMatch, "seed {seed}");
        let d = integral_decomposition(&set, &inst.flow).unwrap();
        assert!(exact_match(&d, &inst.flow).unwrap());
        assert!(d.len() <= cyclomatic_bound(&inst.graph));
    }
}
