//! Shared fixtures for the criterion benchmarks; run them with
//! `cargo bench -p flowdec-bench`.

use flowdec::synth::{synth_instance, SynthConfig, SynthInstance};

/// Mid-sized instance, comfortably above the bundled suite's edge counts.
pub fn mid_instance() -> SynthInstance {
    synth_instance(
        &SynthConfig {
            node_count: 40,
            edge_target: 120,
            path_count: 12,
            max_weight: 9,
        },
        4242,
    )
}
