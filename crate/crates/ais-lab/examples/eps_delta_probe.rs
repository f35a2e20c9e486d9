//! Exact and sampled (epsilon, delta) for abstractions of the toy MDP:
//! the identity map is a perfect information state, quantizers pay for
//! what they alias, and the empirical probe tracks the exact numbers.
//!
//! Run with: cargo run --release --example eps_delta_probe

use ais_lab::ais::{
    measure_eps_delta, measure_eps_delta_empirical, quantizer_ais, QuantizerWeights,
    TabularAisGenerator,
};
use ais_lab::ipm::{IpmChoice, KernelSpec, MetricSpec};
use ais_lab::mdp::toy_mdp;

fn main() {
    let mdp = toy_mdp(100.0, 0.95);
    let starts = [0, 1, 2, 3];
    let metric = MetricSpec::Discrete;
    let kernel = KernelSpec::Energy { exponent: 1.0 };

    let abstractions: Vec<(&str, TabularAisGenerator)> = vec![
        ("identity", TabularAisGenerator::identity(&mdp)),
        (
            "alias {0,3} | {1,2}",
            quantizer_ais(&mdp, &[0, 1, 1, 0], QuantizerWeights::Uniform).unwrap(),
        ),
        (
            "alias {0,1} | {2,3}",
            quantizer_ais(&mdp, &[0, 0, 1, 1], QuantizerWeights::Uniform).unwrap(),
        ),
        (
            "single class",
            quantizer_ais(&mdp, &[0, 0, 0, 0], QuantizerWeights::Uniform).unwrap(),
        ),
    ];

    println!(
        "{:<22} {:>10} {:>10} {:>10} {:>10}",
        "abstraction", "eps", "delta_tv", "delta_w", "delta_mmd"
    );
    for (name, gen) in &abstractions {
        let (eps, d_tv) =
            measure_eps_delta(&mdp, gen, &starts, IpmChoice::Tv, &metric, &kernel).unwrap();
        let (_, d_w) =
            measure_eps_delta(&mdp, gen, &starts, IpmChoice::Wasserstein, &metric, &kernel)
                .unwrap();
        let (_, d_mmd) =
            measure_eps_delta(&mdp, gen, &starts, IpmChoice::Mmd, &metric, &kernel).unwrap();
        println!("{name:<22} {eps:>10.4} {d_tv:>10.4} {d_w:>10.4} {d_mmd:>10.4}");
    }

    // The sampled probe on the identity abstraction: reward error is
    // exactly zero, and the transition U-statistic concentrates near zero
    // because model and environment distributions coincide.
    let gen = TabularAisGenerator::identity(&mdp);
    for n_rollouts in [5usize, 50, 200] {
        let probe = measure_eps_delta_empirical(&mdp, &gen, n_rollouts, 50, 0).unwrap();
        println!(
            "\nidentity probe, {n_rollouts:3} rollouts x 50 steps: eps_hat {:.4}, delta_hat {:.4} ({} bins, {} skipped)",
            probe.eps_hat,
            probe.delta_hat,
            probe.bin_counts.len(),
            probe.bins_skipped
        );
    }
}
