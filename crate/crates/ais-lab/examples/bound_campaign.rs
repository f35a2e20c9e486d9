//! Machine-check the approximation bound on random instances: for each
//! (MDP, partition, IPM) triple the exact optimality gap of the flattened
//! greedy policy must sit under 2 (eps + gamma delta kappa) / (1 - gamma),
//! and under the per-IPM corollary right-hand side.
//!
//! Run with: cargo run --release --example bound_campaign

use ais_lab::ais::{quantizer_ais, QuantizerWeights};
use ais_lab::ais_dp::{bound_report, run_bound_campaign, BoundConfig, CampaignConfig};
use ais_lab::ipm::IpmChoice;
use ais_lab::mdp::toy_mdp;

fn main() {
    // One instance in detail: the toy MDP with states 1 and 2 aliased.
    let mdp = toy_mdp(100.0, 0.95);
    let gen = quantizer_ais(&mdp, &[0, 1, 1, 0], QuantizerWeights::Uniform).unwrap();
    println!("toy MDP, two-feature aliasing quantizer:");
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>12} {:>12} {:>12}",
        "ipm", "eps", "delta", "kappa", "gap", "thm rhs", "cor rhs"
    );
    for ipm in [IpmChoice::Tv, IpmChoice::Wasserstein, IpmChoice::Mmd] {
        let r = bound_report(&mdp, &gen, &BoundConfig::new(ipm), 0).unwrap();
        println!(
            "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>12.4} {:>12.4} {:>12.4}",
            r.ipm,
            r.eps,
            r.delta,
            r.kappa,
            r.delta_gap,
            r.thm1_rhs,
            r.cor_rhs.unwrap_or(f64::NAN)
        );
        assert!(!r.violated);
    }

    // A campaign over random instances.
    let campaign = CampaignConfig {
        instances: 100,
        seed: 7,
        ..Default::default()
    };
    let outcome = run_bound_campaign(&campaign).unwrap();
    let n = outcome.reports.len();
    let violations = outcome.reports.iter().filter(|r| r.violated).count();
    let tightest = outcome
        .reports
        .iter()
        .filter(|r| r.thm1_rhs > 1e-9)
        .map(|r| r.delta_gap / r.thm1_rhs)
        .fold(0.0f64, f64::max);
    println!("\ncampaign: {n} reports, {violations} violations");
    println!("tightest gap/bound ratio observed: {tightest:.4}");
    assert_eq!(violations, 0);
}
