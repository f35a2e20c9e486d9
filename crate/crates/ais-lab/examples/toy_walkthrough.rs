//! The four-state avoid-the-trap MDP end to end: exact optimal policy,
//! the codebook finite-state-machine policy that matches it from history
//! alone, and the failure boundary of two-feature memoryless policies.
//!
//! Run with: cargo run --release --example toy_walkthrough

use ais_lab::ais::{quantizer_ais, QuantizerWeights};
use ais_lab::mdp::{
    argmax_lowest, codebook_fsm_policy, product_chain_value, sample_index, toy_mdp,
    value_iteration, HistoryPolicy, StationaryPolicy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mdp = toy_mdp(100.0, 0.95);
    let vi = value_iteration(&mdp, 1e-12).unwrap();
    let greedy = vi.pi_star.greedy_actions();
    println!("optimal policy : {greedy:?}   (forward, forward, backward, both-ways)");
    println!(
        "optimal values : [{:.3}, {:.3}, {:.3}, {:.3}]",
        vi.v_star[0], vi.v_star[1], vi.v_star[2], vi.v_star[3]
    );

    // The codebook FSM tracks the true state exactly from a known start,
    // so its emitted actions coincide with the optimal policy's.
    let fsm = codebook_fsm_policy(vi.pi_star.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = 2usize;
    let mut mem = fsm.init(s);
    let mut matches = 0;
    let steps = 5000;
    for _ in 0..steps {
        let a = argmax_lowest(&fsm.act(&mem));
        if a == greedy[s] {
            matches += 1;
        }
        let s_next = sample_index(mdp.transition_row(s, a), &mut rng);
        mem = fsm.step(&mem, a, s_next).unwrap();
        s = s_next;
    }
    println!("fsm policy     : matched pi*(true state) on {matches}/{steps} steps from start 2");

    // Memoryless two-feature policies: the aliasing of states 1 and 2 is
    // what makes the example bind.
    println!("\ntwo-feature memoryless policies, best value at state 2 (v*(2) = {:.3}):", vi.v_star[2]);
    for partition in ais_lab::cli::two_class_partitions(4) {
        let gen = quantizer_ais(&mdp, &partition, QuantizerWeights::Uniform).unwrap();
        let mut best = f64::NEG_INFINITY;
        for a0 in 0..3 {
            for a1 in 0..3 {
                let mu = StationaryPolicy::deterministic(&[a0, a1], 3);
                let value = product_chain_value(&mdp, &gen, &mu, &[0, 1, 2, 3]).unwrap();
                best = best.max(value.get(2, partition[2]).unwrap());
            }
        }
        let tag = if partition[1] == partition[2] {
            "states 1,2 aliased -> capped"
        } else {
            "states 1,2 separated -> can match the optimum"
        };
        println!("  partition {partition:?}: best v(2) = {best:8.3}   [{tag}]");
    }
}
