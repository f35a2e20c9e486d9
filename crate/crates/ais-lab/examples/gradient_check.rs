//! Finite-difference verification of the reverse-mode engine on the
//! shapes the agents use: an MLP, a five-step GRU unroll, and the full
//! lambda-weighted generator loss in each IPM variant.
//!
//! Run with: cargo run --release --example gradient_check

use ais_lab::ais::{ais_loss, AisConfig, LossIpm, NeuralAisGenerator};
use ais_lab::mdp::{sample_trajectory, toy_mdp, StationaryPolicy};
use ais_lab::nn::{finite_difference, max_rel_error, GruShape, MlpShape, Tape, Var};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // MLP.
    let mlp = MlpShape::new(vec![3, 8, 2]);
    let params = mlp.init(&mut rng);
    let x = [0.2, -0.7, 0.4];
    let loss = |p: &[f64]| {
        let mut tape = Tape::new();
        let pv = tape.leaves(p);
        let xv = tape.leaves(&x);
        let out = mlp.forward(&mut tape, &pv, &xv);
        let sq: Vec<Var> = out.iter().map(|&o| tape.sqr(o)).collect();
        let l = tape.sum(&sq);
        tape.value(l)
    };
    let analytic = {
        let mut tape = Tape::new();
        let pv = tape.leaves(&params);
        let xv = tape.leaves(&x);
        let out = mlp.forward(&mut tape, &pv, &xv);
        let sq: Vec<Var> = out.iter().map(|&o| tape.sqr(o)).collect();
        let l = tape.sum(&sq);
        tape.backward(l).grads(&pv)
    };
    let err = max_rel_error(&analytic, &finite_difference(loss, &params));
    println!("mlp forward/backward      max relative error {err:.2e}");

    // GRU unrolled five steps.
    let gru = GruShape::new(2, 4);
    let gparams = gru.init(&mut rng);
    let inputs: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let gloss = |p: &[f64]| {
        let mut tape = Tape::new();
        let pv = tape.leaves(p);
        let mut z = gru.zero_state(&mut tape);
        for xin in &inputs {
            let xv = tape.leaves(xin);
            z = gru.step(&mut tape, &pv, &z, &xv);
        }
        let sq: Vec<Var> = z.iter().map(|&o| tape.sqr(o)).collect();
        let l = tape.sum(&sq);
        tape.value(l)
    };
    let analytic = {
        let mut tape = Tape::new();
        let pv = tape.leaves(&gparams);
        let mut z = gru.zero_state(&mut tape);
        for xin in &inputs {
            let xv = tape.leaves(xin);
            z = gru.step(&mut tape, &pv, &z, &xv);
        }
        let sq: Vec<Var> = z.iter().map(|&o| tape.sqr(o)).collect();
        let l = tape.sum(&sq);
        tape.backward(l).grads(&pv)
    };
    let err = max_rel_error(&analytic, &finite_difference(gloss, &gparams));
    println!("gru five-step unroll      max relative error {err:.2e}");

    // Generator loss, all variants.
    let mdp = toy_mdp(10.0, 0.9);
    let gen = NeuralAisGenerator::tabular(4, 3, 3, &mut rng);
    let pi = StationaryPolicy::uniform(4, 3);
    let batch = vec![sample_trajectory(&mdp, &pi, 1, 4, &mut rng).unwrap()];
    for variant in [LossIpm::Mmd, LossIpm::Kl, LossIpm::Tv] {
        let cfg = AisConfig::new(0.3, variant, 3, 4).unwrap();
        let mut tape = Tape::new();
        let pv = gen.param_leaves(&mut tape);
        let parts = ais_loss(&mut tape, &gen, &pv, &batch, &cfg).unwrap();
        let analytic = tape.backward(parts.total).grads(&pv);
        let numeric = finite_difference(
            |p| {
                let mut g = gen.clone();
                g.params = p.to_vec();
                let mut tape = Tape::new();
                let pv = g.param_leaves(&mut tape);
                let parts = ais_loss(&mut tape, &g, &pv, &batch, &cfg).unwrap();
                tape.value(parts.total)
            },
            &gen.params,
        );
        let err = max_rel_error(&analytic, &numeric);
        println!("generator loss ({variant:?})   max relative error {err:.2e}");
    }
}
