//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`). Every tolerance is pinned
//! here.

use std::time::Instant;

use ais_lab::ais::{
    ais_loss, quantizer_ais, AisConfig, LossIpm, NeuralAisGenerator,
    QuantizerWeights, TabularAisGenerator,
};
use ais_lab::ais_dp::{bound_report, run_bound_campaign, BoundConfig, CampaignConfig};
use ais_lab::cli::{cmd_bounds, cmd_train, BoundsConfig, TrainCommandConfig};
use ais_lab::ipm::{
    distance_kernel, kl_and_pinsker, mmd_closed, mmd_mean_surrogate, mmd_u_statistic, tv_std,
    wasserstein_exact, Anchor, DiscreteDist, IpmChoice, KernelSpec, MetricSpec, PointSet,
};
use ais_lab::mdp::{
    codebook_fsm_policy, product_chain_value, random_mdp, standard_normal, toy_mdp,
    value_iteration, HistoryPolicy, StationaryPolicy,
};
use ais_lab::nn::{
    finite_difference, gaussian_log_prob, max_rel_error, GruShape, MlpShape, Tape, Var,
};
use ais_lab::train::{train_loop_tabular, validate_schedule, TabularAgentKind, TrainConfig};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOY_K: f64 = 100.0;
const TOY_GAMMA: f64 = 0.95;

struct Criterion {
    name: &'static str,
    budget_secs: f64,
    started: Instant,
}

impl Criterion {
    fn start(name: &'static str, budget_secs: f64) -> Self {
        Criterion {
            name,
            budget_secs,
            started: Instant::now(),
        }
    }

    fn finish(self) {
        let elapsed = self.started.elapsed().as_secs_f64();
        println!(
            "criterion {:<38} PASS ({elapsed:.2}s / budget {:.0}s)",
            self.name, self.budget_secs
        );
        assert!(
            elapsed < self.budget_secs,
            "{} exceeded its runtime budget: {elapsed:.2}s >= {:.0}s",
            self.name,
            self.budget_secs
        );
    }
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> DiscreteDist {
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0f64 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    DiscreteDist::new(v).unwrap()
}

#[test]
fn criterion_01_toy_mdp_optimality_exact() {
    let c = Criterion::start("01_toy_mdp_optimality", 1.0);
    let vi = value_iteration(&toy_mdp(TOY_K, TOY_GAMMA), 1e-10).unwrap();
    assert_eq!(vi.pi_star.greedy_actions(), vec![0, 0, 1, 2]);
    c.finish();
}

#[test]
fn criterion_02_codebook_equivalence_exact() {
    let c = Criterion::start("02_codebook_equivalence", 5.0);
    let mdp = toy_mdp(TOY_K, TOY_GAMMA);
    let vi = value_iteration(&mdp, 1e-10).unwrap();
    let greedy = vi.pi_star.greedy_actions();
    let fsm = codebook_fsm_policy(vi.pi_star.clone()).unwrap();

    // Exhaustive 12-step branch enumeration from each start.
    for start in [0usize, 1, 2] {
        let mut stack = vec![(start, fsm.init(start), 0usize)];
        while let Some((s, mem, depth)) = stack.pop() {
            let probs = fsm.act(&mem);
            let a = ais_lab::mdp::argmax_lowest(&probs);
            assert_eq!(a, greedy[s], "start {start}: fsm action != pi*({s})");
            if depth == 12 {
                continue;
            }
            for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    stack.push((sp, fsm.step(&mem, a, sp).unwrap(), depth + 1));
                }
            }
        }
    }

    // State 3 unreachable in the (state, memory) product chain, run to a
    // fixpoint rather than a fixed depth.
    for start in [0usize, 1, 2] {
        let mut seen = std::collections::BTreeSet::new();
        let init = fsm.init(start);
        seen.insert((start, init.fsm_memory, init.last_state));
        let mut stack = vec![(start, init)];
        while let Some((s, mem)) = stack.pop() {
            assert_ne!(s, 3, "state 3 reachable from start {start}");
            let a = ais_lab::mdp::argmax_lowest(&fsm.act(&mem));
            for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    let next = fsm.step(&mem, a, sp).unwrap();
                    if seen.insert((sp, next.fsm_memory, next.last_state)) {
                        stack.push((sp, next));
                    }
                }
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_03_memoryless_failure_exact() {
    let c = Criterion::start("03_memoryless_failure", 5.0);
    let mdp = toy_mdp(TOY_K, TOY_GAMMA);
    let vi = value_iteration(&mdp, 1e-12).unwrap();
    // The binding two-class partitions alias states 1 and 2; over each of
    // them every deterministic feature policy loses more than 10 at state
    // 2. (Partitions separating 1 from 2 admit an exactly-optimal policy,
    // so the criterion quantifies over the aliasing ones.)
    let partitions: Vec<Vec<usize>> = ais_lab::cli::two_class_partitions(4)
        .into_iter()
        .filter(|p| p[1] == p[2])
        .collect();
    assert_eq!(partitions.len(), 3);
    for partition in &partitions {
        let gen = quantizer_ais(&mdp, partition, QuantizerWeights::Uniform).unwrap();
        for a0 in 0..3 {
            for a1 in 0..3 {
                let mu = StationaryPolicy::deterministic(&[a0, a1], 3);
                let value = product_chain_value(&mdp, &gen, &mu, &[0, 1, 2, 3]).unwrap();
                let v2 = value.get(2, partition[2]).unwrap();
                assert!(
                    v2 <= vi.v_star[2] - 10.0,
                    "partition {partition:?} policy ({a0},{a1}): v2 = {v2} vs v*(2) = {}",
                    vi.v_star[2]
                );
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_04_theorem_campaign_zero_violations() {
    let c = Criterion::start("04_theorem_campaign", 120.0);
    let campaign = CampaignConfig {
        instances: 200,
        seed: 7,
        max_states: 8,
        max_actions: 4,
        ipms: vec![IpmChoice::Tv, IpmChoice::Wasserstein, IpmChoice::Mmd],
    };
    let outcome = run_bound_campaign(&campaign).unwrap();
    assert_eq!(outcome.reports.len(), 600);
    let violations: Vec<_> = outcome.reports.iter().filter(|r| r.violated).collect();
    assert!(
        violations.is_empty(),
        "bound violations: {:?}",
        violations
            .iter()
            .map(|r| (r.seed, r.ipm.clone()))
            .collect::<Vec<_>>()
    );
    for r in &outcome.reports {
        assert!(r.delta_gap <= r.thm1_rhs + 1e-9, "seed {}", r.seed);
        if let Some(cor) = r.cor_rhs {
            if r.ipm != "w" || r.l_f <= 1.0 + 1e-12 {
                assert!(r.thm1_rhs <= cor + 1e-9, "seed {} ipm {}", r.seed, r.ipm);
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_05_exact_information_state_degeneracy() {
    let c = Criterion::start("05_identity_degeneracy", 10.0);
    for seed in 0..50u64 {
        let mdp = random_mdp(2 + (seed as usize % 6), 1 + (seed as usize % 4), seed, (-1.0, 1.0));
        let gen = TabularAisGenerator::identity(&mdp);
        for ipm in [IpmChoice::Tv, IpmChoice::Wasserstein, IpmChoice::Mmd] {
            let r = bound_report(&mdp, &gen, &BoundConfig::new(ipm), seed).unwrap();
            assert!(r.eps <= 1e-9, "seed {seed}: eps {}", r.eps);
            assert!(r.delta <= 1e-9, "seed {seed}: delta {}", r.delta);
            assert!(r.delta_gap <= 1e-9, "seed {seed}: gap {}", r.delta_gap);
        }
    }
    c.finish();
}

#[test]
fn criterion_06_value_lemmas_on_the_campaign() {
    let c = Criterion::start("06_value_lemmas", 120.0);
    let campaign = CampaignConfig {
        instances: 200,
        seed: 7,
        max_states: 8,
        max_actions: 4,
        ipms: vec![IpmChoice::Wasserstein],
    };
    let outcome = run_bound_campaign(&campaign).unwrap();
    for r in &outcome.reports {
        assert!(!r.lemma_violated, "seed {}", r.seed);
        // span(V) <= span(r) / (1 - gamma)
        assert!(
            r.span_v <= r.span_r / (1.0 - r.gamma) + 1e-9,
            "seed {}: span {} vs bound {}",
            r.seed,
            r.span_v,
            r.span_r / (1.0 - r.gamma)
        );
        if let Some(fix) = r.l_v_fixpoint {
            assert!(
                r.l_v_measured <= fix + 1e-9,
                "seed {}: measured {} vs fixpoint {fix}",
                r.seed,
                r.l_v_measured
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_07_ipm_correctness() {
    let c = Criterion::start("07_ipm_correctness", 60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7001);

    // Discrete-metric Wasserstein equals classical TV on 500 pairs.
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let p = simplex(&mut rng, n);
        let q = simplex(&mut rng, n);
        let w = wasserstein_exact(&p, &q, &MetricSpec::Discrete, &PointSet::Ids(n)).unwrap();
        let tv = tv_std(&p, &q).unwrap();
        assert!((w - tv).abs() <= 1e-10, "{w} vs {tv}");
    }

    // Anchor invariance of distance kernels.
    for _ in 0..50 {
        let n = 6;
        let p = simplex(&mut rng, n);
        let q = simplex(&mut rng, n);
        let base = mmd_closed(
            &p,
            &q,
            &KernelSpec::Energy { exponent: 1.0 },
            &MetricSpec::Euclidean,
            &PointSet::Ids(n),
        )
        .unwrap();
        for anchor in 0..n {
            let k = distance_kernel(1.0, Anchor::Support(anchor)).unwrap();
            let d = mmd_closed(&p, &q, &k, &MetricSpec::Euclidean, &PointSet::Ids(n)).unwrap();
            assert!((d - base).abs() <= 1e-12, "anchor {anchor}: {d} vs {base}");
        }
    }

    // Pinsker chain on 1000 pairs with unit diameter.
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let p = simplex(&mut rng, n);
        let q = simplex(&mut rng, n);
        let chain = kl_and_pinsker(&p, &q, 1.0).unwrap();
        let w = wasserstein_exact(&p, &q, &MetricSpec::Discrete, &PointSet::Ids(n)).unwrap();
        assert!(w <= 1.0 * chain.tv_std + 1e-12);
        assert!(chain.tv_std <= chain.w_upper + 1e-12);
    }

    // U-statistic mean matches the squared closed form at 1e4 resamples.
    let p = simplex(&mut rng, 4);
    let q = simplex(&mut rng, 4);
    let kernel = KernelSpec::Energy { exponent: 1.0 };
    let closed = mmd_closed(&p, &q, &kernel, &MetricSpec::Euclidean, &PointSet::Ids(4)).unwrap();
    let target = closed * closed;
    let draws = 10_000;
    let per_side = 16;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..draws {
        let xs: Vec<Vec<f64>> = (0..per_side)
            .map(|_| vec![ais_lab::mdp::sample_index(&p.probs, &mut rng) as f64])
            .collect();
        let ys: Vec<Vec<f64>> = (0..per_side)
            .map(|_| vec![ais_lab::mdp::sample_index(&q.probs, &mut rng) as f64])
            .collect();
        let u = mmd_u_statistic(&xs, &ys, &kernel).unwrap();
        sum += u;
        sumsq += u * u;
    }
    let mean = sum / draws as f64;
    let se = ((sumsq / draws as f64 - mean * mean) / draws as f64).sqrt();
    assert!(
        (mean - target).abs() <= 3.0 * se,
        "u-statistic mean {mean} vs closed^2 {target} (se {se})"
    );
    c.finish();
}

#[test]
fn criterion_08_gradient_integrity() {
    let c = Criterion::start("08_gradient_integrity", 30.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8001);

    // MLP.
    let mlp = MlpShape::new(vec![4, 8, 3]);
    let params = mlp.init(&mut rng);
    let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
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
    assert!(max_rel_error(&analytic, &finite_difference(loss, &params)) < 1e-5);

    // GRU, 5-step unroll.
    let gru = GruShape::new(3, 4);
    let gparams = gru.init(&mut rng);
    let inputs: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let gru_loss = |p: &[f64]| {
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
    assert!(max_rel_error(&analytic, &finite_difference(gru_loss, &gparams)) < 1e-5);

    // All three AIS-loss variants through the full generator.
    let mdp = toy_mdp(10.0, 0.9);
    let gen = NeuralAisGenerator::tabular(4, 3, 3, &mut rng);
    let pi = StationaryPolicy::uniform(4, 3);
    let batch = vec![ais_lab::mdp::sample_trajectory(&mdp, &pi, 1, 3, &mut rng).unwrap()];
    for variant in [LossIpm::Mmd, LossIpm::Kl, LossIpm::Tv] {
        let cfg = AisConfig::new(0.3, variant, 3, 3).unwrap();
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
        assert!(err < 1e-5, "{variant:?}: {err}");
    }

    // Log-prob heads: categorical and Gaussian.
    let actor = MlpShape::new(vec![3, 6, 4]);
    let aparams = actor.init(&mut rng);
    let feat: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let action = 2usize;
    let cat_loss = |p: &[f64]| {
        let mut tape = Tape::new();
        let pv = tape.leaves(p);
        let xv = tape.leaves(&feat);
        let logits = actor.forward(&mut tape, &pv, &xv);
        let lp = tape.log_softmax(&logits);
        tape.value(lp[action])
    };
    let analytic = {
        let mut tape = Tape::new();
        let pv = tape.leaves(&aparams);
        let xv = tape.leaves(&feat);
        let logits = actor.forward(&mut tape, &pv, &xv);
        let lp = tape.log_softmax(&logits);
        tape.backward(lp[action]).grads(&pv)
    };
    assert!(max_rel_error(&analytic, &finite_difference(cat_loss, &aparams)) < 1e-5);

    let mean_at = [0.2, -0.4];
    let obs = [0.5, 0.1];
    let gauss_loss = |m: &[f64]| {
        let mut tape = Tape::new();
        let mv = tape.leaves(m);
        let lp = gaussian_log_prob(&mut tape, &mv, 0.2, &obs);
        tape.value(lp)
    };
    let analytic = {
        let mut tape = Tape::new();
        let mv = tape.leaves(&mean_at);
        let lp = gaussian_log_prob(&mut tape, &mv, 0.2, &obs);
        tape.backward(lp).grads(&mv)
    };
    assert!(max_rel_error(&analytic, &finite_difference(gauss_loss, &mean_at)) < 1e-5);
    c.finish();
}

#[test]
fn criterion_09_mmd_surrogate_gradient() {
    let c = Criterion::start("09_mmd_surrogate", 30.0);
    // Analytic gradient 2m - 2x against central differences at 1e-6.
    let m = vec![0.4, -0.7, 1.2];
    let x = vec![0.1, 0.3, -0.2];
    let (_, grad) = mmd_mean_surrogate(&m, &x);
    let numeric = finite_difference(|mv| mmd_mean_surrogate(mv, &x).0, &m);
    assert!(max_rel_error(&grad, &numeric) < 1e-6);

    // Gaussian-mean family: squared MMD (energy p = 2) between N(mu*, I)
    // and N(theta, I) is |theta - mu*|^2, so grad = 2 (theta - mu*). The
    // surrogate gradient 2 theta - 2X averages to it over X ~ nu_1.
    let mu_star = [0.7, -0.3];
    let theta = [-0.2, 0.5];
    let exact = [2.0 * (theta[0] - mu_star[0]), 2.0 * (theta[1] - mu_star[1])];
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9001);
    let mut mean = [0.0f64; 2];
    let mut m2 = [0.0f64; 2];
    for i in 0..n {
        let draw = [
            mu_star[0] + standard_normal(&mut rng),
            mu_star[1] + standard_normal(&mut rng),
        ];
        let (_, g) = mmd_mean_surrogate(&theta, &draw);
        for k in 0..2 {
            let d = g[k] - mean[k];
            mean[k] += d / (i + 1) as f64;
            m2[k] += d * (g[k] - mean[k]);
        }
    }
    for k in 0..2 {
        let se = (m2[k] / (n as f64 - 1.0) / n as f64).sqrt();
        assert!(
            (mean[k] - exact[k]).abs() <= 3.0 * se,
            "coordinate {k}: mc {} vs exact {} (se {se})",
            mean[k],
            exact[k]
        );
    }
    c.finish();
}

#[test]
fn criterion_10_schedule_contract() {
    let c = Criterion::start("10_schedule_contract", 5.0);
    assert!(validate_schedule(0.6, 0.8, None).is_valid());
    assert!(validate_schedule(0.6, 0.9, Some(0.7)).is_valid());
    // Exponents at or below one half fail square summability.
    assert!(!validate_schedule(0.5, 0.8, None).is_valid());
    assert!(!validate_schedule(0.4, 0.8, None).is_valid());
    assert!(!validate_schedule(0.6, 0.5, None).is_valid());
    // Ratio-ordering violations.
    assert!(!validate_schedule(0.8, 0.6, None).is_valid());
    assert!(!validate_schedule(0.6, 0.7, Some(0.9)).is_valid());
    assert!(!validate_schedule(0.6, 0.65, Some(0.7)).is_valid());
    c.finish();
}

#[test]
fn criterion_11_training_beats_the_memoryless_baseline() {
    let c = Criterion::start("11_training_property", 600.0);
    let mdp = toy_mdp(TOY_K, TOY_GAMMA);
    let config = TrainConfig {
        gamma: TOY_GAMMA,
        iterations: 2000,
        episode_len: 48,
        feature_dim: 8,
        lambda: 0.3,
        ais_lr: 1.5e-3,
        actor_lr: 3.5e-4,
        critic_lr: 7e-4,
        n_grad: 4,
        start_states: vec![0, 1, 2],
        ..Default::default()
    };
    let window = 200;
    let final_return = |kind: TabularAgentKind, seed: u64| {
        let rows = train_loop_tabular(&mdp, kind, &config, seed).unwrap();
        rows[rows.len() - window..]
            .iter()
            .map(|r| r.mean_return)
            .sum::<f64>()
            / window as f64
    };
    let mut ais_runs: Vec<f64> = (0..10)
        .map(|seed| final_return(TabularAgentKind::AisActorCritic, seed))
        .collect();
    let partition = ais_lab::cli::toy_aliasing_partition();
    let mut memoryless_runs: Vec<f64> = (0..10)
        .map(|seed| final_return(TabularAgentKind::Memoryless { partition: partition.clone() }, seed))
        .collect();
    ais_runs.sort_by(|a, b| a.total_cmp(b));
    memoryless_runs.sort_by(|a, b| a.total_cmp(b));
    let q = |v: &[f64], p: f64| {
        let idx = p * (v.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        v[lo] * (1.0 - (idx - lo as f64)) + v[hi] * (idx - lo as f64)
    };
    let (ais_med, ais_q1) = (q(&ais_runs, 0.5), q(&ais_runs, 0.25));
    let (mem_med, mem_q3) = (q(&memoryless_runs, 0.5), q(&memoryless_runs, 0.75));
    println!(
        "  ais-ac median {ais_med:.3} (q1 {ais_q1:.3}); memoryless median {mem_med:.3} (q3 {mem_q3:.3})"
    );
    assert!(
        ais_med > mem_med,
        "ais median {ais_med} must beat memoryless median {mem_med}"
    );
    assert!(
        ais_q1 > mem_q3,
        "interquartile ranges must not overlap: ais q1 {ais_q1} vs memoryless q3 {mem_q3}"
    );
    c.finish();
}

#[test]
fn criterion_12_command_determinism() {
    let c = Criterion::start("12_command_determinism", 300.0);
    let base = std::env::temp_dir().join(format!("ais-lab-acc-{}", std::process::id()));

    // bounds: small random campaign, byte-identical CSVs.
    let bounds_cfg: BoundsConfig = serde_json::from_str(
        r#"{"command": "bounds", "seed": 11, "random_instances": 25, "ipms": ["tv", "w", "mmd"]}"#,
    )
    .unwrap();
    let dir_a = base.join("bounds_a");
    let dir_b = base.join("bounds_b");
    cmd_bounds(&bounds_cfg, &dir_a).unwrap();
    cmd_bounds(&bounds_cfg, &dir_b).unwrap();
    let csv_a = std::fs::read(dir_a.join("bounds.csv")).unwrap();
    let csv_b = std::fs::read(dir_b.join("bounds.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "bounds.csv must be byte-identical across reruns");
    assert!(!csv_a.is_empty());

    // train: short run, byte-identical per-seed metrics and aggregate.
    let train_cfg: TrainCommandConfig = serde_json::from_str(
        r#"{
            "command": "train",
            "env": "toy",
            "agent": "ais-ac",
            "seeds": [0, 1],
            "train": {"iterations": 12, "episode_len": 10, "feature_dim": 4}
        }"#,
    )
    .unwrap();
    let dir_a = base.join("train_a");
    let dir_b = base.join("train_b");
    cmd_train(&train_cfg, &dir_a).unwrap();
    cmd_train(&train_cfg, &dir_b).unwrap();
    for name in ["metrics_seed0.csv", "metrics_seed1.csv", "aggregate.csv"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }
    std::fs::remove_dir_all(&base).ok();
    c.finish();
}
