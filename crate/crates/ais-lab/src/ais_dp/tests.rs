use super::*;
use crate::ais::{quantizer_ais, QuantizerWeights, TabularAisGenerator};
use crate::ipm::IpmChoice;
use crate::mdp::{random_mdp, toy_mdp, value_iteration, TabularMdp};

fn all_starts(mdp: &TabularMdp) -> Vec<usize> {
    (0..mdp.n_states).collect()
}

mod closure {
    use super::*;

    #[test]
    fn identity_closure_is_the_state_set() {
        let mdp = toy_mdp(100.0, 0.95);
        let gen = TabularAisGenerator::identity(&mdp);
        let c = feature_closure(&gen, &mdp, &all_starts(&mdp)).unwrap();
        assert_eq!(c.features, vec![0, 1, 2, 3]);
    }

    #[test]
    fn quantizer_closure_is_the_class_set() {
        let mdp = toy_mdp(100.0, 0.95);
        let gen = quantizer_ais(&mdp, &[0, 0, 1, 1], QuantizerWeights::Uniform).unwrap();
        let c = feature_closure(&gen, &mdp, &all_starts(&mdp)).unwrap();
        assert_eq!(c.features, vec![0, 1]);
    }

    #[test]
    fn closure_is_a_fixpoint() {
        let mdp = random_mdp(6, 3, 4, (-1.0, 1.0));
        let gen = quantizer_ais(&mdp, &[0, 1, 1, 2, 2, 0], QuantizerWeights::Uniform).unwrap();
        let starts = all_starts(&mdp);
        let c1 = feature_closure(&gen, &mdp, &starts).unwrap();
        // Closing again from the already-closed feature set adds nothing:
        // every update image is inside the set.
        for &z in &c1.features {
            for sp in 0..gen.n_states {
                for a in 0..gen.n_actions {
                    assert!(c1.features.contains(&gen.update[z][sp][a]));
                }
            }
        }
        let c2 = feature_closure(&gen, &mdp, &starts).unwrap();
        assert_eq!(c1.features, c2.features);
    }
}

mod dp {
    use super::*;

    #[test]
    fn identity_program_recovers_the_optimal_solution() {
        let mdp = toy_mdp(100.0, 0.95);
        let vi = value_iteration(&mdp, 1e-12).unwrap();
        let gen = TabularAisGenerator::identity(&mdp);
        let closure = feature_closure(&gen, &mdp, &all_starts(&mdp)).unwrap();
        let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
        for s in 0..4 {
            assert!((sol.value_of(s).unwrap() - vi.v_star[s]).abs() < 1e-9);
            assert_eq!(sol.greedy_action(s).unwrap(), vi.pi_star.greedy_actions()[s]);
        }
    }

    #[test]
    fn single_feature_single_action_is_a_geometric_series() {
        let mdp = TabularMdp::new(
            2,
            1,
            0.8,
            vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]],
            vec![vec![2.0], vec![2.0]],
        )
        .unwrap();
        let gen = quantizer_ais(&mdp, &[0, 0], QuantizerWeights::Uniform).unwrap();
        let closure = feature_closure(&gen, &mdp, &[0, 1]).unwrap();
        let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
        assert!((sol.value_of(0).unwrap() - 2.0 / 0.2).abs() < 1e-9);
    }

    #[test]
    fn residual_is_within_tolerance() {
        for seed in 0..10 {
            let mdp = random_mdp(6, 3, seed, (-1.0, 1.0));
            let gen = quantizer_ais(&mdp, &[0, 1, 2, 0, 1, 2], QuantizerWeights::Uniform).unwrap();
            let closure = feature_closure(&gen, &mdp, &all_starts(&mdp)).unwrap();
            let tol = 1e-10;
            let sol = solve_ais_dp(&gen, &mdp, &closure, tol).unwrap();
            assert!(dp_residual(&gen, &mdp, &sol) <= tol);
        }
    }
}

mod gap {
    use super::*;

    fn solve_all(
        mdp: &TabularMdp,
        gen: &TabularAisGenerator,
    ) -> (FeatureClosure, AisDpSolution, f64) {
        let starts = all_starts(mdp);
        let closure = feature_closure(gen, mdp, &starts).unwrap();
        let sol = solve_ais_dp(gen, mdp, &closure, 1e-12).unwrap();
        let gap = delta_gap(mdp, gen, &sol, &closure, &starts).unwrap();
        (closure, sol, gap)
    }

    #[test]
    fn identity_generator_has_zero_gap() {
        let mdp = toy_mdp(100.0, 0.95);
        let gen = TabularAisGenerator::identity(&mdp);
        let (_, _, gap) = solve_all(&mdp, &gen);
        assert!(gap <= 1e-9, "gap {gap}");
    }

    #[test]
    fn aliasing_quantizer_pays_a_strictly_positive_gap() {
        let mdp = toy_mdp(100.0, 0.95);
        let gen = quantizer_ais(&mdp, &[0, 1, 1, 0], QuantizerWeights::Uniform).unwrap();
        let (_, _, gap) = solve_all(&mdp, &gen);
        assert!(gap > 1.0, "gap {gap}");
    }

    #[test]
    fn unreachable_padding_features_do_not_move_the_gap() {
        let mdp = random_mdp(4, 2, 13, (-1.0, 1.0));
        let gen = quantizer_ais(&mdp, &[0, 0, 1, 1], QuantizerWeights::Uniform).unwrap();
        let (_, _, gap) = solve_all(&mdp, &gen);
        // Pad with an unreachable feature that points at itself.
        let mut padded = gen.clone();
        padded.n_features = 3;
        padded.update.push(vec![vec![2; 2]; 4]);
        padded.reward_hat.push(vec![123.0; 2]);
        padded
            .transition_hat
            .push(vec![vec![0.25; 4]; 2]);
        let (_, _, padded_gap) = solve_all(&mdp, &padded);
        assert!((gap - padded_gap).abs() < 1e-10);
    }
}

mod constants {
    use super::*;

    #[test]
    fn fixpoint_reductions() {
        assert_eq!(lipschitz_value_fixpoint(3.0, 0.0, 5.0, 0.9).unwrap(), 3.0);
        assert_eq!(lipschitz_value_fixpoint(1.0, 1.0, 1.0, 0.5).unwrap(), 2.0);
        assert!(lipschitz_value_fixpoint(1.0, 2.0, 1.0, 0.6).is_err());
    }

    #[test]
    fn recursion_converges_to_the_fixpoint() {
        let seq = lipschitz_recursion(1.0, 0.8, 0.9, 0.9, 200);
        assert_eq!(seq[0], 1.0);
        let fix = lipschitz_value_fixpoint(1.0, 0.8, 0.9, 0.9).unwrap();
        assert!((seq.last().unwrap() - fix).abs() < 1e-8);
        // Monotone nondecreasing toward the fixed point.
        for w in seq.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn kappa_special_cases() {
        // Constant value function: kappa vanishes for TV and Wasserstein.
        let mdp = TabularMdp::new(
            3,
            2,
            0.9,
            vec![
                vec![vec![0.4, 0.3, 0.3]; 3],
                vec![vec![0.2, 0.5, 0.3]; 3],
            ],
            vec![vec![1.0; 2]; 3],
        )
        .unwrap();
        let gen = quantizer_ais(&mdp, &[0, 0, 0], QuantizerWeights::Uniform).unwrap();
        let closure = feature_closure(&gen, &mdp, &[0, 1, 2]).unwrap();
        let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
        for ipm in [IpmChoice::Tv, IpmChoice::Wasserstein] {
            let (k, _) = kappa(&gen, &sol, &BoundConfig::new(ipm)).unwrap();
            assert!(k.abs() < 1e-9);
        }
    }

    #[test]
    fn discrete_metric_ties_wasserstein_kappa_to_twice_tv() {
        for seed in 0..5 {
            let mdp = random_mdp(5, 2, seed, (-1.0, 1.0));
            let gen = quantizer_ais(&mdp, &[0, 0, 1, 1, 2], QuantizerWeights::Uniform).unwrap();
            let closure = feature_closure(&gen, &mdp, &all_starts(&mdp)).unwrap();
            let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
            let (k_tv, _) = kappa(&gen, &sol, &BoundConfig::new(IpmChoice::Tv)).unwrap();
            let (k_w, _) = kappa(&gen, &sol, &BoundConfig::new(IpmChoice::Wasserstein)).unwrap();
            assert!((k_w - 2.0 * k_tv).abs() < 1e-9, "span identity under d = 1");
            // kappa_TV never exceeds half the value span.
            let span_v = sol.v_hat.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - sol.v_hat.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(k_tv <= 0.5 * span_v + 1e-9);
        }
    }

    #[test]
    fn span_lemma_on_the_toy_identity_instance() {
        let k = 100.0;
        let mdp = toy_mdp(k, 0.95);
        let gen = TabularAisGenerator::identity(&mdp);
        let closure = feature_closure(&gen, &mdp, &[0, 1, 2, 3]).unwrap();
        let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
        let (span_v, bound) = span_bound_check(&sol, &gen, 0.95).unwrap();
        assert!(span_v <= bound + 1e-9);
        assert!((bound - (1.0 + k) / 0.05).abs() < 1e-9);
        // Constant rewards: zero span.
        let mdp = TabularMdp::new(
            2,
            1,
            0.9,
            vec![vec![vec![0.5, 0.5]; 2]],
            vec![vec![1.0]; 2],
        )
        .unwrap();
        let gen = TabularAisGenerator::identity(&mdp);
        let closure = feature_closure(&gen, &mdp, &[0, 1]).unwrap();
        let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
        let (span_v, _) = span_bound_check(&sol, &gen, 0.9).unwrap();
        assert!(span_v < 1e-9);
    }

    #[test]
    fn measured_value_lipschitz_stays_under_the_fixpoint() {
        for seed in 0..100 {
            let (mdp, gen) = random_instance(seed, 6, 3);
            let report = bound_report(&mdp, &gen, &BoundConfig::new(IpmChoice::Wasserstein), seed).unwrap();
            if let Some(fix) = report.l_v_fixpoint {
                assert!(
                    report.l_v_measured <= fix + BOUND_SLACK,
                    "seed {seed}: measured {} > fixpoint {fix}",
                    report.l_v_measured
                );
            }
            assert!(!report.lemma_violated, "seed {seed}");
        }
    }
}

mod reports {
    use super::*;

    #[test]
    fn identity_reports_are_all_zero() {
        let mdp = random_mdp(5, 3, 17, (-1.0, 1.0));
        let gen = TabularAisGenerator::identity(&mdp);
        for ipm in [IpmChoice::Tv, IpmChoice::Wasserstein, IpmChoice::Mmd] {
            let r = bound_report(&mdp, &gen, &BoundConfig::new(ipm), 17).unwrap();
            assert!(r.eps.abs() < 1e-9);
            assert!(r.delta.abs() < 1e-9);
            assert!(r.delta_gap.abs() < 1e-9);
            assert!(r.thm1_rhs.abs() < 1e-6);
            assert!(!r.violated && !r.lemma_violated);
        }
    }

    #[test]
    fn toy_aliasing_instance_respects_the_tv_corollary() {
        let mdp = toy_mdp(100.0, 0.95);
        let gen = quantizer_ais(&mdp, &[0, 1, 1, 0], QuantizerWeights::Uniform).unwrap();
        let r = bound_report(&mdp, &gen, &BoundConfig::new(IpmChoice::Tv), 0).unwrap();
        assert!(!r.violated);
        let cor = r.cor_rhs.unwrap();
        assert!(r.delta_gap <= cor + BOUND_SLACK);
        assert!(r.thm1_rhs <= cor + BOUND_SLACK);
        assert!(r.delta_gap > 0.0);
    }

    #[test]
    fn small_campaign_has_no_violations() {
        let cfg = CampaignConfig {
            instances: 40,
            seed: 1234,
            ..Default::default()
        };
        let outcome = run_bound_campaign(&cfg).unwrap();
        assert_eq!(outcome.reports.len(), 120);
        assert!(outcome.counterexamples.is_empty());
        for r in &outcome.reports {
            assert!(!r.violated && !r.lemma_violated, "seed {} ipm {}", r.seed, r.ipm);
        }
    }

    #[test]
    fn csv_row_shape() {
        let mdp = toy_mdp(100.0, 0.95);
        let gen = TabularAisGenerator::identity(&mdp);
        let r = bound_report(&mdp, &gen, &BoundConfig::new(IpmChoice::Mmd), 3).unwrap();
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), BoundReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("3,4,3,"));
    }

    #[test]
    fn reward_scaling_commutes_with_everything() {
        let (mdp, gen) = random_instance(99, 5, 3);
        let c = 3.5;
        let mut scaled_mdp = mdp.clone();
        for row in scaled_mdp.rewards.iter_mut() {
            row.iter_mut().for_each(|r| *r *= c);
        }
        let scaled_gen = quantizer_ais(
            &scaled_mdp,
            &gen.init_feature,
            QuantizerWeights::Uniform,
        )
        .unwrap();
        for ipm in [IpmChoice::Tv, IpmChoice::Wasserstein, IpmChoice::Mmd] {
            let base = bound_report(&mdp, &gen, &BoundConfig::new(ipm), 0).unwrap();
            let scaled = bound_report(&scaled_mdp, &scaled_gen, &BoundConfig::new(ipm), 0).unwrap();
            let rel = |a: f64, b: f64| (a * c - b).abs() <= 1e-7 * (1.0 + b.abs());
            assert!(rel(base.eps, scaled.eps));
            assert!((base.delta - scaled.delta).abs() < 1e-9, "delta is scale-free");
            assert!(rel(base.kappa, scaled.kappa));
            assert!(rel(base.delta_gap, scaled.delta_gap));
            assert!(rel(base.thm1_rhs, scaled.thm1_rhs));
            if let (Some(b), Some(s)) = (base.cor_rhs, scaled.cor_rhs) {
                assert!(rel(b, s));
            }
        }
        // Greedy actions are unchanged by positive scaling.
        let starts = all_starts(&mdp);
        let closure = feature_closure(&gen, &mdp, &starts).unwrap();
        let sol = solve_ais_dp(&gen, &mdp, &closure, 1e-12).unwrap();
        let closure_s = feature_closure(&scaled_gen, &scaled_mdp, &starts).unwrap();
        let sol_s = solve_ais_dp(&scaled_gen, &scaled_mdp, &closure_s, 1e-12).unwrap();
        assert_eq!(
            sol.mu.greedy_actions(),
            sol_s.mu.greedy_actions()
        );
    }

    #[test]
    fn zero_error_generators_have_zero_gap() {
        // Exact-information-state degeneracy beyond the identity map: a
        // quantizer that merges exactly-duplicate states.
        let mdp = TabularMdp::new(
            4,
            2,
            0.9,
            vec![
                vec![
                    vec![0.3, 0.3, 0.2, 0.2],
                    vec![0.3, 0.3, 0.2, 0.2],
                    vec![0.1, 0.1, 0.4, 0.4],
                    vec![0.25, 0.25, 0.25, 0.25],
                ],
                vec![
                    vec![0.4, 0.4, 0.1, 0.1],
                    vec![0.4, 0.4, 0.1, 0.1],
                    vec![0.2, 0.2, 0.3, 0.3],
                    vec![0.1, 0.1, 0.3, 0.5],
                ],
            ],
            vec![vec![1.0, -1.0], vec![1.0, -1.0], vec![0.5, 0.2], vec![-0.3, 0.9]],
        )
        .unwrap();
        // States 0 and 1 are duplicates; note their rows also assign equal
        // mass within the duplicated pair, so merging is exactly lossless
        // at the distribution level only after aggregation -- measure it.
        let gen = quantizer_ais(&mdp, &[0, 0, 1, 2], QuantizerWeights::Uniform).unwrap();
        let r = bound_report(&mdp, &gen, &BoundConfig::new(IpmChoice::Tv), 0).unwrap();
        assert!(r.eps.abs() < 1e-12);
        // Transition rows differ only in how they split mass between the
        // duplicates, which TV on raw states still sees; the gap theorem
        // must hold regardless.
        assert!(r.delta_gap <= r.thm1_rhs + BOUND_SLACK);
        assert!(!r.violated);
    }

    #[test]
    fn monotone_refinement_with_midrange_weights() {
        // Reward-midrange weights make the reward error half the class
        // span, which can only shrink under refinement. Check eps along
        // nested chains; delta and the gap are checked on a constructed
        // duplicate-state chain where refinement is genuinely lossless at
        // the final step.
        for seed in 0..20 {
            let mdp = random_mdp(6, 2, seed, (-1.0, 1.0));
            let chains: [Vec<Vec<usize>>; 1] = [vec![
                vec![0, 0, 0, 0, 0, 0],
                vec![0, 0, 0, 1, 1, 1],
                vec![0, 0, 2, 1, 1, 3],
                vec![0, 4, 2, 1, 5, 3],
            ]];
            for chain in &chains {
                let mut last_eps = f64::INFINITY;
                for partition in chain.iter() {
                    let gen =
                        quantizer_ais(&mdp, partition, QuantizerWeights::RewardMidrange).unwrap();
                    let starts = all_starts(&mdp);
                    let (eps, _) = crate::ais::measure_eps_delta(
                        &mdp,
                        &gen,
                        &starts,
                        IpmChoice::Tv,
                        &crate::ipm::MetricSpec::Discrete,
                        &crate::ipm::KernelSpec::Energy { exponent: 1.0 },
                    )
                    .unwrap();
                    assert!(
                        eps <= last_eps + 1e-12,
                        "seed {seed}: refinement increased eps {last_eps} -> {eps}"
                    );
                    last_eps = eps;
                }
            }
        }

        // Duplicate-state chain: identity <- merge duplicates <- alias.
        let mdp = TabularMdp::new(
            4,
            2,
            0.9,
            vec![
                vec![
                    vec![0.5, 0.5, 0.0, 0.0],
                    vec![0.5, 0.5, 0.0, 0.0],
                    vec![0.0, 0.0, 0.5, 0.5],
                    vec![0.25, 0.25, 0.25, 0.25],
                ],
                vec![
                    vec![0.0, 0.0, 0.5, 0.5],
                    vec![0.0, 0.0, 0.5, 0.5],
                    vec![0.5, 0.5, 0.0, 0.0],
                    vec![0.25, 0.25, 0.25, 0.25],
                ],
            ],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]],
        )
        .unwrap();
        let chain = [vec![0usize, 0, 0, 0], vec![0, 0, 1, 1], vec![0, 0, 1, 2], vec![0, 1, 2, 3]];
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for partition in &chain {
            let gen = quantizer_ais(&mdp, partition, QuantizerWeights::Uniform).unwrap();
            let r = bound_report(&mdp, &gen, &BoundConfig::new(IpmChoice::Tv), 0).unwrap();
            assert!(r.eps <= last.0 + 1e-12);
            assert!(r.delta <= last.1 + 1e-12);
            assert!(r.delta_gap <= last.2 + 1e-9);
            last = (r.eps, r.delta, r.delta_gap);
        }
    }
}
