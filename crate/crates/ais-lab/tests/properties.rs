//! Property-based invariants over randomized inputs.

use ais_lab::ipm::{
    mmd_closed, mmd_mean_surrogate, tv_ipm, tv_std, wasserstein_exact, DiscreteDist, KernelSpec,
    MetricSpec, PointSet,
};
use ais_lab::mdp::toy_mdp;
use ais_lab::nn::{smooth_l1, Tape};
use proptest::prelude::*;

fn simplex_strategy(n: usize) -> impl Strategy<Value = DiscreteDist> {
    prop::collection::vec(1e-4..1.0f64, n).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        let mut v: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        DiscreteDist::new(v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ipm_metric_axioms(
        a in simplex_strategy(5),
        b in simplex_strategy(5),
        c in simplex_strategy(5),
    ) {
        let points = PointSet::Ids(5);
        let metric = MetricSpec::Euclidean;
        let kernel = KernelSpec::Energy { exponent: 1.0 };
        let distances: [&dyn Fn(&DiscreteDist, &DiscreteDist) -> f64; 3] = [
            &|x, y| tv_ipm(x, y).unwrap(),
            &|x, y| wasserstein_exact(x, y, &metric, &points).unwrap(),
            &|x, y| mmd_closed(x, y, &kernel, &metric, &points).unwrap(),
        ];
        for d in distances {
            let dab = d(&a, &b);
            prop_assert!(dab >= 0.0);
            prop_assert!((dab - d(&b, &a)).abs() <= 1e-9);
            prop_assert!(d(&a, &a) <= 1e-9);
            prop_assert!(dab <= d(&a, &c) + d(&c, &b) + 1e-9);
        }
    }

    #[test]
    fn discrete_wasserstein_is_classical_tv(
        p in simplex_strategy(6),
        q in simplex_strategy(6),
    ) {
        let w = wasserstein_exact(&p, &q, &MetricSpec::Discrete, &PointSet::Ids(6)).unwrap();
        prop_assert!((w - tv_std(&p, &q).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn span_functional_bounds_integral_differences(
        p in simplex_strategy(6),
        q in simplex_strategy(6),
        f in prop::collection::vec(-5.0..5.0f64, 6),
    ) {
        let diff: f64 = f
            .iter()
            .enumerate()
            .map(|(i, v)| v * (p.probs[i] - q.probs[i]))
            .sum::<f64>()
            .abs();
        let span = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - f.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(diff <= 0.5 * span * tv_ipm(&p, &q).unwrap() + 1e-9);
    }

    #[test]
    fn softmax_is_a_shift_invariant_distribution(
        logits in prop::collection::vec(-20.0..20.0f64, 4),
        shift in -50.0..50.0f64,
    ) {
        let mut tape = Tape::new();
        let l = tape.leaves(&logits);
        let probs = tape.softmax(&l);
        let total: f64 = probs.iter().map(|&p| tape.value(p)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let ls = tape.leaves(&shifted);
        let probs_s = tape.softmax(&ls);
        for (a, b) in probs.iter().zip(&probs_s) {
            prop_assert!((tape.value(*a) - tape.value(*b)).abs() < 1e-9);
        }
    }

    #[test]
    fn smooth_l1_is_1_lipschitz_and_below_the_quadratic(x in -10.0..10.0f64, y in -10.0..10.0f64) {
        prop_assert!((smooth_l1(x) - smooth_l1(y)).abs() <= (x - y).abs() + 1e-12);
        prop_assert!(smooth_l1(x) <= 0.5 * x * x + 1e-12);
        prop_assert!(smooth_l1(x) >= 0.0);
    }

    #[test]
    fn mean_surrogate_gradient_identity(
        m in prop::collection::vec(-3.0..3.0f64, 4),
        x in prop::collection::vec(-3.0..3.0f64, 4),
    ) {
        let (loss, grad) = mmd_mean_surrogate(&m, &x);
        let direct: f64 = m.iter().zip(&x).map(|(mi, xi)| (mi - 2.0 * xi) * mi).sum();
        prop_assert!((loss - direct).abs() < 1e-12);
        for ((g, mi), xi) in grad.iter().zip(&m).zip(&x) {
            prop_assert!((g - (2.0 * mi - 2.0 * xi)).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_mdp_is_stochastic_for_any_parameters(k in 0.1..500.0f64, gamma in 0.05..0.99f64) {
        let mdp = toy_mdp(k, gamma);
        for a in 0..3 {
            for s in 0..4 {
                let sum: f64 = mdp.transition_row(s, a).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
        prop_assert_eq!(mdp.reward(3, 0), -k);
    }
}
