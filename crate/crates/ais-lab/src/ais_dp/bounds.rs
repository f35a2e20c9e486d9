//! The machine-checked approximation bounds: per-instance reports of
//! (epsilon, delta, kappa, Delta) against the theorem and corollary
//! right-hand sides.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{delta_gap, dp_residual, feature_closure, solve_ais_dp, AisDpSolution};
use crate::ais::{measure_eps_delta, quantizer_ais, QuantizerWeights, TabularAisGenerator};
use crate::error::{Error, Result};
use crate::ipm::{
    lipschitz_fn, lipschitz_kernel, rkhs_norm, Anchor, DiscreteDist, IpmChoice, KernelSpec,
    MetricSpec, PointSet,
};
use crate::mdp::{random_mdp, TabularMdp};

pub const BOUND_SLACK: f64 = 1e-9;

/// Configuration of one bound check.
#[derive(Debug, Clone)]
pub struct BoundConfig {
    pub ipm: IpmChoice,
    /// Ground metric on states, used by delta (Wasserstein), kappa, and
    /// the Lipschitz constants.
    pub state_metric: MetricSpec,
    /// Kernel for the MMD variant.
    pub kernel: KernelSpec,
    /// Start states for reachability; `None` means every state.
    pub starts: Option<Vec<usize>>,
    pub dp_tol: f64,
}

impl BoundConfig {
    pub fn new(ipm: IpmChoice) -> Self {
        BoundConfig {
            ipm,
            state_metric: MetricSpec::Discrete,
            kernel: KernelSpec::Energy { exponent: 1.0 },
            starts: None,
            dp_tol: 1e-12,
        }
    }
}

/// One `(instance, IPM)` bound report. `violated` collects the theorem and
/// corollary checks; `lemma_violated` the span / Lipschitz lemma checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    pub n_features: usize,
    pub ipm: String,
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
    pub kappa: f64,
    pub delta_gap: f64,
    pub thm1_rhs: f64,
    /// Corollary right-hand side; `None` when the Wasserstein corollary's
    /// contraction hypothesis fails.
    pub cor_rhs: Option<f64>,
    pub span_r: f64,
    pub span_v: f64,
    pub l_r: f64,
    pub l_p: f64,
    pub l_f: f64,
    pub l_v_measured: f64,
    pub l_v_fixpoint: Option<f64>,
    pub rkhs_warnings: usize,
    pub violated: bool,
    pub lemma_violated: bool,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "seed,n_states,n_actions,n_features,ipm,eps,delta,kappa,delta_gap,thm1_rhs,cor_rhs,violated";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.n_states,
            self.n_actions,
            self.n_features,
            self.ipm,
            self.eps,
            self.delta,
            self.kappa,
            self.delta_gap,
            self.thm1_rhs,
            self.cor_rhs.map(|v| v.to_string()).unwrap_or_default(),
            self.violated
        )
    }
}

/// Serializable counterexample: the full instance plus its report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub mdp: TabularMdp,
    pub generator: TabularAisGenerator,
    pub report: BoundReport,
}

/// Fixed point `L_r / (1 - gamma L_f L_p)` of the value-Lipschitz
/// recursion; the contraction hypothesis is `gamma L_f L_p < 1`.
pub fn lipschitz_value_fixpoint(l_r: f64, l_p: f64, l_f: f64, gamma: f64) -> Result<f64> {
    let alpha = gamma * l_p * l_f;
    if alpha >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "contraction assumption violated: gamma*L_f*L_p = {alpha} >= 1"
        )));
    }
    Ok(l_r / (1.0 - alpha))
}

/// The recursion `L_{t+1} = L_r + gamma L_p L_f L_t` from `L_1 = L_r`.
pub fn lipschitz_recursion(l_r: f64, l_p: f64, l_f: f64, gamma: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps);
    let mut l = l_r;
    for _ in 0..steps {
        out.push(l);
        l = l_r + gamma * l_p * l_f * l;
    }
    out
}

/// Span lemma check: `span(V) <= span(r) / (1 - gamma)`.
pub fn span_bound_check(
    solution: &AisDpSolution,
    gen: &TabularAisGenerator,
    gamma: f64,
) -> Result<(f64, f64)> {
    let span_v = span(&solution.v_hat);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &z in &solution.features {
        for a in 0..gen.n_actions {
            lo = lo.min(gen.reward_hat[z][a]);
            hi = hi.max(gen.reward_hat[z][a]);
        }
    }
    let bound = (hi - lo) / (1.0 - gamma);
    if span_v > bound + BOUND_SLACK {
        return Err(Error::BoundViolation(format!(
            "span(V) = {span_v} exceeds span(r)/(1-gamma) = {bound}"
        )));
    }
    Ok((span_v, bound))
}

fn span(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// The IPM-dependent constant of the main bound:
/// `kappa = sup_{z,a} rho_F( s' -> V(f(z, s', a)) )`.
///
/// TV uses the half-span functional, Wasserstein the Lipschitz constant
/// over the state metric, and MMD the RKHS interpolation norm. For MMD the
/// witness function is shifted by a constant before taking the norm --
/// both distributions in the bound are probability measures, so constant
/// shifts leave the integral difference unchanged and the smallest clean
/// candidate is a valid functional value.
pub fn kappa(
    gen: &TabularAisGenerator,
    solution: &AisDpSolution,
    config: &BoundConfig,
) -> Result<(f64, usize)> {
    let points = PointSet::Ids(gen.n_states);
    let mut warnings = 0usize;
    let mut worst = 0.0f64;
    let gram = match config.ipm {
        IpmChoice::Mmd => Some(config.kernel.gram(&config.state_metric, &points)),
        _ => None,
    };
    let anchor_index = match (&config.ipm, &config.kernel) {
        (IpmChoice::Mmd, KernelSpec::Energy { .. }) => Some(0usize),
        (IpmChoice::Mmd, KernelSpec::DistanceInduced { anchor: Anchor::Support(i), .. }) => Some(*i),
        _ => None,
    };
    for &z in &solution.features {
        for a in 0..gen.n_actions {
            let g: Vec<f64> = (0..gen.n_states)
                .map(|sp| {
                    let zn = gen.update[z][sp][a];
                    solution.value_of(zn).expect("closure covers updates")
                })
                .collect();
            let rho = match config.ipm {
                IpmChoice::Tv => 0.5 * span(&g),
                IpmChoice::Wasserstein => {
                    if gen.n_states < 2 {
                        0.0
                    } else {
                        lipschitz_fn(&g, &config.state_metric, &points)?
                    }
                }
                IpmChoice::Mmd => {
                    let gram = gram.as_ref().unwrap();
                    let mut candidates: Vec<Vec<f64>> = vec![g.clone()];
                    if let Some(i0) = anchor_index {
                        let shift = g[i0];
                        candidates.push(g.iter().map(|v| v - shift).collect());
                    }
                    let mean = g.iter().sum::<f64>() / g.len() as f64;
                    candidates.push(g.iter().map(|v| v - mean).collect());
                    let mut best_clean: Option<f64> = None;
                    let mut best_any = f64::INFINITY;
                    for cand in &candidates {
                        let r = rkhs_norm(cand, gram)?;
                        if !r.representation_warning {
                            best_clean = Some(best_clean.map_or(r.norm, |b: f64| b.min(r.norm)));
                        }
                        best_any = best_any.min(r.norm);
                    }
                    match best_clean {
                        Some(v) => v,
                        None => {
                            warnings += 1;
                            best_any
                        }
                    }
                }
            };
            if rho.is_infinite() {
                return Err(Error::InvalidInput(
                    "infinite Lipschitz constant in kappa: zero-distance points with unequal values".into(),
                ));
            }
            worst = worst.max(rho);
        }
    }
    Ok((worst, warnings))
}

/// Assemble the full bound report for one `(mdp, generator, IPM)` instance
/// and check the main bound, its corollary, and the value lemmas.
pub fn bound_report(
    mdp: &TabularMdp,
    gen: &TabularAisGenerator,
    config: &BoundConfig,
    seed: u64,
) -> Result<BoundReport> {
    mdp.validate()?;
    gen.validate()?;
    let starts: Vec<usize> = config
        .starts
        .clone()
        .unwrap_or_else(|| (0..mdp.n_states).collect());
    let closure = feature_closure(gen, mdp, &starts)?;
    let solution = solve_ais_dp(gen, mdp, &closure, config.dp_tol)?;
    debug_assert!(dp_residual(gen, mdp, &solution) <= 10.0 * config.dp_tol);

    let (eps, delta) = measure_eps_delta(
        mdp,
        gen,
        &starts,
        config.ipm,
        &config.state_metric,
        &config.kernel,
    )?;
    let gap = delta_gap(mdp, gen, &solution, &closure, &starts)?;
    let (kap, rkhs_warnings) = kappa(gen, &solution, config)?;

    let gamma = mdp.gamma;
    let thm1_rhs = 2.0 * (eps + gamma * delta * kap) / (1.0 - gamma);

    let constants = instance_constants(gen, &solution, config)?;
    let l_v_fixpoint = lipschitz_value_fixpoint(constants.l_r, constants.l_p, constants.l_f, gamma).ok();

    let cor_rhs = match config.ipm {
        IpmChoice::Tv => {
            Some(2.0 * eps / (1.0 - gamma) + gamma * delta * constants.span_r / ((1.0 - gamma) * (1.0 - gamma)))
        }
        IpmChoice::Wasserstein => l_v_fixpoint.map(|fix| {
            2.0 * eps / (1.0 - gamma) + 2.0 * gamma * delta * fix / (1.0 - gamma)
        }),
        IpmChoice::Mmd => Some(thm1_rhs),
    };

    let mut violated = gap > thm1_rhs + BOUND_SLACK;
    if let Some(cor) = cor_rhs {
        // The Wasserstein corollary dominates the instance bound
        // when the update map is non-expansive in the state argument.
        let comparable = config.ipm != IpmChoice::Wasserstein || constants.l_f <= 1.0 + 1e-12;
        if comparable && thm1_rhs > cor + BOUND_SLACK {
            violated = true;
        }
    }

    let span_v = span(&solution.v_hat);
    let span_lemma_ok = span_v <= constants.span_r / (1.0 - gamma) + BOUND_SLACK;
    let lipschitz_lemma_ok = match l_v_fixpoint {
        Some(fix) => constants.l_v_measured <= fix + BOUND_SLACK,
        None => true,
    };

    Ok(BoundReport {
        seed,
        n_states: mdp.n_states,
        n_actions: mdp.n_actions,
        n_features: closure.features.len(),
        ipm: config.ipm.label().to_string(),
        gamma,
        eps,
        delta,
        kappa: kap,
        delta_gap: gap,
        thm1_rhs,
        cor_rhs,
        span_r: constants.span_r,
        span_v,
        l_r: constants.l_r,
        l_p: constants.l_p,
        l_f: constants.l_f,
        l_v_measured: constants.l_v_measured,
        l_v_fixpoint,
        rkhs_warnings,
        violated,
        lemma_violated: !(span_lemma_ok && lipschitz_lemma_ok),
    })
}

struct InstanceConstants {
    span_r: f64,
    l_r: f64,
    l_p: f64,
    l_f: f64,
    l_v_measured: f64,
}

/// Lipschitz constants of the generator over its closure, with the
/// discrete metric on features and the configured metric on states.
fn instance_constants(
    gen: &TabularAisGenerator,
    solution: &AisDpSolution,
    config: &BoundConfig,
) -> Result<InstanceConstants> {
    let feats = &solution.features;
    let nf = feats.len();
    let feature_metric = MetricSpec::Discrete;
    let feature_points = PointSet::Ids(nf);
    let state_points = PointSet::Ids(gen.n_states);

    let mut span_lo = f64::INFINITY;
    let mut span_hi = f64::NEG_INFINITY;
    let mut l_r = 0.0f64;
    let mut l_p = 0.0f64;
    for a in 0..gen.n_actions {
        let r_vals: Vec<f64> = feats.iter().map(|&z| gen.reward_hat[z][a]).collect();
        for &r in &r_vals {
            span_lo = span_lo.min(r);
            span_hi = span_hi.max(r);
        }
        if nf >= 2 {
            l_r = l_r.max(lipschitz_fn(&r_vals, &feature_metric, &feature_points)?);
            let rows: Vec<DiscreteDist> = feats
                .iter()
                .map(|&z| DiscreteDist::new_unchecked(gen.transition_hat[z][a].clone()))
                .collect();
            l_p = l_p.max(lipschitz_kernel(
                &rows,
                &feature_metric,
                &feature_points,
                &config.state_metric,
                &state_points,
            )?);
        }
    }

    // L_f: Lipschitz of the update in the state argument, feature distance
    // discrete, state distance per config.
    let mut l_f = 0.0f64;
    for &z in feats {
        for a in 0..gen.n_actions {
            for s1 in 0..gen.n_states {
                for s2 in (s1 + 1)..gen.n_states {
                    let dz = if gen.update[z][s1][a] == gen.update[z][s2][a] {
                        0.0
                    } else {
                        1.0
                    };
                    let ds = config.state_metric.distance(&state_points, s1, s2);
                    if ds == 0.0 {
                        if dz > 0.0 {
                            return Err(Error::InvalidInput(
                                "update separates states at zero distance".into(),
                            ));
                        }
                    } else {
                        l_f = l_f.max(dz / ds);
                    }
                }
            }
        }
    }

    let l_v_measured = if nf >= 2 {
        lipschitz_fn(&solution.v_hat, &feature_metric, &feature_points)?
    } else {
        0.0
    };

    Ok(InstanceConstants {
        span_r: if nf == 0 { 0.0 } else { span_hi - span_lo },
        l_r,
        l_p,
        l_f,
        l_v_measured,
    })
}

/// Campaign over random `(MDP, partition)` instances.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub instances: usize,
    pub seed: u64,
    pub max_states: usize,
    pub max_actions: usize,
    pub ipms: Vec<IpmChoice>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            instances: 200,
            seed: 7,
            max_states: 8,
            max_actions: 4,
            ipms: vec![IpmChoice::Tv, IpmChoice::Wasserstein, IpmChoice::Mmd],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub reports: Vec<BoundReport>,
    pub counterexamples: Vec<Counterexample>,
}

/// Random instance for a campaign seed: a Dirichlet MDP with a random
/// discount and a random surjective partition, aggregated uniformly.
pub fn random_instance(seed: u64, max_states: usize, max_actions: usize) -> (TabularMdp, TabularAisGenerator) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x5851_f42d_4c95_7f2d).wrapping_add(11));
    let n_states = rng.random_range(2..=max_states.max(2));
    let n_actions = rng.random_range(1..=max_actions.max(1));
    let mut mdp = random_mdp(n_states, n_actions, rng.random(), (-1.0, 1.0));
    mdp.gamma = rng.random_range(0.5..0.97);
    let n_classes = rng.random_range(1..=n_states);
    let mut partition: Vec<usize> = (0..n_states).map(|_| rng.random_range(0..n_classes)).collect();
    // Relabel to consecutive class ids so no class is empty.
    let mut relabel = std::collections::BTreeMap::new();
    for p in partition.iter_mut() {
        let next = relabel.len();
        *p = *relabel.entry(*p).or_insert(next);
    }
    let gen = quantizer_ais(&mdp, &partition, QuantizerWeights::Uniform).expect("valid partition");
    (mdp, gen)
}

/// Run the campaign; reports come back in deterministic (seed, ipm) order.
pub fn run_bound_campaign(config: &CampaignConfig) -> Result<CampaignOutcome> {
    let mut reports = Vec::with_capacity(config.instances * config.ipms.len());
    let mut counterexamples = Vec::new();
    for i in 0..config.instances {
        let inst_seed = config.seed.wrapping_add(i as u64);
        let (mdp, gen) = random_instance(inst_seed, config.max_states, config.max_actions);
        for &ipm in &config.ipms {
            let bc = BoundConfig::new(ipm);
            let report = bound_report(&mdp, &gen, &bc, inst_seed)?;
            if report.violated || report.lemma_violated {
                counterexamples.push(Counterexample {
                    mdp: mdp.clone(),
                    generator: gen.clone(),
                    report: report.clone(),
                });
            }
            reports.push(report);
        }
    }
    Ok(CampaignOutcome {
        reports,
        counterexamples,
    })
}
