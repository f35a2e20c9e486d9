//! Batch commands: bound campaigns, training runs, variant comparisons,
//! and the toy walkthrough.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{BoundsConfig, CompareConfig, ToyDemoConfig, TrainCommandConfig, VariantSpec};
use super::plot::{learning_curves_svg, median_iqr, CurveSeries};
use crate::ais::{quantizer_ais, LossIpm, QuantizerWeights, TabularAisGenerator};
use crate::ais_dp::{bound_report, run_bound_campaign, BoundConfig, BoundReport, CampaignConfig};
use crate::error::{Error, Result};
use crate::ipm::IpmChoice;
use crate::mdp::{
    codebook_fsm_policy, pointmass_env, toy_mdp, value_iteration, HistoryPolicy,
    product_chain_value, random_mdp, StationaryPolicy,
};
use crate::train::{
    train_loop_tabular, train_pointmass_ppo, MmdLossKernel, TabularAgentKind, TrainConfig,
    TrainMetricsRow, METRICS_CSV_HEADER,
};

pub const TOY_K: f64 = 100.0;
pub const TOY_GAMMA: f64 = 0.95;

/// Result summary a command hands back to the exit-code mapping.
#[derive(Debug, Clone, Default)]
pub struct CommandOutcome {
    pub violations: usize,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn parse_ipm(label: &str) -> Result<IpmChoice> {
    match label {
        "tv" => Ok(IpmChoice::Tv),
        "w" | "wass" | "wasserstein" => Ok(IpmChoice::Wasserstein),
        "mmd" | "mmd-energy" => Ok(IpmChoice::Mmd),
        other => Err(Error::Config(format!("unknown ipm {other:?}"))),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// The binding two-feature abstraction of the toy MDP: states 1 and 2
/// share a feature, which is what caps every memoryless policy well below
/// the optimum (partitions separating 1 from 2 can reproduce the optimal
/// restricted chain).
pub fn toy_aliasing_partition() -> Vec<usize> {
    vec![0, 1, 1, 0]
}

/// `bounds`: run bound reports over a preset or a random campaign, write
/// one CSV row per (instance, IPM), and counterexample JSON files for any
/// violation.
pub fn cmd_bounds(cfg: &BoundsConfig, out_dir: &Path) -> Result<CommandOutcome> {
    let ipms: Result<Vec<IpmChoice>> = cfg.ipms.iter().map(|s| parse_ipm(s)).collect();
    let ipms = ipms?;
    if ipms.is_empty() {
        return Err(Error::Config("need at least one ipm".into()));
    }
    let seed = cfg.seed.unwrap_or(7);
    let mut reports: Vec<BoundReport> = Vec::new();
    let mut counterexamples = Vec::new();

    match (cfg.preset.as_deref(), cfg.random_instances) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("preset and random_instances are mutually exclusive".into()))
        }
        (Some("toy"), None) => {
            let mdp = toy_mdp(TOY_K, TOY_GAMMA);
            let gen = quantizer_ais(&mdp, &toy_aliasing_partition(), QuantizerWeights::Uniform)?;
            for &ipm in &ipms {
                let report = bound_report(&mdp, &gen, &BoundConfig::new(ipm), seed)?;
                if report.violated || report.lemma_violated {
                    counterexamples.push((mdp.clone(), gen.clone(), report.clone()));
                }
                reports.push(report);
            }
        }
        (Some("identity"), None) => {
            for i in 0..50u64 {
                let mdp = random_mdp(5, 3, seed.wrapping_add(i), (-1.0, 1.0));
                let gen = TabularAisGenerator::identity(&mdp);
                for &ipm in &ipms {
                    let report = bound_report(&mdp, &gen, &BoundConfig::new(ipm), seed.wrapping_add(i))?;
                    if report.violated || report.lemma_violated {
                        counterexamples.push((mdp.clone(), gen.clone(), report.clone()));
                    }
                    reports.push(report);
                }
            }
        }
        (Some(other), None) => {
            return Err(Error::Config(format!("unknown preset {other:?}")));
        }
        (None, n) => {
            let campaign = CampaignConfig {
                instances: n.unwrap_or(200),
                seed,
                max_states: cfg.max_states,
                max_actions: cfg.max_actions,
                ipms: ipms.clone(),
            };
            let outcome = run_bound_campaign(&campaign)?;
            reports = outcome.reports;
            for ce in outcome.counterexamples {
                counterexamples.push((ce.mdp, ce.generator, ce.report));
            }
        }
    }

    let mut csv = String::from(BoundReport::CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let mut outcome = CommandOutcome::default();
    outcome.files.push(write_file(out_dir, "bounds.csv", &csv)?);
    for (i, (mdp, gen, report)) in counterexamples.iter().enumerate() {
        let doc = serde_json::to_string_pretty(&serde_json::json!({
            "mdp": mdp,
            "generator": gen,
            "report": report,
        }))?;
        outcome
            .files
            .push(write_file(out_dir, &format!("counterexample_{i}.json"), &doc)?);
    }
    outcome.violations = counterexamples.len();
    outcome.summary = format!(
        "bounds: {} reports, {} violations",
        reports.len(),
        outcome.violations
    );
    Ok(outcome)
}

fn thread_cap() -> usize {
    std::env::var("AISLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
                .min(8)
        })
}

/// Fan seeds out across worker threads; results return in seed order.
fn run_seeds<F>(seeds: &[u64], runner: F) -> Result<Vec<(u64, Vec<TrainMetricsRow>)>>
where
    F: Fn(u64) -> Result<Vec<TrainMetricsRow>> + Sync,
{
    let threads = thread_cap().min(seeds.len().max(1));
    let mut results: Vec<Option<Result<Vec<TrainMetricsRow>>>> =
        (0..seeds.len()).map(|_| None).collect();
    let chunks: Vec<Vec<usize>> = (0..threads)
        .map(|t| (t..seeds.len()).step_by(threads).collect())
        .collect();
    let slots: Vec<std::sync::Mutex<Option<Result<Vec<TrainMetricsRow>>>>> =
        (0..seeds.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for chunk in &chunks {
            let runner = &runner;
            let slots = &slots;
            scope.spawn(move || {
                for &idx in chunk {
                    let out = runner(seeds[idx]);
                    *slots[idx].lock().unwrap() = Some(out);
                }
            });
        }
    });
    for (i, slot) in slots.into_iter().enumerate() {
        results[i] = slot.into_inner().unwrap();
    }
    let mut out = Vec::with_capacity(seeds.len());
    for (i, r) in results.into_iter().enumerate() {
        out.push((seeds[i], r.expect("runner completed")?));
    }
    Ok(out)
}

fn metrics_csv(rows: &[TrainMetricsRow]) -> String {
    let mut csv = String::from(METRICS_CSV_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    csv
}

fn aggregate_rows(per_seed: &[(u64, Vec<TrainMetricsRow>)]) -> (String, CurveSeries) {
    let iters = per_seed.iter().map(|(_, rows)| rows.len()).min().unwrap_or(0);
    let mut csv = String::from("iteration,return_median,return_q1,return_q3,ais_loss_median\n");
    let mut series = CurveSeries {
        name: String::new(),
        median: Vec::with_capacity(iters),
        q1: Vec::with_capacity(iters),
        q3: Vec::with_capacity(iters),
    };
    for t in 0..iters {
        let mut returns: Vec<f64> = per_seed.iter().map(|(_, rows)| rows[t].mean_return).collect();
        let (med, q1, q3) = median_iqr(&mut returns);
        let mut losses: Vec<f64> = per_seed.iter().map(|(_, rows)| rows[t].ais_loss).collect();
        let (loss_med, _, _) = median_iqr(&mut losses);
        csv.push_str(&format!("{t},{med},{q1},{q3},{loss_med}\n"));
        series.median.push(med);
        series.q1.push(q1);
        series.q3.push(q3);
    }
    (csv, series)
}

fn resolve_seeds(cfg_seeds: &Option<Vec<u64>>, single: Option<u64>, fallback: &[u64]) -> Vec<u64> {
    if let Some(seeds) = cfg_seeds {
        seeds.clone()
    } else if let Some(s) = single {
        vec![s]
    } else {
        fallback.to_vec()
    }
}

fn run_variant(
    env: &str,
    agent: &str,
    train: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<(u64, Vec<TrainMetricsRow>)>> {
    match (env, agent) {
        ("toy", "ais-ppo") | ("toy", "ppo") => {
            Err(Error::Config("ppo agent runs on the pointmass env".into()))
        }
        ("toy", agent) => {
            let mdp = toy_mdp(TOY_K, TOY_GAMMA);
            let mut train = train.clone();
            train.gamma = TOY_GAMMA;
            let kind = match agent {
                "ais-ac" => TabularAgentKind::AisActorCritic,
                "ais-pg" => TabularAgentKind::AisPolicyGradient,
                "memoryless" => TabularAgentKind::Memoryless {
                    partition: toy_aliasing_partition(),
                },
                other => return Err(Error::Config(format!("unknown agent {other:?}"))),
            };
            run_seeds(seeds, |seed| {
                train_loop_tabular(&mdp, kind.clone(), &train, seed)
            })
        }
        ("pointmass", agent) => {
            if !matches!(agent, "ais-ppo" | "ppo") {
                return Err(Error::Config(format!(
                    "agent {agent:?} is not available on pointmass; use ais-ppo"
                )));
            }
            let env = pointmass_env(0.05, 0.5, train.episode_len);
            run_seeds(seeds, |seed| train_pointmass_ppo(&env, train, seed))
        }
        (other, _) => Err(Error::Config(format!("unknown env {other:?}"))),
    }
}

/// `train`: per-seed metrics CSVs plus a median/IQR aggregate and an SVG
/// learning curve.
pub fn cmd_train(cfg: &TrainCommandConfig, out_dir: &Path) -> Result<CommandOutcome> {
    let seeds = resolve_seeds(&cfg.seeds, cfg.seed, &cfg.train.seeds);
    if seeds.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }
    let per_seed = run_variant(&cfg.env, &cfg.agent, &cfg.train, &seeds)?;
    let mut outcome = CommandOutcome::default();
    for (seed, rows) in &per_seed {
        outcome
            .files
            .push(write_file(out_dir, &format!("metrics_seed{seed}.csv"), &metrics_csv(rows))?);
    }
    let (agg_csv, mut series) = aggregate_rows(&per_seed);
    series.name = format!("{}/{}", cfg.env, cfg.agent);
    outcome.files.push(write_file(out_dir, "aggregate.csv", &agg_csv)?);
    let svg = learning_curves_svg(
        &[series],
        &format!("{} on {}", cfg.agent, cfg.env),
        "iteration",
        "return",
    );
    outcome.files.push(write_file(out_dir, "learning_curve.svg", &svg)?);
    outcome.summary = format!("train: {} seeds, {} iterations", seeds.len(), cfg.train.iterations);
    Ok(outcome)
}

fn apply_variant(base: &TrainConfig, spec: &VariantSpec) -> Result<TrainConfig> {
    let mut train = base.clone();
    if let Some(ipm) = &spec.ipm {
        train.ipm = match ipm.as_str() {
            "mmd" | "mmd-energy" => LossIpm::Mmd,
            "kl" => LossIpm::Kl,
            "tv" => LossIpm::Tv,
            other => return Err(Error::Config(format!("unknown loss ipm {other:?}"))),
        };
    }
    if let Some(kernel) = &spec.mmd_kernel {
        let width = spec.kernel_width.unwrap_or(1.0);
        train.mmd_kernel = match kernel.as_str() {
            "mean" => MmdLossKernel::Mean,
            "energy" => MmdLossKernel::Energy,
            "gaussian" => MmdLossKernel::Gaussian { bandwidth: width },
            "laplace" => MmdLossKernel::Laplace { scale: width },
            other => return Err(Error::Config(format!("unknown kernel {other:?}"))),
        };
    }
    Ok(train)
}

/// `compare`: run each variant with shared seeds, emit a side-by-side
/// aggregate CSV and an overlaid SVG.
pub fn cmd_compare(cfg: &CompareConfig, out_dir: &Path) -> Result<CommandOutcome> {
    if cfg.variants.len() < 2 {
        return Err(Error::Config("compare needs at least two variants".into()));
    }
    let seeds = resolve_seeds(&cfg.seeds, None, &cfg.train.seeds);
    let default_agent = cfg.agent.clone().unwrap_or_else(|| {
        if cfg.env == "pointmass" {
            "ais-ppo".into()
        } else {
            "ais-ac".into()
        }
    });
    let mut all_series = Vec::new();
    let mut per_variant: Vec<(String, Vec<(u64, Vec<TrainMetricsRow>)>)> = Vec::new();
    for spec in &cfg.variants {
        let agent = spec.agent.clone().unwrap_or_else(|| default_agent.clone());
        let train = apply_variant(&cfg.train, spec)?;
        let rows = run_variant(&cfg.env, &agent, &train, &seeds)?;
        let (_, mut series) = aggregate_rows(&rows);
        series.name = spec.name.clone();
        all_series.push(series);
        per_variant.push((spec.name.clone(), rows));
    }
    let iters = all_series.iter().map(|s| s.median.len()).min().unwrap_or(0);
    let mut csv = String::from("iteration");
    for (name, _) in &per_variant {
        csv.push_str(&format!(",{name}_median,{name}_q1,{name}_q3"));
    }
    csv.push('\n');
    for t in 0..iters {
        csv.push_str(&t.to_string());
        for s in &all_series {
            csv.push_str(&format!(",{},{},{}", s.median[t], s.q1[t], s.q3[t]));
        }
        csv.push('\n');
    }
    let mut outcome = CommandOutcome::default();
    outcome.files.push(write_file(out_dir, "compare.csv", &csv)?);
    let svg = learning_curves_svg(&all_series, &format!("variants on {}", cfg.env), "iteration", "return");
    outcome.files.push(write_file(out_dir, "compare.svg", &svg)?);
    outcome.summary = format!("compare: {} variants, {} seeds", cfg.variants.len(), seeds.len());
    Ok(outcome)
}

/// `toy-demo`: the opening-example walkthrough as a text report. Any
/// failing claim is an error (nonzero exit).
pub fn cmd_toy_demo(_cfg: &ToyDemoConfig) -> Result<String> {
    let mut out = String::new();
    let mdp = toy_mdp(TOY_K, TOY_GAMMA);
    let vi = value_iteration(&mdp, 1e-10)?;
    let greedy = vi.pi_star.greedy_actions();
    out.push_str(&format!(
        "optimal policy: pi*(0)={} pi*(1)={} pi*(2)={} pi*(3)={}\n",
        greedy[0], greedy[1], greedy[2], greedy[3]
    ));
    if greedy != vec![0, 0, 1, 2] {
        return Err(Error::BoundViolation("unexpected optimal policy on the toy MDP".into()));
    }
    out.push_str(&format!(
        "v*: [{:.4}, {:.4}, {:.4}, {:.4}]\n",
        vi.v_star[0], vi.v_star[1], vi.v_star[2], vi.v_star[3]
    ));

    // FSM equivalence: exhaustive branch enumeration from each start.
    let fsm = codebook_fsm_policy(vi.pi_star.clone())?;
    let depth = 12;
    for &start in &[0usize, 1, 2] {
        let mut state3_hit = false;
        let mut stack = vec![(start, fsm.init(start), 0usize)];
        while let Some((s, mem, d)) = stack.pop() {
            let probs = fsm.act(&mem);
            let a = crate::mdp::argmax_lowest(&probs);
            if a != greedy[s] {
                return Err(Error::BoundViolation(format!(
                    "fsm action {a} disagrees with pi*({s})={}",
                    greedy[s]
                )));
            }
            if d == depth {
                continue;
            }
            for (sp, &p) in mdp.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    if sp == 3 {
                        state3_hit = true;
                    }
                    stack.push((sp, fsm.step(&mem, a, sp)?, d + 1));
                }
            }
        }
        if state3_hit {
            return Err(Error::BoundViolation(format!(
                "state 3 reachable from start {start} under the fsm policy"
            )));
        }
        out.push_str(&format!(
            "fsm from start {start}: actions match pi* on all {depth}-step branches; state 3 unreachable\n"
        ));
    }

    // Memoryless failure: with states 1 and 2 aliased, every deterministic
    // two-feature policy loses more than 10 at state 2. Partitions that
    // separate 1 from 2 can reproduce the optimal restricted chain, so the
    // report states the exact boundary.
    let mut binding_gap = f64::INFINITY;
    let mut n_binding = 0;
    let mut escape_found = false;
    for partition in two_class_partitions(4) {
        let gen = quantizer_ais(&mdp, &partition, QuantizerWeights::Uniform)?;
        let mut min_gap = f64::INFINITY;
        for a0 in 0..3 {
            for a1 in 0..3 {
                let mu = StationaryPolicy::deterministic(&[a0, a1], 3);
                let value = product_chain_value(&mdp, &gen, &mu, &[0, 1, 2, 3])?;
                let v2 = value
                    .get(2, partition[2])
                    .ok_or_else(|| Error::InvalidInput("missing (2, phi(2))".into()))?;
                min_gap = min_gap.min(vi.v_star[2] - v2);
            }
        }
        if partition[1] == partition[2] {
            binding_gap = binding_gap.min(min_gap);
            n_binding += 9;
        } else if min_gap.abs() <= 1e-8 {
            escape_found = true;
        }
    }
    out.push_str(&format!(
        "memoryless two-feature policies with states 1,2 aliased: {n_binding} evaluated, min gap v*(2) - v(2) = {binding_gap:.4}\n"
    ));
    out.push_str(
        "partitions separating states 1 and 2 admit a policy matching v*(2) exactly (the aliasing is what binds)\n",
    );
    if binding_gap <= 10.0 {
        return Err(Error::BoundViolation(
            "an aliasing two-feature policy came within 10 of the optimal value".into(),
        ));
    }
    if !escape_found {
        return Err(Error::BoundViolation(
            "expected a separating partition to reproduce the optimal restricted chain".into(),
        ));
    }
    Ok(out)
}

/// All surjective two-class partitions of `n` states (up to label swap).
pub fn two_class_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    // Fix state 0 in class 0 to quotient out the label swap.
    for mask in 0..(1u32 << (n - 1)) {
        let partition: Vec<usize> = (0..n)
            .map(|s| {
                if s == 0 {
                    0
                } else if mask >> (s - 1) & 1 == 1 {
                    1
                } else {
                    0
                }
            })
            .collect();
        if partition.iter().any(|&c| c == 1) {
            out.push(partition);
        }
    }
    out
}
