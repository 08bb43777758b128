//! Semi-bandit simulation on built instances.
//!
//! An episode plays `T` rounds against a [`DisjointInstance`]: each round a
//! strategy picks an action, the environment draws the coupled block and the
//! independent common arms, and every pulled arm's outcome is revealed
//! (semi-bandit feedback). Pseudo-regret accumulates the true gap whenever a
//! suboptimal action is chosen — never realized samples — and is recorded at
//! power-of-two checkpoints plus the horizon.
//!
//! Strategies: an oracle (always optimal, a degenerate reference), uniform
//! round-robin, ε-greedy with `ε_t = min(1, |A|/t)`, a Hoeffding-style
//! optimistic index `μ̂ + √(1.5·ln t / n)`, and an empirical-Bernstein index
//! `μ̂ + √(2·V̂·ln t / n) + 3·ln t / n`. Indices are clamped to [0,1] before
//! the reward is evaluated; ties break toward the lowest action index.
//!
//! Identical `(instance, strategy, horizon, seed)` inputs produce
//! byte-identical traces; replicate episodes only differ through their seeds,
//! so running them in parallel does not change any trace.

use crate::bounds::{BoundKind, BoundReport};
use crate::instance::{DisjointInstance, InstanceError};
use crate::rewards::RewardModel;
use crate::rng::trial_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Acceptance band for the regret-to-bound ratio.
pub const COMPARISON_BAND: (f64, f64) = (0.05, 100.0);
/// Minimum number of traces [`compare_to_bound`] accepts.
pub const MIN_TRACES: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("comparison needs at least {needed} traces, got {got}")]
    TooFewTraces { needed: usize, got: usize },
    #[error("traces disagree on {0}; they must come from one configuration")]
    MixedTraces(&'static str),
    #[error("reference bound is not positive; nothing to compare against")]
    DegenerateReference,
    #[error("strategy `{0}` requires a monotone reward")]
    NonMonotoneReward(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Plays the optimal action every round; regret is identically zero.
    Oracle,
    RoundRobin,
    EpsilonGreedy,
    Cucb,
    Bcucb,
}

impl StrategyKind {
    pub fn parse(name: &str) -> Result<Self, SimError> {
        match name {
            "oracle" => Ok(StrategyKind::Oracle),
            "round-robin" => Ok(StrategyKind::RoundRobin),
            "epsilon-greedy" => Ok(StrategyKind::EpsilonGreedy),
            "cucb" => Ok(StrategyKind::Cucb),
            "bcucb" => Ok(StrategyKind::Bcucb),
            other => Err(SimError::UnknownStrategy(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Oracle => "oracle",
            StrategyKind::RoundRobin => "round-robin",
            StrategyKind::EpsilonGreedy => "epsilon-greedy",
            StrategyKind::Cucb => "cucb",
            StrategyKind::Bcucb => "bcucb",
        }
    }

    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Oracle,
        StrategyKind::RoundRobin,
        StrategyKind::EpsilonGreedy,
        StrategyKind::Cucb,
        StrategyKind::Bcucb,
    ];

    fn needs_initialization(self) -> bool {
        matches!(
            self,
            StrategyKind::EpsilonGreedy | StrategyKind::Cucb | StrategyKind::Bcucb
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub regret: f64,
}

/// One episode's cumulative pseudo-regret at the checkpoint grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub schema_version: u32,
    pub instance_id: String,
    pub strategy: String,
    pub seed: u64,
    pub horizon: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_regret: f64,
}

/// Per-arm running statistics (Welford).
struct ArmStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ArmStats {
    fn update(&mut self, outcome: f64) {
        self.count += 1;
        let delta = outcome - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (outcome - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }
}

struct Episode<'a> {
    instance: &'a DisjointInstance,
    model: RewardModel,
    /// Indexed by arm id − 1.
    stats: Vec<ArmStats>,
    /// Scratch for per-action optimistic mean vectors.
    scratch: Vec<f64>,
}

impl<'a> Episode<'a> {
    fn new(instance: &'a DisjointInstance) -> Result<Self, SimError> {
        let model = instance.reward_model()?;
        let stats =
            (0..instance.m).map(|_| ArmStats { count: 0, mean: 0.0, m2: 0.0 }).collect();
        Ok(Episode { instance, model, stats, scratch: vec![0.0; instance.k] })
    }

    fn observe(&mut self, observations: &[(usize, u8)]) {
        for &(arm, outcome) in observations {
            self.stats[arm - 1].update(outcome as f64);
        }
    }

    /// Argmax of the reward over actions with per-arm values produced by
    /// `index`; ties resolve to the lowest action index.
    fn best_action<F>(&mut self, mut index: F) -> usize
    where
        F: FnMut(&ArmStats) -> f64,
    {
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for (a, action) in self.instance.actions.iter().enumerate() {
            for (slot, &arm) in action.iter().enumerate() {
                self.scratch[slot] = index(&self.stats[arm - 1]).clamp(0.0, 1.0);
            }
            let value = self
                .model
                .evaluate(&self.scratch)
                .expect("clamped indices are a valid mean vector");
            if value > best_value {
                best_value = value;
                best = a;
            }
        }
        best
    }

    fn choose<R: Rng>(&mut self, kind: StrategyKind, t: u64, rng: &mut R) -> usize {
        let num_actions = self.instance.num_actions() as u64;
        if kind.needs_initialization() && t <= num_actions {
            return (t - 1) as usize;
        }
        match kind {
            StrategyKind::Oracle => self.instance.optimal_index,
            StrategyKind::RoundRobin => ((t - 1) % num_actions) as usize,
            StrategyKind::EpsilonGreedy => {
                let eps = (num_actions as f64 / t as f64).min(1.0);
                let u: f64 = rng.gen();
                if u <= eps {
                    rng.gen_range(0..num_actions as usize)
                } else {
                    self.best_action(|s| s.mean)
                }
            }
            StrategyKind::Cucb => {
                let log_t = (t as f64).ln();
                self.best_action(|s| s.mean + (1.5 * log_t / s.count as f64).sqrt())
            }
            StrategyKind::Bcucb => {
                let log_t = (t as f64).ln();
                self.best_action(|s| {
                    let n = s.count as f64;
                    s.mean + (2.0 * s.variance() * log_t / n).sqrt() + 3.0 * log_t / n
                })
            }
        }
    }
}

/// Runs one episode. The environment and the strategy draw from separate,
/// documented streams of the seeded generator, so traces are reproducible
/// across platforms and run orders.
pub fn run_episode(
    instance: &DisjointInstance,
    strategy: StrategyKind,
    horizon: u64,
    seed: u64,
) -> Result<RegretTrace, SimError> {
    if horizon == 0 {
        return Err(SimError::BadHorizon);
    }
    // Optimistic indices are only valid upper confidence bounds on the
    // reward when it is coordinatewise nondecreasing.
    if matches!(strategy, StrategyKind::Cucb | StrategyKind::Bcucb)
        && !instance.reward_model()?.monotone()
    {
        return Err(SimError::NonMonotoneReward(strategy.name()));
    }
    let mut episode = Episode::new(instance)?;
    let mut env_rng = trial_rng(seed, 0);
    let mut strategy_rng = trial_rng(seed, 1);
    let gap = instance.gap;
    let optimal = instance.optimal_index;

    let mut regret = 0.0;
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = 1u64;
    for t in 1..=horizon {
        let action = episode.choose(strategy, t, &mut strategy_rng);
        if action != optimal {
            regret += gap;
        }
        let observations = instance.sample_round(&mut env_rng, action)?;
        episode.observe(&observations);
        if t == next_checkpoint || t == horizon {
            checkpoints.push(Checkpoint { t, regret });
            while next_checkpoint <= t {
                next_checkpoint *= 2;
            }
        }
    }
    Ok(RegretTrace {
        schema_version: crate::SCHEMA_VERSION,
        instance_id: instance.instance_id(),
        strategy: strategy.name().to_string(),
        seed,
        horizon,
        checkpoints,
        final_regret: regret,
    })
}

/// Replicated episodes over the given seeds, run concurrently. The output
/// order matches `seeds`, and each trace is identical to a serial
/// [`run_episode`] call.
pub fn run_many(
    instance: &DisjointInstance,
    strategy: StrategyKind,
    horizon: u64,
    seeds: &[u64],
) -> Result<Vec<RegretTrace>, SimError> {
    seeds
        .par_iter()
        .map(|&seed| run_episode(instance, strategy, horizon, seed))
        .collect()
}

/// Summary of a trace set against a lower-bound report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub schema_version: u32,
    pub instance_id: String,
    pub strategy: String,
    pub num_traces: usize,
    pub horizon: u64,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
    /// `DB*·ln T` for dependent reports, `IB*` for independent ones.
    pub reference: f64,
    pub ratio: f64,
    pub band_low: f64,
    pub band_high: f64,
    /// `"ok"`, `"low"`, or `"high"`; outside-band ratios are anomalies
    /// (an oracle run is expected to flag `"low"`).
    pub flag: String,
}

/// Compares mean final regret across ≥ 10 same-configuration traces to the
/// bound: dependent bounds are scaled by `ln T` first, independent bounds
/// are used as-is.
pub fn compare_to_bound(
    traces: &[RegretTrace],
    report: &BoundReport,
) -> Result<BoundComparison, SimError> {
    if traces.len() < MIN_TRACES {
        return Err(SimError::TooFewTraces { needed: MIN_TRACES, got: traces.len() });
    }
    let first = &traces[0];
    if traces.iter().any(|t| t.instance_id != first.instance_id) {
        return Err(SimError::MixedTraces("instance"));
    }
    if traces.iter().any(|t| t.horizon != first.horizon) {
        return Err(SimError::MixedTraces("horizon"));
    }
    if traces.iter().any(|t| t.strategy != first.strategy) {
        return Err(SimError::MixedTraces("strategy"));
    }
    let n = traces.len() as f64;
    let mean = traces.iter().map(|t| t.final_regret).sum::<f64>() / n;
    let ss: f64 = traces.iter().map(|t| (t.final_regret - mean).powi(2)).sum();
    let stderr = (ss / (n - 1.0)).sqrt() / n.sqrt();
    let reference = match report.kind {
        BoundKind::Dependent => report.value * (first.horizon as f64).ln(),
        BoundKind::Independent => report.value,
    };
    if !(reference > 0.0) {
        return Err(SimError::DegenerateReference);
    }
    let ratio = mean / reference;
    let (band_low, band_high) = COMPARISON_BAND;
    let flag = if ratio < band_low {
        "low"
    } else if ratio > band_high {
        "high"
    } else {
        "ok"
    };
    Ok(BoundComparison {
        schema_version: crate::SCHEMA_VERSION,
        instance_id: first.instance_id.clone(),
        strategy: first.strategy.clone(),
        num_traces: traces.len(),
        horizon: first.horizon,
        mean_final_regret: mean,
        stderr_final_regret: stderr,
        reference,
        ratio,
        band_low,
        band_high,
        flag: flag.to_string(),
    })
}

/// Renders traces as `seed,t,cumulative_regret` CSV.
pub fn traces_to_csv(traces: &[RegretTrace]) -> String {
    let mut out = String::from("seed,t,cumulative_regret\n");
    for trace in traces {
        for cp in &trace.checkpoints {
            out.push_str(&format!("{},{},{}\n", trace.seed, cp.t, cp.regret));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::build_dependent_instance;

    fn test_instance() -> DisjointInstance {
        let model = RewardModel::Linear { k: 3 };
        build_dependent_instance(&model, &[0.5, 0.5, 0.5], 0.1, 15).unwrap()
    }

    #[test]
    fn oracle_has_zero_regret() {
        let instance = test_instance();
        let trace = run_episode(&instance, StrategyKind::Oracle, 1000, 7).unwrap();
        assert_eq!(trace.final_regret, 0.0);
        assert!(trace.checkpoints.iter().all(|c| c.regret == 0.0));
        assert_eq!(trace.checkpoints.last().unwrap().t, 1000);
    }

    #[test]
    fn round_robin_matches_closed_form() {
        let instance = test_instance();
        let horizon = 1000;
        let trace = run_episode(&instance, StrategyKind::RoundRobin, horizon, 3).unwrap();
        // 5 actions, the optimal one every fifth round starting at t=1:
        // regret = Δ·(T − ⌈T/5⌉).
        let expected = instance.gap * (1000.0 - 200.0);
        assert!((trace.final_regret - expected).abs() < 1e-9);
    }

    #[test]
    fn regret_is_nondecreasing_and_gap_bounded() {
        let instance = test_instance();
        for kind in StrategyKind::ALL {
            let trace = run_episode(&instance, kind, 500, 11).unwrap();
            let mut prev = 0.0;
            for cp in &trace.checkpoints {
                assert!(cp.regret >= prev, "{} regressed", kind.name());
                assert!(cp.regret <= instance.gap * cp.t as f64 + 1e-9);
                prev = cp.regret;
            }
            assert_eq!(trace.final_regret, prev);
        }
    }

    #[test]
    fn traces_are_deterministic() {
        let instance = test_instance();
        for kind in [StrategyKind::EpsilonGreedy, StrategyKind::Cucb, StrategyKind::Bcucb] {
            let a = run_episode(&instance, kind, 2000, 5).unwrap();
            let b = run_episode(&instance, kind, 2000, 5).unwrap();
            assert_eq!(a, b);
            let c = run_episode(&instance, kind, 2000, 6).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn parallel_replication_matches_serial() {
        let instance = test_instance();
        let seeds: Vec<u64> = (0..12).collect();
        let many = run_many(&instance, StrategyKind::Cucb, 500, &seeds).unwrap();
        for (i, trace) in many.iter().enumerate() {
            let serial =
                run_episode(&instance, StrategyKind::Cucb, 500, seeds[i]).unwrap();
            assert_eq!(*trace, serial);
        }
    }

    #[test]
    fn adaptive_strategies_beat_round_robin_here() {
        // Single-coordinate actions with a wide gap: the horizon comfortably
        // exceeds the exploration budget every adaptive strategy needs, so
        // each must end far below uniform play.
        let model = RewardModel::Linear { k: 1 };
        let instance = build_dependent_instance(&model, &[0.5], 0.2, 5).unwrap();
        let horizon = 100_000;
        let seeds: Vec<u64> = (0..10).collect();
        let mean = |kind: StrategyKind| {
            let traces = run_many(&instance, kind, horizon, &seeds).unwrap();
            traces.iter().map(|t| t.final_regret).sum::<f64>() / seeds.len() as f64
        };
        let rr = mean(StrategyKind::RoundRobin);
        for kind in [StrategyKind::Cucb, StrategyKind::Bcucb] {
            let got = mean(kind);
            assert!(got < rr / 2.0, "{} did not beat round-robin: {got} vs {rr}", kind.name());
        }
        // ε-greedy's fixed A/t schedule explores only logarithmically, so a
        // seed can lock onto a bad arm; on average it still clearly beats
        // uniform play.
        let eg = mean(StrategyKind::EpsilonGreedy);
        assert!(eg < rr * 0.8, "epsilon-greedy did not beat round-robin: {eg} vs {rr}");
    }

    #[test]
    fn every_round_observes_exactly_one_action_worth_of_arms() {
        let instance = test_instance();
        let mut episode = Episode::new(&instance).unwrap();
        let mut env_rng = trial_rng(9, 0);
        let mut strategy_rng = trial_rng(9, 1);
        let rounds = 200u64;
        for t in 1..=rounds {
            let action = episode.choose(StrategyKind::Cucb, t, &mut strategy_rng);
            let observations = instance.sample_round(&mut env_rng, action).unwrap();
            assert_eq!(observations.len(), instance.k);
            episode.observe(&observations);
            let total: u64 = episode.stats.iter().map(|s| s.count).sum();
            assert_eq!(total, t * instance.k as u64);
        }
    }

    #[test]
    fn forced_initialization_covers_every_action() {
        let instance = test_instance();
        // During the first |A| rounds each initialized strategy must play
        // actions 0..|A| in order, regardless of outcomes.
        for kind in [StrategyKind::EpsilonGreedy, StrategyKind::Cucb, StrategyKind::Bcucb] {
            let mut episode = Episode::new(&instance).unwrap();
            let mut rng = trial_rng(0, 1);
            for t in 1..=instance.num_actions() as u64 {
                assert_eq!(episode.choose(kind, t, &mut rng), (t - 1) as usize);
            }
        }
    }

    #[test]
    fn tie_break_prefers_lowest_action() {
        let instance = test_instance();
        let mut episode = Episode::new(&instance).unwrap();
        // No observations: all means equal, exploit picks action 0.
        assert_eq!(episode.best_action(|s| s.mean), 0);
    }

    #[test]
    fn empirical_means_concentrate_under_round_robin() {
        let instance = test_instance();
        let horizon = 4096u64;
        for seed in 0..20 {
            let mut episode = Episode::new(&instance).unwrap();
            let mut env_rng = trial_rng(seed, 0);
            for t in 1..=horizon {
                let action = (t as usize - 1) % instance.num_actions();
                let obs = instance.sample_round(&mut env_rng, action).unwrap();
                episode.observe(&obs);
            }
            let tolerance = |n: u64| 4.0 * ((horizon as f64).ln() / n as f64).sqrt();
            for (idx, action) in instance.actions.iter().enumerate() {
                let truth = instance.action_means(idx).unwrap();
                for (slot, &arm) in action.iter().enumerate() {
                    let stats = &episode.stats[arm - 1];
                    assert!(stats.count > 0);
                    let err = (stats.mean - truth[slot]).abs();
                    assert!(
                        err <= tolerance(stats.count),
                        "seed {seed}: arm {arm} off by {err}"
                    );
                }
            }
        }
    }

    #[test]
    fn comparison_flags_and_errors() {
        let instance = test_instance();
        let model = instance.reward_model().unwrap();
        let report =
            crate::bounds::dependent_bound(&model, &[0.5, 0.5, 0.5], 15, instance.gap).unwrap();
        let seeds: Vec<u64> = (0..10).collect();

        let oracle = run_many(&instance, StrategyKind::Oracle, 1000, &seeds).unwrap();
        let summary = compare_to_bound(&oracle, &report).unwrap();
        assert_eq!(summary.ratio, 0.0);
        assert_eq!(summary.flag, "low");
        assert_eq!(summary.stderr_final_regret, 0.0);

        // Linear-regret play blows past the logarithmic reference at a long
        // horizon.
        let rr = run_many(&instance, StrategyKind::RoundRobin, 300_000, &seeds).unwrap();
        let summary = compare_to_bound(&rr, &report).unwrap();
        assert_eq!(summary.flag, "high");
        assert!(summary.ratio > 100.0);

        assert!(matches!(
            compare_to_bound(&oracle[..9], &report),
            Err(SimError::TooFewTraces { needed: 10, got: 9 })
        ));
        let mut mixed = oracle.clone();
        mixed[0].strategy = "cucb".to_string();
        assert!(matches!(
            compare_to_bound(&mixed, &report),
            Err(SimError::MixedTraces("strategy"))
        ));
        let mut mixed = oracle.clone();
        mixed[0].instance_id = "0000000000000000".to_string();
        assert!(matches!(
            compare_to_bound(&mixed, &report),
            Err(SimError::MixedTraces("instance"))
        ));
    }

    #[test]
    fn csv_layout_is_stable() {
        let instance = test_instance();
        let traces = vec![
            run_episode(&instance, StrategyKind::Oracle, 4, 0).unwrap(),
            run_episode(&instance, StrategyKind::Oracle, 4, 1).unwrap(),
        ];
        let csv = traces_to_csv(&traces);
        let expected = "seed,t,cumulative_regret\n0,1,0\n0,2,0\n0,4,0\n1,1,0\n1,2,0\n1,4,0\n";
        assert_eq!(csv, expected);
    }

    #[test]
    fn strategy_names_round_trip() {
        for kind in StrategyKind::ALL {
            assert_eq!(StrategyKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(matches!(
            StrategyKind::parse("thompson"),
            Err(SimError::UnknownStrategy(_))
        ));
    }
}
