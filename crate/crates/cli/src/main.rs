//! Command-line front end: smoothness measures, worst-case instance
//! construction, regret lower bounds, strategy simulation, and the numerical
//! verification suites.
//!
//! Every subcommand emits machine-readable output (schema-versioned JSON, or
//! headered CSV for traces) to `--out`, defaulting to stdout. Exit codes:
//! 0 on success, 1 when a verification check fails, 2 on usage errors.
//! Internal parallelism respects `RAYON_NUM_THREADS`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ginibound::bounds::{dependent_bound, independent_bound, sum_copies_bound, BoundReport};
use ginibound::instance::{
    build_dependent_instance, build_independent_instance, DisjointInstance,
};
use ginibound::rewards::RewardModel;
use ginibound::sim::{run_many, traces_to_csv, StrategyKind};
use ginibound::smoothness::{
    maximize_over_subsets, smoothness_report, Measure, Objective, SearchMethod, SubsetSpec,
};
use ginibound::verify::{run_all, run_suite, Suite};

#[derive(Parser)]
#[command(
    name = "ginibound",
    version,
    about = "Worst-case semi-bandit instances, Gini-weighted smoothness, and regret lower bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Model selection shared by the subcommands that take a reward directly.
#[derive(Args)]
struct ModelArgs {
    /// Reward model: linear, pmc-item, exp-quadratic, or power-gradient.
    #[arg(long)]
    model: String,
    /// Per-arm means, comma-separated, each in [0,1].
    #[arg(long)]
    mu: String,
}

impl ModelArgs {
    fn resolve(&self, copies: Option<usize>) -> Result<(RewardModel, Vec<f64>)> {
        let mu = parse_csv_f64(&self.mu)?;
        let copies = copies.unwrap_or(1);
        if copies == 0 {
            bail!("--copies must be at least 1");
        }
        if mu.len() % copies != 0 {
            bail!(
                "--copies {} does not divide the {} coordinates of --mu",
                copies,
                mu.len()
            );
        }
        let base = RewardModel::by_name(&self.model, mu.len() / copies)?;
        let model = if copies > 1 { base.with_copies(copies)? } else { base };
        Ok((model, mu))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the three Gini-weighted smoothness measures at a subset, or
    /// maximize one of them over all subsets.
    Smoothness {
        #[command(flatten)]
        model: ModelArgs,
        /// Common-arm indices (1-based, comma-separated). Defaults to none.
        #[arg(long, conflicts_with_all = ["maximize", "objective", "method"])]
        subset: Option<String>,
        /// Measure to maximize over subsets: l2, l1, or modified.
        #[arg(long)]
        maximize: Option<String>,
        /// Search objective: raw or per-arm.
        #[arg(long, default_value = "per-arm", requires = "maximize")]
        objective: String,
        /// Search method: brute or prefix.
        #[arg(long, default_value = "brute", requires = "maximize")]
        method: String,
        /// Stack this many identical copies of the model.
        #[arg(long)]
        copies: Option<usize>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct a worst-case instance and write it as JSON.
    Build {
        #[command(flatten)]
        model: ModelArgs,
        /// Total number of arms.
        #[arg(long = "m")]
        m: usize,
        /// Target optimality gap (problem-dependent construction).
        #[arg(long, conflicts_with = "horizon", required_unless_present = "horizon")]
        gap: Option<f64>,
        /// Horizon (problem-independent construction; prescribes the gap).
        #[arg(long)]
        horizon: Option<u64>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the problem-dependent or problem-independent regret lower
    /// bound for a reward and mean vector.
    Bounds {
        #[command(flatten)]
        model: ModelArgs,
        /// Total number of arms.
        #[arg(long = "m")]
        m: usize,
        /// Optimality gap (problem-dependent bound).
        #[arg(long, conflicts_with = "horizon", required_unless_present = "horizon")]
        gap: Option<f64>,
        /// Horizon (problem-independent bound).
        #[arg(long)]
        horizon: Option<u64>,
        /// Scale the bound to this many stacked copies of the instance.
        #[arg(long)]
        copies: Option<u64>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a strategy against a stored instance and emit regret traces.
    Simulate {
        /// Instance JSON produced by `build`.
        #[arg(long)]
        instance: PathBuf,
        /// Strategy: oracle, round-robin, epsilon-greedy, cucb, or bcucb.
        #[arg(long)]
        strategy: String,
        /// Number of rounds per episode.
        #[arg(long)]
        horizon: u64,
        /// Number of seeds; episodes run with seeds 0..n.
        #[arg(long)]
        seeds: u64,
        /// Output path for the CSV trace; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a numerical verification suite (or `all`).
    Verify {
        /// Suite name: gradients, lemma3, lemma4, lemma5, prop1, prop2,
        /// lemma6, appendixE, rates, or all.
        suite: String,
        /// Base RNG seed; trial i draws from stream i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per randomized check.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_csv_f64(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number `{}` in list", tok.trim()))
        })
        .collect()
}

fn parse_csv_usize(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid index `{}` in list", tok.trim()))
        })
        .collect()
}

fn emit(out: Option<&PathBuf>, payload: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn bound_report(
    model: &RewardModel,
    mu: &[f64],
    m: usize,
    gap: Option<f64>,
    horizon: Option<u64>,
) -> Result<BoundReport> {
    match (gap, horizon) {
        (Some(gap), None) => Ok(dependent_bound(model, mu, m, gap)?),
        (None, Some(t)) => Ok(independent_bound(model, mu, m, t)?),
        _ => bail!("exactly one of --gap and --horizon is required"),
    }
}

/// Runs one subcommand; `Ok(false)` means a verification suite reported red.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Smoothness { model, subset, maximize, objective, method, copies, out } => {
            let (model, mu) = model.resolve(copies)?;
            let k = mu.len();
            let spec = match (&subset, &maximize) {
                (Some(csv), None) => SubsetSpec::new(parse_csv_usize(csv)?, k)?,
                (None, Some(measure)) => {
                    let measure = Measure::parse(measure)
                        .ok_or_else(|| anyhow!("unknown measure `{measure}`"))?;
                    let objective = Objective::parse(&objective)
                        .ok_or_else(|| anyhow!("unknown objective `{objective}`"))?;
                    let method = SearchMethod::parse(&method)
                        .ok_or_else(|| anyhow!("unknown method `{method}`"))?;
                    maximize_over_subsets(&model, &mu, measure, objective, method)?.subset
                }
                (None, None) => SubsetSpec::empty(k),
                (Some(_), Some(_)) => bail!("--subset conflicts with --maximize"),
            };
            let report = smoothness_report(&model, &mu, &spec)?;
            emit(out.as_ref(), &pretty_json(&report))?;
            Ok(true)
        }
        Command::Build { model, m, gap, horizon, out } => {
            let (model, mu) = model.resolve(None)?;
            let instance = match (gap, horizon) {
                (Some(gap), None) => build_dependent_instance(&model, &mu, gap, m)?,
                (None, Some(t)) => build_independent_instance(&model, &mu, m, t)?,
                _ => bail!("exactly one of --gap and --horizon is required"),
            };
            emit(out.as_ref(), &instance.to_json())?;
            Ok(true)
        }
        Command::Bounds { model, m, gap, horizon, copies, out } => {
            let (model, mu) = model.resolve(None)?;
            let mut report = bound_report(&model, &mu, m, gap, horizon)?;
            if let Some(copies) = copies {
                report = sum_copies_bound(&report, copies)?;
            }
            emit(out.as_ref(), &pretty_json(&report))?;
            Ok(true)
        }
        Command::Simulate { instance, strategy, horizon, seeds, out } => {
            let text = std::fs::read_to_string(&instance)
                .with_context(|| format!("cannot read {}", instance.display()))?;
            let instance = DisjointInstance::from_json(&text)?;
            let strategy = StrategyKind::parse(&strategy)?;
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let seeds: Vec<u64> = (0..seeds).collect();
            let traces = run_many(&instance, strategy, horizon, &seeds)?;
            emit(out.as_ref(), &traces_to_csv(&traces))?;
            Ok(true)
        }
        Command::Verify { suite, seed, trials, out } => {
            let reports = if suite == "all" {
                run_all(seed, trials)
            } else {
                vec![run_suite(Suite::parse(&suite)?, seed, trials)]
            };
            let passed = reports.iter().all(|r| r.passed);
            let payload = if reports.len() == 1 {
                pretty_json(&reports[0])
            } else {
                pretty_json(&reports)
            };
            emit(out.as_ref(), &payload)?;
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
