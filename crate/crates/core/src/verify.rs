//! Numerical verification suites.
//!
//! Each suite stress-tests one analytical claim the library is built on —
//! inequalities, closed-form identities, and rate reproductions — over
//! randomized trials and frozen worked examples, and reports the worst
//! margin observed together with the tolerance it was held to. Suites are
//! deterministic: trial `i` draws from stream `i` of the seeded generator,
//! so parallel and serial runs, and repeated runs with the same seed,
//! produce byte-identical reports.
//!
//! A report's `passed` is the conjunction of its checks. Checks are designed
//! to fail honestly: tolerances are fixed here, not tuned to observations,
//! and a check whose target is not met reports red rather than widening its
//! band.

use crate::bounds::{dependent_bound, exp_quadratic_scan, independent_bound, sum_copies_bound};
use crate::instance::{
    certify_direction, gap_exact, gap_kl_ratio, kl_exact, kl_quadratic_bound,
    optimal_perturbation, perturbation_system, validity_bound, KlQuadraticForm,
};
use crate::rewards::RewardModel;
use crate::rng::trial_rng;
use crate::smoothness::{
    gini_l1, gini_l2, gini_modified, l1_from_pairs, maximize_over_subsets, modified_from_pairs,
    norm_ratio_brute, norm_ratio_max, sorted_profile, Measure, Objective, SearchMethod,
    SubsetSpec,
};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradients,
    Lemma3,
    Lemma4,
    Lemma5,
    Prop1,
    Prop2,
    Lemma6,
    AppendixE,
    Rates,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Gradients,
        Suite::Lemma3,
        Suite::Lemma4,
        Suite::Lemma5,
        Suite::Prop1,
        Suite::Prop2,
        Suite::Lemma6,
        Suite::AppendixE,
        Suite::Rates,
    ];

    pub fn parse(name: &str) -> Result<Self, VerifyError> {
        match name {
            "gradients" => Ok(Suite::Gradients),
            "lemma3" => Ok(Suite::Lemma3),
            "lemma4" => Ok(Suite::Lemma4),
            "lemma5" => Ok(Suite::Lemma5),
            "prop1" => Ok(Suite::Prop1),
            "prop2" => Ok(Suite::Prop2),
            "lemma6" => Ok(Suite::Lemma6),
            "appendixE" => Ok(Suite::AppendixE),
            "rates" => Ok(Suite::Rates),
            other => Err(VerifyError::UnknownSuite(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradients => "gradients",
            Suite::Lemma3 => "lemma3",
            Suite::Lemma4 => "lemma4",
            Suite::Lemma5 => "lemma5",
            Suite::Prop1 => "prop1",
            Suite::Prop2 => "prop2",
            Suite::Lemma6 => "lemma6",
            Suite::AppendixE => "appendixE",
            Suite::Rates => "rates",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst value observed across the check's trials.
    pub measured: f64,
    /// The bound `measured` was held to.
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub trials: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Runs one suite with per-trial RNG streams derived from `seed`.
pub fn run_suite(suite: Suite, seed: u64, trials: u64) -> VerifyReport {
    let trials = trials.max(1);
    let checks = match suite {
        Suite::Gradients => suite_gradients(seed, trials),
        Suite::Lemma3 => suite_lemma3(seed, trials),
        Suite::Lemma4 => suite_lemma4(seed, trials),
        Suite::Lemma5 => suite_lemma5(seed, trials),
        Suite::Prop1 => suite_prop1(seed, trials),
        Suite::Prop2 => suite_prop2(seed, trials),
        Suite::Lemma6 => suite_lemma6(seed, trials),
        Suite::AppendixE => suite_appendix_e(),
        Suite::Rates => suite_rates(),
    };
    VerifyReport {
        schema_version: crate::SCHEMA_VERSION,
        suite: suite.name().to_string(),
        seed,
        trials,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Every suite in declaration order, sharing one seed and trial count.
pub fn run_all(seed: u64, trials: u64) -> Vec<VerifyReport> {
    Suite::ALL.iter().map(|&s| run_suite(s, seed, trials)).collect()
}

// --- shared plumbing ---------------------------------------------------

fn upper_check(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: measured <= threshold,
        measured,
        threshold,
        detail: detail.into(),
    }
}

fn lower_check(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: measured >= threshold,
        measured,
        threshold,
        detail: detail.into(),
    }
}

/// Largest per-trial value; ties keep the earliest trial. Trials run in
/// parallel but the fold is order-deterministic.
fn max_over_trials<F>(seed: u64, trials: u64, f: F) -> (f64, u64)
where
    F: Fn(&mut ChaCha12Rng, u64) -> f64 + Sync,
{
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| f(&mut trial_rng(seed, i), i))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, i as u64);
        }
    }
    best
}

fn min_over_trials<F>(seed: u64, trials: u64, f: F) -> (f64, u64)
where
    F: Fn(&mut ChaCha12Rng, u64) -> f64 + Sync,
{
    let (worst, trial) = max_over_trials(seed, trials, |rng, i| -f(rng, i));
    (-worst, trial)
}

fn interior_mu<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(0.05..0.95)).collect()
}

/// Interior means whose pairwise separation keeps every `1/(pᵢ−pᵢ₋₁)` well
/// conditioned.
fn spaced_mu<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let mu = interior_mu(rng, k);
        let mut sorted = mu.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
            return mu;
        }
    }
}

fn sorted_thresholds<R: Rng>(rng: &mut R, n: usize, min_sep: f64) -> Vec<f64> {
    loop {
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.98)).collect();
        p.sort_by(f64::total_cmp);
        let spaced = p[0] >= min_sep
            && 1.0 - p[n - 1] >= min_sep
            && p.windows(2).all(|w| w[1] - w[0] >= min_sep);
        if spaced {
            return p;
        }
    }
}

fn symmetric_model<R: Rng>(rng: &mut R) -> RewardModel {
    let k = rng.gen_range(2..=8);
    match rng.gen_range(0..3u8) {
        0 => RewardModel::Linear { k },
        1 => RewardModel::PmcItem { k },
        _ => RewardModel::ExpQuadratic { k },
    }
}

fn monotone_model<R: Rng>(rng: &mut R) -> RewardModel {
    let k = rng.gen_range(2..=8);
    match rng.gen_range(0..4u8) {
        0 => RewardModel::Linear { k },
        1 => RewardModel::PmcItem { k },
        2 => RewardModel::ExpQuadratic { k },
        _ => RewardModel::PowerGradient { k },
    }
}

/// Uniform subset excluding the full set (the free block stays nonempty).
fn proper_subset<R: Rng>(rng: &mut R, k: usize) -> SubsetSpec {
    let mask = rng.gen_range(0..(1u32 << k) - 1);
    SubsetSpec::from_mask(mask, k)
}

// --- gradients ----------------------------------------------------------

const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-5;

fn gradient_worst_error(model: &RewardModel, mu: &[f64]) -> f64 {
    let analytic = model.gradient(mu).expect("valid means");
    let numeric = model.finite_diff_gradient(mu, FD_STEP).expect("valid step");
    analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn suite_gradients(seed: u64, trials: u64) -> Vec<CheckResult> {
    let mut checks = Vec::new();
    let makers: [(&str, fn(usize) -> RewardModel); 4] = [
        ("linear", |k| RewardModel::Linear { k }),
        ("pmc-item", |k| RewardModel::PmcItem { k }),
        ("exp-quadratic", |k| RewardModel::ExpQuadratic { k }),
        ("power-gradient", |k| RewardModel::PowerGradient { k }),
    ];
    for (stream_offset, (name, make)) in makers.iter().enumerate() {
        let (worst, trial) = max_over_trials(
            seed.wrapping_add(stream_offset as u64 * 0x9e37_79b9),
            trials,
            |rng, _| {
                let k = rng.gen_range(2..=8);
                let model = make(k);
                gradient_worst_error(&model, &interior_mu(rng, k))
            },
        );
        checks.push(upper_check(
            name,
            worst,
            FD_REL_TOL,
            format!(
                "max relative gap between analytic and central-difference \
                 gradients over random interior points, K in 2..=8 (worst at trial {trial})"
            ),
        ));
    }
    let (worst, trial) = max_over_trials(seed.wrapping_add(4 * 0x9e37_79b9), trials, |rng, _| {
        let k = rng.gen_range(2..=4);
        let copies = rng.gen_range(2..=3);
        let model = RewardModel::PmcItem { k }.with_copies(copies).expect("copies >= 1");
        let mu = interior_mu(rng, model.action_size());
        gradient_worst_error(&model, &mu)
    });
    checks.push(upper_check(
        "sum-of-copies",
        worst,
        FD_REL_TOL,
        format!("stacked copies inherit per-copy gradients (worst at trial {trial})"),
    ));
    checks
}

// --- lemma3: quadratic bound dominates the exact divergence --------------

fn suite_lemma3(seed: u64, trials: u64) -> Vec<CheckResult> {
    let draw = |rng: &mut ChaCha12Rng| {
        let n = rng.gen_range(1..=6);
        let p = sorted_thresholds(rng, n, 1e-4);
        let b = validity_bound(&p).expect("valid thresholds");
        let scale = if rng.gen_bool(0.5) {
            1.0
        } else {
            10f64.powf(-rng.gen_range(0.0..3.0))
        };
        let eps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) * b * scale).collect();
        (p, eps)
    };

    let (worst_excess, t1) = max_over_trials(seed, trials, |rng, _| {
        let (p, eps) = draw(rng);
        let kl = kl_exact(&p, &eps).expect("perturbation within validity bound");
        let bound = kl_quadratic_bound(&p, &eps).expect("valid system");
        (kl - bound) / (1.0 + bound)
    });
    let (most_negative_kl, t2) = min_over_trials(seed, trials, |rng, _| {
        let (p, eps) = draw(rng);
        kl_exact(&p, &eps).expect("perturbation within validity bound")
    });

    let example_kl = kl_exact(&[0.25, 0.5], &[0.01, 0.01]).expect("worked example");
    vec![
        upper_check(
            "quadratic_dominates_divergence",
            worst_excess,
            1e-15,
            format!(
                "max normalized excess of the exact divergence over twice the \
                 quadratic form, signed perturbations up to the validity bound \
                 (worst at trial {t1})"
            ),
        ),
        lower_check(
            "divergence_nonnegative",
            most_negative_kl,
            -1e-15,
            format!("smallest exact divergence observed (trial {t2})"),
        ),
        upper_check(
            "worked_example",
            example_kl,
            0.0032,
            "thresholds (0.25, 0.5) perturbed by (0.01, 0.01): exact divergence \
             against its quadratic bound 2·εᵀBε = 0.0032",
        ),
    ]
}

// --- lemma4: the gap dominates half the first-order term -----------------

fn suite_lemma4(seed: u64, trials: u64) -> Vec<CheckResult> {
    let failures = std::sync::atomic::AtomicU64::new(0);
    let (worst_margin, t1) = min_over_trials(seed, trials, |rng, _| {
        let model = symmetric_model(rng);
        let k = model.action_size();
        let mu = spaced_mu(rng, k);
        let subset = proper_subset(rng, k);
        let system = perturbation_system(&model, &mu, &subset).expect("interior means");
        match certify_direction(&model, &system) {
            Ok(cert) => {
                // Log-uniform scale inside the certified range.
                let s = cert.max_scale * 2f64.powf(-rng.gen_range(0.0..12.0));
                let eps: Vec<f64> = cert.direction_full.iter().map(|&d| d * s).collect();
                let gap = gap_exact(&model, &system.profile, &eps).expect("certified scale");
                let linear_term = 0.5 * s * cert.linear_coefficient;
                (gap - linear_term) / (1.0 + linear_term.abs())
            }
            Err(_) => {
                failures.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        }
    });
    let (worst_linear_dev, t2) = max_over_trials(seed.wrapping_add(1), trials, |rng, _| {
        let k = rng.gen_range(2..=8);
        let model = RewardModel::Linear { k };
        let mu = spaced_mu(rng, k);
        let subset = proper_subset(rng, k);
        let system = perturbation_system(&model, &mu, &subset).expect("interior means");
        let cert = certify_direction(&model, &system).expect("linear certifies at full scale");
        let s = cert.max_scale * 2f64.powf(-rng.gen_range(0.0..8.0));
        let eps: Vec<f64> = cert.direction_full.iter().map(|&d| d * s).collect();
        let gap = gap_exact(&model, &system.profile, &eps).expect("certified scale");
        (gap - s * cert.linear_coefficient).abs()
    });
    vec![
        lower_check(
            "gap_dominates_half_first_order",
            worst_margin,
            -1e-12,
            format!(
                "min normalized margin of the exact gap over ½·cᵀε at certified \
                 scales (worst at trial {t1})"
            ),
        ),
        upper_check(
            "linear_gap_is_first_order_exactly",
            worst_linear_dev,
            1e-12,
            format!("max |gap − cᵀε| for linear rewards (worst at trial {t2})"),
        ),
        upper_check(
            "certification_failures",
            failures.into_inner() as f64,
            0.0,
            "trials where no scale could be certified",
        ),
    ]
}

// --- lemma5: the closed-form maximizer and its value ----------------------

fn suite_lemma5(seed: u64, trials: u64) -> Vec<CheckResult> {
    struct Trial {
        ratio_dev: f64,
        route_dev: f64,
        identity_dev: f64,
        random_excess: f64,
    }
    let outcomes: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_rng(seed, i);
            let model = symmetric_model(rng);
            let k = model.action_size();
            let mu = spaced_mu(rng, k);
            let subset = proper_subset(rng, k);
            let modified = gini_modified(&model, &mu, &subset).expect("valid input");
            let system = perturbation_system(&model, &mu, &subset).expect("interior means");
            let p = &system.thresholds;
            let c = &system.cum_gradient;
            let eps0 = rng.gen_range(0.1..2.0);
            let closed = optimal_perturbation(p, c, eps0).expect("valid system");
            let form = KlQuadraticForm::new(p).expect("valid thresholds");
            let matrix_route: Vec<f64> =
                form.inverse_times(c).expect("dimensions match").iter().map(|v| v * eps0).collect();
            let route_dev = closed
                .iter()
                .zip(&matrix_route)
                .map(|(&a, &b)| (a - b).abs())
                .fold(0.0, f64::max);
            let ratio = gap_kl_ratio(p, c, &closed).expect("nonzero perturbation");
            let ratio_dev = (ratio - modified).abs();

            let b = form.matrix();
            let inv = form.inverse();
            let n = p.len();
            let mut identity_dev = 0.0f64;
            for r in 0..n {
                for col in 0..n {
                    let mut entry = 0.0;
                    for l in 0..n {
                        entry += b[r][l] * inv[l][col];
                    }
                    let target = if r == col { 1.0 } else { 0.0 };
                    identity_dev = identity_dev.max((entry - target).abs());
                }
            }

            let mut random_excess = f64::NEG_INFINITY;
            for _ in 0..3 {
                let mut eps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if eps.iter().all(|&e| e == 0.0) {
                    eps[0] = 1.0;
                }
                let r = gap_kl_ratio(p, c, &eps).expect("nonzero perturbation");
                random_excess = random_excess.max(r - modified);
            }
            Trial { ratio_dev, route_dev, identity_dev, random_excess }
        })
        .collect();

    let fold = |sel: fn(&Trial) -> f64| -> f64 {
        outcomes.iter().map(sel).fold(f64::NEG_INFINITY, f64::max)
    };
    vec![
        upper_check(
            "optimal_ratio_equals_modified_measure",
            fold(|t| t.ratio_dev),
            1e-9,
            "max |(cᵀε*)²/(ε*ᵀBε*) − modified measure| over random systems",
        ),
        upper_check(
            "closed_form_matches_matrix_route",
            fold(|t| t.route_dev),
            1e-10,
            "max coordinate gap between the closed-form perturbation and ε₀·B⁻¹c",
        ),
        upper_check(
            "inverse_identity",
            fold(|t| t.identity_dev),
            1e-9,
            "max entrywise deviation of B·B⁻¹ from the identity",
        ),
        upper_check(
            "no_random_perturbation_beats_optimum",
            fold(|t| t.random_excess),
            1e-9,
            "max excess of random perturbations' ratios over the optimum",
        ),
    ]
}

// --- prop1: modified vs L1, with a logarithmic price ----------------------

fn prop1_denominator(p_first: f64, p_last: f64) -> f64 {
    3.0 + (1.0 / p_first).ln() + (1.0 / (1.0 - p_last)).ln()
}

fn suite_prop1(seed: u64, trials: u64) -> Vec<CheckResult> {
    let (worst_pairs, t1) = min_over_trials(seed, trials, |rng, _| {
        let n = rng.gen_range(1..=8);
        let p = sorted_thresholds(rng, n, 1e-4);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let modified = modified_from_pairs(&p, &g);
        let l1 = l1_from_pairs(&p, &g);
        (modified * prop1_denominator(p[0], p[n - 1]) - l1) / (1.0 + l1)
    });
    let (worst_models, t2) = min_over_trials(seed.wrapping_add(1), trials, |rng, _| {
        let model = monotone_model(rng);
        let k = model.action_size();
        let mu = interior_mu(rng, k);
        let subset = proper_subset(rng, k);
        let modified = gini_modified(&model, &mu, &subset).expect("valid input");
        let l1 = gini_l1(&model, &mu, &subset).expect("valid input");
        let block = sorted_profile(&mu, &subset).expect("valid subset");
        let block = block.block();
        (modified * prop1_denominator(block[0], block[block.len() - 1]) - l1) / (1.0 + l1)
    });

    // At the boundary the right-hand side is defined as zero: the weight
    // 1/ln(1/p₁) vanishes, so the inequality holds with no content.
    let p = [0.0, 0.5];
    let g = [1.5, 1.0];
    let rhs_low = l1_from_pairs(&p, &g) / prop1_denominator(p[0], p[1]);
    let p_hi = [0.5, 1.0];
    let rhs_high = l1_from_pairs(&p_hi, &g) / prop1_denominator(p_hi[0], p_hi[1]);

    vec![
        lower_check(
            "signed_pairs_inequality",
            worst_pairs,
            -1e-12,
            format!(
                "min normalized slack of modified·(3 + ln(1/p₁) + ln(1/(1−p_N))) \
                 over the L1 measure, signed gradients (worst at trial {t1})"
            ),
        ),
        lower_check(
            "monotone_models_inequality",
            worst_models,
            -1e-12,
            format!("same inequality via the reward pipeline (worst at trial {t2})"),
        ),
        upper_check(
            "boundary_rhs_vanishes",
            rhs_low.max(rhs_high),
            0.0,
            "with p₁ = 0 or p_N = 1 the right-hand side is defined as zero",
        ),
    ]
}

// --- prop2: subset maximization vs the plain L2 measure -------------------

fn suite_prop2(seed: u64, trials: u64) -> Vec<CheckResult> {
    fn l1_margin(model: &RewardModel, mu: &[f64]) -> f64 {
        let k = model.action_size();
        let lhs = maximize_over_subsets(model, mu, Measure::L1, Objective::PerArm, SearchMethod::Brute)
            .expect("valid input")
            .value;
        let l2 = gini_l2(model, mu, &SubsetSpec::empty(k)).expect("valid input");
        (lhs * (1.0 + (k as f64).ln()) - l2) / (1.0 + l2)
    }

    fn modified_margin(model: &RewardModel, mu: &[f64]) -> f64 {
        let k = model.action_size();
        let l2 = gini_l2(model, mu, &SubsetSpec::empty(k)).expect("valid input");
        if l2 == 0.0 {
            return 0.0;
        }
        let lhs =
            maximize_over_subsets(model, mu, Measure::Modified, Objective::PerArm, SearchMethod::Brute)
                .expect("valid input")
                .value;
        let mu_min = mu.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        let mu_max = mu.iter().copied().filter(|&v| v < 1.0).fold(f64::NEG_INFINITY, f64::max);
        let denom = (1.0 + (k as f64).ln())
            * (3.0 + (1.0 / mu_min).ln() + (1.0 / (1.0 - mu_max)).ln());
        (lhs * denom - l2) / (1.0 + l2)
    }

    let (worst_l1, t1) = min_over_trials(seed, trials, |rng, _| {
        let model = monotone_model(rng);
        let mu = interior_mu(rng, model.action_size());
        l1_margin(&model, &mu)
    });
    let (worst_modified, t2) = min_over_trials(seed.wrapping_add(1), trials, |rng, _| {
        let model = monotone_model(rng);
        let mu = interior_mu(rng, model.action_size());
        modified_margin(&model, &mu)
    });
    // Means pinned to {0, 1} drop out of μ_min/μ_max but stay in the
    // measures; the inequality must survive them.
    let (worst_boundary, t3) = min_over_trials(seed.wrapping_add(2), trials, |rng, _| {
        let model = monotone_model(rng);
        let k = model.action_size();
        let mu: Vec<f64> = (0..k)
            .map(|_| match rng.gen_range(0..5u8) {
                0 => 0.0,
                4 => 1.0,
                _ => rng.gen_range(0.05..0.95),
            })
            .collect();
        l1_margin(&model, &mu).min(modified_margin(&model, &mu))
    });

    vec![
        lower_check(
            "l1_per_arm_dominates_l2",
            worst_l1,
            -1e-12,
            format!(
                "min normalized slack of max_I γ₁²/N·(1+ln K) over the L2 \
                 measure at the empty subset (worst at trial {t1})"
            ),
        ),
        lower_check(
            "modified_per_arm_dominates_l2",
            worst_modified,
            -1e-12,
            format!(
                "min normalized slack with the additional boundary-mean factor \
                 (worst at trial {t2})"
            ),
        ),
        lower_check(
            "survives_degenerate_means",
            worst_boundary,
            -1e-12,
            format!("same inequalities with some means pinned to 0 or 1 (worst at trial {t3})"),
        ),
    ]
}

// --- lemma6: prefix subsets of the sorted vector --------------------------

fn suite_lemma6(seed: u64, trials: u64) -> Vec<CheckResult> {
    let (worst_bound, t1) = min_over_trials(seed, trials, |rng, _| {
        let n = rng.gen_range(1..=64);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            return 0.0;
        }
        let (_, value) = norm_ratio_max(&x).expect("nonempty vector");
        (value * (1.0 + (n as f64).ln()) - norm2) / norm2
    });
    let (worst_brute_dev, t2) = max_over_trials(seed.wrapping_add(1), trials, |rng, _| {
        let n = rng.gen_range(1..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (_, fast) = norm_ratio_max(&x).expect("nonempty vector");
        let (_, brute) = norm_ratio_brute(&x).expect("small vector");
        (fast - brute).abs() / brute.max(1.0)
    });

    // The telescoping family x_i = √i − √(i−1) pins the ratio at exactly 1
    // for every prefix, so the bound cannot be improved beyond log factors.
    let mut tight_dev = 0.0f64;
    for n in 2..=16usize {
        let x: Vec<f64> = (1..=n).map(|i| (i as f64).sqrt() - ((i - 1) as f64).sqrt()).collect();
        let (_, value) = norm_ratio_max(&x).expect("nonempty vector");
        tight_dev = tight_dev.max((value - 1.0).abs());
    }

    vec![
        lower_check(
            "prefix_value_dominates_l2_over_log",
            worst_bound,
            -1e-12,
            format!(
                "min normalized slack of max_A (Σ|x|)²/|A| · (1+ln n) over ‖x‖₂² \
                 (worst at trial {t1})"
            ),
        ),
        upper_check(
            "prefix_scan_matches_brute_force",
            worst_brute_dev,
            1e-12,
            format!("max relative gap to exhaustive search for n ≤ 12 (worst at trial {t2})"),
        ),
        upper_check(
            "telescoping_family_is_tight",
            tight_dev,
            1e-12,
            "max |value − 1| for x_i = √i − √(i−1), n in 2..=16",
        ),
    ]
}

// --- appendixE: tightness examples ---------------------------------------

fn suite_appendix_e() -> Vec<CheckResult> {
    // Geometric means with exponentially weighted gradients: the modified
    // measure stays within a constant factor of the L1 measure per free arm,
    // showing the logarithmic price in the comparison is unavoidable.
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_at = String::new();
    for k in [4usize, 8, 12] {
        let model = RewardModel::PowerGradient { k };
        let mu: Vec<f64> = (1..=k).map(|i| 2f64.powi(-2 * (k as i32 - i as i32) - 1)).collect();
        for mask in 0..(1u32 << k) - 1 {
            let subset = SubsetSpec::from_mask(mask, k);
            let n = subset.complement_size() as f64;
            let modified = gini_modified(&model, &mu, &subset).expect("valid input");
            let l1 = gini_l1(&model, &mu, &subset).expect("valid input");
            let ratio = modified / l1 * n;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_at = format!("K={k}, mask={mask:#x}");
            }
        }
    }

    let mut ratio_dev = 0.0f64;
    let mut worst_norm_slack = f64::INFINITY;
    for n in 2..=64usize {
        let x: Vec<f64> = (1..=n).map(|i| (i as f64).sqrt() - ((i - 1) as f64).sqrt()).collect();
        let (_, value) = norm_ratio_max(&x).expect("nonempty vector");
        ratio_dev = ratio_dev.max((value - 1.0).abs());
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        worst_norm_slack = worst_norm_slack.min(norm2 * 4.0 / ((n + 1) as f64).ln());
    }

    vec![
        upper_check(
            "modified_to_l1_ratio_times_n",
            worst_ratio,
            8.0,
            format!(
                "max over K in {{4,8,12}} and all subsets of modified/L1 · N \
                 for geometric means with doubling gradient weights (at {worst_at})"
            ),
        ),
        upper_check(
            "telescoping_ratio_is_one",
            ratio_dev,
            1e-12,
            "max |prefix value − 1| for x_i = √i − √(i−1), n in 2..=64",
        ),
        lower_check(
            "telescoping_norm_exceeds_log_quarter",
            worst_norm_slack,
            1.0,
            "min of 4·‖x‖₂²/ln(n+1) for the telescoping family, n in 2..=64",
        ),
    ]
}

// --- rates: closed forms, doublings, copy scalings, block-size decay ------

fn thousandths_grid() -> Vec<f64> {
    (1..1000).map(|i| i as f64 / 1000.0).collect()
}

fn suite_rates() -> Vec<CheckResult> {
    let mut checks = Vec::new();

    // Uniform-half linear closed form.
    let mut closed_dev = 0.0f64;
    for k in [2usize, 3, 4] {
        let model = RewardModel::Linear { k };
        let mu = vec![0.5; k];
        let m = 5 * k;
        let gap = 0.01;
        let value = dependent_bound(&model, &mu, m, gap).expect("valid input").value;
        let expected = (m - 2 * k) as f64 * k as f64 / (32.0 * gap);
        closed_dev = closed_dev.max((value / expected - 1.0).abs());
    }
    checks.push(upper_check(
        "dependent_uniform_half_closed_form",
        closed_dev,
        1e-12,
        "max relative deviation from (m−2K)·K/(32Δ) for all-½ linear rewards, K in {2,3,4}",
    ));

    let linear2 = RewardModel::Linear { k: 2 };
    let half2 = vec![0.5; 2];
    let dep = |m: usize, gap: f64| dependent_bound(&linear2, &half2, m, gap).expect("valid").value;
    let predicted_m = (2.0 * 10.0 - 4.0) / (10.0 - 4.0);
    checks.push(upper_check(
        "dependent_doubling_arms",
        (dep(20, 0.01) / dep(10, 0.01) / predicted_m - 1.0).abs(),
        1e-9,
        "m → 2m multiplies the bound by (2m−2K)/(m−2K)",
    ));

    let linear4 = RewardModel::Linear { k: 4 };
    let half4 = vec![0.5; 4];
    let k_ratio = dependent_bound(&linear4, &half4, 40, 0.01).expect("valid").value
        / dependent_bound(&linear2, &half2, 40, 0.01).expect("valid").value;
    let predicted_k = ((40.0 - 8.0) * 4.0) / ((40.0 - 4.0) * 2.0);
    checks.push(upper_check(
        "dependent_doubling_action_size",
        (k_ratio / predicted_k - 1.0).abs(),
        1e-9,
        "K → 2K at fixed m multiplies the all-½ bound by 2(m−4K)/(m−2K)",
    ));

    checks.push(upper_check(
        "dependent_doubling_inverse_gap",
        (dep(10, 0.005) / dep(10, 0.01) / 2.0 - 1.0).abs(),
        1e-9,
        "Δ → Δ/2 doubles the bound exactly",
    ));

    let indep =
        |t: u64| independent_bound(&linear2, &half2, 10, t).expect("valid").value;
    checks.push(upper_check(
        "independent_quadrupled_horizon_doubles",
        (indep(40_000) / indep(10_000) / 2.0 - 1.0).abs(),
        1e-9,
        "T → 4T doubles the bound exactly",
    ));

    // Copy scalings through the corollaries.
    let pmc = RewardModel::PmcItem { k: 3 };
    let mu = vec![0.5; 3];
    let base_dep = dependent_bound(&pmc, &mu, 12, 0.05).expect("valid input");
    let base_indep = independent_bound(&pmc, &mu, 12, 100_000).expect("valid input");
    let mut dep_dev = 0.0f64;
    let mut indep_dev = 0.0f64;
    for m in [2u64, 3, 5] {
        let scaled = sum_copies_bound(&base_dep, m).expect("valid copies");
        dep_dev = dep_dev.max((scaled.value / (base_dep.value * (m * m) as f64) - 1.0).abs());
        let scaled = sum_copies_bound(&base_indep, m).expect("valid copies");
        indep_dev = indep_dev.max((scaled.value / (base_indep.value * m as f64) - 1.0).abs());
    }
    checks.push(upper_check(
        "copies_square_dependent",
        dep_dev,
        1e-15,
        "M copies multiply the dependent bound by exactly M²",
    ));
    checks.push(upper_check(
        "copies_linear_independent",
        indep_dev,
        1e-15,
        "M copies multiply the independent bound by exactly M",
    ));

    // Block-size decay of the per-arm modified measure for the
    // exponential-quadratic reward.
    let grid = thousandths_grid();
    let head = exp_quadratic_scan(&[1, 4, 16, 64], &grid).expect("valid scan");
    let head_in_band = (-0.6..=-0.4).contains(&head.slope);
    checks.push(CheckResult {
        name: "scan_slope_small_blocks".to_string(),
        passed: head_in_band,
        measured: head.slope,
        threshold: -0.4,
        detail: "least-squares slope of ln(max γ̃²/n) vs ln(n) over n in {1,4,16,64}, \
                 expected in [−0.6, −0.4]; over these smallest block sizes the maximum \
                 first rises (n=1→4) before the decay sets in, so the fitted slope \
                 sits above the band that only emerges at larger n (see the \
                 larger-block check)"
            .to_string(),
    });
    let tail = exp_quadratic_scan(&[32, 64, 128], &grid).expect("valid scan");
    checks.push(CheckResult {
        name: "scan_slope_larger_blocks".to_string(),
        passed: (-0.6..=-0.4).contains(&tail.slope),
        measured: tail.slope,
        threshold: -0.4,
        detail: "the same fit over n in {32,64,128}, where the square-root decay \
                 dominates"
            .to_string(),
    });

    checks
}
