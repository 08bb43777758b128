//! Randomized invariants for the public API: gradient correctness, measure
//! inequalities, closed-form identities, bound scalings, instance structure,
//! and simulation determinism.

use ginibound::bounds::{dependent_bound, independent_bound};
use ginibound::instance::{
    build_dependent_instance, certify_direction, gap_kl_ratio, kl_exact, kl_quadratic_bound,
    optimal_perturbation, perturbation_system, validity_bound, KlQuadraticForm,
};
use ginibound::rewards::RewardModel;
use ginibound::rng::trial_rng;
use ginibound::sim::{run_episode, StrategyKind};
use ginibound::smoothness::{
    gini_l1, gini_l2, gini_modified, maximize_over_subsets, norm_ratio_brute, norm_ratio_max,
    sorted_profile, variance_form, Measure, Objective, SearchMethod, SubsetSpec,
};
use proptest::prelude::*;

const GRAD_REL_TOL: f64 = 1e-5;
const IDENTITY_TOL: f64 = 1e-10;
const RATIO_TOL: f64 = 1e-9;
const VARIANCE_TOL: f64 = 1e-10;
const SLACK_TOL: f64 = 1e-12;

fn symmetric_model() -> impl Strategy<Value = RewardModel> {
    (1usize..=6, 0u8..3).prop_map(|(k, which)| match which {
        0 => RewardModel::Linear { k },
        1 => RewardModel::PmcItem { k },
        _ => RewardModel::ExpQuadratic { k },
    })
}

fn monotone_model() -> impl Strategy<Value = RewardModel> {
    (1usize..=6, 0u8..4).prop_map(|(k, which)| match which {
        0 => RewardModel::Linear { k },
        1 => RewardModel::PmcItem { k },
        2 => RewardModel::ExpQuadratic { k },
        _ => RewardModel::PowerGradient { k },
    })
}

fn with_mu(
    models: impl Strategy<Value = RewardModel>,
) -> impl Strategy<Value = (RewardModel, Vec<f64>)> {
    models.prop_flat_map(|model| {
        let k = model.action_size();
        (Just(model), prop::collection::vec(0.05f64..0.95, k))
    })
}

/// Adds a uniformly random proper subset (nonempty free block).
fn with_subset(
    pairs: impl Strategy<Value = (RewardModel, Vec<f64>)>,
) -> impl Strategy<Value = (RewardModel, Vec<f64>, SubsetSpec)> {
    pairs.prop_flat_map(|(model, mu)| {
        let k = model.action_size();
        (0u32..(1u32 << k) - 1)
            .prop_map(move |mask| (model.clone(), mu.clone(), SubsetSpec::from_mask(mask, k)))
    })
}

/// Means whose pairwise separation keeps the staircase system well
/// conditioned.
fn spaced(pairs: (RewardModel, Vec<f64>)) -> bool {
    let mut sorted = pairs.1.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).all(|w| w[1] - w[0] >= 1e-3)
}

fn strictly_increasing_thresholds() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..0.98, 1..=6)
        .prop_map(|mut p| {
            p.sort_by(f64::total_cmp);
            p
        })
        .prop_filter("well separated", |p| {
            p[0] >= 1e-3
                && 1.0 - p[p.len() - 1] >= 1e-3
                && p.windows(2).all(|w| w[1] - w[0] >= 1e-3)
        })
}

proptest! {
    #[test]
    fn analytic_gradients_match_finite_differences((model, mu) in with_mu(monotone_model())) {
        let analytic = model.gradient(&mu).unwrap();
        let numeric = model.finite_diff_gradient(&mu, 1e-6).unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            prop_assert!((a - n).abs() <= GRAD_REL_TOL * a.abs().max(1.0));
        }
    }

    #[test]
    fn symmetric_models_commute_with_rotations(
        (model, mu) in with_mu(symmetric_model()),
        shift in 0usize..6,
    ) {
        let k = mu.len();
        let mut rotated = mu.clone();
        rotated.rotate_left(shift % k);
        let value = model.evaluate(&mu).unwrap();
        let rotated_value = model.evaluate(&rotated).unwrap();
        prop_assert!((value - rotated_value).abs() <= 1e-12 * value.abs().max(1.0));
        let mut gradient = model.gradient(&mu).unwrap();
        gradient.rotate_left(shift % k);
        let rotated_gradient = model.gradient(&rotated).unwrap();
        for (a, b) in gradient.iter().zip(&rotated_gradient) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn monotone_gradients_are_nonnegative((model, mu) in with_mu(monotone_model())) {
        prop_assert!(model.monotone());
        for g in model.gradient(&mu).unwrap() {
            prop_assert!(g >= -1e-12);
        }
    }

    #[test]
    fn modified_measure_nonnegative_dominates_l2_and_matches_variance_form(
        (model, mu, subset) in with_subset(with_mu(monotone_model())),
    ) {
        let modified = gini_modified(&model, &mu, &subset).unwrap();
        let l2 = gini_l2(&model, &mu, &subset).unwrap();
        let var = variance_form(&model, &mu, &subset).unwrap();
        prop_assert!(modified >= -SLACK_TOL);
        prop_assert!(modified >= l2 - SLACK_TOL * (1.0 + l2));
        prop_assert!((modified - var).abs() <= VARIANCE_TOL * (1.0 + modified));
    }

    #[test]
    fn modified_dominates_l1_over_its_log_factor(
        (model, mu, subset) in with_subset(with_mu(monotone_model())),
    ) {
        let modified = gini_modified(&model, &mu, &subset).unwrap();
        let l1 = gini_l1(&model, &mu, &subset).unwrap();
        let profile = sorted_profile(&mu, &subset).unwrap();
        let block = profile.block();
        let denom =
            3.0 + (1.0 / block[0]).ln() + (1.0 / (1.0 - block[block.len() - 1])).ln();
        prop_assert!(modified * denom >= l1 - SLACK_TOL * (1.0 + l1));
    }

    #[test]
    fn per_arm_l1_maximum_dominates_plain_l2((model, mu) in with_mu(monotone_model())) {
        let k = mu.len();
        let best =
            maximize_over_subsets(&model, &mu, Measure::L1, Objective::PerArm, SearchMethod::Brute)
                .unwrap();
        let l2 = gini_l2(&model, &mu, &SubsetSpec::empty(k)).unwrap();
        prop_assert!(best.value * (1.0 + (k as f64).ln()) >= l2 - SLACK_TOL * (1.0 + l2));
    }

    #[test]
    fn prefix_scan_matches_brute_force_norm_ratio(
        x in prop::collection::vec(-3.0f64..3.0, 1..=12),
    ) {
        let (_, fast) = norm_ratio_max(&x).unwrap();
        let (_, brute) = norm_ratio_brute(&x).unwrap();
        prop_assert!((fast - brute).abs() <= SLACK_TOL * fast.abs().max(1.0));
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let n = x.len() as f64;
        prop_assert!(fast * (1.0 + n.ln()) >= norm2 * (1.0 - SLACK_TOL));
    }

    #[test]
    fn exact_divergence_never_exceeds_its_quadratic_bound(
        p in strictly_increasing_thresholds(),
        raw in prop::collection::vec(-1.0f64..1.0, 6),
        shrink in 0.0f64..3.0,
    ) {
        let b = validity_bound(&p).unwrap() * 10f64.powf(-shrink);
        let eps: Vec<f64> = raw.iter().take(p.len()).map(|r| r * b).collect();
        let kl = kl_exact(&p, &eps).unwrap();
        let bound = kl_quadratic_bound(&p, &eps).unwrap();
        prop_assert!(kl >= -1e-15);
        prop_assert!(kl <= bound + 1e-15 * (1.0 + bound));
    }

    #[test]
    fn closed_form_direction_matches_matrix_route_and_attains_the_measure(
        (model, mu, subset) in with_subset(with_mu(symmetric_model()))
            .prop_filter("well separated", |(m, mu, _)| spaced((m.clone(), mu.clone()))),
        eps0 in 0.1f64..2.0,
    ) {
        let system = perturbation_system(&model, &mu, &subset).unwrap();
        let closed = optimal_perturbation(&system.thresholds, &system.cum_gradient, eps0).unwrap();
        let form = KlQuadraticForm::new(&system.thresholds).unwrap();
        let route = form.inverse_times(&system.cum_gradient).unwrap();
        for (a, b) in closed.iter().zip(&route) {
            prop_assert!((a - b * eps0).abs() <= IDENTITY_TOL);
        }
        let ratio = gap_kl_ratio(&system.thresholds, &system.cum_gradient, &closed).unwrap();
        let modified = gini_modified(&model, &mu, &subset).unwrap();
        prop_assert!((ratio - modified).abs() <= RATIO_TOL * (1.0 + modified));
    }

    #[test]
    fn certified_scales_keep_the_gap_above_half_the_first_order_term(
        (model, mu, subset) in with_subset(with_mu(symmetric_model()))
            .prop_filter("well separated", |(m, mu, _)| spaced((m.clone(), mu.clone()))),
        halvings in 0u32..10,
    ) {
        use ginibound::instance::gap_exact;
        let system = perturbation_system(&model, &mu, &subset).unwrap();
        let cert = certify_direction(&model, &system).unwrap();
        let s = cert.max_scale * 2f64.powi(-(halvings as i32));
        let eps: Vec<f64> = cert.direction_full.iter().map(|&d| d * s).collect();
        let gap = gap_exact(&model, &system.profile, &eps).unwrap();
        let linear = 0.5 * s * cert.linear_coefficient;
        prop_assert!(gap >= linear - SLACK_TOL * (1.0 + linear.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_values_are_nonnegative_and_scale_exactly(
        (model, mu) in with_mu(symmetric_model()),
        extra in 1usize..=30,
        gap in 1e-3f64..0.3,
        horizon in 1u64..=1_000_000,
    ) {
        let k = mu.len();
        let m = 3 * k + extra;
        let dep = dependent_bound(&model, &mu, m, gap).unwrap();
        prop_assert!(dep.value >= 0.0);
        let quarter = dependent_bound(&model, &mu, m, 4.0 * gap).unwrap();
        prop_assert_eq!(dep.value, 4.0 * quarter.value);

        let indep = independent_bound(&model, &mu, m, horizon).unwrap();
        prop_assert!(indep.value >= 0.0);
        let doubled = independent_bound(&model, &mu, m, 4 * horizon).unwrap();
        prop_assert_eq!(doubled.value, 2.0 * indep.value);
    }

    #[test]
    fn built_instances_validate_round_trip_and_partition_their_arms(
        (model, mu) in with_mu(symmetric_model())
            .prop_filter("well separated", |pair| spaced(pair.clone())),
        extra in 1usize..=10,
        frac in 0.05f64..0.8,
    ) {
        let k = mu.len();
        let best =
            maximize_over_subsets(&model, &mu, Measure::Modified, Objective::PerArm, SearchMethod::Brute)
                .unwrap();
        let system = perturbation_system(&model, &mu, &best.subset).unwrap();
        let cert = certify_direction(&model, &system).unwrap();
        let m = 2 * k + extra;
        let instance = build_dependent_instance(&model, &mu, frac * cert.max_gap, m).unwrap();

        // Round trip is bit-exact.
        let json = instance.to_json();
        let back = ginibound::instance::DisjointInstance::from_json(&json).unwrap();
        prop_assert_eq!(&back, &instance);

        // Actions pairwise intersect exactly in the common arms and cover at
        // most m distinct arms.
        let num_common = instance.common.indices().len();
        let common: std::collections::BTreeSet<usize> = instance.actions[0]
            [instance.actions[0].len() - num_common..]
            .iter()
            .copied()
            .collect();
        let mut seen: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
        for (i, a) in instance.actions.iter().enumerate() {
            let sa: std::collections::BTreeSet<usize> = a.iter().copied().collect();
            seen.extend(&sa);
            for b in instance.actions.iter().skip(i + 1) {
                let sb: std::collections::BTreeSet<usize> = b.iter().copied().collect();
                let inter: Vec<usize> = sa.intersection(&sb).copied().collect();
                prop_assert_eq!(inter, common.iter().copied().collect::<Vec<usize>>());
            }
        }
        prop_assert!(seen.len() <= m);
        prop_assert!(instance.num_actions() >= (m - k) / instance.complement_size().max(1));
    }

    #[test]
    fn regret_traces_are_deterministic_monotone_and_bounded(
        strategy_idx in 0usize..StrategyKind::ALL.len(),
        horizon in 50u64..400,
        seed in 0u64..1000,
    ) {
        let model = RewardModel::Linear { k: 2 };
        let instance = build_dependent_instance(&model, &[0.4, 0.6], 0.05, 9).unwrap();
        let strategy = StrategyKind::ALL[strategy_idx];
        let a = run_episode(&instance, strategy, horizon, seed).unwrap();
        let b = run_episode(&instance, strategy, horizon, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let mut prev = 0.0;
        for c in &a.checkpoints {
            prop_assert!(c.regret >= prev);
            prop_assert!(c.regret <= instance.gap * c.t as f64 + 1e-9);
            prev = c.regret;
        }
        prop_assert_eq!(a.checkpoints.last().unwrap().t, horizon);
        prop_assert_eq!(a.checkpoints.last().unwrap().regret, a.final_regret);
        if strategy == StrategyKind::Oracle {
            prop_assert_eq!(a.final_regret, 0.0);
        }
    }
}

/// Empirical marginals of a built instance's sampler: each arm of the optimal
/// action matches its unperturbed mean, each arm of a suboptimal action its
/// perturbed mean, within three standard errors.
#[test]
fn sampler_marginals_match_action_means() {
    let model = RewardModel::PmcItem { k: 3 };
    let instance = build_dependent_instance(&model, &[0.3, 0.55, 0.7], 0.02, 12).unwrap();
    let mut rng = trial_rng(17, 0);
    let draws = 20_000u32;
    for action in [instance.optimal_index, 1] {
        let means = instance.action_means(action).unwrap();
        let arms = &instance.actions[action];
        let mut totals = vec![0u32; arms.len()];
        for _ in 0..draws {
            for (slot, &(_, outcome)) in
                instance.sample_round(&mut rng, action).unwrap().iter().enumerate()
            {
                totals[slot] += outcome as u32;
            }
        }
        for (slot, &total) in totals.iter().enumerate() {
            let p = means[slot];
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            let empirical = total as f64 / draws as f64;
            assert!(
                (empirical - p).abs() <= 3.0 * sigma,
                "action {action} slot {slot}: empirical {empirical} vs mean {p}"
            );
        }
    }
}
