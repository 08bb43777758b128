//! Construction of worst-case problem instances.
//!
//! An instance consists of disjoint actions of `K` arms that pairwise share a
//! fixed set of "common" arms. One action is optimal; all others follow a
//! single perturbed distribution whose suboptimality gap is exactly the
//! requested `Δ` while its KL divergence from the optimal distribution stays
//! as small as the smoothness of the reward allows. The free arms of an
//! action are *coupled*: a single uniform draw is thresholded against the
//! sorted profile, producing a staircase outcome whose marginals match the
//! profile but whose joint law concentrates on `N+1` outcomes.
//!
//! The central objects are the strictly increasing thresholds `p₁<…<p_N` (tied
//! means are merged into groups first), the cumulative gradient `c` (suffix
//! sums of the reward gradient at the profile) and the KL curvature matrix
//! `B = D + 11ᵀ/(1−p_N)` with `D_ii = 1/(pᵢ−pᵢ₋₁)`: the KL divergence of the
//! perturbed staircase law is at most `2εᵀBε`, the gap is at least `½cᵀε` for
//! small perturbations, and the ratio `(cᵀε)²/(εᵀBε)` is maximized in closed
//! form by `ε* ∝ B⁻¹c`, where it equals the modified Gini measure.

use crate::rewards::{RewardError, RewardModel};
use crate::smoothness::{
    gini_modified, maximize_over_subsets, sorted_profile, Measure, Objective, SearchMethod,
    SmoothnessError, SortedProfile, SubsetSpec,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance to which the builders match the requested gap.
pub const GAP_REL_TOL: f64 = 1e-6;
/// Points on the geometric grid used to certify the small-perturbation regime
/// (the grid spans a factor of `2^12` below the candidate scale).
const CERT_GRID_POINTS: usize = 25;
/// Absolute slack granted to the `gap ≥ ½cᵀε` certification checks.
const CERT_SLACK: f64 = 1e-12;
const MAX_BISECT_ITERS: usize = 400;
/// A requested gap may exceed the certified maximum by this relative margin.
const GAP_OVERSHOOT_REL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Smoothness(#[from] SmoothnessError),
    #[error("thresholds must be strictly increasing inside (0,1); offending index {0}")]
    BadThresholds(usize),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("perturbed coordinate {index} is {value}, outside [0, 1]")]
    PerturbationTooLarge { index: usize, value: f64 },
    #[error("outcome {outcome} of the perturbed law has probability {value} < 0")]
    NegativeOutcome { outcome: usize, value: f64 },
    #[error("perturbation must be nonzero")]
    ZeroPerturbation,
    #[error("instance construction requires a symmetric reward, `{0}` is not")]
    RequiresSymmetric(String),
    #[error("need at least {needed} arms for this construction, got {got}")]
    TooFewArms { needed: usize, got: usize },
    #[error("every subset has zero modified smoothness; no gap can be opened")]
    ZeroSmoothness,
    #[error("cumulative gradient vanishes; no gap can be opened")]
    ZeroGradient,
    #[error("requested gap {requested} exceeds the largest certifiable gap {max}")]
    GapUnreachable { requested: f64, max: f64 },
    #[error("horizon {requested} is below the minimum {min} for which the prescribed gap is achievable")]
    HorizonTooShort { requested: u64, min: u64 },
    #[error("could not certify the small-perturbation regime")]
    CannotCertify,
    #[error("gap bisection did not converge")]
    NoConvergence,
    #[error("target gap must be positive and finite, got {0}")]
    BadGap(f64),
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("coupling thresholds must be nondecreasing in [0,1]; offending index {0}")]
    BadCoupling(usize),
    #[error("malformed instance: {0}")]
    Malformed(String),
}

fn check_thresholds(p: &[f64]) -> Result<(), InstanceError> {
    if p.is_empty() {
        return Err(InstanceError::BadThresholds(0));
    }
    let mut prev = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !(v > prev && v < 1.0) {
            return Err(InstanceError::BadThresholds(i));
        }
        prev = v;
    }
    Ok(())
}

fn check_same_len(expected: usize, got: usize) -> Result<(), InstanceError> {
    if expected != got {
        return Err(InstanceError::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Largest `‖ε‖_∞` for which the quadratic KL bound and the perturbed
/// staircase law are both guaranteed valid:
/// `½·min{p₁, minᵢ(pᵢ−pᵢ₋₁), (1−p_N)/N}`.
pub fn validity_bound(p: &[f64]) -> Result<f64, InstanceError> {
    check_thresholds(p)?;
    let n = p.len();
    let mut bound = p[0].min((1.0 - p[n - 1]) / n as f64);
    for pair in p.windows(2) {
        bound = bound.min(pair[1] - pair[0]);
    }
    Ok(0.5 * bound)
}

/// The KL curvature matrix `B = D + 11ᵀ/(1−p_N)`, `D_ii = 1/(pᵢ−pᵢ₋₁)`,
/// with its closed-form inverse `B⁻¹_ij = Δpᵢ·δ_ij − Δpᵢ·Δpⱼ`.
#[derive(Debug, Clone)]
pub struct KlQuadraticForm {
    p: Vec<f64>,
    /// Increments pᵢ − pᵢ₋₁ with p₀ = 0.
    dp: Vec<f64>,
}

impl KlQuadraticForm {
    pub fn new(p: &[f64]) -> Result<Self, InstanceError> {
        check_thresholds(p)?;
        let mut dp = Vec::with_capacity(p.len());
        let mut prev = 0.0;
        for &v in p {
            dp.push(v - prev);
            prev = v;
        }
        Ok(KlQuadraticForm { p: p.to_vec(), dp })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Dense `B`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let tail = 1.0 / (1.0 - self.p[n - 1]);
        let mut b = vec![vec![tail; n]; n];
        for i in 0..n {
            b[i][i] += 1.0 / self.dp[i];
        }
        b
    }

    /// Dense `B⁻¹` from the closed form.
    pub fn inverse(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut inv = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                inv[i][j] = -self.dp[i] * self.dp[j];
                if i == j {
                    inv[i][j] += self.dp[i];
                }
            }
        }
        inv
    }

    /// `εᵀBε` via the diagonal-plus-rank-one structure.
    pub fn quadratic(&self, eps: &[f64]) -> Result<f64, InstanceError> {
        check_same_len(self.dim(), eps.len())?;
        let diag: f64 = eps.iter().zip(&self.dp).map(|(&e, &d)| e * e / d).sum();
        let s: f64 = eps.iter().sum();
        Ok(diag + s * s / (1.0 - self.p[self.dim() - 1]))
    }

    /// `B⁻¹·c` by explicit matrix-vector product with [`Self::inverse`]; the
    /// independent route against which the closed-form perturbation is
    /// checked.
    pub fn inverse_times(&self, c: &[f64]) -> Result<Vec<f64>, InstanceError> {
        check_same_len(self.dim(), c.len())?;
        let inv = self.inverse();
        Ok(inv
            .iter()
            .map(|row| row.iter().zip(c).map(|(&a, &b)| a * b).sum())
            .collect())
    }
}

/// Closed-form maximizer of `(cᵀε)²/(εᵀBε)`, scaled by `eps0`:
/// `ε*ᵢ = ε₀·Δpᵢ·(cᵢ − Σⱼ Δpⱼ·cⱼ)`.
pub fn optimal_perturbation(p: &[f64], c: &[f64], eps0: f64) -> Result<Vec<f64>, InstanceError> {
    check_thresholds(p)?;
    check_same_len(p.len(), c.len())?;
    let mut prev = 0.0;
    let dp: Vec<f64> = p
        .iter()
        .map(|&v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect();
    let weighted: f64 = dp.iter().zip(c).map(|(&d, &ci)| d * ci).sum();
    Ok(dp.iter().zip(c).map(|(&d, &ci)| eps0 * d * (ci - weighted)).collect())
}

/// The efficiency `(cᵀε)²/(εᵀBε)` of a perturbation; at `ε*` it equals the
/// modified Gini measure, and no `ε` does better.
pub fn gap_kl_ratio(p: &[f64], c: &[f64], eps: &[f64]) -> Result<f64, InstanceError> {
    let form = KlQuadraticForm::new(p)?;
    check_same_len(p.len(), c.len())?;
    if eps.iter().all(|&e| e == 0.0) {
        return Err(InstanceError::ZeroPerturbation);
    }
    let num: f64 = c.iter().zip(eps).map(|(&a, &b)| a * b).sum();
    Ok(num * num / form.quadratic(eps)?)
}

/// Suffix sums of the gradient over the free block of the profile:
/// `cⱼ = Σ_{i=j..N} ∇ᵢ r(p)`.
pub fn cumulative_gradient(
    model: &RewardModel,
    profile: &SortedProfile,
) -> Result<Vec<f64>, InstanceError> {
    let g = model.gradient(&profile.values)?;
    let n = profile.complement_size;
    let mut c = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += g[i];
        c[i] = acc;
    }
    Ok(c)
}

/// Exact gap `r(p) − r(p − cumsum(ε))` with the common block held fixed.
/// `eps` has one entry per free coordinate (zeros inside tied groups).
pub fn gap_exact(
    model: &RewardModel,
    profile: &SortedProfile,
    eps: &[f64],
) -> Result<f64, InstanceError> {
    let n = profile.complement_size;
    check_same_len(n, eps.len())?;
    let mut perturbed = profile.values.clone();
    let mut cum = 0.0;
    for i in 0..n {
        cum += eps[i];
        let v = profile.values[i] - cum;
        if !(0.0..=1.0).contains(&v) {
            return Err(InstanceError::PerturbationTooLarge { index: i, value: v });
        }
        perturbed[i] = v;
    }
    Ok(model.evaluate(&profile.values)? - model.evaluate(&perturbed)?)
}

fn staircase_outcomes(thresholds: &[f64]) -> Vec<f64> {
    let mut probs = Vec::with_capacity(thresholds.len() + 1);
    let mut prev = 0.0;
    for &q in thresholds {
        probs.push(q - prev);
        prev = q;
    }
    probs.push(1.0 - prev);
    probs
}

/// Exact KL divergence of the perturbed staircase law from the unperturbed
/// one, as a categorical divergence over the `N+1` outcomes (`0·ln 0 = 0`).
pub fn kl_exact(p: &[f64], eps: &[f64]) -> Result<f64, InstanceError> {
    check_thresholds(p)?;
    check_same_len(p.len(), eps.len())?;
    let star = staircase_outcomes(p);
    let mut cum = 0.0;
    let q: Vec<f64> = p
        .iter()
        .zip(eps)
        .map(|(&pi, &e)| {
            cum += e;
            pi - cum
        })
        .collect();
    let pert = staircase_outcomes(&q);
    let mut kl = 0.0;
    for (outcome, (&nu, &nu_star)) in pert.iter().zip(&star).enumerate() {
        if nu < 0.0 {
            return Err(InstanceError::NegativeOutcome { outcome, value: nu });
        }
        if nu > 0.0 {
            // nu_star > 0 is guaranteed by the strict threshold check.
            kl += nu * (nu / nu_star).ln();
        }
    }
    Ok(kl)
}

/// The quadratic upper bound `2εᵀB(p)ε` on [`kl_exact`], valid whenever
/// `‖ε‖_∞ ≤ validity_bound(p)`.
pub fn kl_quadratic_bound(p: &[f64], eps: &[f64]) -> Result<f64, InstanceError> {
    Ok(2.0 * KlQuadraticForm::new(p)?.quadratic(eps)?)
}

/// Joint law of a block of coupled Bernoulli arms: one uniform draw `U`, and
/// coordinate `i` fires iff `U ≤ thresholds[i]`. Marginals equal the
/// thresholds; the joint support is the `N+1` staircase outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingDistribution {
    thresholds: Vec<f64>,
}

impl CouplingDistribution {
    pub fn new(thresholds: Vec<f64>) -> Result<Self, InstanceError> {
        let mut prev = 0.0;
        for (i, &q) in thresholds.iter().enumerate() {
            if !(q >= prev && q <= 1.0) {
                return Err(InstanceError::BadCoupling(i));
            }
            prev = q;
        }
        Ok(CouplingDistribution { thresholds })
    }

    pub fn marginals(&self) -> &[f64] {
        &self.thresholds
    }

    /// Probabilities of the `N+1` staircase outcomes (all-ones first, then
    /// progressively more leading zeros, all-zeros last).
    pub fn outcome_probabilities(&self) -> Vec<f64> {
        staircase_outcomes(&self.thresholds)
    }

    /// Thresholds one uniform draw `u ∈ [0,1)`.
    pub fn sample(&self, u: f64) -> Vec<u8> {
        self.thresholds.iter().map(|&q| u8::from(u <= q)).collect()
    }
}

/// Sorted profile plus the merged-threshold view used by the perturbation
/// machinery: tied means collapse into groups, `ε` lives on groups, and the
/// cumulative gradient of a group starts at its first free coordinate.
#[derive(Debug, Clone)]
pub struct PerturbationSystem {
    pub profile: SortedProfile,
    /// Distinct block values, strictly increasing, inside (0,1).
    pub thresholds: Vec<f64>,
    /// `group_map[i]` is the threshold index of free coordinate `i`.
    pub group_map: Vec<usize>,
    /// Suffix gradient sums taken at each group's first free coordinate.
    pub cum_gradient: Vec<f64>,
}

impl PerturbationSystem {
    /// Spreads per-group values onto free coordinates (placed at each group's
    /// first coordinate, zero elsewhere), the layout [`gap_exact`] expects.
    pub fn expand(&self, per_group: &[f64]) -> Result<Vec<f64>, InstanceError> {
        expand_group_values(&self.group_map, per_group)
    }
}

fn expand_group_values(group_map: &[usize], per_group: &[f64]) -> Result<Vec<f64>, InstanceError> {
    let groups = group_map.iter().max().map_or(0, |&g| g + 1);
    check_same_len(groups, per_group.len())?;
    let mut full = vec![0.0; group_map.len()];
    let mut seen = usize::MAX;
    for (i, &g) in group_map.iter().enumerate() {
        if g != seen {
            full[i] = per_group[g];
            seen = g;
        }
    }
    Ok(full)
}

/// Builds the merged-threshold system for `(model, mu, subset)`. Fails if any
/// free mean sits at 0 or 1 (no perturbation may cross the boundary there).
pub fn perturbation_system(
    model: &RewardModel,
    mu: &[f64],
    subset: &SubsetSpec,
) -> Result<PerturbationSystem, InstanceError> {
    let profile = sorted_profile(mu, subset)?;
    let c_full = cumulative_gradient(model, &profile)?;
    let block = profile.block();
    let mut thresholds: Vec<f64> = Vec::new();
    let mut group_map = Vec::with_capacity(block.len());
    let mut cum_gradient = Vec::new();
    for (i, &v) in block.iter().enumerate() {
        if thresholds.last() != Some(&v) {
            thresholds.push(v);
            cum_gradient.push(c_full[i]);
        }
        group_map.push(thresholds.len() - 1);
    }
    check_thresholds(&thresholds)?;
    Ok(PerturbationSystem { profile, thresholds, group_map, cum_gradient })
}

/// Lower-bound annotation attached to a built instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAnnotations {
    /// `"dependent"` or `"independent"`.
    pub kind: String,
    /// The bound value (problem-dependent: coefficient of `ln T`).
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
}

/// A fully specified worst-case instance, serializable as JSON.
///
/// Arm ids are 1-based and global: the common arms are `1..=|I|`, action `a`
/// (0-based) owns the block `|I| + a·N + 1 ..= |I| + (a+1)·N`, and any
/// leftover arms are unused. Position `i < N` of an action's arm vector is
/// staircase coordinate `i`; the common arms sit at the tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointInstance {
    pub schema_version: u32,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "I")]
    pub common: SubsetSpec,
    pub mu_common: Vec<f64>,
    /// Distinct staircase thresholds of the optimal action's free block.
    pub p: Vec<f64>,
    /// Per-group perturbation of the suboptimal actions.
    pub epsilon: Vec<f64>,
    /// Free coordinate → threshold group.
    pub group_map: Vec<usize>,
    pub actions: Vec<Vec<usize>>,
    pub optimal_index: usize,
    pub gap: f64,
    pub reward_name: String,
    pub bound_annotations: BoundAnnotations,
}

impl DisjointInstance {
    pub fn complement_size(&self) -> usize {
        self.group_map.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// The reward model this instance was built for.
    pub fn reward_model(&self) -> Result<RewardModel, InstanceError> {
        Ok(RewardModel::by_name(&self.reward_name, self.k)?)
    }

    /// Thresholds of the perturbed (suboptimal) staircase law.
    pub fn perturbed_thresholds(&self) -> Vec<f64> {
        let mut cum = 0.0;
        self.p
            .iter()
            .zip(&self.epsilon)
            .map(|(&p, &e)| {
                cum += e;
                p - cum
            })
            .collect()
    }

    /// Coupled law of an action's free block.
    pub fn coupling(&self, action_idx: usize) -> Result<CouplingDistribution, InstanceError> {
        self.check_action(action_idx)?;
        let thresholds = if action_idx == self.optimal_index {
            self.p.clone()
        } else {
            self.perturbed_thresholds()
        };
        CouplingDistribution::new(thresholds)
    }

    /// True Bernoulli means of an action's arms, in layout order (free block
    /// first, common arms last).
    pub fn action_means(&self, action_idx: usize) -> Result<Vec<f64>, InstanceError> {
        self.check_action(action_idx)?;
        let thresholds = if action_idx == self.optimal_index {
            self.p.clone()
        } else {
            self.perturbed_thresholds()
        };
        let mut means: Vec<f64> = self.group_map.iter().map(|&g| thresholds[g]).collect();
        means.extend_from_slice(&self.mu_common);
        Ok(means)
    }

    /// Expected reward of an action under the true arm means.
    pub fn expected_reward(&self, model: &RewardModel, action_idx: usize) -> Result<f64, InstanceError> {
        Ok(model.evaluate(&self.action_means(action_idx)?)?)
    }

    fn check_action(&self, action_idx: usize) -> Result<(), InstanceError> {
        if action_idx >= self.actions.len() {
            return Err(InstanceError::Malformed(format!(
                "action index {action_idx} out of range 0..{}",
                self.actions.len()
            )));
        }
        Ok(())
    }

    /// Draws one round of semi-bandit feedback for `action_idx`: the free
    /// block is coupled through a single uniform draw, the common arms are
    /// independent Bernoullis. Returns `(arm_id, outcome)` in layout order.
    pub fn sample_round<R: Rng>(
        &self,
        rng: &mut R,
        action_idx: usize,
    ) -> Result<Vec<(usize, u8)>, InstanceError> {
        let coupling = self.coupling(action_idx)?;
        let u: f64 = rng.gen();
        let block_outcomes = coupling.sample(u);
        let action = &self.actions[action_idx];
        let n = self.complement_size();
        let mut obs = Vec::with_capacity(self.k);
        for (i, &g) in self.group_map.iter().enumerate() {
            obs.push((action[i], block_outcomes[g]));
        }
        for (j, &mu) in self.mu_common.iter().enumerate() {
            let v: f64 = rng.gen();
            obs.push((action[n + j], u8::from(v <= mu)));
        }
        Ok(obs)
    }

    /// Stable content id (FNV-1a over the canonical JSON).
    pub fn instance_id(&self) -> String {
        let bytes = serde_json::to_string(self).expect("instance serializes");
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in bytes.bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let instance: DisjointInstance =
            serde_json::from_str(text).map_err(|e| InstanceError::Malformed(e.to_string()))?;
        instance.validate()?;
        Ok(instance)
    }

    /// Structural and numeric consistency checks, run on deserialization.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let malformed = |msg: String| Err(InstanceError::Malformed(msg));
        let n = self.complement_size();
        let i_len = self.common.indices().len();
        if self.common.k() != self.k || self.common.complement_size() != n {
            return malformed("subset does not match K and the free-block size".into());
        }
        if self.mu_common.len() != i_len {
            return malformed("mu_common length does not match the subset".into());
        }
        check_thresholds(&self.p)?;
        check_same_len(self.p.len(), self.epsilon.len())?;
        for (i, &g) in self.group_map.iter().enumerate() {
            if g >= self.p.len() || (i == 0 && g != 0) {
                return malformed(format!("group_map entry {i} is inconsistent"));
            }
            if i > 0 {
                let prev = self.group_map[i - 1];
                if g != prev && g != prev + 1 {
                    return malformed(format!("group_map entry {i} skips a group"));
                }
            }
        }
        if *self.group_map.last().unwrap_or(&usize::MAX) != self.p.len() - 1 {
            return malformed("group_map does not cover every threshold".into());
        }
        if self.actions.len() < 2 {
            return malformed("an instance needs at least two actions".into());
        }
        if self.optimal_index >= self.actions.len() {
            return malformed("optimal_index out of range".into());
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return malformed(format!("gap {} is not positive and finite", self.gap));
        }
        // Arm layout: distinct ids within 1..=m, pairwise intersections
        // exactly the common tail, identical across actions.
        let mut seen_blocks = std::collections::BTreeSet::new();
        let common_tail: Vec<usize> = self.actions[0][n..].to_vec();
        for action in &self.actions {
            if action.len() != self.k {
                return malformed("action size differs from K".into());
            }
            if action[n..] != common_tail[..] {
                return malformed("actions disagree on the common arms".into());
            }
            for &arm in action {
                if arm == 0 || arm > self.m {
                    return malformed(format!("arm id {arm} outside 1..={}", self.m));
                }
            }
            for &arm in &action[..n] {
                if common_tail.contains(&arm) || !seen_blocks.insert(arm) {
                    return malformed(format!("block arm {arm} is shared between actions"));
                }
            }
        }
        for &mu in &self.mu_common {
            if !(0.0..=1.0).contains(&mu) {
                return malformed(format!("common mean {mu} outside [0,1]"));
            }
        }
        // The perturbed law must be a valid coupling with positive outcomes.
        let q = self.perturbed_thresholds();
        CouplingDistribution::new(q)?;
        // Gap consistency against the named reward.
        let model = self.reward_model()?;
        let opt = self.expected_reward(&model, self.optimal_index)?;
        for idx in 0..self.actions.len() {
            if idx == self.optimal_index {
                continue;
            }
            let gap = opt - self.expected_reward(&model, idx)?;
            if (gap - self.gap).abs() > 1e-9 * self.gap.abs().max(1.0) {
                return malformed(format!(
                    "recorded gap {} disagrees with recomputed gap {gap}",
                    self.gap
                ));
            }
        }
        Ok(())
    }
}

/// The optimal perturbation direction for a system, together with a
/// certified scale `ε₀` below which the exact gap provably dominates the
/// first-order term `½cᵀε` on a geometric grid of scales.
#[derive(Debug, Clone)]
pub struct CertifiedDirection {
    /// Per-group direction, `ε*` at unit scale.
    pub direction: Vec<f64>,
    /// The same direction spread over free coordinates.
    pub direction_full: Vec<f64>,
    /// `cᵀ·direction`, the first-order gap per unit scale.
    pub linear_coefficient: f64,
    /// Largest certified scale.
    pub max_scale: f64,
    /// Exact gap at `max_scale`.
    pub max_gap: f64,
}

/// Computes `ε* ∝ B⁻¹c` for the system and certifies the largest scale —
/// starting from the validity bound and halving as needed — at which
/// `gap_exact ≥ ½cᵀε` holds across a geometric grid of trial scales.
pub fn certify_direction(
    model: &RewardModel,
    system: &PerturbationSystem,
) -> Result<CertifiedDirection, InstanceError> {
    let c = &system.cum_gradient;
    if c.iter().all(|&v| v == 0.0) {
        return Err(InstanceError::ZeroGradient);
    }
    let direction = optimal_perturbation(&system.thresholds, c, 1.0)?;
    let dir_norm = direction.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
    if dir_norm == 0.0 {
        return Err(InstanceError::ZeroGradient);
    }
    let linear_coefficient: f64 = c.iter().zip(&direction).map(|(&a, &b)| a * b).sum();
    let direction_full = system.expand(&direction)?;

    let bound = validity_bound(&system.thresholds)?;
    let mut scale = bound / dir_norm;
    let mut certified = false;
    'shrink: for _ in 0..200 {
        for j in 0..CERT_GRID_POINTS {
            let s = scale * 2f64.powf(-(j as f64) / 2.0);
            let eps: Vec<f64> = direction_full.iter().map(|&d| d * s).collect();
            let ok = match gap_exact(model, &system.profile, &eps) {
                Ok(gap) => {
                    gap >= 0.5 * s * linear_coefficient
                        - CERT_SLACK * (1.0 + (s * linear_coefficient).abs())
                }
                Err(_) => false,
            };
            if !ok {
                scale *= 0.5;
                if scale < 1e-300 {
                    return Err(InstanceError::CannotCertify);
                }
                continue 'shrink;
            }
        }
        certified = true;
        break;
    }
    if !certified {
        return Err(InstanceError::CannotCertify);
    }
    let max_eps: Vec<f64> = direction_full.iter().map(|&d| d * scale).collect();
    let max_gap = gap_exact(model, &system.profile, &max_eps)?;
    Ok(CertifiedDirection { direction, direction_full, linear_coefficient, max_scale: scale, max_gap })
}

enum Target {
    Gap(f64),
    Horizon(u64),
}

/// Instance whose suboptimal actions trail the optimal one by exactly
/// `target_gap`; requires `m > 2K`.
pub fn build_dependent_instance(
    model: &RewardModel,
    mu: &[f64],
    target_gap: f64,
    m: usize,
) -> Result<DisjointInstance, InstanceError> {
    build(model, mu, m, Target::Gap(target_gap))
}

/// Instance whose gap is prescribed by the horizon,
/// `Δ = (γ̃/8)·√((m−K)/(T·N))`; requires `m ≥ 3K` and `T` at least the
/// smallest horizon whose prescribed gap is achievable.
pub fn build_independent_instance(
    model: &RewardModel,
    mu: &[f64],
    m: usize,
    horizon: u64,
) -> Result<DisjointInstance, InstanceError> {
    build(model, mu, m, Target::Horizon(horizon))
}

fn build(
    model: &RewardModel,
    mu: &[f64],
    m: usize,
    target: Target,
) -> Result<DisjointInstance, InstanceError> {
    if !model.symmetric() {
        return Err(InstanceError::RequiresSymmetric(model.name()));
    }
    let k = model.action_size();
    match target {
        Target::Gap(g) => {
            if !(g > 0.0 && g.is_finite()) {
                return Err(InstanceError::BadGap(g));
            }
            if m <= 2 * k {
                return Err(InstanceError::TooFewArms { needed: 2 * k + 1, got: m });
            }
        }
        Target::Horizon(t) => {
            if t == 0 {
                return Err(InstanceError::BadHorizon);
            }
            if m < 3 * k {
                return Err(InstanceError::TooFewArms { needed: 3 * k, got: m });
            }
        }
    }

    // The binding subset maximizes the per-arm modified measure.
    let search =
        maximize_over_subsets(model, mu, Measure::Modified, Objective::PerArm, SearchMethod::Brute)?;
    if !(search.value > 0.0) {
        return Err(InstanceError::ZeroSmoothness);
    }
    let subset = search.subset;
    let system = perturbation_system(model, mu, &subset)?;
    let n = system.profile.complement_size;
    let modified = gini_modified(model, mu, &subset)?;

    let certified = certify_direction(model, &system)?;
    let direction = &certified.direction;
    let dir_full = &certified.direction_full;
    let cte_unit = certified.linear_coefficient;
    let scale = certified.max_scale;
    let max_gap = certified.max_gap;

    let (target_gap, horizon) = match target {
        Target::Gap(g) => (g, None),
        Target::Horizon(t) => {
            let prescribed =
                modified.sqrt() / 8.0 * ((m - k) as f64 / (t as f64 * n as f64)).sqrt();
            let t_min =
                (modified * (m - k) as f64 / (64.0 * n as f64 * max_gap * max_gap)).ceil() as u64;
            let t_min = t_min.max(1);
            if t < t_min {
                return Err(InstanceError::HorizonTooShort { requested: t, min: t_min });
            }
            (prescribed, Some(t))
        }
    };
    if target_gap > max_gap * (1.0 + GAP_OVERSHOOT_REL) {
        return Err(InstanceError::GapUnreachable { requested: target_gap, max: max_gap });
    }

    // Bisect the scale to hit the target gap.
    let mut eps0 = scale;
    let mut realized = max_gap;
    if (realized - target_gap).abs() > GAP_REL_TOL * target_gap {
        let (mut lo, mut hi) = (0.0f64, scale);
        let mut converged = false;
        for _ in 0..MAX_BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            let eps: Vec<f64> = dir_full.iter().map(|&d| d * mid).collect();
            let gap = gap_exact(model, &system.profile, &eps)?;
            if (gap - target_gap).abs() <= GAP_REL_TOL * target_gap {
                eps0 = mid;
                realized = gap;
                converged = true;
                break;
            }
            if gap < target_gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if !converged {
            return Err(InstanceError::NoConvergence);
        }
    }

    let epsilon: Vec<f64> = direction.iter().map(|&d| d * eps0).collect();
    let eps_full: Vec<f64> = dir_full.iter().map(|&d| d * eps0).collect();
    let cte: f64 = eps0 * cte_unit;
    if realized < 0.5 * cte - CERT_SLACK * (1.0 + cte.abs()) {
        return Err(InstanceError::CannotCertify);
    }
    debug_assert!((gap_exact(model, &system.profile, &eps_full)? - realized).abs() <= 1e-15);

    // Arm layout: common arms first, then one block per action.
    let i_len = subset.indices().len();
    let num_actions = (m - i_len) / n;
    let common_ids: Vec<usize> = (1..=i_len).collect();
    let mut actions = Vec::with_capacity(num_actions);
    for a in 0..num_actions {
        let base = i_len + a * n;
        let mut action: Vec<usize> = (base + 1..=base + n).collect();
        action.extend_from_slice(&common_ids);
        actions.push(action);
    }
    let mu_common: Vec<f64> =
        (n..system.profile.values.len()).map(|i| system.profile.values[i]).collect();

    let annotations = match horizon {
        None => BoundAnnotations {
            kind: "dependent".to_string(),
            value: (m as f64 - 2.0 * k as f64) * modified / (8.0 * n as f64 * realized),
            horizon: None,
        },
        Some(t) => BoundAnnotations {
            kind: "independent".to_string(),
            value: modified.sqrt() / 32.0 * (t as f64 * (m - k) as f64 / n as f64).sqrt(),
            horizon: Some(t),
        },
    };

    let instance = DisjointInstance {
        schema_version: crate::SCHEMA_VERSION,
        m,
        k,
        common: subset,
        mu_common,
        p: system.thresholds.clone(),
        epsilon,
        group_map: system.group_map.clone(),
        actions,
        optimal_index: 0,
        gap: realized,
        reward_name: model.name(),
        bound_annotations: annotations,
    };
    instance.validate()?;
    Ok(instance)
}
