//! Gini-weighted smoothness measures of a reward model around a mean vector.
//!
//! Fix a mean vector `mu` and a set `I` of "common" coordinates. The
//! remaining `N = K − |I|` coordinates are sorted ascending into a profile
//! `p₁ ≤ … ≤ p_N`, each keeping its own gradient component. Three weighted
//! norms of the gradient measure how much room the reward leaves for a
//! worst-case perturbation of the profile:
//!
//! * `gini_l2` — `Σ pᵢ(1−pᵢ)·gᵢ²`,
//! * `gini_l1` — `(Σ √(pᵢ(1−pᵢ))·gᵢ)²`,
//! * `gini_modified` — the L2 sum plus the ordered cross terms
//!   `2·Σ_{i<j} pᵢ(1−pⱼ)·gᵢgⱼ`, equivalently the variance of a suffix-sum
//!   random variable ([`variance_form`]), which makes its nonnegativity
//!   obvious.
//!
//! For symmetric models the gradient may equivalently be re-evaluated at the
//! sorted profile; the L1/L2 entry points check this identity and report a
//! violation, which is what certifies that a model really is index-invariant.

use crate::rewards::{RewardError, RewardModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Maximum disagreement between the two evaluation routes of the L2/L1
/// measures (direct indices vs. gradient re-evaluated at the profile),
/// relative to `max(1, |value|)`.
pub const PROFILE_CHECK_TOL: f64 = 1e-12;
/// Maximum disagreement between the pairwise sum and the variance form of the
/// modified measure, relative to `max(1, |value|)`.
pub const VARIANCE_CHECK_TOL: f64 = 1e-10;
/// Largest action size the brute-force subset search accepts (2^22 subsets).
pub const MAX_BRUTE_ARMS: usize = 22;
/// Largest vector length the brute-force norm-ratio oracle accepts.
pub const MAX_BRUTE_COORDS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum SmoothnessError {
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("subset index {0} outside 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("subset index {0} repeated")]
    DuplicateIndex(usize),
    #[error("index-invariance check failed: direct {direct} vs profile {profile}")]
    IndexInvariance { direct: f64, profile: f64 },
    #[error("modified measure {pairwise} disagrees with its variance form {variance}")]
    VarianceMismatch { pairwise: f64, variance: f64 },
    #[error("brute-force subset search supports at most {max} arms, got {got}")]
    TooManyArms { max: usize, got: usize },
    #[error("prefix search requires a monotone reward")]
    PrefixNeedsMonotone,
    #[error("empty vector")]
    EmptyVector,
    #[error("brute-force norm-ratio oracle supports at most {max} coordinates, got {got}")]
    TooManyCoords { max: usize, got: usize },
}

/// A sorted set of 1-based coordinate indices held fixed ("common" arms).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    indices: Vec<usize>,
    complement_size: usize,
}

impl SubsetSpec {
    /// Builds a subset of `{1..K}`; indices may come in any order but must be
    /// distinct and in range.
    pub fn new(mut indices: Vec<usize>, k: usize) -> Result<Self, SmoothnessError> {
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(SmoothnessError::DuplicateIndex(pair[0]));
            }
        }
        for &i in &indices {
            if i == 0 || i > k {
                return Err(SmoothnessError::IndexOutOfRange(i, k));
            }
        }
        let complement_size = k - indices.len();
        Ok(SubsetSpec { indices, complement_size })
    }

    /// The empty subset: every coordinate stays free.
    pub fn empty(k: usize) -> Self {
        SubsetSpec { indices: Vec::new(), complement_size: k }
    }

    /// Subset from a bitmask: bit `b` set means index `b+1` is common.
    pub fn from_mask(mask: u32, k: usize) -> Self {
        let indices: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        let complement_size = k - indices.len();
        SubsetSpec { indices, complement_size }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn complement_size(&self) -> usize {
        self.complement_size
    }

    pub fn k(&self) -> usize {
        self.indices.len() + self.complement_size
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// The free coordinates, ascending and 1-based.
    pub fn complement(&self) -> Vec<usize> {
        (1..=self.k()).filter(|i| !self.contains(*i)).collect()
    }
}

/// Mean vector rearranged as (sorted free coordinates, common coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProfile {
    /// Rearranged values; the first `complement_size` are ascending.
    pub values: Vec<f64>,
    /// `permutation[pos]` is the original 1-based index now at `pos`.
    pub permutation: Vec<usize>,
    /// Number of free coordinates at the front.
    pub complement_size: usize,
}

impl SortedProfile {
    /// The sorted free block `p₁ ≤ … ≤ p_N`.
    pub fn block(&self) -> &[f64] {
        &self.values[..self.complement_size]
    }
}

/// Sorts the free coordinates of `mu` ascending (stable: ties keep index
/// order) and appends the common coordinates in subset order.
pub fn sorted_profile(mu: &[f64], subset: &SubsetSpec) -> Result<SortedProfile, SmoothnessError> {
    check_dims(mu, subset)?;
    let mut free: Vec<usize> = subset.complement();
    free.sort_by(|&a, &b| {
        mu[a - 1].partial_cmp(&mu[b - 1]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    let permutation: Vec<usize> = free.iter().chain(subset.indices().iter()).copied().collect();
    let values: Vec<f64> = permutation.iter().map(|&i| mu[i - 1]).collect();
    Ok(SortedProfile { values, permutation, complement_size: subset.complement_size() })
}

fn check_dims(mu: &[f64], subset: &SubsetSpec) -> Result<(), SmoothnessError> {
    if subset.k() != mu.len() {
        return Err(RewardError::DimensionMismatch { expected: subset.k(), got: mu.len() }.into());
    }
    Ok(())
}

// ---- pair-level evaluators -------------------------------------------------
//
// Each takes the sorted free block `p` and the matching gradient components
// `g` (each value paired with its own arm's gradient). The public entry
// points and the subset search all reduce to these.

pub(crate) fn l2_from_pairs(p: &[f64], g: &[f64]) -> f64 {
    p.iter().zip(g).map(|(&p, &g)| p * (1.0 - p) * g * g).sum()
}

pub(crate) fn l1_from_pairs(p: &[f64], g: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(g).map(|(&p, &g)| (p * (1.0 - p)).sqrt() * g).sum();
    s * s
}

pub(crate) fn modified_from_pairs(p: &[f64], g: &[f64]) -> f64 {
    let n = p.len();
    let mut v = 0.0;
    for i in 0..n {
        v += p[i] * (1.0 - p[i]) * g[i] * g[i];
    }
    for i in 0..n {
        for j in i + 1..n {
            v += 2.0 * p[i] * (1.0 - p[j]) * g[i] * g[j];
        }
    }
    v
}

/// Variance route to the modified measure: with suffix sums
/// `cᵢ = gᵢ + … + g_N` (and `c_{N+1} = 0`), the measure equals the variance
/// of a variable taking value `cᵢ` with probability `pᵢ − pᵢ₋₁` (boundaries
/// `p₀ = 0`, `p_{N+1} = 1`).
pub(crate) fn variance_from_pairs(p: &[f64], g: &[f64]) -> f64 {
    let n = p.len();
    let mut c = vec![0.0; n + 1];
    for i in (0..n).rev() {
        c[i] = c[i + 1] + g[i];
    }
    let mut prev = 0.0;
    let mut ex = 0.0;
    let mut ex2 = 0.0;
    for (i, &ci) in c.iter().enumerate() {
        let pi = if i < n { p[i] } else { 1.0 };
        let w = pi - prev;
        prev = pi;
        ex += w * ci;
        ex2 += w * ci * ci;
    }
    ex2 - ex * ex
}

/// Free block of the profile together with the gradient components permuted
/// along with their values.
fn profile_pairs(
    model: &RewardModel,
    mu: &[f64],
    subset: &SubsetSpec,
) -> Result<(SortedProfile, Vec<f64>), SmoothnessError> {
    let profile = sorted_profile(mu, subset)?;
    let g = model.gradient(mu)?;
    let permuted: Vec<f64> = profile.permutation.iter().map(|&i| g[i - 1]).collect();
    Ok((profile, permuted))
}

/// For symmetric models, re-evaluates the gradient at the profile point and
/// demands agreement with the permuted-gradient route.
fn invariance_check(
    model: &RewardModel,
    profile: &SortedProfile,
    direct: f64,
    eval: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<(), SmoothnessError> {
    if !model.symmetric() {
        return Ok(());
    }
    let fresh = model.gradient(&profile.values)?;
    let n = profile.complement_size;
    let via_profile = eval(&profile.values[..n], &fresh[..n]);
    if (direct - via_profile).abs() > PROFILE_CHECK_TOL * direct.abs().max(1.0) {
        return Err(SmoothnessError::IndexInvariance { direct, profile: via_profile });
    }
    Ok(())
}

/// L2 Gini measure `Σ pᵢ(1−pᵢ)·gᵢ²` over the free coordinates.
pub fn gini_l2(model: &RewardModel, mu: &[f64], subset: &SubsetSpec) -> Result<f64, SmoothnessError> {
    let (profile, g) = profile_pairs(model, mu, subset)?;
    let n = profile.complement_size;
    let direct = l2_from_pairs(&profile.values[..n], &g[..n]);
    invariance_check(model, &profile, direct, l2_from_pairs)?;
    Ok(direct)
}

/// L1 Gini measure `(Σ √(pᵢ(1−pᵢ))·gᵢ)²` over the free coordinates.
pub fn gini_l1(model: &RewardModel, mu: &[f64], subset: &SubsetSpec) -> Result<f64, SmoothnessError> {
    let (profile, g) = profile_pairs(model, mu, subset)?;
    let n = profile.complement_size;
    let direct = l1_from_pairs(&profile.values[..n], &g[..n]);
    invariance_check(model, &profile, direct, l1_from_pairs)?;
    Ok(direct)
}

/// Modified Gini measure: the L2 sum plus ordered cross terms. Always
/// nonnegative; cross-checked against [`variance_form`] on every call.
pub fn gini_modified(
    model: &RewardModel,
    mu: &[f64],
    subset: &SubsetSpec,
) -> Result<f64, SmoothnessError> {
    let (profile, g) = profile_pairs(model, mu, subset)?;
    let n = profile.complement_size;
    let pairwise = modified_from_pairs(&profile.values[..n], &g[..n]);
    let variance = variance_from_pairs(&profile.values[..n], &g[..n]);
    if (pairwise - variance).abs() > VARIANCE_CHECK_TOL * pairwise.abs().max(1.0) {
        return Err(SmoothnessError::VarianceMismatch { pairwise, variance });
    }
    Ok(pairwise)
}

/// Variance route to the modified measure (see [`variance_from_pairs`]).
pub fn variance_form(
    model: &RewardModel,
    mu: &[f64],
    subset: &SubsetSpec,
) -> Result<f64, SmoothnessError> {
    let (profile, g) = profile_pairs(model, mu, subset)?;
    let n = profile.complement_size;
    Ok(variance_from_pairs(&profile.values[..n], &g[..n]))
}

/// All three measures at one subset, as reported by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub schema_version: u32,
    pub l2: f64,
    pub l1: f64,
    pub modified: f64,
    pub subset: SubsetSpec,
}

/// Computes all three measures at `subset`.
pub fn smoothness_report(
    model: &RewardModel,
    mu: &[f64],
    subset: &SubsetSpec,
) -> Result<SmoothnessReport, SmoothnessError> {
    Ok(SmoothnessReport {
        schema_version: crate::SCHEMA_VERSION,
        l2: gini_l2(model, mu, subset)?,
        l1: gini_l1(model, mu, subset)?,
        modified: gini_modified(model, mu, subset)?,
        subset: subset.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    L2,
    L1,
    Modified,
}

impl Measure {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(Measure::L2),
            "l1" => Some(Measure::L1),
            "modified" => Some(Measure::Modified),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Measure::L2 => "l2",
            Measure::L1 => "l1",
            Measure::Modified => "modified",
        }
    }

    fn eval(&self, p: &[f64], g: &[f64]) -> f64 {
        match self {
            Measure::L2 => l2_from_pairs(p, g),
            Measure::L1 => l1_from_pairs(p, g),
            Measure::Modified => modified_from_pairs(p, g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// The measure itself.
    Raw,
    /// The measure divided by the number of free coordinates.
    PerArm,
}

impl Objective {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(Objective::Raw),
            "per-arm" => Some(Objective::PerArm),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Raw => "raw",
            Objective::PerArm => "per-arm",
        }
    }

    fn apply(&self, value: f64, free: usize) -> f64 {
        match self {
            Objective::Raw => value,
            Objective::PerArm => value / free as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Every subset with a nonempty complement (`2^K − 1` candidates).
    Brute,
    /// Complement-prefix scan in score order; exact for the L1/L2 objectives
    /// on monotone rewards, a flagged heuristic for the modified measure.
    Prefix,
}

impl SearchMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "brute" => Some(SearchMethod::Brute),
            "prefix" => Some(SearchMethod::Prefix),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SearchMethod::Brute => "brute",
            SearchMethod::Prefix => "prefix",
        }
    }
}

/// Result of [`maximize_over_subsets`].
#[derive(Debug, Clone, Serialize)]
pub struct SubsetSearch {
    pub subset: SubsetSpec,
    pub value: f64,
    /// True when the method cannot certify optimality (prefix search on the
    /// modified measure).
    pub heuristic: bool,
}

/// Lexicographic order on the ascending index lists encoded by two masks
/// (`{1} < {1,2} < {2}`); used to break value ties deterministically.
fn subset_lex_cmp(mut a: u32, mut b: u32) -> Ordering {
    loop {
        match (a, b) {
            (0, 0) => return Ordering::Equal,
            (0, _) => return Ordering::Less,
            (_, 0) => return Ordering::Greater,
            _ => {
                let la = a.trailing_zeros();
                let lb = b.trailing_zeros();
                match la.cmp(&lb) {
                    Ordering::Equal => {
                        a &= a - 1;
                        b &= b - 1;
                    }
                    other => return other,
                }
            }
        }
    }
}

fn eval_mask(measure: Measure, objective: Objective, mu: &[f64], g: &[f64], mask: u32) -> f64 {
    let k = mu.len();
    let mut pairs: Vec<(f64, f64, usize)> = (0..k)
        .filter(|b| mask >> b & 1 == 0)
        .map(|b| (mu[b], g[b], b))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.2.cmp(&y.2)));
    let p: Vec<f64> = pairs.iter().map(|t| t.0).collect();
    let gp: Vec<f64> = pairs.iter().map(|t| t.1).collect();
    objective.apply(measure.eval(&p, &gp), p.len())
}

/// Finds the common-coordinate subset maximizing a measure (or its per-arm
/// version). Subsets with an empty complement are excluded; value ties go to
/// the lexicographically smallest subset.
pub fn maximize_over_subsets(
    model: &RewardModel,
    mu: &[f64],
    measure: Measure,
    objective: Objective,
    method: SearchMethod,
) -> Result<SubsetSearch, SmoothnessError> {
    let k = model.action_size();
    if mu.len() != k {
        return Err(RewardError::DimensionMismatch { expected: k, got: mu.len() }.into());
    }
    let g = model.gradient(mu)?;
    match method {
        SearchMethod::Brute => {
            if k > MAX_BRUTE_ARMS {
                return Err(SmoothnessError::TooManyArms { max: MAX_BRUTE_ARMS, got: k });
            }
            let full: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
            let best = (0..full)
                .into_par_iter()
                .map(|mask| (eval_mask(measure, objective, mu, &g, mask), mask))
                .reduce_with(|a, b| pick_better(a, b))
                .expect("at least the empty subset is a candidate");
            Ok(SubsetSearch {
                subset: SubsetSpec::from_mask(best.1, k),
                value: best.0,
                heuristic: false,
            })
        }
        SearchMethod::Prefix => {
            if !model.monotone() {
                return Err(SmoothnessError::PrefixNeedsMonotone);
            }
            // Order arms by their score √(mu(1−mu))·g descending, then scan
            // complements made of the top-d arms.
            let mut order: Vec<usize> = (0..k).collect();
            let score = |b: usize| (mu[b] * (1.0 - mu[b])).sqrt() * g[b];
            order.sort_by(|&x, &y| {
                score(y).partial_cmp(&score(x)).unwrap_or(Ordering::Equal).then(x.cmp(&y))
            });
            let mut best: Option<(f64, u32)> = None;
            for d in 1..=k {
                let mut mask: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
                for &b in &order[..d] {
                    mask &= !(1u32 << b);
                }
                let value = eval_mask(measure, objective, mu, &g, mask);
                let cand = (value, mask);
                best = Some(match best {
                    None => cand,
                    Some(cur) => pick_better(cur, cand),
                });
            }
            let (value, mask) = best.expect("k >= 1");
            Ok(SubsetSearch {
                subset: SubsetSpec::from_mask(mask, k),
                value,
                heuristic: measure == Measure::Modified,
            })
        }
    }
}

fn pick_better(a: (f64, u32), b: (f64, u32)) -> (f64, u32) {
    match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if subset_lex_cmp(a.1, b.1) == Ordering::Greater {
                b
            } else {
                a
            }
        }
    }
}

/// Maximizes `(Σ_{i∈A}|xᵢ|)²/|A|` over nonempty coordinate sets `A` by
/// scanning prefixes of `|x|` sorted descending (which provably contains a
/// maximizer). Returns the chosen 1-based indices (ascending) and the value.
pub fn norm_ratio_max(x: &[f64]) -> Result<(Vec<usize>, f64), SmoothnessError> {
    if x.is_empty() {
        return Err(SmoothnessError::EmptyVector);
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[b].abs().partial_cmp(&x[a].abs()).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    let mut sum = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut best_d = 0;
    for (d, &idx) in order.iter().enumerate() {
        sum += x[idx].abs();
        let value = sum * sum / (d + 1) as f64;
        if value > best {
            best = value;
            best_d = d + 1;
        }
    }
    let mut subset: Vec<usize> = order[..best_d].iter().map(|&b| b + 1).collect();
    subset.sort_unstable();
    Ok((subset, best))
}

/// Exhaustive oracle for [`norm_ratio_max`], usable up to
/// [`MAX_BRUTE_COORDS`] coordinates.
pub fn norm_ratio_brute(x: &[f64]) -> Result<(Vec<usize>, f64), SmoothnessError> {
    let n = x.len();
    if n == 0 {
        return Err(SmoothnessError::EmptyVector);
    }
    if n > MAX_BRUTE_COORDS {
        return Err(SmoothnessError::TooManyCoords { max: MAX_BRUTE_COORDS, got: n });
    }
    let mut best = (f64::NEG_INFINITY, 0u32);
    for mask in 1u32..(1 << n) {
        let mut sum = 0.0;
        for b in 0..n {
            if mask >> b & 1 == 1 {
                sum += x[b].abs();
            }
        }
        let value = sum * sum / mask.count_ones() as f64;
        best = pick_better(best, (value, mask));
    }
    let subset: Vec<usize> = (0..n).filter(|b| best.1 >> b & 1 == 1).map(|b| b + 1).collect();
    Ok((subset, best.0))
}
