//! Regret lower-bound formulas.
//!
//! Two headline quantities, each maximized over the shared subset `I` by
//! brute force:
//!
//! * problem-dependent, the coefficient of `ln T`:
//!   `DB* = max_I (m − 2K)·γ̃²(μ;I) / (8·N_I·Δ)`;
//! * problem-independent, the minimax floor:
//!   `IB* = max_I (γ̃(μ;I)/32)·√(T·(m−K)/N_I)`;
//!
//! where `γ̃²` is the modified Gini-weighted smoothness and `N_I` the number
//! of free arms. For rewards that are sums of `M` identical copies the bounds
//! scale by `M²` (dependent) and `M` (independent). A grid scan over uniform
//! means exposes how the per-arm smoothness of the exponential-quadratic
//! reward decays with the block size.

use crate::rewards::{RewardError, RewardModel};
use crate::smoothness::{
    gini_modified, maximize_over_subsets, Measure, Objective, SearchMethod, SmoothnessError,
    SubsetSpec,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Smoothness(#[from] SmoothnessError),
    #[error("gap must be positive and finite, got {0}")]
    BadGap(f64),
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("need at least {needed} arms, got {got}")]
    TooFewArms { needed: usize, got: usize },
    #[error("copy count must be at least 1")]
    BadCopies,
    #[error("scan needs a nonempty block-size list and grid")]
    EmptyScan,
    #[error("grid point {0} outside [0, 1]")]
    BadGridPoint(f64),
    #[error("scan needs at least two distinct block sizes for a slope")]
    DegenerateSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Dependent,
    Independent,
}

/// A lower-bound evaluation: the value, the subset attaining the outer
/// maximum, and the inputs it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub kind: BoundKind,
    /// Dependent: coefficient of `ln T`. Independent: the bound itself.
    pub value: f64,
    /// True when the arm budget makes the bound vacuous (`m ≤ 2K`); the
    /// value is reported as 0 so parameter sweeps need not special-case it.
    pub degenerate: bool,
    pub maximizing_subset: SubsetSpec,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub mu: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    pub copies: u64,
}

fn best_per_arm_subset(
    model: &RewardModel,
    mu: &[f64],
) -> Result<(SubsetSpec, f64), BoundError> {
    let search = maximize_over_subsets(
        model,
        mu,
        Measure::Modified,
        Objective::PerArm,
        SearchMethod::Brute,
    )?;
    Ok((search.subset, search.value))
}

/// Problem-dependent bound `max_I (m−2K)·γ̃²/(8·N_I·Δ)`.
///
/// With `m ≤ 2K` the construction behind the bound has no room for a second
/// action per block, so the report carries value 0 and the degenerate flag.
pub fn dependent_bound(
    model: &RewardModel,
    mu: &[f64],
    m: usize,
    gap: f64,
) -> Result<BoundReport, BoundError> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(BoundError::BadGap(gap));
    }
    let k = model.action_size();
    let (subset, per_arm) = best_per_arm_subset(model, mu)?;
    let degenerate = m <= 2 * k;
    let value = if degenerate { 0.0 } else { (m - 2 * k) as f64 * per_arm / (8.0 * gap) };
    Ok(BoundReport {
        schema_version: crate::SCHEMA_VERSION,
        kind: BoundKind::Dependent,
        value,
        degenerate,
        maximizing_subset: subset,
        m,
        k,
        mu: mu.to_vec(),
        gap: Some(gap),
        horizon: None,
        copies: 1,
    })
}

/// Problem-independent bound `max_I (γ̃/32)·√(T·(m−K)/N_I)`; requires
/// `m ≥ 3K` (the construction pins the gap to the horizon and needs the
/// extra arms).
pub fn independent_bound(
    model: &RewardModel,
    mu: &[f64],
    m: usize,
    horizon: u64,
) -> Result<BoundReport, BoundError> {
    if horizon == 0 {
        return Err(BoundError::BadHorizon);
    }
    let k = model.action_size();
    if m < 3 * k {
        return Err(BoundError::TooFewArms { needed: 3 * k, got: m });
    }
    let (subset, per_arm) = best_per_arm_subset(model, mu)?;
    let value = per_arm.sqrt() / 32.0 * (horizon as f64 * (m - k) as f64).sqrt();
    Ok(BoundReport {
        schema_version: crate::SCHEMA_VERSION,
        kind: BoundKind::Independent,
        value,
        degenerate: false,
        maximizing_subset: subset,
        m,
        k,
        mu: mu.to_vec(),
        gap: None,
        horizon: Some(horizon),
        copies: 1,
    })
}

/// Lifts a bound to the reward made of `copies` identical copies of the base
/// reward: dependent values scale by `copies²`, independent by `copies`.
pub fn sum_copies_bound(base: &BoundReport, copies: u64) -> Result<BoundReport, BoundError> {
    if copies == 0 {
        return Err(BoundError::BadCopies);
    }
    let factor = match base.kind {
        BoundKind::Dependent => (copies * copies) as f64,
        BoundKind::Independent => copies as f64,
    };
    let mut report = base.clone();
    report.value = base.value * factor;
    report.copies = base.copies * copies;
    Ok(report)
}

/// One row of [`exp_quadratic_scan`]: the best uniform mean for a block of
/// `n` arms and the per-arm modified smoothness it attains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub best_p0: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub schema_version: u32,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `ln value` against `ln n`.
    pub slope: f64,
}

/// Scans uniform means `μ = p₀·1` for the exponential-quadratic reward: for
/// each block size `n`, the grid maximum of `γ̃²(p₀·1; ∅)/n`, plus the fitted
/// log-log slope of that maximum against `n`. Grid endpoints at 0 or 1
/// contribute zero (the Gini weight vanishes) and never win.
pub fn exp_quadratic_scan(n_values: &[usize], p0_grid: &[f64]) -> Result<ScanTable, BoundError> {
    if n_values.is_empty() || p0_grid.is_empty() || n_values.contains(&0) {
        return Err(BoundError::EmptyScan);
    }
    for &p0 in p0_grid {
        if !(0.0..=1.0).contains(&p0) {
            return Err(BoundError::BadGridPoint(p0));
        }
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let model = RewardModel::ExpQuadratic { k: n };
        let empty = SubsetSpec::empty(n);
        let mut best_p0 = p0_grid[0];
        let mut best = f64::NEG_INFINITY;
        for &p0 in p0_grid {
            let value = if p0 == 0.0 || p0 == 1.0 {
                0.0
            } else {
                gini_modified(&model, &vec![p0; n], &empty)? / n as f64
            };
            if value > best {
                best = value;
                best_p0 = p0;
            }
        }
        rows.push(ScanRow { n, best_p0, value: best });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(BoundError::DegenerateSlope);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    Ok(ScanTable { schema_version: crate::SCHEMA_VERSION, rows, slope: sxy / sxx })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, atol: f64) {
        assert!((a - b).abs() <= atol, "{a} vs {b} (atol {atol})");
    }

    fn thousandths_grid() -> Vec<f64> {
        (1..1000).map(|i| i as f64 / 1000.0).collect()
    }

    #[test]
    fn dependent_worked_example() {
        let model = RewardModel::Linear { k: 2 };
        let report = dependent_bound(&model, &[0.5, 0.5], 10, 0.01).unwrap();
        assert_close(report.value, 37.5, 1e-12);
        assert!(!report.degenerate);
        assert_eq!(report.maximizing_subset.indices(), &[] as &[usize]);
        assert_eq!(report.kind, BoundKind::Dependent);
        // All-½ closed form (m−2K)·K/(32Δ).
        assert_close(report.value, 6.0 * 2.0 / (32.0 * 0.01), 1e-12);
    }

    #[test]
    fn dependent_scales_exactly_with_gap() {
        let model = RewardModel::PmcItem { k: 3 };
        let mu = [0.3, 0.55, 0.7];
        let at = |gap: f64| dependent_bound(&model, &mu, 11, gap).unwrap().value;
        assert_eq!(at(0.04), at(0.01) / 4.0);
    }

    #[test]
    fn dependent_degenerates_below_arm_budget() {
        let model = RewardModel::Linear { k: 2 };
        for m in [0, 3, 4] {
            let report = dependent_bound(&model, &[0.5, 0.5], m, 0.01).unwrap();
            assert!(report.degenerate);
            assert_eq!(report.value, 0.0);
        }
        assert!(!dependent_bound(&model, &[0.5, 0.5], 5, 0.01).unwrap().degenerate);
        assert!(matches!(
            dependent_bound(&model, &[0.5, 0.5], 10, 0.0),
            Err(BoundError::BadGap(_))
        ));
    }

    #[test]
    fn independent_worked_example() {
        let model = RewardModel::Linear { k: 2 };
        let report = independent_bound(&model, &[0.5, 0.5], 10, 10_000).unwrap();
        assert_close(report.value, 6.25, 1e-12);
        assert_eq!(report.horizon, Some(10_000));
        assert_eq!(report.maximizing_subset.indices(), &[] as &[usize]);
    }

    #[test]
    fn independent_scales_exactly_with_horizon() {
        let model = RewardModel::ExpQuadratic { k: 2 };
        let mu = [0.4, 0.6];
        let at = |t: u64| independent_bound(&model, &mu, 9, t).unwrap().value;
        assert_eq!(at(4000), 2.0 * at(1000));
    }

    #[test]
    fn independent_rejects_small_budgets() {
        let model = RewardModel::Linear { k: 2 };
        assert!(matches!(
            independent_bound(&model, &[0.5, 0.5], 5, 100),
            Err(BoundError::TooFewArms { needed: 6, got: 5 })
        ));
        assert!(matches!(
            independent_bound(&model, &[0.5, 0.5], 10, 0),
            Err(BoundError::BadHorizon)
        ));
    }

    #[test]
    fn copy_scaling_is_exact() {
        let model = RewardModel::Linear { k: 2 };
        let dep = dependent_bound(&model, &[0.5, 0.5], 10, 0.01).unwrap();
        let indep = independent_bound(&model, &[0.5, 0.5], 10, 10_000).unwrap();
        assert_eq!(sum_copies_bound(&dep, 1).unwrap(), dep);
        let dep3 = sum_copies_bound(&dep, 3).unwrap();
        assert_eq!(dep3.value, dep.value * 9.0);
        assert_eq!(dep3.copies, 3);
        let indep3 = sum_copies_bound(&indep, 3).unwrap();
        assert_eq!(indep3.value, indep.value * 3.0);
        assert!(matches!(sum_copies_bound(&dep, 0), Err(BoundError::BadCopies)));
    }

    #[test]
    fn reports_serialize_round_trip() {
        let model = RewardModel::Linear { k: 2 };
        let report = dependent_bound(&model, &[0.5, 0.5], 10, 0.01).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("\"kind\":\"dependent\""));
        let parsed: BoundReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn scan_matches_closed_form_maxima() {
        // For uniform means the per-arm modified measure has the closed form
        // 4·n·p₀³·(1−p₀)·e^{−2n·p₀²}; the grid maxima below were computed
        // independently from that expression on the same thousandths grid.
        let table = exp_quadratic_scan(&[1, 4, 16, 64], &thousandths_grid()).unwrap();
        let expected = [
            (1, 0.605, 0.16826660619302272),
            (4, 0.385, 0.17155006633132686),
            (16, 0.207, 0.11425454930505796),
            (64, 0.106, 0.06469776552936556),
        ];
        for (row, (n, p0, value)) in table.rows.iter().zip(expected) {
            assert_eq!(row.n, n);
            assert_close(row.best_p0, p0, 1e-12);
            assert_close(row.value, value, 1e-9 * value);
        }
        assert_close(table.slope, -0.2361630685597706, 1e-9);
    }

    #[test]
    fn scan_tail_slope_approaches_square_root_decay() {
        // Over larger block sizes the decay settles toward the asymptotic
        // −1/2 rate; the head of the range (n ≤ 4) is dominated by the
        // (1−p₀) factor and sits far above it.
        let grid = thousandths_grid();
        let tail = exp_quadratic_scan(&[32, 64, 128], &grid).unwrap();
        assert_close(tail.slope, -0.4391813342417907, 1e-9);
        assert!(tail.slope < -0.4 && tail.slope > -0.55);
    }

    #[test]
    fn scan_rejects_bad_inputs() {
        assert!(matches!(exp_quadratic_scan(&[], &[0.5]), Err(BoundError::EmptyScan)));
        assert!(matches!(exp_quadratic_scan(&[2], &[]), Err(BoundError::EmptyScan)));
        assert!(matches!(exp_quadratic_scan(&[0], &[0.5]), Err(BoundError::EmptyScan)));
        assert!(matches!(
            exp_quadratic_scan(&[2], &[1.5]),
            Err(BoundError::BadGridPoint(_))
        ));
        assert!(matches!(
            exp_quadratic_scan(&[2, 2], &[0.5]),
            Err(BoundError::DegenerateSlope)
        ));
        // Degenerate endpoints are tolerated and lose to interior points.
        let table = exp_quadratic_scan(&[1, 2], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(table.rows[0].best_p0, 0.5);
    }
}
