//! Reward models over Bernoulli arm means.
//!
//! A model maps a mean vector `mu ∈ [0,1]^K` to an expected reward and
//! exposes an analytic gradient plus a finite-difference fallback used to
//! cross-check it. Inputs are validated strictly: wrong dimension or
//! out-of-range coordinates are errors, never clamped.

use thiserror::Error;

/// Step used by [`RewardModel::finite_diff_gradient`] when a coordinate is too
/// close to 0 or 1 for a central difference and a one-sided O(h) difference is
/// taken instead.
pub const BOUNDARY_DIFF_STEP: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {index} is {value}, outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("unknown reward model `{0}`")]
    UnknownModel(String),
    #[error("copies must be at least 1")]
    ZeroCopies,
    #[error("action size must be at least 1")]
    EmptyAction,
    #[error("finite-difference step must be positive and below 1/2, got {0}")]
    BadStep(f64),
}

/// Expected-reward model `r(mu)` with an analytic gradient.
///
/// All built-in models are monotone (nonnegative gradient). `Linear`,
/// `PmcItem` and `ExpQuadratic` are also fully symmetric in their
/// coordinates; `PowerGradient` and `SumOfCopies` are not, which matters for
/// the smoothness measures (see [`crate::smoothness`]) and disqualifies them
/// from instance construction.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    /// Sum of the means.
    Linear { k: usize },
    /// Probability that at least one arm fires: `1 − ∏(1−mu_i)`.
    PmcItem { k: usize },
    /// Saturating quadratic: `1 − exp(−Σ mu_i²)`.
    ExpQuadratic { k: usize },
    /// Weighted sum with fixed weights `2^(K−i)`, `i = 1..K`. The gradient is
    /// constant in `mu` but differs per coordinate, so the model is not
    /// symmetric under permutations.
    PowerGradient { k: usize },
    /// `copies` independent copies of `base`, evaluated block-wise on a
    /// stacked mean vector of length `copies · base.action_size()`.
    SumOfCopies { base: Box<RewardModel>, copies: usize },
}

impl RewardModel {
    /// Looks a model up by its CLI name: `linear`, `pmc-item`,
    /// `exp-quadratic` or `power-gradient`.
    pub fn by_name(name: &str, k: usize) -> Result<Self, RewardError> {
        if k == 0 {
            return Err(RewardError::EmptyAction);
        }
        match name {
            "linear" => Ok(RewardModel::Linear { k }),
            "pmc-item" => Ok(RewardModel::PmcItem { k }),
            "exp-quadratic" => Ok(RewardModel::ExpQuadratic { k }),
            "power-gradient" => Ok(RewardModel::PowerGradient { k }),
            other => Err(RewardError::UnknownModel(other.to_string())),
        }
    }

    /// Wraps the model in [`RewardModel::SumOfCopies`]; `copies == 1` returns
    /// the model unchanged.
    pub fn with_copies(self, copies: usize) -> Result<Self, RewardError> {
        match copies {
            0 => Err(RewardError::ZeroCopies),
            1 => Ok(self),
            _ => Ok(RewardModel::SumOfCopies { base: Box::new(self), copies }),
        }
    }

    /// Number of coordinates the model expects.
    pub fn action_size(&self) -> usize {
        match self {
            RewardModel::Linear { k }
            | RewardModel::PmcItem { k }
            | RewardModel::ExpQuadratic { k }
            | RewardModel::PowerGradient { k } => *k,
            RewardModel::SumOfCopies { base, copies } => base.action_size() * copies,
        }
    }

    /// Whether the reward is nondecreasing in every coordinate.
    pub fn monotone(&self) -> bool {
        match self {
            RewardModel::SumOfCopies { base, .. } => base.monotone(),
            _ => true,
        }
    }

    /// Whether the reward is invariant under permutations of its coordinates
    /// (with the gradient permuting along). The smoothness measures verify a
    /// cross-evaluation identity only for symmetric models.
    pub fn symmetric(&self) -> bool {
        match self {
            RewardModel::Linear { .. }
            | RewardModel::PmcItem { .. }
            | RewardModel::ExpQuadratic { .. } => true,
            RewardModel::PowerGradient { .. } => false,
            RewardModel::SumOfCopies { base, copies } => *copies == 1 && base.symmetric(),
        }
    }

    /// Display / serialization name.
    pub fn name(&self) -> String {
        match self {
            RewardModel::Linear { .. } => "linear".to_string(),
            RewardModel::PmcItem { .. } => "pmc-item".to_string(),
            RewardModel::ExpQuadratic { .. } => "exp-quadratic".to_string(),
            RewardModel::PowerGradient { .. } => "power-gradient".to_string(),
            RewardModel::SumOfCopies { base, copies } => format!("{}*{}", base.name(), copies),
        }
    }

    fn validate(&self, mu: &[f64]) -> Result<(), RewardError> {
        let k = self.action_size();
        if mu.len() != k {
            return Err(RewardError::DimensionMismatch { expected: k, got: mu.len() });
        }
        for (index, &value) in mu.iter().enumerate() {
            // NaN fails this test too.
            if !(0.0..=1.0).contains(&value) {
                return Err(RewardError::OutOfRange { index, value });
            }
        }
        Ok(())
    }

    /// Expected reward at `mu`.
    pub fn evaluate(&self, mu: &[f64]) -> Result<f64, RewardError> {
        self.validate(mu)?;
        Ok(self.evaluate_unchecked(mu))
    }

    fn evaluate_unchecked(&self, mu: &[f64]) -> f64 {
        match self {
            RewardModel::Linear { .. } => mu.iter().sum(),
            RewardModel::PmcItem { .. } => 1.0 - mu.iter().map(|m| 1.0 - m).product::<f64>(),
            RewardModel::ExpQuadratic { .. } => {
                1.0 - (-mu.iter().map(|m| m * m).sum::<f64>()).exp()
            }
            RewardModel::PowerGradient { k } => power_weights(*k)
                .zip(mu.iter())
                .map(|(w, m)| w * m)
                .sum(),
            RewardModel::SumOfCopies { base, .. } => {
                let bk = base.action_size();
                mu.chunks(bk).map(|block| base.evaluate_unchecked(block)).sum()
            }
        }
    }

    /// Analytic gradient `∇r(mu)`.
    pub fn gradient(&self, mu: &[f64]) -> Result<Vec<f64>, RewardError> {
        self.validate(mu)?;
        Ok(self.gradient_unchecked(mu))
    }

    fn gradient_unchecked(&self, mu: &[f64]) -> Vec<f64> {
        match self {
            RewardModel::Linear { k } => vec![1.0; *k],
            RewardModel::PmcItem { k } => {
                // ∂r/∂mu_i = ∏_{j≠i}(1−mu_j), via prefix/suffix products so
                // coordinates at exactly 1 need no division.
                let q: Vec<f64> = mu.iter().map(|m| 1.0 - m).collect();
                let mut prefix = vec![1.0; *k + 1];
                for i in 0..*k {
                    prefix[i + 1] = prefix[i] * q[i];
                }
                let mut suffix = vec![1.0; *k + 1];
                for i in (0..*k).rev() {
                    suffix[i] = suffix[i + 1] * q[i];
                }
                (0..*k).map(|i| prefix[i] * suffix[i + 1]).collect()
            }
            RewardModel::ExpQuadratic { .. } => {
                let e = (-mu.iter().map(|m| m * m).sum::<f64>()).exp();
                mu.iter().map(|m| 2.0 * m * e).collect()
            }
            RewardModel::PowerGradient { k } => power_weights(*k).collect(),
            RewardModel::SumOfCopies { base, .. } => {
                let bk = base.action_size();
                mu.chunks(bk)
                    .flat_map(|block| base.gradient_unchecked(block))
                    .collect()
            }
        }
    }

    /// Finite-difference gradient: central O(h²) where `mu_i ± h` stays in
    /// `[0,1]`, one-sided O(h) with step [`BOUNDARY_DIFF_STEP`] otherwise.
    pub fn finite_diff_gradient(&self, mu: &[f64], h: f64) -> Result<Vec<f64>, RewardError> {
        self.validate(mu)?;
        if !(h > 0.0 && h < 0.5) {
            return Err(RewardError::BadStep(h));
        }
        let mut point = mu.to_vec();
        let mut grad = Vec::with_capacity(mu.len());
        for i in 0..mu.len() {
            let x = mu[i];
            let d = if x + h <= 1.0 && x - h >= 0.0 {
                point[i] = x + h;
                let up = self.evaluate_unchecked(&point);
                point[i] = x - h;
                let down = self.evaluate_unchecked(&point);
                (up - down) / (2.0 * h)
            } else if x + BOUNDARY_DIFF_STEP <= 1.0 {
                point[i] = x + BOUNDARY_DIFF_STEP;
                let up = self.evaluate_unchecked(&point);
                (up - self.evaluate_unchecked_at(mu)) / BOUNDARY_DIFF_STEP
            } else {
                point[i] = x - BOUNDARY_DIFF_STEP;
                let down = self.evaluate_unchecked(&point);
                (self.evaluate_unchecked_at(mu) - down) / BOUNDARY_DIFF_STEP
            };
            point[i] = x;
            grad.push(d);
        }
        Ok(grad)
    }

    fn evaluate_unchecked_at(&self, mu: &[f64]) -> f64 {
        self.evaluate_unchecked(mu)
    }
}

fn power_weights(k: usize) -> impl Iterator<Item = f64> {
    (1..=k).map(move |i| 2f64.powi((k - i) as i32))
}
