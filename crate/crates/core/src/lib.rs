//! Worst-case instance construction and regret lower bounds for stochastic
//! combinatorial semi-bandits with Bernoulli arms.
//!
//! The library revolves around a family of smoothness measures of a reward
//! function around a mean vector (the Gini-weighted measures in
//! [`smoothness`]), which control how fast regret must grow on hard problem
//! instances. On top of them sit:
//!
//! * [`rewards`] — the reward models (linear, probabilistic max coverage,
//!   saturating exp-quadratic, weighted-linear) with analytic gradients;
//! * [`instance`] — construction of coupled "staircase" arm distributions
//!   whose suboptimality gap and KL divergence can be traded off optimally,
//!   packaged as ready-to-simulate problem instances;
//! * [`bounds`] — problem-dependent and problem-independent regret lower
//!   bounds evaluated on concrete inputs;
//! * [`sim`] — semi-bandit strategies (round-robin, epsilon-greedy, CUCB,
//!   Bernstein-CUCB, oracle) run against constructed instances;
//! * [`verify`] — deterministic numeric verification suites for every
//!   inequality and identity the other modules rely on.
//!
//! All math is in `f64`. Every randomized routine takes an explicit seed and
//! uses counter-based RNG streams, so results are reproducible bit-for-bit,
//! serially or in parallel.

pub mod bounds;
pub mod instance;
pub mod rewards;
pub mod rng;
pub mod sim;
pub mod smoothness;
pub mod verify;

/// Version stamp carried by every serialized report and instance file.
pub const SCHEMA_VERSION: u32 = 1;
