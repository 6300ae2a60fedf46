//! Bayesian inverse reinforcement learning over the human's health weight.
//!
//! The belief is a discrete distribution on a grid in `[0, 1]`. Each observed
//! human action reweights the grid by its likelihood under the disuse model,
//! evaluated with weights `(w, 1 - w)`.

use serde::{Deserialize, Serialize};

use crate::behavior::{bounded_rationality_probs, likelihood, Kappa};
use crate::domain::{Action, Costs, RewardWeights};
use crate::error::{Error, Result};

/// Below this total unnormalized mass an update is skipped.
pub const UNDERFLOW_GUARD: f64 = 1e-300;
pub const DEFAULT_GRID_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBelief {
    grid: Vec<f64>,
    mass: Vec<f64>,
}

/// What the robot knew about a site when the human acted there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteContext {
    pub threat_prob: f64,
    pub costs: Costs,
    /// Rationality the robot attributes to the human.
    pub kappa: Kappa,
}

impl WeightBelief {
    pub fn new(grid: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != mass.len() {
            return Err(Error::InvalidArgument("grid and mass must be non-empty and equal length".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) || grid.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidArgument("grid must be strictly increasing within [0, 1]".into()));
        }
        let total: f64 = mass.iter().sum();
        if mass.iter().any(|m| m.is_nan() || *m < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("mass must be non-negative and sum to 1".into()));
        }
        Ok(Self { grid, mass })
    }

    /// All mass on a single weight.
    pub fn point_mass(weight: f64) -> Result<Self> {
        Self::new(vec![weight], vec![1.0])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.mass).map(|(g, m)| g * m).sum()
    }
}

/// Uniform belief on the midpoints of `n_points` equal bins of `[0, 1]`.
pub fn uniform_prior(n_points: usize) -> Result<WeightBelief> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("uniform prior needs at least 2 points, got {n_points}")));
    }
    let n = n_points as f64;
    let grid = (0..n_points).map(|i| (i as f64 + 0.5) / n).collect();
    Ok(WeightBelief { grid, mass: vec![1.0 / n; n_points] })
}

pub fn update_belief(
    belief: &WeightBelief,
    observed: Action,
    recommendation: Action,
    trust: f64,
    site: &SiteContext,
) -> WeightBelief {
    let likelihoods: Vec<f64> = belief
        .grid
        .iter()
        .map(|&w| {
            let weights = RewardWeights::from_health(w).expect("grid lies in [0, 1]");
            let q = bounded_rationality_probs(&weights, site.threat_prob, site.costs, site.kappa);
            likelihood(observed, recommendation, trust, &q)
        })
        .collect();
    // A likelihood that is constant in w carries no information; skip the
    // renormalization so the belief stays bit-identical.
    if likelihoods.iter().all(|l| *l == likelihoods[0]) {
        return belief.clone();
    }
    let unnormalized: Vec<f64> = likelihoods.iter().zip(&belief.mass).map(|(l, m)| l * m).collect();
    let total: f64 = unnormalized.iter().sum();
    if total.is_nan() || total < UNDERFLOW_GUARD {
        return belief.clone();
    }
    WeightBelief { grid: belief.grid.clone(), mass: unnormalized.into_iter().map(|m| m / total).collect() }
}

/// Posterior-mean estimate of the human's weights.
pub fn point_estimate(belief: &WeightBelief) -> RewardWeights {
    let health = belief.mean().clamp(0.0, 1.0);
    RewardWeights::from_health(health).expect("clamped to [0, 1]")
}
