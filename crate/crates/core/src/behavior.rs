//! Bounded-rationality disuse model of human choice.
//!
//! With probability equal to her trust the human follows the recommendation.
//! Otherwise she ignores it and picks an action by a softmax over expected
//! rewards, which may or may not coincide with the recommendation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{expected_reward, Action, Costs, RewardWeights};
use crate::error::{Error, Result};

/// Rationality coefficient of the softmax choice rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Kappa(f64);

impl TryFrom<f64> for Kappa {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Kappa::new(v)
    }
}

impl From<Kappa> for f64 {
    fn from(k: Kappa) -> f64 {
        k.0
    }
}

impl Kappa {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa.is_finite() && kappa >= 0.0 {
            Ok(Self(kappa))
        } else {
            Err(Error::InvalidArgument(format!("kappa must be finite and non-negative, got {kappa}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Kappa {
    fn default() -> Self {
        Self(1.0)
    }
}

/// Softmax choice probabilities `(q0, q1)` indexed by action bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceProbs {
    pub q: [f64; 2],
}

impl ChoiceProbs {
    pub fn of(&self, action: Action) -> f64 {
        self.q[action.index()]
    }
}

/// Probabilities that the human follows or defies a recommendation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowProbs {
    pub follow: f64,
    pub defy: f64,
}

/// Softmax over the two expected rewards, computed with max-shifted exponents.
pub fn softmax2(kappa: f64, r0: f64, r1: f64) -> ChoiceProbs {
    let m = r0.max(r1);
    let e0 = (kappa * (r0 - m)).exp();
    let e1 = (kappa * (r1 - m)).exp();
    let s = e0 + e1;
    ChoiceProbs { q: [e0 / s, e1 / s] }
}

pub fn bounded_rationality_probs(weights: &RewardWeights, threat_prob: f64, costs: Costs, kappa: Kappa) -> ChoiceProbs {
    let r0 = expected_reward(weights, threat_prob, Action::NoRobot, costs);
    let r1 = expected_reward(weights, threat_prob, Action::UseRobot, costs);
    softmax2(kappa.value(), r0, r1)
}

pub fn action_probabilities(recommendation: Action, trust: f64, q: &ChoiceProbs) -> FollowProbs {
    // Written through `defy` so that `follow` is exactly non-decreasing in trust
    // under floating-point rounding.
    let defy = (1.0 - trust) * q.of(recommendation.other());
    FollowProbs { follow: 1.0 - defy, defy }
}

/// Draws the human's action: the recommendation with probability `probs.follow`.
pub fn sample_action<R: Rng + ?Sized>(probs: &FollowProbs, recommendation: Action, rng: &mut R) -> Action {
    let u: f64 = rng.random();
    if u < probs.follow {
        recommendation
    } else {
        recommendation.other()
    }
}

/// Probability of the observed action under the disuse model.
pub fn likelihood(observed: Action, recommendation: Action, trust: f64, q: &ChoiceProbs) -> f64 {
    let p = action_probabilities(recommendation, trust, q);
    if observed == recommendation {
        p.follow
    } else {
        p.defy
    }
}
