//! Interaction strategies and recommendation planning.
//!
//! All three strategies solve the same trust-aware MDP. They differ only in
//! which reward weights play which role:
//!
//! | strategy               | estimation weights | optimization weights |
//! |------------------------|--------------------|----------------------|
//! | `non_learner`          | robot's own        | robot's own          |
//! | `non_adaptive_learner` | learned estimate   | robot's own          |
//! | `adaptive_learner`     | learned estimate   | learned estimate     |
//!
//! Estimation weights drive performance assessment and the predicted human
//! choice; optimization weights define the reward being maximized.

mod agent;
mod value_iteration;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use agent::{AgentConfig, Assessment, EngineStep, RobotAgent, TrustFitMode};
pub use value_iteration::{value_iteration, LookaheadSite, PlannerState, QValues};

use crate::behavior::Kappa;
use crate::domain::{Action, Mission, RewardWeights};
use crate::error::{Error, Result};
use crate::irl::{point_estimate, WeightBelief};
use crate::trust::{TrustParams, TrustState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    NonLearner,
    NonAdaptiveLearner,
    AdaptiveLearner,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] =
        [StrategyKind::NonLearner, StrategyKind::NonAdaptiveLearner, StrategyKind::AdaptiveLearner];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::NonLearner => "non_learner",
            StrategyKind::NonAdaptiveLearner => "non_adaptive_learner",
            StrategyKind::AdaptiveLearner => "adaptive_learner",
        }
    }

    pub fn learns(self) -> bool {
        !matches!(self, StrategyKind::NonLearner)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "non_learner" | "nonlearner" => Ok(StrategyKind::NonLearner),
            "non_adaptive_learner" | "non_adaptive" | "nonadaptive" => Ok(StrategyKind::NonAdaptiveLearner),
            "adaptive_learner" | "adaptive" => Ok(StrategyKind::AdaptiveLearner),
            _ => Err(Error::InvalidArgument(format!(
                "unknown strategy {s:?}; valid strategies: non_learner, non_adaptive_learner, adaptive_learner"
            ))),
        }
    }
}

/// How many sites the planner looks ahead, including the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "HorizonRepr", into = "HorizonRepr")]
pub enum Horizon {
    /// Every site left in the mission.
    #[default]
    Remaining,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HorizonRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<HorizonRepr> for Horizon {
    type Error = Error;

    fn try_from(r: HorizonRepr) -> Result<Self> {
        match r {
            HorizonRepr::Count(0) => Err(Error::Config("horizon must be at least 1".into())),
            HorizonRepr::Count(n) => Ok(Horizon::Fixed(n)),
            HorizonRepr::Word(w) if w == "remaining" => Ok(Horizon::Remaining),
            HorizonRepr::Word(w) => Err(Error::Config(format!("horizon must be a count or \"remaining\", got {w:?}"))),
        }
    }
}

impl From<Horizon> for HorizonRepr {
    fn from(h: Horizon) -> Self {
        match h {
            Horizon::Remaining => HorizonRepr::Word("remaining".into()),
            Horizon::Fixed(n) => HorizonRepr::Count(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub robot_weights: RewardWeights,
    #[serde(default)]
    pub horizon: Horizon,
    /// Rationality coefficient the robot attributes to the human.
    #[serde(default)]
    pub kappa_assumed: Kappa,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self { kind, robot_weights: RewardWeights::balanced(), horizon: Horizon::Remaining, kappa_assumed: Kappa::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == Horizon::Fixed(0) {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }

    /// Weight roles under the current belief.
    pub fn roles(&self, belief: &WeightBelief) -> WeightRoles {
        match self.kind {
            StrategyKind::NonLearner => WeightRoles { estimation: self.robot_weights, optimization: self.robot_weights },
            StrategyKind::NonAdaptiveLearner => {
                WeightRoles { estimation: point_estimate(belief), optimization: self.robot_weights }
            }
            StrategyKind::AdaptiveLearner => {
                let learned = point_estimate(belief);
                WeightRoles { estimation: learned, optimization: learned }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRoles {
    /// Used for performance assessment and for predicting the human's choice.
    pub estimation: RewardWeights,
    /// The reward the planner maximizes.
    pub optimization: RewardWeights,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recommendation {
    pub action: Action,
    pub q: [f64; 2],
}

/// Sites the planner sees from `site_index`: the drone report for the current
/// site, the robot's prior for the rest.
pub fn lookahead_sites(mission: &Mission, site_index: usize, horizon: Horizon) -> Vec<LookaheadSite> {
    let remaining = mission.n_sites().saturating_sub(site_index);
    let len = match horizon {
        Horizon::Remaining => remaining,
        Horizon::Fixed(h) => h.min(remaining),
    };
    mission.sites[site_index..site_index + len]
        .iter()
        .enumerate()
        .map(|(j, s)| LookaheadSite { threat_prob: if j == 0 { s.drone_report } else { s.prior_threat }, costs: s.costs() })
        .collect()
}

/// Picks the action with the higher Q-value; exact ties go to `NoRobot`.
pub fn argmax_action(q: [f64; 2]) -> Action {
    if q[1] > q[0] {
        Action::UseRobot
    } else {
        Action::NoRobot
    }
}

pub fn recommend(
    strategy: &StrategyConfig,
    mission: &Mission,
    site_index: usize,
    trust_state: &TrustState,
    trust_params: &TrustParams,
    belief: &WeightBelief,
) -> Result<Recommendation> {
    if site_index >= mission.n_sites() {
        return Err(Error::InvalidArgument(format!("site {site_index} is past the end of the mission")));
    }
    let sites = lookahead_sites(mission, site_index, strategy.horizon);
    let roles = strategy.roles(belief);
    let start = PlannerState { completed: trust_state.interactions() as usize, successes: trust_state.successes as usize };
    let q = value_iteration(&roles, trust_params, strategy.kappa_assumed, start, &sites)?;
    Ok(Recommendation { action: argmax_action(q.q), q: q.q })
}
