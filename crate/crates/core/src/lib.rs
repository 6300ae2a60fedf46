//! Trust-adaptive action recommendation for a human-robot reconnaissance team.
//!
//! The robot recommends whether the human should deploy an armored robot at
//! each search site. It tracks the human's trust with Beta dynamics, learns the
//! human's health/time preference with a discretized Bayesian posterior, and
//! plans recommendations by backward induction over a trust-aware MDP.
//!
//! Modules, bottom-up:
//! - [`domain`]: sites, missions, the two-term reward.
//! - [`trust`]: Beta trust state, performance bit, parameter fitting.
//! - [`behavior`]: the bounded-rationality disuse model of human choice.
//! - [`irl`]: posterior over the human health weight.
//! - [`planner`]: strategies, value iteration, and the robot agent.
//! - [`sim`]: simulated humans, sessions, experiments, statistics.

pub mod behavior;
pub mod domain;
mod error;
pub mod irl;
pub mod planner;
pub mod seed;
pub mod sim;
pub mod trust;

pub use behavior::{ChoiceProbs, FollowProbs};
pub use domain::{Action, Costs, Mission, MissionConfig, MissionState, RewardWeights, SiteScenario};
pub use error::{Error, Result};
pub use irl::WeightBelief;
pub use planner::{AgentConfig, Horizon, RobotAgent, StrategyConfig, StrategyKind, TrustFitMode};
pub use sim::{InteractionRecord, SessionMetrics, SimulatedHuman};
pub use trust::{TrustParams, TrustState};
