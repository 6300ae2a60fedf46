use serde::{Deserialize, Serialize};

use crate::domain::{Action, Mission, SiteScenario};
use crate::error::{Error, Result};
use crate::irl::{point_estimate, uniform_prior, update_belief, SiteContext, WeightBelief, DEFAULT_GRID_POINTS};
use crate::planner::{recommend, Recommendation, StrategyConfig};
use crate::trust::{
    fit_trust_params, mean_trust, performance, update_trust, FeedbackPoint, FitConfig, TrustParams, TrustState,
};

/// Whether the robot's trust parameters stay fixed or are refit after each feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustFitMode {
    #[default]
    Fixed,
    Online,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub strategy: StrategyConfig,
    /// Robot's model of the human's trust dynamics (initial values when fitting online).
    #[serde(default)]
    pub trust_params: TrustParams,
    #[serde(default)]
    pub fit_mode: TrustFitMode,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default = "default_grid_points")]
    pub belief_points: usize,
    /// Pins the belief at this health weight and disables learning.
    #[serde(default)]
    pub pinned_health_weight: Option<f64>,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl AgentConfig {
    pub fn new(strategy: StrategyConfig) -> Self {
        Self {
            strategy,
            trust_params: TrustParams::default(),
            fit_mode: TrustFitMode::Fixed,
            fit: FitConfig::default(),
            belief_points: DEFAULT_GRID_POINTS,
            pinned_health_weight: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        self.trust_params.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.belief_points < 2 {
            return Err(Error::Config("belief_points must be at least 2".into()));
        }
        if let Some(w) = self.pinned_health_weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Config(format!("pinned health weight {w} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Result of assessing one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub performance: bool,
    pub trust_state: TrustState,
    pub belief_mean: f64,
}

/// Engine state after a site, as logged for replay checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineStep {
    pub performance: bool,
    pub alpha: f64,
    pub beta: f64,
    pub belief_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Pending {
    site: usize,
    performance: bool,
}

/// The recommender robot's per-session engine.
///
/// Each site goes `recommend` → [`RobotAgent::assess`] → [`RobotAgent::commit_feedback`].
/// Assessment updates the belief from the observed action using the trust
/// estimate from before the site; the trust state moves only once the
/// feedback step commits the performance bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotAgent {
    config: AgentConfig,
    trust_params: TrustParams,
    trust_state: TrustState,
    belief: WeightBelief,
    history: Vec<FeedbackPoint>,
    pending: Option<Pending>,
    sites_done: usize,
}

impl RobotAgent {
    pub fn new(config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let belief = match config.pinned_health_weight {
            Some(w) => WeightBelief::point_mass(w)?,
            None => uniform_prior(config.belief_points)?,
        };
        let trust_params = config.trust_params;
        Ok(Self {
            trust_state: TrustState::initial(&trust_params),
            trust_params,
            belief,
            history: Vec::new(),
            pending: None,
            sites_done: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn trust_state(&self) -> &TrustState {
        &self.trust_state
    }

    pub fn trust_params(&self) -> &TrustParams {
        &self.trust_params
    }

    pub fn belief(&self) -> &WeightBelief {
        &self.belief
    }

    pub fn sites_done(&self) -> usize {
        self.sites_done
    }

    pub fn awaiting_feedback(&self) -> bool {
        self.pending.is_some()
    }

    pub fn mean_trust(&self) -> f64 {
        mean_trust(&self.trust_state)
    }

    pub fn recommend(&self, mission: &Mission, site_index: usize) -> Result<Recommendation> {
        if self.pending.is_some() || site_index != self.sites_done {
            return Err(Error::State(format!(
                "cannot recommend for site {site_index}; engine is at site {}",
                self.sites_done
            )));
        }
        recommend(&self.config.strategy, mission, site_index, &self.trust_state, &self.trust_params, &self.belief)
    }

    fn learning(&self) -> bool {
        self.config.strategy.kind.learns() && self.config.pinned_health_weight.is_none()
    }

    /// Scores the recommendation and updates the belief from the human's action.
    pub fn assess(&mut self, site: &SiteScenario, recommendation: Action, human_action: Action) -> Result<bool> {
        if self.pending.is_some() || site.index < self.sites_done {
            return Err(Error::State(format!("site {} has already been assessed", site.index)));
        }
        if site.index > self.sites_done {
            return Err(Error::State(format!("site {} assessed before site {}", site.index, self.sites_done)));
        }
        let roles = self.config.strategy.roles(&self.belief);
        let perf = performance(&roles.estimation, site, recommendation);
        if self.learning() {
            let ctx = SiteContext {
                threat_prob: site.drone_report,
                costs: site.costs(),
                kappa: self.config.strategy.kappa_assumed,
            };
            self.belief = update_belief(&self.belief, human_action, recommendation, self.mean_trust(), &ctx);
        }
        self.pending = Some(Pending { site: site.index, performance: perf });
        Ok(perf)
    }

    /// Applies the pending performance bit to the trust state and, in online
    /// mode, refits the trust parameters to all feedback so far.
    pub fn commit_feedback(&mut self, feedback: Option<f64>) -> Result<Assessment> {
        let pending = self.pending.take().ok_or_else(|| Error::State("no assessed site awaiting feedback".into()))?;
        self.trust_state = update_trust(&self.trust_state, &self.trust_params, pending.performance);
        if let Some(f) = feedback {
            if !(0.0..=1.0).contains(&f) {
                self.pending = Some(pending);
                return Err(Error::InvalidArgument(format!("trust feedback {f} outside [0, 1]")));
            }
            self.history.push(FeedbackPoint { performance: pending.performance, feedback: f });
            if self.config.fit_mode == TrustFitMode::Online {
                self.trust_params = fit_trust_params(&self.history, &self.trust_params, &self.config.fit)?;
                self.trust_state = self.trust_state.rebase(&self.trust_params);
            }
        }
        self.sites_done = pending.site + 1;
        Ok(Assessment { performance: pending.performance, trust_state: self.trust_state, belief_mean: self.belief.mean() })
    }

    /// `assess` followed by `commit_feedback`.
    pub fn assess_and_update(
        &mut self,
        site: &SiteScenario,
        recommendation: Action,
        human_action: Action,
        feedback: Option<f64>,
    ) -> Result<Assessment> {
        self.assess(site, recommendation, human_action)?;
        self.commit_feedback(feedback)
    }

    pub fn estimated_weights(&self) -> crate::domain::RewardWeights {
        point_estimate(&self.belief)
    }
}

impl Assessment {
    pub fn engine_step(&self) -> EngineStep {
        EngineStep {
            performance: self.performance,
            alpha: self.trust_state.alpha,
            beta: self.trust_state.beta,
            belief_mean: self.belief_mean,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate_mission, MissionConfig};
    use crate::planner::StrategyKind;

    fn agent(kind: StrategyKind) -> RobotAgent {
        RobotAgent::new(AgentConfig::new(StrategyConfig::new(kind))).unwrap()
    }

    #[test]
    fn non_learner_never_updates_belief() {
        let m = generate_mission(1, &MissionConfig { n_sites: 5, ..Default::default() }).unwrap();
        let mut a = agent(StrategyKind::NonLearner);
        let prior = a.belief().clone();
        for site in &m.sites {
            let rec = a.recommend(&m, site.index).unwrap().action;
            a.assess_and_update(site, rec, rec.other(), Some(0.4)).unwrap();
            assert_eq!(a.belief(), &prior);
        }
        assert_eq!(a.trust_state().interactions(), 5);
    }

    #[test]
    fn double_assessment_is_state_error() {
        let m = generate_mission(1, &MissionConfig { n_sites: 3, ..Default::default() }).unwrap();
        let mut a = agent(StrategyKind::AdaptiveLearner);
        a.assess(&m.sites[0], Action::NoRobot, Action::NoRobot).unwrap();
        assert!(matches!(a.assess(&m.sites[0], Action::NoRobot, Action::NoRobot), Err(Error::State(_))));
        a.commit_feedback(Some(0.5)).unwrap();
        assert!(matches!(a.assess(&m.sites[0], Action::NoRobot, Action::NoRobot), Err(Error::State(_))));
        assert!(matches!(a.commit_feedback(None), Err(Error::State(_))));
        assert!(matches!(a.assess(&m.sites[2], Action::NoRobot, Action::NoRobot), Err(Error::State(_))));
    }

    #[test]
    fn online_fit_changes_params_and_keeps_counts() {
        let m = generate_mission(2, &MissionConfig { n_sites: 6, ..Default::default() }).unwrap();
        let mut cfg = AgentConfig::new(StrategyConfig::new(StrategyKind::AdaptiveLearner));
        cfg.fit_mode = TrustFitMode::Online;
        let mut a = RobotAgent::new(cfg).unwrap();
        for site in &m.sites {
            let rec = a.recommend(&m, site.index).unwrap().action;
            a.assess_and_update(site, rec, rec, Some(0.9)).unwrap();
        }
        assert_ne!(a.trust_params(), &TrustParams::default());
        let s = a.trust_state();
        let p = a.trust_params();
        assert_eq!(s.alpha, p.alpha0 + p.ws * f64::from(s.successes));
        assert!(a.mean_trust() > 0.5);
    }

    #[test]
    fn pinned_belief_is_fixed() {
        let m = generate_mission(3, &MissionConfig { n_sites: 4, ..Default::default() }).unwrap();
        let mut cfg = AgentConfig::new(StrategyConfig::new(StrategyKind::AdaptiveLearner));
        cfg.pinned_health_weight = Some(0.5);
        let mut a = RobotAgent::new(cfg).unwrap();
        for site in &m.sites {
            let rec = a.recommend(&m, site.index).unwrap().action;
            let out = a.assess_and_update(site, rec, rec.other(), Some(0.2)).unwrap();
            assert_eq!(out.belief_mean, 0.5);
        }
    }

    #[test]
    fn recommend_out_of_turn_is_state_error() {
        let m = generate_mission(3, &MissionConfig { n_sites: 4, ..Default::default() }).unwrap();
        let mut a = agent(StrategyKind::NonLearner);
        assert!(a.recommend(&m, 1).is_err());
        a.assess(&m.sites[0], Action::NoRobot, Action::NoRobot).unwrap();
        assert!(a.recommend(&m, 1).is_err());
    }
}
