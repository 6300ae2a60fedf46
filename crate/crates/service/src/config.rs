use std::path::Path;

use serde::{Deserialize, Serialize};
use trustkit::behavior::Kappa;
use trustkit::domain::{MissionConfig, DEFAULT_BASE_SEARCH_TIME};
use trustkit::planner::{AgentConfig, Horizon, StrategyConfig, StrategyKind, TrustFitMode};
use trustkit::trust::{FitConfig, TrustParams};
use trustkit::{Error, RewardWeights};

/// Engine and mission settings shared by every session the server creates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub mission: MissionConfig,
    pub base_search_time: f64,
    pub robot_weights: RewardWeights,
    pub horizon: Horizon,
    pub kappa_assumed: Kappa,
    pub trust_params: TrustParams,
    pub fit_mode: TrustFitMode,
    pub fit: FitConfig,
    pub belief_points: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let agent = AgentConfig::new(StrategyConfig::new(StrategyKind::AdaptiveLearner));
        Self {
            mission: MissionConfig::default(),
            base_search_time: DEFAULT_BASE_SEARCH_TIME,
            robot_weights: agent.strategy.robot_weights,
            horizon: agent.strategy.horizon,
            kappa_assumed: agent.strategy.kappa_assumed,
            trust_params: agent.trust_params,
            fit_mode: agent.fit_mode,
            fit: agent.fit,
            belief_points: agent.belief_points,
        }
    }
}

impl ServiceConfig {
    pub fn from_json(s: &str) -> trustkit::Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> trustkit::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> trustkit::Result<()> {
        if !(self.base_search_time.is_finite() && self.base_search_time >= 0.0) {
            return Err(Error::Config("base_search_time must be finite and non-negative".into()));
        }
        if self.mission.n_sites == 0 {
            return Err(Error::Config("mission.n_sites must be at least 1".into()));
        }
        self.agent_config(StrategyKind::AdaptiveLearner).validate()
    }

    pub fn agent_config(&self, kind: StrategyKind) -> AgentConfig {
        AgentConfig {
            strategy: StrategyConfig {
                kind,
                robot_weights: self.robot_weights,
                horizon: self.horizon,
                kappa_assumed: self.kappa_assumed,
            },
            trust_params: self.trust_params,
            fit_mode: self.fit_mode,
            fit: self.fit,
            belief_points: self.belief_points,
            pinned_health_weight: None,
        }
    }
}
