//! The reconnaissance mission: sites, threats, costs and the reward shared in
//! form (but not in weights) by the human and the robot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Binary action: whether the armored robot is deployed at a site.
///
/// Serialized as the integer `0` or `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Action {
    /// Search without the armored robot (bit 0).
    NoRobot,
    /// Deploy the armored robot (bit 1).
    UseRobot,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::NoRobot, Action::UseRobot];

    pub fn bit(self) -> u8 {
        match self {
            Action::NoRobot => 0,
            Action::UseRobot => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Action::NoRobot),
            1 => Ok(Action::UseRobot),
            other => Err(Error::InvalidArgument(format!("action must be 0 or 1, got {other}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Action::NoRobot => Action::UseRobot,
            Action::UseRobot => Action::NoRobot,
        }
    }

    pub fn index(self) -> usize {
        self.bit() as usize
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.bit()
    }
}

impl TryFrom<u8> for Action {
    type Error = Error;

    fn try_from(bit: u8) -> Result<Self> {
        Action::from_bit(bit)
    }
}

/// Weights on the health and time cost terms. They always sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct RewardWeights {
    health_weight: f64,
    time_weight: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    health_weight: f64,
    time_weight: f64,
}

impl TryFrom<RawWeights> for RewardWeights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        RewardWeights::new(raw.health_weight, raw.time_weight)
    }
}

impl RewardWeights {
    pub fn new(health_weight: f64, time_weight: f64) -> Result<Self> {
        let ok = health_weight.is_finite()
            && time_weight.is_finite()
            && health_weight >= 0.0
            && time_weight >= 0.0
            && (health_weight + time_weight - 1.0).abs() <= WEIGHT_SUM_TOL;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "reward weights must be non-negative and sum to 1, got ({health_weight}, {time_weight})"
            )));
        }
        Ok(Self { health_weight, time_weight })
    }

    /// Weights `(w, 1 - w)`; the time weight is derived from the health weight.
    pub fn from_health(health_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&health_weight) {
            return Err(Error::InvalidArgument(format!(
                "health weight must lie in [0, 1], got {health_weight}"
            )));
        }
        Ok(Self { health_weight, time_weight: 1.0 - health_weight })
    }

    pub fn balanced() -> Self {
        Self { health_weight: 0.5, time_weight: 0.5 }
    }

    pub fn health(&self) -> f64 {
        self.health_weight
    }

    pub fn time(&self) -> f64 {
        self.time_weight
    }
}

/// Health points lost on injury and extra minutes spent deploying the armored robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub health: f64,
    pub time: f64,
}

impl Costs {
    pub fn new(health: f64, time: f64) -> Result<Self> {
        if !(health > 0.0 && time > 0.0 && health.is_finite() && time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "costs must be positive and finite, got health={health} time={time}"
            )));
        }
        Ok(Self { health, time })
    }
}

impl Default for Costs {
    fn default() -> Self {
        Self { health: 10.0, time: 2.0 }
    }
}

/// Reward of implementing `action` when the threat is (or is not) present.
///
/// Injury happens only when a threat is present and the armored robot was not
/// used; using the robot always costs its deployment time.
pub fn reward(weights: &RewardWeights, threat_present: bool, action: Action, costs: Costs) -> f64 {
    let health_loss = if threat_present && action == Action::NoRobot { costs.health } else { 0.0 };
    let time_loss = if action == Action::UseRobot { costs.time } else { 0.0 };
    -weights.health() * health_loss - weights.time() * time_loss
}

/// Reward averaged over `D ~ Bernoulli(threat_prob)`.
pub fn expected_reward(weights: &RewardWeights, threat_prob: f64, action: Action, costs: Costs) -> f64 {
    match action {
        Action::NoRobot => -weights.health() * threat_prob * costs.health,
        Action::UseRobot => -weights.time() * costs.time,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteScenario {
    pub index: usize,
    /// Robot's pre-mission threat estimate, hidden from the human.
    pub prior_threat: f64,
    /// Threat probability reported by the drone scan.
    pub drone_report: f64,
    pub threat_present: bool,
    pub health_cost: f64,
    pub time_cost: f64,
}

impl SiteScenario {
    pub fn costs(&self) -> Costs {
        Costs { health: self.health_cost, time: self.time_cost }
    }

    fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.prior_threat) || !unit(self.drone_report) {
            return Err(Error::Config(format!("site {}: threat probabilities must lie in [0, 1]", self.index)));
        }
        if !(self.health_cost > 0.0 && self.time_cost > 0.0) {
            return Err(Error::Config(format!("site {}: costs must be positive", self.index)));
        }
        Ok(())
    }
}

/// A mission file: the ordered list of sites plus the starting health.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub seed: u64,
    pub sites: Vec<SiteScenario>,
    pub initial_health: f64,
}

impl Mission {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() {
            return Err(Error::Config("mission has no sites".into()));
        }
        for (i, site) in self.sites.iter().enumerate() {
            if site.index != i {
                return Err(Error::Config(format!("site at position {i} has index {}", site.index)));
            }
            site.validate()?;
        }
        if self.initial_health.is_nan() || self.initial_health <= 0.0 {
            return Err(Error::Config("initial_health must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mission: Mission =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad mission file: {e}")))?;
        mission.validate()?;
        Ok(mission)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mission serializes")
    }
}

/// Distribution of drone-reported threat probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThreatDistribution {
    Uniform { low: f64, high: f64 },
    PointMass { value: f64 },
}

impl Default for ThreatDistribution {
    fn default() -> Self {
        ThreatDistribution::Uniform { low: 0.05, high: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub n_sites: usize,
    pub threat_distribution: ThreatDistribution,
    /// Standard deviation of the noise separating the robot's prior from the drone report.
    pub prior_noise_sd: f64,
    pub health_cost: f64,
    pub time_cost: f64,
    pub initial_health: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            n_sites: 40,
            threat_distribution: ThreatDistribution::default(),
            prior_noise_sd: 0.1,
            health_cost: 10.0,
            time_cost: 2.0,
            initial_health: 100.0,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::Config("n_sites must be at least 1".into()));
        }
        match self.threat_distribution {
            ThreatDistribution::Uniform { low, high } => {
                if !(0.0 <= low && low < high && high <= 1.0) {
                    return Err(Error::Config(format!("uniform threat range [{low}, {high}] invalid")));
                }
            }
            ThreatDistribution::PointMass { value } => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::Config(format!("point-mass threat {value} outside [0, 1]")));
                }
            }
        }
        if !(self.prior_noise_sd >= 0.0 && self.prior_noise_sd.is_finite()) {
            return Err(Error::Config("prior_noise_sd must be a non-negative number".into()));
        }
        Costs::new(self.health_cost, self.time_cost).map_err(|e| Error::Config(e.to_string()))?;
        if self.initial_health.is_nan() || self.initial_health <= 0.0 {
            return Err(Error::Config("initial_health must be positive".into()));
        }
        Ok(())
    }
}

/// Generates a mission deterministically from `seed`.
///
/// Drone reports are calibrated: the ground truth at each site is drawn from
/// `Bernoulli(drone_report)`. The robot's prior is the report plus Gaussian
/// noise, clamped to `[0, 1]`.
pub fn generate_mission(seed: u64, config: &MissionConfig) -> Result<Mission> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, config.prior_noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let report_dist = match config.threat_distribution {
        ThreatDistribution::Uniform { low, high } => {
            Some(Uniform::new_inclusive(low, high).map_err(|e| Error::Config(e.to_string()))?)
        }
        ThreatDistribution::PointMass { .. } => None,
    };
    let sites = (0..config.n_sites)
        .map(|index| {
            let drone_report = match (&report_dist, config.threat_distribution) {
                (Some(d), _) => d.sample(&mut rng),
                (None, ThreatDistribution::PointMass { value }) => value,
                (None, _) => unreachable!(),
            };
            let threat_present = rng.random::<f64>() < drone_report;
            let prior_threat = (drone_report + noise.sample(&mut rng)).clamp(0.0, 1.0);
            SiteScenario {
                index,
                prior_threat,
                drone_report,
                threat_present,
                health_cost: config.health_cost,
                time_cost: config.time_cost,
            }
        })
        .collect();
    Ok(Mission { seed, sites, initial_health: config.initial_health })
}

pub const DEFAULT_BASE_SEARCH_TIME: f64 = 3.0;

/// Running health and clock of a mission in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionState {
    pub health: f64,
    pub elapsed_time: f64,
    /// Number of sites already searched; the next site to search has this index.
    pub sites_completed: usize,
    pub base_search_time: f64,
}

impl MissionState {
    pub fn new(mission: &Mission, base_search_time: f64) -> Self {
        Self { health: mission.initial_health, elapsed_time: 0.0, sites_completed: 0, base_search_time }
    }

    /// Estimated search time at `site` with and without the armored robot.
    pub fn time_estimates(&self, site: &SiteScenario) -> (f64, f64) {
        (self.base_search_time + site.time_cost, self.base_search_time)
    }
}

/// What happened at one site once the human's action was implemented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub injury: bool,
    pub health_lost: f64,
    pub time_spent: f64,
}

/// Applies the human's action at `site`, which must be the next unsearched site.
///
/// Health never drops below zero; the mission continues through every site
/// regardless of health.
pub fn apply_outcome(state: &MissionState, site: &SiteScenario, human_action: Action) -> Result<(MissionState, Outcome)> {
    if site.index < state.sites_completed {
        return Err(Error::State(format!("site {} has already been searched", site.index)));
    }
    if site.index > state.sites_completed {
        return Err(Error::State(format!(
            "site {} searched out of order; next site is {}",
            site.index, state.sites_completed
        )));
    }
    let injury = site.threat_present && human_action == Action::NoRobot;
    let health_lost = if injury { site.health_cost.min(state.health) } else { 0.0 };
    let time_spent =
        state.base_search_time + if human_action == Action::UseRobot { site.time_cost } else { 0.0 };
    let next = MissionState {
        health: state.health - health_lost,
        elapsed_time: state.elapsed_time + time_spent,
        sites_completed: state.sites_completed + 1,
        base_search_time: state.base_search_time,
    };
    Ok((next, Outcome { injury, health_lost, time_spent }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(h: f64) -> RewardWeights {
        RewardWeights::from_health(h).unwrap()
    }

    const C: Costs = Costs { health: 10.0, time: 2.0 };

    #[test]
    fn reward_examples() {
        assert_eq!(reward(&w(0.5), false, Action::NoRobot, C), 0.0);
        assert_eq!(reward(&w(0.5), true, Action::NoRobot, C), -5.0);
        assert!((reward(&w(0.8), true, Action::UseRobot, C) - -0.4).abs() < 1e-12);
    }

    #[test]
    fn expected_reward_examples() {
        assert_eq!(expected_reward(&w(0.5), 0.0, Action::NoRobot, C), 0.0);
        assert!((expected_reward(&w(0.5), 0.4, Action::NoRobot, C) - -2.0).abs() < 1e-12);
        assert_eq!(expected_reward(&w(0.5), 0.4, Action::UseRobot, C), -1.0);
    }

    #[test]
    fn expected_reward_matches_enumeration_over_threat() {
        for &h in &[0.0, 0.3, 0.5, 0.9, 1.0] {
            for &d in &[0.0, 0.25, 0.5, 1.0] {
                for a in Action::ALL {
                    let brute = d * reward(&w(h), true, a, C) + (1.0 - d) * reward(&w(h), false, a, C);
                    assert!((expected_reward(&w(h), d, a, C) - brute).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn expected_reward_linear_then_constant() {
        let probes = [0.1, 0.4, 0.7];
        let r0: Vec<f64> = probes.iter().map(|&d| expected_reward(&w(0.6), d, Action::NoRobot, C)).collect();
        let slope = (r0[1] - r0[0]) / (probes[1] - probes[0]);
        let predicted = r0[0] + slope * (probes[2] - probes[0]);
        assert!((predicted - r0[2]).abs() < 1e-12);
        let r1: Vec<f64> = probes.iter().map(|&d| expected_reward(&w(0.6), d, Action::UseRobot, C)).collect();
        assert!(r1.iter().all(|&r| r == r1[0]));
    }

    #[test]
    fn weights_validation() {
        assert!(RewardWeights::new(0.5, 0.6).is_err());
        assert!(RewardWeights::new(-0.1, 1.1).is_err());
        assert!(RewardWeights::from_health(1.5).is_err());
        let ok = RewardWeights::new(0.3, 0.7).unwrap();
        assert_eq!(ok.time(), 0.7);
        let bad: std::result::Result<RewardWeights, _> =
            serde_json::from_str(r#"{"health_weight":0.9,"time_weight":0.9}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn generate_is_deterministic_and_valid() {
        let cfg = MissionConfig::default();
        let a = generate_mission(7, &cfg).unwrap();
        let b = generate_mission(7, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_sites(), 40);
        a.validate().unwrap();
        assert_ne!(a, generate_mission(8, &cfg).unwrap());
    }

    #[test]
    fn point_mass_one_means_threat_everywhere() {
        let cfg = MissionConfig {
            threat_distribution: ThreatDistribution::PointMass { value: 1.0 },
            ..MissionConfig::default()
        };
        let m = generate_mission(3, &cfg).unwrap();
        assert!(m.sites.iter().all(|s| s.threat_present));
    }

    #[test]
    fn zero_sites_is_config_error() {
        let cfg = MissionConfig { n_sites: 0, ..MissionConfig::default() };
        assert!(matches!(generate_mission(1, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn mission_json_field_names() {
        let m = generate_mission(1, &MissionConfig { n_sites: 1, ..Default::default() }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        let mut top: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        top.sort();
        assert_eq!(top, ["initial_health", "seed", "sites"]);
        let mut site: Vec<_> = v["sites"][0].as_object().unwrap().keys().cloned().collect();
        site.sort();
        assert_eq!(site, ["drone_report", "health_cost", "index", "prior_threat", "threat_present", "time_cost"]);
        assert_eq!(Mission::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn mission_validation_rejects_index_gap() {
        let mut m = generate_mission(1, &MissionConfig { n_sites: 3, ..Default::default() }).unwrap();
        m.sites[2].index = 5;
        assert!(m.validate().is_err());
    }

    fn site(threat: bool) -> SiteScenario {
        SiteScenario {
            index: 0,
            prior_threat: 0.5,
            drone_report: 0.5,
            threat_present: threat,
            health_cost: 10.0,
            time_cost: 2.0,
        }
    }

    fn mission_with(threat: bool) -> Mission {
        Mission { seed: 0, sites: vec![site(threat)], initial_health: 100.0 }
    }

    #[test]
    fn outcome_rules() {
        let m = mission_with(false);
        let s = MissionState::new(&m, 3.0);
        let (next, out) = apply_outcome(&s, &m.sites[0], Action::NoRobot).unwrap();
        assert_eq!(next.health, 100.0);
        assert!(!out.injury);

        let m = mission_with(true);
        let (next, out) = apply_outcome(&s, &m.sites[0], Action::NoRobot).unwrap();
        assert_eq!(next.health, 90.0);
        assert!(out.injury);

        let (next, _) = apply_outcome(&s, &m.sites[0], Action::UseRobot).unwrap();
        assert_eq!(next.elapsed_time, 5.0);
        assert_eq!(next.health, 100.0);

        assert!(matches!(apply_outcome(&next, &m.sites[0], Action::UseRobot), Err(Error::State(_))));
    }

    #[test]
    fn action_serializes_as_bit() {
        assert_eq!(serde_json::to_string(&Action::UseRobot).unwrap(), "1");
        assert_eq!(serde_json::from_str::<Action>("0").unwrap(), Action::NoRobot);
        assert!(serde_json::from_str::<Action>("2").is_err());
    }

    proptest! {
        #[test]
        fn reward_non_positive(h in 0.0..=1.0f64, threat: bool, bit in 0u8..2, hc in 0.01..100.0f64, tc in 0.01..100.0f64) {
            let a = Action::from_bit(bit).unwrap();
            let costs = Costs::new(hc, tc).unwrap();
            let r = reward(&w(h), threat, a, costs);
            prop_assert!(r <= 0.0);
            let triggers = (threat && a == Action::NoRobot && h > 0.0) || (a == Action::UseRobot && h < 1.0);
            prop_assert_eq!(r == 0.0, !triggers);
        }
    }
}
