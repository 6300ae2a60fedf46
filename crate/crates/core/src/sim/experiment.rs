use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::Kappa;
use crate::domain::{generate_mission, MissionConfig, RewardWeights, DEFAULT_BASE_SEARCH_TIME};
use crate::error::{Error, Result};
use crate::planner::{AgentConfig, Horizon, StrategyConfig, StrategyKind, TrustFitMode};
use crate::seed::derive_seed;
use crate::sim::stats::{mean_and_se, paired_t_test, PairedTest};
use crate::sim::{run_session, FeedbackMode, SimulatedHuman};
use crate::trust::{FitConfig, TrustParams};

/// A scalar distribution in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl DistSpec {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            DistSpec::Fixed { value } => value.is_finite(),
            DistSpec::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            DistSpec::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid distribution for {what}: {self:?}")))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Fixed { value } => value,
            DistSpec::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..high)
                }
            }
            DistSpec::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
        }
    }
}

/// Per-parameter ranges for the simulated humans' trust parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustBox {
    pub alpha0: DistSpec,
    pub beta0: DistSpec,
    pub ws: DistSpec,
    pub wf: DistSpec,
}

impl Default for TrustBox {
    fn default() -> Self {
        Self {
            alpha0: DistSpec::Uniform { low: 5.0, high: 20.0 },
            beta0: DistSpec::Uniform { low: 5.0, high: 20.0 },
            ws: DistSpec::Uniform { low: 2.0, high: 8.0 },
            wf: DistSpec::Uniform { low: 2.0, high: 8.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub health_weight: DistSpec,
    pub kappa: DistSpec,
    pub trust: TrustBox,
    pub feedback_mode: FeedbackMode,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            health_weight: DistSpec::Uniform { low: 0.0, high: 1.0 },
            kappa: DistSpec::LogNormal { mu: 0.0, sigma: 0.25 },
            trust: TrustBox::default(),
            feedback_mode: FeedbackMode::Mean,
        }
    }
}

impl PopulationConfig {
    fn validate(&self) -> Result<()> {
        self.health_weight.validate("health_weight")?;
        self.kappa.validate("kappa")?;
        for (name, d) in [("alpha0", self.trust.alpha0), ("beta0", self.trust.beta0), ("ws", self.trust.ws), ("wf", self.trust.wf)] {
            d.validate(name)?;
        }
        Ok(())
    }

    /// Draws one human. Values are clamped into their valid domains.
    pub fn sample_human<R: Rng>(&self, rng: &mut R) -> Result<SimulatedHuman> {
        let w = self.health_weight.sample(rng).clamp(0.0, 1.0);
        let kappa = self.kappa.sample(rng).max(0.0);
        let floor = |x: f64| x.max(1e-3);
        let trust_params = TrustParams::new(
            floor(self.trust.alpha0.sample(rng)),
            floor(self.trust.beta0.sample(rng)),
            floor(self.trust.ws.sample(rng)),
            floor(self.trust.wf.sample(rng)),
        )?;
        Ok(SimulatedHuman {
            true_weights: RewardWeights::from_health(w)?,
            trust_params,
            kappa: Kappa::new(kappa)?,
            feedback_mode: self.feedback_mode,
        })
    }
}

/// Which mission each strategy plays for a given human.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionAssignment {
    /// Human `h` plays strategy `s` on mission slot `(s + h) mod n_strategies`.
    #[default]
    LatinSquare,
    /// Every strategy plays the same mission with the same session seed.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_humans: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyKind>,
    pub robot_weights: RewardWeights,
    pub horizon: Horizon,
    pub kappa_assumed: Kappa,
    pub robot_trust_params: TrustParams,
    pub fit_mode: TrustFitMode,
    pub fit: FitConfig,
    pub belief_points: usize,
    /// Pin every robot's belief at its human's true health weight.
    pub pin_belief_to_truth: bool,
    pub mission: MissionConfig,
    pub base_search_time: f64,
    pub population: PopulationConfig,
    pub mission_assignment: MissionAssignment,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_humans: 100,
            seed: 0,
            strategies: StrategyKind::ALL.to_vec(),
            robot_weights: RewardWeights::balanced(),
            horizon: Horizon::Remaining,
            kappa_assumed: Kappa::default(),
            robot_trust_params: TrustParams::default(),
            fit_mode: TrustFitMode::Fixed,
            fit: FitConfig::default(),
            belief_points: crate::irl::DEFAULT_GRID_POINTS,
            pin_belief_to_truth: false,
            mission: MissionConfig::default(),
            base_search_time: DEFAULT_BASE_SEARCH_TIME,
            population: PopulationConfig::default(),
            mission_assignment: MissionAssignment::LatinSquare,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_humans == 0 {
            return Err(Error::Config("n_humans must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        self.mission.validate()?;
        self.population.validate()?;
        if self.base_search_time.is_nan() || self.base_search_time < 0.0 {
            return Err(Error::Config("base_search_time must be non-negative".into()));
        }
        self.agent_config(StrategyKind::NonLearner, None).validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("bad experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn agent_config(&self, kind: StrategyKind, pinned: Option<f64>) -> AgentConfig {
        AgentConfig {
            strategy: StrategyConfig {
                kind,
                robot_weights: self.robot_weights,
                horizon: self.horizon,
                kappa_assumed: self.kappa_assumed,
            },
            trust_params: self.robot_trust_params,
            fit_mode: self.fit_mode,
            fit: self.fit,
            belief_points: self.belief_points,
            pinned_health_weight: pinned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub human_id: usize,
    pub strategy: StrategyKind,
    pub agreements: usize,
    pub average_trust: f64,
    pub end_trust: f64,
    pub final_health: f64,
    pub total_time: f64,
    /// Mission seed; the session's random stream is derived from it.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Agreements,
    AverageTrust,
    EndTrust,
    FinalHealth,
    TotalTime,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::Agreements, Metric::AverageTrust, Metric::EndTrust, Metric::FinalHealth, Metric::TotalTime];

    pub fn of(self, row: &ExperimentRow) -> f64 {
        match self {
            Metric::Agreements => row.agreements as f64,
            Metric::AverageTrust => row.average_trust,
            Metric::EndTrust => row.end_trust,
            Metric::FinalHealth => row.final_health,
            Metric::TotalTime => row.total_time,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Agreements => "agreements",
            Metric::AverageTrust => "average_trust",
            Metric::EndTrust => "end_trust",
            Metric::FinalHealth => "final_health",
            Metric::TotalTime => "total_time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub metric: Metric,
    pub mean: f64,
    pub standard_error: f64,
}

/// One row per (human, strategy), ordered by human then by configured strategy order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    /// Metric values for `strategy`, ordered by human id.
    pub fn column(&self, metric: Metric, strategy: StrategyKind) -> Vec<f64> {
        self.rows.iter().filter(|r| r.strategy == strategy).map(|r| metric.of(r)).collect()
    }

    pub fn strategies(&self) -> Vec<StrategyKind> {
        let mut seen = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.strategy) {
                seen.push(r.strategy);
            }
        }
        seen
    }

    pub fn paired_comparison(&self, metric: Metric, a: StrategyKind, b: StrategyKind) -> Result<PairedTest> {
        paired_t_test(&self.column(metric, a), &self.column(metric, b))
    }

    pub fn summary(&self) -> Vec<StrategySummary> {
        let mut out = Vec::new();
        for strategy in self.strategies() {
            for metric in Metric::ALL {
                let (mean, standard_error) = mean_and_se(&self.column(metric, strategy));
                out.push(StrategySummary { strategy, metric, mean, standard_error });
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::State(format!("csv write failed: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::State(format!("csv flush failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ExperimentRow>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad csv: {e}")))?;
        Ok(Self { rows })
    }
}

/// Runs every human against every configured strategy.
///
/// Humans, missions and session streams all derive from `config.seed`, so the
/// table does not depend on thread scheduling. `jobs` caps worker threads.
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentTable> {
    config.validate()?;
    let run_all = || -> Result<Vec<Vec<ExperimentRow>>> {
        (0..config.n_humans).into_par_iter().map(|h| run_human(config, h)).collect()
    };
    let per_human = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(run_all)?,
        None => run_all()?,
    };
    Ok(ExperimentTable { rows: per_human.into_iter().flatten().collect() })
}

fn run_human(config: &ExperimentConfig, human_id: usize) -> Result<Vec<ExperimentRow>> {
    let h = human_id as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[0, h]));
    let human = config.population.sample_human(&mut rng)?;
    let pinned = config.pin_belief_to_truth.then(|| human.true_weights.health());
    let n_strat = config.strategies.len();
    config
        .strategies
        .iter()
        .enumerate()
        .map(|(s, &kind)| {
            let slot = match config.mission_assignment {
                MissionAssignment::LatinSquare => (s + human_id) % n_strat,
                MissionAssignment::Shared => 0,
            } as u64;
            let mission_seed = derive_seed(config.seed, &[1, h, slot]);
            let mission = generate_mission(mission_seed, &config.mission)?;
            let agent = config.agent_config(kind, pinned);
            let run = run_session(&human, &agent, &mission, derive_seed(mission_seed, &[2]), config.base_search_time)?;
            let m = run.metrics;
            Ok(ExperimentRow {
                human_id,
                strategy: kind,
                agreements: m.agreements,
                average_trust: m.average_trust,
                end_trust: m.end_trust,
                final_health: m.final_health,
                total_time: m.total_time,
                seed: mission_seed,
            })
        })
        .collect()
}
