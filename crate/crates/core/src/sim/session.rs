use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::behavior::{action_probabilities, bounded_rationality_probs, sample_action};
use crate::domain::{apply_outcome, Mission, MissionState};
use crate::error::{Error, Result};
use crate::planner::{AgentConfig, EngineStep, RobotAgent};
use crate::sim::{FeedbackMode, InteractionRecord, SessionMetrics, SimulatedHuman};
use crate::trust::{mean_trust, performance, update_trust, TrustState};

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRun {
    pub metrics: SessionMetrics,
    pub records: Vec<InteractionRecord>,
    /// Robot engine state after each site.
    pub engine_trace: Vec<EngineStep>,
    /// Human's own (true) trust state after each site.
    pub human_trust: Vec<TrustState>,
}

fn trust_point<R: rand::Rng>(state: &TrustState, mode: FeedbackMode, rng: &mut R) -> f64 {
    match mode {
        FeedbackMode::Mean => mean_trust(state),
        FeedbackMode::Sampled => Beta::new(state.alpha, state.beta)
            .expect("trust state has positive parameters")
            .sample(rng),
    }
}

/// Plays one mission between a simulated human and the robot.
///
/// Per site: the robot recommends; the human acts under the disuse model with
/// her true weights and her own trust; the outcome is applied; the human
/// judges the recommendation with her true weights and updates her trust;
/// she reports feedback; the robot assesses and updates.
pub fn run_session(
    human: &SimulatedHuman,
    agent_config: &AgentConfig,
    mission: &Mission,
    seed: u64,
    base_search_time: f64,
) -> Result<SessionRun> {
    mission.validate()?;
    human.trust_params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut robot = RobotAgent::new(agent_config.clone())?;
    let mut state = MissionState::new(mission, base_search_time);
    let mut human_trust = TrustState::initial(&human.trust_params);

    let n = mission.n_sites();
    let mut records = Vec::with_capacity(n);
    let mut engine_trace = Vec::with_capacity(n);
    let mut human_trace = Vec::with_capacity(n);

    for site in &mission.sites {
        let rec = robot.recommend(mission, site.index)?.action;

        let trust_now = trust_point(&human_trust, human.feedback_mode, &mut rng);
        let q = bounded_rationality_probs(&human.true_weights, site.drone_report, site.costs(), human.kappa);
        let action = sample_action(&action_probabilities(rec, trust_now, &q), rec, &mut rng);

        let (next, _) = apply_outcome(&state, site, action)?;
        state = next;

        let human_perf = performance(&human.true_weights, site, rec);
        human_trust = update_trust(&human_trust, &human.trust_params, human_perf);
        let feedback = trust_point(&human_trust, human.feedback_mode, &mut rng);

        let assessment = robot.assess_and_update(site, rec, action, Some(feedback))?;
        records.push(InteractionRecord {
            site: site.index,
            recommendation: rec,
            human_action: action,
            threat_present: site.threat_present,
            performance: assessment.performance,
            trust_feedback: feedback,
            belief_mean: assessment.belief_mean,
        });
        engine_trace.push(assessment.engine_step());
        human_trace.push(human_trust);
    }

    let metrics = SessionMetrics::from_records(&records, state.health, state.elapsed_time);
    Ok(SessionRun { metrics, records, engine_trace, human_trust: human_trace })
}

/// Feeds a logged transcript back through a fresh robot engine and returns
/// the engine trace. Fails if a logged recommendation differs from what the
/// engine recommends at that point.
pub fn replay_transcript(
    mission: &Mission,
    agent_config: &AgentConfig,
    records: &[InteractionRecord],
) -> Result<Vec<EngineStep>> {
    let mut robot = RobotAgent::new(agent_config.clone())?;
    records
        .iter()
        .map(|r| {
            let site = mission
                .sites
                .get(r.site)
                .ok_or_else(|| Error::InvalidArgument(format!("record refers to missing site {}", r.site)))?;
            let expected = robot.recommend(mission, r.site)?.action;
            if expected != r.recommendation {
                return Err(Error::State(format!(
                    "site {}: logged recommendation {} but engine recommends {}",
                    r.site,
                    r.recommendation.bit(),
                    expected.bit()
                )));
            }
            Ok(robot.assess_and_update(site, r.recommendation, r.human_action, Some(r.trust_feedback))?.engine_step())
        })
        .collect()
}
