//! The per-participant session: a phase machine wrapped around the robot engine.
//!
//! ```text
//! pre_mission --preference--> awaiting_action --action--> awaiting_trust --trust--+
//!                                   ^                                             |
//!                                   +------------------- (more sites) -----------+
//!                                                          (last site) --> complete
//! ```
//!
//! Every accepted command is also an event; replaying the events of a session
//! rebuilds it exactly, because the engine is deterministic.

use serde::{Deserialize, Serialize};
use trustkit::domain::{apply_outcome, Action, Mission, MissionState};
use trustkit::planner::{AgentConfig, EngineStep, RobotAgent, StrategyKind};
use trustkit::sim::{transcript_to_jsonl, InteractionRecord, SessionMetrics};

use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    PreMission,
    AwaitingAction,
    AwaitingTrust,
    Complete,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::PreMission => "pre_mission",
            Phase::AwaitingAction => "awaiting_action",
            Phase::AwaitingTrust => "awaiting_trust",
            Phase::Complete => "complete",
        }
    }
}

/// Position in a within-subjects schedule: participant `p` plays strategy
/// `latin_square_row(p)[slot]` in their `slot`-th mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingSlot {
    pub participant: usize,
    pub slot: usize,
}

/// Row `participant mod 3` of the cyclic Latin square over the three strategies.
pub fn latin_square_row(participant: usize) -> [StrategyKind; 3] {
    let all = StrategyKind::ALL;
    [0, 1, 2].map(|s| all[(participant + s) % 3])
}

/// Everything needed to rebuild a session from scratch.
#[allow(clippy::large_enum_variant)] // one creation event per session
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        id: String,
        mission: Mission,
        agent: AgentConfig,
        base_search_time: f64,
        ordering: Option<OrderingSlot>,
    },
    Preference {
        value: Option<f64>,
    },
    Action {
        action: Action,
    },
    Trust {
        slider: u32,
    },
}

/// What the participant sees at a site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub site: usize,
    pub n_sites: usize,
    pub drone_report: Option<f64>,
    pub recommendation: Option<Action>,
    pub est_time_with: Option<f64>,
    pub est_time_without: Option<f64>,
    pub health: f64,
    pub elapsed_time: f64,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeView {
    pub threat_present: bool,
    pub injury: bool,
    pub health: f64,
    pub elapsed_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryView {
    pub id: String,
    pub strategy: StrategyKind,
    pub partial: bool,
    pub sites_completed: usize,
    pub pre_mission_preference: Option<f64>,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PendingSite {
    recommendation: Action,
    human_action: Action,
    performance: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    id: String,
    mission: Mission,
    ordering: Option<OrderingSlot>,
    agent: RobotAgent,
    mission_state: MissionState,
    phase: Phase,
    preference: Option<f64>,
    recommendation: Option<Action>,
    pending: Option<PendingSite>,
    transcript: Vec<InteractionRecord>,
    engine_trace: Vec<EngineStep>,
    events: Vec<SessionEvent>,
}

fn conflict(phase: Phase, what: &str) -> ServiceError {
    ServiceError::Conflict(format!("cannot {what} while session is {}", phase.as_str()))
}

impl Session {
    pub fn create(
        id: String,
        mission: Mission,
        agent: AgentConfig,
        base_search_time: f64,
        ordering: Option<OrderingSlot>,
    ) -> Result<Self, ServiceError> {
        mission.validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let robot = RobotAgent::new(agent.clone()).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let event = SessionEvent::Created {
            id: id.clone(),
            mission: mission.clone(),
            agent,
            base_search_time,
            ordering,
        };
        Ok(Self {
            mission_state: MissionState::new(&mission, base_search_time),
            id,
            mission,
            ordering,
            agent: robot,
            phase: Phase::PreMission,
            preference: None,
            recommendation: None,
            pending: None,
            transcript: Vec::new(),
            engine_trace: Vec::new(),
            events: vec![event],
        })
    }

    /// Rebuilds a session from its event log.
    pub fn replay(events: &[SessionEvent]) -> Result<Self, ServiceError> {
        let (first, rest) =
            events.split_first().ok_or_else(|| ServiceError::Internal("empty event log".into()))?;
        let SessionEvent::Created { id, mission, agent, base_search_time, ordering } = first.clone() else {
            return Err(ServiceError::Internal("event log does not start with creation".into()));
        };
        let mut session = Session::create(id, mission, agent, base_search_time, ordering)?;
        for e in rest {
            session.apply(e)?;
        }
        Ok(session)
    }

    /// Applies a non-creation event exactly as the matching request would.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), ServiceError> {
        match *event {
            SessionEvent::Created { .. } => Err(ServiceError::Internal("duplicate creation event".into())),
            SessionEvent::Preference { value } => self.set_preference(value).map(|_| ()),
            SessionEvent::Action { action } => self.submit_action(i64::from(action.bit())).map(|_| ()),
            SessionEvent::Trust { slider } => self.submit_trust(i64::from(slider)).map(|_| ()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn strategy(&self) -> StrategyKind {
        self.agent.config().strategy.kind
    }

    pub fn ordering(&self) -> Option<OrderingSlot> {
        self.ordering
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn agent(&self) -> &RobotAgent {
        &self.agent
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn transcript(&self) -> &[InteractionRecord] {
        &self.transcript
    }

    pub fn engine_trace(&self) -> &[EngineStep] {
        &self.engine_trace
    }

    pub fn preference(&self) -> Option<f64> {
        self.preference
    }

    fn current_site(&self) -> usize {
        self.mission_state.sites_completed
    }

    fn ensure_recommendation(&mut self) -> Result<Action, ServiceError> {
        if let Some(r) = self.recommendation {
            return Ok(r);
        }
        let rec = self
            .agent
            .recommend(&self.mission, self.current_site())
            .map_err(|e| ServiceError::Internal(e.to_string()))?
            .action;
        self.recommendation = Some(rec);
        Ok(rec)
    }

    /// Current site view. Computes and caches the recommendation on first read.
    pub fn state_view(&mut self) -> Result<StateView, ServiceError> {
        let recommendation = match self.phase {
            Phase::AwaitingAction | Phase::AwaitingTrust => Some(self.ensure_recommendation()?),
            Phase::PreMission | Phase::Complete => None,
        };
        let site = self.mission.sites.get(self.current_site());
        let times = site.map(|s| self.mission_state.time_estimates(s));
        Ok(StateView {
            site: self.current_site(),
            n_sites: self.mission.n_sites(),
            drone_report: site.filter(|_| self.phase != Phase::PreMission).map(|s| s.drone_report),
            recommendation,
            est_time_with: times.map(|t| t.0),
            est_time_without: times.map(|t| t.1),
            health: self.mission_state.health,
            elapsed_time: self.mission_state.elapsed_time,
            phase: self.phase,
            summary: (self.phase == Phase::Complete).then(|| format!("/v1/sessions/{}/summary", self.id)),
        })
    }

    /// Records the pre-mission preference (never used by the engine) and opens the first site.
    pub fn set_preference(&mut self, value: Option<f64>) -> Result<StateView, ServiceError> {
        if self.phase != Phase::PreMission {
            return Err(conflict(self.phase, "set the preference"));
        }
        if let Some(v) = value {
            if !(0.0..=1.0).contains(&v) {
                return Err(ServiceError::BadRequest(format!("preference must lie in [0, 1], got {v}")));
            }
        }
        self.preference = value;
        self.phase = Phase::AwaitingAction;
        self.events.push(SessionEvent::Preference { value });
        self.state_view()
    }

    pub fn submit_action(&mut self, action: i64) -> Result<OutcomeView, ServiceError> {
        if self.phase != Phase::AwaitingAction {
            return Err(conflict(self.phase, "submit an action"));
        }
        let action = u8::try_from(action)
            .ok()
            .and_then(|b| Action::from_bit(b).ok())
            .ok_or_else(|| ServiceError::BadRequest(format!("action must be 0 or 1, got {action}")))?;
        let rec = self.ensure_recommendation()?;
        let site = self.mission.sites[self.current_site()].clone();
        let (next, outcome) =
            apply_outcome(&self.mission_state, &site, action).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let performance =
            self.agent.assess(&site, rec, action).map_err(|e| ServiceError::Internal(e.to_string()))?;
        // The site counter only advances once trust feedback is in.
        self.mission_state = MissionState { sites_completed: self.mission_state.sites_completed, ..next };
        self.pending = Some(PendingSite { recommendation: rec, human_action: action, performance });
        self.phase = Phase::AwaitingTrust;
        self.events.push(SessionEvent::Action { action });
        Ok(OutcomeView {
            threat_present: site.threat_present,
            injury: outcome.injury,
            health: self.mission_state.health,
            elapsed_time: self.mission_state.elapsed_time,
        })
    }

    /// Accepts the trust slider (`0..=100`, even values) and advances to the next site.
    pub fn submit_trust(&mut self, slider: i64) -> Result<StateView, ServiceError> {
        if self.phase != Phase::AwaitingTrust {
            return Err(conflict(self.phase, "submit trust feedback"));
        }
        if !(0..=100).contains(&slider) || slider % 2 != 0 {
            return Err(ServiceError::BadRequest(format!(
                "trust slider must be an even integer in [0, 100], got {slider}"
            )));
        }
        let pending = self.pending.take().ok_or_else(|| ServiceError::Internal("no pending site".into()))?;
        let feedback = slider as f64 / 100.0;
        let assessment = match self.agent.commit_feedback(Some(feedback)) {
            Ok(a) => a,
            Err(e) => {
                self.pending = Some(pending);
                return Err(ServiceError::Internal(e.to_string()));
            }
        };
        let site = self.current_site();
        self.transcript.push(InteractionRecord {
            site,
            recommendation: pending.recommendation,
            human_action: pending.human_action,
            threat_present: self.mission.sites[site].threat_present,
            performance: pending.performance,
            trust_feedback: feedback,
            belief_mean: assessment.belief_mean,
        });
        self.engine_trace.push(assessment.engine_step());
        self.mission_state.sites_completed += 1;
        self.recommendation = None;
        self.phase = if self.mission_state.sites_completed == self.mission.n_sites() {
            Phase::Complete
        } else {
            Phase::AwaitingAction
        };
        self.events.push(SessionEvent::Trust { slider: slider as u32 });
        self.state_view()
    }

    pub fn metrics(&self) -> SessionMetrics {
        SessionMetrics::from_records(&self.transcript, self.mission_state.health, self.mission_state.elapsed_time)
    }

    pub fn summary(&self) -> SummaryView {
        SummaryView {
            id: self.id.clone(),
            strategy: self.strategy(),
            partial: self.phase != Phase::Complete,
            sites_completed: self.transcript.len(),
            pre_mission_preference: self.preference,
            metrics: self.metrics(),
        }
    }

    /// The transcript as JSON lines, available once the mission is complete.
    pub fn transcript_jsonl(&self) -> Option<String> {
        (self.phase == Phase::Complete).then(|| transcript_to_jsonl(&self.transcript))
    }
}
