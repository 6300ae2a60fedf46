//! Simulated humans, session runs, Monte-Carlo experiments and the summary
//! statistics used to compare strategies.

mod experiment;
mod session;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use experiment::{
    run_experiment, DistSpec, ExperimentConfig, ExperimentRow, ExperimentTable, Metric, MissionAssignment,
    PopulationConfig, StrategySummary, TrustBox,
};
pub use session::{replay_transcript, run_session, SessionRun};

use crate::behavior::Kappa;
use crate::domain::{Action, RewardWeights};
use crate::trust::TrustParams;

/// How the simulated human turns her Beta trust state into a point value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    Mean,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedHuman {
    pub true_weights: RewardWeights,
    pub trust_params: TrustParams,
    pub kappa: Kappa,
    #[serde(default)]
    pub feedback_mode: FeedbackMode,
}

/// One site of a session transcript.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub site: usize,
    pub recommendation: Action,
    pub human_action: Action,
    pub threat_present: bool,
    #[serde(with = "bit")]
    pub performance: bool,
    pub trust_feedback: f64,
    pub belief_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub agreements: usize,
    pub average_trust: f64,
    pub end_trust: f64,
    pub final_health: f64,
    pub total_time: f64,
}

impl SessionMetrics {
    /// Agreement and trust metrics recomputed from a transcript.
    pub fn from_records(records: &[InteractionRecord], final_health: f64, total_time: f64) -> Self {
        let agreements = records.iter().filter(|r| r.recommendation == r.human_action).count();
        let average_trust = if records.is_empty() {
            0.0
        } else {
            records.iter().map(|r| r.trust_feedback).sum::<f64>() / records.len() as f64
        };
        let end_trust = records.last().map_or(0.0, |r| r.trust_feedback);
        Self { agreements, average_trust, end_trust, final_health, total_time }
    }
}

/// Writes records as JSON lines.
pub fn transcript_to_jsonl(records: &[InteractionRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

pub fn transcript_from_jsonl(text: &str) -> crate::Result<Vec<InteractionRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| crate::Error::InvalidArgument(format!("bad transcript line: {e}"))))
        .collect()
}

mod bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("expected 0 or 1, got {other}"))),
        }
    }
}
