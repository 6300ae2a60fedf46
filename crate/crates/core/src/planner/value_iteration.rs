use crate::behavior::{action_probabilities, bounded_rationality_probs, Kappa};
use crate::domain::{expected_reward, Action, Costs};
use crate::error::{Error, Result};
use crate::planner::WeightRoles;
use crate::trust::{beta_mean, performance_given, TrustParams};

/// Sufficient statistics of the trust state: interactions completed so far and
/// how many of them were successes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerState {
    pub completed: usize,
    pub successes: usize,
}

/// One site in the lookahead window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookaheadSite {
    pub threat_prob: f64,
    pub costs: Costs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValues {
    /// Q-values at the root, indexed by recommendation bit.
    pub q: [f64; 2],
    /// Number of `(step, successes)` states evaluated.
    pub states_evaluated: usize,
}

/// Per-step quantities that do not depend on the trust state.
struct StepModel {
    threat_prob: f64,
    q_choice: [f64; 2],
    /// Expected optimization reward of the human implementing each action.
    team_reward: [f64; 2],
    /// Performance bit of each recommendation, by threat outcome `[absent, present]`.
    perf: [[bool; 2]; 2],
}

impl StepModel {
    fn new(roles: &WeightRoles, kappa: Kappa, site: &LookaheadSite) -> Self {
        let d = site.threat_prob;
        let q = bounded_rationality_probs(&roles.estimation, d, site.costs, kappa);
        let team_reward = Action::ALL.map(|a| expected_reward(&roles.optimization, d, a, site.costs));
        let perf = [false, true].map(|threat| {
            Action::ALL.map(|rec| performance_given(&roles.estimation, threat, rec, site.costs))
        });
        Self { threat_prob: d, q_choice: q.q, team_reward, perf }
    }
}

/// Backward induction over `(step, successes)` for the lookahead window.
///
/// At each state the human's trust is the Beta mean implied by the counts.
/// The immediate value of a recommendation is the optimization reward averaged
/// over the disuse model's action probabilities. The next state depends on the
/// performance bit, which depends only on the recommendation and the threat
/// outcome. Undiscounted; terminal value zero.
pub fn value_iteration(
    roles: &WeightRoles,
    trust_params: &TrustParams,
    kappa: Kappa,
    start: PlannerState,
    sites: &[LookaheadSite],
) -> Result<QValues> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("value iteration needs a horizon of at least one site".into()));
    }
    if start.successes > start.completed {
        return Err(Error::InvalidArgument("successes cannot exceed completed interactions".into()));
    }
    let models: Vec<StepModel> = sites.iter().map(|s| StepModel::new(roles, kappa, s)).collect();
    let horizon = models.len();
    let base_failures = (start.completed - start.successes) as f64;
    let base_successes = start.successes as f64;

    let q_at = |step: usize, offset: usize, next: &[f64]| -> [f64; 2] {
        let m = &models[step];
        let successes = base_successes + offset as f64;
        let failures = base_failures + (step - offset) as f64;
        let trust = beta_mean(
            trust_params.alpha0 + trust_params.ws * successes,
            trust_params.beta0 + trust_params.wf * failures,
        );
        let choice = crate::behavior::ChoiceProbs { q: m.q_choice };
        Action::ALL.map(|rec| {
            let p = action_probabilities(rec, trust, &choice);
            let immediate = p.follow * m.team_reward[rec.index()] + p.defy * m.team_reward[rec.other().index()];
            let future = if next.is_empty() {
                0.0
            } else {
                let absent = next[offset + usize::from(m.perf[0][rec.index()])];
                let present = next[offset + usize::from(m.perf[1][rec.index()])];
                m.threat_prob * present + (1.0 - m.threat_prob) * absent
            };
            immediate + future
        })
    };

    let mut next: Vec<f64> = Vec::new();
    let mut evaluated = 0;
    for step in (1..horizon).rev() {
        let values: Vec<f64> = (0..=step)
            .map(|offset| {
                let q = q_at(step, offset, &next);
                q[0].max(q[1])
            })
            .collect();
        evaluated += values.len();
        next = values;
    }
    let root = q_at(0, 0, &next);
    Ok(QValues { q: root, states_evaluated: evaluated + 1 })
}
