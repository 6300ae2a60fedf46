//! Beta trust dynamics, the performance bit that drives them, and fitting of
//! personalized trust parameters from slider feedback.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::domain::{reward, Action, RewardWeights, SiteScenario};
use crate::error::{Error, Result};

/// Lower bound applied to every fitted parameter.
pub const PARAM_FLOOR: f64 = 1e-3;
/// Feedback is clamped to `[FEEDBACK_EPS, 1 - FEEDBACK_EPS]` before fitting.
pub const FEEDBACK_EPS: f64 = 1e-3;

/// Personalized trust parameters: prior pseudo-counts and per-outcome gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    pub alpha0: f64,
    pub beta0: f64,
    /// Gain applied to `alpha` per successful interaction.
    pub ws: f64,
    /// Gain applied to `beta` per failed interaction.
    pub wf: f64,
}

impl TrustParams {
    pub fn new(alpha0: f64, beta0: f64, ws: f64, wf: f64) -> Result<Self> {
        let p = Self { alpha0, beta0, ws, wf };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha0, self.beta0, self.ws, self.wf];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("trust parameters must be strictly positive, got {self:?}")))
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.alpha0, self.beta0, self.ws, self.wf]
    }

    fn from_array(v: [f64; 4]) -> Self {
        Self { alpha0: v[0], beta0: v[1], ws: v[2], wf: v[3] }
    }
}

impl Default for TrustParams {
    fn default() -> Self {
        Self { alpha0: 10.0, beta0: 10.0, ws: 5.0, wf: 5.0 }
    }
}

/// Trust after some number of interactions.
///
/// `alpha` and `beta` are always recomputed from the counts, so they equal
/// `alpha0 + ws * successes` and `beta0 + wf * failures` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    pub successes: u32,
    pub failures: u32,
    pub alpha: f64,
    pub beta: f64,
}

impl TrustState {
    pub fn initial(params: &TrustParams) -> Self {
        Self::from_counts(params, 0, 0)
    }

    pub fn from_counts(params: &TrustParams, successes: u32, failures: u32) -> Self {
        Self {
            successes,
            failures,
            alpha: params.alpha0 + params.ws * f64::from(successes),
            beta: params.beta0 + params.wf * f64::from(failures),
        }
    }

    /// Same counts under (possibly refitted) parameters.
    pub fn rebase(&self, params: &TrustParams) -> Self {
        Self::from_counts(params, self.successes, self.failures)
    }

    pub fn interactions(&self) -> u32 {
        self.successes + self.failures
    }
}

pub fn update_trust(state: &TrustState, params: &TrustParams, performance: bool) -> TrustState {
    if performance {
        TrustState::from_counts(params, state.successes + 1, state.failures)
    } else {
        TrustState::from_counts(params, state.successes, state.failures + 1)
    }
}

pub fn mean_trust(state: &TrustState) -> f64 {
    beta_mean(state.alpha, state.beta)
}

pub(crate) fn beta_mean(alpha: f64, beta: f64) -> f64 {
    alpha / (alpha + beta)
}

/// Whether the recommendation was at least as good as the alternative under
/// `weights`, once the threat outcome at `site` is known. Ties count as success.
pub fn performance(weights: &RewardWeights, site: &SiteScenario, recommendation: Action) -> bool {
    performance_given(weights, site.threat_present, recommendation, site.costs())
}

pub(crate) fn performance_given(
    weights: &RewardWeights,
    threat_present: bool,
    recommendation: Action,
    costs: crate::domain::Costs,
) -> bool {
    reward(weights, threat_present, recommendation, costs)
        >= reward(weights, threat_present, recommendation.other(), costs)
}

/// One step of trust history: the performance bit and the feedback reported after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPoint {
    pub performance: bool,
    pub feedback: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Initial ascent step; halved whenever a step fails to improve the objective.
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the projected gradient's infinity norm falls below this.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { step: 1e-2, max_iter: 500, tol: 1e-6 }
    }
}

fn clamp_feedback(f: f64) -> f64 {
    f.clamp(FEEDBACK_EPS, 1.0 - FEEDBACK_EPS)
}

fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Running success/failure counts after each history point.
fn cumulative_counts(history: &[FeedbackPoint]) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    history.iter().scan((0.0, 0.0), |(k, n), p| {
        *n += 1.0;
        if p.performance {
            *k += 1.0;
        }
        Some((*k, *n - *k, clamp_feedback(p.feedback)))
    })
}

/// Log-likelihood of the feedback under Beta trust dynamics with `params`.
/// Feedback `j` is scored against the trust state after interaction `j`.
pub fn feedback_log_likelihood(history: &[FeedbackPoint], params: &TrustParams) -> f64 {
    cumulative_counts(history)
        .map(|(k, m, f)| ln_beta_pdf(f, params.alpha0 + params.ws * k, params.beta0 + params.wf * m))
        .sum()
}

/// Analytic gradient of [`feedback_log_likelihood`] w.r.t. `(alpha0, beta0, ws, wf)`.
pub fn feedback_log_likelihood_grad(history: &[FeedbackPoint], params: &TrustParams) -> [f64; 4] {
    let mut g = [0.0; 4];
    for (k, m, f) in cumulative_counts(history) {
        let a = params.alpha0 + params.ws * k;
        let b = params.beta0 + params.wf * m;
        let common = digamma(a + b);
        let da = f.ln() - digamma(a) + common;
        let db = (1.0 - f).ln() - digamma(b) + common;
        g[0] += da;
        g[1] += db;
        g[2] += k * da;
        g[3] += m * db;
    }
    g
}

/// Fits trust parameters to a feedback history by projected gradient ascent.
///
/// Starts at `init`, projects every iterate onto `[PARAM_FLOOR, inf)^4`, and
/// only accepts steps that increase the log-likelihood, so the result is never
/// worse than `init`.
pub fn fit_trust_params(history: &[FeedbackPoint], init: &TrustParams, config: &FitConfig) -> Result<TrustParams> {
    if history.is_empty() {
        return Err(Error::InvalidArgument("cannot fit trust parameters to an empty history".into()));
    }
    if history.iter().any(|p| !p.feedback.is_finite()) {
        return Err(Error::InvalidArgument("feedback values must be finite".into()));
    }
    let project = |v: [f64; 4]| v.map(|x| x.max(PARAM_FLOOR));
    let mut x = project(init.as_array());
    let mut value = feedback_log_likelihood(history, &TrustParams::from_array(x));
    let mut step = config.step;

    for _ in 0..config.max_iter {
        let g = feedback_log_likelihood_grad(history, &TrustParams::from_array(x));
        // Components pinned at the floor with a downward gradient cannot move.
        let pg: Vec<f64> = x
            .iter()
            .zip(g.iter())
            .map(|(&xi, &gi)| if xi <= PARAM_FLOOR && gi < 0.0 { 0.0 } else { gi })
            .collect();
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < config.tol {
            break;
        }
        let mut accepted = false;
        while step > 1e-12 {
            let cand = project([x[0] + step * g[0], x[1] + step * g[1], x[2] + step * g[2], x[3] + step * g[3]]);
            let cand_value = feedback_log_likelihood(history, &TrustParams::from_array(cand));
            if cand_value > value {
                x = cand;
                value = cand_value;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(TrustParams::from_array(x))
}
