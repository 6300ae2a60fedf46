//! Exhaustive policy-tree enumeration, written from the model definitions
//! without touching the planner.
//!
//! A policy assigns a recommendation to every node of the binary tree of
//! performance outcomes (root 0; children of `n` are `2n+1` on failure and
//! `2n+2` on success). Each policy is evaluated by direct recursion and the
//! best policy starting with each root action gives that action's Q-value.

#[derive(Debug, Clone, Copy)]
pub struct OracleSite {
    pub threat_prob: f64,
    pub health_cost: f64,
    pub time_cost: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleModel {
    /// Health weight used to predict the human and judge performance.
    pub w_estimation: f64,
    /// Health weight whose reward is maximized.
    pub w_optimization: f64,
    pub kappa: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub ws: f64,
    pub wf: f64,
    pub successes: f64,
    pub failures: f64,
}

fn expected(w: f64, s: &OracleSite, robot: bool) -> f64 {
    if robot {
        -(1.0 - w) * s.time_cost
    } else {
        -w * s.health_cost * s.threat_prob
    }
}

fn realized(w: f64, s: &OracleSite, threat: bool, robot: bool) -> f64 {
    match (robot, threat) {
        (true, _) => -(1.0 - w) * s.time_cost,
        (false, true) => -w * s.health_cost,
        (false, false) => 0.0,
    }
}

fn policy_value(m: &OracleModel, sites: &[OracleSite], policy: u64, node: usize, step: usize, k: f64, f: f64) -> f64 {
    if step == sites.len() {
        return 0.0;
    }
    let s = &sites[step];
    let robot = (policy >> node) & 1 == 1;
    let alpha = m.alpha0 + m.ws * (m.successes + k);
    let beta = m.beta0 + m.wf * (m.failures + f);
    let t = alpha / (alpha + beta);

    let gap = expected(m.w_estimation, s, false) - expected(m.w_estimation, s, true);
    let q_robot = 1.0 / (1.0 + (m.kappa * gap).exp());
    let q_rec = if robot { q_robot } else { 1.0 - q_robot };
    let p_follow = t + (1.0 - t) * q_rec;
    let p_defy = (1.0 - t) * (1.0 - q_rec);
    let immediate =
        p_follow * expected(m.w_optimization, s, robot) + p_defy * expected(m.w_optimization, s, !robot);

    let mut future = 0.0;
    for (threat, p) in [(true, s.threat_prob), (false, 1.0 - s.threat_prob)] {
        if p == 0.0 {
            continue;
        }
        let ok = realized(m.w_estimation, s, threat, robot) >= realized(m.w_estimation, s, threat, !robot);
        let (child, k2, f2) = if ok { (2 * node + 2, k + 1.0, f) } else { (2 * node + 1, k, f + 1.0) };
        future += p * policy_value(m, sites, policy, child, step + 1, k2, f2);
    }
    immediate + future
}

/// Optimal Q-values at the root, indexed by recommendation (0 = no robot).
pub fn brute_force_q(m: &OracleModel, sites: &[OracleSite]) -> [f64; 2] {
    assert!(!sites.is_empty() && sites.len() <= 4);
    let nodes = (1usize << sites.len()) - 1;
    let mut best = [f64::NEG_INFINITY; 2];
    for policy in 0..(1u64 << nodes) {
        let v = policy_value(m, sites, policy, 0, 0, 0.0, 0.0);
        let root = (policy & 1) as usize;
        best[root] = best[root].max(v);
    }
    best
}
