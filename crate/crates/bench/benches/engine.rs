use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trustkit::behavior::Kappa;
use trustkit::domain::{generate_mission, Costs, MissionConfig};
use trustkit::irl::{uniform_prior, update_belief, SiteContext};
use trustkit::planner::{value_iteration, LookaheadSite, PlannerState, StrategyConfig, StrategyKind};
use trustkit::sim::{run_session, FeedbackMode};
use trustkit::{Action, AgentConfig, RewardWeights, SimulatedHuman, TrustFitMode, TrustParams};

fn planner(c: &mut Criterion) {
    let mission = generate_mission(1, &MissionConfig::default()).unwrap();
    let strategy = StrategyConfig::new(StrategyKind::AdaptiveLearner);
    let roles = strategy.roles(&uniform_prior(100).unwrap());
    let params = TrustParams::default();
    let mut group = c.benchmark_group("value_iteration");
    for horizon in [5usize, 10, 20, 40] {
        let sites: Vec<LookaheadSite> = mission.sites[..horizon]
            .iter()
            .map(|s| LookaheadSite { threat_prob: s.prior_threat, costs: s.costs() })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(horizon), &sites, |b, sites| {
            b.iter(|| {
                value_iteration(&roles, &params, Kappa::default(), PlannerState { completed: 0, successes: 0 }, black_box(sites))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn belief(c: &mut Criterion) {
    let prior = uniform_prior(100).unwrap();
    let ctx = SiteContext { threat_prob: 0.4, costs: Costs::new(10.0, 2.0).unwrap(), kappa: Kappa::new(2.0).unwrap() };
    c.bench_function("belief_update_100", |b| {
        b.iter(|| update_belief(black_box(&prior), Action::NoRobot, Action::UseRobot, 0.5, &ctx))
    });
}

fn session(c: &mut Criterion) {
    let mission = generate_mission(2, &MissionConfig::default()).unwrap();
    let human = SimulatedHuman {
        true_weights: RewardWeights::from_health(0.7).unwrap(),
        trust_params: TrustParams::default(),
        kappa: Kappa::new(2.0).unwrap(),
        feedback_mode: FeedbackMode::Mean,
    };
    let mut group = c.benchmark_group("run_session_40");
    for (name, fit_mode) in [("fixed", TrustFitMode::Fixed), ("online", TrustFitMode::Online)] {
        let mut agent = AgentConfig::new(StrategyConfig::new(StrategyKind::AdaptiveLearner));
        agent.fit_mode = fit_mode;
        group.bench_function(name, |b| b.iter(|| run_session(&human, &agent, black_box(&mission), 7, 3.0).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, planner, belief, session);
criterion_main!(benches);
