//! Pilot calibration runs for the statistical acceptance checks.
//!
//! `cargo run --release -p trustkit --example pilot`

use std::time::Instant;

use trustkit::behavior::Kappa;
use trustkit::domain::{generate_mission, MissionConfig, RewardWeights};
use trustkit::planner::{AgentConfig, StrategyConfig, StrategyKind};
use trustkit::seed::derive_seed;
use trustkit::sim::{run_experiment, run_session, DistSpec, ExperimentConfig, Metric, SimulatedHuman};
use trustkit::TrustParams;

fn irl_consistency(truth: f64, runs: u64) -> f64 {
    let kappa = Kappa::new(5.0).unwrap();
    let human = SimulatedHuman {
        true_weights: RewardWeights::from_health(truth).unwrap(),
        trust_params: TrustParams::default(),
        kappa,
        feedback_mode: Default::default(),
    };
    let mut strategy = StrategyConfig::new(StrategyKind::AdaptiveLearner);
    strategy.kappa_assumed = kappa;
    let agent = AgentConfig::new(strategy);
    let hits = (0..runs)
        .filter(|&s| {
            let mission = generate_mission(derive_seed(s, &[10]), &MissionConfig::default()).unwrap();
            let run = run_session(&human, &agent, &mission, derive_seed(s, &[11]), 3.0).unwrap();
            (run.records.last().unwrap().belief_mean - truth).abs() < 0.15
        })
        .count();
    hits as f64 / runs as f64
}

fn main() {
    let t = Instant::now();
    for w in [0.2, 0.5, 0.8] {
        println!("irl consistency w*={w}: pass rate {:.3}", irl_consistency(w, 500));
    }
    println!("irl pilot took {:?}", t.elapsed());

    let t = Instant::now();
    let cfg = ExperimentConfig { n_humans: 1000, seed: 2024, ..ExperimentConfig::default() };
    let table = run_experiment(&cfg, None).unwrap();
    println!("experiment took {:?}", t.elapsed());
    for s in table.summary() {
        if matches!(s.metric, Metric::Agreements | Metric::AverageTrust | Metric::EndTrust) {
            println!("{:>22} {:>14} {:.4} ± {:.4}", s.strategy.as_str(), s.metric.name(), s.mean, s.standard_error);
        }
    }
    for m in [Metric::Agreements, Metric::AverageTrust, Metric::EndTrust] {
        let r = table.paired_comparison(m, StrategyKind::AdaptiveLearner, StrategyKind::NonLearner).unwrap();
        println!("adaptive - non_learner {}: diff {:.4} t {:.2} p {:.3e}", m.name(), r.mean_diff, r.t, r.p_value);
        let r = table.paired_comparison(m, StrategyKind::AdaptiveLearner, StrategyKind::NonAdaptiveLearner).unwrap();
        println!("adaptive - non_adaptive {}: diff {:.4} t {:.2} p {:.3e}", m.name(), r.mean_diff, r.t, r.p_value);
    }

    let mut null = ExperimentConfig { n_humans: 500, seed: 2024, pin_belief_to_truth: true, ..ExperimentConfig::default() };
    null.population.health_weight = DistSpec::Fixed { value: 0.5 };
    let table = run_experiment(&null, None).unwrap();
    for m in [Metric::Agreements, Metric::AverageTrust, Metric::EndTrust] {
        for (a, b) in [
            (StrategyKind::AdaptiveLearner, StrategyKind::NonLearner),
            (StrategyKind::AdaptiveLearner, StrategyKind::NonAdaptiveLearner),
            (StrategyKind::NonAdaptiveLearner, StrategyKind::NonLearner),
        ] {
            let r = table.paired_comparison(m, a, b).unwrap();
            println!("null {a} - {b} {}: diff {:.4} p {:.3}", m.name(), r.mean_diff, r.p_value);
        }
    }
}
