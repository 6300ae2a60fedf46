//! Sessions survive a restart by replaying their event logs.

use std::io::Write;

use trustkit::sim::replay_transcript;
use trustkit_service::{AppState, CreateSession, EventStore, Phase, ServiceConfig, Session};

fn config() -> ServiceConfig {
    let mut cfg = ServiceConfig::default();
    cfg.mission.n_sites = 6;
    cfg.fit_mode = trustkit::TrustFitMode::Online;
    cfg
}

fn play(state: &AppState, id: &str, sites: std::ops::Range<usize>) {
    for site in sites {
        state.with_session(id, |s| s.state_view()).unwrap();
        state.with_session(id, |s| s.submit_action((site % 2) as i64)).unwrap();
        state.with_session(id, |s| s.submit_trust(20 + 10 * site as i64)).unwrap();
    }
}

#[test]
fn restart_mid_mission_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let req = CreateSession { strategy: Some("adaptive_learner".into()), mission_seed: Some(42), ..Default::default() };

    let first = AppState::new(config(), EventStore::open(dir.path()).unwrap()).unwrap();
    let id = first.create_session(req.clone()).unwrap().id;
    first.with_session(&id, |s| s.set_preference(Some(0.6))).unwrap();
    play(&first, &id, 0..3);
    first.with_session(&id, |s| s.submit_action(1)).unwrap();
    drop(first);

    let second = AppState::new(config(), EventStore::open(dir.path()).unwrap()).unwrap();
    assert_eq!(second.session_ids(), vec![id.clone()]);
    assert_eq!(second.with_session(&id, |s| Ok(s.phase())).unwrap(), Phase::AwaitingTrust);
    second.with_session(&id, |s| s.submit_trust(50)).unwrap();
    play(&second, &id, 4..6);
    let recovered = second.with_session(&id, |s| Ok(s.clone())).unwrap();
    assert_eq!(recovered.phase(), Phase::Complete);

    // Same commands, no restart.
    let reference = AppState::new(config(), EventStore::ephemeral()).unwrap();
    let rid = reference.create_session(req).unwrap().id;
    reference.with_session(&rid, |s| s.set_preference(Some(0.6))).unwrap();
    play(&reference, &rid, 0..3);
    reference.with_session(&rid, |s| s.submit_action(1)).unwrap();
    reference.with_session(&rid, |s| s.submit_trust(50)).unwrap();
    play(&reference, &rid, 4..6);
    let uninterrupted = reference.with_session(&rid, |s| Ok(s.clone())).unwrap();

    assert_eq!(recovered.transcript(), uninterrupted.transcript());
    assert_eq!(recovered.engine_trace(), uninterrupted.engine_trace());
    assert_eq!(recovered.agent(), uninterrupted.agent());
    let trace = replay_transcript(recovered.mission(), recovered.agent().config(), recovered.transcript()).unwrap();
    assert_eq!(trace, recovered.engine_trace());
}

#[test]
fn torn_write_loses_only_the_last_event() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(config(), EventStore::open(dir.path()).unwrap()).unwrap();
    let id = state
        .create_session(CreateSession { strategy: Some("non_learner".into()), ..Default::default() })
        .unwrap()
        .id;
    state.with_session(&id, |s| s.set_preference(None)).unwrap();
    state.with_session(&id, |s| s.submit_action(0)).unwrap();
    let before = state.with_session(&id, |s| Ok(s.clone())).unwrap();
    drop(state);

    let path = dir.path().join(format!("{id}.jsonl"));
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"event\":\"trust\",\"sli").unwrap();

    let state = AppState::new(config(), EventStore::open(dir.path()).unwrap()).unwrap();
    let after = state.with_session(&id, |s| Ok(s.clone())).unwrap();
    assert_eq!(after, before);
    assert_eq!(Session::replay(after.events()).unwrap(), before);
}

#[test]
fn rejected_commands_are_not_logged() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(config(), EventStore::open(dir.path()).unwrap()).unwrap();
    let id = state
        .create_session(CreateSession { strategy: Some("non_learner".into()), ..Default::default() })
        .unwrap()
        .id;
    assert!(state.with_session(&id, |s| s.submit_action(1)).is_err());
    assert!(state.with_session(&id, |s| s.set_preference(Some(2.0))).is_err());
    let text = std::fs::read_to_string(dir.path().join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(text.lines().count(), 1);
}
