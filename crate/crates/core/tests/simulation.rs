mod support;

use std::collections::BTreeMap;

use cogteam::cognition::{Mutation, Status};
use cogteam::gateway::{EventFilter, Fault, GatewayError, RunConfig, RunOutcome};
use cogteam::team::delivery_counts;
use cogteam::tracebus::{TraceError, TraceKind};
use proptest::prelude::*;

use support::*;

#[test]
fn silent_teammate_leads_to_a_solo_search() {
    let config = RunConfig {
        accept_timeout: 10,
        ..RunConfig::default()
    };
    let mut sim = sim_with(seed_scenario(), config);
    // The proposal goes out at tick 4 and would be heard at tick 5.
    sim.inject(Fault::DropInbox {
        agent: "DRONE".into(),
        tick: 5,
    });
    assert_eq!(run_to_end(&mut sim), RunOutcome::Found);

    let events = sim.ledger().events();
    assert!(events
        .iter()
        .any(|e| e.kind == TraceKind::World && e.payload == "FAULT dropped 1 messages for DRONE"));
    let ugv = thoughts(events, "UGV");
    assert!(ugv.contains(&"DRONE-D never answered, so I'll search every zone I can reach myself."));
    assert!(!ugv.iter().any(|t| t.starts_with("DRONE-D agreed")));
    let propose_failed = events
        .iter()
        .filter(|e| e.agent == "UGV" && e.kind == TraceKind::Agenda)
        .filter_map(|e| e.payload.lines().next())
        .any(|l| {
            l.contains(" @PROPOSE-PLAN ") && Mutation::parse_set(l).is_some_and(|(_, _, to)| to == Status::Failed)
        });
    assert!(propose_failed, "the proposal item should be marked failed");
    // Only ground zones are open to the UGV.
    for v in sim.world().visits() {
        assert_eq!(v.robot, "UGV");
        assert!(!sim.world().scenario().zone(&v.zone).unwrap().aerial);
    }
}

#[test]
fn utterance_after_the_find_is_left_alone() {
    let mut sim = seed_sim();
    assert_eq!(run_to_end(&mut sim), RunOutcome::Found);
    let before = thoughts(sim.ledger().events(), "UGV").len();
    sim.submit_utterance("Thanks, that was quick.").unwrap();
    assert!(!sim.is_settled());
    assert_eq!(sim.run().unwrap(), RunOutcome::Found);

    let after = thoughts(sim.ledger().events(), "UGV");
    let new: Vec<&str> = after[before..].to_vec();
    assert_eq!(new.len(), 2, "{new:?}");
    assert!(new[0].starts_with("I interpreted the input \"Thanks, that was quick.\""));
    assert!(new[1].starts_with("I have nothing to do about @"));
    assert!(sim.world().is_idle());
}

#[test]
fn empty_utterances_are_rejected() {
    let mut sim = seed_sim();
    assert!(matches!(sim.submit_utterance(""), Err(GatewayError::EmptyUtterance)));
    assert!(matches!(
        sim.submit_utterance(" \t "),
        Err(GatewayError::EmptyUtterance)
    ));
    assert!(!sim.has_queued_utterances());
}

#[test]
fn unknown_agents_and_cursors_are_stream_errors() {
    let mut sim = seed_sim();
    sim.step().unwrap();
    let filter = EventFilter {
        agent: Some("ROVER".into()),
        kinds: vec![],
    };
    assert!(matches!(
        sim.stream(&filter, 0),
        Err(GatewayError::Trace(TraceError::UnknownAgent(_)))
    ));
    let past = sim.ledger().last_seq() + 1;
    assert!(matches!(
        sim.stream(&EventFilter::default(), past),
        Err(GatewayError::Trace(TraceError::NoSuchSeq(_)))
    ));
}

#[test]
fn every_delivered_message_is_interpreted_once() {
    for scenario in [seed_scenario(), with_keys(Some(v3(150, 0, 500))), with_keys(None)] {
        let mut sim = sim_with(scenario, RunConfig::default());
        run_to_end(&mut sim);
        let delivered = delivery_counts(sim.fabric().sent());
        let mut tmrs: BTreeMap<String, usize> = BTreeMap::new();
        for e in sim.ledger().events().iter().filter(|e| e.kind == TraceKind::Tmr) {
            *tmrs.entry(e.agent.clone()).or_default() += 1;
        }
        for a in sim.agents() {
            assert_eq!(
                tmrs.get(a.id()).copied().unwrap_or(0),
                delivered.get(a.id()).copied().unwrap_or(0),
                "{}",
                a.id()
            );
        }
    }
}

#[test]
fn agenda_events_account_for_every_item_and_status() {
    let mut sim = seed_sim();
    run_to_end(&mut sim);
    for a in sim.agents() {
        let lines: Vec<&str> = sim
            .ledger()
            .events()
            .iter()
            .filter(|e| e.agent == a.id() && e.kind == TraceKind::Agenda)
            .map(|e| e.payload.lines().next().unwrap())
            .collect();
        let added: Vec<usize> = lines
            .iter()
            .filter_map(|l| l.strip_prefix("ADD "))
            .map(|l| l.split(' ').next().unwrap().parse().unwrap())
            .collect();
        let items = a.agenda().items();
        assert_eq!(added, (1..=items.len()).collect::<Vec<_>>(), "{}", a.id());
        let mut last: BTreeMap<usize, Status> = BTreeMap::new();
        for l in &lines {
            if let Some((id, from, to)) = Mutation::parse_set(l) {
                assert_eq!(last.get(&id).copied().unwrap_or(Status::Pending), from, "{l}");
                last.insert(id, to);
            }
        }
        for item in items {
            assert_eq!(
                last.get(&item.id).copied().unwrap_or(Status::Pending),
                item.status,
                "{} {}",
                a.id(),
                item.label
            );
        }
    }
}

fn filter_strategy() -> impl Strategy<Value = EventFilter> {
    let agent = prop_oneof![
        Just(None),
        Just(Some("UGV".to_string())),
        Just(Some("DRONE".to_string())),
        Just(Some("HUMAN".to_string())),
        Just(Some("WORLD".to_string())),
    ];
    let kinds = proptest::sample::subsequence(TraceKind::ALL.to_vec(), 0..=TraceKind::ALL.len());
    (agent, kinds).prop_map(|(agent, kinds)| EventFilter { agent, kinds })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polling_with_a_cursor_reassembles_the_stream(
        chunks in proptest::collection::vec(1u64..30, 1..12),
        filter in filter_strategy(),
    ) {
        let mut sim = seed_sim();
        let mut cursor = 0;
        let mut polled = Vec::new();
        for n in chunks.iter().cycle() {
            if sim.is_settled() || sim.tick() >= sim.config().ticks {
                break;
            }
            for _ in 0..*n {
                sim.step().unwrap();
            }
            polled.extend(sim.stream(&filter, cursor).unwrap());
            cursor = sim.ledger().last_seq();
        }
        let whole = sim.stream(&filter, 0).unwrap();
        prop_assert_eq!(polled, whole);
    }
}
