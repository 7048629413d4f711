#![allow(dead_code)]

use cogteam::cognition::Knowledge;
use cogteam::gateway::{DialogScript, RunConfig, RunOutcome, Simulation};
use cogteam::geom::Vec3;
use cogteam::ontology::OntologyGraph;
use cogteam::team::Message;
use cogteam::tracebus::{TraceEvent, TraceKind};
use cogteam::world::Scenario;

pub const REQUEST: &str = "I think I left my keys at home. Can you look around for them?";
pub const FEATURES: &str = "They are on a red keychain with a small flashlight.";
pub const UNLOCK: &str = "I used them last night to open the front door, but they could be anywhere.";

pub fn seed_scenario() -> Scenario {
    Scenario::seed_scenario(&OntologyGraph::seed())
}

pub fn knowledge_for(scenario: Scenario) -> Knowledge {
    Knowledge::new(OntologyGraph::seed(), scenario)
}

/// The seed scenario with the keys moved, or removed when `at` is None.
pub fn with_keys(at: Option<Vec3>) -> Scenario {
    let mut s = seed_scenario();
    match at {
        Some(p) => s.object_mut("keys").expect("seed has keys").position = p,
        None => s.objects.retain(|o| o.id != "keys"),
    }
    s
}

pub fn sim_with(scenario: Scenario, config: RunConfig) -> Simulation {
    Simulation::new(config, knowledge_for(scenario), DialogScript::seed()).expect("simulation builds")
}

pub fn seed_sim() -> Simulation {
    Simulation::new(RunConfig::default(), Knowledge::seed(), DialogScript::seed()).expect("seed simulation builds")
}

pub fn run_to_end(sim: &mut Simulation) -> RunOutcome {
    sim.run().expect("run completes")
}

pub fn messages(events: &[TraceEvent]) -> Vec<(u64, u64, Message)> {
    events
        .iter()
        .filter(|e| e.kind == TraceKind::Message)
        .map(|e| {
            (
                e.seq,
                e.tick,
                Message::parse_payload(&e.payload).expect("message payload parses"),
            )
        })
        .collect()
}

pub fn thoughts<'a>(events: &'a [TraceEvent], agent: &str) -> Vec<&'a str> {
    events
        .iter()
        .filter(|e| e.agent == agent && e.kind == TraceKind::Thought)
        .map(|e| e.payload.as_str())
        .collect()
}

/// Index of the first expected line missing from `have` when read in order.
pub fn missing_in_order(have: &[&str], want: &[&str]) -> Option<usize> {
    let mut it = have.iter();
    for (i, w) in want.iter().enumerate() {
        if !it.any(|h| h == w) {
            return Some(i);
        }
    }
    None
}

pub fn v3(x: i64, y: i64, z: i64) -> Vec3 {
    format!("{x},{y},{z}").parse().expect("integer coordinates parse")
}
