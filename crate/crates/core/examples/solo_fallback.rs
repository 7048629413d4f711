//! Drops the proposal before the drone hears it. The leader gives up
//! waiting and searches every ground zone by itself.
//!
//! cargo run --example solo_fallback

use cogteam::cognition::Knowledge;
use cogteam::gateway::{DialogScript, Fault, RunConfig, Simulation};
use cogteam::tracebus::TraceKind;

fn main() {
    let config = RunConfig {
        accept_timeout: 10,
        ..RunConfig::default()
    };
    let mut sim = Simulation::new(config, Knowledge::seed(), DialogScript::seed()).expect("seed run");
    sim.inject(Fault::DropInbox {
        agent: "DRONE".into(),
        tick: 5,
    });
    let outcome = sim.run().expect("run");
    for e in sim.ledger().events() {
        let shown = (e.agent == "UGV" && e.kind == TraceKind::Thought)
            || (e.kind == TraceKind::World && (e.payload.starts_with("FAULT") || e.payload.contains("\nJOB")));
        if shown {
            println!("t{:<3} {:<5} {}", e.tick, e.agent, e.payload.replace('\n', " | "));
        }
    }
    println!("{} at tick {}", outcome.as_str(), sim.tick());
}
