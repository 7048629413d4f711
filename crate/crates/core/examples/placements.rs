//! Moves the keys around the apartment and prints how each find is
//! reported to the teammate and to the human.
//!
//! cargo run --example placements

use cogteam::cognition::Knowledge;
use cogteam::gateway::{DialogScript, RunConfig, Simulation};
use cogteam::ontology::OntologyGraph;
use cogteam::team::Message;
use cogteam::tracebus::TraceKind;
use cogteam::world::Scenario;

fn main() {
    let spots = [
        "200,0,240",
        "150,0,500",
        "40,0,500",
        "600,0,450",
        "880,0,400",
        "980,0,20",
    ];
    for spot in spots {
        let g = OntologyGraph::seed();
        let mut scenario = Scenario::seed_scenario(&g);
        scenario.object_mut("keys").expect("seed keys").position = spot.parse().expect("coordinates");
        let mut sim =
            Simulation::new(RunConfig::default(), Knowledge::new(g, scenario), DialogScript::seed()).expect("run");
        let outcome = sim.run().expect("run");
        println!("keys at {spot}: {} at tick {}", outcome.as_str(), sim.tick());
        for e in sim.ledger().events().iter().filter(|e| e.kind == TraceKind::Message) {
            let m = Message::parse_payload(&e.payload).expect("message payload");
            if m.text.contains("found") {
                println!("  {} -> {}: {}", m.sender, m.recipients.join(","), m.text);
            }
        }
    }
}
