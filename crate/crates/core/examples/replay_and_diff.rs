//! Writes a transcript, reads it back, prints the leader's panels as they
//! stood after its first question, and diffs two runs with different
//! message latency.
//!
//! cargo run --example replay_and_diff

use cogteam::cognition::Knowledge;
use cogteam::gateway::{DialogScript, RunConfig, Simulation};
use cogteam::ontology::OntologyGraph;
use cogteam::tracebus::{diff, validate, PanelKind, TraceLedger};

fn run(latency: u64) -> TraceLedger {
    let config = RunConfig {
        latency,
        ..RunConfig::default()
    };
    let mut sim = Simulation::new(config, Knowledge::seed(), DialogScript::seed()).expect("seed run");
    sim.run().expect("run");
    sim.into_ledger()
}

fn main() {
    let path = std::env::temp_dir().join("cogteam-example.transcript");
    run(1).persist(&path).expect("write transcript");
    let ledger = TraceLedger::load(&path).expect("read transcript");
    println!("{} events in {}", ledger.len(), path.display());

    let asked = ledger
        .events()
        .iter()
        .find(|e| e.agent == "UGV" && e.payload.ends_with("Can you describe the keys?"))
        .expect("the leader asks about the keys")
        .seq;
    for kind in [PanelKind::Thoughts, PanelKind::AgendaFiltered, PanelKind::Agenda] {
        let p = ledger.panel("UGV", kind, 3, Some(asked)).expect("panel");
        println!("\n--- seq {asked} ---\n{}", p.render());
    }

    let findings = validate(&ledger, &OntologyGraph::seed());
    println!("\nvalidation findings: {}", findings.len());
    match diff(&ledger, &run(2)) {
        None => println!("latency 1 and 2 give the same transcript"),
        Some(d) => println!("latency 1 vs 2: {d}"),
    }
}
