//! Runs the seed apartment with the seed dialog and prints what was said
//! and thought, one line each.
//!
//! cargo run --example seed_run [-- --all]

use cogteam::cognition::Knowledge;
use cogteam::gateway::{DialogScript, RunConfig, Simulation};
use cogteam::team::Message;
use cogteam::tracebus::TraceKind;

fn main() {
    let all = std::env::args().any(|a| a == "--all");
    let mut sim = Simulation::new(RunConfig::default(), Knowledge::seed(), DialogScript::seed()).expect("seed run");
    let outcome = sim.run().expect("run");
    for e in sim.ledger().events() {
        if all {
            println!("{}\n{}", e.header(), e.payload);
            continue;
        }
        match e.kind {
            TraceKind::Message => {
                let m = Message::parse_payload(&e.payload).expect("message payload");
                println!(
                    "t{:<3} {:>5} -> {:<11} {}",
                    e.tick,
                    m.sender,
                    m.recipients.join(","),
                    m.text
                );
            }
            TraceKind::Thought => println!("t{:<3} {:>5}    thinks    {}", e.tick, e.agent, e.payload),
            _ => {}
        }
    }
    println!(
        "{} at tick {} after {} events",
        outcome.as_str(),
        sim.tick(),
        sim.ledger().len()
    );
}
