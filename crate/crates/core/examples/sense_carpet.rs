//! Senses from a pose on the carpet and prints the visual meaning
//! representation the UGV builds.
//!
//! cargo run --example sense_carpet

use std::sync::Arc;

use cogteam::cognition::{Agent, Knowledge, Output};
use cogteam::geom::Fixed;
use cogteam::world::World;

fn main() {
    let kb = Arc::new(Knowledge::seed());
    let mut world = World::new(kb.scenario.clone());
    world
        .set_pose("UGV", "555.75,3.30,53.83".parse().unwrap(), Fixed(17236))
        .expect("UGV exists");
    let report = world.sense("UGV").expect("UGV exists");
    for d in &report.detections {
        println!("detected {} ({}) at {}", d.object, d.concept, d.position);
    }
    let mut ugv = Agent::new(kb, "UGV", 50);
    for o in ugv.perceive(&report, 1) {
        if let Output::Vmr(doc) = o {
            println!("\n{}", doc.render());
        }
    }
}
