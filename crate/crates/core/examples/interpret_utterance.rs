//! Hands utterances to a fresh leader and prints the meaning
//! representation and thoughts each one produces.
//!
//! cargo run --example interpret_utterance -- "Can you look for my wallet?"

use std::sync::Arc;

use cogteam::cognition::{Agent, Knowledge, Output};
use cogteam::team::Message;

const DIALOG: [&str; 3] = [
    "I think I left my keys at home. Can you look around for them?",
    "They are on a red keychain with a small flashlight.",
    "I used them last night to open the front door, but they could be anywhere.",
];

fn main() {
    let typed: Vec<String> = std::env::args().skip(1).collect();
    let lines: Vec<&str> = if typed.is_empty() {
        DIALOG.to_vec()
    } else {
        typed.iter().map(String::as_str).collect()
    };
    let mut ugv = Agent::new(Arc::new(Knowledge::seed()), "UGV", 50);
    for (i, text) in lines.into_iter().enumerate() {
        let tick = i as u64 + 1;
        let msg = Message {
            id: tick,
            sender: "HUMAN".into(),
            recipients: vec!["UGV".into()],
            sent: tick - 1,
            deliver_at: tick,
            text: text.into(),
        };
        println!("HUMAN: {text}");
        let mut out = ugv.hear(&msg, tick);
        ugv.advance_agenda(tick, &mut out);
        for o in out {
            match o {
                Output::Tmr(doc) => println!("{}\n", doc.render()),
                Output::Thought(t) => println!("  thinks: {t}"),
                Output::Say { to, text } => println!("  says to {}: {text}", to.join(",")),
                _ => {}
            }
        }
        println!();
    }
}
