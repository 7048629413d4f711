//! Seed data shipped with the crate.

pub const ONTOLOGY: &str = include_str!("../fixtures/ontology.txt");
pub const SEED_SCENARIO: &str = include_str!("../fixtures/seed_scenario.txt");
pub const LEXICON: &str = include_str!("../fixtures/lexicon.txt");
pub const THOUGHTS: &str = include_str!("../fixtures/thoughts.txt");
pub const UTTERANCES: &str = include_str!("../fixtures/utterances.txt");
pub const PLANS: &str = include_str!("../fixtures/plans.txt");
pub const SEED_DIALOG: &str = include_str!("../fixtures/seed_dialog.txt");
