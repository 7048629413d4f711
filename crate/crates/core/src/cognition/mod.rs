//! The strategic layer: agenda, plans, precondition dialog, collaborative
//! execution and reporting.

mod agenda;
mod agent;
mod knowledge;
mod plans;

pub use agenda::{filter_snapshot, Agenda, AgendaError, AgendaItem, Mutation, Status};
pub use agent::{Agent, Knowledge, Outcome, Output};
pub use knowledge::{
    check_preconditions, decompose_search, endpoint_key, last_seen_at, seed_memory, Assignment, DecomposeError,
    Searcher, SeededMemory,
};
pub use plans::{Plan, PlanBody, PlanError, PlanLibrary, KNOWN_PRECONDITIONS};
