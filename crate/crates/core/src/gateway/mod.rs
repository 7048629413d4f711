//! Running the team: the tick loop with its dialog input, plus the HTTP
//! and WebSocket front end.

mod script;
mod server;
mod sim;
mod wire;

pub use script::{DialogScript, ScriptCursor, ScriptEntry, ScriptError, Trigger};
pub use server::{answer, router, serve, HandleError, RunHandle, RunState, ServerState, StartRequest, StatusReply};
pub use sim::{
    EventFilter, Fault, GatewayError, RunConfig, RunOutcome, Simulation, DEFAULT_ACCEPT_TIMEOUT, DEFAULT_LATENCY,
    DEFAULT_TICKS,
};
pub use wire::{Record, RecordKind, WireError, WIRE_VERSION};
