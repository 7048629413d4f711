//! A two-robot search team that records what it understands and decides
//! as a readable trace.

pub mod cognition;
pub mod fixtures;
pub mod frames;
pub mod gateway;
pub mod geom;
pub mod interpreter;
pub mod ontology;
pub mod team;
pub mod tracebus;
pub mod world;
