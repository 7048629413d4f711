//! The tick loop.
//!
//! Tick 0 loads the scenario. Every later tick runs four phases:
//! SENSE (world moves, robots perceive), COGNIZE (agents in roster order
//! hear and deliberate), ACT (intents reach the world and the fabric)
//! and DELIVER (human utterances, scripted or typed, are sent).

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::cognition::{Agent, Knowledge, Outcome, Output};
use crate::ontology::OntologyGraph;
use crate::team::{Fabric, Role, TeamError};
use crate::tracebus::{
    Phase, TraceError, TraceEvent, TraceHeader, TraceKind, TraceLedger, DEFAULT_RECENT, WORLD_AGENT,
};
use crate::world::{load_scenario, RobotRole, Scenario, ScenarioError, World};

use super::script::{DialogScript, ScriptCursor, ScriptError};

pub const DEFAULT_TICKS: u64 = 400;
pub const DEFAULT_LATENCY: u64 = 1;
pub const DEFAULT_ACCEPT_TIMEOUT: u64 = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    /// `None` runs the built-in seed apartment.
    pub scenario: Option<PathBuf>,
    /// `None` runs without scripted dialog.
    pub script: Option<PathBuf>,
    pub seed: u64,
    pub ticks: u64,
    pub recent: usize,
    pub latency: u64,
    pub accept_timeout: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            script: None,
            seed: 0,
            ticks: DEFAULT_TICKS,
            recent: DEFAULT_RECENT,
            latency: DEFAULT_LATENCY,
            accept_timeout: DEFAULT_ACCEPT_TIMEOUT,
        }
    }
}

impl RunConfig {
    /// Settings echoed into the transcript header. The script path is left
    /// out so a typed run and a scripted run can match byte for byte.
    pub fn header(&self, scenario: &Scenario) -> TraceHeader {
        let mut h = TraceHeader::default();
        h.set("scenario", scenario.name.clone());
        h.set("seed", self.seed.to_string());
        h.set("ticks", self.ticks.to_string());
        h.set("recent", self.recent.to_string());
        h.set("latency", self.latency.to_string());
        h.set("accept-timeout", self.accept_timeout.to_string());
        for r in &scenario.robots {
            h.set(&format!("agent.{}", r.id), r.header());
        }
        h
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Team(#[from] TeamError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("utterance is empty")]
    EmptyUtterance,
    #[error("scenario has no leader")]
    NoLeader,
}

fn read(path: &PathBuf) -> Result<String, GatewayError> {
    std::fs::read_to_string(path).map_err(|e| GatewayError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Found,
    NotFound,
    Budget,
}

impl RunOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            RunOutcome::Found => "FOUND",
            RunOutcome::NotFound => "NOT-FOUND",
            RunOutcome::Budget => "BUDGET",
        }
    }
}

/// Injected faults, for failure-path runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    /// Drop everything waiting for `agent` at the start of `tick`.
    DropInbox { agent: String, tick: u64 },
}

/// Which events a stream returns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventFilter {
    pub agent: Option<String>,
    pub kinds: Vec<TraceKind>,
}

impl EventFilter {
    pub fn matches(&self, e: &TraceEvent) -> bool {
        self.agent.as_ref().is_none_or(|a| &e.agent == a) && (self.kinds.is_empty() || self.kinds.contains(&e.kind))
    }
}

pub struct Simulation {
    config: RunConfig,
    kb: Arc<Knowledge>,
    world: World,
    fabric: Fabric,
    agents: Vec<Agent>,
    ledger: TraceLedger,
    script: DialogScript,
    cursor: ScriptCursor,
    typed: VecDeque<String>,
    faults: Vec<Fault>,
    tick: u64,
}

impl Simulation {
    /// Reads the scenario and script named in `config`; without a script
    /// the human says nothing unless utterances are submitted.
    pub fn from_config(config: RunConfig) -> Result<Self, GatewayError> {
        Self::from_config_or(config, DialogScript::default())
    }

    /// As [`Simulation::from_config`], using `fallback` when no script is named.
    pub fn from_config_or(config: RunConfig, fallback: DialogScript) -> Result<Self, GatewayError> {
        let g = OntologyGraph::seed();
        let scenario = match &config.scenario {
            Some(p) => load_scenario(&read(p)?, &g)?,
            None => Scenario::seed_scenario(&g),
        };
        let script = match &config.script {
            Some(p) => DialogScript::parse(&read(p)?)?,
            None => fallback,
        };
        Self::new(config, Knowledge::new(g, scenario), script)
    }

    pub fn new(config: RunConfig, kb: Knowledge, script: DialogScript) -> Result<Self, GatewayError> {
        let kb = Arc::new(kb);
        let s = &kb.scenario;
        if !s.robots.iter().any(|r| r.role == RobotRole::Leader) {
            return Err(GatewayError::NoLeader);
        }
        let mut members = vec![(s.human.id.as_str(), Role::Human)];
        for r in &s.robots {
            let role = match r.role {
                RobotRole::Leader => Role::Leader,
                RobotRole::Subordinate => Role::Subordinate,
            };
            members.push((r.id.as_str(), role));
        }
        let fabric = Fabric::new(&members, config.latency)?;
        let agents = s
            .robots
            .iter()
            .map(|r| Agent::new(kb.clone(), &r.id, config.accept_timeout))
            .collect();
        let mut ledger = TraceLedger::new(config.header(s));
        let world = World::new(s.clone());
        ledger.record(
            WORLD_AGENT,
            0,
            Phase::Setup,
            TraceKind::World,
            format!("LOAD {}\n{}", s.name, world.summary()),
        )?;
        Ok(Simulation {
            config,
            world,
            fabric,
            agents,
            ledger,
            script,
            cursor: ScriptCursor::default(),
            typed: VecDeque::new(),
            faults: Vec::new(),
            tick: 0,
            kb,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn ledger(&self) -> &TraceLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> TraceLedger {
        self.ledger
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id() == id)
    }

    pub fn knowledge(&self) -> &Knowledge {
        &self.kb
    }

    pub fn inject(&mut self, fault: Fault) {
        self.faults.push(fault);
    }

    fn leader(&self) -> &Agent {
        self.agents
            .iter()
            .find(|a| a.role() == RobotRole::Leader)
            .expect("checked at construction")
    }

    /// Queues a human utterance for the next DELIVER phase and returns
    /// that phase's tick.
    pub fn submit_utterance(&mut self, text: &str) -> Result<u64, GatewayError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(GatewayError::EmptyUtterance);
        }
        self.typed.push_back(text.to_string());
        Ok(self.tick + 1)
    }

    pub fn has_queued_utterances(&self) -> bool {
        !self.typed.is_empty()
    }

    /// Events after `cursor` that pass `filter`.
    pub fn stream(&self, filter: &EventFilter, cursor: u64) -> Result<Vec<TraceEvent>, GatewayError> {
        if let Some(a) = &filter.agent {
            let known = a == WORLD_AGENT || *a == self.kb.scenario.human.id || self.agent(a).is_some();
            if !known {
                return Err(TraceError::UnknownAgent(a.clone()).into());
            }
        }
        Ok(self
            .ledger
            .since(cursor)?
            .iter()
            .filter(|e| filter.matches(e))
            .cloned()
            .collect())
    }

    /// The leader's plan has closed and nothing is left in flight.
    pub fn is_settled(&self) -> bool {
        self.leader().outcome().is_some() && self.fabric.is_quiet() && self.world.is_idle() && self.typed.is_empty()
    }

    pub fn outcome(&self) -> Option<RunOutcome> {
        match self.leader().outcome()? {
            Outcome::Found => Some(RunOutcome::Found),
            Outcome::NotFound => Some(RunOutcome::NotFound),
        }
    }

    /// Steps until settled or out of ticks.
    pub fn run(&mut self) -> Result<RunOutcome, GatewayError> {
        loop {
            if self.is_settled() {
                return Ok(self.outcome().expect("settled runs have an outcome"));
            }
            if self.tick >= self.config.ticks {
                return Ok(RunOutcome::Budget);
            }
            self.step()?;
        }
    }

    /// Runs one tick through all four phases.
    pub fn step(&mut self) -> Result<(), GatewayError> {
        self.tick += 1;
        let t = self.tick;

        // SENSE
        for f in std::mem::take(&mut self.faults) {
            match &f {
                Fault::DropInbox { agent, tick } if *tick == t => {
                    let n = self.fabric.clear_inbox(agent);
                    self.ledger.record(
                        WORLD_AGENT,
                        t,
                        Phase::Sense,
                        TraceKind::World,
                        format!("FAULT dropped {n} messages for {agent}"),
                    )?;
                }
                _ => self.faults.push(f),
            }
        }
        let stepped = self.world.step(t);
        if !stepped.is_quiet() {
            let mut text = self.world.summary();
            for j in &stepped.completed {
                text.push_str(&format!("\nJOB {} {} {}", j.robot, j.zone, j.status));
            }
            self.ledger
                .record(WORLD_AGENT, t, Phase::Sense, TraceKind::World, text)?;
        }
        for report in &stepped.reports {
            let Some(i) = self.agents.iter().position(|a| a.id() == report.robot) else {
                continue;
            };
            let outs = self.agents[i].perceive(report, t);
            let id = self.agents[i].id().to_string();
            for o in outs {
                self.trace_output(&id, Phase::Sense, o, &mut Vec::new())?;
            }
        }

        // COGNIZE
        let mut intents = Vec::new();
        for i in 0..self.agents.len() {
            let id = self.agents[i].id().to_string();
            let inbox = self.fabric.drain_inbox(&id, t)?;
            let outs = self.agents[i].cognize(t, &inbox, &stepped.completed);
            let mut mine = Vec::new();
            for o in outs {
                self.trace_output(&id, Phase::Cognize, o, &mut mine)?;
            }
            intents.extend(mine.into_iter().map(|o| (id.clone(), o)));
        }

        // ACT
        for (id, o) in intents {
            match o {
                Output::StartZone(zone) => {
                    if let Err(e) = self.world.start_zone_search(&id, &zone) {
                        self.ledger
                            .record(WORLD_AGENT, t, Phase::Act, TraceKind::World, format!("ERROR {e}"))?;
                    }
                }
                Output::StopSearch { found } => match self.world.cancel(&id, found) {
                    Ok(Some(j)) => {
                        let text = format!("JOB {} {} {}", j.robot, j.zone, j.status);
                        self.ledger.record(WORLD_AGENT, t, Phase::Act, TraceKind::World, text)?;
                    }
                    Ok(None) => {}
                    Err(e) => {
                        self.ledger
                            .record(WORLD_AGENT, t, Phase::Act, TraceKind::World, format!("ERROR {e}"))?;
                    }
                },
                Output::Say { to, text } => {
                    let to: Vec<&str> = to.iter().map(String::as_str).collect();
                    let m = self.fabric.send(&id, &to, &text, t)?;
                    self.ledger
                        .record(&id, t, Phase::Act, TraceKind::Message, m.payload())?;
                }
                _ => unreachable!("only intents are deferred"),
            }
        }

        // DELIVER. The human reads everything addressed to them; the
        // MESSAGE events are the record of it.
        let human = self.kb.scenario.human.id.clone();
        self.fabric.drain_inbox(&human, t)?;
        let mut said: Vec<String> = self
            .cursor
            .due(&self.script, t, self.ledger.events())
            .into_iter()
            .map(|e| e.text.clone())
            .collect();
        said.extend(self.typed.drain(..));
        let leader = self.leader().id().to_string();
        for text in said {
            let m = self.fabric.send(&human, &[leader.as_str()], &text, t)?;
            self.ledger
                .record(&human, t, Phase::Deliver, TraceKind::Message, m.payload())?;
        }
        Ok(())
    }

    /// Records trace outputs now; collects intents for ACT.
    fn trace_output(
        &mut self,
        agent: &str,
        phase: Phase,
        o: Output,
        intents: &mut Vec<Output>,
    ) -> Result<(), GatewayError> {
        let t = self.tick;
        let (kind, payload) = match o {
            Output::Tmr(d) => (TraceKind::Tmr, d.render()),
            Output::Vmr(d) => (TraceKind::Vmr, d.render()),
            Output::Thought(s) => (TraceKind::Thought, s),
            Output::Agenda(s) => (TraceKind::Agenda, s),
            intent => {
                intents.push(intent);
                return Ok(());
            }
        };
        self.ledger.record(agent, t, phase, kind, payload)?;
        Ok(())
    }
}
