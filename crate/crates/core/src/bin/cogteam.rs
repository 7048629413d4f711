//! Command line front end.
//!
//! Exit codes: `run` returns 0 for FOUND, 3 for NOT-FOUND, 4 for BUDGET;
//! `diff` returns 0 when the transcripts match and 1 when they differ;
//! `validate` returns 0 when clean and 1 with findings. Any error is 2.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use cogteam::gateway::{
    DialogScript, RunConfig, RunOutcome, ServerState, Simulation, DEFAULT_ACCEPT_TIMEOUT, DEFAULT_LATENCY,
    DEFAULT_TICKS,
};
use cogteam::ontology::OntologyGraph;
use cogteam::tracebus::{diff, validate, PanelKind, TraceLedger, DEFAULT_RECENT};

#[derive(Parser)]
#[command(name = "cogteam", about = "Run, replay and inspect robot team searches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Scenario file; the built-in seed apartment when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Dialog script for the human side; `run` falls back to the seed
    /// dialog, `serve` to none.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tick budget.
    #[arg(long, default_value_t = DEFAULT_TICKS)]
    ticks: u64,
    /// Documents shown by the recent-TMR and recent-VMR panels.
    #[arg(long, default_value_t = DEFAULT_RECENT)]
    recent: usize,
    /// Message latency in ticks.
    #[arg(long, default_value_t = DEFAULT_LATENCY)]
    latency: u64,
    /// Ticks the leader waits for an answer to its proposal.
    #[arg(long, default_value_t = DEFAULT_ACCEPT_TIMEOUT)]
    accept_timeout: u64,
}

impl RunFlags {
    fn config(self) -> RunConfig {
        RunConfig {
            scenario: self.scenario,
            script: self.script,
            seed: self.seed,
            ticks: self.ticks,
            recent: self.recent,
            latency: self.latency,
            accept_timeout: self.accept_timeout,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run headless and write the transcript.
    Run {
        #[command(flatten)]
        flags: RunFlags,
        /// Transcript destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print panels from a transcript as they stood at a given seq.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        /// Defaults to the last event.
        #[arg(long)]
        at_seq: Option<u64>,
        /// Panel kind, such as THOUGHTS or AGENDA-FILTERED; all when omitted.
        #[arg(long)]
        panel: Option<String>,
        /// Agent id; all agents when omitted.
        #[arg(long)]
        agent: Option<String>,
        #[arg(long, default_value_t = DEFAULT_RECENT)]
        recent: usize,
    },
    /// Report the first place two transcripts differ.
    Diff { left: PathBuf, right: PathBuf },
    /// Check every document in a transcript against the seed ontology.
    Validate { transcript: PathBuf },
    /// Serve the HTTP and WebSocket API.
    Serve {
        #[command(flatten)]
        flags: RunFlags,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Milliseconds between ticks.
        #[arg(long, default_value_t = 100)]
        interval_ms: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run { flags, out } => {
            let mut sim = Simulation::from_config_or(flags.config(), DialogScript::seed())?;
            let outcome = sim.run()?;
            if let Some(path) = out {
                sim.ledger().persist(&path)?;
            }
            println!("{} tick={} events={}", outcome.as_str(), sim.tick(), sim.ledger().len());
            Ok(match outcome {
                RunOutcome::Found => 0,
                RunOutcome::NotFound => 3,
                RunOutcome::Budget => 4,
            })
        }
        Command::Replay {
            transcript,
            at_seq,
            panel,
            agent,
            recent,
        } => {
            let ledger = TraceLedger::load(&transcript)?;
            let kinds = match panel {
                Some(p) => vec![p.parse::<PanelKind>()?],
                None => PanelKind::ALL.to_vec(),
            };
            let agents: Vec<String> = match agent {
                Some(a) => vec![a],
                None => ledger.header.agents().iter().map(|(id, _)| id.to_string()).collect(),
            };
            let at = at_seq.unwrap_or(ledger.last_seq());
            let mut first = true;
            for a in &agents {
                for k in &kinds {
                    if !first {
                        println!();
                    }
                    first = false;
                    println!("{}", ledger.panel(a, *k, recent, Some(at))?.render());
                }
            }
            Ok(0)
        }
        Command::Diff { left, right } => {
            let (l, r) = (TraceLedger::load(&left)?, TraceLedger::load(&right)?);
            match diff(&l, &r) {
                None => {
                    println!("same");
                    Ok(0)
                }
                Some(d) => {
                    println!("{d}");
                    Ok(1)
                }
            }
        }
        Command::Validate { transcript } => {
            let ledger = TraceLedger::load(&transcript)?;
            let findings = validate(&ledger, &OntologyGraph::seed());
            for f in &findings {
                println!("{f}");
            }
            println!("{} events, {} findings", ledger.len(), findings.len());
            Ok(if findings.is_empty() { 0 } else { 1 })
        }
        Command::Serve {
            flags,
            addr,
            interval_ms,
        } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                let state = ServerState::new(flags.config(), Duration::from_millis(interval_ms));
                cogteam::gateway::serve(listener, state).await?;
                Ok(0)
            })
        }
    }
}
