//! Scripted human dialog.
//!
//! One entry per line, trigger and utterance separated by a tab:
//!
//! ```text
//! AT-TICK 1	I think I left my keys at home.
//! AFTER-EVENT UGV MESSAGE describe	They are on a red keychain.
//! ```
//!
//! Entries fire in file order, each no earlier than the one before it.
//! `AFTER-EVENT <agent> <kind> <substring>` waits for an event from that
//! agent, of that kind, whose payload contains the substring, appended after
//! the previous entry fired.
#![allow(clippy::tabs_in_doc_comments)]

use thiserror::Error;

use crate::tracebus::{TraceEvent, TraceKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    AtTick(u64),
    AfterEvent {
        agent: String,
        kind: TraceKind,
        needle: String,
    },
}

impl Trigger {
    pub fn matches(&self, event: &TraceEvent) -> bool {
        match self {
            Trigger::AtTick(_) => false,
            Trigger::AfterEvent { agent, kind, needle } => {
                &event.agent == agent && event.kind == *kind && event.payload.contains(needle.as_str())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub trigger: Trigger,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("script line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DialogScript {
    pub entries: Vec<ScriptEntry>,
}

impl DialogScript {
    pub fn seed() -> Self {
        Self::parse(crate::fixtures::SEED_DIALOG).expect("seed dialog is valid")
    }

    pub fn parse(source: &str) -> Result<Self, ScriptError> {
        let mut entries = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let err = |m: &str| ScriptError::Syntax {
                line,
                message: m.to_string(),
            };
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (trigger, text) = raw
                .split_once('\t')
                .ok_or_else(|| err("expected trigger TAB utterance"))?;
            let text = text.trim();
            if text.is_empty() {
                return Err(err("empty utterance"));
            }
            let words: Vec<&str> = trigger.split_whitespace().collect();
            let trigger = match words[..] {
                ["AT-TICK", n] => Trigger::AtTick(n.parse().map_err(|_| err("bad tick"))?),
                ["AFTER-EVENT", agent, kind, ref needle @ ..] if !needle.is_empty() => Trigger::AfterEvent {
                    agent: agent.to_string(),
                    kind: kind.parse().map_err(|e: String| err(&e))?,
                    needle: needle.join(" "),
                },
                _ => return Err(err("expected AT-TICK <n> or AFTER-EVENT <agent> <kind> <text>")),
            };
            entries.push(ScriptEntry {
                trigger,
                text: text.to_string(),
            });
        }
        Ok(DialogScript { entries })
    }
}

/// Walks a script against a growing event log.
#[derive(Debug, Clone, Default)]
pub struct ScriptCursor {
    next: usize,
    /// Only events after this seq can satisfy the next entry.
    mark: u64,
}

impl ScriptCursor {
    /// Entries due at `tick` given `events`, advancing past them. `last_seq`
    /// is the seq of the newest event.
    pub fn due<'a>(&mut self, script: &'a DialogScript, tick: u64, events: &[TraceEvent]) -> Vec<&'a ScriptEntry> {
        let mut out = Vec::new();
        while let Some(e) = script.entries.get(self.next) {
            let hit = match &e.trigger {
                Trigger::AtTick(n) => (*n <= tick).then_some(self.mark),
                t => events
                    .iter()
                    .find(|ev| ev.seq > self.mark && t.matches(ev))
                    .map(|ev| ev.seq),
            };
            let Some(seq) = hit else {
                break;
            };
            self.mark = seq.max(self.mark);
            self.next += 1;
            out.push(e);
        }
        out
    }

    pub fn finished(&self, script: &DialogScript) -> bool {
        self.next >= script.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracebus::Phase;

    fn ev(seq: u64, agent: &str, payload: &str) -> TraceEvent {
        TraceEvent {
            seq,
            agent: agent.into(),
            tick: seq,
            phase: Phase::Act,
            kind: TraceKind::Message,
            payload: payload.into(),
        }
    }

    #[test]
    fn seed_script_has_three_entries() {
        let s = DialogScript::seed();
        assert_eq!(s.entries.len(), 3);
        assert_eq!(s.entries[0].trigger, Trigger::AtTick(1));
        assert_eq!(
            s.entries[2].trigger,
            Trigger::AfterEvent {
                agent: "UGV".into(),
                kind: TraceKind::Message,
                needle: "last see".into()
            }
        );
    }

    #[test]
    fn entries_fire_in_order() {
        let s = DialogScript::parse("AFTER-EVENT UGV MESSAGE a\tfirst\nAFTER-EVENT UGV MESSAGE b\tsecond\n").unwrap();
        let mut c = ScriptCursor::default();
        // `b` came before `a`, so it cannot satisfy the second entry.
        let log = vec![ev(1, "UGV", "b"), ev(2, "UGV", "a")];
        let due: Vec<&str> = c.due(&s, 2, &log).iter().map(|e| e.text.as_str()).collect();
        assert_eq!(due, ["first"]);
        let mut log = log;
        log.push(ev(3, "DRONE", "b"));
        assert!(c.due(&s, 3, &log).is_empty());
        log.push(ev(4, "UGV", "b"));
        assert_eq!(c.due(&s, 4, &log).len(), 1);
        assert!(c.finished(&s));
    }

    #[test]
    fn bad_lines_are_rejected() {
        for src in [
            "AT-TICK x\thi",
            "AT-TICK 1",
            "AT-TICK 1\t  ",
            "AFTER-EVENT UGV MESSAGE\thi",
            "AFTER-EVENT UGV NOPE a\thi",
        ] {
            assert!(DialogScript::parse(src).is_err(), "{src}");
        }
    }
}
