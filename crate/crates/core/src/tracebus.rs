//! Ordered trace of everything a run did, the panels derived from it, and
//! the transcript file format.
//!
//! A transcript is
//!
//! ```text
//! COGTEAM-TRANSCRIPT 1 <header bytes>
//! <header: key TAB value lines>
//! EVENT <seq> <agent> <tick> <phase> <kind> <payload bytes>
//! <payload>
//! ...
//! ```
//!
//! Lengths are byte counts, so payloads may hold any text.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cognition::filter_snapshot;

pub const TRANSCRIPT_MAGIC: &str = "COGTEAM-TRANSCRIPT";
pub const TRANSCRIPT_VERSION: u32 = 1;
/// Agent id used for world events.
pub const WORLD_AGENT: &str = "WORLD";
pub const DEFAULT_RECENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Setup,
    Sense,
    Cognize,
    Act,
    Deliver,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::Setup, Phase::Sense, Phase::Cognize, Phase::Act, Phase::Deliver];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Setup => "SETUP",
            Phase::Sense => "SENSE",
            Phase::Cognize => "COGNIZE",
            Phase::Act => "ACT",
            Phase::Deliver => "DELIVER",
        }
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown phase {s:?}"))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceKind {
    Tmr,
    Vmr,
    Thought,
    Agenda,
    Message,
    World,
}

impl TraceKind {
    pub const ALL: [TraceKind; 6] = [
        TraceKind::Tmr,
        TraceKind::Vmr,
        TraceKind::Thought,
        TraceKind::Agenda,
        TraceKind::Message,
        TraceKind::World,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Tmr => "TMR",
            TraceKind::Vmr => "VMR",
            TraceKind::Thought => "THOUGHT",
            TraceKind::Agenda => "AGENDA",
            TraceKind::Message => "MESSAGE",
            TraceKind::World => "WORLD",
        }
    }
}

impl FromStr for TraceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind {s:?}"))
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub agent: String,
    pub tick: u64,
    pub phase: Phase,
    pub kind: TraceKind,
    pub payload: String,
}

impl TraceEvent {
    /// `EVENT seq agent tick phase kind len`
    pub fn header(&self) -> String {
        format!(
            "EVENT {} {} {} {} {} {}",
            self.seq,
            self.agent,
            self.tick,
            self.phase,
            self.kind,
            self.payload.len()
        )
    }

    /// Header line, payload, newline.
    pub fn encode(&self) -> String {
        format!("{}\n{}\n", self.header(), self.payload)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("event seq {got} out of order, expected {expected}")]
    Sequence { expected: u64, got: u64 },
    #[error("event at tick {tick} {phase} goes back in time")]
    Time { tick: u64, phase: Phase },
    #[error("bad agent id {0:?}")]
    Agent(String),
    #[error("transcript corrupt at line {line} after seq {last_good}: {reason}")]
    Corrupt {
        line: usize,
        last_good: u64,
        reason: String,
    },
    #[error("no event with seq {0}")]
    NoSuchSeq(u64),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("io: {0}")]
    Io(String),
}

/// Run settings echoed at the top of a transcript, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceHeader {
    pub fields: Vec<(String, String)>,
}

impl TraceHeader {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.fields.iter_mut().find(|(k, _)| k == key) {
            Some(f) => f.1 = value,
            None => self.fields.push((key.to_string(), value)),
        }
    }

    /// Panel headers keyed by agent id, from `agent.<ID>` fields.
    pub fn agents(&self) -> Vec<(&str, &str)> {
        self.fields
            .iter()
            .filter_map(|(k, v)| Some((k.strip_prefix("agent.")?, v.as_str())))
            .collect()
    }

    pub fn render(&self) -> String {
        self.fields.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }
}

/// The ordered event log of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceLedger {
    pub header: TraceHeader,
    events: Vec<TraceEvent>,
}

fn valid_agent(id: &str) -> bool {
    !id.is_empty() && !id.contains(char::is_whitespace)
}

impl TraceLedger {
    pub fn new(header: TraceHeader) -> Self {
        TraceLedger {
            header,
            events: Vec::new(),
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_seq(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq)
    }

    /// Appends a complete event. Seqs count up from 1 without gaps and
    /// `(tick, phase)` never decreases.
    pub fn append(&mut self, event: TraceEvent) -> Result<&TraceEvent, TraceError> {
        let expected = self.last_seq() + 1;
        if event.seq != expected {
            return Err(TraceError::Sequence {
                expected,
                got: event.seq,
            });
        }
        if let Some(last) = self.events.last() {
            if (event.tick, event.phase) < (last.tick, last.phase) {
                return Err(TraceError::Time {
                    tick: event.tick,
                    phase: event.phase,
                });
            }
        }
        if !valid_agent(&event.agent) {
            return Err(TraceError::Agent(event.agent));
        }
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    /// Appends with the next seq.
    pub fn record(
        &mut self,
        agent: &str,
        tick: u64,
        phase: Phase,
        kind: TraceKind,
        payload: impl Into<String>,
    ) -> Result<&TraceEvent, TraceError> {
        let seq = self.last_seq() + 1;
        self.append(TraceEvent {
            seq,
            agent: agent.to_string(),
            tick,
            phase,
            kind,
            payload: payload.into(),
        })
    }

    /// Events with seq at most `up_to`.
    pub fn replay(&self, up_to: u64) -> Result<&[TraceEvent], TraceError> {
        if up_to > self.last_seq() {
            return Err(TraceError::NoSuchSeq(up_to));
        }
        Ok(&self.events[..up_to as usize])
    }

    /// Events after `cursor` (a seq; 0 means from the start).
    pub fn since(&self, cursor: u64) -> Result<&[TraceEvent], TraceError> {
        if cursor > self.last_seq() {
            return Err(TraceError::NoSuchSeq(cursor));
        }
        Ok(&self.events[cursor as usize..])
    }

    pub fn panel_header(&self, agent: &str) -> Result<&str, TraceError> {
        self.header
            .agents()
            .into_iter()
            .find(|(id, _)| *id == agent)
            .map(|(_, h)| h)
            .ok_or_else(|| TraceError::UnknownAgent(agent.to_string()))
    }

    /// A panel as of `up_to` (the whole run when `None`).
    pub fn panel(&self, agent: &str, kind: PanelKind, n: usize, up_to: Option<u64>) -> Result<Panel, TraceError> {
        let header = self.panel_header(agent)?.to_string();
        let events = match up_to {
            Some(s) => self.replay(s)?,
            None => &self.events,
        };
        Ok(Panel {
            agent: agent.to_string(),
            kind,
            header,
            body: panel_body(events, agent, kind, n),
        })
    }

    pub fn encode(&self) -> String {
        let header = self.header.render();
        let mut out = format!("{TRANSCRIPT_MAGIC} {TRANSCRIPT_VERSION} {}\n{header}", header.len());
        for e in &self.events {
            out.push_str(&e.encode());
        }
        out
    }

    pub fn decode(text: &str) -> Result<Self, TraceError> {
        let mut r = Reader { text, pos: 0, line: 1 };
        let corrupt = |line, last_good, reason: String| TraceError::Corrupt {
            line,
            last_good,
            reason,
        };

        let first = r.line_str().ok_or_else(|| corrupt(1, 0, "empty transcript".into()))?;
        let parts: Vec<&str> = first.split(' ').collect();
        let [magic, version, len] = parts[..] else {
            return Err(corrupt(1, 0, "bad magic line".into()));
        };
        if magic != TRANSCRIPT_MAGIC || version != TRANSCRIPT_VERSION.to_string() {
            return Err(corrupt(1, 0, format!("unsupported transcript {magic} {version}")));
        }
        let len: usize = len.parse().map_err(|_| corrupt(1, 0, "bad header length".into()))?;
        let header_line = r.line;
        let header_text = r
            .take(len)
            .ok_or_else(|| corrupt(header_line, 0, "header truncated".into()))?;
        let mut header = TraceHeader::default();
        for (i, l) in header_text.lines().enumerate() {
            let (k, v) = l
                .split_once('\t')
                .ok_or_else(|| corrupt(header_line + i, 0, format!("bad header field {l:?}")))?;
            header.set(k, v);
        }

        let mut ledger = TraceLedger::new(header);
        while !r.done() {
            let line = r.line;
            let last = ledger.last_seq();
            let head = r
                .line_str()
                .ok_or_else(|| corrupt(line, last, "truncated event".into()))?;
            let event = parse_event_header(head).map_err(|e| corrupt(line, last, e))?;
            let (mut event, len) = event;
            let payload = r
                .take(len)
                .ok_or_else(|| corrupt(line, last, "payload truncated".into()))?;
            if !r.eat_newline() {
                return Err(corrupt(r.line, last, "missing newline after payload".into()));
            }
            event.payload = payload.to_string();
            ledger.append(event).map_err(|e| corrupt(line, last, e.to_string()))?;
        }
        Ok(ledger)
    }

    pub fn persist(&self, path: &std::path::Path) -> Result<(), TraceError> {
        std::fs::write(path, self.encode()).map_err(|e| TraceError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TraceError> {
        let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io(e.to_string()))?;
        Self::decode(&text)
    }
}

fn parse_event_header(line: &str) -> Result<(TraceEvent, usize), String> {
    let parts: Vec<&str> = line.split(' ').collect();
    let ["EVENT", seq, agent, tick, phase, kind, len] = parts[..] else {
        return Err(format!("bad event line {line:?}"));
    };
    let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| format!("bad {what} {s:?}"));
    Ok((
        TraceEvent {
            seq: num(seq, "seq")?,
            agent: agent.to_string(),
            tick: num(tick, "tick")?,
            phase: phase.parse()?,
            kind: kind.parse()?,
            payload: String::new(),
        },
        num(len, "length")? as usize,
    ))
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Reader<'a> {
    fn done(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn line_str(&mut self) -> Option<&'a str> {
        let rest = &self.text[self.pos..];
        let end = rest.find('\n')?;
        self.pos += end + 1;
        self.line += 1;
        Some(&rest[..end])
    }

    fn take(&mut self, len: usize) -> Option<&'a str> {
        let s = self.text.get(self.pos..self.pos + len)?;
        self.pos += len;
        self.line += s.matches('\n').count();
        Some(s)
    }

    fn eat_newline(&mut self) -> bool {
        if self.text[self.pos..].starts_with('\n') {
            self.pos += 1;
            self.line += 1;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PanelKind {
    TmrsRecent,
    VmrsRecent,
    Thoughts,
    Agenda,
    AgendaFiltered,
}

impl PanelKind {
    pub const ALL: [PanelKind; 5] = [
        PanelKind::TmrsRecent,
        PanelKind::VmrsRecent,
        PanelKind::Thoughts,
        PanelKind::Agenda,
        PanelKind::AgendaFiltered,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PanelKind::TmrsRecent => "TMRS-RECENT",
            PanelKind::VmrsRecent => "VMRS-RECENT",
            PanelKind::Thoughts => "THOUGHTS",
            PanelKind::Agenda => "AGENDA",
            PanelKind::AgendaFiltered => "AGENDA-FILTERED",
        }
    }
}

impl FromStr for PanelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PanelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown panel {s:?}"))
    }
}

impl fmt::Display for PanelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Panel {
    pub agent: String,
    pub kind: PanelKind,
    /// `UGV-U [LEADER]`
    pub header: String,
    pub body: String,
}

impl Panel {
    /// `header TAB kind`, newline, body.
    pub fn render(&self) -> String {
        format!("{}\t{}\n{}", self.header, self.kind, self.body)
    }
}

/// The snapshot half of an AGENDA payload.
pub fn agenda_snapshot(payload: &str) -> &str {
    payload.split_once('\n').map_or("", |(_, s)| s)
}

/// A panel body as a pure function of the events seen so far.
///
/// Recent-document panels show the newest `n` documents oldest first,
/// separated by blank lines; the thought panel shows every thought.
pub fn panel_body(events: &[TraceEvent], agent: &str, kind: PanelKind, n: usize) -> String {
    let of = |k: TraceKind| events.iter().filter(move |e| e.agent == agent && e.kind == k);
    match kind {
        PanelKind::TmrsRecent | PanelKind::VmrsRecent => {
            let k = if kind == PanelKind::TmrsRecent {
                TraceKind::Tmr
            } else {
                TraceKind::Vmr
            };
            let docs: Vec<&str> = of(k).map(|e| e.payload.as_str()).collect();
            docs[docs.len().saturating_sub(n)..].join("\n\n")
        }
        PanelKind::Thoughts => of(TraceKind::Thought)
            .map(|e| e.payload.as_str())
            .collect::<Vec<_>>()
            .join("\n"),
        PanelKind::Agenda => of(TraceKind::Agenda)
            .next_back()
            .map_or("", |e| agenda_snapshot(&e.payload))
            .to_string(),
        PanelKind::AgendaFiltered => of(TraceKind::Agenda)
            .next_back()
            .map_or_else(String::new, |e| filter_snapshot(agenda_snapshot(&e.payload))),
    }
}

/// First place two transcripts disagree, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    Header {
        key: String,
        left: Option<String>,
        right: Option<String>,
    },
    Event {
        seq: u64,
        left: Option<TraceEvent>,
        right: Option<TraceEvent>,
    },
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |e: &Option<TraceEvent>| e.as_ref().map_or_else(|| "(none)".to_string(), |e| e.encode());
        match self {
            Divergence::Header { key, left, right } => write!(
                f,
                "header {key}: {} vs {}",
                left.as_deref().unwrap_or("(none)"),
                right.as_deref().unwrap_or("(none)")
            ),
            Divergence::Event { seq, left, right } => {
                write!(
                    f,
                    "seq {seq}\n< {}\n> {}",
                    show(left).trim_end(),
                    show(right).trim_end()
                )
            }
        }
    }
}

pub fn diff(left: &TraceLedger, right: &TraceLedger) -> Option<Divergence> {
    let mut keys: Vec<&str> = left.header.fields.iter().map(|(k, _)| k.as_str()).collect();
    for (k, _) in &right.header.fields {
        if !keys.contains(&k.as_str()) {
            keys.push(k);
        }
    }
    for k in keys {
        let (l, r) = (left.header.get(k), right.header.get(k));
        if l != r {
            return Some(Divergence::Header {
                key: k.to_string(),
                left: l.map(str::to_string),
                right: r.map(str::to_string),
            });
        }
    }
    let n = left.len().max(right.len());
    (0..n).find_map(|i| {
        let (l, r) = (left.events.get(i), right.events.get(i));
        (l != r).then(|| Divergence::Event {
            seq: i as u64 + 1,
            left: l.cloned(),
            right: r.cloned(),
        })
    })
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub seq: u64,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seq {}: {}", self.seq, self.message)
    }
}

/// Checks every TMR and VMR in a ledger: it parses, it renders back to the
/// same bytes, and each frame is well typed. MESSAGE and AGENDA payloads
/// must parse too.
pub fn validate(ledger: &TraceLedger, ontology: &crate::ontology::OntologyGraph) -> Vec<Finding> {
    let mut out = Vec::new();
    for e in ledger.events() {
        let mut flag = |message: String| out.push(Finding { seq: e.seq, message });
        match e.kind {
            TraceKind::Tmr | TraceKind::Vmr => match crate::frames::parse_mr_text(&e.payload) {
                Err(err) => flag(format!("does not parse: {err}")),
                Ok(doc) => {
                    if doc.render() != e.payload {
                        flag("render of the parsed document differs from the payload".into());
                    }
                    if doc.owner != e.agent {
                        flag(format!("document owner {} is not the event agent", doc.owner));
                    }
                    for frame in &doc.frames {
                        for v in ontology.validate_frame(frame) {
                            flag(format!("{}: {v}", frame.head));
                        }
                    }
                }
            },
            TraceKind::Message => {
                if crate::team::Message::parse_payload(&e.payload).is_none() {
                    flag("message payload does not parse".into());
                }
            }
            TraceKind::Agenda => {
                let line = e.payload.lines().next().unwrap_or_default();
                if !(line.starts_with("ADD ") || crate::cognition::Mutation::parse_set(line).is_some()) {
                    flag(format!("bad agenda mutation {line:?}"));
                }
            }
            TraceKind::Thought | TraceKind::World => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ledger() -> TraceLedger {
        let mut h = TraceHeader::default();
        h.set("scenario", "seed");
        h.set("agent.UGV", "UGV-U [LEADER]");
        TraceLedger::new(h)
    }

    #[test]
    fn append_rejects_gaps_and_time_travel() {
        let mut l = ledger();
        l.record("UGV", 1, Phase::Cognize, TraceKind::Thought, "a").unwrap();
        let bad = TraceEvent {
            seq: 3,
            agent: "UGV".into(),
            tick: 1,
            phase: Phase::Act,
            kind: TraceKind::Thought,
            payload: String::new(),
        };
        assert_eq!(l.append(bad.clone()), Err(TraceError::Sequence { expected: 2, got: 3 }));
        let back = TraceEvent {
            seq: 2,
            phase: Phase::Sense,
            ..bad.clone()
        };
        assert_eq!(
            l.append(back),
            Err(TraceError::Time {
                tick: 1,
                phase: Phase::Sense
            })
        );
        assert!(l.record("two words", 2, Phase::Sense, TraceKind::World, "").is_err());
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn corrupt_transcript_names_last_good_seq_and_line() {
        let mut l = ledger();
        l.record("UGV", 1, Phase::Cognize, TraceKind::Thought, "one\ntwo")
            .unwrap();
        l.record("UGV", 1, Phase::Act, TraceKind::Thought, "three").unwrap();
        let text = l.encode();
        let broken = text.replace("EVENT 2 UGV 1 ACT", "EVENT 2 UGV 1 NAP");
        match TraceLedger::decode(&broken) {
            Err(TraceError::Corrupt { line, last_good, .. }) => {
                assert_eq!(last_good, 1);
                assert_eq!(broken.lines().nth(line - 1).unwrap(), "EVENT 2 UGV 1 NAP THOUGHT 5");
            }
            other => panic!("{other:?}"),
        }
        let truncated = &text[..text.len() - 3];
        assert!(matches!(
            TraceLedger::decode(truncated),
            Err(TraceError::Corrupt { last_good: 1, .. })
        ));
        assert!(TraceLedger::decode("").is_err());
    }

    #[test]
    fn panels_are_functions_of_the_prefix() {
        let mut l = ledger();
        for i in 1..=5 {
            l.record("UGV", i, Phase::Cognize, TraceKind::Tmr, format!("TMR.{i}"))
                .unwrap();
        }
        l.record(
            "UGV",
            6,
            Phase::Cognize,
            TraceKind::Agenda,
            "ADD 1 @A\n@A\tPENDING\n  @B\tPENDING\tDETAIL",
        )
        .unwrap();
        let p = l.panel("UGV", PanelKind::TmrsRecent, 3, None).unwrap();
        assert_eq!(p.body, "TMR.3\n\nTMR.4\n\nTMR.5");
        assert_eq!(p.header, "UGV-U [LEADER]");
        assert_eq!(
            l.panel("UGV", PanelKind::TmrsRecent, 3, Some(2)).unwrap().body,
            "TMR.1\n\nTMR.2"
        );
        assert_eq!(l.panel("UGV", PanelKind::AgendaFiltered, 3, None).unwrap().body, "@A");
        assert_eq!(l.panel("UGV", PanelKind::Agenda, 3, Some(5)).unwrap().body, "");
        assert_eq!(
            l.panel("NOPE", PanelKind::Thoughts, 3, None),
            Err(TraceError::UnknownAgent("NOPE".into()))
        );
        assert_eq!(l.replay(7), Err(TraceError::NoSuchSeq(7)));
    }

    #[test]
    fn diff_finds_first_divergence() {
        let mut a = ledger();
        a.record("UGV", 1, Phase::Cognize, TraceKind::Thought, "x").unwrap();
        let mut b = a.clone();
        assert_eq!(diff(&a, &b), None);
        b.record("UGV", 2, Phase::Cognize, TraceKind::Thought, "y").unwrap();
        assert!(matches!(
            diff(&a, &b),
            Some(Divergence::Event { seq: 2, left: None, .. })
        ));
        b.header.set("seed", "9");
        assert!(matches!(diff(&a, &b), Some(Divergence::Header { .. })));
    }

    fn arb_event() -> impl Strategy<Value = (String, u64, usize, usize, String)> {
        (
            "[A-Z]{1,5}",
            0u64..3,
            0usize..5,
            0usize..6,
            proptest::collection::vec(proptest::char::any(), 0..40).prop_map(|c| c.into_iter().collect()),
        )
    }

    proptest! {
        #[test]
        fn encode_decode_round_trips(events in proptest::collection::vec(arb_event(), 0..30)) {
            let mut l = ledger();
            let mut events = events;
            events.sort_by_key(|e| (e.1, e.2));
            for (agent, tick, phase, kind, payload) in events {
                l.record(&agent, tick, Phase::ALL[phase], TraceKind::ALL[kind], payload).unwrap();
            }
            let back = TraceLedger::decode(&l.encode()).unwrap();
            prop_assert_eq!(&back, &l);
            prop_assert_eq!(back.encode(), l.encode());
        }

        #[test]
        fn replayed_panels_match_live_panels(n in 1usize..5, count in 1u64..20) {
            let mut live = ledger();
            let mut bodies = Vec::new();
            for i in 1..=count {
                let kind = if i % 3 == 0 { TraceKind::Agenda } else { TraceKind::Tmr };
                live.record("UGV", i, Phase::Cognize, kind, format!("SET {i}\n@R\tACTIVE\n  @C{i}\tPENDING")).unwrap();
                let now: Vec<String> = PanelKind::ALL.iter().map(|k| live.panel("UGV", *k, n, None).unwrap().body).collect();
                bodies.push(now);
            }
            for (i, now) in bodies.iter().enumerate() {
                let then: Vec<String> = PanelKind::ALL
                    .iter()
                    .map(|k| live.panel("UGV", *k, n, Some(i as u64 + 1)).unwrap().body)
                    .collect();
                prop_assert_eq!(&then, now);
            }
        }
    }
}
