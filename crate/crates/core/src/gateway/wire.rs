//! Records on the socket channel.
//!
//! ```text
//! CT1 <KIND> <payload bytes>
//! <payload>
//! ```
//!
//! | kind      | direction        | payload                                   |
//! |-----------|------------------|-------------------------------------------|
//! | EVENT     | server -> client | event header line, newline, event payload |
//! | PANEL     | both             | request: `<agent> <kind>`; reply: panel   |
//! | UTTERANCE | client -> server | the text                                  |
//! | ACK       | server -> client | `tick=<delivery tick>`                    |
//! | ERROR     | server -> client | a message                                 |
//!
//! A reply PANEL payload is the panel header, a tab, the panel kind, a
//! newline, then the body exactly as the core renders it.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tracebus::TraceEvent;

pub const WIRE_VERSION: &str = "CT1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Event,
    Panel,
    Utterance,
    Ack,
    Error,
}

impl RecordKind {
    pub const ALL: [RecordKind; 5] = [
        RecordKind::Event,
        RecordKind::Panel,
        RecordKind::Utterance,
        RecordKind::Ack,
        RecordKind::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Event => "EVENT",
            RecordKind::Panel => "PANEL",
            RecordKind::Utterance => "UTTERANCE",
            RecordKind::Ack => "ACK",
            RecordKind::Error => "ERROR",
        }
    }
}

impl FromStr for RecordKind {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecordKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| WireError::Kind(s.to_string()))
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("bad record header {0:?}")]
    Header(String),
    #[error("unsupported version {0}")]
    Version(String),
    #[error("unknown record kind {0}")]
    Kind(String),
    #[error("payload truncated: wanted {wanted} bytes, have {have}")]
    Truncated { wanted: usize, have: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub kind: RecordKind,
    pub payload: String,
}

impl Record {
    pub fn new(kind: RecordKind, payload: impl Into<String>) -> Self {
        Record {
            kind,
            payload: payload.into(),
        }
    }

    pub fn event(e: &TraceEvent) -> Self {
        Self::new(RecordKind::Event, format!("{}\n{}", e.header(), e.payload))
    }

    pub fn encode(&self) -> String {
        format!("{WIRE_VERSION} {} {}\n{}", self.kind, self.payload.len(), self.payload)
    }

    /// Decodes one record from the front of `text`, returning it and the
    /// rest.
    pub fn decode_prefix(text: &str) -> Result<(Record, &str), WireError> {
        let (head, rest) = text
            .split_once('\n')
            .ok_or_else(|| WireError::Header(text.to_string()))?;
        let parts: Vec<&str> = head.split(' ').collect();
        let [version, kind, len] = parts[..] else {
            return Err(WireError::Header(head.to_string()));
        };
        if version != WIRE_VERSION {
            return Err(WireError::Version(version.to_string()));
        }
        let kind: RecordKind = kind.parse()?;
        let len: usize = len.parse().map_err(|_| WireError::Header(head.to_string()))?;
        let payload = rest.get(..len).ok_or(WireError::Truncated {
            wanted: len,
            have: rest.len(),
        })?;
        Ok((Record::new(kind, payload), &rest[len..]))
    }

    /// Exactly one record, nothing after it.
    pub fn decode(text: &str) -> Result<Record, WireError> {
        let (r, rest) = Self::decode_prefix(text)?;
        if !rest.is_empty() {
            return Err(WireError::Header(format!("{} trailing bytes", rest.len())));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn event_record_carries_header_and_payload() {
        let e = TraceEvent {
            seq: 4,
            agent: "UGV".into(),
            tick: 2,
            phase: crate::tracebus::Phase::Cognize,
            kind: crate::tracebus::TraceKind::Thought,
            payload: "DANNY wants us to @SEARCH-FOR-LOST-OBJECT.".into(),
        };
        let r = Record::event(&e);
        assert_eq!(
            r.encode(),
            "CT1 EVENT 75\nEVENT 4 UGV 2 COGNIZE THOUGHT 42\nDANNY wants us to @SEARCH-FOR-LOST-OBJECT."
        );
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert_eq!(Record::decode("CT2 ACK 0\n"), Err(WireError::Version("CT2".into())));
        assert_eq!(Record::decode("CT1 NOPE 0\n"), Err(WireError::Kind("NOPE".into())));
        assert_eq!(
            Record::decode("CT1 ACK 5\nab"),
            Err(WireError::Truncated { wanted: 5, have: 2 })
        );
        assert!(Record::decode("CT1 ACK\n").is_err());
        assert!(Record::decode("CT1 ACK 1\nab").is_err());
    }

    proptest! {
        #[test]
        fn records_round_trip_back_to_back(payloads in proptest::collection::vec((0usize..5, ".*"), 0..8)) {
            let records: Vec<Record> = payloads.into_iter().map(|(k, p)| Record::new(RecordKind::ALL[k], p)).collect();
            let text: String = records.iter().map(Record::encode).collect();
            let mut rest = text.as_str();
            let mut back = Vec::new();
            while !rest.is_empty() {
                let (r, tail) = Record::decode_prefix(rest).unwrap();
                back.push(r);
                rest = tail;
            }
            prop_assert_eq!(back, records);
        }
    }
}
