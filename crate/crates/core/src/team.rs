//! Message fabric between the human and the robots.
//!
//! Payloads are plain text; every recipient interprets them itself. Human
//! messages reach every robot whoever they are addressed to.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Human,
    Leader,
    Subordinate,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Human => "HUMAN",
            Role::Leader => "LEADER",
            Role::Subordinate => "SUBORDINATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: u64,
    pub sender: String,
    pub recipients: Vec<String>,
    pub sent: u64,
    pub deliver_at: u64,
    pub text: String,
}

impl Message {
    /// Header line of a MESSAGE trace payload.
    pub fn header(&self) -> String {
        format!(
            "id={} from={} to={} deliver={}",
            self.id,
            self.sender,
            self.recipients.join(","),
            self.deliver_at
        )
    }

    /// `header\ntext`, the MESSAGE event payload.
    pub fn payload(&self) -> String {
        format!("{}\n{}", self.header(), self.text)
    }

    pub fn parse_payload(payload: &str) -> Option<Message> {
        let (header, text) = payload.split_once('\n')?;
        let mut id = None;
        let mut sender = None;
        let mut recipients = None;
        let mut deliver_at = None;
        for field in header.split(' ') {
            let (k, v) = field.split_once('=')?;
            match k {
                "id" => id = v.parse().ok(),
                "from" => sender = Some(v.to_string()),
                "to" => recipients = Some(v.split(',').map(str::to_string).collect()),
                "deliver" => deliver_at = v.parse().ok(),
                _ => return None,
            }
        }
        let deliver_at: u64 = deliver_at?;
        Some(Message {
            id: id?,
            sender: sender?,
            recipients: recipients?,
            sent: deliver_at,
            deliver_at,
            text: text.to_string(),
        })
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.sender, self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TeamError {
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(String),
    #[error("message text is empty")]
    EmptyText,
    #[error("message needs at least one recipient")]
    NoRecipients,
    #[error("duplicate endpoint {0}")]
    DuplicateEndpoint(String),
    #[error("a team needs exactly one leader")]
    Leaders,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub id: String,
    pub role: Role,
    inbox: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fabric {
    endpoints: Vec<Endpoint>,
    latency: u64,
    next_id: u64,
    sent: Vec<Message>,
}

impl Fabric {
    pub fn new(members: &[(&str, Role)], latency: u64) -> Result<Self, TeamError> {
        let mut endpoints: Vec<Endpoint> = Vec::new();
        for (id, role) in members {
            if endpoints.iter().any(|e| e.id == *id) {
                return Err(TeamError::DuplicateEndpoint(id.to_string()));
            }
            endpoints.push(Endpoint {
                id: id.to_string(),
                role: *role,
                inbox: Vec::new(),
            });
        }
        let leaders = endpoints.iter().filter(|e| e.role == Role::Leader).count();
        let humans = endpoints.iter().filter(|e| e.role == Role::Human).count();
        if leaders != 1 || humans > 1 {
            return Err(TeamError::Leaders);
        }
        Ok(Fabric {
            endpoints,
            latency,
            next_id: 1,
            sent: Vec::new(),
        })
    }

    pub fn latency(&self) -> u64 {
        self.latency
    }

    pub fn endpoints(&self) -> &[Endpoint] {
        &self.endpoints
    }

    pub fn role(&self, id: &str) -> Option<Role> {
        self.endpoints.iter().find(|e| e.id == id).map(|e| e.role)
    }

    pub fn robots(&self) -> impl Iterator<Item = &Endpoint> {
        self.endpoints.iter().filter(|e| e.role != Role::Human)
    }

    /// Every message ever sent, in id order.
    pub fn sent(&self) -> &[Message] {
        &self.sent
    }

    pub fn send(&mut self, sender: &str, recipients: &[&str], text: &str, tick: u64) -> Result<Message, TeamError> {
        if text.trim().is_empty() {
            return Err(TeamError::EmptyText);
        }
        let role = self
            .role(sender)
            .ok_or_else(|| TeamError::UnknownEndpoint(sender.to_string()))?;
        for r in recipients {
            if self.role(r).is_none() {
                return Err(TeamError::UnknownEndpoint(r.to_string()));
            }
        }
        let mut to: Vec<String> = if role == Role::Human {
            self.robots().map(|e| e.id.clone()).collect()
        } else {
            recipients.iter().map(|r| r.to_string()).collect()
        };
        to.retain(|r| r != sender);
        to.dedup();
        if to.is_empty() {
            return Err(TeamError::NoRecipients);
        }
        let message = Message {
            id: self.next_id,
            sender: sender.to_string(),
            recipients: to,
            sent: tick,
            deliver_at: tick + self.latency,
            text: text.to_string(),
        };
        self.next_id += 1;
        for e in self.endpoints.iter_mut() {
            if message.recipients.contains(&e.id) {
                e.inbox.push(message.clone());
            }
        }
        self.sent.push(message.clone());
        Ok(message)
    }

    /// Removes and returns messages due by `tick`, ordered by delivery
    /// tick, then sender id, then message id.
    pub fn drain_inbox(&mut self, id: &str, tick: u64) -> Result<Vec<Message>, TeamError> {
        let e = self
            .endpoints
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or_else(|| TeamError::UnknownEndpoint(id.to_string()))?;
        let (mut due, rest): (Vec<_>, Vec<_>) = e.inbox.drain(..).partition(|m| m.deliver_at <= tick);
        e.inbox = rest;
        due.sort_by(|a, b| (a.deliver_at, &a.sender, a.id).cmp(&(b.deliver_at, &b.sender, b.id)));
        Ok(due)
    }

    pub fn pending(&self, id: &str) -> usize {
        self.endpoints.iter().find(|e| e.id == id).map_or(0, |e| e.inbox.len())
    }

    pub fn is_quiet(&self) -> bool {
        self.endpoints.iter().all(|e| e.inbox.is_empty())
    }

    /// Fault hook: drops everything waiting for `id`. Returns how many
    /// messages were lost.
    pub fn clear_inbox(&mut self, id: &str) -> usize {
        self.endpoints
            .iter_mut()
            .find(|e| e.id == id)
            .map_or(0, |e| e.inbox.drain(..).count())
    }
}

/// Delivered messages per recipient, for conservation checks.
pub fn delivery_counts(sent: &[Message]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for m in sent {
        for r in &m.recipients {
            *out.entry(r.clone()).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fabric() -> Fabric {
        Fabric::new(
            &[
                ("HUMAN", Role::Human),
                ("UGV", Role::Leader),
                ("DRONE", Role::Subordinate),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn human_messages_reach_both_robots() {
        let mut f = fabric();
        f.send("HUMAN", &["UGV"], "Can you look around for them?", 4).unwrap();
        assert!(f.drain_inbox("UGV", 4).unwrap().is_empty());
        assert_eq!(f.drain_inbox("UGV", 5).unwrap().len(), 1);
        assert_eq!(f.drain_inbox("DRONE", 5).unwrap().len(), 1);
        assert!(f.drain_inbox("HUMAN", 5).unwrap().is_empty());
    }

    #[test]
    fn robot_messages_are_point_to_point() {
        let mut f = fabric();
        f.send("UGV", &["DRONE"], "Let's search the apartment.", 1).unwrap();
        assert_eq!(f.pending("DRONE"), 1);
        assert_eq!(f.pending("HUMAN"), 0);
        assert!(f.drain_inbox("UGV", 9).unwrap().is_empty());
    }

    #[test]
    fn degenerate_sends_are_rejected() {
        let mut f = fabric();
        assert_eq!(f.send("UGV", &["DRONE"], "", 1), Err(TeamError::EmptyText));
        assert_eq!(
            f.send("UGV", &["CAT"], "hi", 1),
            Err(TeamError::UnknownEndpoint("CAT".into()))
        );
        assert!(f.drain_inbox("CAT", 1).is_err());
    }

    #[test]
    fn same_tick_messages_drain_by_sender_then_id() {
        let mut f = fabric();
        f.send("UGV", &["HUMAN"], "b", 1).unwrap();
        f.send("DRONE", &["HUMAN"], "a", 1).unwrap();
        f.send("UGV", &["HUMAN"], "c", 1).unwrap();
        let order: Vec<_> = f.drain_inbox("HUMAN", 2).unwrap().into_iter().map(|m| m.text).collect();
        assert_eq!(order, ["a", "b", "c"]);
    }

    #[test]
    fn payload_round_trips() {
        let mut f = fabric();
        let m = f.send("UGV", &["DRONE", "HUMAN"], "Sounds good.\nok", 3).unwrap();
        let back = Message::parse_payload(&m.payload()).unwrap();
        assert_eq!(back.recipients, m.recipients);
        assert_eq!(back.text, m.text);
        assert_eq!(back.id, m.id);
    }

    proptest! {
        #[test]
        fn every_message_drains_exactly_once_in_pair_order(
            sends in proptest::collection::vec((0usize..3, 0usize..3, 0u64..20), 1..40),
            drains in proptest::collection::vec(0u64..30, 1..10),
        ) {
            let ids = ["HUMAN", "UGV", "DRONE"];
            let mut f = fabric();
            let mut sent = Vec::new();
            let mut sends = sends;
            sends.sort_by_key(|(_, _, t)| *t);
            for (s, r, t) in sends {
                if let Ok(m) = f.send(ids[s], &[ids[r]], "x", t) {
                    sent.push(m);
                }
            }
            let mut drained: Vec<(String, Message)> = Vec::new();
            let mut ticks = drains;
            ticks.sort();
            ticks.push(100);
            for t in ticks {
                for id in ids {
                    for m in f.drain_inbox(id, t).unwrap() {
                        drained.push((id.to_string(), m));
                    }
                }
            }
            prop_assert_eq!(drained.len(), delivery_counts(&sent).values().sum::<usize>());
            prop_assert!(f.is_quiet());
            for id in ids {
                let got: Vec<u64> = drained.iter().filter(|(r, _)| r == id).map(|(_, m)| m.id).collect();
                let mut uniq = got.clone();
                uniq.dedup();
                prop_assert_eq!(&uniq, &got);
                for sender in ids {
                    let pair: Vec<u64> = drained
                        .iter()
                        .filter(|(r, m)| r == id && m.sender == sender)
                        .map(|(_, m)| m.id)
                        .collect();
                    let mut sorted = pair.clone();
                    sorted.sort();
                    prop_assert_eq!(pair, sorted);
                }
            }
        }
    }
}
