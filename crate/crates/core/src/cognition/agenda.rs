//! The agenda: a tree of goals and plan phases with guarded status moves.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pending,
    Active,
    Satisfied,
    /// Done without the hoped-for result, such as a zone searched in vain.
    SatisfiedNegative,
    Failed,
    Waiting,
    Cancelled,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pending => "PENDING",
            Status::Active => "ACTIVE",
            Status::Satisfied => "SATISFIED",
            Status::SatisfiedNegative => "SATISFIED-NEGATIVE",
            Status::Failed => "FAILED",
            Status::Waiting => "WAITING",
            Status::Cancelled => "CANCELLED",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        Some(match s {
            "PENDING" => Status::Pending,
            "ACTIVE" => Status::Active,
            "SATISFIED" => Status::Satisfied,
            "SATISFIED-NEGATIVE" => Status::SatisfiedNegative,
            "FAILED" => Status::Failed,
            "WAITING" => Status::Waiting,
            "CANCELLED" => Status::Cancelled,
            _ => return None,
        })
    }

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            Status::Satisfied | Status::SatisfiedNegative | Status::Failed | Status::Cancelled
        )
    }

    /// The transition table. Cancellation may cut any open item short;
    /// everything else goes through ACTIVE.
    pub fn can_become(self, to: Status) -> bool {
        use Status::*;
        matches!(
            (self, to),
            (Pending, Active)
                | (Pending, Cancelled)
                | (Active, Satisfied)
                | (Active, SatisfiedNegative)
                | (Active, Failed)
                | (Active, Waiting)
                | (Active, Cancelled)
                | (Waiting, Active)
                | (Waiting, Cancelled)
        )
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgendaError {
    #[error("no agenda item {0}")]
    Unknown(usize),
    #[error("item {id} cannot go from {from} to {to}")]
    Illegal { id: usize, from: Status, to: Status },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgendaItem {
    pub id: usize,
    pub parent: Option<usize>,
    /// As shown in the panel: `@GOAL` or `[PHASE]`.
    pub label: String,
    /// Bookkeeping left out of the filtered view.
    pub detail: bool,
    pub status: Status,
    pub children: Vec<usize>,
}

/// One change to the agenda; every change is traced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mutation {
    Add {
        id: usize,
        parent: Option<usize>,
        label: String,
    },
    Set {
        id: usize,
        label: String,
        from: Status,
        to: Status,
    },
}

impl Mutation {
    /// `ADD 3 @REQUEST-OBJECT-TYPE UNDER 2` or `SET 3 @REQUEST-OBJECT-TYPE PENDING->ACTIVE`
    pub fn line(&self) -> String {
        match self {
            Mutation::Add {
                id,
                parent: Some(p),
                label,
            } => format!("ADD {id} {label} UNDER {p}"),
            Mutation::Add {
                id,
                parent: None,
                label,
            } => format!("ADD {id} {label}"),
            Mutation::Set { id, label, from, to } => format!("SET {id} {label} {from}->{to}"),
        }
    }

    /// Reads back the status change of a SET line.
    pub fn parse_set(line: &str) -> Option<(usize, Status, Status)> {
        let rest = line.strip_prefix("SET ")?;
        let (id, rest) = rest.split_once(' ')?;
        let (_, change) = rest.rsplit_once(' ')?;
        let (from, to) = change.split_once("->")?;
        Some((id.parse().ok()?, Status::parse(from)?, Status::parse(to)?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Agenda {
    items: Vec<AgendaItem>,
}

const DETAIL: &str = "DETAIL";

impl Agenda {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[AgendaItem] {
        &self.items
    }

    pub fn item(&self, id: usize) -> Option<&AgendaItem> {
        self.items.get(id.checked_sub(1)?)
    }

    /// The newest root, which the filtered panel shows.
    pub fn root(&self) -> Option<&AgendaItem> {
        self.items.iter().rev().find(|i| i.parent.is_none())
    }

    pub fn add(&mut self, parent: Option<usize>, label: impl Into<String>, detail: bool) -> (usize, Mutation) {
        let id = self.items.len() + 1;
        let label = label.into();
        if let Some(p) = parent {
            self.items[p - 1].children.push(id);
        }
        self.items.push(AgendaItem {
            id,
            parent,
            label: label.clone(),
            detail,
            status: Status::Pending,
            children: Vec::new(),
        });
        (id, Mutation::Add { id, parent, label })
    }

    pub fn set(&mut self, id: usize, to: Status) -> Result<Mutation, AgendaError> {
        let item = id
            .checked_sub(1)
            .and_then(|i| self.items.get_mut(i))
            .ok_or(AgendaError::Unknown(id))?;
        let from = item.status;
        if !from.can_become(to) {
            return Err(AgendaError::Illegal { id, from, to });
        }
        item.status = to;
        Ok(Mutation::Set {
            id,
            label: item.label.clone(),
            from,
            to,
        })
    }

    /// Items under `id` in depth-first order, `id` itself first.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(i) = stack.pop() {
            out.push(i);
            if let Some(item) = self.item(i) {
                stack.extend(item.children.iter().rev());
            }
        }
        out
    }

    /// ACTIVE items with no children.
    pub fn active_leaves(&self) -> usize {
        self.items
            .iter()
            .filter(|i| i.status == Status::Active && i.children.is_empty())
            .count()
    }

    /// Every item, two spaces of indent per level, label, tab, status, and
    /// a trailing `DETAIL` column on bookkeeping items.
    pub fn snapshot(&self) -> String {
        let mut lines = Vec::new();
        for root in self.items.iter().filter(|i| i.parent.is_none()) {
            self.snapshot_into(root.id, 0, &mut lines);
        }
        lines.join("\n")
    }

    fn snapshot_into(&self, id: usize, depth: usize, lines: &mut Vec<String>) {
        let item = &self.items[id - 1];
        let mut line = format!("{}{}\t{}", "  ".repeat(depth), item.label, item.status);
        if item.detail {
            line.push('\t');
            line.push_str(DETAIL);
        }
        lines.push(line);
        for c in &item.children {
            self.snapshot_into(*c, depth + 1, lines);
        }
    }

    pub fn filtered(&self) -> String {
        filter_snapshot(&self.snapshot())
    }
}

/// The filtered panel body from a snapshot: the newest root's subtree,
/// labels only, bookkeeping dropped, one item per line.
pub fn filter_snapshot(snapshot: &str) -> String {
    let lines: Vec<&str> = snapshot.lines().collect();
    let Some(start) = lines.iter().rposition(|l| !l.starts_with(' ')) else {
        return String::new();
    };
    lines[start..]
        .iter()
        .filter(|l| !l.ends_with(&format!("\t{DETAIL}")))
        .map(|l| l.trim_start().split('\t').next().unwrap_or_default())
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [Status; 7] = [
        Status::Pending,
        Status::Active,
        Status::Satisfied,
        Status::SatisfiedNegative,
        Status::Failed,
        Status::Waiting,
        Status::Cancelled,
    ];

    #[test]
    fn terminal_states_have_no_exits() {
        for from in ALL.into_iter().filter(|s| s.is_terminal()) {
            for to in ALL {
                assert!(!from.can_become(to), "{from} -> {to}");
            }
        }
        assert!(!Status::Satisfied.can_become(Status::Active));
        assert!(Status::Waiting.can_become(Status::Active));
        assert!(!Status::Pending.can_become(Status::Satisfied));
    }

    #[test]
    fn snapshot_and_filter() {
        let mut a = Agenda::new();
        let (root, _) = a.add(None, "@COLLABORATIVE-ACTIVITY", false);
        let (pre, _) = a.add(Some(root), "[PRECONDITIONS]", false);
        a.add(Some(pre), "@REQUEST-OBJECT-TYPE", false);
        a.add(Some(root), "@SEARCH-ZONE #KITCHEN.1", true);
        a.set(root, Status::Active).unwrap();
        assert_eq!(
            a.snapshot(),
            "@COLLABORATIVE-ACTIVITY\tACTIVE\n  [PRECONDITIONS]\tPENDING\n    @REQUEST-OBJECT-TYPE\tPENDING\n  @SEARCH-ZONE #KITCHEN.1\tPENDING\tDETAIL"
        );
        assert_eq!(
            a.filtered(),
            "@COLLABORATIVE-ACTIVITY\n[PRECONDITIONS]\n@REQUEST-OBJECT-TYPE"
        );
        assert_eq!(a.subtree(root), [1, 2, 3, 4]);
        assert_eq!(a.active_leaves(), 0);
    }

    #[test]
    fn illegal_moves_are_refused_and_leave_state_alone() {
        let mut a = Agenda::new();
        let (id, _) = a.add(None, "@X", false);
        assert_eq!(
            a.set(id, Status::Satisfied),
            Err(AgendaError::Illegal {
                id,
                from: Status::Pending,
                to: Status::Satisfied
            })
        );
        assert_eq!(a.item(id).unwrap().status, Status::Pending);
        assert_eq!(a.set(9, Status::Active), Err(AgendaError::Unknown(9)));
        let m = a.set(id, Status::Active).unwrap();
        assert_eq!(
            Mutation::parse_set(&m.line()),
            Some((id, Status::Pending, Status::Active))
        );
    }

    #[test]
    fn empty_agenda_filters_to_nothing() {
        assert_eq!(Agenda::new().filtered(), "");
    }

    proptest! {
        #[test]
        fn random_moves_never_leave_a_terminal_state(moves in proptest::collection::vec((0usize..3, 0usize..7), 0..60)) {
            let mut a = Agenda::new();
            for _ in 0..3 {
                a.add(None, "@X", false);
            }
            let mut history: Vec<Vec<Status>> = vec![vec![Status::Pending]; 3];
            for (i, s) in moves {
                if a.set(i + 1, ALL[s]).is_ok() {
                    history[i].push(ALL[s]);
                }
            }
            for h in history {
                for w in h.windows(2) {
                    prop_assert!(w[0].can_become(w[1]));
                    prop_assert!(!w[0].is_terminal());
                }
            }
        }
    }
}
