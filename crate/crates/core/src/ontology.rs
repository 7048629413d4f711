//! Concept hierarchy and property constraints.
//!
//! Every frame the agents build is grounded here: heads are concepts, slot
//! names are property concepts (descendants of `PROPERTY`), and fillers are
//! checked against the range inherited along the `ISA` links.
//!
//! The fixture format is line oriented:
//!
//! ```text
//! # comment
//! CONCEPT ALL
//! CONCEPT OBJECT ISA ALL
//! CONCEPT LEIA ISA AGENTIVE-ENTITY,ROBOT
//! CONSTRAIN EVENT AGENT AGENTIVE-ENTITY
//! CONSTRAIN ALL COREFER ALL|xref
//! ```
//!
//! A range is a `|`-separated list of concept names and lowercase literal
//! kinds (`text`, `number`, `tuple`, `dims`, `comparator`, `xref`). Comments
//! and blank lines are kept so that [`OntologyDoc`] formats back to the exact
//! bytes it was parsed from when the records use canonical spacing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::frames::{Frame, SlotValue, TupleStyle};

/// An ontological concept symbol such as `SEARCH-FOR-LOST-OBJECT`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptName(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid concept name {0:?}")]
pub struct InvalidConceptName(pub String);

impl ConceptName {
    pub fn new(text: impl Into<String>) -> Result<Self, InvalidConceptName> {
        let text = text.into();
        if Self::is_valid(&text) {
            Ok(Self(text))
        } else {
            Err(InvalidConceptName(text))
        }
    }

    /// `[A-Z][A-Z0-9-]*`
    pub fn is_valid(text: &str) -> bool {
        let mut chars = text.chars();
        match chars.next() {
            Some(c) if c.is_ascii_uppercase() => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '-')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ConceptName {
    type Err = InvalidConceptName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl AsRef<str> for ConceptName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Shorthand used throughout the crate for names known to be valid.
///
/// Panics on an invalid name, so only use it with literals.
pub fn concept(name: &str) -> ConceptName {
    ConceptName::new(name).expect("literal concept name")
}

pub const ROOT: &str = "ALL";
pub const UPPER_CONCEPTS: [&str; 3] = ["OBJECT", "EVENT", "PROPERTY"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LiteralKind {
    Text,
    Number,
    Tuple,
    Dims,
    Comparator,
    Xref,
}

impl LiteralKind {
    pub fn keyword(self) -> &'static str {
        match self {
            LiteralKind::Text => "text",
            LiteralKind::Number => "number",
            LiteralKind::Tuple => "tuple",
            LiteralKind::Dims => "dims",
            LiteralKind::Comparator => "comparator",
            LiteralKind::Xref => "xref",
        }
    }

    fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "text" => LiteralKind::Text,
            "number" => LiteralKind::Number,
            "tuple" => LiteralKind::Tuple,
            "dims" => LiteralKind::Dims,
            "comparator" => LiteralKind::Comparator,
            "xref" => LiteralKind::Xref,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RangeItem {
    Concept(ConceptName),
    Literal(LiteralKind),
}

impl fmt::Display for RangeItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeItem::Concept(c) => write!(f, "{c}"),
            RangeItem::Literal(k) => f.write_str(k.keyword()),
        }
    }
}

/// The set of admissible fillers for a property on some concept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeSpec {
    pub items: Vec<RangeItem>,
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut items = Vec::new();
        for part in s.split('|') {
            if let Some(kind) = LiteralKind::from_keyword(part) {
                items.push(RangeItem::Literal(kind));
            } else {
                let name = ConceptName::new(part).map_err(|e| e.to_string())?;
                items.push(RangeItem::Concept(name));
            }
        }
        if items.is_empty() {
            return Err("empty range".into());
        }
        Ok(RangeSpec { items })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Relation,
    Attribute,
}

/// One line of an ontology fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OntologyRecord {
    /// Blank lines and `#` comments, kept verbatim.
    Verbatim(String),
    Concept {
        name: ConceptName,
        parents: Vec<ConceptName>,
    },
    Constrain {
        concept: ConceptName,
        property: ConceptName,
        range: RangeSpec,
    },
}

impl fmt::Display for OntologyRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OntologyRecord::Verbatim(line) => f.write_str(line),
            OntologyRecord::Concept { name, parents } => {
                write!(f, "CONCEPT {name}")?;
                if !parents.is_empty() {
                    f.write_str(" ISA ")?;
                    let joined: Vec<&str> = parents.iter().map(|p| p.as_str()).collect();
                    f.write_str(&joined.join(","))?;
                }
                Ok(())
            }
            OntologyRecord::Constrain {
                concept,
                property,
                range,
            } => write!(f, "CONSTRAIN {concept} {property} {range}"),
        }
    }
}

/// The parsed record list of an ontology fixture.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OntologyDoc {
    pub records: Vec<OntologyRecord>,
}

impl OntologyDoc {
    pub fn parse(source: &str) -> Result<Self, OntologyError> {
        let mut records = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                records.push(OntologyRecord::Verbatim(line.to_string()));
                continue;
            }
            let words: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = |msg: &str| OntologyError::Syntax {
                line: line_no,
                message: msg.to_string(),
            };
            let name = |w: &str| ConceptName::new(w).map_err(|e| bad(&e.to_string()));
            match words.as_slice() {
                ["CONCEPT", n] => records.push(OntologyRecord::Concept {
                    name: name(n)?,
                    parents: Vec::new(),
                }),
                ["CONCEPT", n, "ISA", parents] => {
                    let parents = parents.split(',').map(name).collect::<Result<Vec<_>, _>>()?;
                    records.push(OntologyRecord::Concept {
                        name: name(n)?,
                        parents,
                    });
                }
                ["CONSTRAIN", c, p, range] => records.push(OntologyRecord::Constrain {
                    concept: name(c)?,
                    property: name(p)?,
                    range: range.parse().map_err(|e: String| bad(&e))?,
                }),
                _ => return Err(bad("expected CONCEPT or CONSTRAIN record")),
            }
        }
        Ok(OntologyDoc { records })
    }

    /// Formats every record on its own line, newline-terminated.
    pub fn format(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no ALL root")]
    NoRoot,
    #[error("concept {0} declared twice")]
    Duplicate(ConceptName),
    #[error("concept {concept} names undeclared parent {parent}")]
    UndeclaredParent { concept: ConceptName, parent: ConceptName },
    #[error("concept {0} has no parent")]
    Orphan(ConceptName),
    #[error("ALL must not have parents")]
    RootWithParents,
    #[error("ISA cycle: {}", render_chain(.0))]
    Cycle(Vec<ConceptName>),
    #[error("ALL is missing upper concept {0}")]
    MissingUpperConcept(&'static str),
    #[error("constraint names undeclared concept {0}")]
    UndeclaredInConstraint(ConceptName),
    #[error("{0} is constrained as a property but does not descend from PROPERTY")]
    NotAProperty(ConceptName),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptName),
}

fn render_chain(chain: &[ConceptName]) -> String {
    chain.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" -> ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ConceptDef {
    parents: Vec<ConceptName>,
    constraints: Vec<(ConceptName, RangeSpec)>,
}

/// An immutable, validated concept graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyGraph {
    concepts: BTreeMap<ConceptName, ConceptDef>,
    order: Vec<ConceptName>,
}

/// Builds a graph from fixture text.
pub fn load_ontology(source: &str) -> Result<OntologyGraph, OntologyError> {
    OntologyGraph::from_doc(&OntologyDoc::parse(source)?)
}

impl OntologyGraph {
    /// The ontology shipped with the crate.
    pub fn seed() -> Self {
        load_ontology(crate::fixtures::ONTOLOGY).expect("seed ontology is valid")
    }

    pub fn from_doc(doc: &OntologyDoc) -> Result<Self, OntologyError> {
        let mut concepts: BTreeMap<ConceptName, ConceptDef> = BTreeMap::new();
        let mut order = Vec::new();
        for record in &doc.records {
            if let OntologyRecord::Concept { name, parents } = record {
                if concepts.contains_key(name) {
                    return Err(OntologyError::Duplicate(name.clone()));
                }
                concepts.insert(
                    name.clone(),
                    ConceptDef {
                        parents: parents.clone(),
                        constraints: Vec::new(),
                    },
                );
                order.push(name.clone());
            }
        }
        let root = concept(ROOT);
        let Some(root_def) = concepts.get(&root) else {
            return Err(OntologyError::NoRoot);
        };
        if !root_def.parents.is_empty() {
            return Err(OntologyError::RootWithParents);
        }
        for name in &order {
            let def = &concepts[name];
            if def.parents.is_empty() && *name != root {
                return Err(OntologyError::Orphan(name.clone()));
            }
            for parent in &def.parents {
                if !concepts.contains_key(parent) {
                    return Err(OntologyError::UndeclaredParent {
                        concept: name.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        if let Some(chain) = find_cycle(&concepts, &order) {
            return Err(OntologyError::Cycle(chain));
        }
        for upper in UPPER_CONCEPTS {
            let ok = concepts.get(&concept(upper)).is_some_and(|d| d.parents.contains(&root));
            if !ok {
                return Err(OntologyError::MissingUpperConcept(upper));
            }
        }
        let mut graph = OntologyGraph { concepts, order };
        for record in &doc.records {
            if let OntologyRecord::Constrain {
                concept: c,
                property,
                range,
            } = record
            {
                for name in [c, property] {
                    if !graph.contains(name) {
                        return Err(OntologyError::UndeclaredInConstraint(name.clone()));
                    }
                }
                if !graph.is_property(property) {
                    return Err(OntologyError::NotAProperty(property.clone()));
                }
                for item in &range.items {
                    if let RangeItem::Concept(r) = item {
                        if !graph.contains(r) {
                            return Err(OntologyError::UndeclaredInConstraint(r.clone()));
                        }
                    }
                }
                graph
                    .concepts
                    .get_mut(c)
                    .expect("checked above")
                    .constraints
                    .push((property.clone(), range.clone()));
            }
        }
        Ok(graph)
    }

    pub fn contains(&self, name: &ConceptName) -> bool {
        self.concepts.contains_key(name)
    }

    /// Concepts in fixture declaration order.
    pub fn concepts(&self) -> impl Iterator<Item = &ConceptName> {
        self.order.iter()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn parents(&self, name: &ConceptName) -> Result<&[ConceptName], OntologyError> {
        self.concepts
            .get(name)
            .map(|d| d.parents.as_slice())
            .ok_or_else(|| OntologyError::UnknownConcept(name.clone()))
    }

    /// True iff `ancestor` is in the reflexive-transitive parent closure of `child`.
    pub fn is_subsumed_by(&self, child: &ConceptName, ancestor: &ConceptName) -> Result<bool, OntologyError> {
        for name in [child, ancestor] {
            if !self.contains(name) {
                return Err(OntologyError::UnknownConcept(name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![child];
        while let Some(current) = stack.pop() {
            if current == ancestor {
                return Ok(true);
            }
            if seen.insert(current) {
                stack.extend(self.concepts[current].parents.iter());
            }
        }
        Ok(false)
    }

    /// Like [`is_subsumed_by`](Self::is_subsumed_by) but false for unknown names.
    pub fn isa(&self, child: &ConceptName, ancestor: &str) -> bool {
        ConceptName::new(ancestor)
            .ok()
            .and_then(|a| self.is_subsumed_by(child, &a).ok())
            .unwrap_or(false)
    }

    /// Either concept subsumes the other.
    pub fn compatible(&self, a: &ConceptName, b: &ConceptName) -> bool {
        self.is_subsumed_by(a, b).unwrap_or(false) || self.is_subsumed_by(b, a).unwrap_or(false)
    }

    pub fn is_property(&self, name: &ConceptName) -> bool {
        name.as_str() != "PROPERTY" && self.isa(name, "PROPERTY")
    }

    pub fn property_kind(&self, name: &ConceptName) -> Option<PropertyKind> {
        if self.isa(name, "RELATION") {
            Some(PropertyKind::Relation)
        } else if self.isa(name, "ATTRIBUTE") {
            Some(PropertyKind::Attribute)
        } else {
            None
        }
    }

    /// The range constraint on `property` that applies to `concept`.
    ///
    /// Ancestors are searched breadth-first in fixture parent order, so the
    /// nearest override wins and ties go to the first-listed parent. `None`
    /// means no constraint is declared anywhere on the path.
    pub fn inherited_filler(
        &self,
        concept: &ConceptName,
        property: &ConceptName,
    ) -> Result<Option<&RangeSpec>, OntologyError> {
        for name in [concept, property] {
            if !self.contains(name) {
                return Err(OntologyError::UnknownConcept(name.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([concept]);
        while let Some(current) = queue.pop_front() {
            if !seen.insert(current) {
                continue;
            }
            let def = &self.concepts[current];
            if let Some((_, range)) = def.constraints.iter().find(|(p, _)| p == property) {
                return Ok(Some(range));
            }
            queue.extend(def.parents.iter());
        }
        Ok(None)
    }

    /// Checks a frame against the graph. An empty list means the frame is well typed.
    pub fn validate_frame(&self, frame: &Frame) -> Vec<Violation> {
        let head = &frame.head.concept;
        if !self.contains(head) {
            return vec![Violation::UnknownHead(head.clone())];
        }
        let mut out = Vec::new();
        for slot in &frame.slots {
            let property = &slot.property;
            if !self.is_property(property) {
                out.push(Violation::UndeclaredProperty(property.clone()));
                continue;
            }
            let range = match self.inherited_filler(head, property) {
                Ok(Some(range)) => range,
                _ => {
                    out.push(Violation::NotApplicable {
                        concept: head.clone(),
                        property: property.clone(),
                    });
                    continue;
                }
            };
            for value in &slot.values {
                if !self.value_in_range(value, range) {
                    out.push(Violation::OutOfRange {
                        property: property.clone(),
                        value: value.to_string(),
                        range: range.to_string(),
                    });
                }
            }
        }
        out
    }

    fn value_in_range(&self, value: &SlotValue, range: &RangeSpec) -> bool {
        let concept_ok = |c: &ConceptName| {
            self.contains(c)
                && range.items.iter().any(|item| match item {
                    RangeItem::Concept(r) => self.is_subsumed_by(c, r).unwrap_or(false),
                    RangeItem::Literal(_) => false,
                })
        };
        let literal_ok = |kind: LiteralKind| range.items.contains(&RangeItem::Literal(kind));
        match value {
            SlotValue::Instance(r) => concept_ok(&r.concept),
            SlotValue::Concept(c) => concept_ok(c),
            SlotValue::Text(_) => literal_ok(LiteralKind::Text),
            SlotValue::Number(_) => literal_ok(LiteralKind::Number),
            SlotValue::Tuple(t) => match t.style {
                TupleStyle::Paren => literal_ok(LiteralKind::Tuple),
                TupleStyle::Dims => literal_ok(LiteralKind::Dims),
            },
            SlotValue::Comparator { .. } => literal_ok(LiteralKind::Comparator),
            SlotValue::CrossRef(_) => literal_ok(LiteralKind::Xref),
        }
    }
}

fn find_cycle(concepts: &BTreeMap<ConceptName, ConceptDef>, order: &[ConceptName]) -> Option<Vec<ConceptName>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&ConceptName, Mark> = BTreeMap::new();
    for start in order {
        if marks.contains_key(start) {
            continue;
        }
        // (node, next parent index)
        let mut stack: Vec<(&ConceptName, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some((node, next)) = stack.last_mut() {
            let parents = &concepts[*node].parents;
            if *next < parents.len() {
                let parent = &parents[*next];
                *next += 1;
                match marks.get(parent) {
                    Some(Mark::Open) => {
                        let from = stack.iter().position(|(n, _)| *n == parent).unwrap_or(0);
                        let mut chain: Vec<ConceptName> = stack[from..].iter().map(|(n, _)| (*n).clone()).collect();
                        chain.push(parent.clone());
                        return Some(chain);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(parent, Mark::Open);
                        stack.push((parent, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}

/// A reason a frame is not well typed. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownHead(ConceptName),
    UndeclaredProperty(ConceptName),
    NotApplicable {
        concept: ConceptName,
        property: ConceptName,
    },
    OutOfRange {
        property: ConceptName,
        value: String,
        range: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownHead(c) => write!(f, "unknown head concept {c}"),
            Violation::UndeclaredProperty(p) => write!(f, "undeclared property {p}"),
            Violation::NotApplicable { concept, property } => {
                write!(f, "{property} has no constraint on {concept}")
            }
            Violation::OutOfRange { property, value, range } => {
                write!(f, "{property} filler {value} outside range {range}")
            }
        }
    }
}
