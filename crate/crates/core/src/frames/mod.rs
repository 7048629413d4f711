//! Meaning representations: instances, slot values, frames and documents.
//!
//! Panel text grammar, byte exact:
//!
//! ```text
//! TMR.1	owner=UGV	tick=3	source=msg:1      <- document header (transcripts only)
//! KEY.1                                       <- frame head
//! CARDINALITY	>,1                             <- PROPERTY <tab> value[,value...]
//! COREFER	TMR.1/KEY.1,#KEY.1
//! ```
//!
//! Seven value forms exist and each renders distinctly:
//!
//! | form        | example                   |
//! |-------------|---------------------------|
//! | instance    | `KEY.1`, `#KEY.1`         |
//! | concept     | `BLUE-GREEN`              |
//! | text        | `Long`, `"A, b"`          |
//! | number      | `1`, `0.5`                |
//! | tuple       | `(510.00, 0.00, 23.00)`, `10x2` |
//! | comparator  | `>,1`, `>,FIND-ANCHOR-TIME` |
//! | cross-ref   | `TMR.3/KEY.1`             |
//!
//! Text is written bare unless the bare form would read back as another kind
//! or contains one of `, " \ ( )` or a control character; then it is quoted
//! with `\"`, `\\`, `\t`, `\n`, `\r` escapes.
#![allow(clippy::tabs_in_doc_comments)]

mod memory;

pub use memory::{anchor_frame, AnchorOrigin, AnchorRecord, Bindings, CorefConflict, Episode, EpisodicMemory};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geom::{Fixed, Vec3};
use crate::ontology::{ConceptName, OntologyGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("empty document")]
    Empty,
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptName),
}

fn syntax(line: usize, message: impl Into<String>) -> FrameError {
    FrameError::Syntax {
        line,
        message: message.into(),
    }
}

/// `KEY.1` or, when anchored in episodic memory, `#KEY.1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceRef {
    pub concept: ConceptName,
    pub index: u32,
    pub anchored: bool,
}

impl InstanceRef {
    pub fn new(concept: ConceptName, index: u32) -> Self {
        InstanceRef {
            concept,
            index,
            anchored: false,
        }
    }

    pub fn anchor(concept: ConceptName, index: u32) -> Self {
        InstanceRef {
            concept,
            index,
            anchored: true,
        }
    }

    pub fn as_anchor(&self) -> Self {
        InstanceRef::anchor(self.concept.clone(), self.index)
    }

    pub fn as_local(&self) -> Self {
        InstanceRef::new(self.concept.clone(), self.index)
    }
}

impl fmt::Display for InstanceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.anchored {
            f.write_str("#")?;
        }
        write!(f, "{}.{}", self.concept, self.index)
    }
}

impl FromStr for InstanceRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (anchored, body) = match s.strip_prefix('#') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (name, index) = body
            .rsplit_once('.')
            .ok_or_else(|| format!("{s:?} is not an instance"))?;
        let concept = ConceptName::new(name).map_err(|e| e.to_string())?;
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) || index.starts_with('0') {
            return Err(format!("{s:?} has a bad instance index"));
        }
        let index: u32 = index.parse().map_err(|_| format!("{s:?} index overflows"))?;
        Ok(InstanceRef {
            concept,
            index,
            anchored,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DocKind {
    Tmr,
    Vmr,
}

impl DocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Tmr => "TMR",
            DocKind::Vmr => "VMR",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `TMR.3`, numbered per owner and kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId {
    pub kind: DocKind,
    pub n: u32,
}

impl DocId {
    pub fn tmr(n: u32) -> Self {
        DocId { kind: DocKind::Tmr, n }
    }

    pub fn vmr(n: u32) -> Self {
        DocId { kind: DocKind::Vmr, n }
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.kind, self.n)
    }
}

impl FromStr for DocId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, n) = s.split_once('.').ok_or_else(|| format!("bad document id {s:?}"))?;
        let kind = match kind {
            "TMR" => DocKind::Tmr,
            "VMR" => DocKind::Vmr,
            _ => return Err(format!("bad document kind in {s:?}")),
        };
        if n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) || n.starts_with('0') {
            return Err(format!("bad document number in {s:?}"));
        }
        let n = n.parse().map_err(|_| format!("document number overflows in {s:?}"))?;
        Ok(DocId { kind, n })
    }
}

/// `TMR.3/KEY.1`: an instance as it appeared in an earlier document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrossRef {
    pub doc: DocId,
    pub instance: InstanceRef,
}

impl fmt::Display for CrossRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.doc, self.instance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TupleStyle {
    /// `(510.00, 0.00, 23.00)`
    Paren,
    /// `10x2`
    Dims,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tuple {
    pub style: TupleStyle,
    pub components: Vec<Fixed>,
}

impl Tuple {
    pub fn paren(components: Vec<Fixed>) -> Self {
        Tuple {
            style: TupleStyle::Paren,
            components,
        }
    }

    pub fn dims(components: Vec<Fixed>) -> Self {
        Tuple {
            style: TupleStyle::Dims,
            components,
        }
    }

    pub fn as_vec3(&self) -> Option<Vec3> {
        match self.components.as_slice() {
            [x, y, z] => Some(Vec3::new(*x, *y, *z)),
            _ => None,
        }
    }
}

impl From<Vec3> for Tuple {
    fn from(v: Vec3) -> Self {
        Tuple::paren(v.components().to_vec())
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.style {
            TupleStyle::Paren => {
                let parts: Vec<String> = self.components.iter().map(|c| c.decimal()).collect();
                write!(f, "({})", parts.join(", "))
            }
            TupleStyle::Dims => {
                let parts: Vec<String> = self.components.iter().map(|c| c.compact()).collect();
                f.write_str(&parts.join("x"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Gt,
    Lt,
    Ge,
    Le,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Gt => ">",
            CompareOp::Lt => "<",
            CompareOp::Ge => ">=",
            CompareOp::Le => "<=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            ">" => CompareOp::Gt,
            "<" => CompareOp::Lt,
            ">=" => CompareOp::Ge,
            "<=" => CompareOp::Le,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Number(f64),
    /// An opaque token such as `FIND-ANCHOR-TIME`.
    Symbol(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Number(n) => write!(f, "{n}"),
            Operand::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotValue {
    Instance(InstanceRef),
    Concept(ConceptName),
    Text(String),
    Number(f64),
    Tuple(Tuple),
    Comparator { op: CompareOp, operand: Operand },
    CrossRef(CrossRef),
}

impl SlotValue {
    pub fn text(s: impl Into<String>) -> Self {
        SlotValue::Text(s.into())
    }

    pub fn concept(name: &str) -> Self {
        SlotValue::Concept(crate::ontology::concept(name))
    }

    pub fn comparator(op: CompareOp, operand: Operand) -> Self {
        SlotValue::Comparator { op, operand }
    }

    pub fn as_instance(&self) -> Option<&InstanceRef> {
        match self {
            SlotValue::Instance(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_concept(&self) -> Option<&ConceptName> {
        match self {
            SlotValue::Concept(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            SlotValue::Text(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&Tuple> {
        match self {
            SlotValue::Tuple(t) => Some(t),
            _ => None,
        }
    }
}

impl From<InstanceRef> for SlotValue {
    fn from(r: InstanceRef) -> Self {
        SlotValue::Instance(r)
    }
}

impl From<Vec3> for SlotValue {
    fn from(v: Vec3) -> Self {
        SlotValue::Tuple(v.into())
    }
}

impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotValue::Instance(r) => write!(f, "{r}"),
            SlotValue::Concept(c) => write!(f, "{c}"),
            SlotValue::Text(t) => {
                if text_is_bare(t) {
                    f.write_str(t)
                } else {
                    f.write_str(&quote(t))
                }
            }
            SlotValue::Number(n) => write!(f, "{n}"),
            SlotValue::Tuple(t) => write!(f, "{t}"),
            SlotValue::Comparator { op, operand } => write!(f, "{},{operand}", op.as_str()),
            SlotValue::CrossRef(x) => write!(f, "{x}"),
        }
    }
}

fn quote(t: &str) -> String {
    let mut out = String::with_capacity(t.len() + 2);
    out.push('"');
    for ch in t.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unquote(token: &str) -> Result<String, String> {
    let inner = token
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .filter(|_| token.len() >= 2)
        .ok_or_else(|| format!("unterminated quote in {token:?}"))?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(ch) = chars.next() {
        match ch {
            '\\' => match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                other => return Err(format!("bad escape {other:?} in {token:?}")),
            },
            '"' => return Err(format!("stray quote in {token:?}")),
            c => out.push(c),
        }
    }
    Ok(out)
}

fn text_is_bare(t: &str) -> bool {
    !t.is_empty()
        && t.trim() == t
        && !t
            .chars()
            .any(|c| matches!(c, ',' | '"' | '\\' | '(' | ')') || c.is_control())
        && CompareOp::parse(t).is_none()
        && matches!(classify_bare(t), Ok(SlotValue::Text(_)))
}

fn is_number(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

/// Reads one comma-free token.
fn classify_bare(token: &str) -> Result<SlotValue, String> {
    if token.starts_with('"') {
        return unquote(token).map(SlotValue::Text);
    }
    if let Some(inner) = token.strip_prefix('(') {
        let inner = inner
            .strip_suffix(')')
            .ok_or_else(|| format!("unterminated tuple {token:?}"))?;
        let components = inner
            .split(',')
            .map(|p| p.trim().parse::<Fixed>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if !(2..=3).contains(&components.len()) {
            return Err(format!("tuple {token:?} needs 2 or 3 components"));
        }
        return Ok(SlotValue::Tuple(Tuple::paren(components)));
    }
    if let Some((doc, inst)) = token.split_once('/') {
        if let Ok(doc) = doc.parse::<DocId>() {
            let instance = inst.parse::<InstanceRef>()?;
            return Ok(SlotValue::CrossRef(CrossRef { doc, instance }));
        }
    }
    if token.starts_with('#') {
        return token.parse::<InstanceRef>().map(SlotValue::Instance);
    }
    if let Ok(r) = token.parse::<InstanceRef>() {
        return Ok(SlotValue::Instance(r));
    }
    if ConceptName::is_valid(token) {
        return Ok(SlotValue::Concept(ConceptName::new(token).map_err(|e| e.to_string())?));
    }
    if is_number(token) {
        return token.parse::<f64>().map(SlotValue::Number).map_err(|e| e.to_string());
    }
    if token.contains('x') {
        let parts: Vec<&str> = token.split('x').collect();
        if (2..=3).contains(&parts.len()) && parts.iter().all(|p| is_number(p)) {
            let components = parts
                .iter()
                .map(|p| p.parse::<Fixed>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(SlotValue::Tuple(Tuple::dims(components)));
        }
    }
    if token.is_empty() {
        return Err("empty value".into());
    }
    Ok(SlotValue::Text(token.to_string()))
}

/// Splits a slot's value column on commas outside quotes and parentheses.
fn split_values(column: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut in_quote = false;
    let mut escaped = false;
    let mut start = 0;
    for (i, ch) in column.char_indices() {
        if in_quote {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_quote = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_quote = true,
            '(' => depth += 1,
            ')' => depth = depth.checked_sub(1).ok_or("unbalanced ')'")?,
            ',' if depth == 0 => {
                out.push(column[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if in_quote {
        return Err("unterminated quote".into());
    }
    if depth != 0 {
        return Err("unbalanced '('".into());
    }
    out.push(column[start..].trim());
    Ok(out)
}

/// Parses a slot's value column: `>,1` / `TMR.3/KEY.1,#KEY.1` / `Long`.
pub fn parse_values(column: &str) -> Result<Vec<SlotValue>, String> {
    let tokens = split_values(column)?;
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let token = tokens[i];
        if let Some(op) = CompareOp::parse(token) {
            let operand = tokens
                .get(i + 1)
                .ok_or_else(|| format!("comparator {token} without operand"))?;
            let operand = if is_number(operand) {
                Operand::Number(operand.parse().map_err(|_| "bad operand".to_string())?)
            } else if ConceptName::is_valid(operand) {
                Operand::Symbol(operand.to_string())
            } else {
                return Err(format!("bad comparator operand {operand:?}"));
            };
            out.push(SlotValue::Comparator { op, operand });
            i += 2;
            continue;
        }
        out.push(classify_bare(token)?);
        i += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub property: ConceptName,
    pub values: Vec<SlotValue>,
}

impl Slot {
    pub fn new(property: ConceptName, values: Vec<SlotValue>) -> Self {
        Slot { property, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub head: InstanceRef,
    pub slots: Vec<Slot>,
}

impl Frame {
    pub fn new(head: InstanceRef) -> Self {
        Frame {
            head,
            slots: Vec::new(),
        }
    }

    /// Appends values to `property`, creating the slot at the end if absent.
    pub fn push(&mut self, property: ConceptName, value: SlotValue) -> &mut Self {
        match self.slots.iter_mut().find(|s| s.property == property) {
            Some(slot) => slot.values.push(value),
            None => self.slots.push(Slot::new(property, vec![value])),
        }
        self
    }

    pub fn with(mut self, property: &str, value: SlotValue) -> Self {
        self.push(crate::ontology::concept(property), value);
        self
    }

    pub fn get(&self, property: &str) -> Option<&[SlotValue]> {
        self.slots
            .iter()
            .find(|s| s.property.as_str() == property)
            .map(|s| s.values.as_slice())
    }

    pub fn first(&self, property: &str) -> Option<&SlotValue> {
        self.get(property).and_then(|v| v.first())
    }

    /// Every instance reference mentioned in a slot, cross-refs excluded.
    pub fn mentions(&self) -> impl Iterator<Item = &InstanceRef> {
        self.slots
            .iter()
            .flat_map(|s| s.values.iter())
            .filter_map(SlotValue::as_instance)
    }
}

/// Panel rendering: head line, then `PROPERTY\tv1,v2` per slot.
pub fn render_frame(frame: &Frame) -> String {
    let mut out = frame.head.to_string();
    for slot in &frame.slots {
        out.push('\n');
        out.push_str(slot.property.as_str());
        out.push('\t');
        let values: Vec<String> = slot.values.iter().map(|v| v.to_string()).collect();
        out.push_str(&values.join(","));
    }
    out
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_frame(self))
    }
}

/// Parses header-less frame text; blank lines are skipped. `first_line` is
/// the 1-based number of the first line, for error messages.
fn parse_frame_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<Frame>, FrameError> {
    let mut frames: Vec<Frame> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        match line.split_once('\t') {
            None => {
                let head = line.parse::<InstanceRef>().map_err(|e| syntax(n, e))?;
                frames.push(Frame::new(head));
            }
            Some((property, column)) => {
                let frame = frames
                    .last_mut()
                    .ok_or_else(|| syntax(n, "slot line before any frame head"))?;
                let property = ConceptName::new(property).map_err(|e| syntax(n, e.to_string()))?;
                if frame.slots.iter().any(|s| s.property == property) {
                    return Err(syntax(n, format!("repeated slot {property}")));
                }
                let values = parse_values(column).map_err(|e| syntax(n, e))?;
                if values.is_empty() {
                    return Err(syntax(n, "slot without values"));
                }
                frame.slots.push(Slot::new(property, values));
            }
        }
    }
    Ok(frames)
}

pub fn parse_frames(text: &str) -> Result<Vec<Frame>, FrameError> {
    parse_frame_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    /// A delivered message, by message id.
    Message(u64),
    /// A sensing pass, by percept id.
    Percept(u64),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Message(n) => write!(f, "msg:{n}"),
            Source::Percept(n) => write!(f, "percept:{n}"),
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, n) = s.split_once(':').ok_or_else(|| format!("bad source {s:?}"))?;
        let n: u64 = n.parse().map_err(|_| format!("bad source number in {s:?}"))?;
        match kind {
            "msg" => Ok(Source::Message(n)),
            "percept" => Ok(Source::Percept(n)),
            _ => Err(format!("bad source kind in {s:?}")),
        }
    }
}

/// A TMR or VMR.
#[derive(Debug, Clone, PartialEq)]
pub struct MrDocument {
    pub id: DocId,
    pub owner: String,
    pub tick: u64,
    pub source: Source,
    pub frames: Vec<Frame>,
}

impl MrDocument {
    pub fn kind(&self) -> DocKind {
        self.id.kind
    }

    pub fn header(&self) -> String {
        format!(
            "{}\towner={}\ttick={}\tsource={}",
            self.id, self.owner, self.tick, self.source
        )
    }

    pub fn frame(&self, head: &InstanceRef) -> Option<&Frame> {
        self.frames.iter().find(|f| &f.head == head)
    }

    /// Frames whose concept is `concept`.
    pub fn frames_of<'a>(&'a self, concept: &'a str) -> impl Iterator<Item = &'a Frame> + 'a {
        self.frames.iter().filter(move |f| f.head.concept.as_str() == concept)
    }

    /// The frame the document is "about": the first event frame no other
    /// frame points at, else the first unreferenced frame, else the first.
    pub fn head_frame(&self, ontology: &OntologyGraph) -> Option<&Frame> {
        let referenced: Vec<&InstanceRef> = self.frames.iter().flat_map(|f| f.mentions()).collect();
        let free = || self.frames.iter().filter(|f| !referenced.contains(&&f.head));
        free()
            .find(|f| ontology.isa(&f.head.concept, "EVENT"))
            .or_else(|| free().next())
            .or_else(|| self.frames.first())
    }

    /// Frames in the panel view, without the header.
    pub fn render_body(&self) -> String {
        let frames: Vec<String> = self.frames.iter().map(render_frame).collect();
        frames.join("\n")
    }

    /// Header plus body, as stored in transcripts.
    pub fn render(&self) -> String {
        if self.frames.is_empty() {
            self.header()
        } else {
            format!("{}\n{}", self.header(), self.render_body())
        }
    }

    /// Instance references that neither head a frame here nor are anchored.
    pub fn dangling(&self) -> Vec<InstanceRef> {
        let mut out = Vec::new();
        for r in self.frames.iter().flat_map(|f| f.mentions()) {
            if !r.anchored && self.frame(r).is_none() && !out.contains(r) {
                out.push(r.clone());
            }
        }
        out
    }
}

impl fmt::Display for MrDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Parses a transcript document: header line then frames.
pub fn parse_mr_text(text: &str) -> Result<MrDocument, FrameError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, header) = loop {
        match lines.next() {
            None => return Err(FrameError::Empty),
            Some((_, "")) => continue,
            Some(line) => break line,
        }
    };
    let mut fields = header.split('\t');
    let id = fields
        .next()
        .unwrap_or_default()
        .parse::<DocId>()
        .map_err(|e| syntax(n, e))?;
    let mut kv = BTreeMap::new();
    for field in fields {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| syntax(n, format!("bad header field {field:?}")))?;
        if kv.insert(k, v).is_some() {
            return Err(syntax(n, format!("repeated header field {k}")));
        }
    }
    let take = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| syntax(n, format!("header missing {key}")))
    };
    let owner = take("owner")?;
    if owner.is_empty() || owner.contains(char::is_whitespace) {
        return Err(syntax(n, "bad owner"));
    }
    let tick = take("tick")?.parse::<u64>().map_err(|_| syntax(n, "bad tick"))?;
    let source = take("source")?.parse::<Source>().map_err(|e| syntax(n, e))?;
    if kv.len() != 3 {
        return Err(syntax(n, "unexpected header field"));
    }
    let frames = parse_frame_lines(lines)?;
    Ok(MrDocument {
        id,
        owner: owner.to_string(),
        tick,
        source,
        frames,
    })
}

/// Per-document instance numbering: the n-th `KEY` minted is `KEY.n`.
#[derive(Debug, Default, Clone)]
pub struct InstanceCounter {
    next: BTreeMap<ConceptName, u32>,
}

impl InstanceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_instance(&mut self, concept: &ConceptName, ontology: &OntologyGraph) -> Result<InstanceRef, FrameError> {
        if !ontology.contains(concept) {
            return Err(FrameError::UnknownConcept(concept.clone()));
        }
        let n = self.next.entry(concept.clone()).or_insert(0);
        *n += 1;
        Ok(InstanceRef::new(concept.clone(), *n))
    }
}

/// Canonical frame order inside a document: by concept, then index.
pub fn sort_frames(frames: &mut [Frame]) {
    frames.sort_by(|a, b| (a.head.concept.as_str(), a.head.index).cmp(&(b.head.concept.as_str(), b.head.index)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::concept;
    use proptest::prelude::*;

    #[test]
    fn renders_the_request_key_frame() {
        let key = Frame::new(InstanceRef::new(concept("KEY"), 1))
            .with(
                "CARDINALITY",
                SlotValue::comparator(CompareOp::Gt, Operand::Number(1.0)),
            )
            .with(
                "COREFER",
                SlotValue::CrossRef(CrossRef {
                    doc: DocId::tmr(3),
                    instance: InstanceRef::new(concept("KEY"), 1),
                }),
            )
            .with("COREFER", InstanceRef::anchor(concept("KEY"), 1).into());
        assert_eq!(
            render_frame(&key),
            "KEY.1\nCARDINALITY\t>,1\nCOREFER\tTMR.3/KEY.1,#KEY.1"
        );
    }

    #[test]
    fn zero_slots_is_head_only() {
        let f = Frame::new(InstanceRef::new(concept("LEIA"), 1));
        assert_eq!(render_frame(&f), "LEIA.1");
    }

    #[test]
    fn carpet_frame_forms() {
        let text = "CARPET.1\nSUB-CLASS\tLong\nCOLOR\tBLUE-GREEN\nPATTERN\tSTRIPES\nMATERIAL\tJUTE\n\
                    DIMENSIONS\t10x2\nLOCATION-ABSOLUTE\t(510.00, 0.00, 23.00)\n\
                    ROTATION-ABSOLUTE\t(0.00, 90.00, 0.00)\nCOREFER\t#CARPET.1";
        let frames = parse_frames(text).unwrap();
        assert_eq!(frames.len(), 1);
        let f = &frames[0];
        assert_eq!(f.slots.len(), 8);
        assert_eq!(f.first("SUB-CLASS"), Some(&SlotValue::text("Long")));
        assert_eq!(f.first("COLOR"), Some(&SlotValue::concept("BLUE-GREEN")));
        assert_eq!(
            f.first("DIMENSIONS"),
            Some(&SlotValue::Tuple(Tuple::dims(vec![Fixed(1000), Fixed(200)])))
        );
        assert_eq!(
            f.first("LOCATION-ABSOLUTE"),
            Some(&SlotValue::Tuple(Tuple::paren(vec![
                Fixed(51000),
                Fixed(0),
                Fixed(2300)
            ])))
        );
        assert_eq!(render_frame(f), text);
    }

    #[test]
    fn comparator_with_symbolic_operand() {
        let v = parse_values(">,FIND-ANCHOR-TIME").unwrap();
        assert_eq!(
            v,
            vec![SlotValue::comparator(
                CompareOp::Gt,
                Operand::Symbol("FIND-ANCHOR-TIME".into())
            )]
        );
        let v = parse_values(">,1").unwrap();
        assert_eq!(v, vec![SlotValue::comparator(CompareOp::Gt, Operand::Number(1.0))]);
    }

    #[test]
    fn ambiguous_text_is_quoted() {
        for t in [
            "KEY",
            "KEY.1",
            "1",
            "10x2",
            ">",
            "",
            " pad",
            "a,b",
            "say \"hi\"",
            "#X",
            "TMR.1/KEY.1",
        ] {
            let v = SlotValue::text(t);
            let rendered = v.to_string();
            assert!(rendered.starts_with('"'), "{t:?} rendered as {rendered}");
            assert_eq!(parse_values(&rendered).unwrap(), vec![v]);
        }
        assert_eq!(SlotValue::text("Danny").to_string(), "Danny");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_frames("KEY.1\nCOLOR\tRED\nCOLOR\tBLUE").unwrap_err();
        assert_eq!(err, syntax(3, "repeated slot COLOR"));
        assert!(matches!(parse_frames("\tRED"), Err(FrameError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_frames("KEY.1\nCOLOR\t(1, 2"),
            Err(FrameError::Syntax { line: 2, .. })
        ));
        assert!(matches!(parse_frames("key.1"), Err(FrameError::Syntax { line: 1, .. })));
        assert_eq!(parse_mr_text(""), Err(FrameError::Empty));
        assert!(matches!(
            parse_mr_text("TMR.1\towner=U"),
            Err(FrameError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn instance_numbering_counts_per_concept() {
        let g = OntologyGraph::seed();
        let mut c = InstanceCounter::new();
        assert_eq!(c.new_instance(&concept("KEY"), &g).unwrap().to_string(), "KEY.1");
        assert_eq!(c.new_instance(&concept("KEY"), &g).unwrap().to_string(), "KEY.2");
        assert_eq!(
            c.new_instance(&concept("VISUAL-EVENT"), &g).unwrap().to_string(),
            "VISUAL-EVENT.1"
        );
        assert_eq!(
            c.new_instance(&concept("WIDGET"), &g),
            Err(FrameError::UnknownConcept(concept("WIDGET")))
        );
    }

    fn arb_concept() -> impl Strategy<Value = ConceptName> {
        "[A-Z][A-Z0-9-]{0,12}".prop_map(|s| ConceptName::new(s).unwrap())
    }

    fn arb_instance() -> impl Strategy<Value = InstanceRef> {
        (arb_concept(), 1u32..50, any::<bool>()).prop_map(|(c, i, a)| InstanceRef {
            concept: c,
            index: i,
            anchored: a,
        })
    }

    fn arb_number() -> impl Strategy<Value = f64> {
        prop_oneof![(-100_000i64..100_000).prop_map(|n| n as f64), (-1.0e6f64..1.0e6),]
    }

    fn arb_value() -> impl Strategy<Value = SlotValue> {
        let fixed = (-10_000_000i64..10_000_000).prop_map(Fixed);
        prop_oneof![
            arb_instance().prop_map(SlotValue::Instance),
            arb_concept().prop_map(SlotValue::Concept),
            "[ -~\t\n\r]{0,16}".prop_map(SlotValue::Text),
            arb_number().prop_map(SlotValue::Number),
            (prop::collection::vec(fixed.clone(), 2..=3), any::<bool>()).prop_map(|(c, dims)| {
                let c = if dims {
                    c.into_iter().map(|f| Fixed(f.0.abs())).collect()
                } else {
                    c
                };
                SlotValue::Tuple(if dims { Tuple::dims(c) } else { Tuple::paren(c) })
            }),
            (
                prop_oneof![
                    Just(CompareOp::Gt),
                    Just(CompareOp::Lt),
                    Just(CompareOp::Ge),
                    Just(CompareOp::Le)
                ],
                prop_oneof![
                    arb_number().prop_map(Operand::Number),
                    arb_concept().prop_map(|c| Operand::Symbol(c.as_str().to_string())),
                ]
            )
                .prop_map(|(op, operand)| SlotValue::Comparator { op, operand }),
            (any::<bool>(), 1u32..9, arb_instance()).prop_map(|(t, n, instance)| {
                SlotValue::CrossRef(CrossRef {
                    doc: if t { DocId::tmr(n) } else { DocId::vmr(n) },
                    instance,
                })
            }),
        ]
    }

    fn arb_frame() -> impl Strategy<Value = Frame> {
        (
            arb_instance(),
            prop::collection::btree_map(
                arb_concept().prop_map(|c| c.as_str().to_string()),
                prop::collection::vec(arb_value(), 1..4),
                0..5,
            ),
        )
            .prop_map(|(head, slots)| Frame {
                head,
                slots: slots
                    .into_iter()
                    .rev()
                    .map(|(p, v)| Slot::new(concept(&p), v))
                    .collect(),
            })
    }

    fn arb_doc() -> impl Strategy<Value = MrDocument> {
        (
            any::<bool>(),
            1u32..100,
            "[A-Z]{1,6}",
            0u64..1000,
            any::<bool>(),
            0u64..100,
            prop::collection::vec(arb_frame(), 0..5),
        )
            .prop_map(|(t, n, owner, tick, msg, src, frames)| MrDocument {
                id: if t { DocId::tmr(n) } else { DocId::vmr(n) },
                owner,
                tick,
                source: if msg {
                    Source::Message(src)
                } else {
                    Source::Percept(src)
                },
                frames,
            })
    }

    proptest! {
        #[test]
        fn value_rendering_round_trips(v in arb_value()) {
            prop_assert_eq!(parse_values(&v.to_string()).unwrap(), vec![v]);
        }

        #[test]
        fn documents_round_trip(doc in arb_doc()) {
            let text = doc.render();
            let back = parse_mr_text(&text).unwrap();
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(back.render(), text);
        }

        #[test]
        fn instance_refs_round_trip(r in arb_instance()) {
            prop_assert_eq!(r.to_string().parse::<InstanceRef>().unwrap(), r);
        }
    }
}
