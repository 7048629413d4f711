//! Closed-lexicon utterance analysis.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frames::{
    parse_frames, parse_values, sort_frames, DocId, EpisodicMemory, Frame, FrameError, InstanceRef, MrDocument, Slot,
    SlotValue, Source, Tuple,
};
use crate::ontology::{concept, ConceptName, OntologyGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptName),
}

fn syntax(line: usize, message: impl Into<String>) -> LexiconError {
    LexiconError::Syntax {
        line,
        message: message.into(),
    }
}

/// A phrase belonging to a word class, with the concept it denotes and any
/// features it contributes (`keys` adds `CARDINALITY >,1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub class: String,
    pub phrase: Vec<String>,
    pub concept: ConceptName,
    pub features: Vec<(ConceptName, Vec<SlotValue>)>,
}

impl Word {
    pub fn text(&self) -> String {
        self.phrase.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Element {
    Lit(Vec<String>),
    Opt(String),
    Star,
    Class(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub priority: i32,
    pub pattern: String,
    elements: Vec<Element>,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Capture {
    Word(usize),
    Tuple(Tuple),
}

#[derive(Debug, Clone, PartialEq)]
struct Match {
    entry: usize,
    consumed: usize,
    captures: Vec<Capture>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("no individual in focus")]
    NoFocus,
    #[error("capture ${0} is not bound")]
    Unbound(usize),
    #[error("template: {0}")]
    Template(#[from] FrameError),
}

/// Everything analysis may consult about the hearer.
#[derive(Debug, Clone, Copy)]
pub struct UtteranceContext<'a> {
    pub ontology: &'a OntologyGraph,
    pub memory: &'a EpisodicMemory,
    pub owner: &'a str,
    pub doc: DocId,
    pub tick: u64,
    pub source: Source,
    pub speaker: &'a InstanceRef,
    pub self_anchor: &'a InstanceRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    words: Vec<Word>,
    entries: Vec<Entry>,
}

fn parse_pattern(line: usize, text: &str) -> Result<Vec<Element>, LexiconError> {
    text.split_whitespace()
        .map(|w| {
            if w == "*" {
                Ok(Element::Star)
            } else if let Some(class) = w.strip_prefix('{').and_then(|c| c.strip_suffix('}')) {
                Ok(Element::Class(class.to_string()))
            } else if let Some(word) = w.strip_suffix('?') {
                Ok(Element::Opt(word.to_string()))
            } else if w
                .chars()
                .all(|c| c.is_ascii_lowercase() || c == '\'' || c == '|' || c == '-')
            {
                Ok(Element::Lit(w.split('|').map(str::to_string).collect()))
            } else {
                Err(syntax(line, format!("bad pattern element {w:?}")))
            }
        })
        .collect()
}

impl Lexicon {
    pub fn seed(ontology: &OntologyGraph) -> Self {
        Lexicon::parse(crate::fixtures::LEXICON, ontology).expect("seed lexicon is valid")
    }

    pub fn parse(source: &str, ontology: &OntologyGraph) -> Result<Self, LexiconError> {
        let mut words = Vec::new();
        let mut entries: Vec<Entry> = Vec::new();
        let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l));
        while let Some((n, line)) = lines.next() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("WORD ") {
                let (lhs, rhs) = rest.split_once("=>").ok_or_else(|| syntax(n, "WORD needs =>"))?;
                let mut lhs = lhs.split_whitespace();
                let class = lhs.next().ok_or_else(|| syntax(n, "WORD needs a class"))?;
                let phrase: Vec<String> = lhs.map(str::to_string).collect();
                if phrase.is_empty() {
                    return Err(syntax(n, "WORD needs a phrase"));
                }
                let mut parts = rhs.split(';');
                let name = parts.next().unwrap_or_default().trim();
                let c = ConceptName::new(name).map_err(|e| syntax(n, e.to_string()))?;
                if !ontology.contains(&c) {
                    return Err(LexiconError::UnknownConcept(c));
                }
                let mut features = Vec::new();
                for part in parts {
                    let (p, v) = part
                        .trim()
                        .split_once(' ')
                        .ok_or_else(|| syntax(n, "feature needs a value"))?;
                    let p = ConceptName::new(p).map_err(|e| syntax(n, e.to_string()))?;
                    if !ontology.is_property(&p) {
                        return Err(LexiconError::UnknownConcept(p));
                    }
                    features.push((p, parse_values(v.trim()).map_err(|e| syntax(n, e))?));
                }
                words.push(Word {
                    class: class.to_string(),
                    phrase,
                    concept: c,
                    features,
                });
            } else if let Some(rest) = trimmed.strip_prefix("ENTRY ") {
                let mut parts = rest.split_whitespace();
                let name = parts.next().ok_or_else(|| syntax(n, "ENTRY needs a name"))?;
                let priority = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| syntax(n, "ENTRY needs a priority"))?;
                let (pn, pattern_line) = lines.next().ok_or_else(|| syntax(n, "missing PATTERN"))?;
                let pattern = pattern_line
                    .strip_prefix("PATTERN ")
                    .ok_or_else(|| syntax(pn, "expected PATTERN"))?
                    .trim()
                    .to_string();
                let elements = parse_pattern(pn, &pattern)?;
                let (tn, t) = lines.next().ok_or_else(|| syntax(pn, "missing TEMPLATE"))?;
                if t.trim() != "TEMPLATE" {
                    return Err(syntax(tn, "expected TEMPLATE"));
                }
                let mut template = Vec::new();
                loop {
                    let (ln, l) = lines.next().ok_or_else(|| syntax(tn, "missing END"))?;
                    if l.trim() == "END" {
                        break;
                    }
                    if l.trim().is_empty() {
                        return Err(syntax(ln, "blank line inside template"));
                    }
                    template.push(l);
                }
                entries.push(Entry {
                    name: name.to_string(),
                    priority,
                    pattern,
                    elements,
                    template: template.join("\n"),
                });
            } else {
                return Err(syntax(n, format!("unknown record {trimmed:?}")));
            }
        }
        Ok(Lexicon { words, entries })
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// The first word of `class` denoting `concept` whose features are all
    /// satisfied by `has`.
    pub fn word_for(
        &self,
        class: &str,
        concept: &ConceptName,
        mut has: impl FnMut(&ConceptName, &SlotValue) -> bool,
    ) -> Option<&Word> {
        self.words.iter().find(|w| {
            w.class == class && &w.concept == concept && w.features.iter().all(|(p, vs)| vs.iter().all(|v| has(p, v)))
        })
    }

    fn class_matches(&self, class: &str, tokens: &[String], at: usize) -> Vec<(usize, Capture)> {
        if class == "TUPLE" {
            return match tokens.get(at).map(|t| parse_values(t)) {
                Some(Ok(v)) if v.len() == 1 => match &v[0] {
                    SlotValue::Tuple(t) => vec![(1, Capture::Tuple(t.clone()))],
                    _ => Vec::new(),
                },
                _ => Vec::new(),
            };
        }
        let mut out: Vec<(usize, Capture)> = self
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| {
                w.class == class
                    && tokens.len() >= at + w.phrase.len()
                    && tokens[at..at + w.phrase.len()] == w.phrase[..]
            })
            .map(|(i, w)| (w.phrase.len(), Capture::Word(i)))
            .collect();
        // Longest phrase first; lexicon order among equals.
        out.sort_by_key(|(len, _)| std::cmp::Reverse(*len));
        out
    }

    fn match_from(
        &self,
        elements: &[Element],
        tokens: &[String],
        at: usize,
        consumed: usize,
        captures: &mut Vec<Capture>,
    ) -> Option<usize> {
        let Some((first, rest)) = elements.split_first() else {
            return Some(consumed);
        };
        match first {
            Element::Lit(alts) => {
                let t = tokens.get(at)?;
                if alts.contains(t) {
                    self.match_from(rest, tokens, at + 1, consumed + 1, captures)
                } else {
                    None
                }
            }
            Element::Opt(word) => {
                if tokens.get(at) == Some(word) {
                    if let Some(c) = self.match_from(rest, tokens, at + 1, consumed + 1, captures) {
                        return Some(c);
                    }
                }
                self.match_from(rest, tokens, at, consumed, captures)
            }
            Element::Star => {
                (at..=tokens.len()).find_map(|skip| self.match_from(rest, tokens, skip, consumed, captures))
            }
            Element::Class(class) => {
                for (len, cap) in self.class_matches(class, tokens, at) {
                    captures.push(cap);
                    if let Some(c) = self.match_from(rest, tokens, at + len, consumed + len, captures) {
                        return Some(c);
                    }
                    captures.pop();
                }
                None
            }
        }
    }

    fn match_entry(&self, index: usize, tokens: &[String]) -> Option<Match> {
        let elements = &self.entries[index].elements;
        (0..=tokens.len()).find_map(|start| {
            let mut captures = Vec::new();
            self.match_from(elements, tokens, start, 0, &mut captures)
                .map(|consumed| Match {
                    entry: index,
                    consumed,
                    captures,
                })
        })
    }

    /// Matching entries in preference order: priority, tokens consumed,
    /// lexicon order.
    fn candidates(&self, tokens: &[String]) -> Vec<Match> {
        let mut out: Vec<Match> = (0..self.entries.len())
            .filter_map(|i| self.match_entry(i, tokens))
            .collect();
        out.sort_by(|a, b| {
            let pa = self.entries[a.entry].priority;
            let pb = self.entries[b.entry].priority;
            pb.cmp(&pa)
                .then(b.consumed.cmp(&a.consumed))
                .then(a.entry.cmp(&b.entry))
        });
        out
    }

    /// Name of the entry that would interpret `text`, if any matches.
    pub fn best_entry(&self, text: &str) -> Option<&str> {
        self.candidates(&tokenize(text))
            .first()
            .map(|m| self.entries[m.entry].name.as_str())
    }

    /// Text to TMR. Input nothing matches becomes an `UNINTERPRETED` document.
    pub fn analyze(&self, text: &str, ctx: &UtteranceContext<'_>) -> MrDocument {
        let tokens = tokenize(text);
        let frames = self
            .candidates(&tokens)
            .iter()
            .find_map(|m| self.instantiate(m, ctx).ok())
            .unwrap_or_else(|| {
                vec![Frame::new(InstanceRef::new(concept("UNINTERPRETED"), 1))
                    .with("AGENT", ctx.speaker.as_anchor().into())
                    .with("RAW-TEXT", SlotValue::text(text))]
            });
        MrDocument {
            id: ctx.doc,
            owner: ctx.owner.to_string(),
            tick: ctx.tick,
            source: ctx.source,
            frames,
        }
    }

    fn instantiate(&self, m: &Match, ctx: &UtteranceContext<'_>) -> Result<Vec<Frame>, InstantiateError> {
        let template = &self.entries[m.entry].template;
        let pieces = scan_template(template);
        let focus = ctx.memory.focus();

        let capture_concept = |k: usize| -> Result<ConceptName, InstantiateError> {
            match m.captures.get(k.wrapping_sub(1)) {
                Some(Capture::Word(w)) => Ok(self.words[*w].concept.clone()),
                _ => Err(InstantiateError::Unbound(k)),
            }
        };

        // Literal instance indices, so minted ones can be placed past them.
        let mut taken: BTreeMap<ConceptName, u32> = BTreeMap::new();
        for p in &pieces {
            if let Piece::Text(t) = p {
                for tok in t.split(['\t', ',', '\n', ' ']) {
                    if let Ok(r) = tok.parse::<InstanceRef>() {
                        if !r.anchored {
                            let e = taken.entry(r.concept).or_insert(0);
                            *e = (*e).max(r.index);
                        }
                    }
                }
            }
        }

        let mut assigned: BTreeMap<(Option<usize>, u32), InstanceRef> = BTreeMap::new();
        let mut captured_instances: Vec<(usize, InstanceRef)> = Vec::new();
        let mut text = String::new();
        for p in &pieces {
            match p {
                Piece::Text(t) => text.push_str(t),
                Piece::Speaker => text.push_str(&ctx.speaker.as_anchor().to_string()),
                Piece::SelfRef => text.push_str(&ctx.self_anchor.as_anchor().to_string()),
                Piece::It => text.push_str(&focus.ok_or(InstantiateError::NoFocus)?.to_string()),
                Piece::Capture(k) => match m.captures.get(k.wrapping_sub(1)) {
                    Some(Capture::Word(w)) => text.push_str(self.words[*w].concept.as_str()),
                    Some(Capture::Tuple(t)) => text.push_str(&t.to_string()),
                    None => return Err(InstantiateError::Unbound(*k)),
                },
                Piece::Instance(k, n) => {
                    let key = (*k, *n);
                    let r = match assigned.get(&key) {
                        Some(r) => r.clone(),
                        None => {
                            let c = match k {
                                Some(k) => capture_concept(*k)?,
                                None => focus.ok_or(InstantiateError::NoFocus)?.concept.clone(),
                            };
                            let e = taken.entry(c.clone()).or_insert(0);
                            *e += 1;
                            let r = InstanceRef::new(c, *e);
                            assigned.insert(key, r.clone());
                            if let Some(k) = k {
                                captured_instances.push((*k, r.clone()));
                            }
                            r
                        }
                    };
                    text.push_str(&r.to_string());
                }
            }
        }
        let mut frames = parse_frames(&text)?;

        // Word features go in front of whatever the template says.
        for (k, r) in &captured_instances {
            let Some(Capture::Word(w)) = m.captures.get(k - 1) else {
                continue;
            };
            let features = &self.words[*w].features;
            if features.is_empty() {
                continue;
            }
            let frame = match frames.iter().position(|f| &f.head == r) {
                Some(i) => &mut frames[i],
                None => {
                    frames.push(Frame::new(r.clone()));
                    frames.last_mut().expect("just pushed")
                }
            };
            let mut slots: Vec<Slot> = features
                .iter()
                .filter(|(p, _)| frame.get(p.as_str()).is_none())
                .map(|(p, v)| Slot::new(p.clone(), v.clone()))
                .collect();
            slots.append(&mut frame.slots);
            frame.slots = slots;
        }

        // Every local reference gets a frame.
        let mut missing = Vec::new();
        for f in &frames {
            for r in f.mentions() {
                if !r.anchored && !frames.iter().any(|g| &g.head == r) && !missing.contains(r) {
                    missing.push(r.clone());
                }
            }
        }
        frames.extend(missing.into_iter().map(Frame::new));

        attach_corefer(&mut frames, ctx);
        sort_frames(&mut frames);
        Ok(frames)
    }
}

/// Physical objects that are not agents get a COREFER slot: the focus if it
/// is of the same concept, else the oldest anchor of the concept, else a
/// fresh anchor.
fn attach_corefer(frames: &mut [Frame], ctx: &UtteranceContext<'_>) {
    let mut minted: BTreeMap<ConceptName, u32> = BTreeMap::new();
    for frame in frames.iter_mut() {
        let c = &frame.head.concept;
        if frame.get("COREFER").is_some()
            || !ctx.ontology.isa(c, "PHYSICAL-OBJECT")
            || ctx.ontology.isa(c, "AGENTIVE-ENTITY")
        {
            continue;
        }
        let anchor = ctx
            .memory
            .focus()
            .filter(|f| &f.concept == c)
            .cloned()
            .or_else(|| {
                ctx.memory
                    .anchors()
                    .map(|(a, _)| a)
                    .filter(|a| &a.concept == c)
                    .min_by_key(|a| a.index)
                    .cloned()
            })
            .unwrap_or_else(|| {
                let base = ctx.memory.next_anchor(c);
                let n = minted.entry(c.clone()).or_insert(0);
                let r = InstanceRef::anchor(c.clone(), base.index + *n);
                *n += 1;
                r
            });
        let values = ctx.memory.corefer_values(&anchor, ctx.doc, &frame.head);
        for v in values {
            frame.push(concept("COREFER"), v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Speaker,
    SelfRef,
    It,
    Capture(usize),
    /// `$k.n` (Some(k)) or `@IT.n` (None).
    Instance(Option<usize>, u32),
}

fn scan_template(t: &str) -> Vec<Piece> {
    let mut out = Vec::new();
    let mut text = String::new();
    let mut rest = t;
    let digits = |s: &str| s.bytes().take_while(u8::is_ascii_digit).count();
    while !rest.is_empty() {
        let mut piece = None;
        let mut used = 0;
        if let Some(r) = rest.strip_prefix("$SPEAKER") {
            piece = Some(Piece::Speaker);
            used = rest.len() - r.len();
        } else if let Some(r) = rest.strip_prefix("$SELF") {
            piece = Some(Piece::SelfRef);
            used = rest.len() - r.len();
        } else if let Some(r) = rest.strip_prefix("$IT") {
            piece = Some(Piece::It);
            used = rest.len() - r.len();
        } else if let Some(r) = rest.strip_prefix("@IT.") {
            let d = digits(r);
            if d > 0 {
                piece = Some(Piece::Instance(None, r[..d].parse().unwrap_or(1)));
                used = 4 + d;
            }
        } else if let Some(r) = rest.strip_prefix('$') {
            let d = digits(r);
            if d > 0 {
                let k: usize = r[..d].parse().unwrap_or(0);
                let after = &r[d..];
                let d2 = after.strip_prefix('.').map_or(0, digits);
                if d2 > 0 {
                    piece = Some(Piece::Instance(Some(k), after[1..1 + d2].parse().unwrap_or(1)));
                    used = 1 + d + 1 + d2;
                } else {
                    piece = Some(Piece::Capture(k));
                    used = 1 + d;
                }
            }
        }
        match piece {
            Some(p) => {
                if !text.is_empty() {
                    out.push(Piece::Text(std::mem::take(&mut text)));
                }
                out.push(p);
                rest = &rest[used..];
            }
            None => {
                let ch = rest.chars().next().expect("non-empty");
                text.push(ch);
                rest = &rest[ch.len_utf8()..];
            }
        }
    }
    if !text.is_empty() {
        out.push(Piece::Text(text));
    }
    out
}

/// Lowercased words with edge punctuation removed; a parenthesised group
/// stays one token so coordinates survive.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut Vec<String>| {
        let w = word
            .trim_matches(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '-'))
            .trim_matches('\'')
            .to_lowercase();
        if !w.is_empty() {
            out.push(w);
        }
        word.clear();
    };
    while let Some(ch) = chars.next() {
        if ch == '(' {
            flush(&mut word, &mut out);
            let mut group = String::from("(");
            for c in chars.by_ref() {
                group.push(c);
                if c == ')' {
                    break;
                }
            }
            out.push(group);
        } else if ch.is_whitespace() {
            flush(&mut word, &mut out);
        } else {
            word.push(ch);
        }
    }
    flush(&mut word, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{anchor_frame, parse_mr_text};

    #[test]
    fn tokenizer_keeps_apostrophes_and_tuples() {
        assert_eq!(
            tokenize("Let's search the apartment."),
            ["let's", "search", "the", "apartment"]
        );
        assert_eq!(tokenize("at (200.00, 0.00, 240.00)."), ["at", "(200.00, 0.00, 240.00)"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
    }

    #[test]
    fn template_scanner_sees_every_variable() {
        let p = scan_template("X.1\tAGENT\t$SPEAKER\n$12.3,$2,@IT.4,$IT,$SELF");
        assert!(p.contains(&Piece::Speaker));
        assert!(p.contains(&Piece::Instance(Some(12), 3)));
        assert!(p.contains(&Piece::Capture(2)));
        assert!(p.contains(&Piece::Instance(None, 4)));
        assert!(p.contains(&Piece::It));
        assert!(p.contains(&Piece::SelfRef));
    }

    #[test]
    fn selection_prefers_priority_then_length_then_order() {
        let g = OntologyGraph::seed();
        let src = "WORD NOUN keys => KEY\n\
            ENTRY a 1\nPATTERN keys\nTEMPLATE\nGREETING.1\nEND\n\
            ENTRY b 1\nPATTERN find my keys\nTEMPLATE\nGREETING.1\nEND\n\
            ENTRY c 1\nPATTERN find my {NOUN}\nTEMPLATE\nGREETING.1\nEND\n\
            ENTRY d 2\nPATTERN my\nTEMPLATE\nGREETING.1\nEND\n";
        let lex = Lexicon::parse(src, &g).unwrap();
        assert_eq!(lex.best_entry("please find my keys"), Some("d"));
        let without_d = Lexicon::parse(&src[..src.find("ENTRY d").unwrap()], &g).unwrap();
        assert_eq!(without_d.best_entry("please find my keys"), Some("b"));
        assert_eq!(without_d.best_entry("keys"), Some("a"));
        assert_eq!(without_d.best_entry("zzz"), None);
    }

    #[test]
    fn unknown_word_concepts_are_rejected() {
        let g = OntologyGraph::seed();
        assert_eq!(
            Lexicon::parse("WORD NOUN moon => MOON\n", &g),
            Err(LexiconError::UnknownConcept(concept("MOON")))
        );
    }

    #[test]
    fn seed_lexicon_loads_with_enough_records() {
        let g = OntologyGraph::seed();
        let lex = Lexicon::seed(&g);
        assert!(lex.words().len() + lex.entries().len() >= 50);
    }

    #[test]
    fn capture_instances_skip_literal_indices() {
        let g = OntologyGraph::seed();
        let src = "WORD NOUN keys => KEY\n\
            ENTRY a 1\nPATTERN {NOUN} {NOUN}\nTEMPLATE\nGREETING.1\nTHEME\tKEY.1,$1.1,$2.1\nEND\n";
        let lex = Lexicon::parse(src, &g).unwrap();
        let mut memory = EpisodicMemory::new();
        let human = memory.seed(anchor_frame("HUMAN", 1));
        let me = memory.seed(anchor_frame("LEIA", 1));
        let ctx = UtteranceContext {
            ontology: &g,
            memory: &memory,
            owner: "UGV",
            doc: DocId::tmr(1),
            tick: 0,
            source: Source::Message(1),
            speaker: &human,
            self_anchor: &me,
        };
        let doc = lex.analyze("keys keys", &ctx);
        let heads: Vec<String> = doc.frames.iter().map(|f| f.head.to_string()).collect();
        assert_eq!(heads, ["GREETING.1", "KEY.1", "KEY.2", "KEY.3"]);
        assert_eq!(parse_mr_text(&doc.render()).unwrap(), doc);
    }
}
