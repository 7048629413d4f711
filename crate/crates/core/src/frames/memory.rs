use std::collections::BTreeMap;

use crate::ontology::{concept, ConceptName, OntologyGraph};

use super::{CrossRef, DocId, DocKind, Frame, InstanceRef, MrDocument, Slot, SlotValue};

/// Doc-local head → anchor, for one resolved document.
pub type Bindings = BTreeMap<InstanceRef, InstanceRef>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorOrigin {
    /// Known before the run started (self, teammate, map objects).
    Seeded,
    /// First introduced by a document.
    Document,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRecord {
    pub frame: Frame,
    /// Parallel to `frame.slots`: which documents contributed to each slot.
    pub provenance: Vec<Vec<(DocId, u64)>>,
    pub origin: AnchorOrigin,
    pub first_mention: Option<CrossRef>,
}

impl AnchorRecord {
    pub fn slot_count(&self) -> usize {
        self.frame.slots.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub doc: DocId,
    pub tick: u64,
    /// The event frame with references rewritten to anchors where bound.
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorefConflict {
    pub doc: DocId,
    pub local: InstanceRef,
    pub anchor: InstanceRef,
}

/// One agent's long-lived knowledge of individuals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodicMemory {
    anchors: BTreeMap<InstanceRef, AnchorRecord>,
    mentions: BTreeMap<CrossRef, InstanceRef>,
    episodes: Vec<Episode>,
    conflicts: Vec<CorefConflict>,
    bindings: BTreeMap<String, InstanceRef>,
    focus: Option<InstanceRef>,
}

const COREFER: &str = "COREFER";

impl EpisodicMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pre-existing anchor. Its head is forced to anchored form.
    pub fn seed(&mut self, mut frame: Frame) -> InstanceRef {
        frame.head = frame.head.as_anchor();
        let anchor = frame.head.clone();
        let provenance = vec![Vec::new(); frame.slots.len()];
        self.anchors.insert(
            anchor.clone(),
            AnchorRecord {
                frame,
                provenance,
                origin: AnchorOrigin::Seeded,
                first_mention: None,
            },
        );
        anchor
    }

    /// Associates an external key (such as a world object id) with an anchor.
    pub fn bind_external(&mut self, key: impl Into<String>, anchor: InstanceRef) {
        self.bindings.insert(key.into(), anchor);
    }

    pub fn external(&self, key: &str) -> Option<&InstanceRef> {
        self.bindings.get(key)
    }

    pub fn get(&self, anchor: &InstanceRef) -> Option<&AnchorRecord> {
        self.anchors.get(&anchor.as_anchor())
    }

    pub fn anchors(&self) -> impl Iterator<Item = (&InstanceRef, &AnchorRecord)> {
        self.anchors.iter()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn conflicts(&self) -> &[CorefConflict] {
        &self.conflicts
    }

    /// The most recently discussed individual first introduced in dialog.
    pub fn focus(&self) -> Option<&InstanceRef> {
        self.focus.as_ref()
    }

    /// Anchors whose concept is subsumed by `ancestor`.
    pub fn anchors_of<'a>(
        &'a self,
        ontology: &'a OntologyGraph,
        ancestor: &'a str,
    ) -> impl Iterator<Item = &'a InstanceRef> + 'a {
        self.anchors.keys().filter(move |a| ontology.isa(&a.concept, ancestor))
    }

    pub fn anchor_for_mention(&self, mention: &CrossRef) -> Option<&InstanceRef> {
        self.mentions.get(mention)
    }

    /// The next free anchor for `concept`: one past the highest in use.
    pub fn next_anchor(&self, concept: &ConceptName) -> InstanceRef {
        let max = self
            .anchors
            .keys()
            .filter(|a| &a.concept == concept)
            .map(|a| a.index)
            .max()
            .unwrap_or(0);
        InstanceRef::anchor(concept.clone(), max + 1)
    }

    /// The COREFER slot an analyzer should attach to a fresh mention of
    /// `anchor` appearing as `local` in document `doc`.
    pub fn corefer_values(&self, anchor: &InstanceRef, doc: DocId, local: &InstanceRef) -> Vec<SlotValue> {
        match self.get(anchor) {
            Some(rec) if rec.origin == AnchorOrigin::Seeded => vec![anchor.as_anchor().into()],
            Some(rec) => {
                let first = rec.first_mention.clone().unwrap_or(CrossRef {
                    doc,
                    instance: local.clone(),
                });
                vec![SlotValue::CrossRef(first), anchor.as_anchor().into()]
            }
            None => vec![
                SlotValue::CrossRef(CrossRef {
                    doc,
                    instance: local.clone(),
                }),
                anchor.as_anchor().into(),
            ],
        }
    }

    /// Merges every frame bearing a COREFER slot into its anchor.
    ///
    /// Merging is additive: values already present are kept, new values are
    /// appended to the slot, new slots are appended to the frame. A frame
    /// whose concept is incompatible with its target anchor is recorded as
    /// a conflict and skipped. Event frames are kept as episodes with their
    /// references rewritten through the bindings.
    pub fn resolve_corefer(&mut self, doc: &MrDocument, ontology: &OntologyGraph) -> Bindings {
        let mut bindings = Bindings::new();
        for frame in &doc.frames {
            let Some(targets) = frame.get(COREFER) else {
                continue;
            };
            let xref_here = CrossRef {
                doc: doc.id,
                instance: frame.head.as_local(),
            };
            let anchor = targets
                .iter()
                .find_map(|v| v.as_instance().filter(|r| r.anchored).cloned())
                .or_else(|| {
                    targets.iter().find_map(|v| match v {
                        SlotValue::CrossRef(x) => self.mentions.get(x).cloned(),
                        _ => None,
                    })
                })
                .unwrap_or_else(|| self.next_anchor(&frame.head.concept));

            if let Some(existing) = self.anchors.get(&anchor) {
                if !ontology.compatible(&existing.frame.head.concept, &frame.head.concept) {
                    self.conflicts.push(CorefConflict {
                        doc: doc.id,
                        local: frame.head.clone(),
                        anchor,
                    });
                    continue;
                }
            } else {
                let first = targets
                    .iter()
                    .find_map(|v| match v {
                        SlotValue::CrossRef(x) => Some(x.clone()),
                        _ => None,
                    })
                    .unwrap_or_else(|| xref_here.clone());
                self.mentions.insert(first.clone(), anchor.clone());
                self.anchors.insert(
                    anchor.clone(),
                    AnchorRecord {
                        frame: Frame::new(anchor.clone()),
                        provenance: Vec::new(),
                        origin: AnchorOrigin::Document,
                        first_mention: Some(first),
                    },
                );
            }
            self.mentions.insert(xref_here, anchor.clone());
            bindings.insert(frame.head.clone(), anchor.clone());
        }

        for frame in &doc.frames {
            let Some(anchor) = bindings.get(&frame.head) else {
                continue;
            };
            let rewritten = rewrite(frame, &bindings);
            let rec = self.anchors.get_mut(anchor).expect("bound anchor exists");
            for slot in rewritten.slots.iter().filter(|s| s.property.as_str() != COREFER) {
                merge_slot(rec, slot, (doc.id, doc.tick));
            }
            if doc.kind() == DocKind::Tmr
                && rec.origin == AnchorOrigin::Document
                && rec.first_mention.as_ref().is_some_and(|x| x.doc.kind == DocKind::Tmr)
            {
                self.focus = Some(anchor.clone());
            }
        }

        for frame in &doc.frames {
            if ontology.isa(&frame.head.concept, "EVENT") {
                self.episodes.push(Episode {
                    doc: doc.id,
                    tick: doc.tick,
                    frame: rewrite(frame, &bindings),
                });
            }
        }
        bindings
    }

    /// Memory panel: every anchor frame in anchor order.
    pub fn render(&self) -> String {
        let frames: Vec<String> = self.anchors.values().map(|r| r.frame.to_string()).collect();
        frames.join("\n")
    }

    /// Whether any episode mentions both `a` and an anchor satisfying `pred`.
    pub fn episode_links(&self, a: &InstanceRef, mut pred: impl FnMut(&InstanceRef) -> bool) -> bool {
        let a = a.as_anchor();
        self.episodes.iter().any(|e| {
            let mentioned: Vec<&InstanceRef> = e.frame.mentions().collect();
            mentioned.contains(&&a) && mentioned.iter().any(|m| m.anchored && **m != a && pred(m))
        })
    }
}

fn rewrite(frame: &Frame, bindings: &Bindings) -> Frame {
    let map = |v: &SlotValue| match v {
        SlotValue::Instance(r) => match bindings.get(r) {
            Some(anchor) => SlotValue::Instance(anchor.clone()),
            None => v.clone(),
        },
        other => other.clone(),
    };
    Frame {
        head: bindings.get(&frame.head).cloned().unwrap_or_else(|| frame.head.clone()),
        slots: frame
            .slots
            .iter()
            .map(|s| Slot::new(s.property.clone(), s.values.iter().map(map).collect()))
            .collect(),
    }
}

fn merge_slot(rec: &mut AnchorRecord, slot: &Slot, source: (DocId, u64)) {
    let i = match rec.frame.slots.iter().position(|s| s.property == slot.property) {
        Some(i) => i,
        None => {
            rec.frame.slots.push(Slot::new(slot.property.clone(), Vec::new()));
            rec.provenance.push(Vec::new());
            rec.frame.slots.len() - 1
        }
    };
    let target = &mut rec.frame.slots[i];
    let mut added = false;
    for v in &slot.values {
        if !target.values.contains(v) {
            target.values.push(v.clone());
            added = true;
        }
    }
    if added && !rec.provenance[i].contains(&source) {
        rec.provenance[i].push(source);
    }
}

/// Convenience for seeding: `#CONCEPT.n` with the given slots.
pub fn anchor_frame(name: &str, index: u32) -> Frame {
    Frame::new(InstanceRef::anchor(concept(name), index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{parse_mr_text, Source};
    use std::collections::BTreeSet;

    fn doc(text: &str) -> MrDocument {
        parse_mr_text(text).unwrap()
    }

    fn seeded() -> EpisodicMemory {
        let mut m = EpisodicMemory::new();
        m.seed(anchor_frame("LEIA", 1));
        m.seed(anchor_frame("KEY", 1));
        m
    }

    #[test]
    fn corefer_merges_the_cardinality_slot() {
        let g = OntologyGraph::seed();
        let mut m = seeded();
        let d = doc("TMR.3\towner=UGV\ttick=1\tsource=msg:1\nKEY.1\nCARDINALITY\t>,1\nCOREFER\tTMR.3/KEY.1,#KEY.1");
        let b = m.resolve_corefer(&d, &g);
        let key = InstanceRef::anchor(concept("KEY"), 1);
        assert_eq!(b.get(&InstanceRef::new(concept("KEY"), 1)), Some(&key));
        let rec = m.get(&key).unwrap();
        assert_eq!(rec.frame.to_string(), "#KEY.1\nCARDINALITY\t>,1");
        assert_eq!(rec.provenance, vec![vec![(DocId::tmr(3), 1)]]);
    }

    #[test]
    fn no_corefer_leaves_memory_alone() {
        let g = OntologyGraph::seed();
        let mut m = seeded();
        let before = m.clone();
        let d = doc("TMR.1\towner=UGV\ttick=1\tsource=msg:1\nKEY.1\nCOLOR\tRED");
        assert!(m.resolve_corefer(&d, &g).is_empty());
        assert_eq!(m.anchors, before.anchors);
    }

    #[test]
    fn disjoint_slots_union_in_either_order() {
        let g = OntologyGraph::seed();
        let a = doc("TMR.1\towner=U\ttick=1\tsource=msg:1\nKEY.1\nCOLOR\tSILVER\nCOREFER\t#KEY.1");
        let b = doc("TMR.2\towner=U\ttick=2\tsource=msg:2\nKEY.1\nATTACHED-TO\tKEYCHAIN\nACCESSORY\tFLASHLIGHT\nCOREFER\t#KEY.1");
        let key = InstanceRef::anchor(concept("KEY"), 1);
        let slot_set = |m: &EpisodicMemory| -> BTreeSet<(String, String)> {
            m.get(&key)
                .unwrap()
                .frame
                .slots
                .iter()
                .flat_map(|s| s.values.iter().map(|v| (s.property.to_string(), v.to_string())))
                .collect()
        };
        let oracle: BTreeSet<(String, String)> = [a.clone(), b.clone()]
            .iter()
            .flat_map(|d| d.frames[0].slots.clone())
            .filter(|s| s.property.as_str() != "COREFER")
            .flat_map(|s| {
                s.values
                    .into_iter()
                    .map(move |v| (s.property.to_string(), v.to_string()))
            })
            .collect();
        let mut ab = seeded();
        ab.resolve_corefer(&a, &g);
        ab.resolve_corefer(&b, &g);
        let mut ba = seeded();
        ba.resolve_corefer(&b, &g);
        ba.resolve_corefer(&a, &g);
        assert_eq!(slot_set(&ab), oracle);
        assert_eq!(slot_set(&ba), oracle);
    }

    #[test]
    fn xref_only_mints_then_reuses_an_anchor() {
        let g = OntologyGraph::seed();
        let mut m = seeded();
        let d1 = doc("TMR.1\towner=U\ttick=1\tsource=msg:1\nKEY.1\nCOLOR\tRED\nCOREFER\tTMR.1/KEY.1");
        let b1 = m.resolve_corefer(&d1, &g);
        let minted = InstanceRef::anchor(concept("KEY"), 2);
        assert_eq!(b1.values().next(), Some(&minted));
        let d2 = doc("TMR.2\towner=U\ttick=2\tsource=msg:2\nKEY.1\nCOLOR\tBLUE\nCOREFER\tTMR.1/KEY.1");
        let b2 = m.resolve_corefer(&d2, &g);
        assert_eq!(b2.values().next(), Some(&minted));
        assert_eq!(
            m.get(&minted).unwrap().frame.first("COLOR"),
            Some(&SlotValue::concept("RED"))
        );
        assert_eq!(m.get(&minted).unwrap().frame.get("COLOR").unwrap().len(), 2);
        assert_eq!(m.focus(), Some(&minted));
    }

    #[test]
    fn incompatible_anchor_is_a_conflict() {
        let g = OntologyGraph::seed();
        let mut m = seeded();
        let d = doc("VMR.1\towner=U\ttick=1\tsource=percept:1\nCARPET.1\nCOLOR\tRED\nCOREFER\t#KEY.1");
        let b = m.resolve_corefer(&d, &g);
        assert!(b.is_empty());
        assert_eq!(m.conflicts().len(), 1);
        assert!(m
            .get(&InstanceRef::anchor(concept("KEY"), 1))
            .unwrap()
            .frame
            .slots
            .is_empty());
    }

    #[test]
    fn event_frames_become_episodes_with_anchored_refs() {
        let g = OntologyGraph::seed();
        let mut m = seeded();
        m.seed(anchor_frame("FRONT-DOOR", 1));
        let d = MrDocument {
            id: DocId::tmr(4),
            owner: "UGV".into(),
            tick: 9,
            source: Source::Message(3),
            frames: crate::frames::parse_frames(
                "FRONT-DOOR.1\nCOREFER\t#FRONT-DOOR.1\nKEY.1\nCOREFER\t#KEY.1\n\
                 UNLOCK-EVENT.1\nTHEME\tFRONT-DOOR.1\nINSTRUMENT\tKEY.1",
            )
            .unwrap(),
        };
        m.resolve_corefer(&d, &g);
        assert_eq!(m.episodes().len(), 1);
        assert_eq!(
            m.episodes()[0].frame.to_string(),
            "UNLOCK-EVENT.1\nTHEME\t#FRONT-DOOR.1\nINSTRUMENT\t#KEY.1"
        );
        let key = InstanceRef::anchor(concept("KEY"), 1);
        assert!(m.episode_links(&key, |r| r.concept.as_str() == "FRONT-DOOR"));
        assert!(!m.episode_links(&key, |r| r.concept.as_str() == "COUCH"));
    }
}
