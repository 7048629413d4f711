//! Percepts to VMRs.

use std::collections::BTreeMap;

use crate::frames::{sort_frames, DocId, EpisodicMemory, Frame, InstanceRef, MrDocument, SlotValue, Source, Tuple};
use crate::geom::{Fixed, Vec3};
use crate::ontology::{concept, ConceptName, OntologyGraph};
use crate::world::SenseReport;

#[derive(Debug, Clone, Copy)]
pub struct PerceptContext<'a> {
    pub ontology: &'a OntologyGraph,
    pub memory: &'a EpisodicMemory,
    pub owner: &'a str,
    pub doc: DocId,
    pub tick: u64,
    pub source: Source,
    pub self_anchor: &'a InstanceRef,
    /// The individual being searched for, if any.
    pub sought: Option<&'a InstanceRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptInterpretation {
    pub doc: MrDocument,
    /// World object id and the local head it was given, in detection order.
    pub objects: Vec<(String, InstanceRef)>,
}

/// Whether `frame` could be the individual `anchor` describes: same or more
/// specific concept, and every feature known for the anchor is present.
pub fn features_match(ontology: &OntologyGraph, anchor: &Frame, frame: &Frame) -> bool {
    ontology.isa(&frame.head.concept, anchor.head.concept.as_str())
        && anchor
            .slots
            .iter()
            .filter(|s| ontology.isa(&s.property, "FEATURE-ATTRIBUTE"))
            .all(|s| {
                let seen = frame.get(s.property.as_str()).unwrap_or(&[]);
                s.values.iter().all(|v| seen.contains(v))
            })
}

/// Whether any frame of `vmr` matches the sought anchor's features.
pub fn match_found_object(
    vmr: &MrDocument,
    sought: &InstanceRef,
    memory: &EpisodicMemory,
    ontology: &OntologyGraph,
) -> bool {
    let Some(record) = memory.get(sought) else {
        return false;
    };
    vmr.frames.iter().any(|f| features_match(ontology, &record.frame, f))
}

fn orientation(yaw: Fixed) -> Tuple {
    Tuple::from(Vec3::new(Fixed::ZERO, yaw, Fixed::ZERO))
}

/// One frame per detected object, the robot's self frame, and a
/// VISUAL-EVENT tying them together when anything was seen.
pub fn interpret_percept(report: &SenseReport, ctx: &PerceptContext<'_>) -> PerceptInterpretation {
    let mut counts: BTreeMap<ConceptName, u32> = BTreeMap::new();
    let mut minted: BTreeMap<ConceptName, u32> = BTreeMap::new();
    let mut frames = Vec::new();
    let mut objects = Vec::new();

    for d in &report.detections {
        let n = counts.entry(d.concept.clone()).or_insert(0);
        *n += 1;
        let head = InstanceRef::new(d.concept.clone(), *n);
        let mut frame = Frame::new(head.clone());
        for (p, values) in &d.props {
            for v in values {
                frame.push(p.clone(), v.clone());
            }
        }
        frame.push(concept("LOCATION-ABSOLUTE"), d.position.into());
        if let Some(r) = d.rotation {
            frame.push(concept("ROTATION-ABSOLUTE"), r.into());
        }
        let anchor = ctx
            .memory
            .external(&d.object)
            .cloned()
            .or_else(|| {
                let sought = ctx.sought?;
                let record = ctx.memory.get(sought)?;
                features_match(ctx.ontology, &record.frame, &frame).then(|| sought.clone())
            })
            .unwrap_or_else(|| {
                let base = ctx.memory.next_anchor(&d.concept);
                let m = minted.entry(d.concept.clone()).or_insert(0);
                let r = InstanceRef::anchor(d.concept.clone(), base.index + *m);
                *m += 1;
                r
            });
        for v in ctx.memory.corefer_values(&anchor, ctx.doc, &head) {
            frame.push(concept("COREFER"), v);
        }
        objects.push((d.object.clone(), head));
        frames.push(frame);
    }

    let me = InstanceRef::new(ctx.self_anchor.concept.clone(), 1);
    frames.push(
        Frame::new(me)
            .with("COREFER", ctx.self_anchor.as_anchor().into())
            .with("LOCATION", report.position.into())
            .with("ORIENTATION", SlotValue::Tuple(orientation(report.yaw))),
    );
    if !objects.is_empty() {
        let mut event =
            Frame::new(InstanceRef::new(concept("VISUAL-EVENT"), 1)).with("AGENT", ctx.self_anchor.as_anchor().into());
        for (_, head) in &objects {
            event.push(concept("THEME"), head.clone().into());
        }
        frames.push(event);
    }
    sort_frames(&mut frames);
    PerceptInterpretation {
        doc: MrDocument {
            id: ctx.doc,
            owner: ctx.owner.to_string(),
            tick: ctx.tick,
            source: ctx.source,
            frames,
        },
        objects,
    }
}
