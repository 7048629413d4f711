//! Utterances to TMRs, percepts to VMRs, and reasoning back to English.

mod generate;
mod lexicon;
mod percept;

pub use generate::{
    generate_report, nearest_landmark, report_relation, spatial_relation, AudienceModel, Binding, Finding,
    Interlocutor, LandmarkRef, Relation, ReportKind, SpatialFrame, TemplateBook, TemplateError, LANDMARK_RANGE,
};
pub use lexicon::{tokenize, Entry, InstantiateError, Lexicon, LexiconError, UtteranceContext, Word};
pub use percept::{features_match, interpret_percept, match_found_object, PerceptContext, PerceptInterpretation};

use crate::frames::MrDocument;

/// Text to TMR against the given lexicon.
pub fn analyze_utterance(lexicon: &Lexicon, text: &str, ctx: &UtteranceContext<'_>) -> MrDocument {
    lexicon.analyze(text, ctx)
}

/// Every reasoning event an agent can verbalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    InterpretedInput,
    GoalAdopted,
    PlanSelected,
    PreconditionsNoted,
    PreconditionGap,
    WaitForLeader,
    PlanProposed,
    PlanAccepted,
    ProceedSolo,
    ZoneStart,
    ZoneDone,
    TeammateZoneDone,
    Found,
    ReportDecision,
    TeammateFound,
    PlanFailed,
    PlanClosed,
    Unhandled,
}

impl EventKind {
    pub const ALL: [EventKind; 18] = [
        EventKind::InterpretedInput,
        EventKind::GoalAdopted,
        EventKind::PlanSelected,
        EventKind::PreconditionsNoted,
        EventKind::PreconditionGap,
        EventKind::WaitForLeader,
        EventKind::PlanProposed,
        EventKind::PlanAccepted,
        EventKind::ProceedSolo,
        EventKind::ZoneStart,
        EventKind::ZoneDone,
        EventKind::TeammateZoneDone,
        EventKind::Found,
        EventKind::ReportDecision,
        EventKind::TeammateFound,
        EventKind::PlanFailed,
        EventKind::PlanClosed,
        EventKind::Unhandled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::InterpretedInput => "INTERPRETED-INPUT",
            EventKind::GoalAdopted => "GOAL-ADOPTED",
            EventKind::PlanSelected => "PLAN-SELECTED",
            EventKind::PreconditionsNoted => "PRECONDITIONS-NOTED",
            EventKind::PreconditionGap => "PRECONDITION-GAP",
            EventKind::WaitForLeader => "WAIT-FOR-LEADER",
            EventKind::PlanProposed => "PLAN-PROPOSED",
            EventKind::PlanAccepted => "PLAN-ACCEPTED",
            EventKind::ProceedSolo => "PROCEED-SOLO",
            EventKind::ZoneStart => "ZONE-START",
            EventKind::ZoneDone => "ZONE-DONE",
            EventKind::TeammateZoneDone => "TEAMMATE-ZONE-DONE",
            EventKind::Found => "FOUND",
            EventKind::ReportDecision => "REPORT-DECISION",
            EventKind::TeammateFound => "TEAMMATE-FOUND",
            EventKind::PlanFailed => "PLAN-FAILED",
            EventKind::PlanClosed => "PLAN-CLOSED",
            EventKind::Unhandled => "UNHANDLED",
        }
    }

    /// Template keys this kind may use.
    pub fn template_keys(self) -> Vec<String> {
        let base = self.as_str();
        match self {
            EventKind::PreconditionGap => [
                "REQUEST-OBJECT-TYPE",
                "REQUEST-OBJECT-FEATURES",
                "REQUEST-LAST-SEEN-AT",
                "REQUEST-LOCATION-CONSTRAINED",
            ]
            .iter()
            .map(|v| format!("{base}/{v}"))
            .collect(),
            EventKind::ReportDecision => ["ROBOT", "HUMAN", "ROBOT/ROOM", "HUMAN/ROOM"]
                .iter()
                .map(|v| format!("{base}/{v}"))
                .collect(),
            _ => vec![base.to_string()],
        }
    }
}

/// A decision worth saying out loud, with what the template needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningEvent {
    pub kind: EventKind,
    pub variant: Option<String>,
    pub bindings: Vec<(&'static str, Binding)>,
}

impl ReasoningEvent {
    pub fn new(kind: EventKind) -> Self {
        ReasoningEvent {
            kind,
            variant: None,
            bindings: Vec::new(),
        }
    }

    pub fn variant(mut self, v: impl Into<String>) -> Self {
        self.variant = Some(v.into());
        self
    }

    pub fn bind(mut self, name: &'static str, value: Binding) -> Self {
        self.bindings.push((name, value));
        self
    }

    pub fn key(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}/{v}", self.kind.as_str()),
            None => self.kind.as_str().to_string(),
        }
    }
}

pub fn verbalize_thought(event: &ReasoningEvent, book: &TemplateBook) -> Result<String, TemplateError> {
    book.render(&event.key(), &event.bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{anchor_frame, DocId, EpisodicMemory, InstanceRef, SlotValue, Source};
    use crate::geom::{Fixed, Vec3};
    use crate::ontology::{concept, OntologyGraph};
    use crate::world::{Detection, Scenario, SenseReport};

    struct Hearer {
        g: OntologyGraph,
        lex: Lexicon,
        memory: EpisodicMemory,
        human: InstanceRef,
        me: InstanceRef,
        docs: u32,
    }

    impl Hearer {
        fn new() -> Self {
            let g = OntologyGraph::seed();
            let lex = Lexicon::seed(&g);
            let mut memory = EpisodicMemory::new();
            let human = memory.seed(anchor_frame("HUMAN", 1).with("HAS-NAME", SlotValue::text("Danny")));
            let me = memory.seed(anchor_frame("LEIA", 1));
            let door = memory.seed(anchor_frame("FRONT-DOOR", 1));
            memory.bind_external("front-door", door);
            let carpet = memory.seed(anchor_frame("CARPET", 1));
            memory.bind_external("carpet", carpet);
            memory.seed(anchor_frame("APARTMENT", 1));
            Hearer {
                g,
                lex,
                memory,
                human,
                me,
                docs: 0,
            }
        }

        fn hear(&mut self, text: &str) -> crate::frames::MrDocument {
            self.docs += 1;
            let ctx = UtteranceContext {
                ontology: &self.g,
                memory: &self.memory,
                owner: "UGV",
                doc: DocId::tmr(self.docs),
                tick: 1,
                source: Source::Message(self.docs as u64),
                speaker: &self.human,
                self_anchor: &self.me,
            };
            let doc = analyze_utterance(&self.lex, text, &ctx);
            self.memory.resolve_corefer(&doc, &self.g);
            doc
        }

        fn head(&self, doc: &crate::frames::MrDocument) -> String {
            doc.head_frame(&self.g).unwrap().head.concept.to_string()
        }
    }

    const REQUEST: &str = "I think I left my keys at home. Can you look around for them?";
    const FEATURES: &str = "They are on a red keychain with a small flashlight.";
    const UNLOCK: &str = "I used them last night to open the front door, but they could be anywhere.";

    #[test]
    fn request_has_the_request_action_shape() {
        let mut h = Hearer::new();
        let doc = h.hear(REQUEST);
        let expected = "KEY.1\nCARDINALITY\t>,1\nCOREFER\tTMR.1/KEY.1,#KEY.1\n\
            LEIA.1\nCOREFER\t#LEIA.1\n\
            REQUEST-ACTION.1\nBENEFICIARY\tLEIA.1\nTHEME\tSEARCH-FOR-LOST-OBJECT.1\nAGENT\t#HUMAN.1\n\
            SEARCH-FOR-LOST-OBJECT.1\nAGENT\tLEIA.1\nTHEME\tKEY.1\nTIME\t>,FIND-ANCHOR-TIME";
        assert_eq!(doc.render_body(), expected);
        assert_eq!(h.head(&doc), "REQUEST-ACTION");
        for f in &doc.frames {
            assert!(h.g.validate_frame(f).is_empty(), "{f}");
        }
    }

    #[test]
    fn dialog_answers_have_the_stated_heads() {
        let mut h = Hearer::new();
        h.hear(REQUEST);
        let features = h.hear(FEATURES);
        assert_eq!(h.head(&features), "KEY");
        let key = h.memory.get(&InstanceRef::anchor(concept("KEY"), 1)).unwrap();
        assert_eq!(key.frame.first("ATTACHMENT-COLOR"), Some(&SlotValue::concept("RED")));
        let unlock = h.hear(UNLOCK);
        assert_eq!(h.head(&unlock), "UNLOCK-EVENT");
        let door = InstanceRef::anchor(concept("FRONT-DOOR"), 1);
        assert!(h
            .memory
            .episode_links(&InstanceRef::anchor(concept("KEY"), 1), |a| a == &door));
        let propose = h.hear("Let's search the apartment.");
        assert_eq!(h.head(&propose), "PROPOSE-PLAN");
        for doc in [features, unlock, propose] {
            for f in &doc.frames {
                assert!(h.g.validate_frame(f).is_empty(), "{f}");
            }
        }
    }

    #[test]
    fn gibberish_is_uninterpreted() {
        let mut h = Hearer::new();
        let doc = h.hear("zzz qqq");
        assert_eq!(doc.render_body(), "UNINTERPRETED.1\nAGENT\t#HUMAN.1\nRAW-TEXT\tzzz qqq");
    }

    #[test]
    fn pronoun_answers_without_focus_fall_through() {
        let mut h = Hearer::new();
        let doc = h.hear(FEATURES);
        assert_eq!(h.head(&doc), "UNINTERPRETED");
    }

    #[test]
    fn analysis_is_deterministic() {
        let mut a = Hearer::new();
        let mut b = Hearer::new();
        for t in [REQUEST, FEATURES, UNLOCK] {
            assert_eq!(a.hear(t), b.hear(t));
        }
    }

    fn carpet_report() -> SenseReport {
        let g = OntologyGraph::seed();
        let s = Scenario::seed_scenario(&g);
        let carpet = s.object("carpet").unwrap();
        SenseReport {
            robot: "UGV".into(),
            position: "555.75,3.30,53.83".parse().unwrap(),
            yaw: Fixed(17236),
            detections: vec![Detection {
                object: carpet.id.clone(),
                concept: carpet.concept.clone(),
                props: carpet.props.clone(),
                position: carpet.position,
                rotation: carpet.rotation,
            }],
        }
    }

    #[test]
    fn carpet_percept_renders_the_visual_meaning_representation() {
        let h = Hearer::new();
        let ctx = PerceptContext {
            ontology: &h.g,
            memory: &h.memory,
            owner: "UGV",
            doc: DocId::vmr(1),
            tick: 1,
            source: Source::Percept(1),
            self_anchor: &h.me,
            sought: None,
        };
        let out = interpret_percept(&carpet_report(), &ctx);
        let expected = "CARPET.1\nSUB-CLASS\tLong\nCOLOR\tBLUE-GREEN\nPATTERN\tSTRIPES\nMATERIAL\tJUTE\n\
            DIMENSIONS\t10x2\nLOCATION-ABSOLUTE\t(510.00, 0.00, 23.00)\nROTATION-ABSOLUTE\t(0.00, 90.00, 0.00)\n\
            COREFER\t#CARPET.1\nLEIA.1\nCOREFER\t#LEIA.1\nLOCATION\t(555.75, 3.30, 53.83)\n\
            ORIENTATION\t(0.00, 172.36, 0.00)\nVISUAL-EVENT.1\nAGENT\t#LEIA.1\nTHEME\tCARPET.1";
        assert_eq!(out.doc.render_body(), expected);
        for f in &out.doc.frames {
            assert!(h.g.validate_frame(f).is_empty(), "{f}");
        }
    }

    #[test]
    fn empty_percept_has_only_the_self_frame() {
        let h = Hearer::new();
        let ctx = PerceptContext {
            ontology: &h.g,
            memory: &h.memory,
            owner: "UGV",
            doc: DocId::vmr(1),
            tick: 1,
            source: Source::Percept(1),
            self_anchor: &h.me,
            sought: None,
        };
        let mut report = carpet_report();
        report.detections.clear();
        let out = interpret_percept(&report, &ctx);
        let heads: Vec<_> = out.doc.frames.iter().map(|f| f.head.to_string()).collect();
        assert_eq!(heads, ["LEIA.1"]);
    }

    /// Feature subset computed straight from the scenario props.
    fn oracle_matches(object: &crate::world::WorldObject, wanted: &[(&str, &str)]) -> bool {
        object.concept.as_str() == "KEY"
            && wanted.iter().all(|(p, v)| {
                object
                    .props
                    .iter()
                    .any(|(q, vs)| q.as_str() == *p && vs.contains(&SlotValue::concept(v)))
            })
    }

    #[test]
    fn sought_keys_corefer_and_decoys_do_not() {
        let mut h = Hearer::new();
        h.hear(REQUEST);
        h.hear(FEATURES);
        let sought = InstanceRef::anchor(concept("KEY"), 1);
        let s = Scenario::seed_scenario(&h.g);
        let wanted = [
            ("ATTACHED-TO", "KEYCHAIN"),
            ("ATTACHMENT-COLOR", "RED"),
            ("ACCESSORY", "FLASHLIGHT"),
            ("ACCESSORY-SIZE", "SMALL"),
        ];
        for id in ["keys", "decoy-keys"] {
            let o = s.object(id).unwrap();
            let report = SenseReport {
                robot: "UGV".into(),
                position: Vec3::default(),
                yaw: Fixed::ZERO,
                detections: vec![Detection {
                    object: o.id.clone(),
                    concept: o.concept.clone(),
                    props: o.props.clone(),
                    position: o.position,
                    rotation: o.rotation,
                }],
            };
            let ctx = PerceptContext {
                ontology: &h.g,
                memory: &h.memory,
                owner: "UGV",
                doc: DocId::vmr(1),
                tick: 1,
                source: Source::Percept(1),
                self_anchor: &h.me,
                sought: Some(&sought),
            };
            let out = interpret_percept(&report, &ctx);
            let key = out.doc.frames_of("KEY").next().unwrap();
            let corefers_sought = key
                .get("COREFER")
                .unwrap()
                .contains(&SlotValue::Instance(sought.clone()));
            assert_eq!(corefers_sought, oracle_matches(o, &wanted), "{id}");
            assert_eq!(match_found_object(&out.doc, &sought, &h.memory, &h.g), corefers_sought);
        }
    }

    #[test]
    fn zero_feature_anchor_matches_any_key() {
        let g = OntologyGraph::seed();
        let bare = anchor_frame("KEY", 1);
        let seen =
            crate::frames::Frame::new(InstanceRef::new(concept("KEY"), 1)).with("COLOR", SlotValue::concept("BLUE"));
        assert!(features_match(&g, &bare, &seen));
        let wallet = crate::frames::Frame::new(InstanceRef::new(concept("WALLET"), 1));
        assert!(!features_match(&g, &bare, &wallet));
    }

    #[test]
    fn every_event_kind_has_its_templates() {
        let book = TemplateBook::thoughts();
        for kind in EventKind::ALL {
            for key in kind.template_keys() {
                assert!(book.contains(&key), "{key}");
            }
        }
        let covered: Vec<String> = EventKind::ALL.iter().flat_map(|k| k.template_keys()).collect();
        for key in book.keys() {
            assert!(covered.iter().any(|c| c == key), "stray template {key}");
        }
    }

    #[test]
    fn thoughts_render_the_quoted_lines() {
        let book = TemplateBook::thoughts();
        let interp = ReasoningEvent::new(EventKind::InterpretedInput)
            .bind("input", Binding::Text(REQUEST.into()))
            .bind("head", Binding::Concept(concept("REQUEST-ACTION")));
        assert_eq!(
            verbalize_thought(&interp, &book).unwrap(),
            format!("I interpreted the input \"{REQUEST}\" as @REQUEST-ACTION.")
        );
        let gap = ReasoningEvent::new(EventKind::PreconditionGap)
            .variant("REQUEST-OBJECT-FEATURES")
            .bind("object", Binding::Anchor(InstanceRef::anchor(concept("KEY"), 1)));
        assert_eq!(
            verbalize_thought(&gap, &book).unwrap(),
            "I need to learn more about #KEY.1's features."
        );
        let wait = ReasoningEvent::new(EventKind::WaitForLeader);
        assert_eq!(
            verbalize_thought(&wait, &book).unwrap(),
            "I'm going to wait for a plan from my team leader."
        );
        let zone = ReasoningEvent::new(EventKind::ZoneStart)
            .bind("zone", Binding::Anchor(InstanceRef::anchor(concept("KITCHEN"), 1)));
        assert_eq!(
            verbalize_thought(&zone, &book).unwrap(),
            "I am going to start my robotic search command to look in #KITCHEN.1"
        );
        let goal = ReasoningEvent::new(EventKind::GoalAdopted)
            .bind("speaker", Binding::Name("Danny".into()))
            .bind("goal", Binding::Concept(concept("SEARCH-FOR-LOST-OBJECT")));
        assert_eq!(
            verbalize_thought(&goal, &book).unwrap(),
            "DANNY wants us to @SEARCH-FOR-LOST-OBJECT."
        );
    }
}
