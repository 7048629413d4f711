//! One robot's strategic layer: it interprets what it hears and sees,
//! keeps its agenda, and decides what to say and which zone to search.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use crate::frames::{DocId, EpisodicMemory, Frame, InstanceRef, MrDocument, SlotValue, Source};
use crate::geom::Vec3;
use crate::interpreter::{
    features_match, generate_report, interpret_percept, match_found_object, report_relation, AudienceModel, Binding,
    EventKind, Finding, Interlocutor, LandmarkRef, Lexicon, PerceptContext, ReasoningEvent, ReportKind, TemplateBook,
    UtteranceContext,
};
use crate::ontology::{concept, ConceptName, OntologyGraph};
use crate::team::Message;
use crate::world::{JobStatus, RobotKind, RobotRole, Scenario, SenseReport, ZoneSearchJob};

use super::agenda::{Agenda, Mutation, Status};
use super::knowledge::{check_preconditions, decompose_search, endpoint_key, last_seen_at, seed_memory, Searcher};
use super::plans::PlanLibrary;
use crate::interpreter::nearest_landmark;

/// Everything the agents share and never change.
#[derive(Debug, Clone)]
pub struct Knowledge {
    pub ontology: OntologyGraph,
    pub lexicon: Lexicon,
    pub plans: PlanLibrary,
    pub thoughts: TemplateBook,
    pub utterances: TemplateBook,
    pub scenario: Scenario,
}

impl Knowledge {
    /// Seed ontology, lexicon, plans and templates over `scenario`.
    pub fn new(ontology: OntologyGraph, scenario: Scenario) -> Self {
        Knowledge {
            lexicon: Lexicon::seed(&ontology),
            plans: PlanLibrary::seed(&ontology),
            thoughts: TemplateBook::thoughts(),
            utterances: TemplateBook::utterances(),
            ontology,
            scenario,
        }
    }

    pub fn seed() -> Self {
        let g = OntologyGraph::seed();
        let s = Scenario::seed_scenario(&g);
        Self::new(g, s)
    }
}

/// What a deliberation step produced, in the order it happened.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Tmr(MrDocument),
    Vmr(MrDocument),
    Thought(String),
    /// Mutation line, newline, full snapshot.
    Agenda(String),
    Say {
        to: Vec<String>,
        text: String,
    },
    StartZone(String),
    StopSearch {
        found: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Found,
    NotFound,
}

#[derive(Debug, Clone, PartialEq)]
struct PlanState {
    goal: ConceptName,
    sought: Option<InstanceRef>,
    root: usize,
    pre: Option<usize>,
    preconditions: Vec<(ConceptName, usize)>,
    propose: Option<usize>,
    run: Option<usize>,
    body: Option<usize>,
    proposed_at: u64,
    queue: VecDeque<(String, usize)>,
    current: Option<(String, usize)>,
    /// Assigned zones with their searcher and a done flag.
    team: Vec<(String, String, bool)>,
    running: bool,
    found: bool,
    closed: Option<Outcome>,
}

impl PlanState {
    fn open(&self) -> bool {
        self.closed.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    kb: Arc<Knowledge>,
    id: String,
    header: String,
    role: RobotRole,
    teammate: Option<(String, String, RobotKind)>,
    accept_timeout: u64,
    memory: EpisodicMemory,
    self_anchor: InstanceRef,
    human_anchor: InstanceRef,
    zones: BTreeMap<String, InstanceRef>,
    objects: BTreeMap<InstanceRef, String>,
    agenda: Agenda,
    plan: Option<PlanState>,
    tmrs: u32,
    vmrs: u32,
    job: Option<String>,
    pending_find: Option<Vec3>,
}

fn bound(value: Option<&SlotValue>, bindings: &BTreeMap<InstanceRef, InstanceRef>) -> Option<InstanceRef> {
    let r = value?.as_instance()?;
    if r.anchored {
        Some(r.clone())
    } else {
        bindings.get(r).cloned()
    }
}

impl Agent {
    pub fn new(kb: Arc<Knowledge>, id: &str, accept_timeout: u64) -> Self {
        let spec = kb.scenario.robot(id).expect("agent is in the scenario").clone();
        let seeded = seed_memory(&kb.scenario, id);
        let teammate = kb
            .scenario
            .robots
            .iter()
            .find(|r| r.id != id)
            .map(|r| (r.id.clone(), r.label.clone(), r.kind));
        Agent {
            id: spec.id.clone(),
            header: spec.header(),
            role: spec.role,
            teammate,
            accept_timeout,
            memory: seeded.memory,
            self_anchor: seeded.self_anchor,
            human_anchor: seeded.human_anchor,
            zones: seeded.zones,
            objects: seeded.objects,
            agenda: Agenda::new(),
            plan: None,
            tmrs: 0,
            vmrs: 0,
            job: None,
            pending_find: None,
            kb,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `UGV-U [LEADER]`
    pub fn header(&self) -> &str {
        &self.header
    }

    pub fn role(&self) -> RobotRole {
        self.role
    }

    pub fn agenda(&self) -> &Agenda {
        &self.agenda
    }

    pub fn memory(&self) -> &EpisodicMemory {
        &self.memory
    }

    pub fn sought(&self) -> Option<&InstanceRef> {
        self.plan.as_ref()?.sought.as_ref()
    }

    /// Set once the agent's plan has closed.
    pub fn outcome(&self) -> Option<Outcome> {
        self.plan.as_ref()?.closed
    }

    pub fn has_plan(&self) -> bool {
        self.plan.is_some()
    }

    fn g(&self) -> &OntologyGraph {
        &self.kb.ontology
    }

    fn human_id(&self) -> String {
        self.kb.scenario.human.id.clone()
    }

    fn human_name(&self) -> String {
        self.kb.scenario.human.name.clone()
    }

    // --- output helpers -------------------------------------------------

    fn think(&self, out: &mut Vec<Output>, event: ReasoningEvent) {
        let line = crate::interpreter::verbalize_thought(&event, &self.kb.thoughts)
            .expect("every reasoning event has a template");
        out.push(Output::Thought(line));
    }

    fn say(&self, out: &mut Vec<Output>, to: &[String], key: &str, bindings: &[(&str, Binding)]) {
        let text = self
            .kb
            .utterances
            .render(key, bindings)
            .expect("every utterance has a template");
        self.say_text(out, to, text);
    }

    fn say_text(&self, out: &mut Vec<Output>, to: &[String], text: String) {
        out.push(Output::Say { to: to.to_vec(), text });
    }

    fn record(&self, out: &mut Vec<Output>, m: Mutation) {
        out.push(Output::Agenda(format!("{}\n{}", m.line(), self.agenda.snapshot())));
    }

    fn add(&mut self, out: &mut Vec<Output>, parent: Option<usize>, label: String, detail: bool) -> usize {
        let (id, m) = self.agenda.add(parent, label, detail);
        self.record(out, m);
        id
    }

    fn set(&mut self, out: &mut Vec<Output>, id: usize, to: Status) {
        let m = self
            .agenda
            .set(id, to)
            .expect("agenda moves follow the transition table");
        self.record(out, m);
    }

    /// Moves `id` to `to`, passing through ACTIVE when it has to.
    fn settle(&mut self, out: &mut Vec<Output>, id: usize, to: Status) {
        let from = self.agenda.item(id).expect("item exists").status;
        if from == to || from.is_terminal() {
            return;
        }
        if !from.can_become(to) {
            self.set(out, id, Status::Active);
        }
        self.set(out, id, to);
    }

    fn status(&self, id: usize) -> Status {
        self.agenda.item(id).expect("item exists").status
    }

    fn teammate_name(&self) -> Binding {
        Binding::Name(self.teammate.as_ref().map_or_else(String::new, |t| t.1.clone()))
    }

    fn object_binding(&self) -> Binding {
        match self.sought() {
            Some(s) => Binding::Anchor(s.clone()),
            None => Binding::Text("the object".into()),
        }
    }

    /// `keys`: the lexicon's word for the sought object.
    fn object_phrase(&self) -> String {
        let Some(s) = self.sought() else {
            return "object".into();
        };
        let frame = self.memory.get(s).map(|r| r.frame.clone());
        self.kb
            .lexicon
            .word_for("NOUN", &s.concept, |p, v| {
                frame
                    .as_ref()
                    .and_then(|f| f.get(p.as_str()))
                    .is_some_and(|vs| vs.contains(v))
            })
            .map(|w| w.text())
            .unwrap_or_else(|| s.concept.as_str().to_lowercase())
    }

    fn phrase_for(&self, class: &str, c: &ConceptName) -> String {
        self.kb
            .lexicon
            .word_for(class, c, |_, _| false)
            .map(|w| w.text())
            .unwrap_or_else(|| c.as_str().to_lowercase().replace('-', " "))
    }

    fn zone_of_anchor(&self, a: &InstanceRef) -> Option<String> {
        self.zones.iter().find(|(_, z)| *z == a).map(|(id, _)| id.clone())
    }

    fn room_phrase(&self, zone: &str) -> String {
        let s = &self.kb.scenario;
        let z = s.zone(zone).expect("known zone");
        self.phrase_for("ROOM", s.room_concept(z))
    }

    fn finding(&self, position: Vec3, landmark: Option<&str>) -> Finding {
        let s = &self.kb.scenario;
        let lm = match landmark {
            Some(id) => s.object(id),
            None => nearest_landmark(s.landmarks(), position.ground()),
        };
        let room = s
            .zone_at(position.ground())
            .map(|z| self.room_phrase(&z.id))
            .unwrap_or_else(|| "apartment".into());
        Finding {
            object: self.object_phrase(),
            position,
            landmark: lm.map(|o| LandmarkRef {
                phrase: self.phrase_for("LANDMARK", &o.concept),
                position: o.position.ground(),
                facing: o.facing,
            }),
            room,
        }
    }

    fn report_decision(&self, out: &mut Vec<Output>, finding: &Finding, to: Interlocutor) {
        let audience = AudienceModel::for_interlocutor(to);
        let (variant, who) = match to {
            Interlocutor::Robot => ("ROBOT", ("teammate", self.teammate_name())),
            Interlocutor::Human => ("HUMAN", ("human", Binding::Name(self.human_name()))),
        };
        let mut event = ReasoningEvent::new(EventKind::ReportDecision).bind(who.0, who.1);
        match (report_relation(finding, &audience), &finding.landmark) {
            (Some(r), Some(l)) => {
                event = event
                    .variant(variant)
                    .bind("relation", Binding::Text(r.phrase().into()))
                    .bind("landmark", Binding::Text(l.phrase.clone()));
            }
            _ => {
                event = event
                    .variant(format!("{variant}/ROOM"))
                    .bind("room", Binding::Text(finding.room.clone()));
            }
        }
        self.think(out, event);
    }

    fn report(&self, out: &mut Vec<Output>, finding: &Finding, to: Interlocutor, kind: &ReportKind) {
        let audience = AudienceModel::for_interlocutor(to);
        let text = generate_report(finding, &audience, kind, &self.kb.utterances).expect("report templates exist");
        let recipient = match to {
            Interlocutor::Robot => self
                .teammate
                .as_ref()
                .expect("robot audience is the teammate")
                .0
                .clone(),
            Interlocutor::Human => self.human_id(),
        };
        self.say_text(out, &[recipient], text);
    }

    // --- inputs ---------------------------------------------------------

    /// Interprets one delivered message and reacts to it.
    pub fn hear(&mut self, msg: &Message, tick: u64) -> Vec<Output> {
        let mut out = Vec::new();
        self.tmrs += 1;
        let speaker = self
            .memory
            .external(&endpoint_key(&msg.sender))
            .cloned()
            .unwrap_or_else(|| self.human_anchor.clone());
        let doc = {
            let ctx = UtteranceContext {
                ontology: &self.kb.ontology,
                memory: &self.memory,
                owner: &self.id,
                doc: DocId::tmr(self.tmrs),
                tick,
                source: Source::Message(msg.id),
                speaker: &speaker,
                self_anchor: &self.self_anchor,
            };
            self.kb.lexicon.analyze(&msg.text, &ctx)
        };
        let bindings = self.memory.resolve_corefer(&doc, &self.kb.ontology);
        out.push(Output::Tmr(doc.clone()));
        let head = doc.head_frame(self.g()).cloned().expect("analysis yields a frame");
        self.think(
            &mut out,
            ReasoningEvent::new(EventKind::InterpretedInput)
                .bind("input", Binding::Text(msg.text.clone()))
                .bind("head", Binding::Concept(head.head.concept.clone())),
        );
        let handled = self.dispatch(&doc, &head, &bindings, msg, tick, &mut out);
        if !handled {
            self.think(
                &mut out,
                ReasoningEvent::new(EventKind::Unhandled).bind("head", Binding::Concept(head.head.concept.clone())),
            );
        }
        out
    }

    /// Interprets one sensing pass into a VMR and notes a sighting of the
    /// sought object for the next deliberation.
    pub fn perceive(&mut self, report: &SenseReport, tick: u64) -> Vec<Output> {
        self.vmrs += 1;
        let sought = self
            .plan
            .as_ref()
            .filter(|p| p.running && !p.found && p.open())
            .and_then(|p| p.sought.clone());
        let interp = {
            let ctx = PerceptContext {
                ontology: &self.kb.ontology,
                memory: &self.memory,
                owner: &self.id,
                doc: DocId::vmr(self.vmrs),
                tick,
                source: Source::Percept(self.vmrs as u64),
                self_anchor: &self.self_anchor,
                sought: sought.as_ref(),
            };
            interpret_percept(report, &ctx)
        };
        if let Some(s) = &sought {
            if self.pending_find.is_none() && match_found_object(&interp.doc, s, &self.memory, self.g()) {
                let anchor = self.memory.get(s).expect("sought anchor").frame.clone();
                self.pending_find = interp
                    .doc
                    .frames
                    .iter()
                    .filter(|f| features_match(self.g(), &anchor, f))
                    .find_map(|f| f.first("LOCATION-ABSOLUTE")?.as_tuple()?.as_vec3());
            }
        }
        self.memory.resolve_corefer(&interp.doc, &self.kb.ontology);
        vec![Output::Vmr(interp.doc)]
    }

    /// One deliberation step: delivered messages, then any sighting, then
    /// finished zone jobs, then whatever the agenda calls for next.
    pub fn cognize(&mut self, tick: u64, messages: &[Message], finished: &[ZoneSearchJob]) -> Vec<Output> {
        let mut out = Vec::new();
        for m in messages {
            out.extend(self.hear(m, tick));
        }
        if let Some(pos) = self.pending_find.take() {
            self.on_own_find(pos, &mut out);
        }
        for job in finished {
            if job.robot == self.id {
                self.job_finished(job, &mut out);
            }
        }
        self.advance_agenda(tick, &mut out);
        out
    }

    // --- message handlers -----------------------------------------------

    fn dispatch(
        &mut self,
        doc: &MrDocument,
        head: &Frame,
        bindings: &BTreeMap<InstanceRef, InstanceRef>,
        msg: &Message,
        tick: u64,
        out: &mut Vec<Output>,
    ) -> bool {
        let from_teammate = self.teammate.as_ref().is_some_and(|t| t.0 == msg.sender);
        let outcome = head
            .first("OUTCOME")
            .and_then(|v| v.as_concept())
            .map(|c| c.as_str().to_string());
        match head.head.concept.as_str() {
            "REQUEST-ACTION" => self.on_request(doc, head, bindings, msg, from_teammate, tick, out),
            "PROPOSE-PLAN" if from_teammate => self.on_propose(doc, head, out),
            "ACCEPT-PLAN" if from_teammate => self.on_accept(tick, out),
            "SEARCH-ZONE" if from_teammate && outcome.as_deref() == Some("FAILURE") => {
                self.on_zone_report(head, bindings, out)
            }
            "DISCOVER-EVENT" if from_teammate && outcome.as_deref() == Some("SUCCESS") => {
                self.on_discover(head, bindings, out)
            }
            "SEARCH-FOR-LOST-OBJECT" if from_teammate && outcome.as_deref() == Some("FAILURE") => {
                self.on_failure_report(out)
            }
            "UNINTERPRETED" => false,
            c => {
                // Answers and descriptions only enrich memory; they count as
                // handled while there is a plan to use them.
                let g = self.g();
                let concept = concept(c);
                !g.isa(&concept, "COMMUNICATIVE-EVENT") && self.plan.as_ref().is_some_and(|p| p.open())
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_request(
        &mut self,
        doc: &MrDocument,
        head: &Frame,
        bindings: &BTreeMap<InstanceRef, InstanceRef>,
        msg: &Message,
        from_teammate: bool,
        _tick: u64,
        out: &mut Vec<Output>,
    ) -> bool {
        let Some(theme) = head
            .first("THEME")
            .and_then(|v| v.as_instance())
            .and_then(|r| doc.frame(r))
        else {
            return false;
        };
        if self.g().isa(&theme.head.concept, "SEARCH-ZONE") {
            return from_teammate && self.on_assignment(theme, bindings, out);
        }
        if self.plan.is_some() {
            return false;
        }
        let goal = theme.head.concept.clone();
        let Some(plan) = self.kb.plans.for_goal(&goal, self.g()).cloned() else {
            return false;
        };
        let sought = bound(theme.first("THEME"), bindings);
        let speaker = bound(head.first("AGENT"), bindings)
            .and_then(|a| self.memory.get(&a))
            .and_then(|r| r.frame.first("HAS-NAME").and_then(|v| v.as_text()).map(str::to_string))
            .unwrap_or_else(|| msg.sender.clone());
        self.think(
            out,
            ReasoningEvent::new(EventKind::GoalAdopted)
                .bind("speaker", Binding::Name(speaker))
                .bind("goal", Binding::Concept(goal.clone())),
        );

        let root = self.add(out, None, "@COLLABORATIVE-ACTIVITY".into(), false);
        self.set(out, root, Status::Active);
        let mut state = PlanState {
            goal: plan.name.clone(),
            sought,
            root,
            pre: None,
            preconditions: Vec::new(),
            propose: None,
            run: None,
            body: None,
            proposed_at: 0,
            queue: VecDeque::new(),
            current: None,
            team: Vec::new(),
            running: false,
            found: false,
            closed: None,
        };

        if self.role == RobotRole::Subordinate {
            self.set(out, root, Status::Waiting);
            self.plan = Some(state);
            self.think(out, ReasoningEvent::new(EventKind::WaitForLeader));
            return true;
        }

        let select = self.add(out, Some(root), format!("[SELECT-PLAN] i.e., {}", plan.name), false);
        self.set(out, select, Status::Active);
        self.set(out, select, Status::Satisfied);
        self.think(
            out,
            ReasoningEvent::new(EventKind::PlanSelected).bind("plan", Binding::Concept(plan.name.clone())),
        );
        let pre = self.add(out, Some(root), "[PRECONDITIONS]".into(), false);
        for p in &plan.preconditions {
            let id = self.add(out, Some(pre), format!("@{p}"), false);
            state.preconditions.push((p.clone(), id));
        }
        state.propose = Some(self.add(out, Some(root), "@PROPOSE-PLAN".into(), false));
        let run = self.add(out, Some(root), "[RUN-PLAN]".into(), false);
        state.body = Some(self.add(out, Some(run), format!("@{}", plan.name), false));
        state.run = Some(run);
        state.pre = Some(pre);
        self.set(out, pre, Status::Active);
        let gaps = check_preconditions(&plan, state.sought.as_ref(), &self.memory, self.g());
        self.plan = Some(state);
        if !gaps.is_empty() {
            self.think(
                out,
                ReasoningEvent::new(EventKind::PreconditionsNoted).bind("plan", Binding::Concept(plan.name.clone())),
            );
        }
        true
    }

    fn on_propose(&mut self, doc: &MrDocument, head: &Frame, out: &mut Vec<Output>) -> bool {
        if self.role != RobotRole::Subordinate {
            return false;
        }
        let Some(p) = self.plan.as_ref() else {
            return false;
        };
        if !p.open() || p.body.is_some() {
            return false;
        }
        let root = p.root;
        let goal = head
            .first("THEME")
            .and_then(|v| v.as_instance())
            .and_then(|r| doc.frame(r))
            .map(|f| f.head.concept.clone())
            .unwrap_or_else(|| p.goal.clone());
        let Some(plan) = self.kb.plans.for_goal(&goal, self.g()).cloned() else {
            return false;
        };
        let leader = self
            .teammate
            .as_ref()
            .expect("proposal came from the teammate")
            .0
            .clone();
        self.say(out, &[leader], "ACCEPT", &[]);

        self.set(out, root, Status::Active);
        let select = self.add(out, Some(root), format!("[SELECT-PLAN] i.e., {}", plan.name), false);
        self.set(out, select, Status::Active);
        self.set(out, select, Status::Satisfied);
        let pre = self.add(out, Some(root), "[PRECONDITIONS]".into(), false);
        self.set(out, pre, Status::Active);
        let mut items = Vec::new();
        for c in &plan.preconditions {
            let id = self.add(out, Some(pre), format!("@{c}"), false);
            // The leader vouched for these by proposing.
            self.set(out, id, Status::Active);
            self.set(out, id, Status::Satisfied);
            items.push((c.clone(), id));
        }
        self.set(out, pre, Status::Satisfied);
        let propose = self.add(out, Some(root), "@PROPOSE-PLAN".into(), false);
        self.set(out, propose, Status::Active);
        self.set(out, propose, Status::Satisfied);
        let run = self.add(out, Some(root), "[RUN-PLAN]".into(), false);
        self.set(out, run, Status::Active);
        let body = self.add(out, Some(run), format!("@{}", plan.name), false);
        self.set(out, body, Status::Active);

        let p = self.plan.as_mut().expect("plan exists");
        p.goal = plan.name.clone();
        p.pre = Some(pre);
        p.preconditions = items;
        p.propose = Some(propose);
        p.run = Some(run);
        p.body = Some(body);
        p.running = true;
        true
    }

    fn on_accept(&mut self, tick: u64, out: &mut Vec<Output>) -> bool {
        let Some(p) = self.plan.as_ref() else {
            return false;
        };
        let Some(propose) = p.propose else {
            return false;
        };
        if self.role != RobotRole::Leader || !p.open() || self.status(propose) != Status::Waiting {
            return false;
        }
        let goal = p.goal.clone();
        self.think(
            out,
            ReasoningEvent::new(EventKind::PlanAccepted)
                .bind("teammate", self.teammate_name())
                .bind("plan", Binding::Concept(goal)),
        );
        self.set(out, propose, Status::Active);
        self.set(out, propose, Status::Satisfied);
        self.start_run(false, tick, out);
        true
    }

    fn on_assignment(
        &mut self,
        theme: &Frame,
        bindings: &BTreeMap<InstanceRef, InstanceRef>,
        out: &mut Vec<Output>,
    ) -> bool {
        if self.role != RobotRole::Subordinate {
            return false;
        }
        let Some(body) = self
            .plan
            .as_ref()
            .filter(|p| p.running && p.open() && !p.found)
            .and_then(|p| p.body)
        else {
            return false;
        };
        let Some(zone) = bound(theme.first("LOCATION"), bindings).and_then(|a| self.zone_of_anchor(&a)) else {
            return false;
        };
        let label = format!("@SEARCH-ZONE {}", self.zones[&zone]);
        let item = self.add(out, Some(body), label, true);
        self.plan.as_mut().expect("plan exists").queue.push_back((zone, item));
        true
    }

    fn on_zone_report(
        &mut self,
        head: &Frame,
        bindings: &BTreeMap<InstanceRef, InstanceRef>,
        out: &mut Vec<Output>,
    ) -> bool {
        if !self.plan.as_ref().is_some_and(|p| p.open()) {
            return false;
        }
        let Some(anchor) = bound(head.first("LOCATION"), bindings) else {
            return false;
        };
        let zone = self.zone_of_anchor(&anchor);
        self.think(
            out,
            ReasoningEvent::new(EventKind::TeammateZoneDone)
                .bind("teammate", self.teammate_name())
                .bind("zone", Binding::Anchor(anchor))
                .bind("object", self.object_binding()),
        );
        let teammate = self.teammate.as_ref().map(|t| t.0.clone());
        if let (Some(zone), Some(p)) = (zone, self.plan.as_mut()) {
            for entry in p.team.iter_mut() {
                if entry.0 == zone && Some(&entry.1) == teammate.as_ref() {
                    entry.2 = true;
                }
            }
        }
        true
    }

    fn on_discover(
        &mut self,
        head: &Frame,
        bindings: &BTreeMap<InstanceRef, InstanceRef>,
        out: &mut Vec<Output>,
    ) -> bool {
        let Some(p) = self.plan.as_ref() else {
            return false;
        };
        if p.found || !p.open() {
            // Someone already found it; a second report changes nothing.
            return p.found;
        }
        self.plan.as_mut().expect("plan exists").found = true;
        self.think(
            out,
            ReasoningEvent::new(EventKind::TeammateFound)
                .bind("teammate", self.teammate_name())
                .bind("object", self.object_binding()),
        );
        self.stop_search(false, out);
        if self.role == RobotRole::Leader {
            let position = head
                .first("LOCATION-ABSOLUTE")
                .and_then(|v| v.as_tuple())
                .and_then(|t| t.as_vec3())
                .unwrap_or_default();
            let landmark = bound(head.first("LANDMARK"), bindings).and_then(|a| self.objects.get(&a).cloned());
            let mut finding = self.finding(position, landmark.as_deref());
            if landmark.is_none() {
                finding.landmark = None;
            }
            self.report_decision(out, &finding, Interlocutor::Human);
            let teammate = match self.teammate.as_ref().map(|t| t.2) {
                Some(RobotKind::Aerial) => "drone",
                _ => "ground robot",
            };
            self.report(
                out,
                &finding,
                Interlocutor::Human,
                &ReportKind::Relay {
                    teammate: teammate.into(),
                },
            );
        }
        self.close(Outcome::Found, out);
        true
    }

    fn on_failure_report(&mut self, out: &mut Vec<Output>) -> bool {
        if !self.plan.as_ref().is_some_and(|p| p.open()) {
            return false;
        }
        self.think(
            out,
            ReasoningEvent::new(EventKind::PlanFailed).bind("object", self.object_binding()),
        );
        self.stop_search(false, out);
        self.close(Outcome::NotFound, out);
        true
    }

    // --- search ---------------------------------------------------------

    fn start_run(&mut self, solo: bool, _tick: u64, out: &mut Vec<Output>) {
        let p = self.plan.as_ref().expect("plan exists");
        let (run, body) = (p.run.expect("leader plan"), p.body.expect("leader plan"));
        let sought = p.sought.clone();
        self.set(out, run, Status::Active);

        let s = &self.kb.scenario;
        let mut roster = vec![self.searcher(&self.id)];
        if !solo {
            if let Some((t, _, _)) = &self.teammate {
                roster.push(self.searcher(t));
            }
        }
        let last_seen = sought.as_ref().and_then(|a| last_seen_at(&self.memory, a));
        let assignment = decompose_search(s, &roster, last_seen).expect("validated scenario has zones");

        let mut team = Vec::new();
        for (who, zones) in &assignment.lists {
            for z in zones {
                team.push((z.clone(), who.clone(), false));
            }
            if who != &self.id {
                for z in zones {
                    let room = self.room_phrase(z);
                    self.say(
                        out,
                        std::slice::from_ref(who),
                        "ASSIGN",
                        &[("room", Binding::Text(room))],
                    );
                }
            }
        }
        let mut queue = VecDeque::new();
        for z in assignment.zones_for(&self.id).to_vec() {
            let label = format!("@SEARCH-ZONE {}", self.zones[&z]);
            let item = self.add(out, Some(body), label, true);
            queue.push_back((z, item));
        }
        self.set(out, body, Status::Active);
        let p = self.plan.as_mut().expect("plan exists");
        p.team = team;
        p.queue = queue;
        p.running = true;
    }

    fn searcher(&self, id: &str) -> Searcher {
        let r = self.kb.scenario.robot(id).expect("roster robot");
        Searcher {
            id: r.id.clone(),
            kind: r.kind,
            start: r.station,
        }
    }

    fn next_zone(&mut self, out: &mut Vec<Output>) {
        if self.job.is_some() {
            return;
        }
        let Some(p) = self
            .plan
            .as_mut()
            .filter(|p| p.running && p.open() && !p.found && p.current.is_none())
        else {
            return;
        };
        let Some((zone, item)) = p.queue.pop_front() else {
            return;
        };
        p.current = Some((zone.clone(), item));
        let anchor = self.zones[&zone].clone();
        self.think(
            out,
            ReasoningEvent::new(EventKind::ZoneStart).bind("zone", Binding::Anchor(anchor)),
        );
        self.set(out, item, Status::Active);
        self.job = Some(zone.clone());
        out.push(Output::StartZone(zone));
    }

    fn stop_search(&mut self, found: bool, out: &mut Vec<Output>) {
        if self.job.take().is_some() {
            out.push(Output::StopSearch { found });
        }
    }

    fn job_finished(&mut self, job: &ZoneSearchJob, out: &mut Vec<Output>) {
        if self.job.as_deref() == Some(job.zone.as_str()) {
            self.job = None;
        }
        let Some(p) = self.plan.as_mut() else {
            return;
        };
        if p.found || !p.open() || job.status != JobStatus::DoneNotFound {
            return;
        }
        let Some((zone, item)) = p.current.take().filter(|(z, _)| *z == job.zone) else {
            return;
        };
        for entry in p.team.iter_mut() {
            if entry.0 == zone && entry.1 == self.id {
                entry.2 = true;
            }
        }
        self.set(out, item, Status::SatisfiedNegative);
        let anchor = self.zones[&zone].clone();
        self.think(
            out,
            ReasoningEvent::new(EventKind::ZoneDone)
                .bind("zone", Binding::Anchor(anchor))
                .bind("object", self.object_binding()),
        );
        if let Some((t, _, _)) = self.teammate.clone() {
            let room = self.room_phrase(&zone);
            let object = self.object_phrase();
            self.say(
                out,
                &[t],
                "ZONE-NOT-FOUND",
                &[("room", Binding::Text(room)), ("object", Binding::Text(object))],
            );
        }
    }

    fn on_own_find(&mut self, position: Vec3, out: &mut Vec<Output>) {
        let Some(p) = self.plan.as_mut() else {
            return;
        };
        if p.found || !p.open() {
            return;
        }
        p.found = true;
        let current = p.current.take();
        self.think(
            out,
            ReasoningEvent::new(EventKind::Found)
                .bind("object", self.object_binding())
                .bind("position", Binding::Text(position.panel())),
        );
        self.stop_search(true, out);
        if let Some((_, item)) = current {
            self.set(out, item, Status::Satisfied);
        }
        let finding = self.finding(position, None);
        if self.teammate.is_some() {
            self.report_decision(out, &finding, Interlocutor::Robot);
            self.report(out, &finding, Interlocutor::Robot, &ReportKind::Own);
        }
        if self.role == RobotRole::Leader {
            self.report_decision(out, &finding, Interlocutor::Human);
            self.report(out, &finding, Interlocutor::Human, &ReportKind::Own);
        }
        self.close(Outcome::Found, out);
    }

    fn close(&mut self, outcome: Outcome, out: &mut Vec<Output>) {
        let p = self.plan.as_ref().expect("plan exists");
        let spine: Vec<usize> = [Some(p.root), p.run, p.body].into_iter().flatten().collect();
        let goal = p.goal.clone();
        let end = match outcome {
            Outcome::Found => Status::Satisfied,
            Outcome::NotFound => Status::Failed,
        };
        for id in self.agenda.subtree(p.root).into_iter().rev() {
            let status = self.status(id);
            if status.is_terminal() {
                continue;
            }
            if spine.contains(&id) && status != Status::Pending {
                self.settle(out, id, end);
            } else {
                self.set(out, id, Status::Cancelled);
            }
        }
        let p = self.plan.as_mut().expect("plan exists");
        p.closed = Some(outcome);
        p.queue.clear();
        p.current = None;
        self.think(
            out,
            ReasoningEvent::new(EventKind::PlanClosed).bind("plan", Binding::Concept(goal)),
        );
    }

    // --- agenda ---------------------------------------------------------

    /// Acts on the deepest, leftmost unfinished item: ask the next missing
    /// precondition, propose, start the next zone, or give up.
    pub fn advance_agenda(&mut self, tick: u64, out: &mut Vec<Output>) {
        let Some(p) = self.plan.as_ref() else {
            return;
        };
        if !p.open() {
            return;
        }
        if self.role == RobotRole::Leader && !self.advance_preconditions(out) {
            return;
        }
        if self.role == RobotRole::Leader && !self.advance_proposal(tick, out) {
            return;
        }
        self.next_zone(out);
        if self.role == RobotRole::Leader {
            self.check_exhausted(out);
        }
    }

    /// False while a question is outstanding.
    fn advance_preconditions(&mut self, out: &mut Vec<Output>) -> bool {
        let p = self.plan.as_ref().expect("plan exists");
        let Some(pre) = p.pre else {
            return true;
        };
        if self.status(pre) != Status::Active {
            return true;
        }
        let plan = self
            .kb
            .plans
            .for_goal(&p.goal, self.g())
            .expect("plan in library")
            .clone();
        let items = p.preconditions.clone();
        for (goal, item) in items {
            let status = self.status(item);
            if status.is_terminal() {
                continue;
            }
            let sought = self.sought().cloned();
            let gaps = check_preconditions(&plan, sought.as_ref(), &self.memory, self.g());
            if !gaps.contains(&goal) {
                self.settle(out, item, Status::Satisfied);
                continue;
            }
            if status == Status::Waiting {
                return false;
            }
            self.think(
                out,
                ReasoningEvent::new(EventKind::PreconditionGap)
                    .variant(goal.as_str())
                    .bind("object", self.object_binding()),
            );
            let object = self.object_phrase();
            self.say(
                out,
                &[self.human_id()],
                &format!("ASK/{goal}"),
                &[("object", Binding::Text(object))],
            );
            self.set(out, item, Status::Active);
            self.set(out, item, Status::Waiting);
            return false;
        }
        self.set(out, pre, Status::Satisfied);
        true
    }

    /// False while waiting for the teammate's answer.
    fn advance_proposal(&mut self, tick: u64, out: &mut Vec<Output>) -> bool {
        let p = self.plan.as_ref().expect("plan exists");
        let Some(propose) = p.propose else {
            return true;
        };
        let goal = p.goal.clone();
        let proposed_at = p.proposed_at;
        match self.status(propose) {
            Status::Pending => {
                let Some((t, _, _)) = self.teammate.clone() else {
                    self.set(out, propose, Status::Cancelled);
                    self.start_run(true, tick, out);
                    return true;
                };
                self.think(
                    out,
                    ReasoningEvent::new(EventKind::PlanProposed)
                        .bind("plan", Binding::Concept(goal))
                        .bind("teammate", self.teammate_name()),
                );
                self.say(out, &[t, self.human_id()], "PROPOSE", &[]);
                self.set(out, propose, Status::Active);
                self.set(out, propose, Status::Waiting);
                self.plan.as_mut().expect("plan exists").proposed_at = tick;
                false
            }
            Status::Waiting if tick >= proposed_at + self.accept_timeout => {
                self.think(
                    out,
                    ReasoningEvent::new(EventKind::ProceedSolo).bind("teammate", self.teammate_name()),
                );
                self.set(out, propose, Status::Active);
                self.set(out, propose, Status::Failed);
                self.start_run(true, tick, out);
                true
            }
            Status::Waiting => false,
            _ => true,
        }
    }

    fn check_exhausted(&mut self, out: &mut Vec<Output>) {
        let Some(p) = self.plan.as_ref() else {
            return;
        };
        let done = p.running
            && p.open()
            && !p.found
            && self.job.is_none()
            && p.current.is_none()
            && p.queue.is_empty()
            && p.team.iter().all(|z| z.2);
        if !done {
            return;
        }
        self.think(
            out,
            ReasoningEvent::new(EventKind::PlanFailed).bind("object", self.object_binding()),
        );
        let mut to = vec![self.human_id()];
        to.extend(self.teammate.as_ref().map(|t| t.0.clone()));
        let object = self.object_phrase();
        self.say(out, &to, "FAILED", &[("object", Binding::Text(object))]);
        self.close(Outcome::NotFound, out);
    }
}
