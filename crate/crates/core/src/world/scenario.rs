//! Scenario fixture format.
//!
//! ```text
//! SCENARIO seed-apartment
//! SEED 7
//! HUMAN HUMAN Danny
//! ROBOT UGV UGV-U GROUND LEADER SPEED 20 RANGE 120 FOV 360 HEIGHT 3.30 STATION 500,10 YAW 0
//! ROOM R-KITCHEN KITCHEN 0,350 400,350 400,600 0,600
//! ZONE Z-KITCHEN ROOM R-KITCHEN AERIAL WAYPOINTS 100,420 300,420
//! OBJECT carpet CARPET AT 510,0,23 ROT 0,90,0 KNOWN
//! PROP carpet COLOR BLUE-GREEN
//! ```
//!
//! `ROBOT` labels may contain no spaces. `ZONE` accepts, in this order,
//! `PARENT <zone>`, `AERIAL`, `REGION <points>` (defaults to the room
//! polygon) and the mandatory `WAYPOINTS <points>`. `OBJECT` accepts `ROT`,
//! `FACING NORTH|EAST|SOUTH|WEST` and `KNOWN` in that order. `PROP` takes
//! the rest of the line as a value column in frame grammar. Points are
//! `x,z` on the ground plane; positions and rotations are `x,y,z`. Comments
//! and blank lines are kept so a canonical file formats back byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::frames::{parse_values, SlotValue};
use crate::geom::{Fixed, Point2, Vec3};
use crate::ontology::{ConceptName, OntologyGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate id {0}")]
    Duplicate(String),
    #[error("{0} refers to unknown {1}")]
    Dangling(String, String),
    #[error("zone {0} has no waypoints")]
    NoWaypoints(String),
    #[error("object {0} lies outside every zone")]
    OutsideZones(String),
    #[error("object {0} lies in more than one zone")]
    OverlappingZones(String),
    #[error("region of {0} needs at least 3 points")]
    DegenerateRegion(String),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptName),
    #[error("scenario needs exactly one leader robot, found {0}")]
    Leaders(usize),
    #[error("missing {0} record")]
    Missing(&'static str),
}

fn syntax(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RobotKind {
    Ground,
    Aerial,
}

impl RobotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RobotKind::Ground => "GROUND",
            RobotKind::Aerial => "AERIAL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RobotRole {
    Leader,
    Subordinate,
}

impl RobotRole {
    pub fn as_str(self) -> &'static str {
        match self {
            RobotRole::Leader => "LEADER",
            RobotRole::Subordinate => "SUBORDINATE",
        }
    }

    /// Short tag for panel headers.
    pub fn tag(self) -> &'static str {
        match self {
            RobotRole::Leader => "LEADER",
            RobotRole::Subordinate => "SUB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facing {
    North,
    East,
    South,
    West,
}

impl Facing {
    pub fn as_str(self) -> &'static str {
        match self {
            Facing::North => "NORTH",
            Facing::East => "EAST",
            Facing::South => "SOUTH",
            Facing::West => "WEST",
        }
    }

    /// Unit vector on the ground plane, `(x, z)`.
    pub fn unit(self) -> (i64, i64) {
        match self {
            Facing::North => (0, 1),
            Facing::East => (1, 0),
            Facing::South => (0, -1),
            Facing::West => (-1, 0),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NORTH" => Facing::North,
            "EAST" => Facing::East,
            "SOUTH" => Facing::South,
            "WEST" => Facing::West,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanSpec {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotSpec {
    pub id: String,
    pub label: String,
    pub kind: RobotKind,
    pub role: RobotRole,
    pub speed: Fixed,
    pub range: Fixed,
    /// Field of view in degrees; 360 sees all around.
    pub fov: Fixed,
    /// Sensor height for ground robots, cruise height for aerial ones.
    pub height: Fixed,
    pub station: Point2,
    pub yaw: Fixed,
}

impl RobotSpec {
    /// `UGV-U [LEADER]`
    pub fn header(&self) -> String {
        format!("{} [{}]", self.label, self.role.tag())
    }

    pub fn start(&self) -> Vec3 {
        Vec3::new(self.station.x, self.height, self.station.z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Room {
    pub id: String,
    pub concept: ConceptName,
    pub polygon: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zone {
    pub id: String,
    pub room: String,
    pub parent: Option<String>,
    pub aerial: bool,
    pub region: Option<Vec<Point2>>,
    pub waypoints: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldObject {
    pub id: String,
    pub concept: ConceptName,
    pub position: Vec3,
    pub rotation: Option<Vec3>,
    pub facing: Option<Facing>,
    /// Part of the map the agents start with.
    pub known: bool,
    pub props: Vec<(ConceptName, Vec<SlotValue>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioRecord {
    Verbatim(String),
    Name(String),
    Seed(u64),
    Human(HumanSpec),
    Robot(RobotSpec),
    Room(Room),
    Zone(Zone),
    Object(WorldObject),
    Prop {
        object: String,
        property: ConceptName,
        values: Vec<SlotValue>,
    },
}

fn points(ps: &[Point2]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for ScenarioRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioRecord::Verbatim(s) => f.write_str(s),
            ScenarioRecord::Name(n) => write!(f, "SCENARIO {n}"),
            ScenarioRecord::Seed(s) => write!(f, "SEED {s}"),
            ScenarioRecord::Human(h) => write!(f, "HUMAN {} {}", h.id, h.name),
            ScenarioRecord::Robot(r) => write!(
                f,
                "ROBOT {} {} {} {} SPEED {} RANGE {} FOV {} HEIGHT {} STATION {} YAW {}",
                r.id,
                r.label,
                r.kind.as_str(),
                r.role.as_str(),
                r.speed.compact(),
                r.range.compact(),
                r.fov.compact(),
                r.height.compact(),
                r.station,
                r.yaw.compact()
            ),
            ScenarioRecord::Room(r) => write!(f, "ROOM {} {} {}", r.id, r.concept, points(&r.polygon)),
            ScenarioRecord::Zone(z) => {
                write!(f, "ZONE {} ROOM {}", z.id, z.room)?;
                if let Some(p) = &z.parent {
                    write!(f, " PARENT {p}")?;
                }
                if z.aerial {
                    f.write_str(" AERIAL")?;
                }
                if let Some(r) = &z.region {
                    write!(f, " REGION {}", points(r))?;
                }
                write!(f, " WAYPOINTS {}", points(&z.waypoints))
            }
            ScenarioRecord::Object(o) => {
                write!(f, "OBJECT {} {} AT {}", o.id, o.concept, o.position)?;
                if let Some(r) = o.rotation {
                    write!(f, " ROT {r}")?;
                }
                if let Some(d) = o.facing {
                    write!(f, " FACING {}", d.as_str())?;
                }
                if o.known {
                    f.write_str(" KNOWN")?;
                }
                Ok(())
            }
            ScenarioRecord::Prop {
                object,
                property,
                values,
            } => {
                let vs: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "PROP {object} {property} {}", vs.join(","))
            }
        }
    }
}

struct Words<'a> {
    line: usize,
    items: Vec<&'a str>,
    pos: usize,
}

impl<'a> Words<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, ScenarioError> {
        let w = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| syntax(self.line, format!("expected {what}")))?;
        self.pos += 1;
        Ok(w)
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).copied()
    }

    fn eat(&mut self, keyword: &str) -> bool {
        if self.peek() == Some(keyword) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<(), ScenarioError> {
        if self.eat(keyword) {
            Ok(())
        } else {
            Err(syntax(self.line, format!("expected {keyword}")))
        }
    }

    fn fixed(&mut self, what: &str) -> Result<Fixed, ScenarioError> {
        let w = self.next(what)?;
        w.parse()
            .map_err(|e: crate::geom::FixedParseError| syntax(self.line, e.to_string()))
    }

    fn concept(&mut self) -> Result<ConceptName, ScenarioError> {
        let w = self.next("concept")?;
        ConceptName::new(w).map_err(|e| syntax(self.line, e.to_string()))
    }

    fn vec3(&mut self, what: &str) -> Result<Vec3, ScenarioError> {
        let w = self.next(what)?;
        w.parse().map_err(|_| syntax(self.line, format!("bad {what} {w:?}")))
    }

    /// Points until the next keyword or end of line.
    fn points(&mut self) -> Result<Vec<Point2>, ScenarioError> {
        let mut out = Vec::new();
        while let Some(w) = self.peek() {
            if w.chars().all(|c| c.is_ascii_uppercase()) {
                break;
            }
            out.push(w.parse().map_err(|_| syntax(self.line, format!("bad point {w:?}")))?);
            self.pos += 1;
        }
        Ok(out)
    }

    fn done(&self) -> Result<(), ScenarioError> {
        match self.peek() {
            None => Ok(()),
            Some(w) => Err(syntax(self.line, format!("unexpected {w:?}"))),
        }
    }
}

fn parse_record(line: usize, text: &str) -> Result<ScenarioRecord, ScenarioError> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(ScenarioRecord::Verbatim(text.to_string()));
    }
    if let Some(rest) = trimmed.strip_prefix("PROP ") {
        let mut parts = rest.splitn(3, ' ');
        let object = parts.next().unwrap_or_default().to_string();
        let property = parts.next().ok_or_else(|| syntax(line, "PROP needs a property"))?;
        let property = ConceptName::new(property).map_err(|e| syntax(line, e.to_string()))?;
        let column = parts.next().ok_or_else(|| syntax(line, "PROP needs a value"))?;
        let values = parse_values(column).map_err(|e| syntax(line, e))?;
        return Ok(ScenarioRecord::Prop {
            object,
            property,
            values,
        });
    }
    let mut w = Words {
        line,
        items: trimmed.split_whitespace().collect(),
        pos: 0,
    };
    let record = match w.next("keyword")? {
        "SCENARIO" => ScenarioRecord::Name(w.next("name")?.to_string()),
        "SEED" => ScenarioRecord::Seed(w.next("seed")?.parse().map_err(|_| syntax(line, "bad seed"))?),
        "HUMAN" => ScenarioRecord::Human(HumanSpec {
            id: w.next("id")?.to_string(),
            name: w.next("name")?.to_string(),
        }),
        "ROBOT" => {
            let id = w.next("id")?.to_string();
            let label = w.next("label")?.to_string();
            let kind = match w.next("kind")? {
                "GROUND" => RobotKind::Ground,
                "AERIAL" => RobotKind::Aerial,
                k => return Err(syntax(line, format!("bad robot kind {k:?}"))),
            };
            let role = match w.next("role")? {
                "LEADER" => RobotRole::Leader,
                "SUBORDINATE" => RobotRole::Subordinate,
                r => return Err(syntax(line, format!("bad robot role {r:?}"))),
            };
            w.expect("SPEED")?;
            let speed = w.fixed("speed")?;
            w.expect("RANGE")?;
            let range = w.fixed("range")?;
            w.expect("FOV")?;
            let fov = w.fixed("fov")?;
            w.expect("HEIGHT")?;
            let height = w.fixed("height")?;
            w.expect("STATION")?;
            let station = w.next("station")?;
            let station = station
                .parse()
                .map_err(|_| syntax(line, format!("bad station {station:?}")))?;
            w.expect("YAW")?;
            let yaw = w.fixed("yaw")?;
            if speed <= Fixed::ZERO {
                return Err(syntax(line, "speed must be positive"));
            }
            ScenarioRecord::Robot(RobotSpec {
                id,
                label,
                kind,
                role,
                speed,
                range,
                fov,
                height,
                station,
                yaw,
            })
        }
        "ROOM" => {
            let id = w.next("id")?.to_string();
            let concept = w.concept()?;
            let polygon = w.points()?;
            ScenarioRecord::Room(Room { id, concept, polygon })
        }
        "ZONE" => {
            let id = w.next("id")?.to_string();
            w.expect("ROOM")?;
            let room = w.next("room")?.to_string();
            let parent = if w.eat("PARENT") {
                Some(w.next("parent")?.to_string())
            } else {
                None
            };
            let aerial = w.eat("AERIAL");
            let region = if w.eat("REGION") { Some(w.points()?) } else { None };
            w.expect("WAYPOINTS")?;
            let waypoints = w.points()?;
            ScenarioRecord::Zone(Zone {
                id,
                room,
                parent,
                aerial,
                region,
                waypoints,
            })
        }
        "OBJECT" => {
            let id = w.next("id")?.to_string();
            let concept = w.concept()?;
            w.expect("AT")?;
            let position = w.vec3("position")?;
            let rotation = if w.eat("ROT") { Some(w.vec3("rotation")?) } else { None };
            let facing = if w.eat("FACING") {
                let d = w.next("direction")?;
                Some(Facing::parse(d).ok_or_else(|| syntax(line, format!("bad facing {d:?}")))?)
            } else {
                None
            };
            let known = w.eat("KNOWN");
            ScenarioRecord::Object(WorldObject {
                id,
                concept,
                position,
                rotation,
                facing,
                known,
                props: Vec::new(),
            })
        }
        k => return Err(syntax(line, format!("unknown record {k:?}"))),
    };
    w.done()?;
    Ok(record)
}

/// A scenario file as records, for byte-exact formatting.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDoc {
    pub records: Vec<ScenarioRecord>,
}

impl ScenarioDoc {
    pub fn parse(source: &str) -> Result<Self, ScenarioError> {
        let records = source
            .lines()
            .enumerate()
            .map(|(i, l)| parse_record(i + 1, l))
            .collect::<Result<_, _>>()?;
        Ok(ScenarioDoc { records })
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// A validated map plus team.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub human: HumanSpec,
    pub robots: Vec<RobotSpec>,
    pub rooms: Vec<Room>,
    pub zones: Vec<Zone>,
    pub objects: Vec<WorldObject>,
}

pub fn load_scenario(source: &str, ontology: &OntologyGraph) -> Result<Scenario, ScenarioError> {
    Scenario::from_doc(&ScenarioDoc::parse(source)?, ontology)
}

impl Scenario {
    pub fn seed_scenario(ontology: &OntologyGraph) -> Self {
        load_scenario(crate::fixtures::SEED_SCENARIO, ontology).expect("seed scenario is valid")
    }

    pub fn from_doc(doc: &ScenarioDoc, ontology: &OntologyGraph) -> Result<Self, ScenarioError> {
        let mut name = None;
        let mut seed = None;
        let mut human = None;
        let mut robots = Vec::new();
        let mut rooms = Vec::new();
        let mut zones = Vec::new();
        let mut objects: Vec<WorldObject> = Vec::new();
        for record in &doc.records {
            match record {
                ScenarioRecord::Verbatim(_) => {}
                ScenarioRecord::Name(n) => name = Some(n.clone()),
                ScenarioRecord::Seed(s) => seed = Some(*s),
                ScenarioRecord::Human(h) => human = Some(h.clone()),
                ScenarioRecord::Robot(r) => robots.push(r.clone()),
                ScenarioRecord::Room(r) => rooms.push(r.clone()),
                ScenarioRecord::Zone(z) => zones.push(z.clone()),
                ScenarioRecord::Object(o) => objects.push(o.clone()),
                ScenarioRecord::Prop {
                    object,
                    property,
                    values,
                } => {
                    let o = objects
                        .iter_mut()
                        .find(|o| &o.id == object)
                        .ok_or_else(|| ScenarioError::Dangling(format!("PROP {property}"), object.clone()))?;
                    o.props.push((property.clone(), values.clone()));
                }
            }
        }
        let scenario = Scenario {
            name: name.ok_or(ScenarioError::Missing("SCENARIO"))?,
            seed: seed.unwrap_or(0),
            human: human.ok_or(ScenarioError::Missing("HUMAN"))?,
            robots,
            rooms,
            zones,
            objects,
        };
        scenario.validate(ontology)?;
        Ok(scenario)
    }

    pub fn validate(&self, ontology: &OntologyGraph) -> Result<(), ScenarioError> {
        let mut ids = BTreeSet::new();
        let all_ids = std::iter::once(&self.human.id)
            .chain(self.robots.iter().map(|r| &r.id))
            .chain(self.rooms.iter().map(|r| &r.id))
            .chain(self.zones.iter().map(|z| &z.id))
            .chain(self.objects.iter().map(|o| &o.id));
        for id in all_ids {
            if !ids.insert(id) {
                return Err(ScenarioError::Duplicate(id.clone()));
            }
        }
        let leaders = self.robots.iter().filter(|r| r.role == RobotRole::Leader).count();
        if leaders != 1 {
            return Err(ScenarioError::Leaders(leaders));
        }
        for room in &self.rooms {
            if !ontology.contains(&room.concept) {
                return Err(ScenarioError::UnknownConcept(room.concept.clone()));
            }
            if room.polygon.len() < 3 {
                return Err(ScenarioError::DegenerateRegion(room.id.clone()));
            }
        }
        for zone in &self.zones {
            if self.room(&zone.room).is_none() {
                return Err(ScenarioError::Dangling(zone.id.clone(), zone.room.clone()));
            }
            if let Some(p) = &zone.parent {
                if self.zone(p).is_none() {
                    return Err(ScenarioError::Dangling(zone.id.clone(), p.clone()));
                }
            }
            if zone.waypoints.is_empty() {
                return Err(ScenarioError::NoWaypoints(zone.id.clone()));
            }
            if zone.region.as_ref().is_some_and(|r| r.len() < 3) {
                return Err(ScenarioError::DegenerateRegion(zone.id.clone()));
            }
        }
        for o in &self.objects {
            if !ontology.contains(&o.concept) {
                return Err(ScenarioError::UnknownConcept(o.concept.clone()));
            }
            for (p, _) in &o.props {
                if !ontology.is_property(p) {
                    return Err(ScenarioError::UnknownConcept(p.clone()));
                }
            }
            match self.zones_containing(o.position.ground()).len() {
                0 => return Err(ScenarioError::OutsideZones(o.id.clone())),
                1 => {}
                _ => return Err(ScenarioError::OverlappingZones(o.id.clone())),
            }
        }
        Ok(())
    }

    pub fn room(&self, id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn robot(&self, id: &str) -> Option<&RobotSpec> {
        self.robots.iter().find(|r| r.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&WorldObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut WorldObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn leader(&self) -> &RobotSpec {
        self.robots
            .iter()
            .find(|r| r.role == RobotRole::Leader)
            .expect("validated scenario has a leader")
    }

    /// Zones nobody names as parent; these tile the searchable area.
    pub fn leaf_zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones
            .iter()
            .filter(|z| !self.zones.iter().any(|c| c.parent.as_deref() == Some(z.id.as_str())))
    }

    pub fn region<'a>(&'a self, zone: &'a Zone) -> &'a [Point2] {
        match &zone.region {
            Some(r) => r,
            None => &self.room(&zone.room).expect("validated zone room").polygon,
        }
    }

    pub fn zones_containing(&self, p: Point2) -> Vec<&Zone> {
        self.leaf_zones()
            .filter(|z| point_in_polygon(p, self.region(z)))
            .collect()
    }

    pub fn zone_at(&self, p: Point2) -> Option<&Zone> {
        self.zones_containing(p).into_iter().next()
    }

    /// Vertex mean of the zone's region.
    pub fn centroid(&self, zone: &Zone) -> Point2 {
        let region = self.region(zone);
        let n = region.len() as i64;
        let sx: i64 = region.iter().map(|p| p.x.0).sum();
        let sz: i64 = region.iter().map(|p| p.z.0).sum();
        Point2::new(
            Fixed(crate::geom::div_round(sx as i128, n as i128) as i64),
            Fixed(crate::geom::div_round(sz as i128, n as i128) as i64),
        )
    }

    pub fn room_concept(&self, zone: &Zone) -> &ConceptName {
        &self.room(&zone.room).expect("validated zone room").concept
    }

    /// 1-based position of `zone` among leaf zones sharing its room concept;
    /// this becomes the anchor index (`#KITCHEN.1`).
    pub fn zone_ordinal(&self, zone: &Zone) -> u32 {
        let concept = self.room_concept(zone);
        let mut n = 0;
        for z in self.leaf_zones() {
            if self.room_concept(z) == concept {
                n += 1;
            }
            if z.id == zone.id {
                return n;
            }
        }
        n
    }

    /// Known objects with a facing; the things reports are phrased against.
    pub fn landmarks(&self) -> impl Iterator<Item = &WorldObject> {
        self.objects.iter().filter(|o| o.known && o.facing.is_some())
    }

    /// Smallest box containing every room, `(min, max)`.
    pub fn bounds(&self) -> (Point2, Point2) {
        let pts = self.rooms.iter().flat_map(|r| r.polygon.iter());
        let mut min = Point2::new(Fixed(i64::MAX), Fixed(i64::MAX));
        let mut max = Point2::new(Fixed(i64::MIN), Fixed(i64::MIN));
        for p in pts {
            min.x = min.x.min(p.x);
            min.z = min.z.min(p.z);
            max.x = max.x.max(p.x);
            max.z = max.z.max(p.z);
        }
        (min, max)
    }

    /// Canonical text for this scenario; comments are not kept.
    pub fn format(&self) -> String {
        let mut records = vec![
            ScenarioRecord::Name(self.name.clone()),
            ScenarioRecord::Seed(self.seed),
            ScenarioRecord::Human(self.human.clone()),
        ];
        records.extend(self.robots.iter().cloned().map(ScenarioRecord::Robot));
        records.extend(self.rooms.iter().cloned().map(ScenarioRecord::Room));
        records.extend(self.zones.iter().cloned().map(ScenarioRecord::Zone));
        for o in &self.objects {
            records.push(ScenarioRecord::Object(WorldObject {
                props: Vec::new(),
                ..o.clone()
            }));
            for (p, v) in &o.props {
                records.push(ScenarioRecord::Prop {
                    object: o.id.clone(),
                    property: p.clone(),
                    values: v.clone(),
                });
            }
        }
        ScenarioDoc { records }.format()
    }

    /// Object ids grouped by leaf zone, for diagnostics.
    pub fn objects_by_zone(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for o in &self.objects {
            if let Some(z) = self.zone_at(o.position.ground()) {
                out.entry(z.id.clone()).or_default().push(o.id.clone());
            }
        }
        out
    }
}

/// Crossing-number test. Points on a shared edge belong to exactly one of
/// two adjacent rectangles: lower/left edges are inside, upper/right are not.
pub fn point_in_polygon(p: Point2, polygon: &[Point2]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if (a.z > p.z) != (b.z > p.z) {
            let den = (b.z.0 - a.z.0) as i128;
            let num = (b.x.0 - a.x.0) as i128 * (p.z.0 - a.z.0) as i128;
            let lhs = (p.x.0 - a.x.0) as i128 * den;
            let left_of_edge = if den > 0 { lhs < num } else { lhs > num };
            if left_of_edge {
                inside = !inside;
            }
        }
    }
    inside
}
