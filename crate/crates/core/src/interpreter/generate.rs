//! Generated language: thoughts and spoken lines.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::frames::InstanceRef;
use crate::geom::{Fixed, Point2, Vec3};
use crate::ontology::ConceptName;
use crate::world::{Facing, WorldObject};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("line {0}: expected KEY = surface")]
    Syntax(usize),
    #[error("duplicate template {0}")]
    Duplicate(String),
    #[error("no template for {0}")]
    Missing(String),
    #[error("template {key} needs {{{name}}}")]
    Unbound { key: String, name: String },
}

/// A value interpolated into a surface string.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    /// `@CONCEPT`
    Concept(ConceptName),
    /// `#CONCEPT.n`
    Anchor(InstanceRef),
    /// Upper-cased, as the agent refers to people.
    Name(String),
    Text(String),
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Concept(c) => write!(f, "@{c}"),
            Binding::Anchor(a) => write!(f, "{}", a.as_anchor()),
            Binding::Name(n) => f.write_str(&n.to_uppercase()),
            Binding::Text(t) => f.write_str(t),
        }
    }
}

/// Keyed surface strings with `{name}` holes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateBook {
    entries: BTreeMap<String, String>,
}

impl TemplateBook {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut entries = BTreeMap::new();
        for (i, line) in source.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or(TemplateError::Syntax(i + 1))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.to_string()).is_some() {
                return Err(TemplateError::Duplicate(k));
            }
        }
        Ok(TemplateBook { entries })
    }

    pub fn thoughts() -> Self {
        Self::parse(crate::fixtures::THOUGHTS).expect("seed thoughts are valid")
    }

    pub fn utterances() -> Self {
        Self::parse(crate::fixtures::UTTERANCES).expect("seed utterances are valid")
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn surface(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn render(&self, key: &str, bindings: &[(&str, Binding)]) -> Result<String, TemplateError> {
        let surface = self
            .entries
            .get(key)
            .ok_or_else(|| TemplateError::Missing(key.to_string()))?;
        let mut out = String::new();
        let mut rest = surface.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after.find('}').ok_or_else(|| TemplateError::Missing(key.to_string()))?;
            let name = &after[..close];
            let value = bindings
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| TemplateError::Unbound {
                    key: key.to_string(),
                    name: name.to_string(),
                })?;
            out.push_str(&value.1.to_string());
            rest = &after[close + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpatialFrame {
    Relative,
    Cardinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interlocutor {
    Human,
    Robot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AudienceModel {
    pub interlocutor: Interlocutor,
    pub frame: SpatialFrame,
    pub verbose: bool,
}

impl AudienceModel {
    /// People think in front and behind; robots in compass points.
    pub fn for_interlocutor(interlocutor: Interlocutor) -> Self {
        AudienceModel {
            interlocutor,
            frame: match interlocutor {
                Interlocutor::Human => SpatialFrame::Relative,
                Interlocutor::Robot => SpatialFrame::Cardinal,
            },
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    At,
    North,
    South,
    East,
    West,
    InFront,
    Behind,
    Left,
    Right,
}

impl Relation {
    pub fn phrase(self) -> &'static str {
        match self {
            Relation::At => "at",
            Relation::North => "north of",
            Relation::South => "south of",
            Relation::East => "east of",
            Relation::West => "west of",
            Relation::InFront => "in front of",
            Relation::Behind => "behind",
            Relation::Left => "left of",
            Relation::Right => "right of",
        }
    }
}

/// Where `object` lies relative to `landmark`.
///
/// Cardinal: the axis with the larger displacement wins, north/south on a
/// tie. Relative: the same rule on the landmark's own front and right axes,
/// front/behind on a tie. A landmark without a facing falls back to
/// cardinal terms.
pub fn spatial_relation(object: Point2, landmark: Point2, facing: Option<Facing>, frame: SpatialFrame) -> Relation {
    let dx = (object.x.0 - landmark.x.0) as i128;
    let dz = (object.z.0 - landmark.z.0) as i128;
    if dx == 0 && dz == 0 {
        return Relation::At;
    }
    match (frame, facing) {
        (SpatialFrame::Relative, Some(f)) => {
            let (fx, fz) = f.unit();
            let (fx, fz) = (fx as i128, fz as i128);
            let ahead = dx * fx + dz * fz;
            let right = dx * fz - dz * fx;
            if ahead.abs() >= right.abs() {
                if ahead > 0 {
                    Relation::InFront
                } else {
                    Relation::Behind
                }
            } else if right > 0 {
                Relation::Right
            } else {
                Relation::Left
            }
        }
        _ => {
            if dz.abs() >= dx.abs() {
                if dz > 0 {
                    Relation::North
                } else {
                    Relation::South
                }
            } else if dx > 0 {
                Relation::East
            } else {
                Relation::West
            }
        }
    }
}

/// Landmarks farther than this are not used in reports.
pub const LANDMARK_RANGE: Fixed = Fixed(15000);

/// Closest landmark within [`LANDMARK_RANGE`], ties broken by id.
pub fn nearest_landmark<'a>(
    landmarks: impl IntoIterator<Item = &'a WorldObject>,
    at: Point2,
) -> Option<&'a WorldObject> {
    let limit = (LANDMARK_RANGE.0 as i128).pow(2);
    landmarks
        .into_iter()
        .map(|o| (o.position.ground().dist2(at), o))
        .filter(|(d, _)| *d <= limit)
        .min_by(|(da, a), (db, b)| da.cmp(db).then(a.id.cmp(&b.id)))
        .map(|(_, o)| o)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkRef {
    pub phrase: String,
    pub position: Point2,
    pub facing: Option<Facing>,
}

/// What a report needs to know about a find.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    /// How to name the object: `keys`.
    pub object: String,
    pub position: Vec3,
    pub landmark: Option<LandmarkRef>,
    /// Fallback place phrase: `living room`.
    pub room: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportKind {
    /// The speaker found it.
    Own,
    /// Passing on a teammate's find; the teammate is named.
    Relay { teammate: String },
}

/// The relation phrase a report would use, if a landmark is in range.
pub fn report_relation(finding: &Finding, audience: &AudienceModel) -> Option<Relation> {
    finding
        .landmark
        .as_ref()
        .map(|l| spatial_relation(finding.position.ground(), l.position, l.facing, audience.frame))
}

pub fn generate_report(
    finding: &Finding,
    audience: &AudienceModel,
    kind: &ReportKind,
    book: &TemplateBook,
) -> Result<String, TemplateError> {
    let base = match (kind, audience.interlocutor) {
        (ReportKind::Own, Interlocutor::Robot) => "FOUND/ROBOT",
        (ReportKind::Own, Interlocutor::Human) => "FOUND/HUMAN",
        (ReportKind::Relay { .. }, Interlocutor::Human) => "RELAY/HUMAN",
        (ReportKind::Relay { .. }, Interlocutor::Robot) => "RELAY/ROBOT",
    };
    let mut bindings = vec![
        ("object", Binding::Text(finding.object.clone())),
        ("position", Binding::Text(finding.position.panel())),
        ("room", Binding::Text(finding.room.clone())),
    ];
    if let ReportKind::Relay { teammate } = kind {
        bindings.push(("teammate", Binding::Text(teammate.clone())));
    }
    let key = match (&finding.landmark, report_relation(finding, audience)) {
        (Some(l), Some(r)) => {
            bindings.push(("relation", Binding::Text(r.phrase().to_string())));
            bindings.push(("landmark", Binding::Text(l.phrase.clone())));
            base.to_string()
        }
        _ => format!("{base}/ROOM"),
    };
    book.render(&key, &bindings)
}
