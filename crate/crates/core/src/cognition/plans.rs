//! Declarative plan records.

use thiserror::Error;

use crate::ontology::{ConceptName, OntologyGraph};

/// Precondition goals this crate knows how to check.
pub const KNOWN_PRECONDITIONS: [&str; 4] = [
    "REQUEST-OBJECT-TYPE",
    "REQUEST-OBJECT-FEATURES",
    "REQUEST-LAST-SEEN-AT",
    "REQUEST-LOCATION-CONSTRAINED",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanBody {
    /// Split the map into zones and search them.
    ZoneSearch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub name: ConceptName,
    pub preconditions: Vec<ConceptName>,
    pub body: PlanBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("line {0}: expected PLAN <goal> PRECONDITIONS <goal>,... BODY <kind>")]
    Syntax(usize),
    #[error("line {line}: unknown concept {name}")]
    UnknownConcept { line: usize, name: String },
    #[error("line {line}: no checker for precondition {name}")]
    Unsupported { line: usize, name: String },
    #[error("line {line}: unknown plan body {name}")]
    Body { line: usize, name: String },
    #[error("plan {0} defined twice")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanLibrary {
    plans: Vec<Plan>,
}

impl PlanLibrary {
    pub fn seed(ontology: &OntologyGraph) -> Self {
        Self::parse(crate::fixtures::PLANS, ontology).expect("seed plan library is valid")
    }

    pub fn parse(source: &str, ontology: &OntologyGraph) -> Result<Self, PlanError> {
        let mut plans: Vec<Plan> = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = t.split_whitespace().collect();
            let [kw, name, pre_kw, pre, body_kw, body] = words[..] else {
                return Err(PlanError::Syntax(line));
            };
            if kw != "PLAN" || pre_kw != "PRECONDITIONS" || body_kw != "BODY" {
                return Err(PlanError::Syntax(line));
            }
            let known = |n: &str| {
                ConceptName::new(n)
                    .ok()
                    .filter(|c| ontology.contains(c))
                    .ok_or_else(|| PlanError::UnknownConcept {
                        line,
                        name: n.to_string(),
                    })
            };
            let name = known(name)?;
            let mut preconditions = Vec::new();
            for p in pre.split(',') {
                let c = known(p)?;
                if !KNOWN_PRECONDITIONS.contains(&p) {
                    return Err(PlanError::Unsupported {
                        line,
                        name: p.to_string(),
                    });
                }
                preconditions.push(c);
            }
            let body = match body {
                "ZONE-SEARCH" => PlanBody::ZoneSearch,
                other => {
                    return Err(PlanError::Body {
                        line,
                        name: other.to_string(),
                    })
                }
            };
            if plans.iter().any(|p| p.name == name) {
                return Err(PlanError::Duplicate(name.to_string()));
            }
            plans.push(Plan {
                name,
                preconditions,
                body,
            });
        }
        Ok(PlanLibrary { plans })
    }

    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    /// The plan for a goal: an exact match, else one the goal specializes.
    pub fn for_goal(&self, goal: &ConceptName, ontology: &OntologyGraph) -> Option<&Plan> {
        self.plans
            .iter()
            .find(|p| &p.name == goal)
            .or_else(|| self.plans.iter().find(|p| ontology.isa(goal, p.name.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::concept;

    #[test]
    fn seed_plan_lists_preconditions_in_order() {
        let g = OntologyGraph::seed();
        let lib = PlanLibrary::seed(&g);
        let plan = lib.for_goal(&concept("SEARCH-FOR-LOST-OBJECT"), &g).unwrap();
        let names: Vec<&str> = plan.preconditions.iter().map(|c| c.as_str()).collect();
        assert_eq!(names, KNOWN_PRECONDITIONS);
        assert_eq!(plan.body, PlanBody::ZoneSearch);
        assert!(lib.for_goal(&concept("GREETING"), &g).is_none());
    }

    #[test]
    fn bad_records_are_rejected() {
        let g = OntologyGraph::seed();
        let cases = [
            ("PLAN X", PlanError::Syntax(1)),
            (
                "PLAN NOPE PRECONDITIONS REQUEST-OBJECT-TYPE BODY ZONE-SEARCH",
                PlanError::UnknownConcept {
                    line: 1,
                    name: "NOPE".into(),
                },
            ),
            (
                "PLAN SEARCH-ZONE PRECONDITIONS GREETING BODY ZONE-SEARCH",
                PlanError::Unsupported {
                    line: 1,
                    name: "GREETING".into(),
                },
            ),
            (
                "PLAN SEARCH-ZONE PRECONDITIONS REQUEST-OBJECT-TYPE BODY DANCE",
                PlanError::Body {
                    line: 1,
                    name: "DANCE".into(),
                },
            ),
        ];
        for (src, err) in cases {
            assert_eq!(PlanLibrary::parse(src, &g), Err(err), "{src}");
        }
        let twice = "PLAN SEARCH-ZONE PRECONDITIONS REQUEST-OBJECT-TYPE BODY ZONE-SEARCH\n".repeat(2);
        assert_eq!(
            PlanLibrary::parse(&twice, &g),
            Err(PlanError::Duplicate("SEARCH-ZONE".into()))
        );
    }
}
