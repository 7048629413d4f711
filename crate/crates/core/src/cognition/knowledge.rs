//! What an agent knows before the run, and the checks it makes against
//! its memory while planning.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frames::{anchor_frame, EpisodicMemory, InstanceRef, SlotValue};
use crate::geom::{Fixed, Point2, Vec3};
use crate::ontology::{concept, ConceptName, OntologyGraph};
use crate::world::{RobotKind, Scenario};

use super::plans::Plan;

/// A freshly seeded memory and the anchors the agent needs by name.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededMemory {
    pub memory: EpisodicMemory,
    pub self_anchor: InstanceRef,
    pub teammate_anchor: Option<InstanceRef>,
    pub human_anchor: InstanceRef,
    /// Zone id to room anchor.
    pub zones: BTreeMap<String, InstanceRef>,
    /// Anchor to world object id, for map objects.
    pub objects: BTreeMap<InstanceRef, String>,
}

/// External key under which a message sender's anchor is bound.
pub fn endpoint_key(id: &str) -> String {
    format!("endpoint:{id}")
}

/// Self as `#LEIA.1`, the other robot as `#LEIA.2`, the human, one anchor
/// per leaf zone at its centroid, the apartment, and every known object.
pub fn seed_memory(scenario: &Scenario, self_id: &str) -> SeededMemory {
    let mut memory = EpisodicMemory::new();
    let me = scenario.robot(self_id).expect("agent is in the scenario");
    let self_anchor = memory.seed(anchor_frame("LEIA", 1).with("HAS-NAME", SlotValue::text(&me.label)));
    memory.bind_external(endpoint_key(self_id), self_anchor.clone());

    let teammate_anchor = scenario.robots.iter().find(|r| r.id != self_id).map(|r| {
        let a = memory.seed(anchor_frame("LEIA", 2).with("HAS-NAME", SlotValue::text(&r.label)));
        memory.bind_external(endpoint_key(&r.id), a.clone());
        a
    });

    let human_anchor = memory.seed(anchor_frame("HUMAN", 1).with("HAS-NAME", SlotValue::text(&scenario.human.name)));
    memory.bind_external(endpoint_key(&scenario.human.id), human_anchor.clone());

    let mut zones = BTreeMap::new();
    for z in scenario.leaf_zones() {
        let c = scenario.centroid(z);
        let frame = anchor_frame(scenario.room_concept(z).as_str(), scenario.zone_ordinal(z))
            .with("LOCATION-ABSOLUTE", Vec3::new(c.x, Fixed::ZERO, c.z).into());
        let a = memory.seed(frame);
        memory.bind_external(format!("zone:{}", z.id), a.clone());
        zones.insert(z.id.clone(), a);
    }
    memory.seed(anchor_frame("APARTMENT", 1));

    let mut objects = BTreeMap::new();
    let mut counts: BTreeMap<&ConceptName, u32> = BTreeMap::new();
    for o in scenario.objects.iter().filter(|o| o.known) {
        let n = counts.entry(&o.concept).or_insert(0);
        *n += 1;
        let mut frame = anchor_frame(o.concept.as_str(), *n);
        for (p, values) in &o.props {
            for v in values {
                frame.push(p.clone(), v.clone());
            }
        }
        frame.push(concept("LOCATION-ABSOLUTE"), o.position.into());
        if let Some(r) = o.rotation {
            frame.push(concept("ROTATION-ABSOLUTE"), r.into());
        }
        let a = memory.seed(frame);
        memory.bind_external(o.id.clone(), a.clone());
        objects.insert(a, o.id.clone());
    }

    SeededMemory {
        memory,
        self_anchor,
        teammate_anchor,
        human_anchor,
        zones,
        objects,
    }
}

fn location_of(memory: &EpisodicMemory, anchor: &InstanceRef) -> Option<Vec3> {
    memory
        .get(anchor)?
        .frame
        .first("LOCATION-ABSOLUTE")?
        .as_tuple()?
        .as_vec3()
}

/// Where the sought object was last seen: the located anchor sharing the
/// most recent episode with it.
pub fn last_seen_at(memory: &EpisodicMemory, sought: &InstanceRef) -> Option<Point2> {
    let sought = sought.as_anchor();
    memory.episodes().iter().rev().find_map(|e| {
        let mentioned: Vec<&InstanceRef> = e.frame.mentions().collect();
        if !mentioned.contains(&&sought) {
            return None;
        }
        mentioned
            .iter()
            .filter(|m| m.anchored && ***m != sought)
            .find_map(|m| location_of(memory, m))
            .map(|v| v.ground())
    })
}

/// Unsatisfied preconditions of `plan`, in the plan's order.
pub fn check_preconditions(
    plan: &Plan,
    sought: Option<&InstanceRef>,
    memory: &EpisodicMemory,
    ontology: &OntologyGraph,
) -> Vec<ConceptName> {
    let record = sought.and_then(|s| memory.get(s));
    plan.preconditions
        .iter()
        .filter(|p| {
            let met = match p.as_str() {
                "REQUEST-OBJECT-TYPE" => sought.is_some_and(|s| ontology.isa(&s.concept, "PHYSICAL-OBJECT")),
                "REQUEST-OBJECT-FEATURES" => record.is_some_and(|r| {
                    r.frame
                        .slots
                        .iter()
                        .any(|s| ontology.isa(&s.property, "FEATURE-ATTRIBUTE"))
                }),
                "REQUEST-LAST-SEEN-AT" => sought.is_some_and(|s| last_seen_at(memory, s).is_some()),
                // The apartment itself bounds the search.
                "REQUEST-LOCATION-CONSTRAINED" => memory.anchors_of(ontology, "BUILDING").next().is_some(),
                _ => false,
            };
            !met
        })
        .cloned()
        .collect()
}

/// A robot taking part in a search and where it starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Searcher {
    pub id: String,
    pub kind: RobotKind,
    pub start: Point2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Per searcher, in roster order, the zones to search in order.
    pub lists: Vec<(String, Vec<String>)>,
    /// Aerial zones when nobody can fly.
    pub unreachable: Vec<String>,
}

impl Assignment {
    pub fn zones_for(&self, id: &str) -> &[String] {
        self.lists
            .iter()
            .find(|(r, _)| r == id)
            .map_or(&[], |(_, z)| z.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("the map has no zones")]
    NoZones,
    #[error("nobody to search")]
    NoSearchers,
}

/// Splits the leaf zones among `roster`.
///
/// Aerial zones go to aerial robots first. Then, repeatedly, the searcher
/// holding the fewest zones (roster order on ties) takes its nearest
/// remaining zone by centroid. Each list is finally sorted by distance
/// from the searcher's start, except that the zone containing `last_seen`
/// goes first.
pub fn decompose_search(
    scenario: &Scenario,
    roster: &[Searcher],
    last_seen: Option<Point2>,
) -> Result<Assignment, DecomposeError> {
    let zones: Vec<_> = scenario.leaf_zones().collect();
    if zones.is_empty() {
        return Err(DecomposeError::NoZones);
    }
    if roster.is_empty() {
        return Err(DecomposeError::NoSearchers);
    }
    let centroid: BTreeMap<&str, Point2> = zones.iter().map(|z| (z.id.as_str(), scenario.centroid(z))).collect();
    let mut lists: Vec<Vec<String>> = vec![Vec::new(); roster.len()];
    let mut unreachable = Vec::new();

    fn deal<'a>(
        mut pool: Vec<&'a str>,
        roster: &[Searcher],
        centroid: &BTreeMap<&str, Point2>,
        eligible: &dyn Fn(&Searcher) -> bool,
        lists: &mut [Vec<String>],
    ) -> Vec<&'a str> {
        while !pool.is_empty() {
            let Some(who) = (0..roster.len())
                .filter(|i| eligible(&roster[*i]))
                .min_by_key(|i| (lists[*i].len(), *i))
            else {
                return pool;
            };
            let from = roster[who].start;
            let pick = (0..pool.len())
                .min_by_key(|k| (from.dist2(centroid[pool[*k]]), *k))
                .expect("pool is not empty");
            lists[who].push(pool.remove(pick).to_string());
        }
        pool
    }

    let aerial: Vec<&str> = zones.iter().filter(|z| z.aerial).map(|z| z.id.as_str()).collect();
    let ground: Vec<&str> = zones.iter().filter(|z| !z.aerial).map(|z| z.id.as_str()).collect();
    let left = deal(aerial, roster, &centroid, &|s| s.kind == RobotKind::Aerial, &mut lists);
    unreachable.extend(left.into_iter().map(str::to_string));
    let left = deal(ground, roster, &centroid, &|_| true, &mut lists);
    debug_assert!(left.is_empty());

    let seen_zone = last_seen.and_then(|p| scenario.zone_at(p)).map(|z| z.id.clone());
    for (i, list) in lists.iter_mut().enumerate() {
        let from = roster[i].start;
        list.sort_by_key(|z| (Some(z) != seen_zone.as_ref(), from.dist2(centroid[z.as_str()])));
    }
    Ok(Assignment {
        lists: roster.iter().map(|s| s.id.clone()).zip(lists).collect(),
        unreachable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognition::plans::PlanLibrary;
    use crate::world::Scenario;
    use proptest::prelude::*;

    fn seed() -> (OntologyGraph, Scenario) {
        let g = OntologyGraph::seed();
        let s = Scenario::seed_scenario(&g);
        (g, s)
    }

    fn roster(s: &Scenario) -> Vec<Searcher> {
        s.robots
            .iter()
            .map(|r| Searcher {
                id: r.id.clone(),
                kind: r.kind,
                start: r.station,
            })
            .collect()
    }

    #[test]
    fn seeded_memory_frames_validate() {
        let (g, s) = seed();
        let m = seed_memory(&s, "UGV");
        assert_eq!(m.self_anchor.to_string(), "#LEIA.1");
        assert_eq!(m.teammate_anchor.as_ref().unwrap().to_string(), "#LEIA.2");
        assert_eq!(m.zones["Z-KITCHEN"].to_string(), "#KITCHEN.1");
        assert_eq!(m.memory.external("carpet").unwrap().to_string(), "#CARPET.1");
        assert!(m.memory.external("keys").is_none());
        for (_, rec) in m.memory.anchors() {
            assert!(g.validate_frame(&rec.frame).is_empty(), "{}", rec.frame);
        }
    }

    #[test]
    fn empty_memory_fails_every_precondition() {
        let g = OntologyGraph::seed();
        let lib = PlanLibrary::seed(&g);
        let plan = &lib.plans()[0];
        assert_eq!(
            check_preconditions(plan, None, &EpisodicMemory::new(), &g),
            plan.preconditions
        );
    }

    /// Assignment as a partition plus the ordering rule, checked directly.
    fn check_assignment(s: &Scenario, roster: &[Searcher], last_seen: Option<Point2>, a: &Assignment) {
        let mut all: Vec<String> = a.lists.iter().flat_map(|(_, l)| l.clone()).collect();
        all.extend(a.unreachable.clone());
        all.sort();
        let mut expected: Vec<String> = s.leaf_zones().map(|z| z.id.clone()).collect();
        expected.sort();
        assert_eq!(all, expected, "partition");
        let seen = last_seen.and_then(|p| s.zone_at(p)).map(|z| z.id.clone());
        for (who, list) in &a.lists {
            let me = roster.iter().find(|r| &r.id == who).unwrap();
            let mut rest: &[String] = list;
            if let (Some(first), Some(seen)) = (list.first(), &seen) {
                if first == seen {
                    rest = &list[1..];
                }
            }
            assert!(seen.as_ref().is_none_or(|z| !rest.contains(z)), "last-seen zone first");
            let d: Vec<i128> = rest
                .iter()
                .map(|z| me.start.dist2(s.centroid(s.zone(z).unwrap())))
                .collect();
            assert!(d.windows(2).all(|w| w[0] <= w[1]), "{who} {list:?}");
            for z in list {
                assert!(!s.zone(z).unwrap().aerial || me.kind == RobotKind::Aerial);
            }
        }
    }

    #[test]
    fn seed_apartment_split() {
        let (_, s) = seed();
        let r = roster(&s);
        let door = Point2::units(995, 100);
        let a = decompose_search(&s, &r, Some(door)).unwrap();
        check_assignment(&s, &r, Some(door), &a);
        assert_eq!(a.zones_for("UGV"), ["Z-ENTRYWAY", "Z-HALLWAY", "Z-LIVING"]);
        assert_eq!(a.zones_for("DRONE"), ["Z-KITCHEN", "Z-BEDROOM", "Z-BATHROOM"]);
        assert!(a.unreachable.is_empty());
    }

    #[test]
    fn ground_robot_alone_cannot_reach_aerial_zones() {
        let (_, s) = seed();
        let r: Vec<Searcher> = roster(&s).into_iter().filter(|x| x.id == "UGV").collect();
        let a = decompose_search(&s, &r, None).unwrap();
        check_assignment(&s, &r, None, &a);
        assert_eq!(a.unreachable, ["Z-KITCHEN", "Z-BATHROOM"]);
        assert_eq!(decompose_search(&s, &[], None), Err(DecomposeError::NoSearchers));
    }

    proptest! {
        #[test]
        fn any_start_and_last_seen_gives_a_valid_split(
            ux in 0i64..1000, uz in 0i64..600, dx in 0i64..1000, dz in 0i64..600,
            lx in 0i64..1000, lz in 0i64..600, swap in any::<bool>(),
        ) {
            let (_, s) = seed();
            let mut r = roster(&s);
            r[0].start = Point2::units(ux, uz);
            r[1].start = Point2::units(dx, dz);
            if swap {
                r.reverse();
            }
            let seen = Some(Point2::units(lx, lz));
            let a = decompose_search(&s, &r, seen).unwrap();
            check_assignment(&s, &r, seen, &a);
        }
    }
}
