//! The tactical layer: robot bodies, waypoint-driven zone search and
//! perfect-perception sensing over a [`Scenario`].
//!
//! Kinematics run in fixed-point hundredths. A job alternates between
//! travelling to its cursor waypoint and dwelling there for one tick; the
//! dwell tick is the only tick that senses.

mod scenario;

pub use scenario::{
    load_scenario, point_in_polygon, Facing, HumanSpec, RobotKind, RobotRole, RobotSpec, Room, Scenario, ScenarioDoc,
    ScenarioError, ScenarioRecord, WorldObject, Zone,
};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::frames::SlotValue;
use crate::geom::{angle_diff, bearing, div_round, Fixed, Point2, Vec3};
use crate::ontology::ConceptName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobPhase {
    Travel,
    Dwell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobStatus {
    Running,
    DoneFound,
    DoneNotFound,
    Cancelled,
}

impl JobStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Running => "RUNNING",
            JobStatus::DoneFound => "DONE-FOUND",
            JobStatus::DoneNotFound => "DONE-NOT-FOUND",
            JobStatus::Cancelled => "CANCELLED",
        }
    }
}

impl fmt::Display for JobStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZoneSearchJob {
    pub robot: String,
    pub zone: String,
    pub cursor: usize,
    pub phase: JobPhase,
    pub status: JobStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("unknown robot {0}")]
    UnknownRobot(String),
    #[error("unknown zone {0}")]
    UnknownZone(String),
    #[error("robot {0} is already running a job")]
    Busy(String),
    #[error("zone {zone} is aerial-only and {robot} is a ground robot")]
    AerialOnly { robot: String, zone: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotState {
    pub id: String,
    pub kind: RobotKind,
    pub position: Vec3,
    /// Compass heading, hundredths of a degree.
    pub yaw: Fixed,
    pub job: Option<ZoneSearchJob>,
}

/// One object as a sensor sees it, ground truth included.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub object: String,
    pub concept: ConceptName,
    pub props: Vec<(ConceptName, Vec<SlotValue>)>,
    pub position: Vec3,
    pub rotation: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseReport {
    pub robot: String,
    pub position: Vec3,
    pub yaw: Fixed,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visit {
    pub tick: u64,
    pub robot: String,
    pub zone: String,
    pub waypoint: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    pub reports: Vec<SenseReport>,
    pub completed: Vec<ZoneSearchJob>,
    pub moved: Vec<String>,
}

impl StepOutcome {
    pub fn is_quiet(&self) -> bool {
        self.reports.is_empty() && self.completed.is_empty() && self.moved.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    scenario: Arc<Scenario>,
    robots: Vec<RobotState>,
    visits: Vec<Visit>,
}

impl World {
    /// Robots start parked at their stations.
    pub fn new(scenario: Scenario) -> Self {
        let robots = scenario
            .robots
            .iter()
            .map(|r| RobotState {
                id: r.id.clone(),
                kind: r.kind,
                position: r.start(),
                yaw: r.yaw,
                job: None,
            })
            .collect();
        World {
            scenario: Arc::new(scenario),
            robots,
            visits: Vec::new(),
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn robot(&self, id: &str) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.id == id)
    }

    /// Places a robot somewhere else; used by tests and demos that need a
    /// particular vantage point.
    pub fn set_pose(&mut self, id: &str, position: Vec3, yaw: Fixed) -> Result<(), WorldError> {
        let r = self.robot_mut(id)?;
        r.position = position;
        r.yaw = yaw;
        Ok(())
    }

    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    pub fn is_idle(&self) -> bool {
        self.robots.iter().all(|r| r.job.is_none())
    }

    fn robot_mut(&mut self, id: &str) -> Result<&mut RobotState, WorldError> {
        self.robots
            .iter_mut()
            .find(|r| r.id == id)
            .ok_or_else(|| WorldError::UnknownRobot(id.to_string()))
    }

    pub fn start_zone_search(&mut self, robot: &str, zone: &str) -> Result<ZoneSearchJob, WorldError> {
        let z = self
            .scenario
            .zone(zone)
            .ok_or_else(|| WorldError::UnknownZone(zone.to_string()))?;
        let aerial_only = z.aerial;
        let r = self.robot_mut(robot)?;
        if r.job.is_some() {
            return Err(WorldError::Busy(robot.to_string()));
        }
        if aerial_only && r.kind != RobotKind::Aerial {
            return Err(WorldError::AerialOnly {
                robot: robot.to_string(),
                zone: zone.to_string(),
            });
        }
        let job = ZoneSearchJob {
            robot: robot.to_string(),
            zone: zone.to_string(),
            cursor: 0,
            phase: JobPhase::Travel,
            status: JobStatus::Running,
        };
        r.job = Some(job.clone());
        Ok(job)
    }

    /// Stops a robot's job where it stands. `found` marks the stop as a
    /// successful end rather than a cancellation.
    pub fn cancel(&mut self, robot: &str, found: bool) -> Result<Option<ZoneSearchJob>, WorldError> {
        let r = self.robot_mut(robot)?;
        Ok(r.job.take().map(|mut j| {
            j.status = if found {
                JobStatus::DoneFound
            } else {
                JobStatus::Cancelled
            };
            j
        }))
    }

    /// Advances every running job by one tick. With no running jobs the
    /// world is left untouched.
    pub fn step(&mut self, tick: u64) -> StepOutcome {
        let mut out = StepOutcome::default();
        for i in 0..self.robots.len() {
            let Some(mut job) = self.robots[i].job.clone() else {
                continue;
            };
            let zone = self.scenario.zone(&job.zone).expect("job zone exists").clone();
            let speed = self.scenario.robot(&self.robots[i].id).expect("robot spec").speed;
            match job.phase {
                JobPhase::Travel => {
                    let target = zone.waypoints[job.cursor];
                    let r = &mut self.robots[i];
                    let here = r.position.ground();
                    let (next, arrived) = advance(here, target, speed);
                    if next != here {
                        r.yaw = bearing(here, target);
                        out.moved.push(r.id.clone());
                    }
                    r.position = Vec3::new(next.x, r.position.y, next.z);
                    if arrived {
                        job.phase = JobPhase::Dwell;
                    }
                    r.job = Some(job);
                }
                JobPhase::Dwell => {
                    let report = self.sense(&self.robots[i].id).expect("robot exists");
                    out.reports.push(report);
                    let r = &mut self.robots[i];
                    self.visits.push(Visit {
                        tick,
                        robot: r.id.clone(),
                        zone: job.zone.clone(),
                        waypoint: job.cursor,
                    });
                    job.cursor += 1;
                    if job.cursor == zone.waypoints.len() {
                        job.status = JobStatus::DoneNotFound;
                        r.job = None;
                        out.completed.push(job);
                    } else {
                        job.phase = JobPhase::Travel;
                        r.job = Some(job);
                    }
                }
            }
        }
        out
    }

    /// Every object within range (closed) and field of view of the robot,
    /// measured on the ground plane.
    pub fn sense(&self, robot: &str) -> Result<SenseReport, WorldError> {
        let r = self
            .robot(robot)
            .ok_or_else(|| WorldError::UnknownRobot(robot.to_string()))?;
        let spec = self.scenario.robot(robot).expect("robot spec");
        let here = r.position.ground();
        let range2 = (spec.range.0 as i128) * (spec.range.0 as i128);
        let detections = self
            .scenario
            .objects
            .iter()
            .filter(|o| {
                let there = o.position.ground();
                here.dist2(there) <= range2 && in_fov(here, r.yaw, spec.fov, there)
            })
            .map(|o| Detection {
                object: o.id.clone(),
                concept: o.concept.clone(),
                props: o.props.clone(),
                position: o.position,
                rotation: o.rotation,
            })
            .collect();
        Ok(SenseReport {
            robot: robot.to_string(),
            position: r.position,
            yaw: r.yaw,
            detections,
        })
    }

    /// One-line summary for WORLD trace events.
    pub fn summary(&self) -> String {
        self.robots
            .iter()
            .map(|r| {
                let job = match &r.job {
                    Some(j) => format!("{}#{}", j.zone, j.cursor),
                    None => "IDLE".to_string(),
                };
                format!("{}@{} yaw={} {}", r.id, r.position, r.yaw.compact(), job)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn in_fov(here: Point2, yaw: Fixed, fov: Fixed, there: Point2) -> bool {
    if fov >= Fixed::from_units(360) || here == there {
        return true;
    }
    angle_diff(bearing(here, there), yaw).0 * 2 <= fov.0
}

/// Moves at most `speed` from `here` toward `target`.
pub fn advance(here: Point2, target: Point2, speed: Fixed) -> (Point2, bool) {
    let d2 = here.dist2(target);
    let s = speed.0 as i128;
    if d2 <= s * s {
        return (target, true);
    }
    let d = crate::geom::isqrt(d2).max(1);
    let dx = (target.x.0 - here.x.0) as i128;
    let dz = (target.z.0 - here.z.0) as i128;
    let step = |delta: i128| div_round(delta * s, d) as i64;
    (
        Point2::new(Fixed(here.x.0 + step(dx)), Fixed(here.z.0 + step(dz))),
        false,
    )
}
