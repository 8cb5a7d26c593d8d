//! JSON scenario files for the agent world.

use std::path::Path;

use hmas_core::follow::goal_point;
use hmas_core::{EnuCoord, GeodeticCoord, Vec3};
use serde::{Deserialize, Serialize};

use crate::bag::Recorder;
use crate::bus::Bus;
use crate::world::{AgentSpec, FollowCommand, FollowTarget, World, WorldConfig, WorldError};

pub const DEFAULT_DT_S: f64 = 1.0 / 140.0;
/// Tracking error is averaged only after this settling time.
pub const TRACKING_TRANSIENT_S: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Bag(#[from] crate::bag::BagError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEntry {
    #[serde(flatten)]
    pub spec: AgentSpec,
    /// ENU start position about the base.
    #[serde(default)]
    pub start: [f64; 3],
}

/// Constant commanded velocity for an agent that is not following anyone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub agent: String,
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub agents: Vec<AgentEntry>,
    pub base: GeodeticCoord,
    #[serde(default)]
    pub commands: Vec<FollowCommand>,
    #[serde(default)]
    pub motions: Vec<Motion>,
    pub duration_s: f64,
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default)]
    pub noiseless: bool,
}

fn default_dt() -> f64 {
    DEFAULT_DT_S
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// A human walking east at 1 m/s with a quadruped keeping 1 m to its right.
    pub fn straight_follow(seed: u64, noiseless: bool) -> Self {
        use crate::world::{Category, SensorSpec};
        Self {
            agents: vec![
                AgentEntry {
                    spec: AgentSpec::new("operator", Category::Human, 1.5).with_sensor(SensorSpec::gnss("gps")),
                    start: [0.0, 0.0, 0.0],
                },
                AgentEntry {
                    spec: AgentSpec::new("spot", Category::Ground, 1.5).with_sensor(SensorSpec::gnss("gps")),
                    start: [0.0, -1.0, 0.0],
                },
            ],
            base: hmas_core::rig::default_base(),
            commands: vec![FollowCommand {
                follower: "spot".into(),
                target: FollowTarget::Agent("operator".into()),
                offset: [0.0, -1.0],
                standoff: 0.5,
            }],
            motions: vec![Motion {
                agent: "operator".into(),
                velocity: [1.0, 0.0, 0.0],
            }],
            duration_s: 120.0,
            seed,
            dt_s: DEFAULT_DT_S,
            noiseless,
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ScenarioError::Invalid(format!("duration_s must be positive, got {}", self.duration_s)));
        }
        if !(self.dt_s > 0.0 && self.dt_s <= 1.0) {
            return Err(ScenarioError::Invalid(format!("dt_s must lie in (0, 1], got {}", self.dt_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandOutcome {
    pub follower: String,
    pub target: String,
    /// Mean horizontal distance between follower and goal after the transient.
    pub mean_tracking_error: f64,
    pub max_tracking_error: f64,
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioOutcome {
    pub steps: u64,
    pub duration_s: f64,
    /// Per agent: fixes published and final true position.
    pub agents: Vec<(String, u64, Vec3)>,
    pub commands: Vec<CommandOutcome>,
    pub max_speed_ratio: f64,
    pub tf_dot: String,
    pub bag: Option<Vec<u8>>,
}

impl ScenarioOutcome {
    pub fn standoff_respected(&self, scenario: &Scenario) -> bool {
        self.commands
            .iter()
            .zip(&scenario.commands)
            .all(|(o, c)| o.min_separation >= c.standoff - 1e-9)
    }
}

impl std::fmt::Display for ScenarioOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "steps: {}  simulated: {:.3} s", self.steps, self.duration_s)?;
        for (name, fixes, p) in &self.agents {
            writeln!(f, "agent {name}: {fixes} fixes, final ENU ({:.3}, {:.3}, {:.3})", p.x, p.y, p.z)?;
        }
        for c in &self.commands {
            writeln!(
                f,
                "follow {} -> {}: mean tracking error {:.3} m, max {:.3} m, min separation {:.3} m",
                c.follower, c.target, c.mean_tracking_error, c.max_tracking_error, c.min_separation
            )?;
        }
        write!(f, "peak speed / max_speed: {:.3}", self.max_speed_ratio)
    }
}

struct Tracker {
    sum: f64,
    n: u64,
    max: f64,
    min_sep: f64,
}

/// Runs `scn`. With `record`, all topics are captured into a bag.
pub fn run(scn: &Scenario, record: Option<&[String]>) -> Result<ScenarioOutcome, ScenarioError> {
    scn.validate()?;
    let bus = Bus::new();
    let recorder = record.map(|filters| Recorder::new(&bus, filters)).transpose()?;
    let mut recorder = recorder;
    let mut world = World::new(
        bus,
        WorldConfig {
            base: scn.base,
            seed: scn.seed,
            noiseless: scn.noiseless,
            ..WorldConfig::default()
        },
    )?;
    for a in &scn.agents {
        world.spawn_agent(a.spec.clone(), EnuCoord::new(a.start[0], a.start[1], a.start[2]))?;
    }
    for m in &scn.motions {
        world.set_velocity(&m.agent, Vec3::from(m.velocity))?;
    }

    let steps = (scn.duration_s / scn.dt_s).round() as u64;
    let mut trackers: Vec<Tracker> = scn
        .commands
        .iter()
        .map(|_| Tracker {
            sum: 0.0,
            n: 0,
            max: 0.0,
            min_sep: f64::INFINITY,
        })
        .collect();
    let mut max_speed_ratio: f64 = 0.0;
    for _ in 0..steps {
        for c in &scn.commands {
            world.follow_step(c, scn.dt_s)?;
        }
        for name in world.agent_names().map(String::from).collect::<Vec<_>>() {
            let ratio = world.velocity(&name)?.norm() / world.spec(&name)?.max_speed;
            max_speed_ratio = max_speed_ratio.max(ratio);
        }
        world.step(scn.dt_s)?;
        if let Some(r) = recorder.as_mut() {
            r.poll()?;
        }
        for (c, tr) in scn.commands.iter().zip(trackers.iter_mut()) {
            let follower = world.true_position(&c.follower)?;
            let (target, yaw) = match &c.target {
                FollowTarget::Agent(t) => (world.true_position(t)?, world.true_yaw(t)?),
                FollowTarget::Point(p) => (Vec3::from(*p), 0.0),
            };
            tr.min_sep = tr.min_sep.min((follower - target).norm());
            if world.now() > TRACKING_TRANSIENT_S + 1e-9 {
                let goal = goal_point(target, yaw, c.offset);
                let err = (follower.x - goal.x).hypot(follower.y - goal.y);
                tr.sum += err;
                tr.n += 1;
                tr.max = tr.max.max(err);
            }
        }
    }

    let mut agents = Vec::new();
    for name in world.agent_names() {
        agents.push((name.to_string(), world.fixes_published(name)?, world.true_position(name)?));
    }
    let commands = scn
        .commands
        .iter()
        .zip(trackers)
        .map(|(c, t)| CommandOutcome {
            follower: c.follower.clone(),
            target: match &c.target {
                FollowTarget::Agent(a) => a.clone(),
                FollowTarget::Point(p) => format!("({}, {}, {})", p[0], p[1], p[2]),
            },
            mean_tracking_error: if t.n > 0 { t.sum / t.n as f64 } else { f64::NAN },
            max_tracking_error: t.max,
            min_separation: t.min_sep,
        })
        .collect();
    let tf_dot = world.tf().to_dot();
    Ok(ScenarioOutcome {
        steps,
        duration_s: world.now(),
        agents,
        commands,
        max_speed_ratio,
        tf_dot,
        bag: recorder.map(Recorder::into_bytes).transpose()?,
    })
}
