//! Heterogeneous agents on the bus: kinematics, GNSS fixes, TF upkeep and
//! the follow behavior.
//!
//! Agents are driven by commanded velocities. Control reads only what the
//! display node has received over the bus; ground truth is used for
//! integration and fix generation alone.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock, RwLockReadGuard};

use hmas_core::follow::{goal_point, heading_between, FollowLaw};
use hmas_core::geo::{enu_to_geodetic, geodetic_to_enu, CorrectionLink, GeoError, LinkConfig, RoverConfig, RoverState};
use hmas_core::name::validate_namespace;
use hmas_core::tf::TfError;
use hmas_core::{
    CorrectionMsg, EnuCoord, FixQuality, FrameId, GeodeticCoord, QosProfile, Quat, RtkFix, Transform, TransformTree, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bus::{Bus, BusError, NodeHandle, Publisher, Subscription};

/// Allowed |up| for ground and human agents.
pub const TERRAIN_TOLERANCE_M: f64 = 0.05;
/// A fix older than this many fix periods is stale.
pub const STALE_FIX_PERIODS: f64 = 5.0;
pub const DRIVER_NODE: &str = "driver";
pub const DISPLAY_NAMESPACE: &str = "hmas";
pub const DISPLAY_NODE: &str = "display";

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Tf(#[from] TfError),
    #[error("agent `{0}` already exists")]
    DuplicateAgent(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{name}`: {reason}")]
    Spec { name: String, reason: String },
    #[error("start {start:?} of `{name}` is outside the world bounds")]
    OutOfBounds { name: String, start: [f64; 3] },
    #[error("time step {0} s outside (0, 1]")]
    TimeStep(f64),
    #[error("invalid follow command: {0}")]
    Command(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Aerial,
    Ground,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Gnss,
    Camera,
    Imu,
    Lidar,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub name: String,
    #[serde(default)]
    pub kind: SensorKind,
    /// Mounting offset in the agent's base frame, meters.
    #[serde(default)]
    pub offset: [f64; 3],
}

impl SensorSpec {
    pub fn gnss(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: SensorKind::Gnss,
            offset: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub category: Category,
    pub max_speed: f64,
    /// `[min, max]` up coordinate; aerial agents only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude_range: Option<[f64; 2]>,
    #[serde(default)]
    pub sensors: Vec<SensorSpec>,
}

impl AgentSpec {
    pub fn new(name: &str, category: Category, max_speed: f64) -> Self {
        Self {
            name: name.into(),
            category,
            max_speed,
            altitude_range: None,
            sensors: Vec::new(),
        }
    }

    pub fn with_sensor(mut self, s: SensorSpec) -> Self {
        self.sensors.push(s);
        self
    }

    fn validate(&self) -> Result<(), WorldError> {
        let bad = |reason: String| WorldError::Spec {
            name: self.name.clone(),
            reason,
        };
        validate_namespace(&self.name).map_err(|e| bad(e.to_string()))?;
        if !(self.max_speed.is_finite() && self.max_speed > 0.0) {
            return Err(bad(format!("max_speed must be positive, got {}", self.max_speed)));
        }
        match (self.category, self.altitude_range) {
            (Category::Aerial, Some([lo, hi])) if lo.is_finite() && hi.is_finite() && lo <= hi => {}
            (Category::Aerial, _) => return Err(bad("aerial agents need altitude_range [min, max]".into())),
            (_, Some(_)) => return Err(bad("altitude_range applies to aerial agents only".into())),
            _ => {}
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.sensors {
            validate_namespace(&s.name).map_err(|e| bad(e.to_string()))?;
            if s.name == DRIVER_NODE || !seen.insert(s.name.as_str()) {
                return Err(bad(format!("sensor name `{}` is reserved or repeated", s.name)));
            }
        }
        if self.sensors.iter().filter(|s| s.kind == SensorKind::Gnss).count() > 1 {
            return Err(bad("at most one GNSS sensor".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FollowTarget {
    Agent(String),
    Point([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowCommand {
    pub follower: String,
    pub target: FollowTarget,
    /// (forward, left) in the target's heading frame, meters.
    #[serde(default)]
    pub offset: [f64; 2],
    pub standoff: f64,
}

/// Latest received fixes of one agent, in ENU.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Estimate {
    pub last: Option<(f64, Vec3)>,
    pub prev: Option<(f64, Vec3)>,
}

impl Estimate {
    fn push(&mut self, stamp: f64, p: Vec3) {
        self.prev = self.last;
        self.last = Some((stamp, p));
    }

    /// Velocity from the last two fixes.
    pub fn velocity(&self) -> Option<Vec3> {
        let ((t0, p0), (t1, p1)) = (self.prev?, self.last?);
        (t1 > t0).then(|| (p1 - p0).scale(1.0 / (t1 - t0)))
    }

    pub fn heading(&self) -> Option<f64> {
        heading_between(self.prev?, self.last?)
    }
}

struct Gnss {
    rover: RoverState,
    publisher: Publisher,
    subscription: Subscription,
    published: u64,
}

struct Agent {
    spec: AgentSpec,
    position: Vec3,
    velocity: Vec3,
    yaw: f64,
    driver: NodeHandle,
    cmd_pub: Publisher,
    sensors: Vec<NodeHandle>,
    gnss: Option<Gnss>,
    estimate: Estimate,
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub base: GeodeticCoord,
    pub seed: u64,
    pub noiseless: bool,
    pub fix_rate_hz: f64,
    /// Horizontal radius around the base within which agents may start.
    pub bounds_m: f64,
    pub link: LinkConfig,
    pub law: FollowLaw,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            base: hmas_core::rig::default_base(),
            seed: 0,
            noiseless: false,
            fix_rate_hz: hmas_core::geo::DEFAULT_FIX_RATE_HZ,
            bounds_m: 10_000.0,
            link: LinkConfig::default(),
            law: FollowLaw::default(),
        }
    }
}

pub struct World {
    bus: Bus,
    config: WorldConfig,
    rover_config: RoverConfig,
    rng: ChaCha8Rng,
    link: CorrectionLink,
    latest_correction: Option<CorrectionMsg>,
    display: NodeHandle,
    tf: Arc<RwLock<TransformTree>>,
    agents: BTreeMap<String, Agent>,
    now: f64,
}

impl World {
    pub fn new(bus: Bus, config: WorldConfig) -> Result<Self, WorldError> {
        config.base.validate()?;
        let mut rover_config = if config.noiseless {
            RoverConfig::noiseless()
        } else {
            RoverConfig::default()
        };
        rover_config = rover_config.with_fix_rate(config.fix_rate_hz)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let link = CorrectionLink::new(config.base, config.link, rng.random());
        let display = bus.create_node(DISPLAY_NAMESPACE, DISPLAY_NODE, BTreeMap::new())?;
        let mut w = Self {
            bus,
            config,
            rover_config,
            rng,
            link,
            latest_correction: None,
            display,
            tf: Arc::new(RwLock::new(TransformTree::new())),
            agents: BTreeMap::new(),
            now: 0.0,
        };
        w.poll_link();
        Ok(w)
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn base(&self) -> &GeodeticCoord {
        &self.config.base
    }

    pub fn fix_period(&self) -> f64 {
        self.rover_config.fix_period()
    }

    /// Read access to the transform tree. Writers only hold the lock inside
    /// [`World::step`], so readers never see a half-updated tree.
    pub fn tf(&self) -> RwLockReadGuard<'_, TransformTree> {
        self.tf.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn tf_handle(&self) -> Arc<RwLock<TransformTree>> {
        Arc::clone(&self.tf)
    }

    pub fn agent_names(&self) -> impl Iterator<Item = &str> {
        self.agents.keys().map(String::as_str)
    }

    fn agent(&self, name: &str) -> Result<&Agent, WorldError> {
        self.agents.get(name).ok_or_else(|| WorldError::UnknownAgent(name.into()))
    }

    fn agent_mut(&mut self, name: &str) -> Result<&mut Agent, WorldError> {
        self.agents.get_mut(name).ok_or_else(|| WorldError::UnknownAgent(name.into()))
    }

    pub fn spec(&self, name: &str) -> Result<&AgentSpec, WorldError> {
        Ok(&self.agent(name)?.spec)
    }

    /// Simulator ground truth. Not used by any controller.
    pub fn true_position(&self, name: &str) -> Result<Vec3, WorldError> {
        Ok(self.agent(name)?.position)
    }

    pub fn true_yaw(&self, name: &str) -> Result<f64, WorldError> {
        Ok(self.agent(name)?.yaw)
    }

    pub fn velocity(&self, name: &str) -> Result<Vec3, WorldError> {
        Ok(self.agent(name)?.velocity)
    }

    /// Overrides ground truth without publishing anything.
    pub fn teleport(&mut self, name: &str, p: Vec3) -> Result<(), WorldError> {
        self.agent_mut(name)?.position = p;
        Ok(())
    }

    pub fn estimate(&self, name: &str) -> Result<Estimate, WorldError> {
        Ok(self.agent(name)?.estimate)
    }

    pub fn fixes_published(&self, name: &str) -> Result<u64, WorldError> {
        Ok(self.agent(name)?.gnss.as_ref().map_or(0, |g| g.published))
    }

    fn poll_link(&mut self) {
        for c in self.link.poll(self.now) {
            for a in self.agents.values_mut() {
                if let Some(g) = a.gnss.as_mut() {
                    g.rover.receive(&c);
                }
            }
            self.latest_correction = Some(c);
        }
    }

    pub fn spawn_agent(&mut self, spec: AgentSpec, start: EnuCoord) -> Result<(), WorldError> {
        spec.validate()?;
        if self.agents.contains_key(&spec.name) {
            return Err(WorldError::DuplicateAgent(spec.name));
        }
        let p = start.vec();
        let start_arr = [p.x, p.y, p.z];
        if !p.is_finite() || p.x.hypot(p.y) > self.config.bounds_m {
            return Err(WorldError::OutOfBounds {
                name: spec.name,
                start: start_arr,
            });
        }
        match (spec.category, spec.altitude_range) {
            (Category::Aerial, Some([lo, hi])) if !(lo..=hi).contains(&p.z) => {
                return Err(WorldError::Spec {
                    name: spec.name,
                    reason: format!("start altitude {} outside [{lo}, {hi}]", p.z),
                })
            }
            (Category::Ground | Category::Human, _) if p.z.abs() > TERRAIN_TOLERANCE_M => {
                return Err(WorldError::Spec {
                    name: spec.name,
                    reason: format!("start up {} is off the ground", p.z),
                })
            }
            _ => {}
        }

        let name = spec.name.clone();
        let driver = self.bus.create_node(&name, DRIVER_NODE, BTreeMap::new())?;
        let cmd_pub = driver.advertise("cmd_vel", QosProfile::default())?;
        let mut sensors = Vec::new();
        let mut gnss = None;
        for s in &spec.sensors {
            let node = self.bus.create_node(&name, &s.name, BTreeMap::new())?;
            if s.kind == SensorKind::Gnss {
                let publisher = node.advertise("gps/fix", QosProfile::default())?;
                let subscription = self
                    .display
                    .subscribe(&publisher.topic().to_string(), QosProfile::default())?;
                let mut rover = RoverState::new(name.clone(), self.rover_config, self.rng.random())
                    .with_quality(FixQuality::Fixed);
                if let Some(c) = &self.latest_correction {
                    rover.receive(c);
                }
                gnss = Some(Gnss {
                    rover,
                    publisher,
                    subscription,
                    published: 0,
                });
            }
            sensors.push(node);
        }
        let mut agent = Agent {
            position: if spec.category == Category::Aerial { p } else { Vec3::new(p.x, p.y, 0.0) },
            spec,
            velocity: Vec3::ZERO,
            yaw: 0.0,
            driver,
            cmd_pub,
            sensors,
            gnss,
            estimate: Estimate::default(),
        };
        // Epochs before the spawn instant are skipped; one at the instant is published.
        if let Some(g) = agent.gnss.as_mut() {
            while g.rover.next_fix_time() < self.now - 1e-9 {
                let truth = enu_to_geodetic(&EnuCoord::from_vec(agent.position), &self.config.base)?;
                g.rover.emit(&truth, agent.yaw);
            }
        }
        let now = self.now;
        let here = agent.position;
        Self::emit_fixes(&mut agent, &self.config.base, now, now, here, 0.0)?;
        self.agents.insert(name.clone(), agent);
        self.bus.advance_to(now);
        self.collect_fixes()?;
        self.update_tf(&name)?;
        Ok(())
    }

    /// Removes an agent and all of its bus registrations.
    pub fn despawn(&mut self, name: &str) -> Result<(), WorldError> {
        let a = self.agents.remove(name).ok_or_else(|| WorldError::UnknownAgent(name.into()))?;
        if let Some(g) = &a.gnss {
            g.subscription.close();
        }
        for n in &a.sensors {
            n.close();
        }
        a.driver.close();
        Ok(())
    }

    /// Sets an agent's commanded velocity, saturated at its top speed.
    /// Ground and human agents cannot climb.
    pub fn set_velocity(&mut self, name: &str, v: Vec3) -> Result<Vec3, WorldError> {
        let now = self.now;
        let a = self.agent_mut(name)?;
        let mut v = if v.is_finite() { v } else { Vec3::ZERO };
        if a.spec.category != Category::Aerial {
            v.z = 0.0;
        }
        let n = v.norm();
        if n > a.spec.max_speed {
            v = v.scale(a.spec.max_speed / n);
        }
        a.velocity = v;
        let mut payload = Vec::with_capacity(24);
        for c in [v.x, v.y, v.z] {
            payload.extend_from_slice(&c.to_le_bytes());
        }
        a.cmd_pub.publish(now, &payload)?;
        Ok(v)
    }

    fn fresh(&self, e: &Estimate) -> Option<(f64, Vec3)> {
        e.last
            .filter(|(t, _)| self.now - t <= STALE_FIX_PERIODS * self.fix_period() + 1e-9)
    }

    /// Computes and applies one follow command. The result depends only on
    /// fixes received over the bus and the follower's previous command.
    pub fn follow_step(&mut self, cmd: &FollowCommand, dt: f64) -> Result<Vec3, WorldError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(WorldError::TimeStep(dt));
        }
        if !(cmd.standoff.is_finite() && cmd.standoff > 0.0) {
            return Err(WorldError::Command(format!("standoff must be positive, got {}", cmd.standoff)));
        }
        if matches!(&cmd.target, FollowTarget::Agent(t) if *t == cmd.follower) {
            return Err(WorldError::Command(format!("`{}` cannot follow itself", cmd.follower)));
        }
        let follower = self.agent(&cmd.follower)?;
        let target = match &cmd.target {
            FollowTarget::Agent(t) => {
                let ta = self.agent(t)?;
                self.fresh(&ta.estimate).map(|(stamp, p)| {
                    let v = ta.estimate.velocity().unwrap_or(Vec3::ZERO);
                    let heading = ta.estimate.heading().unwrap_or(0.0);
                    (p + v.scale(self.now - stamp), heading)
                })
            }
            FollowTarget::Point(p) => Some((Vec3::from(*p), 0.0)),
        };
        let own = self.fresh(&follower.estimate);
        let (Some((target_pos, heading)), Some((stamp, own_pos))) = (target, own) else {
            return self.set_velocity(&cmd.follower, Vec3::ZERO);
        };
        let own_pos = own_pos + follower.velocity.scale(self.now - stamp);
        let mut goal = goal_point(target_pos, heading, cmd.offset);
        goal.z = own_pos.z;
        let v = self
            .config
            .law
            .command(own_pos, goal, target_pos, cmd.standoff, follower.spec.max_speed, dt);
        self.set_velocity(&cmd.follower, v)
    }

    fn emit_fixes(agent: &mut Agent, base: &GeodeticCoord, t0: f64, t1: f64, from: Vec3, dt: f64) -> Result<(), WorldError> {
        let Some(g) = agent.gnss.as_mut() else {
            return Ok(());
        };
        while g.rover.is_due(t1) {
            let stamp = g.rover.next_fix_time();
            let alpha = if dt > 0.0 { ((stamp - t0) / dt).clamp(0.0, 1.0) } else { 1.0 };
            let truth = enu_to_geodetic(&EnuCoord::from_vec(from.lerp(agent.position, alpha)), base)?;
            let fix = g.rover.emit(&truth, agent.yaw);
            g.publisher.publish(fix.stamp, &fix.encode())?;
            g.published += 1;
        }
        Ok(())
    }

    fn collect_fixes(&mut self) -> Result<(), WorldError> {
        let base = self.config.base;
        for a in self.agents.values_mut() {
            let Some(g) = a.gnss.as_ref() else { continue };
            while let Some(m) = g.subscription.take()? {
                let fix = RtkFix::decode(&m.payload)?;
                a.estimate.push(fix.stamp, geodetic_to_enu(&fix.position, &base).vec());
            }
        }
        Ok(())
    }

    fn update_tf(&self, name: &str) -> Result<(), WorldError> {
        let a = self.agent(name)?;
        let base_frame = FrameId::new(format!("{name}/base"))?;
        let (pos, yaw) = match (a.gnss.is_some(), a.estimate.last) {
            (true, Some((_, p))) => (p, a.estimate.heading().unwrap_or(a.yaw)),
            _ => (a.position, a.yaw),
        };
        let mut tree = self.tf.write().unwrap_or_else(|p| p.into_inner());
        tree.set_transform(Transform::new(FrameId::world(), base_frame.clone(), pos, Quat::from_yaw(yaw), self.now))?;
        for s in &a.spec.sensors {
            tree.set_transform(Transform::new(
                base_frame.clone(),
                FrameId::new(format!("{name}/{}", s.name))?,
                Vec3::from(s.offset),
                Quat::IDENTITY,
                self.now,
            ))?;
        }
        Ok(())
    }

    /// Advances the world by `dt`: integrates velocities, clamps to category
    /// constraints, emits and publishes due fixes, delivers them to the
    /// display node and refreshes TF.
    pub fn step(&mut self, dt: f64) -> Result<(), WorldError> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(WorldError::TimeStep(dt));
        }
        let t0 = self.now;
        let t1 = t0 + dt;
        let mut starts = BTreeMap::new();
        for (name, a) in self.agents.iter_mut() {
            starts.insert(name.clone(), a.position);
            a.position = a.position + a.velocity.scale(dt);
            match (a.spec.category, a.spec.altitude_range) {
                (Category::Aerial, Some([lo, hi])) => a.position.z = a.position.z.clamp(lo, hi),
                _ => a.position.z = 0.0,
            }
            if a.velocity.x.hypot(a.velocity.y) > 1e-9 {
                a.yaw = a.velocity.y.atan2(a.velocity.x);
            }
        }
        self.now = t1;
        self.poll_link();
        let base = self.config.base;
        for (name, a) in self.agents.iter_mut() {
            Self::emit_fixes(a, &base, t0, t1, starts[name], dt)?;
        }
        self.bus.advance_to(t1);
        self.collect_fixes()?;
        let names: Vec<String> = self.agents.keys().cloned().collect();
        for n in names {
            self.update_tf(&n)?;
        }
        Ok(())
    }
}
