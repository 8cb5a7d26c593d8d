//! Four-rover board rig and the experiment scripts driven over it.
//!
//! The board is a rigid square with one rover antenna per corner, listed
//! clockwise from the top left. Its pose over time is a keyframed trajectory
//! in the base-anchored ENU frame.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;
use core::str::FromStr;

use libm::sqrt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geo::{
    enu_to_geodetic, CorrectionLink, Disturbance, EnuCoord, FixQuality, GeodeticCoord, LinkConfig,
    NoiseModel, RoverConfig, RoverState, RtkFix,
};
use crate::tf::{Quat, Vec3};

pub const DEFAULT_SIDE_M: f64 = 0.90;
pub const CORNER_IDS: [&str; 4] = ["top_left", "top_right", "bottom_right", "bottom_left"];

/// Grass-field base used by the default experiments.
pub fn default_base() -> GeodeticCoord {
    GeodeticCoord {
        lat: 48.70,
        lon: 6.15,
        alt: 220.0,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RigError {
    #[error("duration must be positive, got {0}")]
    Duration(f64),
    #[error("side length must be positive, got {0}")]
    Side(f64),
    #[error("unknown rover `{0}`")]
    UnknownRover(String),
    #[error("disturbance window [{start}, {end}] is not inside [0, {duration}]")]
    Window { start: f64, end: f64, duration: f64 },
    #[error("no corner offset yields side errors of {0} m and {1} m")]
    Unreachable(f64, f64),
    #[error("trajectory keyframes must be non-empty with increasing times")]
    Trajectory,
    #[error("unknown experiment kind `{0}`")]
    Kind(String),
    #[error("biased rover count {0} exceeds the four corners")]
    Biased(usize),
}

/// Board position (ENU center) and heading (yaw about up, radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardPose {
    pub center: Vec3,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t: f64,
    pub center: Vec3,
    pub yaw: f64,
}

/// Piecewise-linear board motion. Holds the first pose before the first
/// keyframe and the last pose after the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub keyframes: Vec<Keyframe>,
}

impl Trajectory {
    pub fn stationary() -> Self {
        Self {
            keyframes: vec![Keyframe {
                t: 0.0,
                center: Vec3::ZERO,
                yaw: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), RigError> {
        if self.keyframes.is_empty() || self.keyframes.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(RigError::Trajectory);
        }
        Ok(())
    }

    pub fn pose_at(&self, t: f64) -> BoardPose {
        let k = &self.keyframes;
        let hi = k.partition_point(|f| f.t <= t);
        if hi == 0 {
            return BoardPose {
                center: k[0].center,
                yaw: k[0].yaw,
            };
        }
        let a = k[hi - 1];
        if hi == k.len() || a.t == t {
            return BoardPose {
                center: a.center,
                yaw: a.yaw,
            };
        }
        let b = k[hi];
        let alpha = (t - a.t) / (b.t - a.t);
        BoardPose {
            center: a.center.lerp(b.center, alpha),
            yaw: a.yaw + (b.yaw - a.yaw) * alpha,
        }
    }
}

/// Rigid square of rover antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardRig {
    pub side: f64,
    /// Clockwise from the top left.
    pub rover_ids: [String; 4],
}

impl Default for BoardRig {
    fn default() -> Self {
        Self {
            side: DEFAULT_SIDE_M,
            rover_ids: CORNER_IDS.map(|s| s.to_string()),
        }
    }
}

impl BoardRig {
    /// Corner offsets in the board frame (x right, y toward the top edge).
    pub fn corner_offsets(&self) -> [Vec3; 4] {
        let h = 0.5 * self.side;
        [
            Vec3::new(-h, h, 0.0),
            Vec3::new(h, h, 0.0),
            Vec3::new(h, -h, 0.0),
            Vec3::new(-h, -h, 0.0),
        ]
    }

    pub fn corners(&self, pose: &BoardPose) -> [Vec3; 4] {
        let q = Quat::from_yaw(pose.yaw);
        self.corner_offsets().map(|c| q.rotate(c) + pose.center)
    }

    pub fn corner_index(&self, rover: &str) -> Option<usize> {
        self.rover_ids.iter().position(|r| r == rover)
    }

    /// Board-frame offset for corner `idx` that lengthens its incoming side
    /// (from the previous corner, clockwise) by `incoming` and its outgoing
    /// side by `outgoing`. Picks the solution on the outer side of the corner.
    pub fn corner_offset_for(&self, idx: usize, incoming: f64, outgoing: f64) -> Result<Vec3, RigError> {
        let c = self.corner_offsets();
        let prev = c[(idx + 3) % 4];
        let next = c[(idx + 1) % 4];
        let (r1, r2) = (self.side + incoming, self.side + outgoing);
        let d = (next - prev).norm();
        if r1 < 0.0 || r2 < 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
            return Err(RigError::Unreachable(incoming, outgoing));
        }
        // Circle-circle intersection around prev (radius r1) and next (r2).
        let along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
        let h = sqrt((r1 * r1 - along * along).max(0.0));
        let ux = (next - prev).scale(1.0 / d);
        let perp = Vec3::new(-ux.y, ux.x, 0.0);
        let base = prev + ux.scale(along);
        let (p1, p2) = (base + perp.scale(h), base - perp.scale(h));
        let pick = if (p1 - c[idx]).norm() <= (p2 - c[idx]).norm() { p1 } else { p2 };
        Ok(pick - c[idx])
    }
}

/// Scripted error pulse on one rover. `magnitude` is the target error on the
/// rover's incoming side, `magnitude_next` (default: same) on its outgoing side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceWindow {
    pub rover: String,
    pub start: f64,
    pub end: f64,
    pub magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude_next: Option<f64>,
}

impl DisturbanceWindow {
    pub fn new(rover: &str, start: f64, end: f64, magnitude: f64) -> Self {
        Self {
            rover: rover.to_string(),
            start,
            end,
            magnitude,
            magnitude_next: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Static,
    StaticDisturbed,
    Rotation,
    TranslationSquare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Static,
        ExperimentKind::StaticDisturbed,
        ExperimentKind::Rotation,
        ExperimentKind::TranslationSquare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Static => "static",
            ExperimentKind::StaticDisturbed => "disturbed",
            ExperimentKind::Rotation => "rotation",
            ExperimentKind::TranslationSquare => "square",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = RigError;
    fn from_str(s: &str) -> Result<Self, RigError> {
        match s {
            "static" => Ok(ExperimentKind::Static),
            "disturbed" | "static_disturbed" => Ok(ExperimentKind::StaticDisturbed),
            "rotation" => Ok(ExperimentKind::Rotation),
            "square" | "translation_square" => Ok(ExperimentKind::TranslationSquare),
            other => Err(RigError::Kind(other.to_string())),
        }
    }
}

/// Leg geometry of the walking experiment: a straight first leg, a hold,
/// then three legs that close the loop and run past the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareWalk {
    pub first_leg_m: f64,
    pub first_leg_s: f64,
    pub hold_s: f64,
    /// Total length of the three closing legs.
    pub closing_legs_m: f64,
    pub overshoot_m: f64,
    pub walk_speed: f64,
    /// Standing still after the last leg.
    pub tail_s: f64,
}

impl Default for SquareWalk {
    fn default() -> Self {
        Self {
            first_leg_m: 30.0,
            first_leg_s: 45.0,
            hold_s: 10.0,
            closing_legs_m: 100.0,
            overshoot_m: 1.0,
            walk_speed: 1.0,
            tail_s: 5.0,
        }
    }
}

impl SquareWalk {
    /// Keyframes: east `first_leg_m`, hold, north, west back over the start
    /// line, then south past the start by `overshoot_m`.
    pub fn trajectory(&self) -> Trajectory {
        let north = 0.5 * (self.closing_legs_m - self.first_leg_m - self.overshoot_m);
        let legs = [
            Vec3::new(0.0, north, 0.0),
            Vec3::new(-self.first_leg_m, 0.0, 0.0),
            Vec3::new(0.0, -(north + self.overshoot_m), 0.0),
        ];
        let mut kf = vec![
            Keyframe { t: 0.0, center: Vec3::ZERO, yaw: 0.0 },
            Keyframe { t: self.first_leg_s, center: Vec3::new(self.first_leg_m, 0.0, 0.0), yaw: 0.0 },
        ];
        let mut t = self.first_leg_s + self.hold_s;
        let mut p = Vec3::new(self.first_leg_m, 0.0, 0.0);
        kf.push(Keyframe { t, center: p, yaw: 0.0 });
        for leg in legs {
            t += leg.norm() / self.walk_speed;
            p = p + leg;
            kf.push(Keyframe { t, center: p, yaw: 0.0 });
        }
        Trajectory { keyframes: kf }
    }

    pub fn path_length(&self) -> f64 {
        self.first_leg_m + self.closing_legs_m
    }

    pub fn duration(&self) -> f64 {
        let traj = self.trajectory();
        traj.keyframes.last().map_or(0.0, |k| k.t) + self.tail_s
    }
}

/// Complete, seedable description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub duration: f64,
    pub seed: u64,
    pub rig: BoardRig,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub windows: Vec<DisturbanceWindow>,
    pub base: GeodeticCoord,
    /// Zero noise, zero bias and no disturbance pulses.
    #[serde(default)]
    pub noiseless: bool,
    /// How many corners carry an antenna bias; the corners are drawn from the seed.
    pub biased_rovers: usize,
    pub noise: NoiseModel,
    pub link: LinkConfig,
    pub fix_rate_hz: f64,
}

impl ExperimentSpec {
    /// The default script for `kind`.
    pub fn preset(kind: ExperimentKind, seed: u64) -> Self {
        let mut spec = Self {
            kind,
            duration: 300.0,
            seed,
            rig: BoardRig::default(),
            trajectory: Trajectory::stationary(),
            windows: Vec::new(),
            base: default_base(),
            noiseless: false,
            biased_rovers: 1,
            noise: NoiseModel::default(),
            link: LinkConfig::default(),
            fix_rate_hz: crate::geo::DEFAULT_FIX_RATE_HZ,
        };
        match kind {
            ExperimentKind::Static => {}
            ExperimentKind::StaticDisturbed => {
                // Twists lift the top right corner; a hand passes over the top left antenna.
                for t in [140.0, 160.0, 230.0] {
                    spec.windows.push(DisturbanceWindow::new("top_right", t, t + 2.0, 0.10));
                }
                spec.windows.push(DisturbanceWindow::new("top_left", 170.0, 220.0, 0.05));
                spec.windows.push(DisturbanceWindow::new("top_left", 235.0, 300.0, 0.05));
            }
            ExperimentKind::Rotation => {
                spec.duration = 60.0;
                let up = Vec3::new(0.0, 0.0, 1.0);
                let kf = |t: f64, center: Vec3, yaw: f64| Keyframe { t, center, yaw };
                spec.trajectory = Trajectory {
                    keyframes: vec![
                        kf(0.0, Vec3::ZERO, 0.0),
                        kf(20.0, up, 0.0),
                        kf(33.0, up, -TAU),
                        kf(43.0, up, -TAU),
                        kf(50.0, up, 0.0),
                        kf(51.0, Vec3::ZERO, 0.0),
                    ],
                };
                spec.windows.push(DisturbanceWindow {
                    magnitude_next: Some(1.5),
                    ..DisturbanceWindow::new("top_right", 51.0, 54.0, 1.4)
                });
            }
            ExperimentKind::TranslationSquare => {
                let walk = SquareWalk::default();
                spec.duration = walk.duration();
                spec.trajectory = walk.trajectory();
            }
        }
        spec
    }

    pub fn noiseless(mut self) -> Self {
        self.noiseless = true;
        self
    }

    pub fn validate(&self) -> Result<(), RigError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(RigError::Duration(self.duration));
        }
        if !(self.rig.side.is_finite() && self.rig.side > 0.0) {
            return Err(RigError::Side(self.rig.side));
        }
        if self.biased_rovers > 4 {
            return Err(RigError::Biased(self.biased_rovers));
        }
        self.trajectory.validate()?;
        for w in &self.windows {
            if self.rig.corner_index(&w.rover).is_none() {
                return Err(RigError::UnknownRover(w.rover.clone()));
            }
            if !(0.0 <= w.start && w.start <= w.end && w.end <= self.duration) {
                return Err(RigError::Window {
                    start: w.start,
                    end: w.end,
                    duration: self.duration,
                });
            }
        }
        Ok(())
    }

    /// Declared windows as `(start, end)` pairs, for analysis exclusion.
    pub fn window_spans(&self) -> Vec<(f64, f64)> {
        if self.noiseless {
            return Vec::new();
        }
        self.windows.iter().map(|w| (w.start, w.end)).collect()
    }

    fn rover_config(&self, biased: bool) -> Result<RoverConfig, RigError> {
        let mut noise = if self.noiseless { NoiseModel::noiseless() } else { self.noise };
        if !biased {
            noise.bias_max = 0.0;
        }
        let mut cfg = RoverConfig::default();
        cfg.noise = noise;
        cfg.with_fix_rate(self.fix_rate_hz)
        .map_err(|_| RigError::Duration(self.fix_rate_hz))
    }

    /// Runs the script and returns every fix in emission order: by epoch,
    /// then by corner.
    pub fn simulate(&self) -> Result<Vec<RtkFix>, RigError> {
        self.validate()?;
        let mut master = ChaCha8Rng::seed_from_u64(self.seed);
        let link_seed: u64 = master.random();
        let mut order = [0usize, 1, 2, 3];
        for i in (1..4).rev() {
            let j = master.random_range(0..=i);
            order.swap(i, j);
        }
        let biased = &order[..self.biased_rovers];

        let mut rovers = Vec::with_capacity(4);
        for (i, id) in self.rig.rover_ids.iter().enumerate() {
            let cfg = self.rover_config(biased.contains(&i))?;
            let seed: u64 = master.random();
            rovers.push(RoverState::new(id.clone(), cfg, seed).with_quality(FixQuality::Fixed));
        }
        if !self.noiseless {
            for w in &self.windows {
                let idx = self.rig.corner_index(&w.rover).expect("validated");
                let offset = self
                    .rig
                    .corner_offset_for(idx, w.magnitude, w.magnitude_next.unwrap_or(w.magnitude))?;
                rovers[idx].add_disturbance(Disturbance {
                    start: w.start,
                    end: w.end,
                    offset,
                });
            }
        }

        let mut link = CorrectionLink::new(self.base, self.link, link_seed);
        let epochs = (self.duration * self.fix_rate_hz - 1e-9).ceil() as u64;
        let mut out = Vec::with_capacity(4 * epochs as usize);
        for k in 0..epochs {
            let t = k as f64 / self.fix_rate_hz;
            let corrections = link.poll(t);
            let pose = self.trajectory.pose_at(t);
            let corners = self.rig.corners(&pose);
            for (rover, corner) in rovers.iter_mut().zip(corners) {
                for c in &corrections {
                    rover.receive(c);
                }
                let truth = enu_to_geodetic(&EnuCoord::from_vec(corner), &self.base)
                    .expect("board stays near the base");
                out.push(rover.emit(&truth, pose.yaw));
            }
        }
        Ok(out)
    }
}
