//! RTK base/rover model: correction link, fix quality state machine and a
//! seeded error model (antenna bias, Gaussian noise, disturbance pulses).

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{SQRT_2, TAU};
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::wgs84::{enu_to_geodetic, EnuCoord, GeodeticCoord};
use super::GeoError;
use crate::tf::{Quat, Vec3};

/// Reported fix rate of the receivers, Hz.
pub const DEFAULT_FIX_RATE_HZ: f64 = 14.0;
pub const DEFAULT_CORRECTION_TIMEOUT_S: f64 = 5.0;
pub const DEFAULT_CORRECTION_INTERVAL_S: f64 = 1.0;
/// Disturbance pulses ramp linearly to zero over this many seconds after
/// their window closes.
pub const DISTURBANCE_DECAY_S: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixQuality {
    Single,
    Float,
    Fixed,
}

impl FixQuality {
    /// One level toward `target`; never skips float.
    pub fn step_toward(self, target: FixQuality) -> FixQuality {
        use FixQuality::*;
        match (self, target) {
            (Single, Float | Fixed) => Float,
            (Float, Fixed) => Fixed,
            (Float, Single) => Single,
            (Fixed, Float | Single) => Float,
            (q, _) => q,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FixQuality::Single => "single",
            FixQuality::Float => "float",
            FixQuality::Fixed => "fixed",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(FixQuality::Single),
            1 => Some(FixQuality::Float),
            2 => Some(FixQuality::Fixed),
            _ => None,
        }
    }
}

impl fmt::Display for FixQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixQuality {
    type Err = GeoError;
    fn from_str(s: &str) -> Result<Self, GeoError> {
        match s.trim() {
            "single" => Ok(FixQuality::Single),
            "float" => Ok(FixQuality::Float),
            "fixed" => Ok(FixQuality::Fixed),
            other => Err(GeoError::Quality(other.to_string())),
        }
    }
}

/// One rover position report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtkFix {
    pub rover_id: String,
    pub position: GeodeticCoord,
    pub quality: FixQuality,
    pub stamp: f64,
}

impl RtkFix {
    /// Little-endian wire payload: stamp, lat, lon, alt as f64, quality as
    /// u8, then a u16-prefixed UTF-8 rover id.
    pub fn encode(&self) -> Vec<u8> {
        let id = self.rover_id.as_bytes();
        let mut out = Vec::with_capacity(35 + id.len());
        for v in [self.stamp, self.position.lat, self.position.lon, self.position.alt] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.quality as u8);
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<RtkFix, GeoError> {
        let f64_at = |i: usize| -> Result<f64, GeoError> {
            let b = buf.get(i..i + 8).ok_or(GeoError::Payload("truncated"))?;
            Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
        };
        let stamp = f64_at(0)?;
        let position = GeodeticCoord {
            lat: f64_at(8)?,
            lon: f64_at(16)?,
            alt: f64_at(24)?,
        };
        let quality = buf
            .get(32)
            .and_then(|&c| FixQuality::from_code(c))
            .ok_or(GeoError::Payload("bad quality code"))?;
        let len = buf.get(33..35).ok_or(GeoError::Payload("truncated"))?;
        let len = u16::from_le_bytes([len[0], len[1]]) as usize;
        let id = buf.get(35..35 + len).ok_or(GeoError::Payload("truncated"))?;
        if buf.len() != 35 + len {
            return Err(GeoError::Payload("trailing bytes"));
        }
        let rover_id = core::str::from_utf8(id)
            .map_err(|_| GeoError::Payload("rover id is not utf-8"))?
            .to_string();
        Ok(RtkFix {
            rover_id,
            position,
            quality,
            stamp,
        })
    }
}

/// Correction broadcast by the fixed base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionMsg {
    pub base_position: GeodeticCoord,
    pub epoch: u64,
    pub stamp: f64,
}

/// Per-quality error magnitudes. Horizontal sigmas are radial RMS, split
/// evenly over east and north; vertical sigmas are per-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Indexed by quality: single, float, fixed.
    pub sigma_h: [f64; 3],
    pub sigma_v: [f64; 3],
    /// Upper bound of the antenna-fixed horizontal bias magnitude.
    pub bias_max: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_h: [1.5, 0.25, 0.01],
            sigma_v: [3.0, 0.5, 0.02],
            bias_max: 0.20,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma_h: [0.0; 3],
            sigma_v: [0.0; 3],
            bias_max: 0.0,
        }
    }

    pub fn sigma_h(&self, q: FixQuality) -> f64 {
        self.sigma_h[q.index()]
    }

    pub fn sigma_v(&self, q: FixQuality) -> f64 {
        self.sigma_v[q.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoverConfig {
    fix_rate_hz: f64,
    pub correction_timeout_s: f64,
    pub noise: NoiseModel,
}

impl Default for RoverConfig {
    fn default() -> Self {
        Self {
            fix_rate_hz: DEFAULT_FIX_RATE_HZ,
            correction_timeout_s: DEFAULT_CORRECTION_TIMEOUT_S,
            noise: NoiseModel::default(),
        }
    }
}

impl RoverConfig {
    pub fn noiseless() -> Self {
        Self {
            noise: NoiseModel::noiseless(),
            ..Self::default()
        }
    }

    pub fn with_fix_rate(mut self, hz: f64) -> Result<Self, GeoError> {
        if !(hz.is_finite() && hz > 0.0) {
            return Err(GeoError::FixRate(hz));
        }
        self.fix_rate_hz = hz;
        Ok(self)
    }

    pub fn fix_rate(&self) -> f64 {
        self.fix_rate_hz
    }

    pub fn fix_period(&self) -> f64 {
        1.0 / self.fix_rate_hz
    }
}

/// Additive error pulse, expressed in the antenna frame: full `offset`
/// during `[start, end]`, then a linear ramp to zero over
/// [`DISTURBANCE_DECAY_S`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub start: f64,
    pub end: f64,
    pub offset: Vec3,
}

impl Disturbance {
    pub fn offset_at(&self, t: f64) -> Vec3 {
        if t < self.start {
            Vec3::ZERO
        } else if t <= self.end {
            self.offset
        } else if t < self.end + DISTURBANCE_DECAY_S {
            self.offset.scale(1.0 - (t - self.end) / DISTURBANCE_DECAY_S)
        } else {
            Vec3::ZERO
        }
    }
}

/// Single-owner state of one rover receiver.
#[derive(Debug, Clone)]
pub struct RoverState {
    id: String,
    config: RoverConfig,
    rng: ChaCha8Rng,
    bias: Vec3,
    quality: FixQuality,
    last_correction: Option<CorrectionMsg>,
    next_fix: u64,
    disturbances: Vec<Disturbance>,
}

impl RoverState {
    /// A cold rover (quality `single`) whose antenna bias is drawn from `seed`.
    pub fn new(id: impl Into<String>, config: RoverConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mag: f64 = rng.random::<f64>() * config.noise.bias_max;
        let dir: f64 = rng.random::<f64>() * TAU;
        let bias = Vec3::new(mag * libm::cos(dir), mag * libm::sin(dir), 0.0);
        Self {
            id: id.into(),
            config,
            rng,
            bias,
            quality: FixQuality::Single,
            last_correction: None,
            next_fix: 0,
            disturbances: Vec::new(),
        }
    }

    /// Starts in `quality`, e.g. a receiver that was already RTK-fixed when
    /// recording began.
    pub fn with_quality(mut self, quality: FixQuality) -> Self {
        self.quality = quality;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &RoverConfig {
        &self.config
    }

    pub fn fix_rate(&self) -> f64 {
        self.config.fix_rate()
    }

    pub fn quality(&self) -> FixQuality {
        self.quality
    }

    pub fn bias(&self) -> Vec3 {
        self.bias
    }

    pub fn add_disturbance(&mut self, d: Disturbance) {
        self.disturbances.push(d);
    }

    /// Accepts a correction; stale or repeated epochs are ignored.
    pub fn receive(&mut self, msg: &CorrectionMsg) -> bool {
        if self.last_correction.as_ref().is_some_and(|c| msg.epoch <= c.epoch) {
            return false;
        }
        self.last_correction = Some(msg.clone());
        true
    }

    pub fn last_correction(&self) -> Option<&CorrectionMsg> {
        self.last_correction.as_ref()
    }

    /// Stamp of the next fix epoch, `k / fix_rate`.
    pub fn next_fix_time(&self) -> f64 {
        self.next_fix as f64 / self.config.fix_rate()
    }

    pub fn is_due(&self, now: f64) -> bool {
        self.next_fix_time() <= now + 1e-9
    }

    /// Emits the fix if one is due at `now`. `yaw` orients the antenna frame
    /// (radians about up) and only matters for bias and disturbances.
    pub fn step(&mut self, now: f64, truth: &GeodeticCoord, yaw: f64) -> Option<RtkFix> {
        self.is_due(now).then(|| self.emit(truth, yaw))
    }

    fn target_quality(&self, stamp: f64) -> FixQuality {
        let Some(c) = &self.last_correction else {
            return FixQuality::Single;
        };
        let age = stamp - c.stamp;
        let timeout = self.config.correction_timeout_s;
        if age <= timeout {
            FixQuality::Fixed
        } else if age <= 2.0 * timeout {
            FixQuality::Float
        } else {
            FixQuality::Single
        }
    }

    /// Error vector (antenna frame) for the next fix at `stamp`. Always draws
    /// three normals so the noise stream does not depend on quality.
    fn draw_error(&mut self, stamp: f64) -> Vec3 {
        let n = self.config.noise;
        let q = self.quality;
        let ne: f64 = self.rng.sample(StandardNormal);
        let nn: f64 = self.rng.sample(StandardNormal);
        let nu: f64 = self.rng.sample(StandardNormal);
        let sh = n.sigma_h(q) / SQRT_2;
        let sv = n.sigma_v(q);
        let mut err = self.bias + Vec3::new(ne * sh, nn * sh, nu * sv);
        for d in &self.disturbances {
            err = err + d.offset_at(stamp);
        }
        err
    }

    /// Produces the fix for [`Self::next_fix_time`] and advances the epoch.
    pub fn emit(&mut self, truth: &GeodeticCoord, yaw: f64) -> RtkFix {
        let stamp = self.next_fix_time();
        self.next_fix += 1;
        self.quality = self.quality.step_toward(self.target_quality(stamp));
        let err = self.draw_error(stamp);
        let position = if err == Vec3::ZERO {
            *truth
        } else {
            let enu = EnuCoord::from_vec(Quat::from_yaw(yaw).rotate(err));
            enu_to_geodetic(&enu, truth).unwrap_or(*truth)
        };
        RtkFix {
            rover_id: self.id.clone(),
            position,
            quality: self.quality,
            stamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub interval_s: f64,
    pub latency_s: f64,
    pub drop_probability: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            interval_s: DEFAULT_CORRECTION_INTERVAL_S,
            latency_s: 0.0,
            drop_probability: 0.0,
        }
    }
}

/// Base station plus the radio link carrying its corrections.
#[derive(Debug, Clone)]
pub struct CorrectionLink {
    base: GeodeticCoord,
    config: LinkConfig,
    rng: ChaCha8Rng,
    next_index: u64,
    in_flight: VecDeque<(f64, CorrectionMsg)>,
}

impl CorrectionLink {
    pub fn new(base: GeodeticCoord, config: LinkConfig, seed: u64) -> Self {
        Self {
            base,
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_index: 0,
            in_flight: VecDeque::new(),
        }
    }

    pub fn base(&self) -> &GeodeticCoord {
        &self.base
    }

    /// Generates every correction due by `now` and returns those whose
    /// arrival time (`stamp + latency`) has passed, in epoch order.
    pub fn poll(&mut self, now: f64) -> Vec<CorrectionMsg> {
        loop {
            let stamp = self.next_index as f64 * self.config.interval_s;
            if stamp > now + 1e-9 {
                break;
            }
            let epoch = self.next_index;
            self.next_index += 1;
            let dropped = self.config.drop_probability > 0.0
                && self.rng.random_bool(self.config.drop_probability.min(1.0));
            if !dropped {
                let msg = CorrectionMsg {
                    base_position: self.base,
                    epoch,
                    stamp,
                };
                self.in_flight.push_back((stamp + self.config.latency_s, msg));
            }
        }
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|(arrive, _)| *arrive <= now + 1e-9) {
            out.push(self.in_flight.pop_front().expect("non-empty").1);
        }
        out
    }
}
