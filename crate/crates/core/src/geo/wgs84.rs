//! WGS84 geodetic ↔ ECEF ↔ ENU conversions.

use libm::{atan2, cos, sin, sqrt};
use serde::{Deserialize, Serialize};

use super::GeoError;
use crate::tf::Vec3;

/// Semi-major axis, meters.
pub const A: f64 = 6_378_137.0;
/// Flattening.
pub const F: f64 = 1.0 / 298.257_223_563;
/// First eccentricity squared.
pub const E2: f64 = F * (2.0 - F);
/// Semi-minor axis, meters.
pub const B: f64 = A * (1.0 - F);
/// Second eccentricity squared.
pub const EP2: f64 = E2 / (1.0 - E2);

const MAX_REFINEMENTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    /// Degrees in [-90, 90].
    pub lat: f64,
    /// Degrees in (-180, 180].
    pub lon: f64,
    /// Meters above the ellipsoid.
    pub alt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefCoord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Local East-North-Up coordinates relative to a base anchor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuCoord {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl GeodeticCoord {
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self, GeoError> {
        let g = Self { lat, lon, alt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeoError::Latitude(self.lat));
        }
        if !(self.lon > -180.0 && self.lon <= 180.0) {
            return Err(GeoError::Longitude(self.lon));
        }
        if !self.alt.is_finite() {
            return Err(GeoError::NonFinite);
        }
        Ok(())
    }
}

impl EcefCoord {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn vec(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn from_vec(v: Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(self, o: EcefCoord) -> f64 {
        (self.vec() - o.vec()).norm()
    }
}

impl EnuCoord {
    pub const fn new(east: f64, north: f64, up: f64) -> Self {
        Self { east, north, up }
    }

    pub fn vec(self) -> Vec3 {
        Vec3::new(self.east, self.north, self.up)
    }

    pub fn from_vec(v: Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(self, o: EnuCoord) -> f64 {
        (self.vec() - o.vec()).norm()
    }
}

/// Prime-vertical radius of curvature at geodetic latitude `phi` (radians).
pub fn prime_vertical_radius(phi: f64) -> f64 {
    let s = sin(phi);
    A / sqrt(1.0 - E2 * s * s)
}

pub fn geodetic_to_ecef(g: &GeodeticCoord) -> EcefCoord {
    let phi = g.lat.to_radians();
    let lam = g.lon.to_radians();
    let n = prime_vertical_radius(phi);
    let (sp, cp) = (sin(phi), cos(phi));
    let (sl, cl) = (sin(lam), cos(lam));
    EcefCoord {
        x: (n + g.alt) * cp * cl,
        y: (n + g.alt) * cp * sl,
        z: (n * (1.0 - E2) + g.alt) * sp,
    }
}

/// Inverse conversion: Bowring's closed-form start refined by fixed-point
/// iterations on `tan φ = (z + e²N sin φ) / p`.
pub fn ecef_to_geodetic(p: &EcefCoord) -> Result<GeodeticCoord, GeoError> {
    let r = p.vec().norm();
    if !r.is_finite() {
        return Err(GeoError::NonFinite);
    }
    if r < 1.0 {
        return Err(GeoError::NearCenter(r));
    }
    let horiz = sqrt(p.x * p.x + p.y * p.y);
    let theta = atan2(p.z * A, horiz * B);
    let (st, ct) = (sin(theta), cos(theta));
    let mut phi = atan2(p.z + EP2 * B * st * st * st, horiz - E2 * A * ct * ct * ct);
    for _ in 0..MAX_REFINEMENTS {
        let next = atan2(p.z + E2 * prime_vertical_radius(phi) * sin(phi), horiz);
        let done = (next - phi).abs() < 1e-15;
        phi = next;
        if done {
            break;
        }
    }
    let n = prime_vertical_radius(phi);
    let (sp, cp) = (sin(phi), cos(phi));
    // Stable at every latitude, unlike horiz / cos(phi) - n.
    let alt = horiz * cp + (p.z + E2 * n * sp) * sp - n;
    let mut lon = atan2(p.y, p.x).to_degrees();
    if lon <= -180.0 {
        lon += 360.0;
    }
    Ok(GeodeticCoord {
        lat: phi.to_degrees(),
        lon,
        alt,
    })
}

/// Rows are the east, north and up unit vectors at `base`, in ECEF.
pub fn enu_basis(base: &GeodeticCoord) -> [Vec3; 3] {
    let phi = base.lat.to_radians();
    let lam = base.lon.to_radians();
    let (sp, cp) = (sin(phi), cos(phi));
    let (sl, cl) = (sin(lam), cos(lam));
    [
        Vec3::new(-sl, cl, 0.0),
        Vec3::new(-sp * cl, -sp * sl, cp),
        Vec3::new(cp * cl, cp * sl, sp),
    ]
}

pub fn ecef_to_enu(p: &EcefCoord, base: &GeodeticCoord) -> EnuCoord {
    let d = p.vec() - geodetic_to_ecef(base).vec();
    let [e, n, u] = enu_basis(base);
    EnuCoord::new(e.dot(d), n.dot(d), u.dot(d))
}

pub fn enu_to_ecef(e: &EnuCoord, base: &GeodeticCoord) -> EcefCoord {
    let [ex, nx, ux] = enu_basis(base);
    let d = ex.scale(e.east) + nx.scale(e.north) + ux.scale(e.up);
    EcefCoord::from_vec(geodetic_to_ecef(base).vec() + d)
}

pub fn geodetic_to_enu(g: &GeodeticCoord, base: &GeodeticCoord) -> EnuCoord {
    ecef_to_enu(&geodetic_to_ecef(g), base)
}

pub fn enu_to_geodetic(e: &EnuCoord, base: &GeodeticCoord) -> Result<GeodeticCoord, GeoError> {
    ecef_to_geodetic(&enu_to_ecef(e, base))
}
