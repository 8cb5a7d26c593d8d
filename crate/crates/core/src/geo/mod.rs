//! Geolocation: WGS84 conversions anchored at the RTK base and the
//! simulated base/rover correction model.

mod rtk;
mod wgs84;

pub use rtk::{
    CorrectionLink, CorrectionMsg, Disturbance, FixQuality, LinkConfig, NoiseModel, RoverConfig,
    RoverState, RtkFix, DEFAULT_CORRECTION_INTERVAL_S, DEFAULT_CORRECTION_TIMEOUT_S,
    DEFAULT_FIX_RATE_HZ, DISTURBANCE_DECAY_S,
};
pub use wgs84::{
    ecef_to_enu, ecef_to_geodetic, enu_basis, enu_to_ecef, enu_to_geodetic, geodetic_to_ecef,
    geodetic_to_enu, prime_vertical_radius, EcefCoord, EnuCoord, GeodeticCoord, A, B, E2, F,
};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside (-180, 180]")]
    Longitude(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("point {0} m from the Earth's center has no defined geodetic position")]
    NearCenter(f64),
    #[error("fix rate must be a positive frequency, got {0} Hz")]
    FixRate(f64),
    #[error("unknown fix quality `{0}`")]
    Quality(String),
    #[error("malformed fix payload: {0}")]
    Payload(&'static str),
}
