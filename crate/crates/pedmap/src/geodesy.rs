//! Spherical geodesy: great-circle distances, bearings, heading angles, and
//! destination points.
//!
//! Distances are meters and angles are degrees at every public boundary;
//! radians stay internal. The earth model is a sphere of mean radius
//! [`EARTH_RADIUS_M`]. No ellipsoidal correction: the ranges that matter here
//! are sub-kilometer, where the spherical error is far below GPS noise.

use thiserror::Error;

/// Mean earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeodesyError {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("bearing undefined for coincident points")]
    CoincidentPoints,
}

/// A validated point on the sphere, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeodesyError> {
        if !lat_deg.is_finite() || !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeodesyError::LatitudeOutOfRange(lat_deg));
        }
        if !lon_deg.is_finite() || !(-180.0..=180.0).contains(&lon_deg) {
            return Err(GeodesyError::LongitudeOutOfRange(lon_deg));
        }
        Ok(Self { lat_deg, lon_deg })
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }

    /// Total order by (lat, lon), used for canonical node ordering.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.lat_deg
            .total_cmp(&other.lat_deg)
            .then(self.lon_deg.total_cmp(&other.lon_deg))
    }
}

/// Compass bearing in degrees clockwise from true north, normalized to [0, 360).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingDeg(f64);

impl BearingDeg {
    pub fn new(degrees: f64) -> Self {
        let mut v = degrees % 360.0;
        if v < 0.0 {
            v += 360.0;
        }
        // `v += 360.0` can round back up to exactly 360.0 for tiny negatives.
        if v >= 360.0 {
            v = 0.0;
        }
        Self(v)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }
}

/// Great-circle distance in meters.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat_deg.to_radians();
    let lat2 = b.lat_deg.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Forward azimuth of the great circle from `from` toward `to`.
pub fn initial_bearing(from: GeoPoint, to: GeoPoint) -> Result<BearingDeg, GeodesyError> {
    if from == to {
        return Err(GeodesyError::CoincidentPoints);
    }
    let lat1 = from.lat_deg.to_radians();
    let lat2 = to.lat_deg.to_radians();
    let dlon = (to.lon_deg - from.lon_deg).to_radians();
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    Ok(BearingDeg::new(y.atan2(x).to_degrees()))
}

/// Smallest absolute angular difference between two bearings, in [0, 180].
pub fn heading_angle(ego_heading: BearingDeg, bearing_to_target: BearingDeg) -> f64 {
    let diff = (ego_heading.0 - bearing_to_target.0).abs();
    if diff > 180.0 {
        360.0 - diff
    } else {
        diff
    }
}

/// Point reached by traveling `distance_m` from `start` at the given initial
/// bearing. Longitude is normalized to [-180, 180).
pub fn destination_point(start: GeoPoint, bearing: BearingDeg, distance_m: f64) -> GeoPoint {
    let lat1 = start.lat_deg.to_radians();
    let lon1 = start.lon_deg.to_radians();
    let brg = bearing.0.to_radians();
    let ang = distance_m / EARTH_RADIUS_M;
    // Clamp guards asin against arguments a hair past 1 from rounding.
    let sin_lat2 = (lat1.sin() * ang.cos() + lat1.cos() * ang.sin() * brg.cos()).clamp(-1.0, 1.0);
    let lat2 = sin_lat2.asin();
    let lon2 =
        lon1 + (brg.sin() * ang.sin() * lat1.cos()).atan2(ang.cos() - lat1.sin() * lat2.sin());
    GeoPoint {
        lat_deg: lat2.to_degrees().clamp(-90.0, 90.0),
        lon_deg: normalize_lon_deg(lon2.to_degrees()),
    }
}

fn normalize_lon_deg(lon: f64) -> f64 {
    // lon here is at most a few turns out of range, so the shift stays exact.
    (lon + 540.0) % 360.0 - 180.0
}
