//! Deterministic synthetic scenarios for end-to-end testing.
//!
//! Each scenario drives a fixed 20-second route at constant speed and seeds
//! pedestrians at chosen seconds along it. Training drives repeat the route
//! and log camera detections at those seconds; the held-out test drive logs
//! no detections at all, so any advisory it produces comes purely from the
//! map built off the training drives. Ground truth is derived from the ideal
//! (noise-free) trajectory: the truth window around a pedestrian covers the
//! fixes that are within stopping distance of, and heading toward, the
//! seeded location, using the plain stopping distance with no safety offset.
//!
//! GPS noise, when enabled, perturbs every logged fix by an isotropic
//! Gaussian of the given standard deviation per axis. The same seed always
//! yields the same drives; raising the noise level only scales the same
//! underlying draws, so the degradation across levels is comparable
//! point-for-point.

use crate::advisory::{stopping_distance, AdvisoryParams};
use crate::drive_log::{DetectionFrame, DriveLog, GpsFix};
use crate::evaluation::{GroundTruth, GroundTruthWindow};
use crate::geodesy::{
    destination_point, haversine_distance, heading_angle, initial_bearing, BearingDeg, GeoPoint,
    EARTH_RADIUS_M,
};
use crate::hotspot_map::median_point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
}

/// The three stock road situations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Straight street, pedestrian crossing mid-block.
    StraightPass,
    /// Right-angle turn; the pedestrian stands just past the turn exit,
    /// invisible until the vehicle is around the corner.
    BlindTurn,
    /// Straight street with two crossing points a few seconds apart, as
    /// behind parked vehicles.
    Occlusion,
}

impl ScenarioKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ScenarioKind::StraightPass => "straight-pass",
            ScenarioKind::BlindTurn => "blind-turn",
            ScenarioKind::Occlusion => "occlusion",
        }
    }

    pub fn all() -> [ScenarioKind; 3] {
        [
            ScenarioKind::StraightPass,
            ScenarioKind::BlindTurn,
            ScenarioKind::Occlusion,
        ]
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straight-pass" => Ok(ScenarioKind::StraightPass),
            "blind-turn" => Ok(ScenarioKind::BlindTurn),
            "occlusion" => Ok(ScenarioKind::Occlusion),
            other => Err(format!(
                "unknown scenario {other:?}; expected straight-pass, blind-turn, or occlusion"
            )),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

const DURATION_S: u64 = 20;
const TURN_RADIUS_M: f64 = 8.0;
const LEG1_M: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub origin: GeoPoint,
    pub speed_kmh: f64,
    pub gps_hz: u32,
    /// Whole seconds of the drive at which a pedestrian is present.
    pub ped_seconds: Vec<u64>,
    /// Per-axis standard deviation of GPS noise in meters; 0 disables it.
    pub noise_m: f64,
    pub train_drives: usize,
}

impl ScenarioSpec {
    pub fn with_defaults(kind: ScenarioKind, seed: u64) -> Self {
        let ped_seconds = match kind {
            ScenarioKind::StraightPass => vec![8],
            ScenarioKind::BlindTurn => vec![9],
            ScenarioKind::Occlusion => vec![8, 11],
        };
        Self {
            kind,
            seed,
            origin: GeoPoint::new(32.0, -117.0).expect("default origin is valid"),
            speed_kmh: 30.0,
            gps_hz: 10,
            ped_seconds,
            noise_m: 0.0,
            train_drives: 3,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::InvalidSpec(msg));
        if !(self.speed_kmh.is_finite() && self.speed_kmh > 0.0) {
            return bad(format!("speed must be positive, got {}", self.speed_kmh));
        }
        if self.gps_hz == 0 {
            return bad("gps rate must be at least 1 Hz".into());
        }
        if !(self.noise_m.is_finite() && self.noise_m >= 0.0) {
            return bad(format!("noise must be ≥ 0, got {}", self.noise_m));
        }
        if self.train_drives == 0 {
            return bad("need at least one training drive".into());
        }
        if self.ped_seconds.is_empty() {
            return bad("need at least one pedestrian second".into());
        }
        if self.ped_seconds.iter().any(|&s| s >= DURATION_S) {
            return bad(format!(
                "pedestrian seconds must fall inside the {DURATION_S}-second drive"
            ));
        }
        Ok(())
    }
}

pub struct GeneratedScenario {
    pub train_logs: Vec<DriveLog>,
    pub test_log: DriveLog,
    pub ground_truth: GroundTruth,
}

/// One fix of the ideal trajectory: where the vehicle is and the bearing it
/// moved on to get there.
struct IdealFix {
    t: f64,
    pos: GeoPoint,
    bearing: BearingDeg,
}

/// Walk the route at constant speed. Straight scenarios head due east the
/// whole way; the blind turn runs east, bends right through a quarter arc,
/// and continues south.
fn ideal_route(spec: &ScenarioSpec) -> Vec<IdealFix> {
    let dt = 1.0 / spec.gps_hz as f64;
    let step_m = spec.speed_kmh / 3.6 * dt;
    let n = (DURATION_S * spec.gps_hz as u64) as usize;
    let mut fixes = Vec::with_capacity(n + 1);
    let mut pos = spec.origin;
    let mut bearing_deg = 90.0;
    let mut cum_m = 0.0;
    let mut turned_deg = 0.0;
    fixes.push(IdealFix {
        t: 0.0,
        pos,
        bearing: BearingDeg::new(bearing_deg),
    });
    for i in 1..=n {
        if spec.kind == ScenarioKind::BlindTurn && cum_m >= LEG1_M && turned_deg < 90.0 {
            let d = (step_m / TURN_RADIUS_M).to_degrees().min(90.0 - turned_deg);
            turned_deg += d;
            bearing_deg += d;
        }
        pos = destination_point(pos, BearingDeg::new(bearing_deg), step_m);
        cum_m += step_m;
        fixes.push(IdealFix {
            t: i as f64 * dt,
            pos,
            bearing: BearingDeg::new(bearing_deg),
        });
    }
    fixes
}

/// Where each seeded pedestrian stands: the median of the ideal fixes inside
/// that second, i.e. the spot at which the mapping pipeline would place the
/// crossing if it observed it perfectly.
fn ped_locations(spec: &ScenarioSpec, route: &[IdealFix]) -> Vec<GeoPoint> {
    spec.ped_seconds
        .iter()
        .map(|&k| {
            let in_second: Vec<GeoPoint> = route
                .iter()
                .filter(|f| f.t >= k as f64 && f.t < (k + 1) as f64)
                .map(|f| f.pos)
                .collect();
            median_point(&in_second)
        })
        .collect()
}

/// Truth windows: maximal runs of ideal fixes that are strictly within
/// stopping distance of some pedestrian and heading toward it (or standing
/// on it). Stopping distance uses the plain formula with no safety offset,
/// so the windows are tighter than the advisory zone.
fn truth_windows(
    spec: &ScenarioSpec,
    route: &[IdealFix],
    peds: &[GeoPoint],
) -> Vec<GroundTruthWindow> {
    let gt_params = AdvisoryParams {
        offset: 1.0,
        ..AdvisoryParams::default()
    };
    let s_m = stopping_distance(spec.speed_kmh, &gt_params).expect("default friction is positive");
    let dt = 1.0 / spec.gps_hz as f64;
    let qualifies = |f: &IdealFix| {
        peds.iter().any(|&p| {
            if haversine_distance(f.pos, p) >= s_m {
                return false;
            }
            match initial_bearing(f.pos, p) {
                Ok(to_ped) => heading_angle(f.bearing, to_ped) < 90.0,
                Err(_) => true,
            }
        })
    };
    let mut windows = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for f in route {
        match (&mut run, qualifies(f)) {
            (None, true) => run = Some((f.t, f.t)),
            (Some((_, end)), true) => *end = f.t,
            (Some(_), false) => {
                let (t_start, t_end) = run.take().unwrap();
                windows.push(GroundTruthWindow {
                    t_start,
                    t_end: t_end + dt,
                    label: spec.kind.slug().to_string(),
                });
            }
            (None, false) => {}
        }
    }
    if let Some((t_start, t_end)) = run {
        windows.push(GroundTruthWindow {
            t_start,
            t_end: t_end + dt,
            label: spec.kind.slug().to_string(),
        });
    }
    windows
}

/// Displace a point by independent Gaussian offsets (meters) north and east.
fn jitter(pos: GeoPoint, rng: &mut ChaCha8Rng, noise_m: f64) -> GeoPoint {
    let dn: f64 = rng.sample::<f64, _>(StandardNormal) * noise_m;
    let de: f64 = rng.sample::<f64, _>(StandardNormal) * noise_m;
    let dlat = (dn / EARTH_RADIUS_M).to_degrees();
    let dlon = (de / (EARTH_RADIUS_M * pos.lat_deg().to_radians().cos())).to_degrees();
    GeoPoint::new(pos.lat_deg() + dlat, pos.lon_deg() + dlon)
        .expect("jitter keeps coordinates in range")
}

fn render_log(
    spec: &ScenarioSpec,
    route: &[IdealFix],
    clip_id: &str,
    with_detections: bool,
    rng: &mut ChaCha8Rng,
) -> DriveLog {
    let fixes: Vec<GpsFix> = route
        .iter()
        .map(|f| GpsFix {
            t: f.t,
            pos: if spec.noise_m > 0.0 {
                jitter(f.pos, rng, spec.noise_m)
            } else {
                f.pos
            },
            speed_kmh: Some(spec.speed_kmh),
        })
        .collect();
    let detections: Vec<DetectionFrame> = if with_detections {
        route
            .iter()
            .filter(|f| {
                spec.ped_seconds
                    .iter()
                    .any(|&k| f.t >= k as f64 && f.t < (k + 1) as f64)
            })
            .map(|f| DetectionFrame {
                t: f.t,
                ped_count: 1,
            })
            .collect()
    } else {
        vec![]
    };
    DriveLog::new(clip_id, fixes, detections).expect("generated logs are valid")
}

/// Generate the training drives, the detection-free test drive, and the
/// ground truth for the test drive.
pub fn generate(spec: &ScenarioSpec) -> Result<GeneratedScenario, ScenarioError> {
    spec.validate()?;
    let route = ideal_route(spec);
    let peds = ped_locations(spec, &route);
    let windows = truth_windows(spec, &route, &peds);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let slug = spec.kind.slug();
    let train_logs: Vec<DriveLog> = (1..=spec.train_drives)
        .map(|i| {
            let clip_id = format!("{slug}-train-{i:02}");
            render_log(spec, &route, &clip_id, true, &mut rng)
        })
        .collect();
    let test_clip = format!("{slug}-test");
    let test_log = render_log(spec, &route, &test_clip, false, &mut rng);
    Ok(GeneratedScenario {
        train_logs,
        test_log,
        ground_truth: GroundTruth {
            clip_id: test_clip,
            windows,
        },
    })
}
