//! The advisory engine: replay a drive against an indexed hotspot map and
//! decide, every K meters, whether the driver should be told to stay
//! vigilant.
//!
//! The rule at each decision point: look up the nearest hotspot node, compute
//! the stopping distance
//!
//! ```text
//! s = b * ((0.278 * t * v) + v^2) / (254 * (f + G))
//! ```
//!
//! with v in km/h and s in meters, and advise when the node is closer than s
//! AND within the forward field of view (heading angle strictly below the
//! half-angle; a hotspot behind the vehicle is ignored). Note the reaction
//! term 0.278·t·v sits over the same 254(f+G) denominator as the braking
//! term; conventional stopping-distance decompositions leave it undivided,
//! but this engine keeps the combined form deliberately, and the offset b is
//! a multiplicative safety margin on the whole quantity.
//!
//! Consecutive active decision points merge into episodes, the unit a driver
//! experiences as one advisory: it switches on approaching a hotspot and off
//! once the hotspot falls behind.

use crate::drive_log::{estimate_speed_kmh, DriveLog};
use crate::geodesy::{haversine_distance, heading_angle, initial_bearing, BearingDeg, GeoPoint};
use crate::hotspot_map::{filter_by_weight, HotspotMap};
use crate::spatial_index::{NearestResult, SpatialIndex, DEFAULT_LEAF_CAPACITY};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdvisoryError {
    #[error("invalid advisory parameters: {0}")]
    InvalidParams(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tunables of the advisory rule. Field names follow the conventional
/// symbols: reaction time t, friction coefficient f, grade G, safety offset
/// b, sampling distance K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryParams {
    /// t: driver reaction time in seconds.
    pub reaction_time_s: f64,
    /// f: road friction coefficient (0.7 ~ dry road).
    pub friction: f64,
    /// G: road grade (slope), positive uphill.
    pub grade: f64,
    /// b: multiplicative safety offset on stopping distance, ≥ 1.
    pub offset: f64,
    /// K: path distance in meters between advisory evaluations.
    pub sampling_distance_m: f64,
    /// Half-angle of the forward field of view in degrees; a hotspot at a
    /// heading angle ≥ this is treated as behind.
    pub fov_half_angle_deg: f64,
    /// Minimum node weight for a hotspot to count.
    pub min_weight: u64,
}

impl Default for AdvisoryParams {
    fn default() -> Self {
        Self {
            reaction_time_s: 1.5,
            friction: 0.7,
            grade: 0.0,
            offset: 1.5,
            sampling_distance_m: 2.0,
            fov_half_angle_deg: 90.0,
            min_weight: 1,
        }
    }
}

impl AdvisoryParams {
    pub fn validate(&self) -> Result<(), AdvisoryError> {
        let bad = |msg: String| Err(AdvisoryError::InvalidParams(msg));
        for (name, v) in [
            ("reaction_time_s", self.reaction_time_s),
            ("friction", self.friction),
            ("grade", self.grade),
            ("offset", self.offset),
            ("sampling_distance_m", self.sampling_distance_m),
            ("fov_half_angle_deg", self.fov_half_angle_deg),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.reaction_time_s < 0.0 {
            return bad(format!(
                "reaction time must be ≥ 0, got {}",
                self.reaction_time_s
            ));
        }
        if self.friction + self.grade <= 0.0 {
            return bad(format!(
                "friction + grade must be positive, got {} + {}",
                self.friction, self.grade
            ));
        }
        if self.offset < 1.0 {
            return bad(format!("offset must be ≥ 1, got {}", self.offset));
        }
        if self.sampling_distance_m <= 0.0 {
            return bad(format!(
                "sampling distance must be positive, got {}",
                self.sampling_distance_m
            ));
        }
        if !(0.0 < self.fov_half_angle_deg && self.fov_half_angle_deg <= 180.0) {
            return bad(format!(
                "fov half-angle must be in (0, 180], got {}",
                self.fov_half_angle_deg
            ));
        }
        if self.min_weight < 1 {
            return bad("min_weight must be ≥ 1".into());
        }
        Ok(())
    }
}

/// Stopping distance in meters at speed `v_kmh`.
pub fn stopping_distance(v_kmh: f64, p: &AdvisoryParams) -> Result<f64, AdvisoryError> {
    let denom = p.friction + p.grade;
    if denom <= 0.0 {
        return Err(AdvisoryError::InvalidParams(format!(
            "friction + grade must be positive, got {} + {}",
            p.friction, p.grade
        )));
    }
    Ok(p.offset * ((0.278 * p.reaction_time_s * v_kmh) + v_kmh * v_kmh) / (254.0 * denom))
}

/// A decision point along the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub pos: GeoPoint,
    /// Travel direction entering this point; absent until the vehicle has
    /// ever moved.
    pub heading: Option<BearingDeg>,
}

/// Pick decision points every K meters of path distance. The first fix is
/// always a sample; afterwards a fix becomes one when the cumulative
/// haversine path distance since the last sample reaches K. The heading at a
/// sample is the bearing from the previous fix into the current one, carried
/// forward across coincident fixes.
pub fn sample_points(log: &DriveLog, k_m: f64) -> Vec<SamplePoint> {
    let fixes = log.fixes();
    let mut out = Vec::new();
    let mut last_heading: Option<BearingDeg> = None;
    let mut since_last_sample = 0.0;
    for (i, f) in fixes.iter().enumerate() {
        if i == 0 {
            out.push(SamplePoint {
                t: f.t,
                pos: f.pos,
                heading: None,
            });
            continue;
        }
        let prev = &fixes[i - 1];
        since_last_sample += haversine_distance(prev.pos, f.pos);
        if let Ok(b) = initial_bearing(prev.pos, f.pos) {
            last_heading = Some(b);
        }
        if since_last_sample >= k_m {
            out.push(SamplePoint {
                t: f.t,
                pos: f.pos,
                heading: last_heading,
            });
            since_last_sample = 0.0;
        }
    }
    out
}

/// Advisory state at one decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvisorySample {
    pub t: f64,
    pub pos: GeoPoint,
    pub speed_kmh: f64,
    pub stopping_distance_m: f64,
    pub nearest: Option<NearestResult>,
    /// Angle between travel direction and the bearing to the nearest node;
    /// absent when the vehicle has never moved or sits exactly on the node.
    pub heading_angle_deg: Option<f64>,
    pub active: bool,
}

/// Evaluate the advisory rule at one decision point.
///
/// Expects `index` built over the min-weight-filtered map and params already
/// validated (as [`replay`] does). Active requires a nearest node strictly
/// within stopping distance AND passing the field-of-view check; the FOV
/// check passes conservatively when the heading is unknown or the vehicle
/// sits exactly on the node (direction exists but cannot be measured).
pub fn evaluate_sample(
    t: f64,
    pos: GeoPoint,
    heading: Option<BearingDeg>,
    v_kmh: f64,
    index: &SpatialIndex,
    p: &AdvisoryParams,
) -> AdvisorySample {
    let s = stopping_distance(v_kmh, p).expect("params validated before evaluation");
    let nearest = index.nearest(pos).ok();
    let (theta, fov_pass) = match (heading, &nearest) {
        (Some(h), Some(nr)) => match initial_bearing(pos, index.node(nr.node_index).pos) {
            Ok(to_node) => {
                let theta = heading_angle(h, to_node);
                (Some(theta), theta < p.fov_half_angle_deg)
            }
            Err(_) => (None, true),
        },
        _ => (None, true),
    };
    let active = nearest.is_some_and(|nr| nr.distance_m < s) && fov_pass;
    AdvisorySample {
        t,
        pos,
        speed_kmh: v_kmh,
        stopping_distance_m: s,
        nearest,
        heading_angle_deg: theta,
        active,
    }
}

/// A maximal run of consecutive active samples; what the driver experiences
/// as one advisory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvisoryEpisode {
    pub t_start: f64,
    pub t_end: f64,
    pub sample_count: usize,
}

fn episodes_from(samples: &[AdvisorySample]) -> Vec<AdvisoryEpisode> {
    let mut episodes = Vec::new();
    let mut run: Option<AdvisoryEpisode> = None;
    for s in samples {
        match (&mut run, s.active) {
            (None, true) => {
                run = Some(AdvisoryEpisode {
                    t_start: s.t,
                    t_end: s.t,
                    sample_count: 1,
                });
            }
            (Some(ep), true) => {
                ep.t_end = s.t;
                ep.sample_count += 1;
            }
            (Some(_), false) => episodes.push(run.take().unwrap()),
            (None, false) => {}
        }
    }
    episodes.extend(run);
    episodes
}

/// One replayed drive: every decision point plus the merged episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisoryRun {
    pub clip_id: String,
    pub params: AdvisoryParams,
    pub samples: Vec<AdvisorySample>,
    pub episodes: Vec<AdvisoryEpisode>,
}

/// Replay a log against a map: filter by weight, index, sample every K
/// meters, evaluate each point at its estimated speed, and merge episodes.
pub fn replay(
    log: &DriveLog,
    map: &HotspotMap,
    p: &AdvisoryParams,
) -> Result<AdvisoryRun, AdvisoryError> {
    p.validate()?;
    let filtered = filter_by_weight(map, p.min_weight);
    let index = SpatialIndex::build(&filtered, DEFAULT_LEAF_CAPACITY);
    let samples: Vec<AdvisorySample> = sample_points(log, p.sampling_distance_m)
        .into_iter()
        .map(|sp| {
            let v = estimate_speed_kmh(log, sp.t).expect("sample times lie within the fix span");
            evaluate_sample(sp.t, sp.pos, sp.heading, v, &index, p)
        })
        .collect();
    let episodes = episodes_from(&samples);
    Ok(AdvisoryRun {
        clip_id: log.clip_id().to_string(),
        params: *p,
        samples,
        episodes,
    })
}

/// File form of a replay, as written to and read from advisory JSON.
/// Node indices are not persisted (they are meaningless without the exact
/// filtered map), so a loaded run exposes distances only.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisoryOutput {
    pub clip_id: String,
    pub params: AdvisoryParams,
    pub samples: Vec<OutputSample>,
    pub episodes: Vec<AdvisoryEpisode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputSample {
    pub t: f64,
    pub pos: GeoPoint,
    pub v_kmh: f64,
    pub s_m: f64,
    pub d_m: Option<f64>,
    pub theta_deg: Option<f64>,
    pub active: bool,
}

impl AdvisoryOutput {
    pub fn from_run(run: &AdvisoryRun) -> Self {
        Self {
            clip_id: run.clip_id.clone(),
            params: run.params,
            samples: run
                .samples
                .iter()
                .map(|s| OutputSample {
                    t: s.t,
                    pos: s.pos,
                    v_kmh: s.speed_kmh,
                    s_m: s.stopping_distance_m,
                    d_m: s.nearest.map(|n| n.distance_m),
                    theta_deg: s.heading_angle_deg,
                    active: s.active,
                })
                .collect(),
            episodes: run.episodes.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RunFile {
    clip_id: String,
    params: AdvisoryParams,
    samples: Vec<SampleRow>,
    episodes: Vec<EpisodeRow>,
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    t: f64,
    lat: f64,
    lon: f64,
    v_kmh: f64,
    s_m: f64,
    d_m: Option<f64>,
    theta_deg: Option<f64>,
    active: bool,
}

#[derive(Serialize, Deserialize)]
struct EpisodeRow {
    t_start: f64,
    t_end: f64,
}

pub fn output_to_json(out: &AdvisoryOutput) -> String {
    let file = RunFile {
        clip_id: out.clip_id.clone(),
        params: out.params,
        samples: out
            .samples
            .iter()
            .map(|s| SampleRow {
                t: s.t,
                lat: s.pos.lat_deg(),
                lon: s.pos.lon_deg(),
                v_kmh: s.v_kmh,
                s_m: s.s_m,
                d_m: s.d_m,
                theta_deg: s.theta_deg,
                active: s.active,
            })
            .collect(),
        episodes: out
            .episodes
            .iter()
            .map(|e| EpisodeRow {
                t_start: e.t_start,
                t_end: e.t_end,
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("advisory output serializes");
    json.push('\n');
    json
}

pub fn output_from_json(content: &str) -> Result<AdvisoryOutput, AdvisoryError> {
    let file: RunFile =
        serde_json::from_str(content).map_err(|e| AdvisoryError::Format(e.to_string()))?;
    file.params.validate()?;
    let mut samples = Vec::with_capacity(file.samples.len());
    for row in &file.samples {
        let pos =
            GeoPoint::new(row.lat, row.lon).map_err(|e| AdvisoryError::Format(e.to_string()))?;
        samples.push(OutputSample {
            t: row.t,
            pos,
            v_kmh: row.v_kmh,
            s_m: row.s_m,
            d_m: row.d_m,
            theta_deg: row.theta_deg,
            active: row.active,
        });
    }
    let episodes = file
        .episodes
        .iter()
        .map(|e| AdvisoryEpisode {
            t_start: e.t_start,
            t_end: e.t_end,
            sample_count: samples
                .iter()
                .filter(|s| s.active && s.t >= e.t_start && s.t <= e.t_end)
                .count(),
        })
        .collect();
    Ok(AdvisoryOutput {
        clip_id: file.clip_id,
        params: file.params,
        samples,
        episodes,
    })
}

pub fn save_output_file(out: &AdvisoryOutput, path: &Path) -> Result<(), AdvisoryError> {
    std::fs::write(path, output_to_json(out))?;
    Ok(())
}

pub fn load_output_file(path: &Path) -> Result<AdvisoryOutput, AdvisoryError> {
    output_from_json(&std::fs::read_to_string(path)?)
}
