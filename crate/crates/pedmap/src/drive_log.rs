//! Drive-log parsing, validation, and time alignment.
//!
//! A drive log is the raw record of one clip: GPS fixes (position, optional
//! speed) plus per-frame pedestrian detection counts. Two encodings are
//! accepted, JSONL and CSV; see the format notes on [`parse_drive_log`].
//!
//! Logs are aligned onto half-open one-second intervals `[k, k+1)` anchored at
//! t = 0. Each interval's pedestrian count is the MAX per-frame count inside
//! it, not the sum: summing 30 fps frames would count one standing pedestrian
//! 30 times, while the max approximates distinct simultaneous pedestrians
//! without tracking.

use crate::geodesy::{haversine_distance, GeoPoint};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Consecutive fixes further apart than this are a validation error.
pub const MAX_FIX_GAP_S: f64 = 5.0;

/// Upper bound on any timestamp; clips are minutes long, so anything beyond a
/// day signals a corrupt or mis-scaled time channel.
pub const MAX_TIMESTAMP_S: f64 = 86_400.0;

#[derive(Debug, Error)]
pub enum DriveLogError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{0}")]
    Validation(String),
    #[error("t={0} outside the log's fix span")]
    OutOfRange(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpsFix {
    /// Seconds since clip start.
    pub t: f64,
    pub pos: GeoPoint,
    pub speed_kmh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    /// Seconds since clip start.
    pub t: f64,
    /// Pedestrians visible in this frame.
    pub ped_count: u32,
}

/// One clip's validated record: fixes sorted by strictly increasing t with no
/// gap over [`MAX_FIX_GAP_S`], detections sorted by strictly increasing t.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveLog {
    clip_id: String,
    fixes: Vec<GpsFix>,
    detections: Vec<DetectionFrame>,
}

impl DriveLog {
    /// Sorts both channels by t, then validates every invariant.
    pub fn new(
        clip_id: impl Into<String>,
        mut fixes: Vec<GpsFix>,
        mut detections: Vec<DetectionFrame>,
    ) -> Result<Self, DriveLogError> {
        if fixes.is_empty() {
            return Err(DriveLogError::Validation("log has no GPS fixes".into()));
        }
        for f in &fixes {
            check_t(f.t, "fix")?;
            if let Some(v) = f.speed_kmh {
                if !v.is_finite() || v < 0.0 {
                    return Err(DriveLogError::Validation(format!(
                        "fix at t={} has invalid speed {v}",
                        f.t
                    )));
                }
            }
        }
        for d in &detections {
            check_t(d.t, "detection")?;
        }
        fixes.sort_by(|a, b| a.t.total_cmp(&b.t));
        detections.sort_by(|a, b| a.t.total_cmp(&b.t));
        for pair in fixes.windows(2) {
            if pair[1].t == pair[0].t {
                return Err(DriveLogError::Validation(format!(
                    "duplicate fix timestamp t={}",
                    pair[0].t
                )));
            }
            let gap = pair[1].t - pair[0].t;
            if gap > MAX_FIX_GAP_S {
                return Err(DriveLogError::Validation(format!(
                    "gap of {gap} s between fixes at t={} and t={} exceeds {MAX_FIX_GAP_S} s",
                    pair[0].t, pair[1].t
                )));
            }
        }
        for pair in detections.windows(2) {
            if pair[1].t == pair[0].t {
                return Err(DriveLogError::Validation(format!(
                    "duplicate detection timestamp t={}",
                    pair[0].t
                )));
            }
        }
        Ok(Self {
            clip_id: clip_id.into(),
            fixes,
            detections,
        })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn fixes(&self) -> &[GpsFix] {
        &self.fixes
    }

    pub fn detections(&self) -> &[DetectionFrame] {
        &self.detections
    }

    pub fn first_fix(&self) -> &GpsFix {
        &self.fixes[0]
    }

    pub fn last_fix(&self) -> &GpsFix {
        &self.fixes[self.fixes.len() - 1]
    }
}

fn check_t(t: f64, what: &str) -> Result<(), DriveLogError> {
    if !t.is_finite() || !(0.0..=MAX_TIMESTAMP_S).contains(&t) {
        return Err(DriveLogError::Validation(format!(
            "{what} timestamp {t} outside [0, {MAX_TIMESTAMP_S}]"
        )));
    }
    Ok(())
}

/// One second of the clip: the fixes with `t ∈ [k, k+1)` and the interval's
/// pedestrian count (max per-frame count; 0 when no frames landed here).
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationInterval {
    pub k: u64,
    pub fixes: Vec<GpsFix>,
    pub ped_count: u32,
}

impl AssociationInterval {
    /// True when no fix landed in this second (vehicle idle or GPS dropout).
    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl LogFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum Row {
    #[serde(rename = "fix")]
    Fix {
        t: f64,
        lat: f64,
        lon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speed_kmh: Option<f64>,
    },
    #[serde(rename = "det")]
    Det { t: f64, count: u32 },
}

/// Parse one clip from file content.
///
/// JSONL: one object per line, either
/// `{"type":"fix","t":1.2,"lat":32.87,"lon":-117.25,"speed_kmh":31.5}`
/// (speed_kmh optional) or `{"type":"det","t":1.233,"count":2}`.
///
/// CSV: header `type,t,lat,lon,speed_kmh,count`; fix rows leave `count`
/// empty, det rows leave `lat,lon,speed_kmh` empty.
///
/// Rows may arrive out of order; they are sorted by t before validation.
pub fn parse_drive_log(
    content: &str,
    format: LogFormat,
    clip_id: impl Into<String>,
) -> Result<DriveLog, DriveLogError> {
    let rows = match format {
        LogFormat::Jsonl => parse_jsonl_rows(content)?,
        LogFormat::Csv => parse_csv_rows(content)?,
    };
    let mut fixes = Vec::new();
    let mut detections = Vec::new();
    for (line, row) in rows {
        match row {
            Row::Fix {
                t,
                lat,
                lon,
                speed_kmh,
            } => {
                let pos = GeoPoint::new(lat, lon)
                    .map_err(|e| DriveLogError::Validation(format!("line {line}: {e}")))?;
                fixes.push(GpsFix { t, pos, speed_kmh });
            }
            Row::Det { t, count } => detections.push(DetectionFrame {
                t,
                ped_count: count,
            }),
        }
    }
    DriveLog::new(clip_id, fixes, detections)
}

fn parse_jsonl_rows(content: &str) -> Result<Vec<(usize, Row)>, DriveLogError> {
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str::<Row>(line).map_err(|e| DriveLogError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        rows.push((i + 1, row));
    }
    Ok(rows)
}

const CSV_HEADER: [&str; 6] = ["type", "t", "lat", "lon", "speed_kmh", "count"];

fn parse_csv_rows(content: &str) -> Result<Vec<(usize, Row)>, DriveLogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DriveLogError::Parse {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(DriveLogError::Parse {
            line: 1,
            reason: format!(
                "expected header {}, got {}",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DriveLogError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let req_f64 = |i: usize, name: &str| -> Result<f64, DriveLogError> {
            let raw = field(i);
            if raw.is_empty() {
                return Err(DriveLogError::Parse {
                    line,
                    reason: format!("missing {name}"),
                });
            }
            raw.parse::<f64>().map_err(|e| DriveLogError::Parse {
                line,
                reason: format!("bad {name} {raw:?}: {e}"),
            })
        };
        let must_be_empty = |i: usize, name: &str| -> Result<(), DriveLogError> {
            if field(i).is_empty() {
                Ok(())
            } else {
                Err(DriveLogError::Parse {
                    line,
                    reason: format!("{name} must be empty on a {} row", field(0)),
                })
            }
        };
        match field(0) {
            "fix" => {
                must_be_empty(5, "count")?;
                let speed = if field(4).is_empty() {
                    None
                } else {
                    Some(req_f64(4, "speed_kmh")?)
                };
                rows.push((
                    line,
                    Row::Fix {
                        t: req_f64(1, "t")?,
                        lat: req_f64(2, "lat")?,
                        lon: req_f64(3, "lon")?,
                        speed_kmh: speed,
                    },
                ));
            }
            "det" => {
                must_be_empty(2, "lat")?;
                must_be_empty(3, "lon")?;
                must_be_empty(4, "speed_kmh")?;
                let raw = field(5);
                let count = raw.parse::<u32>().map_err(|e| DriveLogError::Parse {
                    line,
                    reason: format!("bad count {raw:?}: {e}"),
                })?;
                rows.push((
                    line,
                    Row::Det {
                        t: req_f64(1, "t")?,
                        count,
                    },
                ));
            }
            other => {
                return Err(DriveLogError::Parse {
                    line,
                    reason: format!("unknown row type {other:?}"),
                })
            }
        }
    }
    Ok(rows)
}

/// Load a log from disk; format comes from the extension (`.jsonl` or
/// `.csv`), clip_id from the file stem.
pub fn load_drive_log(path: &Path) -> Result<DriveLog, DriveLogError> {
    let format = LogFormat::from_path(path).ok_or_else(|| {
        DriveLogError::Validation(format!(
            "unrecognized log extension on {} (expected .jsonl or .csv)",
            path.display()
        ))
    })?;
    let clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let content = std::fs::read_to_string(path)?;
    parse_drive_log(&content, format, clip_id)
}

fn merged_rows(log: &DriveLog) -> Vec<Row> {
    // Fixes and detections interleaved by time, fix first on a shared t.
    let mut rows = Vec::with_capacity(log.fixes.len() + log.detections.len());
    let (mut i, mut j) = (0, 0);
    while i < log.fixes.len() || j < log.detections.len() {
        let take_fix = match (log.fixes.get(i), log.detections.get(j)) {
            (Some(f), Some(d)) => f.t <= d.t,
            (Some(_), None) => true,
            _ => false,
        };
        if take_fix {
            let f = &log.fixes[i];
            rows.push(Row::Fix {
                t: f.t,
                lat: f.pos.lat_deg(),
                lon: f.pos.lon_deg(),
                speed_kmh: f.speed_kmh,
            });
            i += 1;
        } else {
            let d = &log.detections[j];
            rows.push(Row::Det {
                t: d.t,
                count: d.ped_count,
            });
            j += 1;
        }
    }
    rows
}

pub fn log_to_jsonl(log: &DriveLog) -> String {
    let mut out = String::new();
    for row in merged_rows(log) {
        out.push_str(&serde_json::to_string(&row).expect("log rows serialize"));
        out.push('\n');
    }
    out
}

pub fn log_to_csv(log: &DriveLog) -> String {
    let mut out = String::from("type,t,lat,lon,speed_kmh,count\n");
    for row in merged_rows(log) {
        match row {
            Row::Fix {
                t,
                lat,
                lon,
                speed_kmh,
            } => {
                let speed = speed_kmh.map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!("fix,{t},{lat},{lon},{speed},\n"));
            }
            Row::Det { t, count } => out.push_str(&format!("det,{t},,,,{count}\n")),
        }
    }
    out
}

/// Write a log next to its clip_id; format from the path extension.
pub fn save_drive_log(log: &DriveLog, path: &Path) -> Result<(), DriveLogError> {
    let format = LogFormat::from_path(path).ok_or_else(|| {
        DriveLogError::Validation(format!(
            "unrecognized log extension on {} (expected .jsonl or .csv)",
            path.display()
        ))
    })?;
    let content = match format {
        LogFormat::Jsonl => log_to_jsonl(log),
        LogFormat::Csv => log_to_csv(log),
    };
    std::fs::write(path, content)?;
    Ok(())
}

/// Split a log into one [`AssociationInterval`] per second `k` from 0 through
/// `floor(latest timestamp)`. Every fix lands in exactly one interval;
/// seconds with no fixes are still emitted (flagged via
/// [`AssociationInterval::is_empty`]) so gaps stay visible.
pub fn split_intervals(log: &DriveLog) -> Vec<AssociationInterval> {
    let mut t_max = log.last_fix().t;
    if let Some(d) = log.detections.last() {
        t_max = t_max.max(d.t);
    }
    let k_max = t_max.floor() as u64;
    let mut intervals: Vec<AssociationInterval> = (0..=k_max)
        .map(|k| AssociationInterval {
            k,
            fixes: Vec::new(),
            ped_count: 0,
        })
        .collect();
    for f in &log.fixes {
        intervals[f.t.floor() as usize].fixes.push(f.clone());
    }
    for d in &log.detections {
        let slot = &mut intervals[d.t.floor() as usize];
        slot.ped_count = slot.ped_count.max(d.ped_count);
    }
    intervals
}

/// Speed at time t, in km/h.
///
/// Uses the fixes bracketing t: the earlier fix's speed channel wins, then
/// the later fix's, then the haversine distance between them over their time
/// gap (× 3.6). A single-fix log returns that fix's speed (0 when absent) at
/// exactly its timestamp.
pub fn estimate_speed_kmh(log: &DriveLog, t: f64) -> Result<f64, DriveLogError> {
    let fixes = log.fixes();
    if t < fixes[0].t || t > fixes[fixes.len() - 1].t {
        return Err(DriveLogError::OutOfRange(t));
    }
    if fixes.len() == 1 {
        return Ok(fixes[0].speed_kmh.unwrap_or(0.0));
    }
    let upto = fixes.partition_point(|f| f.t <= t);
    let hi = upto.min(fixes.len() - 1);
    let lo = hi - 1;
    if let Some(v) = fixes[lo].speed_kmh.or(fixes[hi].speed_kmh) {
        return Ok(v);
    }
    let dist = haversine_distance(fixes[lo].pos, fixes[hi].pos);
    let dt = fixes[hi].t - fixes[lo].t;
    Ok((dist / dt * 3.6).max(0.0))
}
