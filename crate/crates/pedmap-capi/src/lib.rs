//! C ABI for the pedmap library.
//!
//! Conventions: every function returns a [`PedmapStatus`]; `PEDMAP_STATUS_OK`
//! means success and anything else leaves a human-readable message
//! retrievable with [`pedmap_last_error`]. Objects come back as opaque
//! pointers owned by the caller and must be released with their matching
//! `_free` function. All strings are NUL-terminated UTF-8. The generated
//! header lives at `include/pedmap.h`.

use pedmap::advisory::load_output_file;
use pedmap::advisory::{
    replay, save_output_file, stopping_distance, AdvisoryError, AdvisoryOutput, AdvisoryParams,
};
use pedmap::drive_log::{load_drive_log, DriveLog, DriveLogError};
use pedmap::evaluation::{evaluate_run, load_ground_truth_file, report_to_json, EvaluationError};
use pedmap::geodesy::{haversine_distance, GeoPoint, GeodesyError};
use pedmap::hotspot_map::{
    build_map, filter_by_weight, load_map_file, merge_maps, save_map_file, HotspotMap,
    HotspotMapError,
};
use pedmap::spatial_index::{SpatialIndex, SpatialIndexError, DEFAULT_LEAF_CAPACITY};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Result of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PedmapStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The operating system reported an I/O failure.
    Io = 3,
    /// A file could not be parsed in its declared format.
    Parse = 4,
    /// Input values violated a documented precondition.
    Validation = 5,
    /// Advisory parameters were out of range.
    InvalidParams = 6,
    /// The queried index holds no nodes.
    NoNodes = 7,
    /// The two maps were built with different cluster radii.
    RadiusMismatch = 8,
    /// Advisories and ground truth describe different clips.
    ClipMismatch = 9,
    /// The library panicked; treat the handle as poisoned.
    Internal = 10,
}

/// Advisory-rule tunables, mirroring the library defaults documented for
/// `pedmap_advisory_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedmapAdvisoryParams {
    /// t: driver reaction time in seconds.
    pub reaction_time_s: f64,
    /// f: road friction coefficient.
    pub friction: f64,
    /// G: road grade, positive uphill.
    pub grade: f64,
    /// b: multiplicative safety offset on stopping distance, >= 1.
    pub offset: f64,
    /// K: path distance in meters between advisory evaluations.
    pub sampling_distance_m: f64,
    /// Half-angle of the forward field of view in degrees.
    pub fov_half_angle_deg: f64,
    /// Minimum node weight for a hotspot to count.
    pub min_weight: u64,
}

impl From<PedmapAdvisoryParams> for AdvisoryParams {
    fn from(p: PedmapAdvisoryParams) -> Self {
        AdvisoryParams {
            reaction_time_s: p.reaction_time_s,
            friction: p.friction,
            grade: p.grade,
            offset: p.offset,
            sampling_distance_m: p.sampling_distance_m,
            fov_half_angle_deg: p.fov_half_angle_deg,
            min_weight: p.min_weight,
        }
    }
}

impl From<AdvisoryParams> for PedmapAdvisoryParams {
    fn from(p: AdvisoryParams) -> Self {
        PedmapAdvisoryParams {
            reaction_time_s: p.reaction_time_s,
            friction: p.friction,
            grade: p.grade,
            offset: p.offset,
            sampling_distance_m: p.sampling_distance_m,
            fov_half_angle_deg: p.fov_half_angle_deg,
            min_weight: p.min_weight,
        }
    }
}

/// Nearest-node query result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedmapNearest {
    /// Index of the winning node in the map's canonical node order.
    pub node_index: usize,
    /// Great-circle distance from the query to that node, meters.
    pub distance_m: f64,
}

/// Opaque hotspot map handle.
pub struct PedmapMap(HotspotMap);

/// Opaque spatial index handle. Independent of the map it was built from;
/// the map may be freed first.
pub struct PedmapIndex(SpatialIndex);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).expect("NULs stripped");
    });
}

fn fail(status: PedmapStatus, msg: impl std::fmt::Display) -> PedmapStatus {
    set_error(msg);
    status
}

fn guard(body: impl FnOnce() -> PedmapStatus) -> PedmapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(PedmapStatus::Internal, "internal panic"),
    }
}

fn drive_log_status(e: &DriveLogError) -> PedmapStatus {
    match e {
        DriveLogError::Parse { .. } => PedmapStatus::Parse,
        DriveLogError::Validation(_) | DriveLogError::OutOfRange(_) => PedmapStatus::Validation,
        DriveLogError::Io(_) => PedmapStatus::Io,
    }
}

fn map_status(e: &HotspotMapError) -> PedmapStatus {
    match e {
        HotspotMapError::RadiusMismatch(_, _) => PedmapStatus::RadiusMismatch,
        HotspotMapError::Format(_) => PedmapStatus::Parse,
        HotspotMapError::Io(_) => PedmapStatus::Io,
    }
}

fn advisory_status(e: &AdvisoryError) -> PedmapStatus {
    match e {
        AdvisoryError::InvalidParams(_) => PedmapStatus::InvalidParams,
        AdvisoryError::Format(_) => PedmapStatus::Parse,
        AdvisoryError::Io(_) => PedmapStatus::Io,
    }
}

fn evaluation_status(e: &EvaluationError) -> PedmapStatus {
    match e {
        EvaluationError::ClipMismatch { .. } => PedmapStatus::ClipMismatch,
        EvaluationError::Format(_) => PedmapStatus::Parse,
        EvaluationError::Io(_) => PedmapStatus::Io,
        EvaluationError::MixedSamplingDistance(_, _) | EvaluationError::Empty => {
            PedmapStatus::Validation
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string.
unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, PedmapStatus> {
    if ptr.is_null() {
        return Err(fail(PedmapStatus::NullArgument, "null path argument"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(e) => Err(fail(PedmapStatus::InvalidUtf8, e)),
    }
}

fn point_arg(lat_deg: f64, lon_deg: f64) -> Result<GeoPoint, PedmapStatus> {
    GeoPoint::new(lat_deg, lon_deg).map_err(|e: GeodesyError| fail(PedmapStatus::Validation, e))
}

/// Library version as a static NUL-terminated string; never NULL, never
/// freed by the caller.
#[no_mangle]
pub extern "C" fn pedmap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, valid until
/// the next API call from the same thread. Never NULL.
#[no_mangle]
pub extern "C" fn pedmap_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Great-circle distance in meters between two coordinates.
///
/// # Safety
/// `out_m` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn pedmap_haversine_m(
    lat1_deg: f64,
    lon1_deg: f64,
    lat2_deg: f64,
    lon2_deg: f64,
    out_m: *mut f64,
) -> PedmapStatus {
    guard(|| {
        if out_m.is_null() {
            return fail(PedmapStatus::NullArgument, "null out pointer");
        }
        let a = match point_arg(lat1_deg, lon1_deg) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let b = match point_arg(lat2_deg, lon2_deg) {
            Ok(p) => p,
            Err(s) => return s,
        };
        *out_m = haversine_distance(a, b);
        PedmapStatus::Ok
    })
}

/// Fill `out` with the documented default advisory parameters
/// (t=1.5 s, f=0.7, G=0, b=1.5, K=2 m, θ=90°, min weight 1).
///
/// # Safety
/// `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn pedmap_advisory_params_default(
    out: *mut PedmapAdvisoryParams,
) -> PedmapStatus {
    guard(|| {
        if out.is_null() {
            return fail(PedmapStatus::NullArgument, "null out pointer");
        }
        *out = AdvisoryParams::default().into();
        PedmapStatus::Ok
    })
}

/// Stopping distance in meters at `v_kmh` under `params`.
///
/// # Safety
/// `params` and `out_m` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pedmap_stopping_distance_m(
    v_kmh: f64,
    params: *const PedmapAdvisoryParams,
    out_m: *mut f64,
) -> PedmapStatus {
    guard(|| {
        if params.is_null() || out_m.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        match stopping_distance(v_kmh, &(*params).into()) {
            Ok(s) => {
                *out_m = s;
                PedmapStatus::Ok
            }
            Err(e) => fail(advisory_status(&e), e),
        }
    })
}

/// Load a hotspot map from a JSON file written by `pedmap_map_save` or the
/// CLI. On success `*out` owns the map; free it with `pedmap_map_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_load(
    path: *const c_char,
    out: *mut *mut PedmapMap,
) -> PedmapStatus {
    guard(|| {
        if out.is_null() {
            return fail(PedmapStatus::NullArgument, "null out pointer");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_map_file(&path) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(PedmapMap(map)));
                PedmapStatus::Ok
            }
            Err(e) => fail(map_status(&e), e),
        }
    })
}

/// Write a map as canonical JSON; identical maps produce identical bytes.
///
/// # Safety
/// `map` must come from this API and `path` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_save(
    map: *const PedmapMap,
    path: *const c_char,
) -> PedmapStatus {
    guard(|| {
        if map.is_null() {
            return fail(PedmapStatus::NullArgument, "null map");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match save_map_file(&(*map).0, &path) {
            Ok(()) => PedmapStatus::Ok,
            Err(e) => fail(map_status(&e), e),
        }
    })
}

/// Build a map from drive-log files (.jsonl or .csv), clustering detections
/// with the given radius in meters. On success `*out` owns the map.
///
/// # Safety
/// `log_paths` must point to `n_logs` NUL-terminated strings; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_build(
    log_paths: *const *const c_char,
    n_logs: usize,
    cluster_radius_m: f64,
    out: *mut *mut PedmapMap,
) -> PedmapStatus {
    guard(|| {
        if out.is_null() || (log_paths.is_null() && n_logs > 0) {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        if !(cluster_radius_m.is_finite() && cluster_radius_m > 0.0) {
            return fail(
                PedmapStatus::Validation,
                format!("cluster radius must be positive, got {cluster_radius_m}"),
            );
        }
        let mut logs: Vec<DriveLog> = Vec::with_capacity(n_logs);
        for i in 0..n_logs {
            let path = match path_arg(*log_paths.add(i)) {
                Ok(p) => p,
                Err(s) => return s,
            };
            match load_drive_log(&path) {
                Ok(log) => logs.push(log),
                Err(e) => return fail(drive_log_status(&e), e),
            }
        }
        let map = build_map(&logs, cluster_radius_m);
        *out = Box::into_raw(Box::new(PedmapMap(map)));
        PedmapStatus::Ok
    })
}

/// Merge two maps built with the same cluster radius into a new map.
///
/// # Safety
/// All pointers must be valid; `a` and `b` must come from this API.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_merge(
    a: *const PedmapMap,
    b: *const PedmapMap,
    out: *mut *mut PedmapMap,
) -> PedmapStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        match merge_maps(&(*a).0, &(*b).0) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(PedmapMap(map)));
                PedmapStatus::Ok
            }
            Err(e) => fail(map_status(&e), e),
        }
    })
}

/// Copy `map`, keeping only nodes with weight at or above `min_weight`.
///
/// # Safety
/// `map` must come from this API and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_filter_by_weight(
    map: *const PedmapMap,
    min_weight: u64,
    out: *mut *mut PedmapMap,
) -> PedmapStatus {
    guard(|| {
        if map.is_null() || out.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        *out = Box::into_raw(Box::new(PedmapMap(filter_by_weight(&(*map).0, min_weight))));
        PedmapStatus::Ok
    })
}

/// Number of nodes in the map.
///
/// # Safety
/// `map` must come from this API and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_node_count(
    map: *const PedmapMap,
    out: *mut usize,
) -> PedmapStatus {
    guard(|| {
        if map.is_null() || out.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        *out = (*map).0.nodes().len();
        PedmapStatus::Ok
    })
}

/// Sum of node weights in the map.
///
/// # Safety
/// `map` must come from this API and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_total_weight(
    map: *const PedmapMap,
    out: *mut u64,
) -> PedmapStatus {
    guard(|| {
        if map.is_null() || out.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        *out = (*map).0.total_weight();
        PedmapStatus::Ok
    })
}

/// Release a map. NULL is a no-op.
///
/// # Safety
/// `map` must come from this API and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pedmap_map_free(map: *mut PedmapMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Build a nearest-neighbor index over the map's nodes. `leaf_capacity`
/// of 0 selects the default. The index snapshots the map: freeing the map
/// afterwards is fine.
///
/// # Safety
/// `map` must come from this API and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_index_build(
    map: *const PedmapMap,
    leaf_capacity: usize,
    out: *mut *mut PedmapIndex,
) -> PedmapStatus {
    guard(|| {
        if map.is_null() || out.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        let capacity = if leaf_capacity == 0 {
            DEFAULT_LEAF_CAPACITY
        } else {
            leaf_capacity
        };
        let index = SpatialIndex::build(&(*map).0, capacity);
        *out = Box::into_raw(Box::new(PedmapIndex(index)));
        PedmapStatus::Ok
    })
}

/// Find the node nearest to a query point. Returns
/// `PEDMAP_STATUS_NO_NODES` when the index is empty.
///
/// # Safety
/// `index` must come from this API and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pedmap_index_nearest(
    index: *const PedmapIndex,
    lat_deg: f64,
    lon_deg: f64,
    out: *mut PedmapNearest,
) -> PedmapStatus {
    guard(|| {
        if index.is_null() || out.is_null() {
            return fail(PedmapStatus::NullArgument, "null argument");
        }
        let query = match point_arg(lat_deg, lon_deg) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match (*index).0.nearest(query) {
            Ok(hit) => {
                *out = PedmapNearest {
                    node_index: hit.node_index,
                    distance_m: hit.distance_m,
                };
                PedmapStatus::Ok
            }
            Err(e @ SpatialIndexError::NoNodes) => fail(PedmapStatus::NoNodes, e),
        }
    })
}

/// Release an index. NULL is a no-op.
///
/// # Safety
/// `index` must come from this API and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pedmap_index_free(index: *mut PedmapIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Replay the drive log at `log_path` against `map` and write the advisory
/// JSON to `out_path`. NULL `params` selects the defaults.
///
/// # Safety
/// `map` must come from this API; paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pedmap_replay_to_file(
    map: *const PedmapMap,
    log_path: *const c_char,
    params: *const PedmapAdvisoryParams,
    out_path: *const c_char,
) -> PedmapStatus {
    guard(|| {
        if map.is_null() {
            return fail(PedmapStatus::NullArgument, "null map");
        }
        let log_path = match path_arg(log_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let out_path = match path_arg(out_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let params: AdvisoryParams = if params.is_null() {
            AdvisoryParams::default()
        } else {
            (*params).into()
        };
        let log = match load_drive_log(&log_path) {
            Ok(l) => l,
            Err(e) => return fail(drive_log_status(&e), e),
        };
        let run = match replay(&log, &(*map).0, &params) {
            Ok(r) => r,
            Err(e) => return fail(advisory_status(&e), e),
        };
        match save_output_file(&AdvisoryOutput::from_run(&run), &out_path) {
            Ok(()) => PedmapStatus::Ok,
            Err(e) => fail(advisory_status(&e), e),
        }
    })
}

/// Score the advisories at `advisories_path` against the ground truth at
/// `ground_truth_path` and write the report JSON to `report_path`.
///
/// # Safety
/// Paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn pedmap_evaluate_to_file(
    advisories_path: *const c_char,
    ground_truth_path: *const c_char,
    report_path: *const c_char,
) -> PedmapStatus {
    guard(|| {
        let advisories_path = match path_arg(advisories_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let ground_truth_path = match path_arg(ground_truth_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let report_path = match path_arg(report_path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let out = match load_output_file(&advisories_path) {
            Ok(o) => o,
            Err(e) => return fail(advisory_status(&e), e),
        };
        let gt = match load_ground_truth_file(&ground_truth_path) {
            Ok(g) => g,
            Err(e) => return fail(evaluation_status(&e), e),
        };
        let report = match evaluate_run(&out, &gt) {
            Ok(r) => r,
            Err(e) => return fail(evaluation_status(&e), e),
        };
        match std::fs::write(&report_path, report_to_json(&report)) {
            Ok(()) => PedmapStatus::Ok,
            Err(e) => fail(PedmapStatus::Io, e),
        }
    })
}
