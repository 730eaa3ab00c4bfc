//! Crowdsourced pedestrian-hotspot mapping and look-ahead driver advisories.
//!
//! The pipeline: dashcam drives produce [`drive_log::DriveLog`]s of GPS
//! fixes plus per-frame pedestrian detections; [`hotspot_map::build_map`]
//! reduces each detection-bearing second to its median position and
//! clusters those into weighted hotspot nodes; [`advisory::replay`] then
//! runs a held-out drive against the map through a
//! [`spatial_index::SpatialIndex`], raising an advisory whenever the
//! nearest hotspot ahead is closer than the vehicle's stopping distance.
//! [`evaluation`] scores replayed advisories against ground-truth windows,
//! and [`scenario`] fabricates deterministic synthetic drives to test the
//! whole loop end to end.
//!
//! The `pedmap` binary exposes each stage as a subcommand; see its `--help`.

pub mod advisory;
pub mod drive_log;
pub mod evaluation;
pub mod geodesy;
pub mod geojson;
pub mod hotspot_map;
pub mod scenario;
pub mod spatial_index;

pub use advisory::{
    replay, stopping_distance, AdvisoryError, AdvisoryOutput, AdvisoryParams, AdvisoryRun,
};
pub use drive_log::{load_drive_log, DriveLog, DriveLogError};
pub use evaluation::{
    evaluate_aggregate, evaluate_run, EvalReport, EvaluationError, GroundTruth, GroundTruthWindow,
};
pub use geodesy::{haversine_distance, BearingDeg, GeoPoint, GeodesyError, EARTH_RADIUS_M};
pub use hotspot_map::{
    build_map, filter_by_weight, load_map_file, merge_maps, save_map_file, HotspotMap,
    HotspotMapError, HotspotNode,
};
pub use scenario::{generate, GeneratedScenario, ScenarioKind, ScenarioSpec};
pub use spatial_index::{NearestResult, SpatialIndex, SpatialIndexError};
