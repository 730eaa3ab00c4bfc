//! Hotspot map building: median association, greedy clustering, merging,
//! weight filtering, and canonical persistence.
//!
//! A node's position is an EGO-VEHICLE position at which pedestrians were
//! detected, not a pedestrian position. The map answers "where was the car
//! when people were around", which is exactly the question the advisory
//! engine asks while driving; this surprises most readers once.
//!
//! Clustering is a greedy incremental ε-fold: each sample joins the nearest
//! node within `cluster_radius_m` (weighted-centroid update) or starts a new
//! node. Centroid drift means finished nodes are NOT guaranteed to sit ≥ ε
//! apart; the invariant that does hold is that every folded sample was within
//! ε of its node's position at fold time.

use crate::drive_log::{split_intervals, AssociationInterval, DriveLog};
use crate::geodesy::{haversine_distance, GeoPoint};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_CLUSTER_RADIUS_M: f64 = 5.0;

#[derive(Debug, Error)]
pub enum HotspotMapError {
    #[error("cluster radius mismatch: {0} vs {1}")]
    RadiusMismatch(f64, f64),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A clustered ego position where pedestrians were sighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotspotNode {
    pub pos: GeoPoint,
    /// Total pedestrian sightings folded in (≥ 1).
    pub weight: u64,
    /// Median samples folded in (≥ 1).
    pub samples: u64,
}

/// One second's pedestrian evidence: the median ego position over the
/// second's fixes and the interval's pedestrian count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianSample {
    pub pos: GeoPoint,
    pub ped_count: u32,
}

/// An immutable hotspot map. Nodes are held in canonical order (sorted by
/// lat, lon, then weight and samples), so equal maps serialize to equal bytes
/// and node indices are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct HotspotMap {
    cluster_radius_m: f64,
    source_clips: BTreeSet<String>,
    nodes: Vec<HotspotNode>,
}

impl HotspotMap {
    pub fn empty(cluster_radius_m: f64) -> Self {
        Self {
            cluster_radius_m,
            source_clips: BTreeSet::new(),
            nodes: Vec::new(),
        }
    }

    /// Assemble a map from parts, canonicalizing node order. Rejects
    /// non-positive radii and nodes violating weight/samples ≥ 1.
    pub fn from_parts(
        cluster_radius_m: f64,
        source_clips: impl IntoIterator<Item = String>,
        mut nodes: Vec<HotspotNode>,
    ) -> Result<Self, HotspotMapError> {
        if !cluster_radius_m.is_finite() || cluster_radius_m <= 0.0 {
            return Err(HotspotMapError::Format(format!(
                "cluster_radius_m must be positive, got {cluster_radius_m}"
            )));
        }
        for n in &nodes {
            if n.weight < 1 || n.samples < 1 {
                return Err(HotspotMapError::Format(format!(
                    "node at ({}, {}) has weight {} / samples {}; both must be ≥ 1",
                    n.pos.lat_deg(),
                    n.pos.lon_deg(),
                    n.weight,
                    n.samples
                )));
            }
        }
        canonicalize(&mut nodes);
        Ok(Self {
            cluster_radius_m,
            source_clips: source_clips.into_iter().collect(),
            nodes,
        })
    }

    pub fn nodes(&self) -> &[HotspotNode] {
        &self.nodes
    }

    pub fn cluster_radius_m(&self) -> f64 {
        self.cluster_radius_m
    }

    pub fn source_clips(&self) -> &BTreeSet<String> {
        &self.source_clips
    }

    pub fn total_weight(&self) -> u64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn canonicalize(nodes: &mut [HotspotNode]) {
    nodes.sort_by(|a, b| {
        a.pos
            .canonical_cmp(&b.pos)
            .then(a.weight.cmp(&b.weight))
            .then(a.samples.cmp(&b.samples))
    });
}

/// Componentwise median; even counts average the two middle values.
pub(crate) fn median_point(points: &[GeoPoint]) -> GeoPoint {
    debug_assert!(!points.is_empty());
    let mut lats: Vec<f64> = points.iter().map(|p| p.lat_deg()).collect();
    let mut lons: Vec<f64> = points.iter().map(|p| p.lon_deg()).collect();
    lats.sort_by(f64::total_cmp);
    lons.sort_by(f64::total_cmp);
    let mid = |v: &[f64]| {
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    };
    GeoPoint::new(mid(&lats), mid(&lons)).expect("median of valid points is valid")
}

/// Reduce intervals to per-second median samples. Seconds with no fixes or
/// no pedestrians contribute nothing.
pub fn associate(intervals: &[AssociationInterval]) -> Vec<MedianSample> {
    intervals
        .iter()
        .filter(|iv| !iv.fixes.is_empty() && iv.ped_count >= 1)
        .map(|iv| {
            let points: Vec<GeoPoint> = iv.fixes.iter().map(|f| f.pos).collect();
            MedianSample {
                pos: median_point(&points),
                ped_count: iv.ped_count,
            }
        })
        .collect()
}

/// Greedy ε-fold over (position, weight, samples) triples, in input order.
/// Weight and samples counts are conserved exactly.
fn greedy_fold(
    items: impl IntoIterator<Item = (GeoPoint, u64, u64)>,
    epsilon_m: f64,
) -> Vec<HotspotNode> {
    let mut nodes: Vec<HotspotNode> = Vec::new();
    for (pos, weight, samples) in items {
        if weight == 0 {
            continue;
        }
        // Nearest node scan; strict < keeps the lowest index on exact ties.
        let mut best: Option<(usize, f64)> = None;
        for (i, n) in nodes.iter().enumerate() {
            let d = haversine_distance(pos, n.pos);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, d)) if d <= epsilon_m => {
                let n = &mut nodes[i];
                let total = n.weight + weight;
                let blend =
                    |a: f64, b: f64| (a * n.weight as f64 + b * weight as f64) / total as f64;
                n.pos = GeoPoint::new(
                    blend(n.pos.lat_deg(), pos.lat_deg()),
                    blend(n.pos.lon_deg(), pos.lon_deg()),
                )
                .expect("weighted mean of valid points is valid");
                n.weight = total;
                n.samples += samples;
            }
            _ => nodes.push(HotspotNode {
                pos,
                weight,
                samples,
            }),
        }
    }
    nodes
}

/// Cluster median samples into a map. Samples with ped_count = 0 are skipped
/// (they carry no pedestrian evidence).
pub fn cluster(samples: &[MedianSample], epsilon_m: f64) -> HotspotMap {
    let mut nodes = greedy_fold(
        samples.iter().map(|s| (s.pos, s.ped_count as u64, 1)),
        epsilon_m,
    );
    canonicalize(&mut nodes);
    HotspotMap {
        cluster_radius_m: epsilon_m,
        source_clips: BTreeSet::new(),
        nodes,
    }
}

/// Build a map from whole logs: split, associate, and cluster, processing
/// logs in clip_id order so the result is independent of argument order.
pub fn build_map(logs: &[DriveLog], epsilon_m: f64) -> HotspotMap {
    let mut ordered: Vec<&DriveLog> = logs.iter().collect();
    ordered.sort_by(|a, b| a.clip_id().cmp(b.clip_id()));
    let mut samples = Vec::new();
    for log in &ordered {
        samples.extend(associate(&split_intervals(log)));
    }
    let mut map = cluster(&samples, epsilon_m);
    map.source_clips = ordered.iter().map(|l| l.clip_id().to_string()).collect();
    map
}

/// Merge two maps built with the same radius by re-clustering the union of
/// their nodes, each treated as a sample carrying its weight and samples
/// count. Nodes are processed sorted by (lat, lon, weight) so the merge is
/// deterministic; total weight is conserved.
pub fn merge_maps(a: &HotspotMap, b: &HotspotMap) -> Result<HotspotMap, HotspotMapError> {
    if a.cluster_radius_m != b.cluster_radius_m {
        return Err(HotspotMapError::RadiusMismatch(
            a.cluster_radius_m,
            b.cluster_radius_m,
        ));
    }
    let mut items: Vec<(GeoPoint, u64, u64)> = a
        .nodes
        .iter()
        .chain(b.nodes.iter())
        .map(|n| (n.pos, n.weight, n.samples))
        .collect();
    items.sort_by(|x, y| {
        x.0.canonical_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut nodes = greedy_fold(items, a.cluster_radius_m);
    canonicalize(&mut nodes);
    Ok(HotspotMap {
        cluster_radius_m: a.cluster_radius_m,
        source_clips: a.source_clips.union(&b.source_clips).cloned().collect(),
        nodes,
    })
}

/// Keep only nodes with weight ≥ min_weight. min_weight = 1 is the "has ever
/// crossed here" end of the advisory spectrum; higher values demand repeated
/// evidence.
pub fn filter_by_weight(map: &HotspotMap, min_weight: u64) -> HotspotMap {
    HotspotMap {
        cluster_radius_m: map.cluster_radius_m,
        source_clips: map.source_clips.clone(),
        nodes: map
            .nodes
            .iter()
            .filter(|n| n.weight >= min_weight)
            .copied()
            .collect(),
    }
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    cluster_radius_m: f64,
    source_clips: Vec<String>,
    nodes: Vec<NodeRow>,
}

#[derive(Serialize, Deserialize)]
struct NodeRow {
    lat: f64,
    lon: f64,
    weight: u64,
    samples: u64,
}

/// Canonical JSON form: clips sorted, nodes sorted by (lat, lon). Byte
/// equality of two saved maps implies map equality.
pub fn save_map(map: &HotspotMap) -> String {
    let file = MapFile {
        cluster_radius_m: map.cluster_radius_m,
        source_clips: map.source_clips.iter().cloned().collect(),
        nodes: map
            .nodes
            .iter()
            .map(|n| NodeRow {
                lat: n.pos.lat_deg(),
                lon: n.pos.lon_deg(),
                weight: n.weight,
                samples: n.samples,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("map serializes");
    out.push('\n');
    out
}

pub fn load_map(content: &str) -> Result<HotspotMap, HotspotMapError> {
    let file: MapFile =
        serde_json::from_str(content).map_err(|e| HotspotMapError::Format(e.to_string()))?;
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for row in &file.nodes {
        let pos =
            GeoPoint::new(row.lat, row.lon).map_err(|e| HotspotMapError::Format(e.to_string()))?;
        nodes.push(HotspotNode {
            pos,
            weight: row.weight,
            samples: row.samples,
        });
    }
    HotspotMap::from_parts(file.cluster_radius_m, file.source_clips, nodes)
}

pub fn save_map_file(map: &HotspotMap, path: &Path) -> Result<(), HotspotMapError> {
    std::fs::write(path, save_map(map))?;
    Ok(())
}

pub fn load_map_file(path: &Path) -> Result<HotspotMap, HotspotMapError> {
    load_map(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive_log::{DetectionFrame, GpsFix};
    use crate::geodesy::{destination_point, BearingDeg};
    use proptest::prelude::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn east_of(origin: GeoPoint, meters: f64) -> GeoPoint {
        destination_point(origin, BearingDeg::new(90.0), meters)
    }

    fn sample(pos: GeoPoint, ped_count: u32) -> MedianSample {
        MedianSample { pos, ped_count }
    }

    fn interval(k: u64, fixes: Vec<GpsFix>, ped_count: u32) -> AssociationInterval {
        AssociationInterval {
            k,
            fixes,
            ped_count,
        }
    }

    fn fix_at(t: f64, lat: f64, lon: f64) -> GpsFix {
        GpsFix {
            t,
            pos: p(lat, lon),
            speed_kmh: None,
        }
    }

    #[test]
    fn associate_takes_componentwise_median() {
        let iv = interval(
            0,
            vec![
                fix_at(0.0, 1.0, 10.0),
                fix_at(0.3, 2.0, 20.0),
                fix_at(0.6, 3.0, 30.0),
            ],
            2,
        );
        let samples = associate(&[iv]);
        assert_eq!(samples, vec![sample(p(2.0, 20.0), 2)]);
    }

    #[test]
    fn associate_even_count_averages_middle_pair() {
        let iv = interval(
            0,
            vec![
                fix_at(0.0, 1.0, 0.0),
                fix_at(0.2, 2.0, 0.0),
                fix_at(0.4, 3.0, 0.0),
                fix_at(0.6, 4.0, 0.0),
            ],
            1,
        );
        assert_eq!(associate(&[iv])[0].pos.lat_deg(), 2.5);
    }

    #[test]
    fn associate_skips_empty_and_pedestrian_free_intervals() {
        let quiet = interval(0, vec![fix_at(0.0, 0.0, 0.0)], 0);
        let gps_gap = interval(1, vec![], 3);
        assert!(associate(&[quiet, gps_gap]).is_empty());
    }

    #[test]
    fn cluster_merges_within_epsilon() {
        let origin = p(32.0, -117.0);
        let map = cluster(&[sample(origin, 1), sample(east_of(origin, 1.0), 2)], 5.0);
        assert_eq!(map.nodes().len(), 1);
        assert_eq!(map.nodes()[0].weight, 3);
        assert_eq!(map.nodes()[0].samples, 2);
    }

    #[test]
    fn cluster_keeps_distant_samples_apart() {
        let origin = p(32.0, -117.0);
        let map = cluster(&[sample(origin, 1), sample(east_of(origin, 100.0), 1)], 5.0);
        assert_eq!(map.nodes().len(), 2);
    }

    #[test]
    fn cluster_greedy_hand_trace() {
        // Samples at 0 m, 4 m, 8 m east: the first two fold (centroid ~2 m),
        // the third is ~6 m from that centroid, so it opens a second node.
        let origin = p(0.0, 0.0);
        let map = cluster(
            &[
                sample(origin, 1),
                sample(east_of(origin, 4.0), 1),
                sample(east_of(origin, 8.0), 1),
            ],
            5.0,
        );
        assert_eq!(map.nodes().len(), 2);
        let near = &map.nodes()[0];
        assert_eq!(near.weight, 2);
        let d = haversine_distance(origin, near.pos);
        assert!((d - 2.0).abs() < 0.01, "centroid at {d} m");
    }

    fn burst_log(clip: &str, origin: GeoPoint, ped_second: u64) -> DriveLog {
        // 4 seconds at 2 Hz along a street, detections in one second.
        let fixes: Vec<GpsFix> = (0..8)
            .map(|i| GpsFix {
                t: i as f64 * 0.5,
                pos: east_of(origin, i as f64 * 2.0),
                speed_kmh: Some(14.4),
            })
            .collect();
        let dets = vec![
            DetectionFrame {
                t: ped_second as f64 + 0.1,
                ped_count: 1,
            },
            DetectionFrame {
                t: ped_second as f64 + 0.5,
                ped_count: 1,
            },
        ];
        DriveLog::new(clip, fixes, dets).unwrap()
    }

    #[test]
    fn build_map_matches_cluster_of_concatenated_samples() {
        let origin = p(32.0, -117.0);
        let logs = vec![
            burst_log("b-clip", origin, 1),
            burst_log("a-clip", origin, 2),
        ];
        let map = build_map(&logs, 5.0);
        // clip_id order: a-clip first.
        let mut samples = Vec::new();
        samples.extend(associate(&split_intervals(&logs[1])));
        samples.extend(associate(&split_intervals(&logs[0])));
        let expected = cluster(&samples, 5.0);
        assert_eq!(map.nodes(), expected.nodes());
        assert_eq!(
            map.source_clips().iter().cloned().collect::<Vec<_>>(),
            vec!["a-clip".to_string(), "b-clip".to_string()]
        );
    }

    #[test]
    fn ingesting_a_clip_twice_doubles_node_weights() {
        let origin = p(32.0, -117.0);
        let once = build_map(&[burst_log("c", origin, 1)], 5.0);
        let twice = build_map(&[burst_log("c", origin, 1), burst_log("c", origin, 1)], 5.0);
        assert_eq!(once.nodes().len(), twice.nodes().len());
        for (a, b) in once.nodes().iter().zip(twice.nodes()) {
            assert_eq!(b.weight, 2 * a.weight);
        }
        assert_eq!(twice.source_clips().len(), 1);
    }

    #[test]
    fn no_detections_yields_empty_map() {
        let origin = p(32.0, -117.0);
        let fixes: Vec<GpsFix> = (0..4)
            .map(|i| GpsFix {
                t: i as f64,
                pos: east_of(origin, i as f64),
                speed_kmh: None,
            })
            .collect();
        let log = DriveLog::new("quiet", fixes, vec![]).unwrap();
        assert!(build_map(&[log], 5.0).is_empty());
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let origin = p(32.0, -117.0);
        let map = cluster(&[sample(origin, 2), sample(east_of(origin, 100.0), 3)], 5.0);
        let merged = merge_maps(&map, &HotspotMap::empty(5.0)).unwrap();
        assert_eq!(merged, map);
        let merged = merge_maps(&HotspotMap::empty(5.0), &map).unwrap();
        assert_eq!(merged, map);
    }

    #[test]
    fn merge_conserves_weight_and_unions_clips() {
        let origin = p(32.0, -117.0);
        let a = build_map(&[burst_log("clip-a", origin, 1)], 5.0);
        let b = build_map(&[burst_log("clip-b", east_of(origin, 50.0), 2)], 5.0);
        let merged = merge_maps(&a, &b).unwrap();
        assert_eq!(merged.total_weight(), a.total_weight() + b.total_weight());
        assert_eq!(merged.source_clips().len(), 2);
    }

    #[test]
    fn merge_folds_coincident_nodes() {
        let origin = p(32.0, -117.0);
        let a = cluster(&[sample(origin, 2)], 5.0);
        let b = cluster(&[sample(origin, 3)], 5.0);
        let merged = merge_maps(&a, &b).unwrap();
        assert_eq!(merged.nodes().len(), 1);
        assert_eq!(merged.nodes()[0].weight, 5);
        assert_eq!(merged.nodes()[0].samples, 2);
    }

    #[test]
    fn merge_rejects_radius_mismatch() {
        let a = HotspotMap::empty(5.0);
        let b = HotspotMap::empty(4.0);
        assert!(matches!(
            merge_maps(&a, &b),
            Err(HotspotMapError::RadiusMismatch(_, _))
        ));
    }

    #[test]
    fn filter_by_weight_cases() {
        let origin = p(32.0, -117.0);
        let nodes = vec![
            HotspotNode {
                pos: origin,
                weight: 1,
                samples: 1,
            },
            HotspotNode {
                pos: east_of(origin, 50.0),
                weight: 3,
                samples: 2,
            },
            HotspotNode {
                pos: east_of(origin, 100.0),
                weight: 5,
                samples: 3,
            },
        ];
        let map = HotspotMap::from_parts(5.0, ["c".to_string()], nodes).unwrap();
        assert_eq!(filter_by_weight(&map, 1), map);
        assert_eq!(filter_by_weight(&map, 3).nodes().len(), 2);
        assert!(filter_by_weight(&map, 6).is_empty());
    }

    #[test]
    fn save_load_round_trip_and_byte_stability() {
        let origin = p(32.0, -117.0);
        let map = build_map(
            &[
                burst_log("clip-a", origin, 1),
                burst_log("clip-b", east_of(origin, 40.0), 2),
            ],
            5.0,
        );
        let bytes = save_map(&map);
        assert_eq!(load_map(&bytes).unwrap(), map);
        assert_eq!(save_map(&load_map(&bytes).unwrap()), bytes);

        let empty = save_map(&HotspotMap::empty(5.0));
        assert!(load_map(&empty).unwrap().is_empty());
    }

    #[test]
    fn load_rejects_corrupt_input() {
        assert!(matches!(
            load_map("not json"),
            Err(HotspotMapError::Format(_))
        ));
        let zero_weight = r#"{"cluster_radius_m":5.0,"source_clips":[],"nodes":[{"lat":0.0,"lon":0.0,"weight":0,"samples":1}]}"#;
        assert!(matches!(
            load_map(zero_weight),
            Err(HotspotMapError::Format(_))
        ));
        let bad_lat = r#"{"cluster_radius_m":5.0,"source_clips":[],"nodes":[{"lat":95.0,"lon":0.0,"weight":1,"samples":1}]}"#;
        assert!(matches!(load_map(bad_lat), Err(HotspotMapError::Format(_))));
        let bad_radius = r#"{"cluster_radius_m":0.0,"source_clips":[],"nodes":[]}"#;
        assert!(matches!(
            load_map(bad_radius),
            Err(HotspotMapError::Format(_))
        ));
    }

    #[test]
    fn nodes_are_canonically_ordered() {
        let origin = p(32.0, -117.0);
        let scattered = vec![
            sample(east_of(origin, 200.0), 1),
            sample(origin, 1),
            sample(east_of(origin, 100.0), 1),
        ];
        let map = cluster(&scattered, 5.0);
        for pair in map.nodes().windows(2) {
            assert!(pair[0].pos.canonical_cmp(&pair[1].pos).is_le());
        }
    }

    fn arb_samples() -> impl Strategy<Value = Vec<MedianSample>> {
        proptest::collection::vec(
            (-0.002..0.002f64, -0.002..0.002f64, 1u32..4)
                .prop_map(|(dlat, dlon, c)| sample(p(32.0 + dlat, -117.0 + dlon), c)),
            0..40,
        )
    }

    proptest! {
        #[test]
        fn cluster_conserves_weight_and_samples(samples in arb_samples(), eps in 1.0..50.0f64) {
            let map = cluster(&samples, eps);
            let total: u64 = samples.iter().map(|s| s.ped_count as u64).sum();
            prop_assert_eq!(map.total_weight(), total);
            let folded: u64 = map.nodes().iter().map(|n| n.samples).sum();
            prop_assert_eq!(folded, samples.len() as u64);
            for n in map.nodes() {
                prop_assert!(n.weight >= n.samples.min(n.weight));
                prop_assert!(n.weight >= 1 && n.samples >= 1);
            }
        }

        #[test]
        fn merge_conserves_weight(sa in arb_samples(), sb in arb_samples(), eps in 1.0..20.0f64) {
            let a = cluster(&sa, eps);
            let b = cluster(&sb, eps);
            let merged = merge_maps(&a, &b).unwrap();
            prop_assert_eq!(merged.total_weight(), a.total_weight() + b.total_weight());
        }

        #[test]
        fn filter_monotone(samples in arb_samples(), lo in 1u64..3, delta in 1u64..3) {
            let map = cluster(&samples, 5.0);
            let loose = filter_by_weight(&map, lo);
            let strict = filter_by_weight(&map, lo + delta);
            for n in strict.nodes() {
                prop_assert!(loose.nodes().contains(n));
            }
        }

        #[test]
        fn save_load_round_trip(samples in arb_samples()) {
            let map = cluster(&samples, 5.0);
            prop_assert_eq!(load_map(&save_map(&map)).unwrap(), map);
        }
    }
}
