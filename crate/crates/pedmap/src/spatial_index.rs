//! Exact nearest-neighbor search over hotspot nodes: a ball tree under the
//! haversine metric, plus a brute-force twin used as a correctness oracle.
//!
//! Each tree ball stores a centroid and a covering radius; because haversine
//! distance on a sphere satisfies the triangle inequality,
//! `d(query, centroid) - radius` lower-bounds the distance to every point
//! inside the ball, which makes branch-and-bound pruning exact, never
//! approximate. An advisory must not miss the true nearest hotspot.
//!
//! Construction: recursively split by the classic farthest-pair heuristic
//! (take the point farthest from the first point, then the point farthest
//! from THAT; partition by nearer pivot) until a ball holds at most
//! `leaf_capacity` points. The index snapshots the map's nodes; results
//! refer to indices in the indexed map's node list.

use crate::geodesy::{haversine_distance, GeoPoint};
use crate::hotspot_map::{HotspotMap, HotspotNode};
use thiserror::Error;

pub const DEFAULT_LEAF_CAPACITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SpatialIndexError {
    #[error("no nodes to query")]
    NoNodes,
}

/// The nearest node's index (into the indexed map's node list) and its
/// haversine distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestResult {
    pub node_index: usize,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Ball {
    centroid: GeoPoint,
    radius_m: f64,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialIndex {
    nodes: Vec<HotspotNode>,
    // Permutation of node indices, grouped so each ball covers order[start..end].
    order: Vec<u32>,
    balls: Vec<Ball>,
}

impl SpatialIndex {
    pub fn build(map: &HotspotMap, leaf_capacity: usize) -> Self {
        let leaf_capacity = leaf_capacity.max(1);
        let nodes = map.nodes().to_vec();
        let mut order: Vec<u32> = (0..nodes.len() as u32).collect();
        let mut balls = Vec::new();
        if !nodes.is_empty() {
            let n = nodes.len();
            build_ball(&nodes, &mut order, &mut balls, 0, n, leaf_capacity);
        }
        Self {
            nodes,
            order,
            balls,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, index: usize) -> &HotspotNode {
        &self.nodes[index]
    }

    pub fn nearest(&self, query: GeoPoint) -> Result<NearestResult, SpatialIndexError> {
        self.nearest_with_stats(query).map(|(r, _)| r)
    }

    /// Like [`nearest`](Self::nearest), also reporting how many haversine
    /// evaluations the search spent (centroid probes + leaf scans). A linear
    /// scan spends exactly `len()`, so the count exposes the pruning win.
    pub fn nearest_with_stats(
        &self,
        query: GeoPoint,
    ) -> Result<(NearestResult, usize), SpatialIndexError> {
        if self.nodes.is_empty() {
            return Err(SpatialIndexError::NoNodes);
        }
        let mut best = NearestResult {
            node_index: usize::MAX,
            distance_m: f64::INFINITY,
        };
        let mut evals = 0usize;
        self.search(0, query, &mut best, &mut evals);
        Ok((best, evals))
    }

    fn search(&self, ball: usize, query: GeoPoint, best: &mut NearestResult, evals: &mut usize) {
        let b = &self.balls[ball];
        match b.children {
            None => {
                for &ni in &self.order[b.start..b.end] {
                    let ni = ni as usize;
                    *evals += 1;
                    let d = haversine_distance(query, self.nodes[ni].pos);
                    if d < best.distance_m || (d == best.distance_m && ni < best.node_index) {
                        *best = NearestResult {
                            node_index: ni,
                            distance_m: d,
                        };
                    }
                }
            }
            Some((left, right)) => {
                let lb = |child: usize, evals: &mut usize| {
                    *evals += 1;
                    let c = &self.balls[child];
                    (haversine_distance(query, c.centroid) - c.radius_m).max(0.0)
                };
                let lb_left = lb(left, evals);
                let lb_right = lb(right, evals);
                let visits = if lb_left <= lb_right {
                    [(left, lb_left), (right, lb_right)]
                } else {
                    [(right, lb_right), (left, lb_left)]
                };
                for (child, bound) in visits {
                    // Strictly-greater prune keeps equal-distance candidates
                    // alive so ties resolve exactly like the brute scan.
                    if bound > best.distance_m {
                        continue;
                    }
                    self.search(child, query, best, evals);
                }
            }
        }
    }

    /// Structural audit used by tests: every node in exactly one leaf, every
    /// ball covering all its members.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            if !self.balls.is_empty() {
                return Err("empty index carries balls".into());
            }
            return Ok(());
        }
        let mut seen = vec![false; self.nodes.len()];
        for b in &self.balls {
            if b.start >= b.end {
                return Err(format!("ball covers empty range {}..{}", b.start, b.end));
            }
            for &ni in &self.order[b.start..b.end] {
                let d = haversine_distance(b.centroid, self.nodes[ni as usize].pos);
                if d > b.radius_m + 1e-9 {
                    return Err(format!(
                        "node {ni} at {d} m outside covering radius {} m",
                        b.radius_m
                    ));
                }
            }
            if let Some((l, r)) = b.children {
                let (bl, br) = (&self.balls[l], &self.balls[r]);
                if bl.start != b.start || br.end != b.end || bl.end != br.start {
                    return Err("children do not partition their parent".into());
                }
            } else {
                for &ni in &self.order[b.start..b.end] {
                    if seen[ni as usize] {
                        return Err(format!("node {ni} appears in two leaves"));
                    }
                    seen[ni as usize] = true;
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err("some node is in no leaf".into());
        }
        Ok(())
    }
}

fn ball_of(nodes: &[HotspotNode], members: &[u32], start: usize, end: usize) -> Ball {
    let count = (end - start) as f64;
    let mut lat = 0.0;
    let mut lon = 0.0;
    for &ni in members {
        lat += nodes[ni as usize].pos.lat_deg();
        lon += nodes[ni as usize].pos.lon_deg();
    }
    let centroid =
        GeoPoint::new(lat / count, lon / count).expect("mean of valid coordinates is valid");
    let radius_m = members
        .iter()
        .map(|&ni| haversine_distance(centroid, nodes[ni as usize].pos))
        .fold(0.0, f64::max);
    Ball {
        centroid,
        radius_m,
        start,
        end,
        children: None,
    }
}

fn build_ball(
    nodes: &[HotspotNode],
    order: &mut [u32],
    balls: &mut Vec<Ball>,
    start: usize,
    end: usize,
    leaf_capacity: usize,
) -> usize {
    let members: Vec<u32> = order[start..end].to_vec();
    let this = balls.len();
    balls.push(ball_of(nodes, &members, start, end));
    if members.len() <= leaf_capacity {
        return this;
    }

    let pos = |ni: u32| nodes[ni as usize].pos;
    let farthest_from = |p: GeoPoint| {
        let mut best = (members[0], -1.0f64);
        for &ni in &members {
            let d = haversine_distance(p, pos(ni));
            if d > best.1 {
                best = (ni, d);
            }
        }
        best
    };
    let (pivot_a, _) = farthest_from(pos(members[0]));
    let (pivot_b, spread) = farthest_from(pos(pivot_a));

    let (mut left, mut right) = (Vec::new(), Vec::new());
    if spread == 0.0 {
        // All members coincide; split by position to keep depth logarithmic.
        let mid = members.len().div_ceil(2);
        left.extend_from_slice(&members[..mid]);
        right.extend_from_slice(&members[mid..]);
    } else {
        let (pa, pb) = (pos(pivot_a), pos(pivot_b));
        for &ni in &members {
            // Ties go to pivot A; stable order keeps construction deterministic.
            if haversine_distance(pos(ni), pa) <= haversine_distance(pos(ni), pb) {
                left.push(ni);
            } else {
                right.push(ni);
            }
        }
    }
    debug_assert!(!left.is_empty() && !right.is_empty());
    let mid = start + left.len();
    order[start..mid].copy_from_slice(&left);
    order[mid..end].copy_from_slice(&right);

    let l = build_ball(nodes, order, balls, start, mid, leaf_capacity);
    let r = build_ball(nodes, order, balls, mid, end, leaf_capacity);
    balls[this].children = Some((l, r));
    this
}

/// Linear-scan twin of [`SpatialIndex::nearest`] with the identical tie rule
/// (lowest node index wins at equal distance).
pub fn brute_force_nearest(
    map: &HotspotMap,
    query: GeoPoint,
) -> Result<NearestResult, SpatialIndexError> {
    let mut best: Option<NearestResult> = None;
    for (i, n) in map.nodes().iter().enumerate() {
        let d = haversine_distance(query, n.pos);
        if best.is_none_or(|b| d < b.distance_m) {
            best = Some(NearestResult {
                node_index: i,
                distance_m: d,
            });
        }
    }
    best.ok_or(SpatialIndexError::NoNodes)
}
