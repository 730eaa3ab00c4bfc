//! GeoJSON export for eyeballing maps and advisories in any viewer.
//!
//! Nodes become Point features colored by weight band; advisory episodes
//! become LineString features tracing the samples inside the episode span.

use crate::advisory::AdvisoryOutput;
use crate::hotspot_map::HotspotMap;
use serde_json::{json, Value};

/// simplestyle marker-color by weight: cool for rarely seen spots, hot for
/// frequent ones.
fn weight_color(weight: u64) -> &'static str {
    match weight {
        0..=2 => "#2b83ba",
        3..=9 => "#fdae61",
        _ => "#d7191c",
    }
}

/// Render a map, and optionally one replayed drive, as a GeoJSON
/// FeatureCollection. Output is deterministic for identical inputs.
pub fn map_to_geojson(map: &HotspotMap, advisories: Option<&AdvisoryOutput>) -> String {
    let mut features: Vec<Value> = map
        .nodes()
        .iter()
        .map(|n| {
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [n.pos.lon_deg(), n.pos.lat_deg()],
                },
                "properties": {
                    "kind": "hotspot",
                    "weight": n.weight,
                    "samples": n.samples,
                    "marker-color": weight_color(n.weight),
                },
            })
        })
        .collect();
    if let Some(out) = advisories {
        for ep in &out.episodes {
            let coords: Vec<Value> = out
                .samples
                .iter()
                .filter(|s| s.t >= ep.t_start && s.t <= ep.t_end)
                .map(|s| json!([s.pos.lon_deg(), s.pos.lat_deg()]))
                .collect();
            let geometry = match coords.len() {
                0 => continue,
                1 => json!({"type": "Point", "coordinates": coords[0]}),
                _ => json!({"type": "LineString", "coordinates": coords}),
            };
            features.push(json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "kind": "advisory-episode",
                    "clip_id": out.clip_id,
                    "t_start": ep.t_start,
                    "t_end": ep.t_end,
                    "stroke": "#d7191c",
                },
            }));
        }
    }
    let collection = json!({
        "type": "FeatureCollection",
        "features": features,
    });
    let mut text = serde_json::to_string_pretty(&collection).expect("geojson serializes");
    text.push('\n');
    text
}
