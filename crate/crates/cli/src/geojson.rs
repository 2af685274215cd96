//! GeoJSON point output for map consumption of ranked hotspots.

use std::path::Path;

use serde_json::json;

use hotgrid_core::grid::{CellId, GridSpec};

use crate::error::{CliError, CliResult};

/// Writes ranked hotspot cells as a FeatureCollection of centroid points
/// with `cell_id`, `rank`, and `score` properties.
pub fn write_hotspots_geojson(
    path: &Path,
    grid: &GridSpec,
    cells: &[CellId],
    scores: &[f64],
) -> CliResult<()> {
    let features: Vec<serde_json::Value> = cells
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(rank, (&cell, &score))| {
            let (x, y) = grid.centroid(cell);
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [x, y] },
                "properties": {
                    "cell_id": cell.0,
                    "rank": rank + 1,
                    "score": score,
                }
            })
        })
        .collect();
    let collection = json!({
        "type": "FeatureCollection",
        "features": features,
    });
    let text = serde_json::to_string_pretty(&collection)
        .map_err(|e| CliError::data("rank", format!("geojson: {e}")))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io("rank", parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io("rank", path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hotgrid_core::grid::{Bounds, MaskSource};

    #[test]
    fn output_is_valid_geojson_with_centroids() {
        let grid = GridSpec::new(
            Bounds { min_x: 0.0, min_y: 0.0, max_x: 400.0, max_y: 200.0 },
            200.0,
            MaskSource::AllEligible,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spots.geojson");
        write_hotspots_geojson(&path, &grid, &[CellId(1), CellId(0)], &[0.9, 0.4]).unwrap();
        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parsed["type"], "FeatureCollection");
        let features = parsed["features"].as_array().unwrap();
        assert_eq!(features.len(), 2);
        assert_eq!(features[0]["properties"]["cell_id"], 1);
        assert_eq!(features[0]["geometry"]["coordinates"][0], 300.0);
        assert_eq!(features[1]["properties"]["rank"], 2);
    }
}
