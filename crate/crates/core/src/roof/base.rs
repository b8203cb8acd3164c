use crate::raster::{percentile, RasterF32};
use crate::segment::BuildingSegment;

pub const BASE_RING_PX: usize = 3;
pub const BASE_PERCENTILE: f64 = 5.0;

/// Ground elevation around a building: a low percentile of the DSM in a
/// ring of non-building pixels around the segment, falling back to the
/// lowest DSM value inside the footprint.
pub fn estimate_base_height(segment: &BuildingSegment, dsm: &RasterF32) -> Option<f64> {
    let r = BASE_RING_PX as i64;
    let bbox = segment.bbox.expand(BASE_RING_PX, dsm.width(), dsm.height());
    let mut ring = Vec::new();
    for y in bbox.y0..bbox.y1 {
        for x in bbox.x0..bbox.x1 {
            let (xi, yi) = (x as i64, y as i64);
            if segment.contains(xi, yi) {
                continue;
            }
            let near = (-r..=r).any(|dy| (-r..=r).any(|dx| segment.contains(xi + dx, yi + dy)));
            if near {
                if let Some(z) = dsm.valid(x, y) {
                    ring.push(z);
                }
            }
        }
    }
    if let Some(z) = percentile(&mut ring, BASE_PERCENTILE) {
        return Some(z);
    }
    segment
        .pixels()
        .filter_map(|(x, y)| dsm.valid(x, y))
        .min_by(|a, b| a.total_cmp(b))
}
