//! Snapping rectangle orientations to nearby road directions.

use std::f64::consts::FRAC_PI_2;

use crate::decompose::OrientedRect;
use crate::error::Result;
use crate::geo::GeoTransform;
use crate::geometry::{angle_diff_mod, point_segment_distance, Point};
use crate::io::RoadNetwork;
use crate::segment::BuildingSegment;

pub const DEFAULT_D_MAX_M: f64 = 30.0;
pub const DEFAULT_TOL_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    pub d_max_m: f64,
    pub tol_deg: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            d_max_m: DEFAULT_D_MAX_M,
            tol_deg: DEFAULT_TOL_DEG,
        }
    }
}

/// One straight piece of a road polyline, in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadSegment {
    pub polyline: usize,
    pub index: usize,
    pub a: Point,
    pub b: Point,
    pub distance_m: f64,
}

impl RoadSegment {
    /// Direction of the segment in scene pixel coordinates.
    pub fn pixel_angle(&self, geo: &GeoTransform) -> Result<f64> {
        let pa = geo.world_to_pixel(self.a)?;
        let pb = geo.world_to_pixel(self.b)?;
        let d = pb - pa;
        Ok(d.y.atan2(d.x))
    }
}

/// Closest road segment to the rectangle center, if within `d_max_m`.
/// Ties keep the lowest (polyline, segment) index.
pub fn nearest_road_segment(
    rect: &OrientedRect,
    roads: &RoadNetwork,
    geo: &GeoTransform,
    d_max_m: f64,
) -> Option<RoadSegment> {
    let c = geo.pixel_to_world(rect.center());
    let mut best: Option<RoadSegment> = None;
    for (pi, line) in roads.polylines.iter().enumerate() {
        for (si, w) in line.windows(2).enumerate() {
            let d = point_segment_distance(c, w[0], w[1]);
            if best.is_none_or(|b| d < b.distance_m) {
                best = Some(RoadSegment {
                    polyline: pi,
                    index: si,
                    a: w[0],
                    b: w[1],
                    distance_m: d,
                });
            }
        }
    }
    best.filter(|b| b.distance_m <= d_max_m)
}

/// Rotate `rect` onto the road direction when they agree within `tol_deg`
/// modulo 90 degrees. The extent is then re-measured from the spread of `source` pixels
/// (scene pixel centers); without source pixels the rectangle keeps its
/// size.
pub fn snap_rect_orientation(
    rect: &OrientedRect,
    road_angle: f64,
    tol_deg: f64,
    source: &[(usize, usize)],
) -> OrientedRect {
    if angle_diff_mod(rect.theta, road_angle, FRAC_PI_2) >= tol_deg.to_radians() {
        return *rect;
    }
    // road direction plus the multiple of 90 degrees closest to theta
    let k = ((rect.theta - road_angle) / FRAC_PI_2).round();
    let theta = road_angle + k * FRAC_PI_2;
    if source.is_empty() {
        return OrientedRect::new(rect.cx, rect.cy, rect.len, rect.wid, theta);
    }
    // a uniformly filled rectangle of side s has variance s^2 / 12 along
    // that side, whatever the pixel lattice orientation
    let u = Point::from_angle(theta);
    let v = u.perp();
    let n = source.len() as f64;
    let pts = source.iter().map(|&(x, y)| Point::new(x as f64, y as f64));
    let mean = pts.clone().fold(Point::new(0.0, 0.0), |a, p| a + p) * (1.0 / n);
    let (mut su, mut sv) = (0.0, 0.0);
    for p in pts {
        let d = p - mean;
        su += d.dot(u).powi(2);
        sv += d.dot(v).powi(2);
    }
    let side = |s: f64| (12.0 * s / n + 1.0).sqrt();
    OrientedRect::new(mean.x, mean.y, side(su), side(sv), theta)
}

/// Refine every rectangle of a segment; the source pixels of a rectangle
/// are the segment pixels it covers before snapping.
pub fn refine_rects(
    rects: &[OrientedRect],
    segment: &BuildingSegment,
    roads: &RoadNetwork,
    geo: &GeoTransform,
    params: &RefineParams,
) -> Result<Vec<OrientedRect>> {
    let mut out = Vec::with_capacity(rects.len());
    for r in rects {
        let Some(road) = nearest_road_segment(r, roads, geo, params.d_max_m) else {
            out.push(*r);
            continue;
        };
        let angle = road.pixel_angle(geo)?;
        let source: Vec<_> = segment
            .pixels()
            .filter(|&(x, y)| r.contains(Point::new(x as f64, y as f64)))
            .collect();
        out.push(snap_rect_orientation(r, angle, params.tol_deg, &source));
    }
    Ok(out)
}
