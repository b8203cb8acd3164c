//! Decomposition of a building footprint into oriented rectangles.
//!
//! The segment mask is resampled into a frame whose rows run along the
//! dominant orientation, split along steep DSM gradients, covered with
//! maximal axis-aligned rectangles and finally merged by color and height
//! similarity.

mod inner;
mod merge;
mod presplit;
mod rotate;

pub use inner::{extract_max_inner_rectangles, largest_inner_rectangle, InnerRectParams};
pub use merge::{compute_edge_gap, merge_adjacent_rects, merge_features, MergeFeatures, MergeThresholds, EDGE_DEPTH_PX};
pub use presplit::{gradient_presplit, PresplitParams};
pub use rotate::{rotate_mask_to_axis, RotatedFrame, RotatedMask};

use serde::{Deserialize, Serialize};

use crate::geometry::{fold_pi, Point};
use crate::raster::{Mask, PixelBox, RasterF32, RasterRgb};
use crate::segment::BuildingSegment;

/// Rectangle in scene pixel coordinates. `theta` is the direction of the
/// long side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    pub len: f64,
    pub wid: f64,
    pub theta: f64,
}

impl OrientedRect {
    /// Builds a rectangle, swapping sides so that `len >= wid` and folding
    /// `theta` into `[0, pi)`.
    pub fn new(cx: f64, cy: f64, a: f64, b: f64, theta: f64) -> Self {
        let (len, wid, theta) = if a >= b {
            (a, b, theta)
        } else {
            (b, a, theta + std::f64::consts::FRAC_PI_2)
        };
        Self {
            cx,
            cy,
            len,
            wid,
            theta: fold_pi(theta),
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.len * self.wid
    }

    pub fn axes(&self) -> (Point, Point) {
        let u = Point::from_angle(self.theta);
        (u, u.perp())
    }

    /// Corner from which the local frame `x in [0, len]`, `y in [0, wid]`
    /// starts.
    pub fn origin(&self) -> Point {
        let (u, v) = self.axes();
        self.center() - u * (0.5 * self.len) - v * (0.5 * self.wid)
    }

    pub fn to_local(&self, p: Point) -> Point {
        let (u, v) = self.axes();
        let d = p - self.origin();
        Point::new(d.dot(u), d.dot(v))
    }

    pub fn from_local(&self, q: Point) -> Point {
        let (u, v) = self.axes();
        self.origin() + u * q.x + v * q.y
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.from_local(Point::new(0.0, 0.0)),
            self.from_local(Point::new(self.len, 0.0)),
            self.from_local(Point::new(self.len, self.wid)),
            self.from_local(Point::new(0.0, self.wid)),
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        let q = self.to_local(p);
        let eps = 1e-9;
        q.x >= -eps && q.x <= self.len + eps && q.y >= -eps && q.y <= self.wid + eps
    }

    /// Scene pixels whose centers fall inside the rectangle.
    pub fn pixels(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let cs = self.corners();
        let min_x = cs.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let min_y = cs.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let max_x = cs.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).ceil();
        let max_y = cs.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil();
        if max_x < 0.0 || max_y < 0.0 {
            return Vec::new();
        }
        let max_x = (max_x as usize).min(width.saturating_sub(1));
        let max_y = (max_y as usize).min(height.saturating_sub(1));
        let mut out = Vec::new();
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                if self.contains(Point::new(x as f64, y as f64)) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn rasterize(&self, mask: &mut Mask) {
        for (x, y) in self.pixels(mask.width(), mask.height()) {
            mask.set(x, y, true);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecomposeParams {
    pub presplit: PresplitParams,
    pub inner: InnerRectParams,
    pub merge: MergeThresholds,
}

/// Result of decomposing one segment.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub frame: RotatedFrame,
    /// Rectangles in rotated-frame cells, after merging.
    pub cells: Vec<PixelBox>,
    pub rects: Vec<OrientedRect>,
}

/// Full decomposition chain for one segment.
pub fn decompose_segment(
    segment: &BuildingSegment,
    dominant: f64,
    dsm: &RasterF32,
    ortho: &RasterRgb,
    params: &DecomposeParams,
) -> Decomposition {
    let rotated = rotate_mask_to_axis(segment, dominant);
    let frame = rotated.frame;
    let dsm_r = frame.sample_dsm(dsm);
    let rgb_r = frame.sample_rgb(ortho);
    let labels = gradient_presplit(&rotated.mask, &dsm_r, Some(&rgb_r), &params.presplit);
    let max_label = labels.as_slice().iter().copied().max().unwrap_or(0);
    let mut cells = Vec::new();
    for l in 1..=max_label {
        let part = labels.map(|&v| v == l);
        cells.extend(extract_max_inner_rectangles(&part, &params.inner));
    }
    let cells = merge_adjacent_rects(&cells, &dsm_r, &rgb_r, &params.merge);
    let rects = cells.iter().map(|c| frame.cell_rect_to_oriented(c)).collect();
    Decomposition { frame, cells, rects }
}

/// Pixel IoU between the union of rectangles and a mask.
pub fn iou_rects_vs_mask(rects: &[OrientedRect], mask: &Mask) -> crate::Result<f64> {
    let mut union = Mask::new(mask.width(), mask.height(), false);
    for r in rects {
        r.rasterize(&mut union);
    }
    let (mut inter, mut uni) = (0usize, 0usize);
    for (&a, &b) in union.as_slice().iter().zip(mask.as_slice()) {
        inter += usize::from(a && b);
        uni += usize::from(a || b);
    }
    if uni == 0 {
        return Err(crate::Error::EmptyInputs);
    }
    Ok(inter as f64 / uni as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::connected_components;
    use rand::{Rng, SeedableRng};

    #[test]
    fn oriented_rect_normalizes_sides() {
        let r = OrientedRect::new(0.0, 0.0, 4.0, 10.0, 0.0);
        assert_eq!((r.len, r.wid), (10.0, 4.0));
        assert!((r.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let q = r.to_local(r.from_local(Point::new(3.0, 1.5)));
        assert!((q.x - 3.0).abs() < 1e-12 && (q.y - 1.5).abs() < 1e-12);
    }

    #[test]
    fn axis_rect_pixels() {
        let r = OrientedRect::new(5.5, 3.0, 4.0, 3.0, 0.0);
        let px = r.pixels(20, 20);
        assert_eq!(px.len(), 12);
        assert!(px.contains(&(4, 2)) && px.contains(&(7, 4)));
    }

    #[test]
    fn iou_exact_tiling_and_disjoint() {
        let mut m = Mask::new(10, 10, false);
        for y in 2..5 {
            for x in 1..5 {
                m.set(x, y, true);
            }
        }
        let r = OrientedRect::new(2.5, 3.0, 4.0, 3.0, 0.0);
        assert_eq!(iou_rects_vs_mask(&[r], &m).unwrap(), 1.0);
        let far = OrientedRect::new(8.0, 8.0, 2.0, 2.0, 0.0);
        assert_eq!(iou_rects_vs_mask(&[far], &m).unwrap(), 0.0);
        assert!(iou_rects_vs_mask(&[], &Mask::new(3, 3, false)).is_err());
    }

    #[test]
    fn iou_matches_pixel_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let m = Mask::from_fn(30, 30, |_, _| rng.random_bool(0.4));
            let rects: Vec<_> = (0..3)
                .map(|_| {
                    OrientedRect::new(
                        rng.random_range(0.0..30.0),
                        rng.random_range(0.0..30.0),
                        rng.random_range(2.0..12.0),
                        rng.random_range(2.0..12.0),
                        rng.random_range(0.0..std::f64::consts::PI),
                    )
                })
                .collect();
            let (mut i, mut u) = (0, 0);
            for y in 0..30 {
                for x in 0..30 {
                    let p = Point::new(x as f64, y as f64);
                    let a = rects.iter().any(|r| {
                        let q = r.to_local(p);
                        q.x >= -1e-9 && q.x <= r.len + 1e-9 && q.y >= -1e-9 && q.y <= r.wid + 1e-9
                    });
                    let b = *m.get(x, y);
                    i += usize::from(a && b);
                    u += usize::from(a || b);
                }
            }
            assert_eq!(iou_rects_vs_mask(&rects, &m).unwrap(), i as f64 / u as f64);
        }
    }

    #[test]
    fn rotated_block_decomposes_to_one_rect() {
        let t = 25f64.to_radians();
        let truth = OrientedRect::new(40.0, 40.0, 40.0, 20.0, t);
        let mut m = Mask::new(80, 80, false);
        truth.rasterize(&mut m);
        let seg = connected_components(&m, 1).remove(0);
        let dsm = RasterF32::filled(80, 80, 10.0);
        let rgb = RasterRgb::filled(80, 80, [100, 100, 100]);
        let d = decompose_segment(&seg, t, &dsm, &rgb, &DecomposeParams::default());
        let iou = iou_rects_vs_mask(&d.rects, &m).unwrap();
        assert!(iou > 0.9, "iou {iou} rects {:?}", d.rects);
        let big = d.rects.iter().max_by(|a, b| a.area().total_cmp(&b.area())).unwrap();
        assert!((big.theta - t).abs() < 1e-9);
    }
}
