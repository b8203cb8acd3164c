use crate::decompose::OrientedRect;
use crate::geometry::Point;
use crate::raster::{Grid, Mask, PixelBox, RasterF32, RasterRgb};
use crate::segment::BuildingSegment;

/// Grid whose rows run along `theta`. Cell `(i, j)` has its center at
/// `pivot + R(theta) * (i - (width - 1) / 2, j - (height - 1) / 2)` in scene
/// pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedFrame {
    pub pivot: Point,
    pub theta: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone)]
pub struct RotatedMask {
    pub mask: Mask,
    pub frame: RotatedFrame,
}

impl RotatedFrame {
    /// Frame-local offset of cell coordinates (fractional allowed) from the pivot.
    fn local(&self, i: f64, j: f64) -> Point {
        Point::new(
            i - (self.width as f64 - 1.0) / 2.0,
            j - (self.height as f64 - 1.0) / 2.0,
        )
    }

    pub fn cell_to_scene(&self, i: f64, j: f64) -> Point {
        let l = self.local(i, j);
        let (s, c) = self.theta.sin_cos();
        self.pivot + Point::new(l.x * c - l.y * s, l.x * s + l.y * c)
    }

    /// Nearest scene pixel for cell `(i, j)`, if any.
    fn nearest(&self, i: usize, j: usize, w: usize, h: usize) -> Option<(usize, usize)> {
        let p = self.cell_to_scene(i as f64, j as f64);
        let (x, y) = ((p.x + 0.5).floor(), (p.y + 0.5).floor());
        if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
            None
        } else {
            Some((x as usize, y as usize))
        }
    }

    pub fn sample_dsm(&self, dsm: &RasterF32) -> Grid<Option<f64>> {
        Grid::from_fn(self.width, self.height, |i, j| {
            self.nearest(i, j, dsm.width(), dsm.height())
                .and_then(|(x, y)| dsm.valid(x, y))
        })
    }

    pub fn sample_rgb(&self, ortho: &RasterRgb) -> Grid<Option<[u8; 3]>> {
        Grid::from_fn(self.width, self.height, |i, j| {
            self.nearest(i, j, ortho.width(), ortho.height())
                .map(|(x, y)| ortho.pixel(x, y))
        })
    }

    /// Scene rectangle covered by the cells of `r` (cell edges included).
    pub fn cell_rect_to_oriented(&self, r: &PixelBox) -> OrientedRect {
        let ci = 0.5 * (r.x0 + r.x1) as f64 - 0.5;
        let cj = 0.5 * (r.y0 + r.y1) as f64 - 0.5;
        let c = self.cell_to_scene(ci, cj);
        OrientedRect::new(c.x, c.y, r.width() as f64, r.height() as f64, self.theta)
    }
}

/// Nearest-neighbor resampling of the segment mask into a frame aligned
/// with `theta`, pivoting on the center of the segment's bounding box.
pub fn rotate_mask_to_axis(segment: &BuildingSegment, theta: f64) -> RotatedMask {
    let (w, h) = segment.mask.dims();
    let (s, c) = theta.sin_cos();
    let extent = |a: f64, b: f64| ((a * c.abs() + b * s.abs()) - 1e-6).ceil().max(1.0) as usize;
    let frame = RotatedFrame {
        pivot: Point::new(
            segment.bbox.x0 as f64 + (w as f64 - 1.0) / 2.0,
            segment.bbox.y0 as f64 + (h as f64 - 1.0) / 2.0,
        ),
        theta,
        width: extent(w as f64, h as f64),
        height: extent(h as f64, w as f64),
    };
    let mask = Mask::from_fn(frame.width, frame.height, |i, j| {
        let p = frame.cell_to_scene(i as f64, j as f64);
        segment.contains((p.x + 0.5).floor() as i64, (p.y + 0.5).floor() as i64)
    });
    RotatedMask { mask, frame }
}
