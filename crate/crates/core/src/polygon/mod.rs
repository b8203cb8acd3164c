//! Building boundary vectorization and regularization.
//!
//! Rings live in scene pixel coordinates (x = column, y = row, pixel centers
//! on integers). "Counter-clockwise" means counter-clockwise as the raster is
//! displayed, with rows growing downward; [`Polygon::area`] is positive for
//! such rings.

mod lsd;
mod orientation;
mod regularize;
mod simplify;
mod snap;
mod trace;

pub use lsd::{detect_image_line_segments, LineSegment};
pub use orientation::{estimate_main_orientations, OrientationSet, ORIENTATION_BIN_DEG};
pub use regularize::{regularize_with_image_lines, LINE_ANGLE_GATE_DEG, LINE_DISTANCE_GATE_PX};
pub use simplify::simplify_dp;
pub use snap::{snap_and_merge_lines, JOG_RATIO};
pub use trace::trace_boundary;

use serde::{Deserialize, Serialize};

use crate::geometry::{is_simple, signed_area, Point};

pub const DEFAULT_DP_EPSILON: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Area, positive for counter-clockwise rings as displayed.
    pub fn area(&self) -> f64 {
        -signed_area(&self.vertices)
    }

    pub fn is_ccw(&self) -> bool {
        self.area() > 0.0
    }

    pub fn make_ccw(&mut self) {
        if self.area() < 0.0 {
            self.vertices.reverse();
        }
    }

    pub fn is_simple(&self) -> bool {
        is_simple(&self.vertices)
    }

    /// `(start, end)` of every edge, closing edge last.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}
