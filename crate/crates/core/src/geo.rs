//! World-file affine georeferencing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Six-parameter affine transform between pixel centers and world meters.
///
/// ```text
/// x = pixel_size_x * col + rot_x * row + origin_x
/// y = rot_y * col + pixel_size_y * row + origin_y
/// ```
///
/// `(origin_x, origin_y)` is the world position of the center of the
/// top-left pixel, as in a `.tfw` world file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub pixel_size_x: f64,
    pub rot_x: f64,
    pub rot_y: f64,
    pub pixel_size_y: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl GeoTransform {
    pub fn north_up(pixel_size: f64, origin_x: f64, origin_y: f64) -> Self {
        Self {
            pixel_size_x: pixel_size,
            rot_x: 0.0,
            rot_y: 0.0,
            pixel_size_y: -pixel_size,
            origin_x,
            origin_y,
        }
    }

    /// World-file order: A, D, B, E, C, F.
    pub fn from_world_file(v: [f64; 6]) -> Self {
        Self {
            pixel_size_x: v[0],
            rot_y: v[1],
            rot_x: v[2],
            pixel_size_y: v[3],
            origin_x: v[4],
            origin_y: v[5],
        }
    }

    pub fn to_world_file(&self) -> [f64; 6] {
        [
            self.pixel_size_x,
            self.rot_y,
            self.rot_x,
            self.pixel_size_y,
            self.origin_x,
            self.origin_y,
        ]
    }

    pub fn determinant(&self) -> f64 {
        self.pixel_size_x * self.pixel_size_y - self.rot_x * self.rot_y
    }

    /// Ground sampling distance along a pixel column.
    pub fn gsd(&self) -> f64 {
        self.pixel_size_x.hypot(self.rot_y)
    }

    pub fn validate(&self) -> Result<()> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-15 {
            return Err(Error::SingularTransform { det });
        }
        Ok(())
    }

    pub fn pixel_to_world(&self, p: Point) -> Point {
        Point::new(
            self.pixel_size_x * p.x + self.rot_x * p.y + self.origin_x,
            self.rot_y * p.x + self.pixel_size_y * p.y + self.origin_y,
        )
    }

    pub fn world_to_pixel(&self, w: Point) -> Result<Point> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-15 {
            return Err(Error::SingularTransform { det });
        }
        let dx = w.x - self.origin_x;
        let dy = w.y - self.origin_y;
        Ok(Point::new(
            (self.pixel_size_y * dx - self.rot_x * dy) / det,
            (-self.rot_y * dx + self.pixel_size_x * dy) / det,
        ))
    }
}

/// How pixel positions are expressed in output files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneFrame {
    pub geo: Option<GeoTransform>,
    /// Meters per pixel, used to convert roof insets.
    pub gsd: f64,
}

impl SceneFrame {
    pub fn pixels(gsd: f64) -> Self {
        Self { geo: None, gsd }
    }

    /// Output units per meter in the horizontal plane.
    pub fn units_per_meter(&self) -> f64 {
        match self.geo {
            Some(_) => 1.0,
            None => 1.0 / self.gsd,
        }
    }

    pub fn to_output(&self, p: Point) -> Point {
        match &self.geo {
            Some(g) => g.pixel_to_world(p),
            None => p,
        }
    }
}
