//! In-memory raster containers.
//!
//! All rasters are row-major, top row first. Pixel `(x, y)` is column `x`,
//! row `y`; its center sits at the integer coordinate `(x, y)` and it covers
//! `[x - 0.5, x + 0.5] x [y - 0.5, y + 0.5]`.

use serde::{Deserialize, Serialize};

/// Dense 2-D grid of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type Mask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "grid data length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Copy> Grid<T> {
    /// Value at signed coordinates, `None` outside the grid.
    #[inline]
    pub fn at(&self, x: i64, y: i64) -> Option<T> {
        if self.in_bounds(x, y) {
            Some(self.data[y as usize * self.width + x as usize])
        } else {
            None
        }
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn is_set(&self, x: i64, y: i64) -> bool {
        self.at(x, y).unwrap_or(false)
    }

    /// Tight bounding box of set pixels, `None` when empty.
    pub fn bounds(&self) -> Option<PixelBox> {
        let mut bb: Option<PixelBox> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if *self.get(x, y) {
                    bb = Some(match bb {
                        None => PixelBox::new(x, y, x + 1, y + 1),
                        Some(b) => b.include(x, y),
                    });
                }
            }
        }
        bb
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelBox {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn include(self, x: usize, y: usize) -> Self {
        Self {
            x0: self.x0.min(x),
            y0: self.y0.min(y),
            x1: self.x1.max(x + 1),
            y1: self.y1.max(y + 1),
        }
    }

    /// Grow by `margin` on every side, clipped to `width x height`.
    pub fn expand(&self, margin: usize, width: usize, height: usize) -> Self {
        Self {
            x0: self.x0.saturating_sub(margin),
            y0: self.y0.saturating_sub(margin),
            x1: (self.x1 + margin).min(width),
            y1: (self.y1 + margin).min(height),
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// 8-bit, 3-band interleaved image.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterRgb {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl RasterRgb {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "empty raster");
        assert_eq!(samples.len(), width * height * 3, "rgb sample count");
        Self {
            width,
            height,
            samples,
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut samples = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            samples.extend_from_slice(&rgb);
        }
        Self::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.samples[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Luma as `f64` in 0..=255 (ITU-R BT.601 weights).
    pub fn gray(&self) -> Grid<f64> {
        Grid::from_fn(self.width, self.height, |x, y| {
            let [r, g, b] = self.pixel(x, y);
            0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
        })
    }
}

/// Single-band height raster in meters with a nodata sentinel.
///
/// `cellsize`, `xllcorner` and `yllcorner` carry the ESRI ASCII grid header
/// so a loaded DSM can be written back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterF32 {
    width: usize,
    height: usize,
    samples: Vec<f32>,
    pub nodata: f32,
    pub cellsize: f64,
    pub xllcorner: f64,
    pub yllcorner: f64,
}

pub const DEFAULT_NODATA: f32 = -9999.0;

impl RasterF32 {
    pub fn new(width: usize, height: usize, samples: Vec<f32>, nodata: f32) -> Self {
        assert!(width >= 1 && height >= 1, "empty raster");
        assert_eq!(samples.len(), width * height, "dsm sample count");
        Self {
            width,
            height,
            samples,
            nodata,
            cellsize: 1.0,
            xllcorner: 0.0,
            yllcorner: 0.0,
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::new(width, height, vec![value; width * height], DEFAULT_NODATA)
    }

    pub fn with_header(mut self, cellsize: f64, xllcorner: f64, yllcorner: f64) -> Self {
        self.cellsize = cellsize;
        self.xllcorner = xllcorner;
        self.yllcorner = yllcorner;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f32 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.samples[y * self.width + x] = v;
    }

    /// Height at `(x, y)` if the cell holds a finite, non-nodata value.
    #[inline]
    pub fn valid(&self, x: usize, y: usize) -> Option<f64> {
        let v = self.samples[y * self.width + x];
        if v.is_finite() && v != self.nodata {
            Some(v as f64)
        } else {
            None
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }
}

/// Linear-interpolated percentile (`p` in 0..=100) of unsorted values.
pub fn percentile(values: &mut [f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let rank = (p / 100.0).clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let t = rank - lo as f64;
    Some(values[lo] + (values[hi] - values[lo]) * t)
}
