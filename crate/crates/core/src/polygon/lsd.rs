//! Simplified line segment detector: gradient, region growing on level-line
//! angle, principal-axis fit, density gate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff_mod, fold_pi, Point};
use crate::raster::{PixelBox, RasterRgb};

const ANGLE_TOL: f64 = 22.5 * PI / 180.0;
const MIN_LENGTH: f64 = 10.0;
const MIN_DENSITY: f64 = 0.7;
const SMOOTH_SIGMA: f64 = 0.75;
const SMOOTH_RADIUS: i64 = 3;

/// A detected straight segment in scene pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub center: Point,
    /// Direction in `[0, pi)`.
    pub angle: f64,
    pub length: f64,
}

impl LineSegment {
    pub fn endpoints(&self) -> (Point, Point) {
        let h = Point::from_angle(self.angle) * (0.5 * self.length);
        (self.center - h, self.center + h)
    }
}

/// Gradient magnitude below which the orientation is dominated by 8-bit
/// quantization (q = 2 over the angle tolerance).
fn magnitude_threshold() -> f64 {
    2.0 / ANGLE_TOL.sin()
}

/// Gaussian-smoothed gray values of `region`; samples outside the raster
/// are clamped to its border. Smoothing removes the staircase of aliased
/// oblique edges, which would otherwise scatter the gradient angle.
fn smoothed_gray(ortho: &RasterRgb, region: PixelBox) -> Vec<f64> {
    let kernel: Vec<f64> = {
        let k: Vec<f64> = (-SMOOTH_RADIUS..=SMOOTH_RADIUS)
            .map(|i| (-(i * i) as f64 / (2.0 * SMOOTH_SIGMA * SMOOTH_SIGMA)).exp())
            .collect();
        let s: f64 = k.iter().sum();
        k.into_iter().map(|v| v / s).collect()
    };
    let gray = ortho.gray();
    let (iw, ih) = (ortho.width() as i64, ortho.height() as i64);
    let r = SMOOTH_RADIUS;
    let (w, h) = (region.width() as i64, region.height() as i64);
    let (x0, y0) = (region.x0 as i64, region.y0 as i64);
    // horizontal pass over the rows the vertical pass needs
    let rows = h + 2 * r;
    let mut tmp = vec![0.0; (rows * w) as usize];
    for ry in 0..rows {
        let y = (y0 - r + ry).clamp(0, ih - 1) as usize;
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let sx = (x0 + x + k as i64 - r).clamp(0, iw - 1) as usize;
                acc += kv * gray.get(sx, y);
            }
            tmp[(ry * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * tmp[((y + k as i64) * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

pub fn detect_image_line_segments(ortho: &RasterRgb, region: PixelBox) -> Vec<LineSegment> {
    let (w, h) = (region.width(), region.height());
    if w < 2 || h < 2 {
        return Vec::new();
    }
    let gray = smoothed_gray(ortho, region);
    // 2x2 gradient located at (x + 0.5, y + 0.5); the last row/column has none
    let (gw, gh) = (w - 1, h - 1);
    let mut mag = vec![0.0; gw * gh];
    let mut ang = vec![0.0; gw * gh];
    let at = |x: usize, y: usize| gray[y * w + x];
    for y in 0..gh {
        for x in 0..gw {
            let com1 = at(x + 1, y + 1) - at(x, y);
            let com2 = at(x + 1, y) - at(x, y + 1);
            let gx = 0.5 * (com1 + com2);
            let gy = 0.5 * (com1 - com2);
            mag[y * gw + x] = gx.hypot(gy);
            ang[y * gw + x] = gx.atan2(-gy);
        }
    }
    let rho = magnitude_threshold();
    let mut used: Vec<bool> = mag.iter().map(|&m| m <= rho).collect();
    let mut seeds: Vec<usize> = (0..gw * gh).filter(|&i| !used[i]).collect();
    seeds.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));

    let mut out = Vec::new();
    let mut region_px: Vec<usize> = Vec::new();
    for seed in seeds {
        if used[seed] {
            continue;
        }
        used[seed] = true;
        region_px.clear();
        region_px.push(seed);
        let (mut sx, mut sy) = (ang[seed].cos(), ang[seed].sin());
        let mut reg_angle = ang[seed];
        let mut k = 0;
        while k < region_px.len() {
            let i = region_px[k];
            k += 1;
            let (x, y) = ((i % gw) as i64, (i / gw) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= gw as i64 || ny >= gh as i64 {
                        continue;
                    }
                    let j = ny as usize * gw + nx as usize;
                    if used[j] || angle_diff_mod(ang[j], reg_angle, 2.0 * PI) > ANGLE_TOL {
                        continue;
                    }
                    used[j] = true;
                    region_px.push(j);
                    sx += ang[j].cos();
                    sy += ang[j].sin();
                    reg_angle = sy.atan2(sx);
                }
            }
        }
        if let Some(seg) = fit_region(&region_px, &mag, gw, reg_angle) {
            out.push(LineSegment {
                center: Point::new(
                    seg.center.x + region.x0 as f64 + 0.5,
                    seg.center.y + region.y0 as f64 + 0.5,
                ),
                ..seg
            });
        }
    }
    out
}

fn fit_region(px: &[usize], mag: &[f64], gw: usize, reg_angle: f64) -> Option<LineSegment> {
    if (px.len() as f64) < MIN_LENGTH * MIN_DENSITY {
        return None;
    }
    let pos = |i: usize| Point::new((i % gw) as f64, (i / gw) as f64);
    let wsum: f64 = px.iter().map(|&i| mag[i]).sum();
    let mut c = Point::new(0.0, 0.0);
    for &i in px {
        c = c + pos(i) * mag[i];
    }
    c = c * (1.0 / wsum);
    let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
    for &i in px {
        let d = pos(i) - c;
        ixx += mag[i] * d.x * d.x;
        iyy += mag[i] * d.y * d.y;
        ixy += mag[i] * d.x * d.y;
    }
    // principal axis of the weighted scatter
    let mut theta = 0.5 * (2.0 * ixy).atan2(ixx - iyy);
    // keep the axis that agrees with the level-line angle
    if angle_diff_mod(theta, reg_angle, PI) > PI / 4.0 {
        theta += PI / 2.0;
    }
    let (u, v) = (Point::from_angle(theta), Point::from_angle(theta + PI / 2.0));
    let (mut lmin, mut lmax, mut wmin, mut wmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &i in px {
        let d = pos(i) - c;
        let (l, w) = (d.dot(u), d.dot(v));
        lmin = lmin.min(l);
        lmax = lmax.max(l);
        wmin = wmin.min(w);
        wmax = wmax.max(w);
    }
    let length = lmax - lmin + 1.0;
    let width = wmax - wmin + 1.0;
    let density = px.len() as f64 / (length * width);
    if length < MIN_LENGTH || density < MIN_DENSITY {
        return None;
    }
    Some(LineSegment {
        center: c + u * (0.5 * (lmin + lmax)) + v * (0.5 * (wmin + wmax)),
        angle: fold_pi(theta),
        length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn full(img: &RasterRgb) -> PixelBox {
        PixelBox::new(0, 0, img.width(), img.height())
    }

    #[test]
    fn constant_image_has_no_lines() {
        let img = RasterRgb::filled(64, 64, [120, 120, 120]);
        assert!(detect_image_line_segments(&img, full(&img)).is_empty());
    }

    #[test]
    fn vertical_step_edge() {
        let mut img = RasterRgb::filled(100, 100, [40, 40, 40]);
        for y in 0..100 {
            for x in 50..100 {
                img.set_pixel(x, y, [200, 200, 200]);
            }
        }
        let segs = detect_image_line_segments(&img, full(&img));
        assert_eq!(segs.len(), 1, "{segs:?}");
        let s = segs[0];
        assert!(angle_diff_mod(s.angle, PI / 2.0, PI) < 1f64.to_radians());
        assert!((s.center.x - 49.5).abs() < 0.5);
        assert!(s.length > 90.0);
    }

    #[test]
    fn oblique_edge_angle() {
        let t = 30f64.to_radians();
        let n = Point::from_angle(t + PI / 2.0);
        let mut img = RasterRgb::filled(100, 100, [40, 40, 40]);
        for y in 0..100 {
            for x in 0..100 {
                if (Point::new(x as f64, y as f64) - Point::new(50.0, 50.0)).dot(n) > 0.0 {
                    img.set_pixel(x, y, [220, 220, 220]);
                }
            }
        }
        let segs = detect_image_line_segments(&img, full(&img));
        let best = segs.iter().max_by(|a, b| a.length.total_cmp(&b.length)).unwrap();
        assert!(angle_diff_mod(best.angle, t, PI) < 2f64.to_radians(), "{best:?}");
    }

    #[test]
    fn uniform_noise_yields_few_segments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let samples: Vec<u8> = (0..100 * 100 * 3).map(|_| rng.random()).collect();
            let img = RasterRgb::new(100, 100, samples);
            assert!(detect_image_line_segments(&img, full(&img)).len() <= 2);
        }
    }

    #[test]
    fn region_offset_is_applied() {
        let mut img = RasterRgb::filled(120, 80, [0, 0, 0]);
        for y in 0..80 {
            for x in 70..120 {
                img.set_pixel(x, y, [255, 255, 255]);
            }
        }
        let segs = detect_image_line_segments(&img, PixelBox::new(40, 10, 110, 70));
        assert_eq!(segs.len(), 1);
        assert!((segs[0].center.x - 69.5).abs() < 0.5);
    }
}
