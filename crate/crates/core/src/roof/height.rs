use crate::decompose::OrientedRect;
use crate::error::Result;
use crate::geometry::Point;
use crate::raster::{PixelBox, RasterF32, DEFAULT_NODATA};
use crate::roof::{RoofKind, RoofParams};

/// `a / b`, reading a zero inset as "no slope from that side".
#[inline]
fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        f64::INFINITY
    }
}

/// Roof height at local position `(x, y)` meters, `x` along the length
/// `l`, `y` across the width `w`.
pub fn roof_height(kind: RoofKind, p: &RoofParams, l: f64, w: f64, x: f64, y: f64) -> f64 {
    let rise = p.z_ridge - p.z_eave;
    let across = (2.0 * y / w).min(2.0 * (w - y) / w);
    let s = match kind {
        RoofKind::Flat => 0.0,
        RoofKind::Gable => 1.0 - (2.0 * y / w - 1.0).abs(),
        RoofKind::Hip => across.min(ratio(x, p.hipl)).min(ratio(l - x, p.hipl)),
        RoofKind::Pyramid => across.min(2.0 * x / l).min(2.0 * (l - x) / l),
        RoofKind::Mansard => 1f64
            .min(ratio(x, p.hipl))
            .min(ratio(l - x, p.hipl))
            .min(ratio(y, p.hipw))
            .min(ratio(w - y, p.hipw)),
    };
    p.z_eave + rise * s.clamp(0.0, 1.0)
}

/// Modelled heights over the scene pixels covered by a rectangle; cells of
/// the bounding box outside the rectangle hold nodata.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofRaster {
    pub bbox: PixelBox,
    pub raster: RasterF32,
}

/// Evaluate a roof model at every scene pixel center inside `rect`
/// (pixel units), with `gsd` meters per pixel.
pub fn synthesize_roof_height(
    kind: RoofKind,
    params: &RoofParams,
    rect: &OrientedRect,
    gsd: f64,
    scene_w: usize,
    scene_h: usize,
) -> Result<RoofRaster> {
    let (l, w) = (rect.len * gsd, rect.wid * gsd);
    params.validate(kind, l, w)?;
    let px = rect.pixels(scene_w, scene_h);
    let mut bbox = match px.first() {
        Some(&(x, y)) => PixelBox::new(x, y, x + 1, y + 1),
        None => PixelBox::new(0, 0, 1, 1),
    };
    for &(x, y) in &px {
        bbox = bbox.include(x, y);
    }
    let mut raster = RasterF32::new(
        bbox.width(),
        bbox.height(),
        vec![DEFAULT_NODATA; bbox.area()],
        DEFAULT_NODATA,
    );
    for (x, y) in px {
        let q = rect.to_local(Point::new(x as f64, y as f64));
        let (lx, ly) = ((q.x * gsd).clamp(0.0, l), (q.y * gsd).clamp(0.0, w));
        raster.set(x - bbox.x0, y - bbox.y0, roof_height(kind, params, l, w, lx, ly) as f32);
    }
    Ok(RoofRaster { bbox, raster })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(z_e: f64, z_r: f64, hipl: f64, hipw: f64) -> RoofParams {
        RoofParams {
            z_ridge: z_r,
            z_eave: z_e,
            hipl,
            hipw,
        }
    }

    #[test]
    fn flat_is_constant() {
        let r = OrientedRect::new(20.0, 20.0, 16.0, 10.0, 0.3);
        let out = synthesize_roof_height(RoofKind::Flat, &params(10.0, 10.0, 0.0, 0.0), &r, 0.5, 40, 40).unwrap();
        assert!(out.raster.samples().iter().all(|&v| v == 10.0 || v == DEFAULT_NODATA));
    }

    #[test]
    fn gable_endpoints() {
        let p = params(8.0, 12.0, 0.0, 0.0);
        assert_eq!(roof_height(RoofKind::Gable, &p, 20.0, 10.0, 3.0, 5.0), 12.0);
        assert_eq!(roof_height(RoofKind::Gable, &p, 20.0, 10.0, 3.0, 0.0), 8.0);
        assert_eq!(roof_height(RoofKind::Gable, &p, 20.0, 10.0, 3.0, 10.0), 8.0);
    }

    #[test]
    fn hip_at_half_length_is_pyramid() {
        let r = OrientedRect::new(30.0, 30.0, 36.0, 20.0, 0.7);
        let l = r.len * 0.5;
        let hip = synthesize_roof_height(RoofKind::Hip, &params(5.0, 9.0, l / 2.0, 0.0), &r, 0.5, 60, 60).unwrap();
        let pyr = synthesize_roof_height(RoofKind::Pyramid, &params(5.0, 9.0, 0.0, 0.0), &r, 0.5, 60, 60).unwrap();
        assert_eq!(hip, pyr);
    }

    #[test]
    fn invalid_params_rejected() {
        let r = OrientedRect::new(10.0, 10.0, 10.0, 6.0, 0.0);
        let e = synthesize_roof_height(RoofKind::Gable, &params(10.0, 9.0, 0.0, 0.0), &r, 1.0, 20, 20);
        assert!(matches!(e, Err(crate::Error::InvalidParams(_))));
        let e = synthesize_roof_height(RoofKind::Hip, &params(1.0, 2.0, 6.0, 0.0), &r, 1.0, 20, 20);
        assert!(e.is_err());
    }

    #[test]
    fn heights_bounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let (l, w) = (rng.random_range(5.0..40.0), rng.random_range(3.0..20.0f64));
            let z_e = rng.random_range(0.0..50.0);
            let p = params(z_e, z_e + rng.random_range(0.0..8.0), rng.random_range(0.0..l / 2.0), rng.random_range(0.0..w / 2.0));
            for kind in RoofKind::ALL {
                let p = if kind == RoofKind::Flat { params(z_e, z_e, 0.0, 0.0) } else { p };
                let h = roof_height(kind, &p, l, w, rng.random_range(0.0..=l), rng.random_range(0.0..=w));
                assert!(h >= p.z_eave && h <= p.z_ridge);
            }
        }
    }
}
