//! 2D and 3D intersection-over-union scores against reference data.

use crate::error::{Error, Result};
use crate::raster::{Grid, Mask};

pub const DEFAULT_VOXEL_H: f64 = 0.5;

fn same_dims<A, B>(what: &'static str, a: &Grid<A>, b: &Grid<B>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            what,
            want_w: b.width(),
            want_h: b.height(),
            got_w: a.width(),
            got_h: a.height(),
        });
    }
    Ok(())
}

/// Pixel-count IoU of two building masks.
pub fn iou2(pred: &Mask, reference: &Mask) -> Result<f64> {
    same_dims("prediction", pred, reference)?;
    let (mut inter, mut union, mut refs) = (0usize, 0usize, 0usize);
    for (&p, &r) in pred.as_slice().iter().zip(reference.as_slice()) {
        inter += usize::from(p && r);
        union += usize::from(p || r);
        refs += usize::from(r);
    }
    if refs == 0 {
        return Err(Error::EmptyReference);
    }
    Ok(inter as f64 / union as f64)
}

/// Number of `voxel_h` voxels stacked on the ground in a column of height
/// `h`; heights are rounded to the nearest voxel and non-finite heights
/// count as bare ground.
pub fn column_voxels(h: f64, z_ground: f64, voxel_h: f64) -> u64 {
    if !h.is_finite() {
        return 0;
    }
    ((h - z_ground) / voxel_h + 0.5).floor().max(0.0) as u64
}

/// Volumetric IoU of two height fields over a common grid, with every cell
/// a column of voxels from `z_ground` upward.
pub fn iou3(pred: &Grid<f64>, reference: &Grid<f64>, z_ground: f64, voxel_h: f64) -> Result<f64> {
    same_dims("prediction", pred, reference)?;
    assert!(voxel_h > 0.0, "voxel height must be positive");
    let (mut inter, mut union, mut refs) = (0u64, 0u64, 0u64);
    for (&p, &r) in pred.as_slice().iter().zip(reference.as_slice()) {
        let (a, b) = (column_voxels(p, z_ground, voxel_h), column_voxels(r, z_ground, voxel_h));
        inter += a.min(b);
        union += a.max(b);
        refs += b;
    }
    if refs == 0 {
        return Err(Error::EmptyReference);
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scene: String,
    pub iou2: f64,
    pub iou3: f64,
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("scene,iou2,iou3\n");
    for r in rows {
        s.push_str(&format!("{},{:.6},{:.6}\n", r.scene, r.iou2, r.iou3));
    }
    s
}
