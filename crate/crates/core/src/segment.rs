//! Individual building segments from a binary building mask.

use std::collections::VecDeque;

use crate::raster::{Mask, PixelBox, RasterF32};

pub const DEFAULT_MIN_AREA: usize = 50;
pub const DEFAULT_MIN_HEIGHT: f64 = 2.0;

/// One 8-connected building component.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSegment {
    pub id: u32,
    /// Scene-pixel bounding box; `mask` covers exactly this box.
    pub bbox: PixelBox,
    pub mask: Mask,
    pub area_px: usize,
}

impl BuildingSegment {
    /// Is scene pixel `(x, y)` part of this segment?
    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.mask
            .is_set(x - self.bbox.x0 as i64, y - self.bbox.y0 as i64)
    }

    /// Scene coordinates of every set pixel, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (ox, oy) = (self.bbox.x0, self.bbox.y0);
        (0..self.mask.height()).flat_map(move |y| {
            (0..self.mask.width())
                .filter(move |&x| *self.mask.get(x, y))
                .map(move |x| (x + ox, y + oy))
        })
    }

    /// The segment rendered into a full-scene mask.
    pub fn scene_mask(&self, width: usize, height: usize) -> Mask {
        let mut m = Mask::new(width, height, false);
        for (x, y) in self.pixels() {
            m.set(x, y, true);
        }
        m
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected labeling. Ids are assigned in raster-scan order of each
/// component's first pixel, counting only components that survive the
/// `min_area` filter.
pub fn connected_components(mask: &Mask, min_area: usize) -> Vec<BuildingSegment> {
    let (w, h) = mask.dims();
    let mut seen = Mask::new(w, h, false);
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    let mut members: Vec<(usize, usize)> = Vec::new();

    for sy in 0..h {
        for sx in 0..w {
            if !*mask.get(sx, sy) || *seen.get(sx, sy) {
                continue;
            }
            members.clear();
            seen.set(sx, sy, true);
            queue.push_back((sx, sy));
            let mut bbox = PixelBox::new(sx, sy, sx + 1, sy + 1);
            while let Some((x, y)) = queue.pop_front() {
                members.push((x, y));
                bbox = bbox.include(x, y);
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if mask.is_set(nx, ny) && !seen.is_set(nx, ny) {
                        seen.set(nx as usize, ny as usize, true);
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
            if members.len() < min_area {
                continue;
            }
            let mut patch = Mask::new(bbox.width(), bbox.height(), false);
            for &(x, y) in &members {
                patch.set(x - bbox.x0, y - bbox.y0, true);
            }
            out.push(BuildingSegment {
                id: out.len() as u32 + 1,
                bbox,
                mask: patch,
                area_px: members.len(),
            });
        }
    }
    out
}

/// 3x3 erosion; pixels outside the raster count as unset.
pub fn erode3(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |x, y| {
        (-1..=1).all(|dy| (-1..=1).all(|dx| mask.is_set(x as i64 + dx, y as i64 + dy)))
    })
}

/// 3x3 dilation.
pub fn dilate3(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |x, y| {
        (-1..=1).any(|dy| (-1..=1).any(|dx| mask.is_set(x as i64 + dx, y as i64 + dy)))
    })
}

pub fn open3(mask: &Mask) -> Mask {
    dilate3(&erode3(mask))
}

/// Non-learned building mask: cells standing more than `min_height_m`
/// above a single ground level, followed by a 3x3 opening.
pub fn fallback_segmentation(dsm: &RasterF32, ground_height_m: f64, min_height_m: f64) -> Mask {
    let raw = Mask::from_fn(dsm.width(), dsm.height(), |x, y| {
        dsm.valid(x, y)
            .is_some_and(|z| z - ground_height_m > min_height_m)
    });
    open3(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Recursive-free flood fill written independently of the BFS above:
    /// repeatedly relabels with a stack and reports per-pixel labels.
    fn flood_fill_labels(mask: &Mask) -> Vec<Option<usize>> {
        let (w, h) = mask.dims();
        let mut labels = vec![None; w * h];
        let mut next = 0;
        for start in 0..w * h {
            if !mask.as_slice()[start] || labels[start].is_some() {
                continue;
            }
            let mut stack = vec![start];
            labels[start] = Some(next);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let j = ny as usize * w + nx as usize;
                        if mask.as_slice()[j] && labels[j].is_none() {
                            labels[j] = Some(next);
                            stack.push(j);
                        }
                    }
                }
            }
            next += 1;
        }
        labels
    }

    #[test]
    fn empty_mask_has_no_segments() {
        assert!(connected_components(&Mask::new(8, 8, false), 1).is_empty());
    }

    #[test]
    fn diagonal_pixels_are_one_segment() {
        let mut m = Mask::new(4, 4, false);
        m.set(1, 1, true);
        m.set(2, 2, true);
        let segs = connected_components(&m, 1);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].area_px, 2);
        assert_eq!(segs[0].bbox, PixelBox::new(1, 1, 3, 3));
    }

    #[test]
    fn small_components_discarded() {
        let mut m = Mask::new(20, 20, false);
        for y in 0..10 {
            for x in 0..10 {
                m.set(x, y, true);
            }
        }
        m.set(18, 18, true);
        let segs = connected_components(&m, DEFAULT_MIN_AREA);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].id, 1);
    }

    #[test]
    fn matches_flood_fill_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let density = rng.random_range(0.2..0.7);
            let m = Mask::from_fn(32, 32, |_, _| rng.random_bool(density));
            let segs = connected_components(&m, 1);
            let oracle = flood_fill_labels(&m);
            // oracle labels are in raster-scan order of first pixel too
            let mut ours = vec![None; 32 * 32];
            for s in &segs {
                for (x, y) in s.pixels() {
                    ours[y * 32 + x] = Some(s.id as usize - 1);
                }
                assert_eq!(s.area_px, s.mask.count());
            }
            assert_eq!(ours, oracle);
        }
    }

    #[test]
    fn fallback_flat_ground_is_empty() {
        let dsm = RasterF32::filled(30, 30, 100.0);
        assert_eq!(fallback_segmentation(&dsm, 100.0, 2.0).count(), 0);
    }

    #[test]
    fn fallback_block_survives_and_spike_is_removed() {
        let mut dsm = RasterF32::filled(60, 60, 100.0);
        for y in 10..30 {
            for x in 10..30 {
                dsm.set(x, y, 110.0);
            }
        }
        dsm.set(50, 50, 110.0);
        let m = fallback_segmentation(&dsm, 100.0, 2.0);
        // opening of a solid square is the square itself
        assert_eq!(m.count(), 400);
        assert!(!*m.get(50, 50));
        let segs = connected_components(&m, DEFAULT_MIN_AREA);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].area_px, 400);
    }

    #[test]
    fn threshold_is_strict() {
        let dsm = RasterF32::filled(5, 5, 102.0);
        assert_eq!(fallback_segmentation(&dsm, 100.0, 2.0).count(), 0);
    }
}
