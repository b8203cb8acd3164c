use crate::raster::{Mask, PixelBox};

/// Rectangles may reach at most this far (Chebyshev, cells) beyond the mask.
const OVERHANG: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerRectParams {
    /// Pyramid levels including full resolution.
    pub levels: usize,
    /// A coarser level is only built while both of its sides keep at
    /// least this many cells.
    pub min_level_side: usize,
    /// Stop extracting once this fraction of the coarse mask is covered.
    pub coverage: f64,
    /// Smallest rectangle area (coarse cells) worth extracting.
    pub min_area: usize,
    /// Smallest rectangle side (coarse cells) worth extracting.
    pub min_side: usize,
}

impl Default for InnerRectParams {
    fn default() -> Self {
        Self {
            levels: 3,
            min_level_side: 4,
            coverage: 0.95,
            min_area: 4,
            min_side: 2,
        }
    }
}

/// Largest all-set axis-aligned rectangle, by histogram scan. Ties keep
/// the first rectangle found scanning rows top to bottom.
pub fn largest_inner_rectangle(mask: &Mask) -> Option<PixelBox> {
    let (w, h) = mask.dims();
    let mut heights = vec![0usize; w];
    let mut best: Option<(usize, PixelBox)> = None;
    let mut stack: Vec<usize> = Vec::with_capacity(w + 1);
    for y in 0..h {
        for x in 0..w {
            heights[x] = if *mask.get(x, y) { heights[x] + 1 } else { 0 };
        }
        stack.clear();
        for x in 0..=w {
            let cur = if x < w { heights[x] } else { 0 };
            while let Some(&top) = stack.last() {
                if heights[top] < cur {
                    break;
                }
                stack.pop();
                let hgt = heights[top];
                if hgt == 0 {
                    continue;
                }
                let left = stack.last().map_or(0, |&s| s + 1);
                let area = hgt * (x - left);
                if best.as_ref().is_none_or(|(a, _)| area > *a) {
                    best = Some((area, PixelBox::new(left, y + 1 - hgt, x, y + 1)));
                }
            }
            stack.push(x);
        }
    }
    best.map(|(_, b)| b)
}

/// 2x downsampling; a coarse cell is set when at least half of the fine
/// cells it covers are set.
fn downsample(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    Mask::from_fn(cw, ch, |x, y| {
        let (mut set, mut total) = (0, 0);
        for dy in 0..2 {
            for dx in 0..2 {
                let (fx, fy) = (2 * x + dx, 2 * y + dy);
                if fx < w && fy < h {
                    total += 1;
                    set += usize::from(*mask.get(fx, fy));
                }
            }
        }
        2 * set >= total
    })
}

fn fill(grid: &mut Mask, r: &PixelBox, v: bool) {
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            grid.set(x, y, v);
        }
    }
}

/// Fraction of cells on a row or column segment that are set in `mask` and
/// not yet claimed.
fn line_fraction(mask: &Mask, claimed: &Mask, cells: impl Iterator<Item = (i64, i64)>) -> f64 {
    let (mut ok, mut n) = (0usize, 0usize);
    for (x, y) in cells {
        n += 1;
        if mask.is_set(x, y) && !claimed.is_set(x, y) {
            ok += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        ok as f64 / n as f64
    }
}

/// Move each side of `r` by at most `max_step` cells: shrink while the
/// side's own line is mostly outside the free mask, grow while the line
/// beyond it is mostly inside.
fn refine(mut r: PixelBox, mask: &Mask, near: &Mask, claimed: &Mask, max_step: usize) -> PixelBox {
    let (w, h) = mask.dims();
    for _ in 0..max_step {
        let mut changed = false;
        // left, right, top, bottom
        for side in 0..4 {
            let (x0, y0, x1, y1) = (r.x0 as i64, r.y0 as i64, r.x1 as i64, r.y1 as i64);
            let col = |x: i64| (y0..y1).map(move |y| (x, y));
            let row = |y: i64| (x0..x1).map(move |x| (x, y));
            let outer_ok = |cells: &mut dyn Iterator<Item = (i64, i64)>| {
                cells.filter(|&(x, y)| !near.is_set(x, y)).count() == 0
            };
            let (inner, outer) = match side {
                0 => (line_fraction(mask, claimed, col(x0)), line_fraction(mask, claimed, col(x0 - 1))),
                1 => (line_fraction(mask, claimed, col(x1 - 1)), line_fraction(mask, claimed, col(x1))),
                2 => (line_fraction(mask, claimed, row(y0)), line_fraction(mask, claimed, row(y0 - 1))),
                _ => (line_fraction(mask, claimed, row(y1 - 1)), line_fraction(mask, claimed, row(y1))),
            };
            let outer_near = match side {
                0 => outer_ok(&mut col(x0 - 1)),
                1 => outer_ok(&mut col(x1)),
                2 => outer_ok(&mut row(y0 - 1)),
                _ => outer_ok(&mut row(y1)),
            };
            let span = if side < 2 { r.width() } else { r.height() };
            if inner < 0.5 && span > 1 {
                match side {
                    0 => r.x0 += 1,
                    1 => r.x1 -= 1,
                    2 => r.y0 += 1,
                    _ => r.y1 -= 1,
                }
                changed = true;
            } else if outer >= 0.5 && outer_near {
                match side {
                    0 if r.x0 > 0 => r.x0 -= 1,
                    1 if r.x1 < w => r.x1 += 1,
                    2 if r.y0 > 0 => r.y0 -= 1,
                    3 if r.y1 < h => r.y1 += 1,
                    _ => continue,
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    r
}

/// Cells within [`OVERHANG`] of a set cell.
fn near_mask(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |x, y| {
        (-OVERHANG..=OVERHANG).any(|dy| {
            (-OVERHANG..=OVERHANG).any(|dx| mask.is_set(x as i64 + dx, y as i64 + dy))
        })
    })
}

/// Shrink the side with the most cells outside `near` until none remain.
fn clamp_to(mut r: PixelBox, near: &Mask) -> Option<PixelBox> {
    loop {
        if r.width() == 0 || r.height() == 0 {
            return None;
        }
        let bad = |cells: &mut dyn Iterator<Item = (usize, usize)>| {
            cells.filter(|&(x, y)| !*near.get(x, y)).count()
        };
        let counts = [
            bad(&mut (r.y0..r.y1).map(|y| (r.x0, y))),
            bad(&mut (r.y0..r.y1).map(|y| (r.x1 - 1, y))),
            bad(&mut (r.x0..r.x1).map(|x| (x, r.y0))),
            bad(&mut (r.x0..r.x1).map(|x| (x, r.y1 - 1))),
        ];
        let (side, &worst) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap();
        if worst == 0 {
            return Some(r);
        }
        match side {
            0 => r.x0 += 1,
            1 => r.x1 -= 1,
            2 => r.y0 += 1,
            _ => r.y1 -= 1,
        }
    }
}

/// Cover a mask with maximal inner rectangles: extract on the coarsest
/// pyramid level, then carry each rectangle down level by level, adjusting
/// its sides against the finer mask.
pub fn extract_max_inner_rectangles(mask: &Mask, params: &InnerRectParams) -> Vec<PixelBox> {
    let mut pyramid = vec![mask.clone()];
    while pyramid.len() < params.levels.max(1) {
        let next = downsample(pyramid.last().unwrap());
        if next.width().min(next.height()) < params.min_level_side || next.count() == 0 {
            break;
        }
        pyramid.push(next);
    }
    let coarse = pyramid.last().unwrap();
    let total = coarse.count();
    if total == 0 {
        return Vec::new();
    }
    let mut work = coarse.clone();
    let mut covered = 0usize;
    let mut rects = Vec::new();
    while (covered as f64) < params.coverage * total as f64 {
        let Some(r) = largest_inner_rectangle(&work) else {
            break;
        };
        if r.area() < params.min_area || r.width().min(r.height()) < params.min_side {
            // a lone small mask still yields its one rectangle
            if rects.is_empty() {
                rects.push(r);
            }
            break;
        }
        fill(&mut work, &r, false);
        covered += r.area();
        rects.push(r);
    }

    for level in (0..pyramid.len() - 1).rev() {
        let fine = &pyramid[level];
        let (w, h) = fine.dims();
        let near = near_mask(fine);
        let mut claimed = Mask::new(w, h, false);
        for r in rects.iter_mut() {
            let up = PixelBox::new(
                (2 * r.x0).min(w - 1),
                (2 * r.y0).min(h - 1),
                (2 * r.x1).min(w),
                (2 * r.y1).min(h),
            );
            *r = refine(up, fine, &near, &claimed, 2);
            fill(&mut claimed, r, true);
        }
    }
    if pyramid.len() > 1 {
        let near = near_mask(mask);
        rects = rects.into_iter().filter_map(|r| clamp_to(r, &near)).collect();
        // carrying rectangles down loses some coverage; top it up with
        // full-resolution rectangles over what is still uncovered
        let mut free = mask.clone();
        for r in &rects {
            fill(&mut free, r, false);
        }
        let total = mask.count();
        let mut covered = total - free.count();
        while (covered as f64) < params.coverage * total as f64 {
            let Some(r) = largest_inner_rectangle(&free) else {
                break;
            };
            if r.area() < params.min_area || r.width().min(r.height()) < params.min_side {
                break;
            }
            fill(&mut free, &r, false);
            covered += r.area();
            rects.push(r);
        }
    }
    rects
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute_force_max(mask: &Mask) -> usize {
        let (w, h) = mask.dims();
        let mut best = 0;
        for top in 0..h {
            for left in 0..w {
                for bottom in top + 1..=h {
                    for right in left + 1..=w {
                        let area = (bottom - top) * (right - left);
                        if area <= best {
                            continue;
                        }
                        let full = (top..bottom).all(|y| (left..right).all(|x| *mask.get(x, y)));
                        if full {
                            best = area;
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn largest_rectangle_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let (w, h) = (rng.random_range(1..=20), rng.random_range(1..=20));
            let p = rng.random_range(0.3..0.95);
            let m = Mask::from_fn(w, h, |_, _| rng.random_bool(p));
            let got = largest_inner_rectangle(&m).map_or(0, |r| r.area());
            assert_eq!(got, brute_force_max(&m));
            if let Some(r) = largest_inner_rectangle(&m) {
                assert!((r.y0..r.y1).all(|y| (r.x0..r.x1).all(|x| *m.get(x, y))));
            }
        }
    }

    #[test]
    fn solid_square_is_one_rect() {
        let m = Mask::new(16, 16, true);
        let r = extract_max_inner_rectangles(&m, &InnerRectParams::default());
        assert_eq!(r, vec![PixelBox::new(0, 0, 16, 16)]);
    }

    #[test]
    fn l_shape_two_rects() {
        let m = Mask::from_fn(40, 40, |x, y| y < 12 || x < 12);
        for levels in [1, 3] {
            let p = InnerRectParams {
                levels,
                ..Default::default()
            };
            let r = extract_max_inner_rectangles(&m, &p);
            assert_eq!(r.len(), 2, "{r:?}");
            let covered = Mask::from_fn(40, 40, |x, y| r.iter().any(|b| b.contains(x, y)) && *m.get(x, y));
            assert!(covered.count() as f64 >= 0.95 * m.count() as f64);
        }
    }

    #[test]
    fn empty_mask() {
        assert!(extract_max_inner_rectangles(&Mask::new(8, 8, false), &InnerRectParams::default()).is_empty());
    }

    #[test]
    fn rectangles_stay_near_mask_and_cover_it() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut m = Mask::new(80, 80, false);
            for _ in 0..rng.random_range(1..4) {
                let x0 = rng.random_range(0..50);
                let y0 = rng.random_range(0..50);
                let (x1, y1) = (x0 + rng.random_range(12..30), y0 + rng.random_range(12..30));
                for y in y0..y1 {
                    for x in x0..x1 {
                        m.set(x, y, true);
                    }
                }
            }
            let rects = extract_max_inner_rectangles(&m, &InnerRectParams::default());
            let covered = rects
                .iter()
                .flat_map(|r| (r.y0..r.y1).flat_map(move |y| (r.x0..r.x1).map(move |x| (x, y))))
                .filter(|&(x, y)| *m.get(x, y))
                .collect::<std::collections::BTreeSet<_>>()
                .len();
            assert!(covered as f64 >= 0.9 * m.count() as f64, "{covered} of {}", m.count());
            for r in &rects {
                for y in r.y0..r.y1 {
                    for x in r.x0..r.x1 {
                        let near = (-2i64..=2).any(|dy| {
                            (-2i64..=2).any(|dx| m.is_set(x as i64 + dx, y as i64 + dy))
                        });
                        assert!(near, "rect {r:?} leaves the mask at ({x},{y})");
                    }
                }
            }
        }
    }
}
