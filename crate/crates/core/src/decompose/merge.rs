use crate::error::{Error, Result};
use crate::raster::{Grid, PixelBox};

/// Depth of the window on each side of a shared edge.
pub const EDGE_DEPTH_PX: usize = 3;

/// Merge thresholds: color difference, mean height difference and the
/// largest height jump across the common edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeThresholds {
    pub t_d: f64,
    pub t_h1: f64,
    pub t_h2: f64,
    /// Shared edges must span both rectangles to within this many cells.
    pub span_tolerance: usize,
}

impl Default for MergeThresholds {
    fn default() -> Self {
        Self {
            t_d: 10.0,
            t_h1: 0.5,
            t_h2: 0.1,
            span_tolerance: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeFeatures {
    pub c_mean_a: [f64; 3],
    pub c_mean_b: [f64; 3],
    pub h_mean_a: f64,
    pub h_mean_b: f64,
    pub edge_gap_max: f64,
}

impl MergeFeatures {
    /// Mean over the bands of the absolute channel difference.
    pub fn color_diff(&self) -> f64 {
        (0..3)
            .map(|i| (self.c_mean_a[i] - self.c_mean_b[i]).abs())
            .sum::<f64>()
            / 3.0
    }

    pub fn height_diff(&self) -> f64 {
        (self.h_mean_a - self.h_mean_b).abs()
    }

    /// Merge only when all three differences are strictly below threshold.
    pub fn should_merge(&self, t: &MergeThresholds) -> bool {
        self.color_diff() < t.t_d && self.height_diff() < t.t_h1 && self.edge_gap_max < t.t_h2
    }
}

/// Shared edge between two cell rectangles.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Edge {
    /// `a` lies left of `b`; rows `lo..hi` are shared.
    Vertical { lo: usize, hi: usize },
    /// `a` lies above `b`; columns `lo..hi` are shared.
    Horizontal { lo: usize, hi: usize },
}

/// Shared edge, if the rectangles touch along a side. One cell of gap or
/// overlap is tolerated, since refined rectangles do not tile exactly.
fn shared_edge(a: &PixelBox, b: &PixelBox) -> Option<(Edge, bool)> {
    let near = |p: usize, q: usize| p.abs_diff(q) <= 1;
    let rows = (a.y0.max(b.y0), a.y1.min(b.y1));
    let cols = (a.x0.max(b.x0), a.x1.min(b.x1));
    if rows.0 < rows.1 {
        if near(a.x1, b.x0) {
            return Some((Edge::Vertical { lo: rows.0, hi: rows.1 }, false));
        }
        if near(b.x1, a.x0) {
            return Some((Edge::Vertical { lo: rows.0, hi: rows.1 }, true));
        }
    }
    if cols.0 < cols.1 {
        if near(a.y1, b.y0) {
            return Some((Edge::Horizontal { lo: cols.0, hi: cols.1 }, false));
        }
        if near(b.y1, a.y0) {
            return Some((Edge::Horizontal { lo: cols.0, hi: cols.1 }, true));
        }
    }
    None
}

fn window_mean(dsm: &Grid<Option<f64>>, cells: impl Iterator<Item = (usize, usize)>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for (x, y) in cells {
        if let Some(Some(z)) = dsm.at(x as i64, y as i64) {
            s += z;
            n += 1;
        }
    }
    (n > 0).then(|| s / n as f64)
}

/// Largest difference of mean heights in [`EDGE_DEPTH_PX`]-deep windows on
/// either side of the common edge, over all positions along it.
pub fn compute_edge_gap(a: &PixelBox, b: &PixelBox, dsm: &Grid<Option<f64>>) -> Result<f64> {
    let (edge, swapped) = shared_edge(a, b).ok_or(Error::NotAdjacent)?;
    let (a, b) = if swapped { (b, a) } else { (a, b) };
    let d = EDGE_DEPTH_PX;
    let mut gap: f64 = 0.0;
    match edge {
        Edge::Vertical { lo, hi } => {
            let ax = a.x1.saturating_sub(d).max(a.x0)..a.x1;
            let bx = b.x0..(b.x0 + d).min(b.x1);
            for y in lo..hi {
                let ma = window_mean(dsm, ax.clone().map(|x| (x, y)));
                let mb = window_mean(dsm, bx.clone().map(|x| (x, y)));
                if let (Some(ma), Some(mb)) = (ma, mb) {
                    gap = gap.max((ma - mb).abs());
                }
            }
        }
        Edge::Horizontal { lo, hi } => {
            let ay = a.y1.saturating_sub(d).max(a.y0)..a.y1;
            let by = b.y0..(b.y0 + d).min(b.y1);
            for x in lo..hi {
                let ma = window_mean(dsm, ay.clone().map(|y| (x, y)));
                let mb = window_mean(dsm, by.clone().map(|y| (x, y)));
                if let (Some(ma), Some(mb)) = (ma, mb) {
                    gap = gap.max((ma - mb).abs());
                }
            }
        }
    }
    Ok(gap)
}

fn means(r: &PixelBox, dsm: &Grid<Option<f64>>, rgb: &Grid<Option<[u8; 3]>>) -> ([f64; 3], f64) {
    let (mut c, mut nc) = ([0.0; 3], 0usize);
    let (mut h, mut nh) = (0.0, 0usize);
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            if let Some(p) = rgb.get(x, y) {
                for i in 0..3 {
                    c[i] += p[i] as f64;
                }
                nc += 1;
            }
            if let Some(z) = dsm.get(x, y) {
                h += z;
                nh += 1;
            }
        }
    }
    let nc = nc.max(1) as f64;
    ([c[0] / nc, c[1] / nc, c[2] / nc], if nh > 0 { h / nh as f64 } else { 0.0 })
}

pub fn merge_features(
    a: &PixelBox,
    b: &PixelBox,
    dsm: &Grid<Option<f64>>,
    rgb: &Grid<Option<[u8; 3]>>,
) -> Result<MergeFeatures> {
    let edge_gap_max = compute_edge_gap(a, b, dsm)?;
    let (c_mean_a, h_mean_a) = means(a, dsm, rgb);
    let (c_mean_b, h_mean_b) = means(b, dsm, rgb);
    Ok(MergeFeatures {
        c_mean_a,
        c_mean_b,
        h_mean_a,
        h_mean_b,
        edge_gap_max,
    })
}

/// Whether the bounding box of the pair adds no more than the tolerance
/// beyond the two rectangles: the shared edge must run the full length of
/// both touching sides.
fn spans_match(a: &PixelBox, b: &PixelBox, tol: usize) -> bool {
    match shared_edge(a, b) {
        Some((Edge::Vertical { .. }, _)) => a.y0.abs_diff(b.y0) <= tol && a.y1.abs_diff(b.y1) <= tol,
        Some((Edge::Horizontal { .. }, _)) => a.x0.abs_diff(b.x0) <= tol && a.x1.abs_diff(b.x1) <= tol,
        None => false,
    }
}

fn union_box(a: &PixelBox, b: &PixelBox) -> PixelBox {
    PixelBox::new(a.x0.min(b.x0), a.y0.min(b.y0), a.x1.max(b.x1), a.y1.max(b.y1))
}

/// Repeatedly merge the first adjacent pair (ascending index order) that
/// passes the thresholds, replacing it by its bounding box, until no pair
/// qualifies.
pub fn merge_adjacent_rects(
    rects: &[PixelBox],
    dsm: &Grid<Option<f64>>,
    rgb: &Grid<Option<[u8; 3]>>,
    t: &MergeThresholds,
) -> Vec<PixelBox> {
    let mut out = rects.to_vec();
    'outer: loop {
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if !spans_match(&out[i], &out[j], t.span_tolerance) {
                    continue;
                }
                let Ok(f) = merge_features(&out[i], &out[j], dsm, rgb) else {
                    continue;
                };
                if f.should_merge(t) {
                    out[i] = union_box(&out[i], &out[j]);
                    out.remove(j);
                    continue 'outer;
                }
            }
        }
        break;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn features(dc: f64, dh: f64, gap: f64) -> MergeFeatures {
        MergeFeatures {
            c_mean_a: [100.0; 3],
            c_mean_b: [100.0 + dc; 3],
            h_mean_a: 10.0,
            h_mean_b: 10.0 + dh,
            edge_gap_max: gap,
        }
    }

    #[test]
    fn merge_rule_examples() {
        let t = MergeThresholds::default();
        assert!(features(5.0, 0.2, 0.05).should_merge(&t));
        assert!(!features(5.0, 0.8, 0.05).should_merge(&t));
        assert!(!features(10.0, 0.2, 0.05).should_merge(&t));
    }

    #[test]
    fn edge_gap_constant_and_step() {
        let a = PixelBox::new(0, 0, 10, 8);
        let b = PixelBox::new(10, 0, 20, 8);
        let flat = Grid::new(20, 8, Some(5.0));
        assert_eq!(compute_edge_gap(&a, &b, &flat).unwrap(), 0.0);
        let step = Grid::from_fn(20, 8, |x, _| Some(if x < 10 { 5.0 } else { 6.0 }));
        assert_eq!(compute_edge_gap(&a, &b, &step).unwrap(), 1.0);
        assert_eq!(compute_edge_gap(&b, &a, &step).unwrap(), 1.0);
        let far = PixelBox::new(15, 0, 20, 8);
        assert!(matches!(compute_edge_gap(&a, &far, &flat), Err(Error::NotAdjacent)));
    }

    /// Re-scan oracle for rectangles that abut exactly along a vertical edge.
    fn rescan(a: &PixelBox, b: &PixelBox, dsm: &Grid<Option<f64>>) -> f64 {
        let mut best: f64 = 0.0;
        for y in a.y0.max(b.y0)..a.y1.min(b.y1) {
            let mut sa = Vec::new();
            for x in a.x0..a.x1 {
                if x + 3 >= a.x1 {
                    sa.push(dsm.get(x, y).unwrap());
                }
            }
            let mut sb = Vec::new();
            for x in b.x0..b.x1 {
                if x < b.x0 + 3 {
                    sb.push(dsm.get(x, y).unwrap());
                }
            }
            let ma = sa.iter().sum::<f64>() / sa.len() as f64;
            let mb = sb.iter().sum::<f64>() / sb.len() as f64;
            best = best.max((ma - mb).abs());
        }
        best
    }

    #[test]
    fn edge_gap_matches_rescan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let dsm = Grid::from_fn(30, 20, |_, _| Some(rng.random_range(0.0..10.0)));
            let split = rng.random_range(2..28);
            let a = PixelBox::new(rng.random_range(0..split), rng.random_range(0..10), split, rng.random_range(10..20));
            let b = PixelBox::new(split, rng.random_range(0..10), rng.random_range(split + 1..=30), rng.random_range(10..20));
            let got = compute_edge_gap(&a, &b, &dsm).unwrap();
            assert!((got - rescan(&a, &b, &dsm)).abs() < 1e-12);
        }
    }

    #[test]
    fn similar_halves_merge_and_different_do_not() {
        let a = PixelBox::new(0, 0, 10, 8);
        let b = PixelBox::new(10, 0, 20, 8);
        let t = MergeThresholds::default();
        let dsm = Grid::new(20, 8, Some(5.0));
        let rgb = Grid::new(20, 8, Some([90, 90, 90]));
        assert_eq!(merge_adjacent_rects(&[a, b], &dsm, &rgb, &t), vec![PixelBox::new(0, 0, 20, 8)]);
        let high = Grid::from_fn(20, 8, |x, _| Some(if x < 10 { 5.0 } else { 7.0 }));
        assert_eq!(merge_adjacent_rects(&[a, b], &high, &rgb, &t).len(), 2);
    }

    #[test]
    fn merging_is_monotone() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let t = MergeThresholds::default();
        for _ in 0..50 {
            let dsm = Grid::from_fn(40, 40, |x, _| Some(if x < 20 { 5.0 } else { 5.05 }));
            let rgb = Grid::new(40, 40, Some([90, 90, 90]));
            let rects: Vec<_> = (0..4)
                .map(|i| {
                    let x0 = 10 * i;
                    PixelBox::new(x0, rng.random_range(0..2), x0 + 10, rng.random_range(38..=40))
                })
                .collect();
            let out = merge_adjacent_rects(&rects, &dsm, &rgb, &t);
            assert!(out.len() <= rects.len());
            assert_eq!(merge_adjacent_rects(&out, &dsm, &rgb, &t), out);
        }
    }
}
