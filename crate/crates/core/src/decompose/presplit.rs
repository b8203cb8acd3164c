use std::collections::VecDeque;

use crate::raster::{Grid, Mask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresplitParams {
    /// DSM gradient magnitude (m/px) above which a cell is a split curtain.
    pub dsm_gradient: f64,
    /// Optional gray-level gradient threshold on the orthophoto.
    pub ortho_gradient: Option<f64>,
    /// Parts smaller than this are folded back into their neighbors.
    pub min_part: usize,
}

impl Default for PresplitParams {
    fn default() -> Self {
        Self {
            dsm_gradient: 1.0,
            ortho_gradient: None,
            min_part: 4,
        }
    }
}

const N4: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Central difference over in-mask neighbors with valid values, falling
/// back to a one-sided difference, or 0 with no usable neighbor.
fn gradient(mask: &Mask, f: &impl Fn(i64, i64) -> Option<f64>, x: i64, y: i64) -> f64 {
    let Some(z) = f(x, y) else {
        return 0.0;
    };
    let sample = |x: i64, y: i64| if mask.is_set(x, y) { f(x, y) } else { None };
    let diff = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => 0.5 * (b - a),
        (None, Some(b)) => b - z,
        (Some(a), None) => z - a,
        (None, None) => 0.0,
    };
    let gx = diff(sample(x - 1, y), sample(x + 1, y));
    let gy = diff(sample(x, y - 1), sample(x, y + 1));
    gx.hypot(gy)
}

/// Split a mask along steep DSM (and optionally orthophoto) gradients.
/// Returns labels `1..=n` for mask cells and 0 elsewhere; curtain cells are
/// given the label of the nearest part.
pub fn gradient_presplit(
    mask: &Mask,
    dsm: &Grid<Option<f64>>,
    ortho: Option<&Grid<Option<[u8; 3]>>>,
    params: &PresplitParams,
) -> Grid<u32> {
    let (w, h) = mask.dims();
    let z = |x: i64, y: i64| dsm.at(x, y).flatten();
    let gray = |x: i64, y: i64| {
        ortho
            .and_then(|o| o.at(x, y).flatten())
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
    };
    let keep = Mask::from_fn(w, h, |x, y| {
        if !*mask.get(x, y) {
            return false;
        }
        let (xi, yi) = (x as i64, y as i64);
        if gradient(mask, &z, xi, yi) > params.dsm_gradient {
            return false;
        }
        match params.ortho_gradient {
            Some(t) if ortho.is_some() => gradient(mask, &gray, xi, yi) <= t,
            _ => true,
        }
    });

    // 4-connected parts of the non-curtain cells
    let mut labels = Grid::new(w, h, 0u32);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    let mut members = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if !*keep.get(sx, sy) || *labels.get(sx, sy) != 0 {
                continue;
            }
            next += 1;
            members.clear();
            labels.set(sx, sy, next);
            queue.push_back((sx, sy));
            while let Some((x, y)) = queue.pop_front() {
                members.push((x, y));
                for (dx, dy) in N4 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if keep.is_set(nx, ny) && labels.at(nx, ny) == Some(0) {
                        labels.set(nx as usize, ny as usize, next);
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
            if members.len() < params.min_part {
                for &(x, y) in &members {
                    labels.set(x, y, 0);
                }
                next -= 1;
            }
        }
    }
    if next == 0 {
        // everything is curtain: keep the mask whole
        return mask.map(|&m| u32::from(m));
    }

    // curtain cells take the label of the nearest part (multi-source BFS
    // within the mask, seeds in raster order)
    let mut queue: VecDeque<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| *labels.get(x, y) != 0)
        .collect();
    while let Some((x, y)) = queue.pop_front() {
        let l = *labels.get(x, y);
        for (dx, dy) in N4 {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if mask.is_set(nx, ny) && labels.at(nx, ny) == Some(0) {
                labels.set(nx as usize, ny as usize, l);
                queue.push_back((nx as usize, ny as usize));
            }
        }
    }
    // mask cells unreachable through 4-neighbors (diagonal-only links)
    for y in 0..h {
        for x in 0..w {
            if *mask.get(x, y) && *labels.get(x, y) == 0 {
                let l = [(-1i64, -1i64), (1, -1), (-1, 1), (1, 1)]
                    .iter()
                    .filter_map(|(dx, dy)| labels.at(x as i64 + dx, y as i64 + dy))
                    .find(|&l| l != 0)
                    .unwrap_or(1);
                labels.set(x, y, l);
            }
        }
    }
    labels
}
