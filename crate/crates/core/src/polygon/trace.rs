use crate::geometry::Point;
use crate::polygon::Polygon;
use crate::segment::BuildingSegment;

// Moore neighborhood in clockwise order as displayed (rows grow downward).
const DIRS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("backtrack pixel must neighbor the current pixel")
}

/// Moore-neighbor trace of the segment's outer contour with Jacob's
/// stopping criterion. Vertices are pixel centers in scene coordinates;
/// holes are ignored. Rings too small to enclose area are replaced by the
/// pixel-corner box of the segment.
pub fn trace_boundary(segment: &BuildingSegment) -> Polygon {
    let mask = &segment.mask;
    let (w, h) = mask.dims();
    let start = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .find(|&(x, y)| *mask.get(x, y));
    let Some((sx, sy)) = start else {
        return Polygon::new(Vec::new());
    };
    let (sx, sy) = (sx as i64, sy as i64);
    let start_back = 0; // west of the first pixel is background

    let mut ring = vec![(sx, sy)];
    let (mut cx, mut cy) = (sx, sy);
    let mut back = start_back;
    let limit = 4 * w * h + 8;
    for _ in 0..limit {
        let mut found = None;
        for k in 1..8 {
            let idx = (back + k) % 8;
            let (dx, dy) = DIRS[idx];
            if mask.is_set(cx + dx, cy + dy) {
                found = Some(idx);
                break;
            }
        }
        let Some(idx) = found else {
            break; // isolated pixel
        };
        let prev = DIRS[(idx + 7) % 8];
        let (nx, ny) = (cx + DIRS[idx].0, cy + DIRS[idx].1);
        let (px, py) = (cx + prev.0, cy + prev.1);
        back = dir_index(px - nx, py - ny);
        cx = nx;
        cy = ny;
        if (cx, cy) == (sx, sy) && back == start_back {
            break;
        }
        ring.push((cx, cy));
    }

    let (ox, oy) = (segment.bbox.x0 as f64, segment.bbox.y0 as f64);
    // The walk may re-enter the start from another side before Jacob's
    // criterion fires; drop a trailing repeat of the start pixel.
    if ring.len() > 1 && ring.last() == Some(&(sx, sy)) {
        ring.pop();
    }
    let mut distinct = ring.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || collinear(&distinct) {
        let b = segment.bbox;
        let (x0, y0) = (b.x0 as f64 - 0.5, b.y0 as f64 - 0.5);
        let (x1, y1) = (b.x1 as f64 - 0.5, b.y1 as f64 - 0.5);
        return Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x0, y1),
            Point::new(x1, y1),
            Point::new(x1, y0),
        ]);
    }
    let mut poly = Polygon::new(
        ring.into_iter()
            .map(|(x, y)| Point::new(x as f64 + ox, y as f64 + oy))
            .collect(),
    );
    poly.make_ccw();
    poly
}

fn collinear(pts: &[(i64, i64)]) -> bool {
    let (ax, ay) = pts[0];
    let (bx, by) = pts[1];
    pts[2..]
        .iter()
        .all(|&(x, y)| (bx - ax) * (y - ay) - (by - ay) * (x - ax) == 0)
}
