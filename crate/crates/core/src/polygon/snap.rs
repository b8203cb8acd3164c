use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff_mod, fold_pi, Line, Point};
use crate::polygon::{OrientationSet, Polygon};

/// A jog between two parallel, same-direction edges is only flattened when
/// it is at most this fraction of the shorter arm.
pub const JOG_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy)]
struct SnapLine {
    class: usize,
    theta: f64,
    /// Signed distance of the line from the origin along its normal.
    offset: f64,
    length: f64,
    /// +1 when the edge runs along `theta`, -1 when against it.
    sense: f64,
}

impl SnapLine {
    fn normal(&self) -> Point {
        Point::new(-self.theta.sin(), self.theta.cos())
    }

    fn line(&self) -> Line {
        Line::new(self.normal() * self.offset, self.theta)
    }

    fn merged(&self, o: &SnapLine) -> SnapLine {
        let w = self.length + o.length;
        SnapLine {
            offset: if w > 0.0 {
                (self.offset * self.length + o.offset * o.length) / w
            } else {
                self.offset
            },
            length: w,
            sense: if self.length >= o.length { self.sense } else { o.sense },
            ..*self
        }
    }
}

fn snap_edges(ring: &Polygon, orients: &OrientationSet) -> Vec<SnapLine> {
    let dirs: Vec<f64> = orients
        .angles
        .iter()
        .flat_map(|&a| [fold_pi(a), fold_pi(a + FRAC_PI_2)])
        .collect();
    ring.edges()
        .filter(|(a, b)| a.dist(*b) > 0.0)
        .map(|(a, b)| {
            let d = b - a;
            let alpha = d.y.atan2(d.x);
            let folded = fold_pi(alpha);
            let class = (0..dirs.len())
                .min_by(|&i, &j| {
                    angle_diff_mod(folded, dirs[i], PI).total_cmp(&angle_diff_mod(folded, dirs[j], PI))
                })
                .unwrap();
            let theta = dirs[class];
            let n = Point::new(-theta.sin(), theta.cos());
            SnapLine {
                class,
                theta,
                offset: n.dot(a.midpoint(b)),
                length: d.norm(),
                sense: if (alpha - theta).cos() >= 0.0 { 1.0 } else { -1.0 },
            }
        })
        .collect()
}

fn merge_runs(lines: &mut Vec<SnapLine>) {
    let mut i = 0;
    while lines.len() > 1 && i < lines.len() {
        let j = (i + 1) % lines.len();
        if lines[i].class == lines[j].class {
            let m = lines[i].merged(&lines[j]);
            lines[i] = m;
            lines.remove(j);
            if j < i {
                i -= 1;
            }
        } else {
            i += 1;
        }
    }
}

/// Try to absorb the short line `i`. Returns true if the ring changed.
fn absorb(lines: &mut Vec<SnapLine>, i: usize, t_l: f64) -> bool {
    let n = lines.len();
    let (p, q) = ((i + n - 1) % n, (i + 1) % n);
    let (prev, cur, next) = (lines[p], lines[i], lines[q]);
    if prev.class != next.class {
        if n <= 3 {
            return false;
        }
        // a corner cut: extend the neighbors until they meet, unless they
        // meet far away from the edge being removed
        let Some(x) = prev.line().intersect(&next.line()) else {
            return false;
        };
        let mid = cur.line().project(x);
        if x.dist(mid) > t_l.max(cur.length) {
            return false;
        }
        lines.remove(i);
        return true;
    }
    if prev.sense == next.sense
        && cur.length <= JOG_RATIO * prev.length.min(next.length)
        && n >= 6
    {
        let merged = prev.merged(&next);
        lines[p] = merged;
        // drop i and q, highest index first
        let (hi, lo) = if i > q { (i, q) } else { (q, i) };
        lines.remove(hi);
        lines.remove(lo);
        return true;
    }
    false
}

/// Snap every edge to the nearest main orientation (or its perpendicular),
/// merge collinear runs, absorb edges shorter than `t_l` into their
/// neighbors and rebuild the vertices by intersecting consecutive lines.
pub fn snap_and_merge_lines(ring: &Polygon, orients: &OrientationSet, t_l: f64) -> Result<Polygon> {
    let mut lines = snap_edges(ring, orients);
    merge_runs(&mut lines);
    loop {
        let mut short: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].length < t_l).collect();
        short.sort_by(|&a, &b| lines[a].length.total_cmp(&lines[b].length).then(a.cmp(&b)));
        if !short.into_iter().any(|i| absorb(&mut lines, i, t_l)) {
            break;
        }
        merge_runs(&mut lines);
    }
    if lines.len() < 3 {
        return Err(Error::DegeneratePolygon { vertices: lines.len() });
    }
    let n = lines.len();
    let mut verts = Vec::with_capacity(n);
    for i in 0..n {
        let a = lines[(i + n - 1) % n].line();
        let b = lines[i].line();
        match a.intersect(&b) {
            Some(p) => verts.push(p),
            None => return Err(Error::DegeneratePolygon { vertices: verts.len() }),
        }
    }
    let out = Polygon::new(verts);
    if out.area() <= 0.0 || !out.is_simple() {
        return Err(Error::DegeneratePolygon { vertices: out.len() });
    }
    Ok(out)
}
