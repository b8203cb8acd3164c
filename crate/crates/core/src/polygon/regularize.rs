use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{angle_diff_mod, fold_pi, Line};
use crate::polygon::{LineSegment, Polygon};

pub const LINE_DISTANCE_GATE_PX: f64 = 5.0;
pub const LINE_ANGLE_GATE_DEG: f64 = 10.0;

/// Rotate each edge about its midpoint onto the angle of a nearby image
/// line. A line qualifies when the edge midpoint is within
/// [`LINE_DISTANCE_GATE_PX`] of it, the angles differ by at most
/// [`LINE_ANGLE_GATE_DEG`] and the two overlap when projected onto the
/// edge. Among qualifying lines the closest in angle wins.
pub fn regularize_with_image_lines(ring: &Polygon, lines: &[LineSegment]) -> Result<Polygon> {
    if lines.is_empty() {
        return Ok(ring.clone());
    }
    let gate = LINE_ANGLE_GATE_DEG.to_radians();
    let n = ring.len();
    let mut edge_lines = Vec::with_capacity(n);
    let mut changed = false;
    for (a, b) in ring.edges() {
        let edge = Line::through(a, b);
        let mid = a.midpoint(b);
        let ang = fold_pi((b - a).y.atan2((b - a).x));
        let half = 0.5 * a.dist(b);
        let best = lines
            .iter()
            .filter_map(|l| {
                let d_ang = angle_diff_mod(ang, l.angle, PI);
                let dist = Line::new(l.center, l.angle).distance(mid);
                if d_ang > gate || dist > LINE_DISTANCE_GATE_PX {
                    return None;
                }
                let (p, q) = l.endpoints();
                let (s0, s1) = (edge.dir.dot(p - mid), edge.dir.dot(q - mid));
                if s0.max(s1) < -half || s0.min(s1) > half {
                    return None;
                }
                Some((d_ang, dist, l.angle))
            })
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        match best {
            Some((d, _, theta)) if d > 0.0 => {
                changed = true;
                // keep the edge's travel direction
                let t = if angle_diff_mod(theta, (b - a).y.atan2((b - a).x), 2.0 * PI) <= PI / 2.0 {
                    theta
                } else {
                    theta + PI
                };
                edge_lines.push(Line::new(mid, t));
            }
            _ => edge_lines.push(edge),
        }
    }
    if !changed {
        return Ok(ring.clone());
    }
    let verts: Vec<_> = (0..n)
        .map(|i| {
            let prev = &edge_lines[(i + n - 1) % n];
            let cur = &edge_lines[i];
            match prev.intersect(cur) {
                Some(p) if p.dist(ring.vertices[i]) <= 4.0 * LINE_DISTANCE_GATE_PX => p,
                _ => cur.project(ring.vertices[i]),
            }
        })
        .collect();
    let out = Polygon::new(verts);
    if out.len() < 3 || out.area() <= 0.0 || !out.is_simple() {
        return Err(Error::DegeneratePolygon { vertices: out.len() });
    }
    Ok(out)
}
