use crate::error::{Error, Result};
use crate::geometry::point_segment_distance;
use crate::polygon::Polygon;

/// Douglas-Peucker on a closed ring. The ring is split at vertex 0 and the
/// vertex farthest from it; each half is simplified as an open polyline.
pub fn simplify_dp(ring: &Polygon, epsilon_px: f64) -> Result<Polygon> {
    assert!(epsilon_px > 0.0, "epsilon must be positive");
    let v = &ring.vertices;
    let n = v.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon { vertices: n });
    }
    let far = (1..n)
        .max_by(|&a, &b| v[0].dist(v[a]).total_cmp(&v[0].dist(v[b])).then(b.cmp(&a)))
        .unwrap();

    // Work on the ring unrolled so that index n is vertex 0 again.
    let at = |i: usize| v[i % n];
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    keep[n] = true;
    let mut stack = vec![(0usize, far), (far, n)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (pa, pb) = (at(a), at(b));
        let mut best = (0.0, a);
        for i in a + 1..b {
            let d = point_segment_distance(at(i), pa, pb);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > epsilon_px {
            keep[best.1] = true;
            stack.push((a, best.1));
            stack.push((best.1, b));
        }
    }
    let out: Vec<_> = (0..n).filter(|&i| keep[i]).map(|i| v[i]).collect();
    if out.len() < 3 {
        return Err(Error::DegeneratePolygon { vertices: out.len() });
    }
    Ok(Polygon::new(out))
}
