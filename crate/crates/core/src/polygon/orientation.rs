use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff_mod, fold_half_pi};
use crate::polygon::Polygon;

pub const ORIENTATION_BIN_DEG: f64 = 5.0;
const BINS: usize = 18;

/// Main building orientations folded into `[0, pi/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationSet {
    pub angles: Vec<f64>,
    pub dominant: usize,
}

impl OrientationSet {
    pub fn single(theta: f64) -> Self {
        Self {
            angles: vec![fold_half_pi(theta)],
            dominant: 0,
        }
    }

    pub fn dominant_angle(&self) -> f64 {
        self.angles[self.dominant]
    }
}

/// Length-weighted circular mean of angles with period pi/2.
fn mean_mod_half_pi(items: &[(f64, f64)]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for &(a, w) in items {
        s += w * (4.0 * a).sin();
        c += w * (4.0 * a).cos();
    }
    fold_half_pi(s.atan2(c) / 4.0)
}

/// Edge-length histogram over folded edge directions. Bins at or above
/// `t_l` become orientations, as does the strongest bin. A bin's angle is
/// the weighted mean of its edges together with those of its still
/// unclaimed neighbor bins, so a direction straddling a bin border is not
/// reported twice.
pub fn estimate_main_orientations(ring: &Polygon, t_l: f64) -> OrientationSet {
    let bin_w = ORIENTATION_BIN_DEG.to_radians();
    let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); BINS];
    let mut weight = [0.0f64; BINS];
    for (a, b) in ring.edges() {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let ang = fold_half_pi(d.y.atan2(d.x));
        let bin = ((ang / bin_w) as usize).min(BINS - 1);
        members[bin].push((ang, len));
        weight[bin] += len;
    }
    let mut order: Vec<usize> = (0..BINS).filter(|&b| weight[b] > 0.0).collect();
    if order.is_empty() {
        return OrientationSet::single(0.0);
    }
    order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));

    let mut claimed = [false; BINS];
    let mut angles: Vec<f64> = Vec::new();
    for (rank, &bin) in order.iter().enumerate() {
        if claimed[bin] {
            continue;
        }
        if rank > 0 && weight[bin] < t_l {
            break;
        }
        let mut items = members[bin].clone();
        claimed[bin] = true;
        for nb in [(bin + BINS - 1) % BINS, (bin + 1) % BINS] {
            if !claimed[nb] {
                items.extend(&members[nb]);
                claimed[nb] = true;
            }
        }
        let theta = mean_mod_half_pi(&items);
        if angles
            .iter()
            .all(|&o| angle_diff_mod(o, theta, FRAC_PI_2) >= bin_w)
        {
            angles.push(theta);
        }
    }
    OrientationSet {
        angles,
        dominant: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn rect(w: f64, h: f64, deg: f64) -> Polygon {
        let t = deg.to_radians();
        let (u, v) = (Point::from_angle(t), Point::from_angle(t + FRAC_PI_2));
        Polygon::new(vec![
            Point::new(0.0, 0.0),
            u * w,
            u * w + v * h,
            v * h,
        ])
    }

    #[test]
    fn axis_rectangle() {
        let o = estimate_main_orientations(&rect(60.0, 40.0, 0.0), 90.0);
        assert_eq!(o.angles.len(), 1);
        assert!(o.angles[0].abs() < 1e-12);
    }

    #[test]
    fn l_shape_is_one_orientation() {
        let pts = [(0., 0.), (40., 0.), (40., 10.), (10., 10.), (10., 30.), (0., 30.)];
        let ring = Polygon::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect());
        let o = estimate_main_orientations(&ring, 90.0);
        assert_eq!(o.angles, vec![0.0]);
    }

    #[test]
    fn rotated_rectangle_matches_histogram_oracle() {
        for deg in [3.0, 17.0, 30.0, 44.0, 61.0, 88.0] {
            let o = estimate_main_orientations(&rect(60.0, 40.0, deg), 90.0);
            let want = (deg % 90.0_f64).to_radians();
            assert_eq!(o.angles.len(), 1);
            assert!(
                angle_diff_mod(o.dominant_angle(), want, FRAC_PI_2) <= 2.5f64.to_radians(),
                "{deg}"
            );
        }
    }

    #[test]
    fn weak_secondary_direction_is_dropped() {
        // 20-degree bevel of length ~14 px, well under T_l
        let ring = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 50.0),
            Point::new(13.0, 50.0),
            Point::new(0.0, 45.0),
        ]);
        let o = estimate_main_orientations(&ring, 90.0);
        assert_eq!(o.angles.len(), 1);
        let strong = estimate_main_orientations(&ring, 10.0);
        assert_eq!(strong.angles.len(), 2);
        for (i, a) in strong.angles.iter().enumerate() {
            for b in &strong.angles[i + 1..] {
                assert!(angle_diff_mod(*a, *b, FRAC_PI_2) >= 5f64.to_radians());
            }
        }
    }
}
