use crate::decompose::OrientedRect;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster::{percentile, RasterF32};
use crate::segment::BuildingSegment;
use crate::roof::{roof_height, RoofKind, RoofModel, RoofParams};

const EXTREME_MARGIN_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    /// Height step of the eave and ridge candidates, meters.
    pub z_step: f64,
    /// Insets are searched at multiples of 1/`inset_divisions` of a side.
    pub inset_divisions: usize,
    pub min_cells: usize,
    /// A more complex roof kind is only chosen when it beats every simpler
    /// one by more than `select_rel * rmse + select_abs_m`.
    pub select_rel: f64,
    pub select_abs_m: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            z_step: 0.25,
            inset_divisions: 40,
            min_cells: 16,
            select_rel: 0.05,
            select_abs_m: 0.02,
        }
    }
}

/// `lo, lo + step, ...` up to `hi`, with `hi` itself always included.
fn ladder(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut i = 0;
    loop {
        let z = lo + step * i as f64;
        if z > hi + 1e-12 {
            break;
        }
        v.push(z.min(hi));
        i += 1;
    }
    if v.last().is_none_or(|&z| z < hi - 1e-12) {
        v.push(hi);
    }
    v
}

/// Observation: local position (meters) and DSM height.
#[derive(Debug, Clone, Copy)]
struct Cell {
    x: f64,
    y: f64,
    z: f64,
}

fn collect_cells(rect: &OrientedRect, segment: Option<&BuildingSegment>, dsm: &RasterF32, gsd: f64) -> Vec<Cell> {
    let (l, w) = (rect.len * gsd, rect.wid * gsd);
    rect.pixels(dsm.width(), dsm.height())
        .into_iter()
        .filter(|&(x, y)| segment.is_none_or(|s| s.contains(x as i64, y as i64)))
        .filter_map(|(x, y)| {
            let z = dsm.valid(x, y)?;
            let q = rect.to_local(Point::new(x as f64, y as f64));
            Some(Cell {
                x: (q.x * gsd).clamp(0.0, l),
                y: (q.y * gsd).clamp(0.0, w),
                z,
            })
        })
        .collect()
}

/// Root mean square difference between a model and observed heights.
fn rmse_cells(kind: RoofKind, p: &RoofParams, l: f64, w: f64, cells: &[Cell]) -> f64 {
    let sse: f64 = cells
        .iter()
        .map(|c| {
            let d = roof_height(kind, p, l, w, c.x, c.y) - c.z;
            d * d
        })
        .sum();
    (sse / cells.len() as f64).sqrt()
}

/// RMSE of a model against the DSM over the cells `fit_roof` uses.
pub fn rmse_of(
    kind: RoofKind,
    params: &RoofParams,
    rect: &OrientedRect,
    segment: Option<&BuildingSegment>,
    dsm: &RasterF32,
    gsd: f64,
) -> f64 {
    let cells = collect_cells(rect, segment, dsm, gsd);
    rmse_cells(kind, params, rect.len * gsd, rect.wid * gsd, &cells)
}

/// Sums needed to evaluate the squared error of `z_e + r * s` against the
/// heights in O(1) for any `(z_e, r)`. Heights are centered on their mean.
struct ShapeStats {
    n: f64,
    s: f64,
    ss: f64,
    d: f64,
    dd: f64,
    sd: f64,
}

impl ShapeStats {
    fn new(shape: &[f64], cells: &[Cell], mean: f64) -> Self {
        let mut st = ShapeStats {
            n: cells.len() as f64,
            s: 0.0,
            ss: 0.0,
            d: 0.0,
            dd: 0.0,
            sd: 0.0,
        };
        for (s, c) in shape.iter().zip(cells) {
            let d = c.z - mean;
            st.s += s;
            st.ss += s * s;
            st.d += d;
            st.dd += d * d;
            st.sd += s * d;
        }
        st
    }

    /// Mean squared error for eave `ze` (centered) and rise `r`.
    fn mse(&self, ze: f64, r: f64) -> f64 {
        let sse = self.n * ze * ze + r * r * self.ss + self.dd + 2.0 * ze * r * self.s
            - 2.0 * ze * self.d
            - 2.0 * r * self.sd;
        sse.max(0.0) / self.n
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    kind: RoofKind,
    params: RoofParams,
    mse: f64,
}

/// Lower error wins; near-equal errors go to the simpler kind, then the
/// lower ridge.
fn better(a: &Candidate, b: &Candidate) -> bool {
    let tol = 1e-12 * (1.0 + b.mse);
    if a.mse < b.mse - tol {
        return true;
    }
    if a.mse > b.mse + tol {
        return false;
    }
    (a.kind, a.params.z_ridge) < (b.kind, b.params.z_ridge)
}

/// Best model of every roof kind over the search grid, in simplicity order.
pub fn fit_roof_per_kind(
    rect: &OrientedRect,
    segment: Option<&BuildingSegment>,
    dsm: &RasterF32,
    gsd: f64,
    fp: &FitParams,
) -> Result<Vec<RoofModel>> {
    let cells = collect_cells(rect, segment, dsm, gsd);
    if cells.len() < fp.min_cells {
        return Err(Error::InsufficientData {
            valid: cells.len(),
            needed: fp.min_cells,
        });
    }
    let (l, w) = (rect.len * gsd, rect.wid * gsd);
    let mut zs: Vec<f64> = cells.iter().map(|c| c.z).collect();
    let p50 = percentile(&mut zs, 50.0).unwrap();
    let (zmin, zmax) = (zs[0], zs[zs.len() - 1]);
    let mean = zs.iter().sum::<f64>() / zs.len() as f64;
    // pixel centers never sit exactly on an eave or ridge line, so the
    // extremes are widened
    let margin = EXTREME_MARGIN_M;
    let eaves = ladder(zmin - margin, p50, fp.z_step);
    let ridges = ladder(p50, zmax + margin, fp.z_step);
    // a sloped roof with z_ridge = z_eave is flat, so flat heights take
    // every level the other kinds can reach
    let mut flats: Vec<f64> = eaves.iter().chain(&ridges).copied().collect();
    flats.sort_by(f64::total_cmp);
    flats.dedup();
    let k = fp.inset_divisions.max(2);
    let fracs = |from: usize| (from..=k / 2).map(move |i| i as f64 / k as f64);

    let mut best: [Option<Candidate>; 5] = [None; 5];
    let mut search = |kind: RoofKind, hipl: f64, hipw: f64| {
        let unit = RoofParams {
            z_ridge: 1.0,
            z_eave: 0.0,
            hipl,
            hipw,
        };
        let shape: Vec<f64> = cells.iter().map(|c| roof_height(kind, &unit, l, w, c.x, c.y)).collect();
        let st = ShapeStats::new(&shape, &cells, mean);
        let slot = &mut best[kind as usize];
        let mut consider = |z_e: f64, z_r: f64| {
            let c = Candidate {
                kind,
                params: RoofParams {
                    z_ridge: z_r,
                    z_eave: z_e,
                    hipl,
                    hipw,
                },
                mse: st.mse(z_e - mean, z_r - z_e),
            };
            if slot.as_ref().is_none_or(|b| better(&c, b)) {
                *slot = Some(c);
            }
        };
        if kind == RoofKind::Flat {
            for &z in &flats {
                consider(z, z);
            }
        } else {
            for &z_e in &eaves {
                for &z_r in &ridges {
                    if z_r >= z_e {
                        consider(z_e, z_r);
                    }
                }
            }
        }
    };

    search(RoofKind::Flat, 0.0, 0.0);
    search(RoofKind::Gable, 0.0, 0.0);
    search(RoofKind::Pyramid, 0.5 * l, 0.5 * w);
    for fl in fracs(0) {
        search(RoofKind::Hip, fl * l, 0.0);
    }
    for fl in fracs(0) {
        for fw in fracs(1) {
            search(RoofKind::Mansard, fl * l, fw * w);
        }
    }

    Ok(best
        .into_iter()
        .flatten()
        .map(|c| RoofModel {
            rect: *rect,
            kind: c.kind,
            params: c.params,
            rmse: rmse_cells(c.kind, &c.params, l, w, &cells),
            z_ground: zmin,
        })
        .collect())
}

/// Exhaustive search over all roof kinds and the parameter grid against
/// the DSM cells inside `rect` (and inside `segment`, when given). The
/// simplest kind whose RMSE is within the selection tolerance of the best
/// one is returned.
pub fn fit_roof(
    rect: &OrientedRect,
    segment: Option<&BuildingSegment>,
    dsm: &RasterF32,
    gsd: f64,
    fp: &FitParams,
) -> Result<RoofModel> {
    let models = fit_roof_per_kind(rect, segment, dsm, gsd, fp)?;
    let least = models.iter().map(|m| m.rmse).fold(f64::INFINITY, f64::min);
    let accept = least * (1.0 + fp.select_rel) + fp.select_abs_m + 1e-9;
    Ok(models
        .into_iter()
        .find(|m| m.rmse <= accept)
        .expect("the best kind is always accepted"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roof::synthesize_roof_height;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn scene_with(kind: RoofKind, p: &RoofParams, rect: &OrientedRect, gsd: f64) -> RasterF32 {
        let mut dsm = RasterF32::filled(80, 80, 0.0);
        let roof = synthesize_roof_height(kind, p, rect, gsd, 80, 80).unwrap();
        for y in 0..roof.bbox.height() {
            for x in 0..roof.bbox.width() {
                if let Some(z) = roof.raster.valid(x, y) {
                    dsm.set(x + roof.bbox.x0, y + roof.bbox.y0, z as f32);
                }
            }
        }
        dsm
    }

    #[test]
    fn ladder_includes_bounds() {
        assert_eq!(ladder(1.0, 1.6, 0.25), vec![1.0, 1.25, 1.5, 1.6]);
        assert_eq!(ladder(2.0, 2.0, 0.25), vec![2.0]);
    }

    #[test]
    fn constant_dsm_is_flat() {
        let dsm = RasterF32::filled(40, 40, 10.0);
        let r = OrientedRect::new(20.0, 20.0, 20.0, 12.0, 0.4);
        let m = fit_roof(&r, None, &dsm, 0.5, &FitParams::default()).unwrap();
        assert_eq!(m.kind, RoofKind::Flat);
        assert_eq!(m.params.z_eave, 10.0);
        assert_eq!(m.rmse, 0.0);
    }

    #[test]
    fn too_few_cells() {
        let dsm = RasterF32::filled(40, 40, 10.0);
        let r = OrientedRect::new(20.0, 20.0, 3.0, 3.0, 0.0);
        assert!(matches!(
            fit_roof(&r, None, &dsm, 0.5, &FitParams::default()),
            Err(Error::InsufficientData { valid: 9, needed: 16 })
        ));
    }

    #[test]
    fn gable_round_trip() {
        let rect = OrientedRect::new(40.0, 40.0, 40.0, 24.0, 0.0);
        let p = RoofParams {
            z_ridge: 12.0,
            z_eave: 8.0,
            hipl: 0.0,
            hipw: 0.0,
        };
        let dsm = scene_with(RoofKind::Gable, &p, &rect, 0.5);
        let m = fit_roof(&rect, None, &dsm, 0.5, &FitParams::default()).unwrap();
        assert_eq!(m.kind, RoofKind::Gable);
        assert!((m.params.z_ridge - 12.0).abs() <= 0.25);
        assert!((m.params.z_eave - 8.0).abs() <= 0.25);
    }

    fn random_params(rng: &mut impl Rng, kind: RoofKind, l: f64, w: f64) -> RoofParams {
        let z_e = rng.random_range(5.0..20.0);
        let rise = if kind == RoofKind::Flat { 0.0 } else { rng.random_range(2.0..5.0) };
        let (hipl, hipw) = match kind {
            RoofKind::Hip => (rng.random_range(0.15..0.35) * l, 0.0),
            RoofKind::Mansard => (rng.random_range(0.1..0.3) * l, rng.random_range(0.1..0.3) * w),
            _ => (0.0, 0.0),
        };
        RoofParams {
            z_ridge: z_e + rise,
            z_eave: z_e,
            hipl,
            hipw,
        }
    }

    #[test]
    fn noise_free_round_trip_all_kinds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let gsd = 0.5;
        for kind in RoofKind::ALL {
            for _ in 0..20 {
                let rect = OrientedRect::new(40.0, 40.0, rng.random_range(30.0..60.0), rng.random_range(18.0..30.0), 0.0);
                let (l, w) = (rect.len * gsd, rect.wid * gsd);
                let p = random_params(&mut rng, kind, l, w);
                let dsm = scene_with(kind, &p, &rect, gsd);
                let m = fit_roof(&rect, None, &dsm, gsd, &FitParams::default()).unwrap();
                assert_eq!(m.kind, kind, "{p:?} {m:?} l={l} w={w}");
                assert!((m.params.z_eave - p.z_eave).abs() <= 0.25 + 1e-9, "{kind} {p:?} {:?}", m.params);
                assert!((m.params.z_ridge - p.z_ridge).abs() <= 0.25 + 1e-9, "{kind} {p:?} {:?}", m.params);
                if matches!(kind, RoofKind::Hip | RoofKind::Mansard) {
                    assert!((m.params.hipl - p.hipl).abs() <= l / 10.0 + 1e-9);
                    assert!((m.params.hipw - p.hipw).abs() <= w / 10.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn noisy_gable_rmse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let rect = OrientedRect::new(40.0, 40.0, 40.0, 24.0, 0.0);
        let p = RoofParams {
            z_ridge: 12.0,
            z_eave: 8.0,
            hipl: 0.0,
            hipw: 0.0,
        };
        let clean = scene_with(RoofKind::Gable, &p, &rect, 0.5);
        for _ in 0..100 {
            let mut dsm = clean.clone();
            for y in 0..80 {
                for x in 0..80 {
                    let z = dsm.value(x, y) as f64 + noise.sample(&mut rng);
                    dsm.set(x, y, z as f32);
                }
            }
            let m = fit_roof(&rect, None, &dsm, 0.5, &FitParams::default()).unwrap();
            assert!(m.rmse <= 0.15, "{}", m.rmse);
        }
    }

    #[test]
    fn rmse_recomputes_and_grid_is_monotone() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let noise = Normal::new(0.0, 0.3).unwrap();
        for _ in 0..30 {
            let rect = OrientedRect::new(40.0, 40.0, rng.random_range(20.0..50.0), rng.random_range(12.0..24.0), rng.random_range(0.0..3.0));
            let kind = RoofKind::ALL[rng.random_range(0..5)];
            let p = random_params(&mut rng, kind, rect.len * 0.5, rect.wid * 0.5);
            let mut dsm = scene_with(kind, &p, &rect, 0.5);
            for y in 0..80 {
                for x in 0..80 {
                    let z = dsm.value(x, y) as f64 + noise.sample(&mut rng);
                    dsm.set(x, y, z as f32);
                }
            }
            let chosen = fit_roof(&rect, None, &dsm, 0.5, &FitParams::default()).unwrap();
            let again = rmse_of(chosen.kind, &chosen.params, &rect, None, &dsm, 0.5);
            assert!((again - chosen.rmse).abs() < 1e-9);
            let strict = FitParams {
                select_rel: 0.0,
                select_abs_m: 0.0,
                ..Default::default()
            };
            let finer = FitParams {
                z_step: 0.125,
                inset_divisions: 80,
                ..strict
            };
            let coarse = fit_roof_per_kind(&rect, None, &dsm, 0.5, &strict).unwrap();
            let fine = fit_roof_per_kind(&rect, None, &dsm, 0.5, &finer).unwrap();
            for (c, f) in coarse.iter().zip(&fine) {
                assert_eq!(c.kind, f.kind);
                assert!(f.rmse <= c.rmse + 1e-9);
            }
            let a = fit_roof(&rect, None, &dsm, 0.5, &strict).unwrap();
            let b = fit_roof(&rect, None, &dsm, 0.5, &finer).unwrap();
            assert!(b.rmse <= a.rmse + 1e-9);
        }
    }
}
