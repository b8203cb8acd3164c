//! End-to-end reconstruction: segmentation, outlines, rectangles, roofs
//! and meshes, with every intermediate written to the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, MAX_INPUT_SIDE};
use crate::decompose::{decompose_segment, DecomposeParams, MergeThresholds, OrientedRect, PresplitParams};
use crate::error::{Error, Result};
use crate::geo::SceneFrame;
use crate::io::{persist_stage, Artifact, Payload, Scene};
use crate::mesh::{irregular_decision, irregular_mesh, iou_rects_vs_mask, model_to_mesh, Regularity, TriMesh};
use crate::polygon::{
    detect_image_line_segments, estimate_main_orientations, regularize_with_image_lines, simplify_dp,
    snap_and_merge_lines, trace_boundary, OrientationSet, Polygon,
};
use crate::raster::{percentile, Grid, Mask, PixelBox, RasterF32};
use crate::refine::{refine_rects, RefineParams};
use crate::roof::{estimate_base_height, fit_roof, synthesize_roof_height, FitParams, RoofKind, RoofModel};
use crate::segment::{connected_components, fallback_segmentation, BuildingSegment};

/// Ortho margin around a segment searched for line segments.
const LSD_MARGIN_PX: usize = 5;
/// Percentile of the DSM taken as ground when segmenting without a
/// classification map.
pub const FALLBACK_GROUND_PERCENTILE: f64 = 5.0;
/// Walls are at least this tall when the estimated ground reaches the eave.
const MIN_WALL_M: f64 = 0.1;

/// Outline of one segment at each step of regularization.
#[derive(Debug, Clone)]
pub struct Outline {
    pub traced: Polygon,
    pub simplified: Polygon,
    pub snapped: Polygon,
    pub regularized: Polygon,
    pub orientations: OrientationSet,
}

#[derive(Debug, Clone)]
pub struct Building {
    pub segment: BuildingSegment,
    pub outline: Outline,
    pub rects: Vec<OrientedRect>,
    pub refined: Vec<OrientedRect>,
    pub iou: f64,
    pub regularity: Regularity,
    pub z_ground: f64,
    pub models: Vec<RoofModel>,
    pub mesh: TriMesh,
}

/// In-memory result of a run.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub buildings: Vec<Building>,
    /// Modelled surface height per pixel; NaN off buildings.
    pub heights: Grid<f64>,
    pub timings: Vec<(&'static str, f64)>,
}

impl Reconstruction {
    pub fn footprint(&self) -> Mask {
        self.heights.map(|h| h.is_finite())
    }

    pub fn scene_mesh(&self) -> TriMesh {
        let mut m = TriMesh::default();
        for b in &self.buildings {
            m.append(&b.mesh);
        }
        m
    }

    pub fn summary(&self) -> Summary {
        let mut kinds = [0usize; 5];
        for m in self.buildings.iter().flat_map(|b| &b.models) {
            kinds[m.kind as usize] += 1;
        }
        let irregular = self.buildings.iter().filter(|b| b.regularity == Regularity::Irregular).count();
        Summary {
            buildings: self.buildings.len(),
            regular: self.buildings.len() - irregular,
            irregular,
            rectangles: self.buildings.iter().map(|b| b.refined.len()).sum(),
            total_faces: self.buildings.iter().map(|b| b.mesh.face_count()).sum(),
            roofs: RoofKind::ALL.iter().map(|k| (k.name(), kinds[*k as usize])).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub buildings: usize,
    pub regular: usize,
    pub irregular: usize,
    pub rectangles: usize,
    pub total_faces: usize,
    /// Fitted rectangles per roof kind.
    pub roofs: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summary: Summary,
    pub timings: Vec<(&'static str, f64)>,
    pub files: Vec<PathBuf>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
}

struct Clock(Vec<(&'static str, f64)>);

impl Clock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        let secs = t.elapsed().as_secs_f64();
        log::info!("stage {stage} done in {secs:.3} s");
        self.0.push((stage, secs));
        Ok(out)
    }
}

/// Per-segment work inside one stage, run on the pool and returned in
/// segment order. Errors carry the segment id.
fn per_segment<I: Sync, O: Send>(
    stage: &'static str,
    items: &[I],
    id: impl Fn(&I) -> u32 + Sync,
    f: impl Fn(&I) -> Result<O> + Sync,
) -> Result<Vec<O>> {
    items
        .par_iter()
        .map(|it| {
            let seg = id(it);
            log::info!("{stage}: segment {seg}");
            f(it).map_err(|e| e.in_segment(seg))
        })
        .collect()
}

pub fn segment_scene(scene: &Scene, config: &Config) -> Vec<BuildingSegment> {
    let mask = match scene.building_mask() {
        Some(m) => m,
        None => {
            let ground = config.ground_height_m.unwrap_or_else(|| {
                let mut v: Vec<f64> = (0..scene.dsm.height())
                    .flat_map(|y| (0..scene.dsm.width()).filter_map(move |x| scene.dsm.valid(x, y)))
                    .collect();
                percentile(&mut v, FALLBACK_GROUND_PERCENTILE).unwrap_or(0.0)
            });
            log::info!("no classification map, segmenting DSM above {ground:.2} m");
            fallback_segmentation(&scene.dsm, ground, config.min_height_m)
        }
    };
    connected_components(&mask, config.min_area_px)
}

fn extract_outline(seg: &BuildingSegment, scene: &Scene, config: &Config) -> Result<Outline> {
    let traced = trace_boundary(seg);
    let simplified = simplify_dp(&traced, config.dp_epsilon_px)?;
    let orientations = estimate_main_orientations(&simplified, config.t_l);
    let snapped = snap_and_merge_lines(&simplified, &orientations, config.t_l).unwrap_or_else(|e| {
        log::warn!("segment {}: keeping unsnapped outline ({e})", seg.id);
        simplified.clone()
    });
    let region = seg.bbox.expand(LSD_MARGIN_PX, scene.width(), scene.height());
    let lines = detect_image_line_segments(&scene.ortho, region);
    let regularized = regularize_with_image_lines(&snapped, &lines).unwrap_or_else(|e| {
        log::warn!("segment {}: image lines not applied ({e})", seg.id);
        snapped.clone()
    });
    Ok(Outline {
        traced,
        simplified,
        snapped,
        regularized,
        orientations,
    })
}

/// IoU of the rectangles against the segment over a window holding both.
fn local_iou(rects: &[OrientedRect], seg: &BuildingSegment, w: usize, h: usize) -> Result<f64> {
    let mut bb = seg.bbox;
    for c in rects.iter().flat_map(|r| r.corners()) {
        let x = c.x.round().clamp(0.0, (w - 1) as f64) as usize;
        let y = c.y.round().clamp(0.0, (h - 1) as f64) as usize;
        bb = bb.include(x, y);
    }
    let bb = bb.expand(1, w, h);
    let (ox, oy) = (bb.x0 as f64, bb.y0 as f64);
    let local: Vec<OrientedRect> = rects
        .iter()
        .map(|r| OrientedRect {
            cx: r.cx - ox,
            cy: r.cy - oy,
            ..*r
        })
        .collect();
    let mask = Mask::from_fn(bb.width(), bb.height(), |x, y| {
        seg.contains((x + bb.x0) as i64, (y + bb.y0) as i64)
    });
    iou_rects_vs_mask(&local, &mask)
}

struct Fitted {
    models: Vec<RoofModel>,
    z_ground: f64,
}

fn fit_segment(seg: &BuildingSegment, rects: &[OrientedRect], scene: &Scene, fp: &FitParams, gsd: f64) -> Result<Fitted> {
    let mut models = Vec::with_capacity(rects.len());
    for r in rects {
        match fit_roof(r, Some(seg), &scene.dsm, gsd, fp) {
            Ok(m) => models.push(m),
            Err(Error::InsufficientData { valid, needed }) => {
                log::debug!("segment {}: rectangle with {valid} of {needed} cells skipped", seg.id);
            }
            Err(e) => return Err(e),
        }
    }
    let inside_min = || {
        seg.pixels()
            .filter_map(|(x, y)| scene.dsm.valid(x, y))
            .fold(f64::INFINITY, f64::min)
    };
    let base = estimate_base_height(seg, &scene.dsm).unwrap_or_else(inside_min);
    let lowest_eave = models.iter().map(|m| m.params.z_eave).fold(f64::INFINITY, f64::min);
    let z_ground = base.min(lowest_eave - MIN_WALL_M);
    if !z_ground.is_finite() {
        return Err(Error::InsufficientData { valid: 0, needed: 1 });
    }
    for m in &mut models {
        m.z_ground = z_ground;
    }
    Ok(Fitted { models, z_ground })
}

fn mesh_segment(
    seg: &BuildingSegment,
    outline: &Outline,
    fitted: &Fitted,
    regularity: Regularity,
    scene: &Scene,
    frame: &SceneFrame,
    max_faces: usize,
) -> Result<TriMesh> {
    let z_ground = fitted.z_ground;
    if regularity == Regularity::Regular && !fitted.models.is_empty() {
        let mut mesh = TriMesh::default();
        for m in &fitted.models {
            mesh.append(&model_to_mesh(m, frame)?);
        }
        return Ok(mesh);
    }
    match irregular_mesh(&scene.dsm, &outline.regularized, z_ground, frame, max_faces) {
        Err(Error::EmptyFootprint) => {
            log::debug!("segment {}: meshing the traced outline", seg.id);
            irregular_mesh(&scene.dsm, &outline.traced, z_ground, frame, max_faces)
        }
        r => r,
    }
}

/// Write a building's modelled heights into `heights`, keeping the higher
/// value where rectangles overlap.
fn paint_heights(b: &Building, scene: &Scene, gsd: f64, heights: &mut Grid<f64>) -> Result<()> {
    let (w, h) = (scene.width(), scene.height());
    if b.regularity == Regularity::Regular && !b.models.is_empty() {
        for m in &b.models {
            let rr = synthesize_roof_height(m.kind, &m.params, &m.rect, gsd, w, h)?;
            for y in 0..rr.bbox.height() {
                for x in 0..rr.bbox.width() {
                    if let Some(z) = rr.raster.valid(x, y) {
                        let cell = heights.get_mut(x + rr.bbox.x0, y + rr.bbox.y0);
                        if !(cell.is_finite() && *cell >= z) {
                            *cell = z;
                        }
                    }
                }
            }
        }
    } else {
        for (x, y) in b.segment.pixels() {
            let z = scene.dsm.valid(x, y).unwrap_or(b.z_ground);
            let cell = heights.get_mut(x, y);
            if !(cell.is_finite() && *cell >= z) {
                *cell = z;
            }
        }
    }
    Ok(())
}

/// Reconstruct every building of the scene without touching the disk.
pub fn reconstruct(scene: &Scene, config: &Config, workers: usize) -> Result<Reconstruction> {
    let (w, h) = (scene.width(), scene.height());
    if w > MAX_INPUT_SIDE || h > MAX_INPUT_SIDE {
        return Err(Error::InputTooLarge {
            width: w,
            height: h,
            max: MAX_INPUT_SIDE,
        });
    }
    scene.validate()?;
    let pool = thread_pool(workers)?;
    pool.install(|| reconstruct_in_pool(scene, config))
}

fn reconstruct_in_pool(scene: &Scene, config: &Config) -> Result<Reconstruction> {
    let (w, h) = (scene.width(), scene.height());
    let frame = scene.frame();
    let gsd = frame.gsd;
    let mut clock = Clock(Vec::new());

    let segments = clock.time("segmentation", || Ok(segment_scene(scene, config)))?;
    log::info!("{} building segments", segments.len());
    let sid = |s: &BuildingSegment| s.id;

    let outlines = clock.time("polygon", || per_segment("polygon", &segments, sid, |s| extract_outline(s, scene, config)))?;

    let dp = DecomposeParams {
        presplit: PresplitParams {
            dsm_gradient: config.dsm_gradient,
            ..Default::default()
        },
        merge: MergeThresholds {
            t_d: config.t_d,
            t_h1: config.t_h1,
            t_h2: config.t_h2,
            ..Default::default()
        },
        ..Default::default()
    };
    let paired: Vec<_> = segments.iter().zip(&outlines).collect();
    let rects = clock.time("rectangle", || {
        per_segment("rectangle", &paired, |p| p.0.id, |(s, o)| {
            Ok(decompose_segment(s, o.orientations.dominant_angle(), &scene.dsm, &scene.ortho, &dp).rects)
        })
    })?;

    let refined = match (&scene.roads, &scene.geo) {
        (Some(roads), Some(geo)) => {
            let rp = RefineParams {
                d_max_m: config.road_d_max_m,
                tol_deg: config.road_tol_deg,
            };
            let paired: Vec<_> = segments.iter().zip(&rects).collect();
            clock.time("refinement", || {
                per_segment("refinement", &paired, |p| p.0.id, |(s, r)| refine_rects(r, s, roads, geo, &rp))
            })?
        }
        _ => {
            log::info!("no road vectors, refinement skipped");
            rects.clone()
        }
    };

    let fp = FitParams {
        z_step: config.z_step_m,
        inset_divisions: config.inset_divisions,
        select_rel: config.select_rel,
        select_abs_m: config.select_abs_m,
        ..Default::default()
    };
    let paired: Vec<_> = segments.iter().zip(&refined).collect();
    let fitted = clock.time("model", || {
        per_segment("model", &paired, |p| p.0.id, |(s, r)| fit_segment(s, r, scene, &fp, gsd))
    })?;

    let items: Vec<_> = (0..segments.len()).collect();
    let meshed = clock.time("mesh", || {
        per_segment("mesh", &items, |&i| segments[i].id, |&i| {
            let s = &segments[i];
            let iou = if refined[i].is_empty() {
                0.0
            } else {
                local_iou(&refined[i], s, w, h)?
            };
            let regularity = irregular_decision(iou, s.area_px, config.irregular_iou, config.irregular_area_px);
            let mesh = mesh_segment(s, &outlines[i], &fitted[i], regularity, scene, &frame, config.max_faces)?;
            Ok((iou, regularity, mesh))
        })
    })?;

    let mut buildings = Vec::with_capacity(segments.len());
    let parts = segments.into_iter().zip(outlines).zip(rects).zip(refined).zip(fitted).zip(meshed);
    for (((((segment, outline), rects), refined), fitted), (iou, regularity, mesh)) in parts {
        buildings.push(Building {
            segment,
            outline,
            rects,
            refined,
            iou,
            regularity,
            z_ground: fitted.z_ground,
            models: fitted.models,
            mesh,
        });
    }
    let mut heights = Grid::new(w, h, f64::NAN);
    for b in &buildings {
        paint_heights(b, scene, gsd, &mut heights)?;
    }
    Ok(Reconstruction {
        buildings,
        heights,
        timings: clock.0,
    })
}

fn polygon_csv(o: &Outline) -> String {
    let mut s = String::from("step,index,x,y\n");
    for (step, p) in [
        ("traced", &o.traced),
        ("simplified", &o.simplified),
        ("snapped", &o.snapped),
        ("regularized", &o.regularized),
    ] {
        for (i, v) in p.vertices.iter().enumerate() {
            s.push_str(&format!("{step},{i},{:.6},{:.6}\n", v.x, v.y));
        }
    }
    s
}

fn orientation_csv(o: &OrientationSet) -> String {
    let mut s = String::from("index,angle_deg,dominant\n");
    for (i, a) in o.angles.iter().enumerate() {
        s.push_str(&format!("{i},{:.6},{}\n", a.to_degrees(), u8::from(i == o.dominant)));
    }
    s
}

fn rects_csv(rects: &[OrientedRect]) -> String {
    let mut s = String::from("index,cx,cy,len,wid,theta_deg\n");
    for (i, r) in rects.iter().enumerate() {
        s.push_str(&format!(
            "{i},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.cx,
            r.cy,
            r.len,
            r.wid,
            r.theta.to_degrees()
        ));
    }
    s
}

fn segment_pgm(seg: &BuildingSegment) -> Grid<u8> {
    seg.mask.map(|&b| if b { 255 } else { 0 })
}

/// Local raster of a building's modelled heights over its bounding box.
fn roof_dsm(b: &Building, heights: &Grid<f64>, template: &RasterF32) -> RasterF32 {
    let bb: PixelBox = b.segment.bbox;
    let nodata = template.nodata;
    let samples = (bb.y0..bb.y1)
        .flat_map(|y| (bb.x0..bb.x1).map(move |x| (x, y)))
        .map(|(x, y)| {
            let z = *heights.get(x, y);
            if b.segment.contains(x as i64, y as i64) && z.is_finite() {
                z as f32
            } else {
                nodata
            }
        })
        .collect();
    let (xll, yll) = lower_left(template, bb);
    RasterF32::new(bb.width(), bb.height(), samples, nodata).with_header(template.cellsize, xll, yll)
}

/// ASC lower-left corner of a sub-window of `r`.
fn lower_left(r: &RasterF32, bb: PixelBox) -> (f64, f64) {
    (
        r.xllcorner + bb.x0 as f64 * r.cellsize,
        r.yllcorner + (r.height() - bb.y1) as f64 * r.cellsize,
    )
}

fn full_heights(heights: &Grid<f64>, template: &RasterF32) -> RasterF32 {
    let nodata = template.nodata;
    let samples = heights
        .as_slice()
        .iter()
        .map(|&z| if z.is_finite() { z as f32 } else { nodata })
        .collect();
    RasterF32::new(heights.width(), heights.height(), samples, nodata).with_header(
        template.cellsize,
        template.xllcorner,
        template.yllcorner,
    )
}

/// Persist every stage of a reconstruction under `out`.
pub fn write_outputs(rec: &Reconstruction, scene: &Scene, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let bs = &rec.buildings;
    let each = |f: &dyn Fn(&Building) -> Payload| -> Vec<Artifact> {
        bs.iter()
            .map(|b| Artifact {
                segment_id: b.segment.id,
                payload: f(b),
            })
            .collect()
    };
    let mut files = Vec::new();
    files.extend(persist_stage(out, "segment", &each(&|b| Payload::Mask(segment_pgm(&b.segment))))?);
    files.extend(persist_stage(out, "polygon", &each(&|b| Payload::Csv(polygon_csv(&b.outline))))?);
    files.extend(persist_stage(
        out,
        "orientation",
        &each(&|b| Payload::Csv(orientation_csv(&b.outline.orientations))),
    )?);
    files.extend(persist_stage(out, "rectangles", &each(&|b| Payload::Csv(rects_csv(&b.rects))))?);
    if scene.roads.is_some() {
        files.extend(persist_stage(out, "refined", &each(&|b| Payload::Csv(rects_csv(&b.refined))))?);
    }
    files.extend(persist_stage(
        out,
        "roof",
        &each(&|b| {
            Payload::Json(json!({
                "segment": b.segment.id,
                "area_px": b.segment.area_px,
                "iou": b.iou,
                "regularity": b.regularity,
                "z_ground": b.z_ground,
                "models": b.models,
            }))
        }),
    )?);
    files.extend(persist_stage(
        out,
        "roofdsm",
        &each(&|b| Payload::Asc(roof_dsm(b, &rec.heights, &scene.dsm))),
    )?);
    files.extend(persist_stage(out, "mesh", &each(&|b| Payload::Obj(b.mesh.clone())))?);

    let put = |name: &str, bytes: Vec<u8>| -> Result<PathBuf> {
        let p = out.join(name);
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    files.push(put("scene.obj", crate::io::obj::encode_obj(&rec.scene_mesh()).into_bytes())?);
    files.push(put(
        "model_dsm.asc",
        crate::io::asc::encode_asc(&full_heights(&rec.heights, &scene.dsm)).into_bytes(),
    )?);
    let mask = rec.heights.map(|z| if z.is_finite() { 255u8 } else { 0 });
    files.push(put("model_mask.pgm", crate::io::pnm::encode_pgm(&mask))?);
    let mut summary = serde_json::to_vec_pretty(&rec.summary())?;
    summary.push(b'\n');
    files.push(put("summary.json", summary)?);
    Ok(files)
}

/// Reconstruct `scene` with `workers` threads and write all artifacts.
pub fn run_pipeline(scene: &Scene, config: &Config, out: &Path, workers: usize) -> Result<Report> {
    let mut rec = reconstruct(scene, config, workers)?;
    let t = Instant::now();
    let files = write_outputs(&rec, scene, out)?;
    rec.timings.push(("persist", t.elapsed().as_secs_f64()));
    Ok(Report {
        summary: rec.summary(),
        timings: rec.timings,
        files,
    })
}
