//! Scripted scenes with known ground truth.
//!
//! Heights are evaluated here with a separate, deliberately plain
//! implementation so the generator can check the roof module instead of
//! repeating it.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::decompose::OrientedRect;
use crate::error::{Error, Result};
use crate::geo::GeoTransform;
use crate::io::{asc, pnm, worldfile, Scene};
use crate::mesh::{model_to_mesh, TriMesh};
use crate::raster::{Grid, Mask, RasterF32, RasterRgb};
use crate::roof::{RoofKind, RoofModel, RoofParams};

pub const GROUND_RGB: [u8; 3] = [96, 112, 84];

/// Rectangle in pixel units with the angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectSpec {
    pub cx: f64,
    pub cy: f64,
    pub len: f64,
    pub wid: f64,
    pub theta_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSpec {
    pub rect: RectSpec,
    pub kind: RoofKind,
    pub params: RoofParams,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub gsd_m: f64,
    pub ground_m: f64,
    pub noise_sigma_m: f64,
    pub seed: u64,
    /// World coordinates of the center of pixel (0, 0).
    #[serde(default = "default_origin")]
    pub origin: [f64; 2],
    pub buildings: Vec<BuildingSpec>,
}

fn default_origin() -> [f64; 2] {
    [500000.0, 4400000.0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthBuilding {
    pub id: usize,
    pub model: RoofModel,
}

#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub scene: Scene,
    /// Noise-free surface.
    pub clean_dsm: RasterF32,
    /// Building index + 1 per pixel, 0 for ground.
    pub owner: Grid<u32>,
    pub truth: Vec<TruthBuilding>,
}

impl GeneratedScene {
    pub fn footprint(&self) -> Mask {
        self.owner.map(|&o| o != 0)
    }

    pub fn truth_meshes(&self) -> Result<Vec<TriMesh>> {
        let frame = self.scene.frame();
        self.truth.iter().map(|t| model_to_mesh(&t.model, &frame)).collect()
    }
}

/// Local coordinates (pixels) of a point relative to the rectangle corner,
/// or `None` outside.
fn local(r: &RectSpec, x: f64, y: f64) -> Option<(f64, f64)> {
    let t = r.theta_deg.to_radians();
    let (dx, dy) = (x - r.cx, y - r.cy);
    let u = dx * t.cos() + dy * t.sin() + r.len / 2.0;
    let v = -dx * t.sin() + dy * t.cos() + r.wid / 2.0;
    let eps = 1e-9;
    if u < -eps || u > r.len + eps || v < -eps || v > r.wid + eps {
        return None;
    }
    Some((u.clamp(0.0, r.len), v.clamp(0.0, r.wid)))
}

fn plain_height(kind: RoofKind, p: &RoofParams, l: f64, w: f64, x: f64, y: f64) -> f64 {
    let rise = p.z_ridge - p.z_eave;
    let mut s: f64 = match kind {
        RoofKind::Flat => return p.z_eave,
        RoofKind::Gable | RoofKind::Hip | RoofKind::Pyramid => {
            if y <= w / 2.0 {
                2.0 * y / w
            } else {
                2.0 * (w - y) / w
            }
        }
        RoofKind::Mansard => 1.0,
    };
    if kind == RoofKind::Gable {
        s = 1.0 - (2.0 * y / w - 1.0).abs();
    }
    let along = match kind {
        RoofKind::Pyramid => l / 2.0,
        RoofKind::Hip | RoofKind::Mansard => p.hipl,
        _ => 0.0,
    };
    if along > 0.0 {
        s = s.min(x / along).min((l - x) / along);
    }
    if kind == RoofKind::Mansard && p.hipw > 0.0 {
        s = s.min(y / p.hipw).min((w - y) / p.hipw);
    }
    p.z_eave + rise * s.clamp(0.0, 1.0)
}

pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene> {
    let (w, h, gsd) = (spec.width, spec.height, spec.gsd_m);
    if w == 0 || h == 0 || gsd <= 0.0 || spec.noise_sigma_m < 0.0 {
        return Err(Error::InvalidParams(format!(
            "scene {w}x{h}, gsd {gsd}, noise {}",
            spec.noise_sigma_m
        )));
    }
    let mut owner: Grid<u32> = Grid::new(w, h, 0);
    let mut clean = RasterF32::filled(w, h, spec.ground_m as f32);
    let mut ortho = RasterRgb::filled(w, h, GROUND_RGB);
    let mut truth = Vec::with_capacity(spec.buildings.len());
    for (i, b) in spec.buildings.iter().enumerate() {
        let (l, wd) = (b.rect.len * gsd, b.rect.wid * gsd);
        if b.rect.len < b.rect.wid {
            return Err(Error::InvalidParams(format!("building {i}: len < wid")));
        }
        b.params.validate(b.kind, l, wd)?;
        if b.params.z_eave <= spec.ground_m {
            return Err(Error::InvalidParams(format!("building {i}: eave not above ground")));
        }
        for y in 0..h {
            for x in 0..w {
                let Some((u, v)) = local(&b.rect, x as f64, y as f64) else { continue };
                let prev = *owner.get(x, y);
                if prev != 0 {
                    return Err(Error::Overlap { a: prev as usize - 1, b: i });
                }
                owner.set(x, y, i as u32 + 1);
                clean.set(x, y, plain_height(b.kind, &b.params, l, wd, u * gsd, v * gsd) as f32);
                ortho.set_pixel(x, y, b.color);
            }
        }
        let r = &b.rect;
        truth.push(TruthBuilding {
            id: i,
            model: RoofModel {
                rect: OrientedRect::new(r.cx, r.cy, r.len, r.wid, r.theta_deg.to_radians()),
                kind: b.kind,
                params: b.params,
                rmse: 0.0,
                z_ground: spec.ground_m,
            },
        });
    }
    let geo = GeoTransform::north_up(gsd, spec.origin[0], spec.origin[1]);
    let header = |r: RasterF32| {
        r.with_header(
            gsd,
            spec.origin[0] - gsd / 2.0,
            spec.origin[1] - (h as f64 - 0.5) * gsd,
        )
    };
    let clean = header(clean);
    let mut dsm = clean.clone();
    if spec.noise_sigma_m > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.noise_sigma_m).expect("sigma checked above");
        for y in 0..h {
            for x in 0..w {
                let z = dsm.value(x, y) as f64 + noise.sample(&mut rng);
                dsm.set(x, y, z as f32);
            }
        }
    }
    let classmap = owner.map(|&o| u8::from(o != 0));
    let scene = Scene::new(ortho, dsm, Some(classmap), Some(geo), None)?;
    Ok(GeneratedScene {
        scene,
        clean_dsm: clean,
        owner,
        truth,
    })
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Random non-overlapping layout: `per_kind` buildings of every roof kind
/// on a jittered grid.
pub fn random_layout(size: usize, per_kind: usize, noise_sigma_m: f64, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_kind * RoofKind::ALL.len();
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols).max(1);
    let (cw, ch) = (size as f64 / cols as f64, size as f64 / rows as f64);
    let gsd = 0.5;
    let ground = 100.0;
    let mut buildings = Vec::with_capacity(n);
    for i in 0..n {
        let kind = RoofKind::ALL[i % RoofKind::ALL.len()];
        // side lengths in pixels, kept inside the cell diagonal budget
        let max_side = 0.65 * cw.min(ch);
        let len = round3(rng.random_range(0.55..1.0) * max_side);
        let wid = round3(rng.random_range(0.45..0.75) * len);
        let theta_deg = round3(rng.random_range(0.0..180.0));
        let (col, row) = (i % cols, i / cols);
        let cx = round3((col as f64 + 0.5) * cw + rng.random_range(-0.05..0.05) * cw);
        let cy = round3((row as f64 + 0.5) * ch + rng.random_range(-0.05..0.05) * ch);
        let (l, w) = (len * gsd, wid * gsd);
        let z_eave = round3(ground + rng.random_range(5.0..15.0));
        let rise = if kind == RoofKind::Flat { 0.0 } else { round3(rng.random_range(2.0..5.0)) };
        let (hipl, hipw) = match kind {
            RoofKind::Hip => (round3(rng.random_range(0.15..0.35) * l), 0.0),
            RoofKind::Mansard => (
                round3(rng.random_range(0.1..0.3) * l),
                round3(rng.random_range(0.1..0.3) * w),
            ),
            _ => (0.0, 0.0),
        };
        buildings.push(BuildingSpec {
            rect: RectSpec {
                cx,
                cy,
                len,
                wid,
                theta_deg,
            },
            kind,
            params: RoofParams {
                z_ridge: round3(z_eave + rise),
                z_eave,
                hipl,
                hipw,
            },
            color: [
                rng.random_range(130..250),
                rng.random_range(20..120),
                rng.random_range(20..250),
            ],
        });
    }
    SceneSpec {
        width: size,
        height: size,
        gsd_m: gsd,
        ground_m: ground,
        noise_sigma_m,
        seed,
        origin: default_origin(),
        buildings,
    }
}

/// Files written by [`write_scene`].
#[derive(Debug, Clone)]
pub struct SceneFiles {
    pub ortho: PathBuf,
    pub dsm: PathBuf,
    pub classmap: PathBuf,
    pub worldfile: PathBuf,
    pub truth: PathBuf,
    pub truth_dsm: PathBuf,
    pub truth_mask: PathBuf,
}

pub fn write_scene(dir: &Path, g: &GeneratedScene) -> Result<SceneFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SceneFiles {
        ortho: dir.join("ortho.ppm"),
        dsm: dir.join("dsm.asc"),
        classmap: dir.join("classmap.pgm"),
        worldfile: dir.join("scene.tfw"),
        truth: dir.join("truth.json"),
        truth_dsm: dir.join("truth_dsm.asc"),
        truth_mask: dir.join("truth_mask.pgm"),
    };
    let put = |p: &Path, bytes: Vec<u8>| std::fs::write(p, bytes).map_err(|e| Error::io(p, e));
    let s = &g.scene;
    put(&files.ortho, pnm::encode_ppm(&s.ortho))?;
    put(&files.dsm, asc::encode_asc(&s.dsm).into_bytes())?;
    let mask = g.owner.map(|&o| if o != 0 { 255u8 } else { 0 });
    put(&files.classmap, pnm::encode_pgm(&mask))?;
    put(&files.truth_mask, pnm::encode_pgm(&mask))?;
    put(&files.truth_dsm, asc::encode_asc(&g.clean_dsm).into_bytes())?;
    let geo = s.geo.expect("generated scenes are georeferenced");
    put(&files.worldfile, worldfile::encode_world_file(&geo).into_bytes())?;
    let mut json = serde_json::to_vec_pretty(&g.truth)?;
    json.push(b'\n');
    put(&files.truth, json)?;
    Ok(files)
}
