use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use lod2_core::config::{validate_config, RawConfig};
use lod2_core::eval::{iou2, iou3, metrics_csv, MetricRow, DEFAULT_VOXEL_H};
use lod2_core::io::{asc, load_scene, pnm, ScenePaths};
use lod2_core::pipeline::run_pipeline;
use lod2_core::raster::Grid;
use lod2_core::synthetic::{generate_scene, random_layout, write_scene, SceneSpec};

#[derive(Parser, Debug)]
#[command(name = "lod2", version, about = "LoD-2 building models from an orthophoto and a DSM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reconstruct building meshes for a scene.
    Run(RunArgs),
    /// Write a synthetic scene with known ground truth.
    Synth(SynthArgs),
    /// Score a reconstruction against reference rasters.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Orthophoto, binary PPM.
    #[arg(long)]
    ortho: PathBuf,
    /// Surface model, ESRI ASCII grid.
    #[arg(long)]
    dsm: PathBuf,
    /// Building classification, binary PGM (building 1 or 255).
    #[arg(long)]
    classmap: Option<PathBuf>,
    /// Road centerlines, one WKT LINESTRING per line.
    #[arg(long)]
    roads: Option<PathBuf>,
    #[arg(long)]
    worldfile: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// JSON file of parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Minimum edge length of a main orientation, pixels [45, 150].
    #[arg(long)]
    tl: Option<f64>,
    /// Color difference threshold for merging [6, 20].
    #[arg(long)]
    td: Option<f64>,
    /// Mean height difference threshold for merging, meters [0.5, 1.5].
    #[arg(long)]
    th1: Option<f64>,
    /// Edge height jump threshold for merging, meters [0.1, 0.3].
    #[arg(long)]
    th2: Option<f64>,

    #[arg(long, help_heading = "Advanced")]
    dp_epsilon: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    min_area: Option<usize>,
    #[arg(long, help_heading = "Advanced")]
    min_height: Option<f64>,
    /// Ground level for segmenting without a classification map.
    #[arg(long, help_heading = "Advanced")]
    ground_height: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    road_dmax: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    road_tol: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    dsm_gradient: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    z_step: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    inset_divisions: Option<usize>,
    #[arg(long, help_heading = "Advanced")]
    irregular_iou: Option<f64>,
    #[arg(long, help_heading = "Advanced")]
    irregular_area: Option<usize>,
    #[arg(long, help_heading = "Advanced")]
    max_faces: Option<usize>,

    /// Worker threads; output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Scene description as JSON; replaces the random layout.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    size: usize,
    /// Buildings of each roof kind.
    #[arg(long, default_value_t = 2)]
    per_kind: usize,
    /// DSM noise standard deviation, meters.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred_mask: PathBuf,
    #[arg(long)]
    ref_mask: PathBuf,
    #[arg(long)]
    pred_dsm: PathBuf,
    #[arg(long)]
    ref_dsm: PathBuf,
    /// Ground height the voxel columns start from.
    #[arg(long)]
    ground: f64,
    #[arg(long, default_value_t = DEFAULT_VOXEL_H)]
    voxel_h: f64,
    #[arg(long, default_value = "scene")]
    name: String,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn raw_config(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).map_err(lod2_core::Error::from)?
            }
            None => RawConfig::default(),
        };
        let over = |slot: &mut Option<f64>, v: Option<f64>| {
            if v.is_some() {
                *slot = v;
            }
        };
        over(&mut raw.t_l, self.tl);
        over(&mut raw.t_d, self.td);
        over(&mut raw.t_h1, self.th1);
        over(&mut raw.t_h2, self.th2);
        over(&mut raw.dp_epsilon_px, self.dp_epsilon);
        over(&mut raw.min_height_m, self.min_height);
        over(&mut raw.ground_height_m, self.ground_height);
        over(&mut raw.road_d_max_m, self.road_dmax);
        over(&mut raw.road_tol_deg, self.road_tol);
        over(&mut raw.dsm_gradient, self.dsm_gradient);
        over(&mut raw.z_step_m, self.z_step);
        over(&mut raw.irregular_iou, self.irregular_iou);
        raw.min_area_px = self.min_area.or(raw.min_area_px);
        raw.inset_divisions = self.inset_divisions.or(raw.inset_divisions);
        raw.irregular_area_px = self.irregular_area.or(raw.irregular_area_px);
        raw.max_faces = self.max_faces.or(raw.max_faces);
        Ok(raw)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let (config, warnings) = validate_config(&args.raw_config()?)?;
    for w in warnings {
        warn!("{w}");
    }
    let scene = load_scene(&ScenePaths {
        ortho: &args.ortho,
        dsm: &args.dsm,
        classmap: args.classmap.as_deref(),
        roads: args.roads.as_deref(),
        worldfile: args.worldfile.as_deref(),
    })?;
    info!("scene {}x{}", scene.width(), scene.height());
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let report = run_pipeline(&scene, &config, &args.out, workers)?;
    for (stage, secs) in &report.timings {
        eprintln!("{stage:>14} {secs:9.3} s");
    }
    println!("{}", serde_json::to_string(&report.summary)?);
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec: SceneSpec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(lod2_core::Error::from)?
        }
        None => random_layout(args.size, args.per_kind, args.noise, args.seed),
    };
    let g = generate_scene(&spec)?;
    let files = write_scene(&args.out, &g)?;
    let mut spec_json = serde_json::to_vec_pretty(&spec)?;
    spec_json.push(b'\n');
    let spec_path = args.out.join("spec.json");
    std::fs::write(&spec_path, spec_json).with_context(|| format!("writing {}", spec_path.display()))?;
    info!("{} buildings written to {}", g.truth.len(), files.ortho.parent().unwrap_or(Path::new(".")).display());
    Ok(())
}

/// Heights with nodata cells as NaN.
fn heights(path: &Path) -> Result<Grid<f64>> {
    let r = asc::read_asc(path)?;
    Ok(Grid::from_fn(r.width(), r.height(), |x, y| r.valid(x, y).unwrap_or(f64::NAN)))
}

fn eval(args: &EvalArgs) -> Result<()> {
    anyhow::ensure!(args.voxel_h > 0.0, "voxel height must be positive");
    let pm = pnm::read_pgm(&args.pred_mask)?.map(|&v| v != 0);
    let rm = pnm::read_pgm(&args.ref_mask)?.map(|&v| v != 0);
    let row = MetricRow {
        scene: args.name.clone(),
        iou2: iou2(&pm, &rm)?,
        iou3: iou3(&heights(&args.pred_dsm)?, &heights(&args.ref_dsm)?, args.ground, args.voxel_h)?,
    };
    let csv = metrics_csv(&[row]);
    match &args.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn error_line(e: &anyhow::Error) -> String {
    let code = e
        .downcast_ref::<lod2_core::Error>()
        .map_or("failure", lod2_core::Error::code);
    serde_json::json!({ "error": code, "message": format!("{e:#}") }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
