use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{asc, obj, pnm};
use crate::mesh::TriMesh;
use crate::raster::{Grid, RasterF32};

#[derive(Debug, Clone)]
pub enum Payload {
    /// Written as PGM, 0 or 255.
    Mask(Grid<u8>),
    Csv(String),
    Json(serde_json::Value),
    Obj(TriMesh),
    Asc(RasterF32),
}

impl Payload {
    pub fn extension(&self) -> &'static str {
        match self {
            Payload::Mask(_) => "pgm",
            Payload::Csv(_) => "csv",
            Payload::Json(_) => "json",
            Payload::Obj(_) => "obj",
            Payload::Asc(_) => "asc",
        }
    }

    fn bytes(&self) -> Result<Vec<u8>> {
        Ok(match self {
            Payload::Mask(m) => pnm::encode_pgm(m),
            Payload::Csv(s) => s.clone().into_bytes(),
            Payload::Json(v) => {
                let mut b = serde_json::to_vec_pretty(v)?;
                b.push(b'\n');
                b
            }
            Payload::Obj(m) => obj::encode_obj(m).into_bytes(),
            Payload::Asc(r) => asc::encode_asc(r).into_bytes(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub segment_id: u32,
    pub payload: Payload,
}

pub fn artifact_name(stage: &str, segment_id: u32, ext: &str) -> String {
    format!("{stage}_{segment_id:06}.{ext}")
}

/// Write one file per artifact as `<stage>_<segment id>.<ext>` and return
/// the paths in input order.
pub fn persist_stage(dir: &Path, stage: &str, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    if artifacts.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(artifact_name(stage, a.segment_id, a.payload.extension()));
            std::fs::write(&path, a.payload.bytes()?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
