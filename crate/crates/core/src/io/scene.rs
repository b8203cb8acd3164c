use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{GeoTransform, SceneFrame};
use crate::io::{asc, pnm, wkt, worldfile, RoadNetwork};
use crate::raster::{Grid, Mask, RasterF32, RasterRgb};

/// Co-registered inputs for one reconstruction run.
#[derive(Debug, Clone)]
pub struct Scene {
    pub ortho: RasterRgb,
    pub dsm: RasterF32,
    /// Building = 1, everything else = 0.
    pub classmap: Option<Grid<u8>>,
    pub geo: Option<GeoTransform>,
    pub roads: Option<RoadNetwork>,
}

/// Input file locations for [`load_scene`].
#[derive(Debug, Clone)]
pub struct ScenePaths<'a> {
    pub ortho: &'a Path,
    pub dsm: &'a Path,
    pub classmap: Option<&'a Path>,
    pub roads: Option<&'a Path>,
    pub worldfile: Option<&'a Path>,
}

impl Default for ScenePaths<'_> {
    fn default() -> Self {
        Self {
            ortho: Path::new(""),
            dsm: Path::new(""),
            classmap: None,
            roads: None,
            worldfile: None,
        }
    }
}

impl Scene {
    pub fn new(
        ortho: RasterRgb,
        dsm: RasterF32,
        classmap: Option<Grid<u8>>,
        geo: Option<GeoTransform>,
        roads: Option<RoadNetwork>,
    ) -> Result<Self> {
        let scene = Self {
            ortho,
            dsm,
            classmap,
            geo,
            roads,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn width(&self) -> usize {
        self.ortho.width()
    }

    pub fn height(&self) -> usize {
        self.ortho.height()
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.ortho.width(), self.ortho.height());
        let check = |what, gw, gh| {
            if (gw, gh) != (w, h) {
                Err(Error::DimensionMismatch {
                    what,
                    want_w: w,
                    want_h: h,
                    got_w: gw,
                    got_h: gh,
                })
            } else {
                Ok(())
            }
        };
        check("dsm", self.dsm.width(), self.dsm.height())?;
        if let Some(c) = &self.classmap {
            check("classmap", c.width(), c.height())?;
        }
        if self.roads.is_some() && self.geo.is_none() {
            return Err(Error::MissingGeoref);
        }
        if let Some(g) = &self.geo {
            g.validate()?;
        }
        Ok(())
    }

    /// Building mask from the classification map, if one was supplied.
    pub fn building_mask(&self) -> Option<Mask> {
        self.classmap.as_ref().map(|c| c.map(|&v| v != 0))
    }

    pub fn frame(&self) -> SceneFrame {
        match self.geo {
            Some(g) => SceneFrame {
                geo: Some(g),
                gsd: g.gsd(),
            },
            None => SceneFrame::pixels(self.dsm.cellsize),
        }
    }
}

/// Map classification values {0, 1, 255} onto {0, 1}.
pub fn normalize_classmap(raw: Grid<u8>, path: &Path, header_len: usize) -> Result<Grid<u8>> {
    if let Some(i) = raw.as_slice().iter().position(|&v| v != 0 && v != 1 && v != 255) {
        return Err(Error::malformed(
            path,
            header_len + i,
            format!("class value {} (building must be 1 or 255, other classes 0)", raw.as_slice()[i]),
        ));
    }
    Ok(raw.map(|&v| u8::from(v != 0)))
}

pub fn load_scene(paths: &ScenePaths<'_>) -> Result<Scene> {
    if paths.roads.is_some() && paths.worldfile.is_none() {
        return Err(Error::MissingGeoref);
    }
    let ortho = pnm::read_ppm(paths.ortho)?;
    let dsm = asc::read_asc(paths.dsm)?;
    let classmap = match paths.classmap {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            let raw = pnm::decode_pgm(&bytes, p)?;
            let header_len = bytes.len() - raw.width() * raw.height();
            Some(normalize_classmap(raw, p, header_len)?)
        }
        None => None,
    };
    let geo = paths.worldfile.map(worldfile::read_world_file).transpose()?;
    let roads = paths.roads.map(wkt::read_roads).transpose()?;
    Scene::new(ortho, dsm, classmap, geo, roads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterRgb;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, bytes).unwrap();
        p
    }

    fn asc_text(w: usize, h: usize) -> String {
        asc::encode_asc(&RasterF32::filled(w, h, 3.0))
    }

    #[test]
    fn loads_matching_rasters() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(dir.path(), "o.ppm", &pnm::encode_ppm(&RasterRgb::filled(100, 100, [9, 9, 9])));
        let d = write(dir.path(), "d.asc", asc_text(100, 100).as_bytes());
        let s = load_scene(&ScenePaths {
            ortho: &o,
            dsm: &d,
            ..Default::default()
        })
        .unwrap();
        assert_eq!((s.width(), s.height()), (100, 100));
    }

    #[test]
    fn dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(dir.path(), "o.ppm", &pnm::encode_ppm(&RasterRgb::filled(100, 100, [9, 9, 9])));
        let d = write(dir.path(), "d.asc", asc_text(99, 100).as_bytes());
        let err = load_scene(&ScenePaths {
            ortho: &o,
            dsm: &d,
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { got_w: 99, .. }), "{err}");
    }

    #[test]
    fn roads_without_worldfile() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(dir.path(), "o.ppm", &pnm::encode_ppm(&RasterRgb::filled(4, 4, [0, 0, 0])));
        let d = write(dir.path(), "d.asc", asc_text(4, 4).as_bytes());
        let r = write(dir.path(), "r.wkt", b"LINESTRING (0 0, 1 1)\n");
        let err = load_scene(&ScenePaths {
            ortho: &o,
            dsm: &d,
            roads: Some(&r),
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::MissingGeoref));
    }

    #[test]
    fn classmap_values() {
        let p = Path::new("c.pgm");
        let ok = normalize_classmap(Grid::from_vec(3, 1, vec![0, 1, 255]), p, 11).unwrap();
        assert_eq!(ok.as_slice(), &[0, 1, 1]);
        match normalize_classmap(Grid::from_vec(3, 1, vec![0, 7, 1]), p, 11) {
            Err(Error::MalformedFile { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
