//! Reconstruction parameters, their ranges and defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_T_L: f64 = 90.0;
pub const DEFAULT_T_D: f64 = 10.0;
pub const DEFAULT_T_H1: f64 = 0.5;
pub const DEFAULT_T_H2: f64 = 0.1;

pub const T_L_RANGE: (f64, f64) = (45.0, 150.0);
pub const T_D_RANGE: (f64, f64) = (6.0, 20.0);
pub const T_H1_RANGE: (f64, f64) = (0.5, 1.5);
pub const T_H2_RANGE: (f64, f64) = (0.1, 0.3);

pub const MAX_INPUT_SIDE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Config {
    /// Minimum total edge length (px) for a main orientation.
    pub t_l: f64,
    /// Mean color difference below which rectangles merge.
    pub t_d: f64,
    /// Mean height difference (m) below which rectangles merge.
    pub t_h1: f64,
    /// Largest height jump (m) along a shared edge for merging.
    pub t_h2: f64,

    pub dp_epsilon_px: f64,
    pub min_area_px: usize,
    pub min_height_m: f64,
    /// Ground level for the fallback segmentation; a low DSM percentile
    /// when unset.
    pub ground_height_m: Option<f64>,
    pub road_d_max_m: f64,
    pub road_tol_deg: f64,
    pub dsm_gradient: f64,
    pub z_step_m: f64,
    pub inset_divisions: usize,
    pub select_rel: f64,
    pub select_abs_m: f64,
    pub irregular_iou: f64,
    pub irregular_area_px: usize,
    pub max_faces: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            t_l: DEFAULT_T_L,
            t_d: DEFAULT_T_D,
            t_h1: DEFAULT_T_H1,
            t_h2: DEFAULT_T_H2,
            dp_epsilon_px: crate::polygon::DEFAULT_DP_EPSILON,
            min_area_px: crate::segment::DEFAULT_MIN_AREA,
            min_height_m: crate::segment::DEFAULT_MIN_HEIGHT,
            ground_height_m: None,
            road_d_max_m: crate::refine::DEFAULT_D_MAX_M,
            road_tol_deg: crate::refine::DEFAULT_TOL_DEG,
            dsm_gradient: 1.0,
            z_step_m: 0.25,
            inset_divisions: 40,
            select_rel: 0.05,
            select_abs_m: 0.02,
            irregular_iou: crate::mesh::IRREGULAR_IOU,
            irregular_area_px: crate::mesh::IRREGULAR_AREA_PX,
            max_faces: crate::mesh::DEFAULT_MAX_FACES,
        }
    }
}

/// Unvalidated parameters; anything left out takes its default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub t_l: Option<f64>,
    pub t_d: Option<f64>,
    pub t_h1: Option<f64>,
    pub t_h2: Option<f64>,
    pub dp_epsilon_px: Option<f64>,
    pub min_area_px: Option<usize>,
    pub min_height_m: Option<f64>,
    pub ground_height_m: Option<f64>,
    pub road_d_max_m: Option<f64>,
    pub road_tol_deg: Option<f64>,
    pub dsm_gradient: Option<f64>,
    pub z_step_m: Option<f64>,
    pub inset_divisions: Option<usize>,
    pub irregular_iou: Option<f64>,
    pub irregular_area_px: Option<usize>,
    pub max_faces: Option<usize>,
}

fn ranged(name: &'static str, v: Option<f64>, default: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    let v = v.unwrap_or(default);
    if !(lo..=hi).contains(&v) {
        return Err(Error::ConfigOutOfRange { name, value: v, lo, hi });
    }
    Ok(v)
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
    }
}

/// Fill defaults, reject the four thresholds outside their ranges, and
/// report other parameters that are far from their defaults.
pub fn validate_config(raw: &RawConfig) -> Result<(Config, Vec<String>)> {
    let d = Config::default();
    let mut c = Config {
        t_l: ranged("T_l", raw.t_l, d.t_l, T_L_RANGE)?,
        t_d: ranged("T_d", raw.t_d, d.t_d, T_D_RANGE)?,
        t_h1: ranged("T_h1", raw.t_h1, d.t_h1, T_H1_RANGE)?,
        t_h2: ranged("T_h2", raw.t_h2, d.t_h2, T_H2_RANGE)?,
        ..d
    };
    let mut warnings = Vec::new();
    let mut advanced = |name: &'static str, v: Option<f64>, default: f64| -> Result<f64> {
        let v = match v {
            Some(v) => positive(name, v)?,
            None => default,
        };
        if v > 4.0 * default || v < default / 4.0 {
            warnings.push(format!("{name} = {v} is far from its default {default}"));
        }
        Ok(v)
    };
    c.dp_epsilon_px = advanced("dp_epsilon_px", raw.dp_epsilon_px, d.dp_epsilon_px)?;
    c.min_height_m = advanced("min_height_m", raw.min_height_m, d.min_height_m)?;
    c.road_d_max_m = advanced("road_d_max_m", raw.road_d_max_m, d.road_d_max_m)?;
    c.road_tol_deg = advanced("road_tol_deg", raw.road_tol_deg, d.road_tol_deg)?;
    c.dsm_gradient = advanced("dsm_gradient", raw.dsm_gradient, d.dsm_gradient)?;
    c.z_step_m = advanced("z_step_m", raw.z_step_m, d.z_step_m)?;
    c.irregular_iou = advanced("irregular_iou", raw.irregular_iou, d.irregular_iou)?;
    c.min_area_px = advanced("min_area_px", raw.min_area_px.map(|v| v as f64), d.min_area_px as f64)? as usize;
    c.inset_divisions =
        advanced("inset_divisions", raw.inset_divisions.map(|v| v as f64), d.inset_divisions as f64)? as usize;
    c.irregular_area_px =
        advanced("irregular_area_px", raw.irregular_area_px.map(|v| v as f64), d.irregular_area_px as f64)? as usize;
    c.max_faces = advanced("max_faces", raw.max_faces.map(|v| v as f64), d.max_faces as f64)? as usize;
    if c.irregular_iou > 1.0 {
        return Err(Error::InvalidParams(format!("irregular_iou {} above 1", c.irregular_iou)));
    }
    if c.max_faces < 8 {
        return Err(Error::InvalidParams(format!("max_faces {} cannot hold a closed mesh", c.max_faces)));
    }
    c.ground_height_m = raw.ground_height_m;
    Ok((c, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_defaults() {
        let (c, w) = validate_config(&RawConfig::default()).unwrap();
        assert_eq!((c.t_l, c.t_d, c.t_h1, c.t_h2), (90.0, 10.0, 0.5, 0.1));
        assert!(w.is_empty());
    }

    #[test]
    fn bounds_are_inclusive() {
        for (lo, hi, set) in [
            (45.0, 150.0, (|r: &mut RawConfig, v| r.t_l = Some(v)) as fn(&mut RawConfig, f64)),
            (6.0, 20.0, |r, v| r.t_d = Some(v)),
            (0.5, 1.5, |r, v| r.t_h1 = Some(v)),
            (0.1, 0.3, |r, v| r.t_h2 = Some(v)),
        ] {
            for v in [lo, hi] {
                let mut r = RawConfig::default();
                set(&mut r, v);
                assert!(validate_config(&r).is_ok(), "{v}");
            }
        }
    }

    #[test]
    fn out_of_range_names_the_range() {
        let r = RawConfig {
            t_d: Some(25.0),
            ..Default::default()
        };
        let e = validate_config(&r).unwrap_err();
        assert!(matches!(e, Error::ConfigOutOfRange { name: "T_d", lo: 6.0, hi: 20.0, .. }));
        assert!(e.to_string().contains("[6, 20]"), "{e}");
        let r = RawConfig {
            t_h2: Some(0.05),
            ..Default::default()
        };
        assert!(matches!(validate_config(&r), Err(Error::ConfigOutOfRange { name: "T_h2", .. })));
    }

    #[test]
    fn far_advanced_values_warn() {
        let r = RawConfig {
            dp_epsilon_px: Some(20.0),
            ..Default::default()
        };
        let (c, w) = validate_config(&r).unwrap();
        assert_eq!(c.dp_epsilon_px, 20.0);
        assert_eq!(w.len(), 1);
        let r = RawConfig {
            z_step_m: Some(-1.0),
            ..Default::default()
        };
        assert!(validate_config(&r).is_err());
    }

    #[test]
    fn parses_json() {
        let r: RawConfig = serde_json::from_str(r#"{"t_l": 60, "max_faces": 500}"#).unwrap();
        let (c, _) = validate_config(&r).unwrap();
        assert_eq!((c.t_l, c.max_faces), (60.0, 500));
        assert!(serde_json::from_str::<RawConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
