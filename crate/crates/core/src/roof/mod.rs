//! Parametric roof models and their exhaustive-search fit to the DSM.

mod base;
mod fit;
mod height;

pub use base::{estimate_base_height, BASE_PERCENTILE, BASE_RING_PX};
pub use fit::{fit_roof, fit_roof_per_kind, rmse_of, FitParams};
pub use height::{roof_height, synthesize_roof_height, RoofRaster};

use serde::{Deserialize, Serialize};

use crate::decompose::OrientedRect;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoofKind {
    Flat,
    Gable,
    Pyramid,
    Hip,
    Mansard,
}

impl RoofKind {
    /// In tie-break order: simpler models first.
    pub const ALL: [RoofKind; 5] = [
        RoofKind::Flat,
        RoofKind::Gable,
        RoofKind::Pyramid,
        RoofKind::Hip,
        RoofKind::Mansard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoofKind::Flat => "flat",
            RoofKind::Gable => "gable",
            RoofKind::Pyramid => "pyramid",
            RoofKind::Hip => "hip",
            RoofKind::Mansard => "mansard",
        }
    }
}

impl std::fmt::Display for RoofKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Heights in meters; `hipl` and `hipw` are insets in meters along the
/// rectangle's length and width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoofParams {
    pub z_ridge: f64,
    pub z_eave: f64,
    pub hipl: f64,
    pub hipw: f64,
}

impl RoofParams {
    pub fn validate(&self, kind: RoofKind, len_m: f64, wid_m: f64) -> Result<()> {
        let p = self;
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if ![p.z_ridge, p.z_eave, p.hipl, p.hipw, len_m, wid_m].iter().all(|v| v.is_finite()) {
            return bad("non-finite value".into());
        }
        if len_m <= 0.0 || wid_m <= 0.0 {
            return bad(format!("rectangle {len_m} x {wid_m} m has no area"));
        }
        if p.z_ridge < p.z_eave {
            return bad(format!("z_ridge {} below z_eave {}", p.z_ridge, p.z_eave));
        }
        let tol = 1e-9;
        if p.hipl < 0.0 || p.hipl > 0.5 * len_m + tol {
            return bad(format!("hipl {} outside [0, {}]", p.hipl, 0.5 * len_m));
        }
        if p.hipw < 0.0 || p.hipw > 0.5 * wid_m + tol {
            return bad(format!("hipw {} outside [0, {}]", p.hipw, 0.5 * wid_m));
        }
        if kind == RoofKind::Flat && (p.z_ridge - p.z_eave).abs() > tol {
            return bad("flat roof needs z_ridge = z_eave".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoofModel {
    pub rect: OrientedRect,
    pub kind: RoofKind,
    pub params: RoofParams,
    pub rmse: f64,
    pub z_ground: f64,
}
