use crate::error::{Error, Result};
use crate::geo::SceneFrame;
use crate::geometry::Point;
use crate::mesh::TriMesh;
use crate::roof::{RoofKind, RoofModel};

/// Closed solid for a parametric roof model: roof facets, walls from the
/// eave ring down to the ground and a flat bottom.
pub fn model_to_mesh(model: &RoofModel, frame: &SceneFrame) -> Result<TriMesh> {
    let gsd = frame.gsd;
    let (l, w) = (model.rect.len * gsd, model.rect.wid * gsd);
    let p = &model.params;
    p.validate(model.kind, l, w)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    let (ze, zr, zg) = (p.z_eave, p.z_ridge, model.z_ground);
    if !zg.is_finite() || zg >= ze {
        return Err(Error::InvalidModel(format!("ground {zg} not below eave {ze}")));
    }
    let kind = if zr > ze { model.kind } else { RoofKind::Flat };
    // top outline inset, meters
    let (a, b) = match kind {
        RoofKind::Flat => (0.0, 0.0),
        RoofKind::Gable => (0.0, 0.5 * w),
        RoofKind::Hip => (p.hipl, 0.5 * w),
        RoofKind::Pyramid => (0.5 * l, 0.5 * w),
        RoofKind::Mansard => (p.hipl, p.hipw),
    };
    let ztop = if kind == RoofKind::Flat { ze } else { zr };
    let corners = [(0.0, 0.0), (l, 0.0), (l, w), (0.0, w)];
    let top = [(a, b), (l - a, b), (l - a, w - b), (a, w - b)];

    let mut mesh = TriMesh::default();
    let mut local: Vec<[f64; 3]> = Vec::new();
    let mut vid = |x: f64, y: f64, z: f64| -> usize {
        if let Some(i) = local
            .iter()
            .position(|v| (v[0] - x).abs() < 1e-9 && (v[1] - y).abs() < 1e-9 && (v[2] - z).abs() < 1e-9)
        {
            return i;
        }
        local.push([x, y, z]);
        local.len() - 1
    };
    let g: Vec<usize> = corners.iter().map(|&(x, y)| vid(x, y, zg)).collect();
    let e: Vec<usize> = corners.iter().map(|&(x, y)| vid(x, y, ze)).collect();
    let t: Vec<usize> = top.iter().map(|&(x, y)| vid(x, y, ztop)).collect();

    // polygons, counter-clockwise seen from outside in the local frame
    let mut polys: Vec<Vec<usize>> = vec![vec![g[0], g[3], g[2], g[1]]];
    for i in 0..4 {
        let j = (i + 1) % 4;
        polys.push(vec![g[i], g[j], e[j], e[i]]);
        if kind != RoofKind::Flat {
            polys.push(vec![e[i], e[j], t[j], t[i]]);
        }
    }
    polys.push(t.clone());

    for mut poly in polys {
        poly.dedup();
        while poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        for k in 1..poly.len().saturating_sub(1) {
            mesh.faces.push([poly[0], poly[k], poly[k + 1]]);
        }
    }

    mesh.vertices = local
        .iter()
        .map(|v| {
            let q = model.rect.from_local(Point::new(v[0] / gsd, v[1] / gsd));
            let o = frame.to_output(q);
            [o.x, o.y, v[2]]
        })
        .collect();
    if mesh.signed_volume() < 0.0 {
        mesh.flip();
    }
    Ok(mesh)
}
