use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geo::SceneFrame;
use crate::geometry::{point_in_polygon, Point};
use crate::mesh::{simplify_mesh, TriMesh};
use crate::polygon::Polygon;
use crate::raster::RasterF32;

/// Surface cells at or below the ground are lifted by this much so that
/// walls never collapse to zero height.
const MIN_WALL_M: f64 = 0.1;

/// Closed mesh of the DSM surface inside `polygon`: a vertex at every
/// `stride`-th pixel center, two triangles per lattice cell whose four
/// corners lie inside the polygon, walls along the outline and a bottom
/// at `z_ground`.
fn lattice_mesh(dsm: &RasterF32, polygon: &Polygon, z_ground: f64, frame: &SceneFrame, stride: usize) -> Result<TriMesh> {
    let ring = &polygon.vertices;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in ring {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (w, h) = (dsm.width() as i64, dsm.height() as i64);
    let cx0 = (x0.ceil() as i64).max(0);
    let cy0 = (y0.ceil() as i64).max(0);
    let cx1 = (x1.floor() as i64).min(w - 1);
    let cy1 = (y1.floor() as i64).min(h - 1);
    if ring.len() < 3 || cx1 < cx0 || cy1 < cy0 {
        return Err(Error::EmptyFootprint);
    }
    let s = stride.max(1) as i64;
    let nx = ((cx1 - cx0) / s + 1) as usize;
    let ny = ((cy1 - cy0) / s + 1) as usize;
    let pix = |i: usize, j: usize| (cx0 + i as i64 * s, cy0 + j as i64 * s);
    let inside: Vec<bool> = (0..nx * ny)
        .map(|k| {
            let (x, y) = pix(k % nx, k / nx);
            point_in_polygon(Point::new(x as f64, y as f64), ring)
        })
        .collect();
    let cell_in = |i: usize, j: usize| {
        i + 1 < nx
            && j + 1 < ny
            && inside[j * nx + i]
            && inside[j * nx + i + 1]
            && inside[(j + 1) * nx + i]
            && inside[(j + 1) * nx + i + 1]
    };
    let cells: Vec<(usize, usize)> = (0..ny.saturating_sub(1))
        .flat_map(|j| (0..nx.saturating_sub(1)).map(move |i| (i, j)))
        .filter(|&(i, j)| cell_in(i, j))
        .collect();
    if cells.is_empty() {
        return Err(Error::EmptyFootprint);
    }

    let mut mesh = TriMesh::default();
    let mut top: HashMap<(usize, usize), usize> = HashMap::new();
    let mut bottom: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertex = |mesh: &mut TriMesh, i: usize, j: usize, ground: bool| -> usize {
        let map = if ground { &mut bottom } else { &mut top };
        *map.entry((i, j)).or_insert_with(|| {
            let (x, y) = pix(i, j);
            let z = if ground {
                z_ground
            } else {
                dsm.valid(x as usize, y as usize)
                    .unwrap_or(z_ground)
                    .max(z_ground + MIN_WALL_M)
            };
            let o = frame.to_output(Point::new(x as f64, y as f64));
            mesh.vertices.push([o.x, o.y, z]);
            mesh.vertices.len() - 1
        })
    };

    // lattice edges used by exactly one cell, with the cell's direction
    let mut boundary = HashSet::new();
    for &(i, j) in &cells {
        let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
        let t = c.map(|(a, b)| vertex(&mut mesh, a, b, false));
        let g = c.map(|(a, b)| vertex(&mut mesh, a, b, true));
        mesh.faces.push([t[0], t[1], t[2]]);
        mesh.faces.push([t[0], t[2], t[3]]);
        mesh.faces.push([g[0], g[2], g[1]]);
        mesh.faces.push([g[0], g[3], g[2]]);
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            if !boundary.remove(&(b, a)) {
                boundary.insert((a, b));
            }
        }
    }
    let mut edges: Vec<_> = boundary.into_iter().collect();
    edges.sort_unstable();
    for (a, b) in edges {
        let (ta, tb) = (vertex(&mut mesh, a.0, a.1, false), vertex(&mut mesh, b.0, b.1, false));
        let (ga, gb) = (vertex(&mut mesh, a.0, a.1, true), vertex(&mut mesh, b.0, b.1, true));
        mesh.faces.push([ta, ga, gb]);
        mesh.faces.push([ta, gb, tb]);
    }
    if mesh.signed_volume() < 0.0 {
        mesh.flip();
    }
    Ok(mesh)
}

/// Mesh of the DSM surface inside `polygon` at full resolution.
pub fn dsm_to_mesh(dsm: &RasterF32, polygon: &Polygon, z_ground: f64, frame: &SceneFrame) -> Result<TriMesh> {
    lattice_mesh(dsm, polygon, z_ground, frame, 1)
}

/// Simplified DSM mesh with fewer than `max_faces` faces. When edge
/// collapse alone cannot reach the budget the lattice is resampled more
/// coarsely.
pub fn irregular_mesh(
    dsm: &RasterF32,
    polygon: &Polygon,
    z_ground: f64,
    frame: &SceneFrame,
    max_faces: usize,
) -> Result<TriMesh> {
    let mut stride = 1;
    loop {
        let mesh = simplify_mesh(&lattice_mesh(dsm, polygon, z_ground, frame, stride)?, max_faces);
        if mesh.face_count() < max_faces {
            return Ok(mesh);
        }
        log::debug!("{} faces after simplification at stride {stride}", mesh.face_count());
        stride *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, side: f64) -> Polygon {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x0, y0 + side),
            Point::new(x0 + side, y0 + side),
            Point::new(x0 + side, y0),
        ])
    }

    #[test]
    fn ten_by_ten_block() {
        let mut dsm = RasterF32::filled(20, 20, 0.0);
        for y in 5..15 {
            for x in 5..15 {
                dsm.set(x, y, 8.0);
            }
        }
        // traced outline of a 10x10 pixel block runs through pixel centers
        let m = dsm_to_mesh(&dsm, &square(5.0, 5.0, 9.0), 0.0, &SceneFrame::pixels(0.5)).unwrap();
        let top = m
            .faces
            .iter()
            .filter(|f| f.iter().all(|&i| m.vertices[i][2] == 8.0))
            .count();
        assert_eq!(top, 162);
        assert!(m.is_watertight());
        assert!(m.is_valid());
        assert!(m.signed_volume() > 0.0);
        let zmax = m.vertices.iter().map(|v| v[2]).fold(f64::MIN, f64::max);
        assert_eq!(zmax, 8.0);
    }

    #[test]
    fn no_interior_cells() {
        let dsm = RasterF32::filled(20, 20, 5.0);
        let r = dsm_to_mesh(&dsm, &square(5.2, 5.2, 0.5), 0.0, &SceneFrame::pixels(0.5));
        assert!(matches!(r, Err(Error::EmptyFootprint)));
    }

    #[test]
    fn irregular_budget() {
        let mut dsm = RasterF32::filled(120, 120, 0.0);
        for y in 0..120 {
            for x in 0..120 {
                let z = 6.0 + ((x as f64 * 0.3).sin() + (y as f64 * 0.2).cos()) * 1.5;
                dsm.set(x, y, z as f32);
            }
        }
        let poly = square(10.0, 10.0, 100.0);
        let full = dsm_to_mesh(&dsm, &poly, 0.0, &SceneFrame::pixels(0.5)).unwrap();
        assert!(full.face_count() > 20000);
        let m = irregular_mesh(&dsm, &poly, 0.0, &SceneFrame::pixels(0.5), 1000).unwrap();
        assert!(m.face_count() < 1000);
        assert!(m.is_watertight());
    }
}
