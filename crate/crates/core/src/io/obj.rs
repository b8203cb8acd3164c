use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// ASCII Wavefront OBJ with `v` and 1-based `f` records only.
pub fn encode_obj(mesh: &TriMesh) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(40 * (mesh.vertices.len() + mesh.faces.len()));
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.6} {:.6} {:.6}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn decode_obj(text: &str, path: &Path) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let at = offset;
        offset += line.len();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok.take(3).map(str::parse).collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::malformed(path, at, "bad vertex coordinate"))?;
                if c.len() != 3 {
                    return Err(Error::malformed(path, at, "vertex needs 3 coordinates"));
                }
                mesh.vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::malformed(path, at, "bad face index"))?;
                if idx.len() < 3 || idx.iter().any(|&i| i == 0 || i > mesh.vertices.len()) {
                    return Err(Error::malformed(path, at, "face index out of range"));
                }
                for k in 1..idx.len() - 1 {
                    mesh.faces.push([idx[0] - 1, idx[k] - 1, idx[k + 1] - 1]);
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

pub fn write_obj(path: &Path, mesh: &TriMesh) -> Result<()> {
    std::fs::write(path, encode_obj(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_obj(&text, path)
}
