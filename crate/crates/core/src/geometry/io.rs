//! Boundary mesh loaders. Coordinates are used as-is, no rescaling.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BoundaryMesh, GeometryError, Vec3};

pub fn load(path: &Path) -> Result<BoundaryMesh, GeometryError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("stl") => read_stl(&fs::read(path)?),
        _ => read_obj(&fs::read_to_string(path)?),
    }
}

/// Wavefront OBJ, `v` and triangular `f` records only. Face entries may carry
/// texture/normal indices (`1/2/3`) and negative (relative) indices.
pub fn read_obj(text: &str) -> Result<BoundaryMesh, GeometryError> {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| GeometryError::Parse { line: ln + 1, msg: e.to_string() })?;
                if c.len() != 3 {
                    return Err(GeometryError::Parse { line: ln + 1, msg: "vertex needs 3 coordinates".into() });
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|_| GeometryError::Parse { line: ln + 1, msg: format!("bad face index '{tok}'") })?;
                        let n = verts.len() as i64;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 || resolved >= n {
                            return Err(GeometryError::Parse { line: ln + 1, msg: format!("face index {i} out of range") });
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(GeometryError::Parse {
                        line: ln + 1,
                        msg: format!("only triangles are supported, got a {}-gon", idx.len()),
                    });
                }
                tris.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    BoundaryMesh::new(verts, tris)
}

/// Binary STL. Coincident corner positions are welded exactly.
pub fn read_stl(bytes: &[u8]) -> Result<BoundaryMesh, GeometryError> {
    if bytes.len() < 84 {
        return Err(GeometryError::Parse { line: 0, msg: "STL shorter than its header".into() });
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() < 84 + 50 * count {
        return Err(GeometryError::Parse { line: 0, msg: format!("STL truncated: {count} triangles declared") });
    }
    let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let mut verts = Vec::new();
    let mut weld: HashMap<[u32; 3], usize> = HashMap::new();
    let mut tris = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + 50 * t + 12;
        let mut tri = [0usize; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let o = base + 12 * k;
            let p = [f(o), f(o + 4), f(o + 8)];
            let key = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
            *slot = *weld.entry(key).or_insert_with(|| {
                verts.push(Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64));
                verts.len() - 1
            });
        }
        tris.push(tri);
    }
    BoundaryMesh::new(verts, tris)
}

pub fn write_obj(mesh: &BoundaryMesh, mut out: impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn write_stl(mesh: &BoundaryMesh, mut out: impl Write) -> std::io::Result<()> {
    out.write_all(&[0u8; 80])?;
    out.write_all(&(mesh.triangles().len() as u32).to_le_bytes())?;
    for t in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle(t);
        let n = (b - a).cross(&(c - a)).normalize();
        for p in [n, a, b, c] {
            for k in 0..3 {
                out.write_all(&(p[k] as f32).to_le_bytes())?;
            }
        }
        out.write_all(&[0u8; 2])?;
    }
    Ok(())
}
