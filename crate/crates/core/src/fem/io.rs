//! Tet mesh files.
//!
//! Native ASCII format:
//!
//! ```text
//! # lamg tetmesh v1
//! <num_vertices> <num_tets>
//! x y z            (one line per vertex)
//! a b c d          (one line per tet, 0-based vertex indices)
//! ```
//!
//! Gmsh `.msh` 2.2 ASCII is also read (nodes and 4-node tetrahedra, other
//! element types ignored) and written.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{FemError, TetMesh};
use crate::geometry::Vec3;

const HEADER: &str = "# lamg tetmesh v1";

fn parse_err(line: usize, msg: impl Into<String>) -> FemError {
    FemError::Parse { line, msg: msg.into() }
}

/// Non-empty lines that are not `#` comments, with 1-based line numbers.
fn content_lines(input: impl BufRead) -> Result<Vec<(usize, String)>, FemError> {
    let mut out = Vec::new();
    for (i, l) in input.lines().enumerate() {
        let l = l?;
        let t = l.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

fn numbers<T: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>, FemError> {
    let v: Vec<T> = s
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("bad number '{t}'"))))
        .collect::<Result<_, _>>()?;
    if v.len() < n {
        return Err(parse_err(line, format!("expected {n} values")));
    }
    Ok(v)
}

pub fn write_tet(mesh: &TetMesh, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_tets())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.tets() {
        writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    Ok(())
}

pub fn read_tet(input: impl BufRead) -> Result<TetMesh, FemError> {
    let lines = content_lines(input)?;
    let mut it = lines.iter();
    let (ln, head) = it.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let counts: Vec<usize> = numbers(*ln, head, 2)?;
    let (nv, nt) = (counts[0], counts[1]);
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = it.next().ok_or_else(|| parse_err(0, "missing vertex lines"))?;
        let c: Vec<f64> = numbers(*ln, l, 3)?;
        verts.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = it.next().ok_or_else(|| parse_err(0, "missing tet lines"))?;
        let c: Vec<usize> = numbers(*ln, l, 4)?;
        tets.push([c[0], c[1], c[2], c[3]]);
    }
    TetMesh::new(verts, tets)
}

pub fn write_msh(mesh: &TetMesh, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "$MeshFormat\n2.2 0 8\n$EndMeshFormat")?;
    writeln!(out, "$Nodes\n{}", mesh.num_vertices())?;
    for (i, v) in mesh.vertices().iter().enumerate() {
        writeln!(out, "{} {} {} {}", i + 1, v.x, v.y, v.z)?;
    }
    writeln!(out, "$EndNodes\n$Elements\n{}", mesh.num_tets())?;
    for (i, t) in mesh.tets().iter().enumerate() {
        writeln!(out, "{} 4 2 0 1 {} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1)?;
    }
    writeln!(out, "$EndElements")
}

/// Tets with negative orientation are flipped on import.
pub fn read_msh(input: impl BufRead) -> Result<TetMesh, FemError> {
    let lines = content_lines(input)?;
    let mut i = 0;
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut tets = Vec::new();
    while i < lines.len() {
        let (ln, l) = &lines[i];
        match l.as_str() {
            "$MeshFormat" => {
                let (fl, f) = lines.get(i + 1).ok_or_else(|| parse_err(*ln, "truncated header"))?;
                if !f.starts_with("2.") {
                    return Err(parse_err(*fl, format!("unsupported msh version '{f}'")));
                }
                if f.split_whitespace().nth(1) != Some("0") {
                    return Err(parse_err(*fl, "binary msh is not supported"));
                }
                i += 2;
            }
            "$Nodes" => {
                let (cl, c) = lines.get(i + 1).ok_or_else(|| parse_err(*ln, "missing node count"))?;
                let n: usize = c.parse().map_err(|_| parse_err(*cl, "bad node count"))?;
                for k in 0..n {
                    let (nl, nline) = lines.get(i + 2 + k).ok_or_else(|| parse_err(*cl, "truncated nodes"))?;
                    let v: Vec<f64> = numbers(*nl, nline, 4)?;
                    ids.insert(v[0] as usize, verts.len());
                    verts.push(Vec3::new(v[1], v[2], v[3]));
                }
                i += 2 + n;
            }
            "$Elements" => {
                let (cl, c) = lines.get(i + 1).ok_or_else(|| parse_err(*ln, "missing element count"))?;
                let n: usize = c.parse().map_err(|_| parse_err(*cl, "bad element count"))?;
                for k in 0..n {
                    let (el, eline) = lines.get(i + 2 + k).ok_or_else(|| parse_err(*cl, "truncated elements"))?;
                    let v: Vec<usize> = numbers(*el, eline, 3)?;
                    if v[1] != 4 {
                        continue;
                    }
                    let start = 3 + v[2];
                    if v.len() < start + 4 {
                        return Err(parse_err(*el, "tet with fewer than 4 nodes"));
                    }
                    let mut t = [0usize; 4];
                    for (c, slot) in t.iter_mut().enumerate() {
                        *slot = *ids
                            .get(&v[start + c])
                            .ok_or_else(|| parse_err(*el, format!("unknown node {}", v[start + c])))?;
                    }
                    let p = t.map(|q| verts[q]);
                    if super::mesh::signed_volume(&p) < 0.0 {
                        t.swap(2, 3);
                    }
                    tets.push(t);
                }
                i += 2 + n;
            }
            _ => i += 1,
        }
    }
    // Drop nodes no tet uses (gmsh files often carry geometry-only points).
    let mut remap = vec![usize::MAX; verts.len()];
    let mut kept = Vec::new();
    for t in tets.iter_mut() {
        for q in t.iter_mut() {
            if remap[*q] == usize::MAX {
                remap[*q] = kept.len();
                kept.push(verts[*q]);
            }
            *q = remap[*q];
        }
    }
    TetMesh::new(kept, tets)
}
