//! Scattered sizing fields: extraction from meshes, normalization, scaling,
//! interpolation and file exchange.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::fem::TetMesh;
use crate::geometry::{PointIndex, Vec3};

/// Neighbours used by the Shepard interpolant.
pub const SHEPARD_K: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum SizingError {
    #[error("size range {min}..{max} is degenerate")]
    DegenerateRange { min: f64, max: f64 },
    #[error("empty sizing field")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Regular-tetrahedron edge length with the given volume.
pub fn size_from_volume(v: f64) -> f64 {
    (6.0 * std::f64::consts::SQRT_2 * v).cbrt()
}

/// Affine map of sizes onto [0, 1]. A degenerate range maps everything to 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

impl Normalization {
    pub fn fit<'a>(sizes: impl IntoIterator<Item = &'a f64>) -> Result<Self, SizingError> {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &s in sizes {
            min = min.min(s);
            max = max.max(s);
        }
        if !min.is_finite() {
            return Err(SizingError::Empty);
        }
        let n = Normalization { min, max };
        if n.is_degenerate() {
            return Err(SizingError::DegenerateRange { min, max });
        }
        Ok(n)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.max - self.min >= 1e-12)
    }

    pub fn normalize(&self, s: f64) -> f64 {
        if self.is_degenerate() {
            0.5
        } else {
            (s - self.min) / (self.max - self.min)
        }
    }

    pub fn denormalize(&self, t: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            self.min + t * (self.max - self.min)
        }
    }
}

/// Sizes attached to scattered points. Stored sizes are in normalized units
/// when `normalization` is set; the physical size of point i is the
/// denormalized stored size times `factor`.
#[derive(Debug)]
pub struct SizingField {
    pub points: Vec<Vec3>,
    pub sizes: Vec<f64>,
    pub normalization: Option<Normalization>,
    pub factor: f64,
    index: OnceLock<PointIndex>,
}

impl Clone for SizingField {
    fn clone(&self) -> Self {
        Self::build(self.points.clone(), self.sizes.clone(), self.normalization, self.factor)
    }
}

impl PartialEq for SizingField {
    fn eq(&self, o: &Self) -> bool {
        self.points == o.points && self.sizes == o.sizes && self.normalization == o.normalization && self.factor == o.factor
    }
}

impl SizingField {
    pub fn new(points: Vec<Vec3>, sizes: Vec<f64>) -> Self {
        Self::build(points, sizes, None, 1.0)
    }

    fn build(points: Vec<Vec3>, sizes: Vec<f64>, normalization: Option<Normalization>, factor: f64) -> Self {
        assert_eq!(points.len(), sizes.len());
        Self { points, sizes, normalization, factor, index: OnceLock::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical size at point `i`.
    pub fn size(&self, i: usize) -> f64 {
        let s = self.sizes[i];
        match self.normalization {
            Some(n) => n.denormalize(s) * self.factor,
            None => s * self.factor,
        }
    }

    pub fn physical_sizes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.size(i)).collect()
    }

    pub fn min_size(&self) -> f64 {
        (0..self.len()).map(|i| self.size(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_size(&self) -> f64 {
        (0..self.len()).map(|i| self.size(i)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn median_size(&self) -> f64 {
        let mut s = self.physical_sizes();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        if n == 0 {
            f64::NAN
        } else if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        }
    }

    /// Same physical field, stored in the units of `norm`.
    pub fn normalize(&self, norm: Normalization) -> SizingField {
        let sizes = (0..self.len()).map(|i| norm.normalize(self.size(i))).collect();
        Self::build(self.points.clone(), sizes, Some(norm), 1.0)
    }

    /// Same physical field, stored in physical units.
    pub fn denormalize(&self) -> SizingField {
        Self::new(self.points.clone(), self.physical_sizes())
    }

    /// Multiply every physical size by `eta`.
    pub fn scale(&self, eta: f64) -> SizingField {
        assert!(eta > 0.0, "eta must be positive");
        Self::build(self.points.clone(), self.sizes.clone(), self.normalization, self.factor * eta)
    }

    fn index(&self) -> &PointIndex {
        self.index.get_or_init(|| PointIndex::new(&self.points))
    }

    /// Shepard (inverse squared distance) average of physical sizes over the
    /// nearest `SHEPARD_K` field points; exact at field points.
    pub fn interpolate_size(&self, x: &Vec3) -> f64 {
        let nn = self.index().knn(x, SHEPARD_K);
        assert!(!nn.is_empty(), "interpolating an empty sizing field");
        if nn[0].1 == 0.0 {
            return self.size(nn[0].0);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (i, d2) in nn {
            let w = 1.0 / d2;
            num += w * self.size(i);
            den += w;
        }
        num / den
    }

    /// Physical sizes as CSV (x,y,z,s).
    pub fn write_csv(&self, out: impl Write) -> Result<(), SizingError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "z", "s"])?;
        for (i, p) in self.points.iter().enumerate() {
            w.serialize((p.x, p.y, p.z, self.size(i)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(input: impl std::io::Read) -> Result<Self, SizingError> {
        let mut points = Vec::new();
        let mut sizes = Vec::new();
        for rec in csv::Reader::from_reader(input).deserialize::<(f64, f64, f64, f64)>() {
            let (x, y, z, s) = rec?;
            points.push(Vec3::new(x, y, z));
            sizes.push(s);
        }
        Ok(Self::new(points, sizes))
    }
}

/// Reference sizes at `points`: ŝ of the containing tet. Points outside the
/// mesh are skipped; their indices are returned.
pub fn reference_field(mesh: &TetMesh, points: &[Vec3]) -> (SizingField, Vec<usize>) {
    let mut kept_p = Vec::new();
    let mut kept_s = Vec::new();
    let mut skipped = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match mesh.locate(p) {
            Some(t) => {
                kept_p.push(*p);
                kept_s.push(size_from_volume(mesh.volumes()[t]));
            }
            None => skipped.push(i),
        }
    }
    if !skipped.is_empty() {
        log::warn!("reference_field: {} of {} points outside the mesh", skipped.len(), points.len());
    }
    (SizingField::new(kept_p, kept_s), skipped)
}

/// Background field as a Gmsh post-processing view of scalar points, sizes
/// multiplied by `eta`.
pub fn write_pos(field: &SizingField, eta: f64, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "View \"background\" {{")?;
    for (i, p) in field.points.iter().enumerate() {
        writeln!(out, "SP({},{},{}){{{}}};", p.x, p.y, p.z, field.size(i) * eta)?;
    }
    writeln!(out, "}};")
}

pub fn read_pos(input: impl BufRead) -> Result<SizingField, SizingError> {
    let mut points = Vec::new();
    let mut sizes = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        let Some(rest) = t.strip_prefix("SP(") else { continue };
        let bad = |msg: &str| SizingError::Parse { line: i + 1, msg: msg.to_string() };
        let (coords, tail) = rest.split_once(')').ok_or_else(|| bad("missing ')'"))?;
        let val = tail
            .trim()
            .strip_prefix('{')
            .and_then(|v| v.split_once('}'))
            .map(|(v, _)| v)
            .ok_or_else(|| bad("missing value braces"))?;
        let c: Vec<f64> = coords
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("bad coordinate"))?;
        if c.len() != 3 {
            return Err(bad("expected three coordinates"));
        }
        points.push(Vec3::new(c[0], c[1], c[2]));
        sizes.push(val.trim().parse::<f64>().map_err(|_| bad("bad value"))?);
    }
    Ok(SizingField::new(points, sizes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_inversion() {
        let r2 = std::f64::consts::SQRT_2;
        assert!((size_from_volume(1.0 / (6.0 * r2)) - 1.0).abs() < 1e-12);
        assert!((size_from_volume(8.0 / (6.0 * r2)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_examples() {
        let n = Normalization::fit(&[1.0, 2.0, 3.0]).unwrap();
        let t: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&s| n.normalize(s)).collect();
        assert_eq!(t, vec![0.0, 0.5, 1.0]);
        for s in [0.3, 1.7, 2.9] {
            assert!((n.denormalize(n.normalize(s)) - s).abs() < 1e-12);
        }
        assert!(matches!(Normalization::fit(&[2.0, 2.0]), Err(SizingError::DegenerateRange { .. })));
        assert_eq!(Normalization { min: 2.0, max: 2.0 }.normalize(7.0), 0.5);
    }

    #[test]
    fn shepard_examples() {
        let f = SizingField::new(vec![Vec3::zeros(), Vec3::x()], vec![1.0, 3.0]);
        assert_eq!(f.interpolate_size(&Vec3::zeros()), 1.0);
        assert!((f.interpolate_size(&Vec3::new(0.5, 0.0, 0.0)) - 2.0).abs() < 1e-15);
        let c = SizingField::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![0.4; 3]);
        assert!((c.interpolate_size(&Vec3::new(5.0, -2.0, 1.0)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn scale_examples() {
        let f = SizingField::new(vec![Vec3::zeros(), Vec3::x()], vec![1.0, 3.0]);
        assert_eq!(f.scale(1.0), f);
        assert_eq!(f.scale(0.7).physical_sizes(), vec![0.7, 3.0 * 0.7]);
        assert_eq!(f.scale(0.3).scale(0.7).physical_sizes(), f.scale(0.3 * 0.7).physical_sizes());
        let n = f.normalize(Normalization { min: 0.5, max: 4.0 });
        assert!((n.scale(2.0).size(1) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn pos_round_trip() {
        let f = SizingField::new(vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-1.0, 2.5, 1e-3)], vec![0.05, 0.125]);
        let mut buf = Vec::new();
        write_pos(&f, 0.7, &mut buf).unwrap();
        let back = read_pos(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.points, f.points);
        for (a, b) in back.sizes.iter().zip(&f.sizes) {
            assert!((a - 0.7 * b).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = SizingField::new(vec![Vec3::new(0.1, 0.2, 0.3)], vec![0.05]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x,y,z,s\n"));
        assert_eq!(SizingField::read_csv(&buf[..]).unwrap(), f);
    }
}
