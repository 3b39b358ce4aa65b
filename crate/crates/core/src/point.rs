//! Points in one or two dimensions and axis-aligned boxes.
//!
//! A one-dimensional point is stored with its second coordinate fixed at 0,
//! so vector arithmetic can use `nalgebra::Vector2` throughout.

use nalgebra::Vector2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    dim: usize,
    c: [f64; 2],
}

impl Point {
    pub fn new1(x: f64) -> Self {
        Point { dim: 1, c: [x, 0.0] }
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Point { dim: 2, c: [x, y] }
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        match c.len() {
            1 => Ok(Point::new1(c[0])),
            2 => Ok(Point::new2(c[0], c[1])),
            n => Err(Error::UnsupportedDimension(n)),
        }
    }

    /// Embeds a vector as a point of the given dimension; the unused component is dropped.
    pub fn from_vector(dim: usize, v: Vector2<f64>) -> Self {
        if dim == 1 {
            Point::new1(v.x)
        } else {
            Point::new2(v.x, v.y)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    pub fn get(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn to_vector(&self) -> Vector2<f64> {
        Vector2::new(self.c[0], self.c[1])
    }

    /// `self - other` as a vector.
    pub fn sub(&self, other: &Point) -> Vector2<f64> {
        Vector2::new(self.c[0] - other.c[0], self.c[1] - other.c[1])
    }

    pub fn add(&self, v: &Vector2<f64>) -> Point {
        if self.dim == 1 {
            Point::new1(self.c[0] + v.x)
        } else {
            Point::new2(self.c[0] + v.x, self.c[1] + v.y)
        }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }

    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        for k in 0..self.dim {
            match self.c[k].partial_cmp(&other.c[k]) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned box `[lo_0, hi_0] x [lo_1, hi_1]` (only the first `dim` axes are used).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl BoxDomain {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let dim = lo.len();
        if dim == 0 || dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut b = BoxDomain { dim, lo: [0.0; 2], hi: [0.0; 2] };
        for k in 0..dim {
            if !(lo[k].is_finite() && hi[k].is_finite()) || hi[k] <= lo[k] {
                return Err(Error::InvalidDomain(format!("axis {k} has bounds [{}, {}]", lo[k], hi[k])));
            }
            b.lo[k] = lo[k];
            b.hi[k] = hi[k];
        }
        Ok(b)
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        BoxDomain::new(&[a], &[b])
    }

    pub fn unit(dim: usize) -> Self {
        let lo = vec![0.0; dim];
        let hi = vec![1.0; dim];
        BoxDomain::new(&lo, &hi).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self, k: usize) -> f64 {
        self.lo[k]
    }

    pub fn hi(&self, k: usize) -> f64 {
        self.hi[k]
    }

    pub fn width(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim).map(|k| self.width(k)).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|k| self.width(k)).product()
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (0..self.dim).all(|k| p.get(k) >= self.lo[k] - tol && p.get(k) <= self.hi[k] + tol)
    }

    pub fn center(&self) -> Point {
        let c: Vec<f64> = (0..self.dim).map(|k| 0.5 * (self.lo[k] + self.hi[k])).collect();
        Point::from_slice(&c).expect("box dimension is 1 or 2")
    }

    /// Distance from `p` to the complement of the box (0 outside).
    pub fn depth(&self, p: &Point) -> f64 {
        (0..self.dim).map(|k| (p.get(k) - self.lo[k]).min(self.hi[k] - p.get(k))).fold(f64::INFINITY, f64::min).max(0.0)
    }

    pub fn bounds(&self) -> Vec<[f64; 2]> {
        (0..self.dim).map(|k| [self.lo[k], self.hi[k]]).collect()
    }
}

impl Serialize for BoxDomain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.bounds().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoxDomain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        let lo: Vec<f64> = v.iter().map(|b| b[0]).collect();
        let hi: Vec<f64> = v.iter().map(|b| b[1]).collect();
        BoxDomain::new(&lo, &hi).map_err(serde::de::Error::custom)
    }
}

/// Points of a regular lattice with the given pitch covering the box, endpoints included.
pub fn sample_lattice(b: &BoxDomain, pitch: f64) -> Vec<Point> {
    let counts: Vec<usize> = (0..b.dim()).map(|k| (b.width(k) / pitch - 1e-9).ceil().max(1.0) as usize).collect();
    let coord = |k: usize, i: usize| -> f64 {
        if i == counts[k] {
            b.hi(k)
        } else {
            b.lo(k) + i as f64 * pitch
        }
    };
    let mut out = Vec::new();
    if b.dim() == 1 {
        for i in 0..=counts[0] {
            out.push(Point::new1(coord(0, i)));
        }
    } else {
        for i in 0..=counts[0] {
            for j in 0..=counts[1] {
                out.push(Point::new2(coord(0, i), coord(1, j)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_box_is_rejected() {
        assert!(matches!(BoxDomain::interval(0.0, 0.0), Err(Error::InvalidDomain(_))));
        assert!(matches!(BoxDomain::new(&[0.0, 0.0], &[1.0, -1.0]), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn lattice_includes_both_ends() {
        let b = BoxDomain::interval(0.0, 1.0).unwrap();
        let pts = sample_lattice(&b, 0.3);
        assert_eq!(pts.first().unwrap().get(0), 0.0);
        assert_eq!(pts.last().unwrap().get(0), 1.0);
    }

    #[test]
    fn point_json_roundtrip() {
        let p = Point::new2(0.25, -1.0);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.25,-1.0]");
        let q: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
