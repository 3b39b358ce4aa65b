//! Finite point grids approximating a box, with mesh gauge and separation ratio.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{sample_lattice, BoxDomain, Point};

pub const DEFAULT_OVERSAMPLE: usize = 8;

/// Lattice spacing of the level-`n` cartesian grid.
pub fn level_spacing(n: u32) -> f64 {
    (2.0f64).powi(-2 - n as i32)
}

/// Uniform bucket hash used for nearest and range queries.
#[derive(Debug, Clone)]
struct BucketIndex {
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl BucketIndex {
    fn build(points: &[Point], b: &BoxDomain, cell: f64) -> Self {
        let dim = b.dim();
        let mut dims = [1usize; 2];
        let mut origin = [0.0; 2];
        for k in 0..dim {
            origin[k] = b.lo(k);
            dims[k] = ((b.width(k) / cell).floor() as usize + 1).max(1);
        }
        let mut idx = BucketIndex { origin, cell, dims, buckets: vec![Vec::new(); dims[0] * dims[1]] };
        for (i, p) in points.iter().enumerate() {
            let (a, c) = idx.cell_of(p);
            let a = a.clamp(0, dims[0] as i64 - 1) as usize;
            let c = c.clamp(0, dims[1] as i64 - 1) as usize;
            idx.buckets[a * dims[1] + c].push(i);
        }
        idx
    }

    fn cell_of(&self, p: &Point) -> (i64, i64) {
        let a = ((p.get(0) - self.origin[0]) / self.cell).floor() as i64;
        let c = if p.dim() == 2 { ((p.get(1) - self.origin[1]) / self.cell).floor() as i64 } else { 0 };
        (a, c)
    }

    fn bucket(&self, a: i64, c: i64) -> Option<&Vec<usize>> {
        if a < 0 || c < 0 || a >= self.dims[0] as i64 || c >= self.dims[1] as i64 {
            None
        } else {
            Some(&self.buckets[a as usize * self.dims[1] + c as usize])
        }
    }

    /// Nearest point, ties to the lowest index. `skip` excludes one index.
    fn nearest(&self, points: &[Point], x: &Point, skip: Option<usize>) -> Option<(usize, f64)> {
        let (a0, c0) = self.cell_of(x);
        let two_d = x.dim() == 2;
        let max_r = (self.dims[0].max(self.dims[1]) as i64) + (a0.abs().max(c0.abs())) + 2;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..=max_r {
            let mut visit = |a: i64, c: i64| {
                if let Some(bk) = self.bucket(a, c) {
                    for &i in bk {
                        if Some(i) == skip {
                            continue;
                        }
                        let d = points[i].dist(x);
                        best = match best {
                            None => Some((i, d)),
                            Some((bi, bd)) if d < bd || (d == bd && i < bi) => Some((i, d)),
                            keep => keep,
                        };
                    }
                }
            };
            if two_d {
                for a in (a0 - r)..=(a0 + r) {
                    for c in (c0 - r)..=(c0 + r) {
                        if (a - a0).abs() == r || (c - c0).abs() == r {
                            visit(a, c);
                        }
                    }
                }
            } else if r == 0 {
                visit(a0, 0);
            } else {
                visit(a0 - r, 0);
                visit(a0 + r, 0);
            }
            if let Some((_, bd)) = best {
                if bd < r as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }

    fn within(&self, points: &[Point], x: &Point, radius: f64) -> Vec<usize> {
        let (a0, c0) = self.cell_of(x);
        let r = (radius / self.cell).ceil() as i64 + 1;
        let mut out = Vec::new();
        let crange = if x.dim() == 2 { (c0 - r)..=(c0 + r) } else { 0..=0 };
        for a in (a0 - r)..=(a0 + r) {
            for c in crange.clone() {
                if let Some(bk) = self.bucket(a, c) {
                    out.extend(bk.iter().copied().filter(|&i| points[i].dist(x) <= radius));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// A finite point set in a box together with its gauges.
#[derive(Debug, Clone)]
pub struct Grid {
    level: u32,
    domain: BoxDomain,
    points: Vec<Point>,
    spacing: f64,
    gauge: f64,
    cartesian: bool,
    index: BucketIndex,
}

impl Grid {
    /// Level-`n` cartesian grid: the lattice `2^{-2-n} Z^d` intersected with the box.
    pub fn cartesian(domain: BoxDomain, n: u32) -> Result<Self> {
        let s = level_spacing(n);
        let dim = domain.dim();
        let range = |k: usize| -> (i64, i64) {
            let a = (domain.lo(k) / s - 1e-9).ceil() as i64;
            let b = (domain.hi(k) / s + 1e-9).floor() as i64;
            (a, b)
        };
        let mut points = Vec::new();
        let (a0, b0) = range(0);
        if dim == 1 {
            for i in a0..=b0 {
                points.push(Point::new1(i as f64 * s));
            }
        } else {
            let (a1, b1) = range(1);
            for i in a0..=b0 {
                for j in a1..=b1 {
                    points.push(Point::new2(i as f64 * s, j as f64 * s));
                }
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidDomain(format!("box contains no lattice point at spacing {s}")));
        }
        let index = BucketIndex::build(&points, &domain, s);
        let mut g = Grid { level: n, domain, points, spacing: s, gauge: 0.0, cartesian: true, index };
        g.gauge = mesh_gauge(&g, DEFAULT_OVERSAMPLE)?;
        Ok(g)
    }

    /// Grid from an explicit point list. Points are sorted lexicographically;
    /// coincident points are kept so that [`separation_ratio`] can report them.
    pub fn from_points(domain: BoxDomain, level: u32, mut points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for p in &points {
            if p.dim() != domain.dim() {
                return Err(Error::DimensionMismatch { expected: domain.dim(), got: p.dim() });
            }
            if !p.is_finite() || !domain.contains(p, 1e-12 * domain.max_width()) {
                return Err(Error::InvalidDomain(format!("point {:?} outside the box", p.coords())));
            }
        }
        points.sort_by(|a, b| a.lex_cmp(b));
        let pitch = (domain.volume() / points.len() as f64).powf(1.0 / domain.dim() as f64);
        let index = BucketIndex::build(&points, &domain, pitch);
        let mut g = Grid { level, domain, points, spacing: pitch, gauge: 0.0, cartesian: false, index };
        g.spacing = min_pair_distance(&g);
        g.gauge = mesh_gauge(&g, DEFAULT_OVERSAMPLE)?;
        Ok(g)
    }

    pub fn shared(self) -> Arc<Grid> {
        Arc::new(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lattice spacing for cartesian grids, minimum pairwise distance otherwise.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// The mesh gauge h (sampled sup of the distance to the grid).
    pub fn gauge(&self) -> f64 {
        self.gauge
    }

    pub fn is_cartesian(&self) -> bool {
        self.cartesian
    }

    /// Closest grid point and its distance; ties go to the lowest index.
    pub fn nearest(&self, x: &Point) -> (usize, f64) {
        self.index.nearest(&self.points, x, None).expect("grid is nonempty")
    }

    /// Index of the grid point within `tol` of `x`, if any.
    pub fn locate(&self, x: &Point, tol: f64) -> Option<usize> {
        let (i, d) = self.nearest(x);
        (d <= tol).then_some(i)
    }

    /// Index of the grid point at `x` up to rounding.
    pub fn locate_exact(&self, x: &Point) -> Option<usize> {
        self.locate(x, 1e-9 * self.spacing)
    }

    /// Indices of grid points within `radius` of `x`, ascending.
    pub fn within(&self, x: &Point, radius: f64) -> Vec<usize> {
        self.index.within(&self.points, x, radius)
    }

    /// Distance from `x` to the grid.
    pub fn distance(&self, x: &Point) -> f64 {
        self.nearest(x).1
    }

    pub fn separation(&self) -> Result<f64> {
        separation_ratio(self)
    }
}

/// Free-function form of [`Grid::cartesian`] taking the dimension explicitly.
pub fn cartesian_grid(d: usize, n: u32, domain: BoxDomain) -> Result<Grid> {
    if domain.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: domain.dim() });
    }
    Grid::cartesian(domain, n)
}

fn min_pair_distance(g: &Grid) -> f64 {
    (0..g.points.len())
        .into_par_iter()
        .map(|i| g.index.nearest(&g.points, &g.points[i], Some(i)).map(|(_, d)| d).unwrap_or(f64::INFINITY))
        .reduce(|| f64::INFINITY, f64::min)
}

/// Sup over the box of the distance to the grid, sampled on a lattice whose pitch
/// is the grid pitch divided by `oversample`. The sample sits below the true value
/// by at most half the sampling pitch times sqrt(d).
pub fn mesh_gauge(g: &Grid, oversample: usize) -> Result<f64> {
    if g.points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if oversample == 0 {
        return Err(Error::InvalidParams("oversample must be positive".into()));
    }
    let base =
        if g.cartesian { g.spacing } else { (g.domain.volume() / g.points.len() as f64).powf(1.0 / g.dim() as f64) };
    let samples = sample_lattice(&g.domain, base / oversample as f64);
    Ok(samples.par_iter().map(|x| g.distance(x)).reduce(|| 0.0, f64::max))
}

/// Ratio of the minimum pairwise distance to the gauge.
pub fn separation_ratio(g: &Grid) -> Result<f64> {
    if g.points.len() < 2 {
        return Err(Error::DegenerateGrid("fewer than two points".into()));
    }
    let m = min_pair_distance(g);
    if m == 0.0 {
        return Err(Error::DegenerateGrid("coincident points".into()));
    }
    Ok(m / g.gauge)
}

/// Closest grid point to `x` with its distance.
pub fn nearest(g: &Grid, x: &Point) -> (Point, f64) {
    let (i, d) = g.nearest(x);
    (g.points[i], d)
}

/// Real values attached to the points of a shared grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&Point) -> f64) -> Self {
        let values = grid.points().iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        GridFunction { grid, values: vec![c; n] }
    }

    /// The indicator e_i of the i-th grid point.
    pub fn basis(grid: Arc<Grid>, i: usize) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[i] = 1.0;
        GridFunction { grid, values }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub dim: usize,
    pub level: u32,
    #[serde(rename = "box")]
    pub domain: BoxDomain,
    pub spacing: f64,
    pub points: Vec<Point>,
}

impl Grid {
    pub fn to_file(&self) -> GridFile {
        GridFile {
            dim: self.dim(),
            level: self.level,
            domain: self.domain,
            spacing: self.spacing,
            points: self.points.clone(),
        }
    }

    /// Rebuilds a grid from its file form. Files whose points match the cartesian
    /// lattice of their level are restored as cartesian grids.
    pub fn from_file(f: &GridFile) -> Result<Self> {
        if f.domain.dim() != f.dim {
            return Err(Error::DimensionMismatch { expected: f.dim, got: f.domain.dim() });
        }
        if let Ok(c) = Grid::cartesian(f.domain, f.level) {
            if c.points.len() == f.points.len() && c.points.iter().zip(&f.points).all(|(a, b)| a.dist(b) <= 1e-12) {
                return Ok(c);
            }
        }
        Grid::from_points(f.domain, f.level, f.points.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(d: usize) -> BoxDomain {
        BoxDomain::unit(d)
    }

    #[test]
    fn cartesian_counts() {
        let g = cartesian_grid(1, 2, unit(1)).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.spacing(), 1.0 / 16.0);
        let g = cartesian_grid(2, 0, unit(2)).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.spacing(), 0.25);
    }

    #[test]
    fn degenerate_box_error() {
        assert!(matches!(BoxDomain::interval(0.0, 0.0), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn gauge_values() {
        let g = cartesian_grid(1, 2, unit(1)).unwrap();
        assert!((g.gauge() - g.spacing() / 2.0).abs() < 1e-15);
        let g = cartesian_grid(2, 1, unit(2)).unwrap();
        assert!((g.gauge() - g.spacing() * 2f64.sqrt() / 2.0).abs() < 1e-15);
        let g = Grid::from_points(unit(1), 0, vec![Point::new1(0.0)]).unwrap();
        assert!((g.gauge() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn separation_values() {
        let g = cartesian_grid(1, 3, unit(1)).unwrap();
        assert!((separation_ratio(&g).unwrap() - 2.0).abs() < 1e-12);
        let g = cartesian_grid(2, 1, unit(2)).unwrap();
        assert!((separation_ratio(&g).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let pts = vec![Point::new1(0.0), Point::new1(0.5), Point::new1(0.5)];
        let g = Grid::from_points(unit(1), 0, pts).unwrap();
        assert!(matches!(separation_ratio(&g), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn separation_matches_exhaustive_scan() {
        for (d, n) in [(1, 2), (2, 0), (2, 1)] {
            let g = cartesian_grid(d, n, unit(d)).unwrap();
            let mut m = f64::INFINITY;
            for i in 0..g.len() {
                for j in 0..i {
                    m = m.min(g.point(i).dist(&g.point(j)));
                }
            }
            assert_eq!(m / g.gauge(), separation_ratio(&g).unwrap());
        }
    }

    #[test]
    fn nearest_ties_lowest_index() {
        let g = Grid::from_points(unit(1), 0, vec![Point::new1(0.0), Point::new1(1.0)]).unwrap();
        assert_eq!(nearest(&g, &Point::new1(0.4)), (Point::new1(0.0), 0.4));
        assert_eq!(nearest(&g, &Point::new1(0.5)), (Point::new1(0.0), 0.5));
        assert_eq!(nearest(&g, &Point::new1(1.0)), (Point::new1(1.0), 0.0));
    }

    #[test]
    fn nesting_across_levels() {
        for d in 1..=2 {
            for n in 0..3 {
                let a = cartesian_grid(d, n, unit(d)).unwrap();
                let b = cartesian_grid(d, n + 1, unit(d)).unwrap();
                for p in a.points() {
                    assert!(b.locate_exact(p).is_some());
                }
            }
        }
    }

    #[test]
    fn gauge_halves_per_level() {
        for d in 1..=2 {
            for n in 0..3 {
                let a = cartesian_grid(d, n, unit(d)).unwrap().gauge();
                let b = cartesian_grid(d, n + 1, unit(d)).unwrap().gauge();
                assert!((a / b - 2.0).abs() <= 0.2);
            }
        }
    }

    #[test]
    fn gauge_sampling_error_shrinks_with_oversample() {
        let pts = vec![Point::new1(0.1), Point::new1(0.37), Point::new1(0.9)];
        let g = Grid::from_points(unit(1), 0, pts).unwrap();
        let exact = 0.135f64.max(0.265).max(0.1).max(0.1);
        let mut prev = f64::INFINITY;
        for f in [1, 2, 4, 8, 16, 32] {
            let err = exact - mesh_gauge(&g, f).unwrap();
            assert!(err >= -1e-15);
            assert!(err <= prev + 1e-15);
            prev = err;
        }
    }

    #[test]
    fn file_roundtrip() {
        let g = cartesian_grid(2, 0, unit(2)).unwrap();
        let s = serde_json::to_string(&g.to_file()).unwrap();
        let f: GridFile = serde_json::from_str(&s).unwrap();
        let h = Grid::from_file(&f).unwrap();
        assert!(h.is_cartesian());
        assert_eq!(h.points(), g.points());
    }

    #[test]
    fn within_matches_scan() {
        let g = cartesian_grid(2, 1, unit(2)).unwrap();
        let x = Point::new2(0.3, 0.55);
        let r = 0.27;
        let scan: Vec<usize> = (0..g.len()).filter(|&i| g.point(i).dist(&x) <= r).collect();
        assert_eq!(g.within(&x, r), scan);
    }

    proptest! {
        #[test]
        fn separation_at_least_one(d in 1usize..=2, n in 0u32..4, lo in -4i32..4, w in 1i32..8) {
            // boxes with corners on the level-0 lattice
            let (lo, w) = (lo as f64 / 4.0, w as f64 / 4.0);
            let b = BoxDomain::new(&vec![lo; d], &vec![lo + w; d]).unwrap();
            if let Ok(g) = Grid::cartesian(b, n) {
                if g.len() >= 2 {
                    prop_assert!(separation_ratio(&g).unwrap() >= 1.0);
                }
            }
        }

        #[test]
        fn nearest_matches_brute_force(xs in proptest::collection::vec(0.0f64..1.0, 2..20), q in -0.2f64..1.2) {
            let pts: Vec<Point> = xs.iter().map(|&x| Point::new1(x)).collect();
            let g = Grid::from_points(unit(1), 0, pts).unwrap();
            let x = Point::new1(q);
            let (i, d) = g.nearest(&x);
            let mut best = (0usize, f64::INFINITY);
            for (j, p) in g.points().iter().enumerate() {
                let dj = p.dist(&x);
                if dj < best.1 { best = (j, dj); }
            }
            prop_assert_eq!(d, best.1);
            prop_assert_eq!(i, best.0);
        }
    }
}
