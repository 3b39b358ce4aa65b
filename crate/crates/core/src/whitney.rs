//! Whitney cubes for the complement of a grid, the partition of unity subordinate
//! to the inflated cubes, local interpolants, and the extension, restriction and
//! projection operators built from them. Also the almost-order corrector and
//! sampled estimates of Hölder norms.
//!
//! Kept cubes satisfy diam ≤ d(Q, G) ≤ 4 diam. Subdivision stops at side
//! spacing/8: a floor cube that still fails the test becomes a core cube, based
//! at the grid point nearest its center. Core cubes make the cover finite and
//! reproduce, near each grid point, the interpolant of that point, which is what
//! the infinite stack of cubes accumulating there would give.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{phi0, ramp, smoothstep3, Field, HolderClass, SmoothFunction};
use crate::discrete_diff::{DerivativeStencils, FrameMode};
use crate::error::{Error, Result};
use crate::grid::Grid;
pub use crate::grid::GridFunction;
use crate::jet::{sym_norm, Jet};
use crate::point::{sample_lattice, BoxDomain, Point};
use crate::stats::RateTable;

/// Side ratio of Q* to Q.
pub const INFLATION: f64 = 9.0 / 8.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cube {
    pub center: Point,
    pub side: f64,
    /// Index of ŷ, the grid point nearest the center.
    pub base: usize,
    /// Floor cube kept without the distance test.
    pub core: bool,
    /// d(Q, G) / diam(Q).
    pub ratio: f64,
}

impl Cube {
    pub fn diam(&self) -> f64 {
        self.side * (self.center.dim() as f64).sqrt()
    }

    /// Whether x lies in the open inflated cube Q*.
    pub fn in_inflated(&self, x: &Point) -> bool {
        let r = 0.5 * INFLATION * self.side;
        (0..self.center.dim()).all(|k| (x.get(k) - self.center.get(k)).abs() < r)
    }

    pub fn contains(&self, x: &Point) -> bool {
        let r = 0.5 * self.side;
        (0..self.center.dim()).all(|k| (x.get(k) - self.center.get(k)).abs() <= r)
    }

    /// The bump ψ_k: 1 on Q, 0 outside Q*, a product of one-dimensional C³ steps.
    pub fn psi(&self, x: &Point) -> Jet {
        let mut j = Jet::constant(1.0);
        for k in 0..self.center.dim() {
            let z = Jet::coordinate(k, x.get(k)).add(&Jet::constant(-self.center.get(k))).scale(2.0 / self.side);
            j = j.mul(&z.compose(psi1(z.v)));
        }
        j
    }
}

/// 1 on [−1,1], 0 outside (−9/8, 9/8), C³ in between.
fn psi1(t: f64) -> [f64; 4] {
    let f = smoothstep3(8.0 * (INFLATION - t.abs()));
    let a = if t >= 0.0 { -8.0 } else { 8.0 };
    [f[0], f[1] * a, f[2] * a * a, f[3] * a * a * a]
}

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 2],
    side: f64,
    children: std::ops::Range<u32>,
    leaf: Option<u32>,
}

/// Dyadic Whitney cover of a box with respect to a grid.
#[derive(Debug, Clone)]
pub struct WhitneyCover {
    grid: Arc<Grid>,
    cubes: Vec<Cube>,
    nodes: Vec<Node>,
    overlap_bound: usize,
}

fn point_box_distance(p: &Point, lo: &[f64; 2], side: f64, d: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..d {
        let v = p.get(k);
        let e = if v < lo[k] {
            lo[k] - v
        } else if v > lo[k] + side {
            v - lo[k] - side
        } else {
            0.0
        };
        s += e * e;
    }
    s.sqrt()
}

/// min(d(Q, G), cap)
fn cube_grid_distance(grid: &Grid, lo: &[f64; 2], side: f64, cap: f64) -> f64 {
    let d = grid.dim();
    let c: Vec<f64> = (0..d).map(|k| lo[k] + 0.5 * side).collect();
    let c = Point::from_slice(&c).expect("dimension 1 or 2");
    let r = 0.5 * side * (d as f64).sqrt();
    grid.within(&c, r + cap).into_iter().map(|j| point_box_distance(&grid.point(j), lo, side, d)).fold(cap, f64::min)
}

enum Verdict {
    Keep(f64),
    Core,
    Split,
}

fn classify(grid: &Grid, lo: &[f64; 2], side: f64, floor: f64) -> Verdict {
    let diam = side * (grid.dim() as f64).sqrt();
    let dist = cube_grid_distance(grid, lo, side, 4.0 * diam);
    if dist >= diam {
        Verdict::Keep(dist / diam)
    } else if 0.5 * side < floor {
        Verdict::Core
    } else {
        Verdict::Split
    }
}

/// Builds the cover: dyadic subdivision of the square on the box's lower corner
/// with side the box's largest width, keeping maximal cubes with diam ≤ d(Q, G).
pub fn build_cover(grid: Arc<Grid>) -> WhitneyCover {
    let dom = *grid.domain();
    let d = grid.dim();
    let floor = grid.spacing() / 8.0;
    let lo0 = [dom.lo(0), if d == 2 { dom.lo(1) } else { 0.0 }];
    let mut nodes = vec![Node { lo: lo0, side: dom.max_width(), children: 0..0, leaf: None }];
    let mut cubes = Vec::new();
    // breadth first, one level at a time, so each level can be classified in parallel
    let mut level: Vec<usize> = vec![0];
    while !level.is_empty() {
        let verdicts: Vec<Verdict> =
            level.par_iter().map(|&i| classify(&grid, &nodes[i].lo, nodes[i].side, floor)).collect();
        let mut next = Vec::new();
        for (&i, v) in level.iter().zip(verdicts) {
            let (lo, side) = (nodes[i].lo, nodes[i].side);
            let make_cube = |core: bool, ratio: f64, cubes: &mut Vec<Cube>| {
                let c: Vec<f64> = (0..d).map(|k| lo[k] + 0.5 * side).collect();
                let center = Point::from_slice(&c).expect("dimension 1 or 2");
                let base = grid.nearest(&center).0;
                cubes.push(Cube { center, side, base, core, ratio });
                Some(cubes.len() as u32 - 1)
            };
            match v {
                Verdict::Keep(r) => nodes[i].leaf = make_cube(false, r, &mut cubes),
                Verdict::Core => {
                    let diam = side * (d as f64).sqrt();
                    let r = cube_grid_distance(&grid, &lo, side, 4.0 * diam) / diam;
                    nodes[i].leaf = make_cube(true, r, &mut cubes);
                }
                Verdict::Split => {
                    let h = 0.5 * side;
                    let start = nodes.len() as u32;
                    let offsets: &[[f64; 2]] = if d == 1 {
                        &[[0.0, 0.0], [1.0, 0.0]]
                    } else {
                        &[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
                    };
                    for o in offsets {
                        let clo = [lo[0] + o[0] * h, lo[1] + o[1] * h];
                        let meets = (0..d).all(|k| clo[k] < dom.hi(k) && clo[k] + h > dom.lo(k));
                        if meets {
                            next.push(nodes.len());
                            nodes.push(Node { lo: clo, side: h, children: 0..0, leaf: None });
                        }
                    }
                    nodes[i].children = start..nodes.len() as u32;
                }
            }
        }
        level = next;
    }
    let mut cover = WhitneyCover { grid, cubes, nodes, overlap_bound: 0 };
    cover.overlap_bound = cover.measure_overlap();
    cover
}

impl WhitneyCover {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Largest number of inflated cubes containing a common point.
    pub fn overlap_bound(&self) -> usize {
        self.overlap_bound
    }

    fn visit(&self, hit: impl Fn(&[f64; 2], f64) -> bool, mut leaf: impl FnMut(usize)) {
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i];
            // descendants' inflated cubes stay within side/16 of the node
            if !hit(&n.lo, n.side) {
                continue;
            }
            if let Some(c) = n.leaf {
                leaf(c as usize);
            }
            stack.extend(n.children.clone().map(|c| c as usize));
        }
    }

    /// K_x: indices of the cubes whose open inflated cube contains x, ascending.
    pub fn containing(&self, x: &Point) -> Vec<usize> {
        let d = self.grid.dim();
        let mut out = Vec::new();
        self.visit(
            |lo, side| {
                let pad = side / 16.0;
                (0..d).all(|k| x.get(k) > lo[k] - pad && x.get(k) < lo[k] + side + pad)
            },
            |c| {
                if self.cubes[c].in_inflated(x) {
                    out.push(c)
                }
            },
        );
        out.sort_unstable();
        out
    }

    /// Cubes whose inflated cube meets the open box (lo, hi).
    fn meeting(&self, lo: &[f64; 2], hi: &[f64; 2]) -> Vec<usize> {
        let d = self.grid.dim();
        let mut out = Vec::new();
        self.visit(
            |nlo, side| {
                let pad = side / 16.0;
                (0..d).all(|k| nlo[k] - pad < hi[k] && nlo[k] + side + pad > lo[k])
            },
            |c| {
                let q = &self.cubes[c];
                let r = 0.5 * INFLATION * q.side;
                if (0..d).all(|k| q.center.get(k) - r < hi[k] && q.center.get(k) + r > lo[k]) {
                    out.push(c)
                }
            },
        );
        out
    }

    fn inflated_bounds(&self, c: usize) -> ([f64; 2], [f64; 2]) {
        let q = &self.cubes[c];
        let r = 0.5 * INFLATION * q.side;
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for k in 0..self.grid.dim() {
            lo[k] = q.center.get(k) - r;
            hi[k] = q.center.get(k) + r;
        }
        (lo, hi)
    }

    /// Exact maximum overlap. A deepest point of a family of open boxes can be
    /// taken just inside the corner (max lo_x, max lo_y), whose coordinates come
    /// from two members of the family, so overlapping pairs give all candidates.
    fn measure_overlap(&self) -> usize {
        let d = self.grid.dim();
        (0..self.cubes.len())
            .into_par_iter()
            .map(|i| {
                let (lo, hi) = self.inflated_bounds(i);
                let nb = self.meeting(&lo, &hi);
                let mut best = 0;
                for &j in &nb {
                    let (lj, _) = self.inflated_bounds(j);
                    let tiny = 1e-9 * self.cubes[i].side.min(self.cubes[j].side);
                    let c: Vec<f64> = (0..d).map(|k| lo[k].max(lj[k]) + tiny).collect();
                    let p = Point::from_slice(&c).expect("dimension 1 or 2");
                    best = best.max(nb.iter().filter(|&&m| self.cubes[m].in_inflated(&p)).count());
                }
                best
            })
            .max()
            .unwrap_or(0)
    }

    /// φ_k = ψ_k / Σ_j ψ_j for every k in K_x.
    pub fn partition(&self, x: &Point) -> Vec<(usize, Jet)> {
        let ks = self.containing(x);
        let psis: Vec<Jet> = ks.iter().map(|&k| self.cubes[k].psi(x)).collect();
        let mut s = Jet::constant(0.0);
        for p in &psis {
            s = s.add(p);
        }
        if s.v <= 0.0 {
            return Vec::new();
        }
        let r = s.recip();
        ks.into_iter().zip(psis).map(|(k, p)| (k, p.mul(&r))).collect()
    }

    /// φ_k at x (zero outside Q*_k).
    pub fn phi(&self, k: usize, x: &Point) -> Jet {
        self.partition(x).into_iter().find(|(j, _)| *j == k).map(|(_, j)| j).unwrap_or_default()
    }

    pub fn dump(&self) -> CoverDump {
        CoverDump {
            cubes: self.cubes.iter().map(|c| CubeDump { center: c.center, side: c.side }).collect(),
            overlap_bound: self.overlap_bound,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeDump {
    pub center: Point,
    pub side: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverDump {
    pub cubes: Vec<CubeDump>,
    pub overlap_bound: usize,
}

/// Measured constants C_i = max_k sup |∇^i φ_k| · diam(Q*_k)^i over sample points.
pub fn partition_derivative_constants(cover: &WhitneyCover, samples: &[Point]) -> [f64; 3] {
    samples
        .par_iter()
        .map(|x| {
            let mut c = [0.0f64; 3];
            for (k, j) in cover.partition(x) {
                let dq = INFLATION * cover.cubes[k].diam();
                c[0] = c[0].max(j.g.norm() * dq);
                c[1] = c[1].max(j.hess_norm() * dq * dq);
                c[2] = c[2].max(j.third_norm() * dq * dq * dq);
            }
            c
        })
        .reduce(|| [0.0; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])])
}

/// Extension operator E^β for a fixed cover and class.
#[derive(Debug, Clone)]
pub struct WhitneyExtension {
    cover: Arc<WhitneyCover>,
    cls: HolderClass,
    stencils: Arc<DerivativeStencils>,
}

fn check_class(cls: &HolderClass) -> Result<()> {
    if cls.beta >= 3.0 {
        return Err(Error::ClassMismatch(format!("extension needs beta < 3, got {}", cls.beta)));
    }
    Ok(())
}

impl WhitneyExtension {
    pub fn new(cover: Arc<WhitneyCover>, cls: HolderClass, mode: FrameMode) -> Result<Self> {
        check_class(&cls)?;
        let stencils = DerivativeStencils::build(cover.grid(), mode, cls.taylor_order() >= 2);
        Ok(WhitneyExtension { cover, cls, stencils: Arc::new(stencils) })
    }

    /// Cover and stencil-mode frames for a grid.
    pub fn for_grid(grid: Arc<Grid>, cls: HolderClass) -> Result<Self> {
        WhitneyExtension::new(Arc::new(build_cover(grid)), cls, FrameMode::Stencil)
    }

    /// Same cover and stencils, another class of the same Taylor order or lower.
    pub fn with_class(&self, cls: HolderClass) -> Result<Self> {
        check_class(&cls)?;
        if cls.taylor_order() >= 2 && !self.stencils.has_hessian() {
            return WhitneyExtension::new(self.cover.clone(), cls, self.stencils.mode);
        }
        Ok(WhitneyExtension { cover: self.cover.clone(), cls, stencils: self.stencils.clone() })
    }

    pub fn cover(&self) -> &Arc<WhitneyCover> {
        &self.cover
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.cover.grid()
    }

    pub fn class(&self) -> &HolderClass {
        &self.cls
    }

    pub fn stencils(&self) -> &DerivativeStencils {
        &self.stencils
    }

    fn used_bases(&self) -> Vec<bool> {
        let mut used = vec![false; self.grid().len()];
        for c in self.cover.cubes() {
            used[c.base] = true;
        }
        used
    }

    /// E^β u. Discrete derivatives are taken at every base point of the cover.
    pub fn extend(&self, u: &GridFunction) -> Result<ExtendedFunction> {
        let g = self.grid();
        if u.values.len() != g.len() {
            return Err(Error::DimensionMismatch { expected: g.len(), got: u.values.len() });
        }
        let order = self.cls.taylor_order();
        let used = self.used_bases();
        let data: Vec<(Vector2<f64>, Matrix2<f64>)> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                if !used[i] || order == 0 {
                    return Ok((Vector2::zeros(), Matrix2::zeros()));
                }
                let gr = self.stencils.apply_gradient(i, &u.values)?;
                let h = if order >= 2 { self.stencils.apply_hessian(i, &u.values)? } else { Matrix2::zeros() };
                Ok((gr, h))
            })
            .collect::<Result<_>>()?;
        let (grads, hessians) = data.into_iter().unzip();
        Ok(ExtendedFunction { ext: self.clone(), values: u.values.clone(), grads, hessians })
    }

    /// π^β u = E^β(T u).
    pub fn project(&self, u: &dyn SmoothFunction) -> Result<ExtendedFunction> {
        self.extend(&restrict(self.grid().clone(), u))
    }

    /// Jets w_i(x) with E^β u(x) = Σ_i u_i w_i(x) for every grid function u.
    /// At a grid point the value parts reduce to the indicator of that point.
    pub fn weights(&self, x: &Point) -> Result<Vec<(usize, Jet)>> {
        let g = self.grid();
        let order = self.cls.taylor_order();
        let mut terms: Vec<(usize, Jet)> = Vec::new();
        for (k, phi) in self.cover.partition(x) {
            let b = self.cover.cubes[k].base;
            let z = x.sub(&g.point(b));
            terms.push((b, phi));
            if order >= 1 {
                for (i, c) in self.stencils.gradient(b)? {
                    terms.push((*i, phi.mul(&Jet::quadratic(0.0, *c, Matrix2::zeros(), z))));
                }
            }
            if order >= 2 {
                for (i, m) in self.stencils.hessian(b)? {
                    terms.push((*i, phi.mul(&Jet::quadratic(0.0, Vector2::zeros(), *m, z))));
                }
            }
        }
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, Jet)> = Vec::with_capacity(terms.len());
        for (i, j) in terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 = last.1.add(&j),
                _ => out.push((i, j)),
            }
        }
        if let Some(p) = g.locate_exact(x) {
            for (i, j) in out.iter_mut() {
                j.v = if *i == p { 1.0 } else { 0.0 };
            }
        }
        Ok(out)
    }
}

/// T u: values of `u` at the grid points.
pub fn restrict(grid: Arc<Grid>, u: &dyn SmoothFunction) -> GridFunction {
    let values = grid.points().par_iter().map(|p| u.value(p)).collect();
    GridFunction { grid, values }
}

/// E^β u for a particular grid function.
#[derive(Debug, Clone)]
pub struct ExtendedFunction {
    ext: WhitneyExtension,
    values: Vec<f64>,
    grads: Vec<Vector2<f64>>,
    hessians: Vec<Matrix2<f64>>,
}

impl ExtendedFunction {
    pub fn class(&self) -> &HolderClass {
        &self.ext.cls
    }

    pub fn extension(&self) -> &WhitneyExtension {
        &self.ext
    }

    /// Discrete gradient and Hessian used at grid point i.
    pub fn base_derivatives(&self, i: usize) -> (Vector2<f64>, Matrix2<f64>) {
        (self.grads[i], self.hessians[i])
    }

    fn base_jet(&self, b: usize, x: &Point) -> Jet {
        let z = x.sub(&self.ext.grid().point(b));
        Jet::quadratic(self.values[b], self.grads[b], self.hessians[b], z)
    }

    /// p^β_{(u,k)}(x)
    pub fn local_interpolant(&self, k: usize, x: &Point) -> f64 {
        self.base_jet(self.ext.cover.cubes[k].base, x).v
    }

    /// Value and derivatives up to third order; NaN outside the cover.
    pub fn jet(&self, x: &Point) -> Jet {
        let cover = &self.ext.cover;
        let ks = cover.containing(x);
        if ks.is_empty() {
            return Jet::constant(f64::NAN);
        }
        let mut s = Jet::constant(0.0);
        let mut num = Jet::constant(0.0);
        let first = cover.cubes[ks[0]].base;
        let same_base = ks.iter().all(|&k| cover.cubes[k].base == first);
        for &k in &ks {
            let psi = cover.cubes[k].psi(x);
            s = s.add(&psi);
            if !same_base {
                num = num.add(&psi.mul(&self.base_jet(cover.cubes[k].base, x)));
            }
        }
        // with one base point the partition sums to one identically
        let mut j = if same_base { self.base_jet(first, x) } else { num.mul(&s.recip()) };
        if let Some(p) = self.ext.grid().locate_exact(x) {
            j.v = self.values[p];
        }
        j
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.jet(x).v
    }

    /// T(E u): the grid values.
    pub fn restrict(&self) -> GridFunction {
        GridFunction { grid: self.ext.grid().clone(), values: self.values.clone() }
    }
}

impl Field for ExtendedFunction {
    fn field_dim(&self) -> usize {
        self.ext.grid().dim()
    }

    fn jet_at(&self, x: &Point) -> Jet {
        ExtendedFunction::jet(self, x)
    }
}

/// p^β_{(u,k)}(x) for one cube, computed from the frames at ŷ_k only.
pub fn local_interpolant(ext: &WhitneyExtension, u: &GridFunction, k: usize, x: &Point) -> Result<f64> {
    let b = ext.cover.cubes[k].base;
    let order = ext.cls.taylor_order();
    let z = x.sub(&ext.grid().point(b));
    let mut v = u.values[b];
    if order >= 1 {
        v += ext.stencils.apply_gradient(b, &u.values)?.dot(&z);
    }
    if order >= 2 {
        v += 0.5 * z.dot(&(ext.stencils.apply_hessian(b, &u.values)? * z));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// sampled Hölder norms

/// Sampled C^β norm: sup of the derivatives up to order k and the Hölder
/// quotient of the k-th derivative over lattice pairs at dyadic offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledNorm {
    pub sup: [f64; 3],
    pub seminorm: f64,
    pub total: f64,
    pub samples: usize,
}

fn kth_diff(a: &Jet, b: &Jet, k: usize) -> f64 {
    match k {
        0 => (a.v - b.v).abs(),
        1 => (a.g - b.g).norm(),
        _ => sym_norm(&(a.h - b.h)),
    }
}

/// Evaluates `f` on the lattice of the given pitch over the box and estimates its
/// C^β norm. Pairs are taken along the axes (and the diagonal in 2D) at offsets of
/// 1, 2, 4, ... lattice steps.
pub fn lattice_holder_norm(
    b: &BoxDomain,
    pitch: f64,
    cls: &HolderClass,
    f: &(dyn Fn(&Point) -> Jet + Sync),
) -> SampledNorm {
    let pts = sample_lattice(b, pitch);
    let jets: Vec<Jet> = pts.par_iter().map(f).collect();
    let (k, alpha) = cls.norm_split();
    let mut sup = [0.0f64; 3];
    for j in &jets {
        sup[0] = sup[0].max(j.v.abs());
        sup[1] = sup[1].max(j.g.norm());
        sup[2] = sup[2].max(j.hess_norm());
    }
    let dims: Vec<usize> = if b.dim() == 1 {
        vec![pts.len()]
    } else {
        let ny = pts.iter().take_while(|p| p.get(0) == pts[0].get(0)).count();
        vec![pts.len() / ny, ny]
    };
    let mut seminorm = 0.0f64;
    if alpha > 0.0 {
        let idx = |i: usize, j: usize| if dims.len() == 1 { i } else { i * dims[1] + j };
        let dirs: Vec<[usize; 2]> = if dims.len() == 1 { vec![[1, 0]] } else { vec![[1, 0], [0, 1], [1, 1]] };
        let mut m = 1usize;
        while m < *dims.iter().max().unwrap() {
            for dir in &dirs {
                let (di, dj) = (dir[0] * m, dir[1] * m);
                let ni = dims[0];
                let nj = if dims.len() == 1 { 1 } else { dims[1] };
                if di >= ni || dj >= nj {
                    continue;
                }
                let q = (0..ni - di)
                    .into_par_iter()
                    .map(|i| {
                        let mut best = 0.0f64;
                        for j in 0..(nj - dj) {
                            let (a, c) = (idx(i, j), idx(i + di, j + dj));
                            let dist = pts[a].dist(&pts[c]);
                            if dist > 0.0 {
                                best = best.max(kth_diff(&jets[a], &jets[c], k) / dist.powf(alpha));
                            }
                        }
                        best
                    })
                    .reduce(|| 0.0, f64::max);
                seminorm = seminorm.max(q);
            }
            m *= 2;
        }
    }
    let total = sup[..=k].iter().sum::<f64>() + seminorm;
    SampledNorm { sup, seminorm, total, samples: pts.len() }
}

/// Lattice pitch used for sampled norms at a grid: fine enough to resolve the
/// transition bands of the smallest non-core cubes in 1D.
pub fn norm_pitch(grid: &Grid) -> f64 {
    if grid.dim() == 1 {
        grid.spacing() / 512.0
    } else {
        grid.spacing() / 16.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproximationRow {
    pub level: u32,
    pub h: f64,
    pub error: SampledNorm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub function: String,
    pub beta: f64,
    pub gamma: f64,
    pub rows: Vec<ApproximationRow>,
    pub table: RateTable,
}

/// Sampled ‖π_n u − u‖_{C^β} on each grid, with its log-log slope against h.
pub fn approximation_rate(
    u: &dyn SmoothFunction,
    cls: &HolderClass,
    grids: &[Arc<Grid>],
    mode: FrameMode,
) -> Result<ApproximationReport> {
    if grids.len() < 3 {
        return Err(Error::InsufficientData(format!("{} levels, need at least 3", grids.len())));
    }
    let mut rows = Vec::new();
    for g in grids {
        let ext = WhitneyExtension::new(Arc::new(build_cover(g.clone())), *cls, mode)?;
        let f = ext.project(u)?;
        let err = |x: &Point| f.jet(x).sub(&u.jet(x));
        let e = lattice_holder_norm(g.domain(), norm_pitch(g), cls, &err);
        rows.push(ApproximationRow { level: g.level(), h: g.gauge(), error: e });
    }
    let scale = 1.0 + u.c3_bound(grids[0].domain());
    let table =
        RateTable::new(rows.iter().map(|r| r.h).collect(), rows.iter().map(|r| r.error.total).collect(), 1e-9 * scale);
    Ok(ApproximationReport { function: u.name(), beta: cls.beta, gamma: cls.gamma(), rows, table })
}

// ---------------------------------------------------------------------------
// locality

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalityVerdict {
    pub x0: Point,
    pub samples: usize,
    pub max_abs: f64,
    pub passed: bool,
}

/// Checks that E u vanishes identically on B_{100h}(x0) when u vanishes at every
/// grid point of B_{400h}(x0).
pub fn locality_check(ext: &WhitneyExtension, u: &GridFunction, x0: &Point) -> Result<LocalityVerdict> {
    let g = ext.grid();
    let h = g.gauge();
    for i in g.within(x0, 400.0 * h) {
        if u.values[i] != 0.0 {
            return Err(Error::Precondition(format!(
                "u is nonzero at grid point {:?} within 400h of x0",
                g.point(i).coords()
            )));
        }
    }
    let f = ext.extend(u)?;
    let r = 100.0 * h;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for k in 0..g.dim() {
        lo.push((x0.get(k) - r).max(g.domain().lo(k)));
        hi.push((x0.get(k) + r).min(g.domain().hi(k)));
    }
    let ball = BoxDomain::new(&lo, &hi)?;
    let pitch = if g.dim() == 1 { g.spacing() / 7.0 } else { g.spacing() / 3.0 };
    let pts: Vec<Point> = sample_lattice(&ball, pitch).into_iter().filter(|p| p.dist(x0) <= r).collect();
    let max_abs = pts.par_iter().map(|p| f.value(p).abs()).reduce(|| 0.0, f64::max);
    Ok(LocalityVerdict { x0: *x0, samples: pts.len(), max_abs, passed: max_abs == 0.0 })
}

// ---------------------------------------------------------------------------
// corrector

/// R(x) = A·h·ramp(d(x,x0)^i / h) − (l + q)(x)·φ₀(d(x,x0)²), with A = C·‖w‖_{C³}
/// and l, q built from the derivatives of π w at x0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corrector {
    pub x0: Point,
    /// A = C·‖w‖_{C³}
    pub amplitude: f64,
    pub h: f64,
    /// Power of the distance inside the ramp: 2 for β in [1,2), 3 for β in [2,3).
    pub power: u32,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
    pub order: usize,
}

impl Corrector {
    pub fn zero(x0: Point) -> Self {
        Corrector {
            x0,
            amplitude: 0.0,
            h: 1.0,
            power: 2,
            gradient: Vector2::zeros(),
            hessian: Matrix2::zeros(),
            order: 0,
        }
    }

    fn squared_distance(&self, x: &Point) -> Jet {
        let mut r2 = Jet::constant(0.0);
        for k in 0..self.x0.dim() {
            let z = Jet::coordinate(k, x.get(k)).add(&Jet::constant(-self.x0.get(k)));
            r2 = r2.add(&z.mul(&z));
        }
        r2
    }

    /// A·h·ramp(d^i/h)
    pub fn ramp_part(&self, x: &Point) -> Jet {
        if self.amplitude == 0.0 {
            return Jet::constant(0.0);
        }
        let r2 = self.squared_distance(x);
        let di = if self.power == 2 {
            r2
        } else if r2.v == 0.0 {
            Jet::constant(0.0)
        } else {
            let s = r2.v;
            r2.compose([s.powf(1.5), 1.5 * s.sqrt(), 0.75 / s.sqrt(), -0.375 / (s * s.sqrt())])
        };
        let t = di.scale(1.0 / self.h);
        t.compose(ramp(t.v)).scale(self.amplitude * self.h)
    }

    /// (l + q)(x)·φ₀(d²)
    pub fn polynomial_part(&self, x: &Point) -> Jet {
        if self.order == 0 {
            return Jet::constant(0.0);
        }
        let z = x.sub(&self.x0);
        let h = if self.order >= 2 { self.hessian } else { Matrix2::zeros() };
        let p = Jet::quadratic(0.0, self.gradient, h, z);
        let r2 = self.squared_distance(x);
        p.mul(&r2.compose(phi0(r2.v)))
    }

    pub fn jet(&self, x: &Point) -> Jet {
        self.ramp_part(x).sub(&self.polynomial_part(x))
    }
}

impl Field for Corrector {
    fn field_dim(&self) -> usize {
        self.x0.dim()
    }

    fn jet_at(&self, x: &Point) -> Jet {
        Corrector::jet(self, x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorResult {
    pub corrector: Corrector,
    /// The constant C with A = C·‖w‖_{C³}.
    pub constant: f64,
    pub w_norm: f64,
    pub norm_estimate: SampledNorm,
    /// min of π w over the verification sample, before correction.
    pub min_before: f64,
    /// min of π w + R over the verification sample.
    pub min_after: f64,
    pub samples: usize,
}

/// Doubling cap on C.
pub const CORRECTOR_MAX_DOUBLINGS: u32 = 20;

/// Builds R with π w + R ≥ −1e-12 on a lattice ten times finer than the grid.
/// C starts at 1 and doubles until positivity holds.
pub fn corrector(ext: &WhitneyExtension, w: &dyn SmoothFunction, x0: &Point) -> Result<CorrectorResult> {
    let g = ext.grid();
    let cls = *ext.class();
    let i0 = g.locate_exact(x0).ok_or_else(|| Error::NotInGrid(x0.coords().to_vec()))?;
    let wg = restrict(g.clone(), w);
    if wg.values[i0] != 0.0 {
        return Err(Error::Precondition(format!("w(x0) = {} is not zero", wg.values[i0])));
    }
    if let Some(v) = wg.values.iter().find(|v| **v < 0.0) {
        return Err(Error::Precondition(format!("w takes the negative value {v} on the grid")));
    }
    let f = ext.extend(&wg)?;
    let samples = sample_lattice(g.domain(), g.spacing() / 10.0);
    let pw: Vec<f64> = samples.par_iter().map(|x| f.value(x)).collect();
    let min_before = pw.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_norm = w.c3_bound(g.domain());
    let x0 = g.point(i0);
    let mut rc = Corrector::zero(x0);
    let pitch = norm_pitch(g).max(g.spacing() / 64.0);
    if cls.taylor_order() == 0 {
        let norm = lattice_holder_norm(g.domain(), pitch, &cls, &|x| rc.jet(x));
        return Ok(CorrectorResult {
            corrector: rc,
            constant: 0.0,
            w_norm,
            norm_estimate: norm,
            min_before,
            min_after: min_before,
            samples: samples.len(),
        });
    }
    let j0 = f.jet(&x0);
    rc.order = cls.taylor_order();
    rc.power = if cls.beta < 2.0 { 2 } else { 3 };
    rc.gradient = j0.g;
    rc.hessian = (j0.h + j0.h.transpose()) * 0.5;
    rc.h = g.gauge();
    let poly: Vec<f64> = samples.par_iter().map(|x| rc.polynomial_part(x).v).collect();
    let mut c = 1.0;
    let mut last_violation = f64::NAN;
    for _ in 0..=CORRECTOR_MAX_DOUBLINGS {
        rc.amplitude = c * w_norm;
        let min_after = samples
            .par_iter()
            .enumerate()
            .map(|(i, x)| pw[i] - poly[i] + rc.ramp_part(x).v)
            .reduce(|| f64::INFINITY, f64::min);
        if min_after >= -1e-12 {
            let norm = lattice_holder_norm(g.domain(), pitch, &cls, &|x| rc.jet(x));
            return Ok(CorrectorResult {
                corrector: rc,
                constant: c,
                w_norm,
                norm_estimate: norm,
                min_before,
                min_after,
                samples: samples.len(),
            });
        }
        last_violation = min_after;
        if w_norm == 0.0 {
            break;
        }
        c *= 2.0;
    }
    Err(Error::CorrectorFailure { constant: c, violation: last_violation })
}

// ---------------------------------------------------------------------------
// estimate diagnostics

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    pub level: u32,
    pub beta: f64,
    /// max |f(x) − f(x̂)| / d(x,G)^{min(1,β)} / ‖u‖_{C^β}
    pub boundary_ratio: f64,
    /// max |∇^{i} f(x)| · d(x,G)^{i−β} / ‖u‖_{C^β} with i = ⌊β⌋ + 1
    pub decay_ratio: f64,
    pub samples: usize,
}

/// Empirical constants of the boundary and derivative-decay estimates for π u.
pub fn estimate_diagnostics(u: &dyn SmoothFunction, ext: &WhitneyExtension) -> Result<EstimateDiagnostics> {
    let g = ext.grid();
    let cls = *ext.class();
    let f = ext.project(u)?;
    let norm = u.holder_norm(&cls, g.domain()).max(f64::MIN_POSITIVE);
    let pts: Vec<Point> = sample_lattice(g.domain(), g.spacing() / 64.0)
        .into_iter()
        .filter(|p| g.distance(p) > 1e-9 * g.spacing())
        .collect();
    let b = cls.beta;
    let i = b.floor() as i32 + 1;
    let (br, dr) = pts
        .par_iter()
        .map(|x| {
            let (xi, d) = g.nearest(x);
            let j = f.jet(x);
            let bnd = (j.v - f.value(&g.point(xi))).abs() / d.powf(b.min(1.0));
            let top = match i {
                1 => j.g.norm(),
                2 => j.hess_norm(),
                _ => j.third_norm(),
            };
            (bnd, top * d.powf(i as f64 - b))
        })
        .reduce(|| (0.0, 0.0), |a, c| (a.0.max(c.0), a.1.max(c.1)));
    Ok(EstimateDiagnostics {
        level: g.level(),
        beta: b,
        boundary_ratio: br / norm,
        decay_ratio: dr / norm,
        samples: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{Polynomial, Sine};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid1(n: u32) -> Arc<Grid> {
        Grid::cartesian(BoxDomain::unit(1), n).unwrap().shared()
    }

    #[test]
    fn two_point_grid_gives_symmetric_stack() {
        let g = Grid::from_points(BoxDomain::unit(1), 0, vec![Point::new1(0.0), Point::new1(1.0)]).unwrap().shared();
        let c = build_cover(g);
        for q in c.cubes().iter().filter(|q| !q.core) {
            assert!(q.ratio >= 1.0 && q.ratio <= 4.0, "{:?}", q);
            let mirror = 1.0 - q.center.get(0);
            assert!(c.cubes().iter().any(|p| (p.center.get(0) - mirror).abs() < 1e-12 && p.side == q.side));
        }
        assert!(c.cubes().iter().any(|q| !q.core && q.side == 0.25));
    }

    #[test]
    fn cover_has_disjoint_interiors_and_covers() {
        let g = Grid::cartesian(BoxDomain::unit(2), 1).unwrap().shared();
        let c = build_cover(g.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let x = Point::new2(rng.gen(), rng.gen());
            let inside: Vec<_> = c.cubes().iter().filter(|q| q.contains(&x)).collect();
            assert!(!inside.is_empty());
            assert!(
                inside.len() == 1 || g.distance(&x) < 1e-9 || {
                    // on a shared face
                    inside
                        .iter()
                        .any(|q| (0..2).any(|k| ((x.get(k) - q.center.get(k)).abs() - q.side / 2.0).abs() < 1e-12))
                }
            );
        }
        for q in c.cubes().iter().filter(|q| !q.core) {
            assert!(q.ratio >= 1.0 - 1e-12 && q.ratio <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn overlap_is_level_independent() {
        let a = build_cover(grid1(2)).overlap_bound();
        let b = build_cover(grid1(4)).overlap_bound();
        assert_eq!(a, b);
        assert!(a >= 2);
    }

    #[test]
    fn containing_matches_scan() {
        let g = Grid::cartesian(BoxDomain::unit(2), 0).unwrap().shared();
        let c = build_cover(g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let x = Point::new2(rng.gen(), rng.gen());
            let scan: Vec<usize> = (0..c.len()).filter(|&k| c.cubes()[k].in_inflated(&x)).collect();
            assert_eq!(c.containing(&x), scan);
        }
    }

    #[test]
    fn partition_of_unity() {
        let c = build_cover(grid1(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = Point::new1(rng.gen());
            let p = c.partition(&x);
            let s: f64 = p.iter().map(|t| t.1.v).sum();
            let ds: f64 = p.iter().map(|t| t.1.g.x).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(ds.abs() < 1e-8 * (1.0 + p.iter().map(|t| t.1.g.norm()).sum::<f64>()));
            for (_, j) in &p {
                assert!(j.v >= 0.0 && j.v <= 1.0 + 1e-15);
            }
        }
        let q = &c.cubes()[0];
        let far = Point::new1(q.center.get(0) + q.side);
        assert_eq!(c.phi(0, &far).v, 0.0);
    }

    #[test]
    fn extension_interpolates_and_reproduces_affine() {
        let g = grid1(2);
        let u = Polynomial::affine(0.2, &[1.5]);
        for cls in [HolderClass::c1alpha(0.5).unwrap(), HolderClass::c11()] {
            let ext = WhitneyExtension::for_grid(g.clone(), cls).unwrap();
            let f = ext.project(&u).unwrap();
            assert_eq!(f.restrict().values, restrict(g.clone(), &u).values);
            for i in 0..200 {
                let x = Point::new1(i as f64 / 199.0);
                assert!((f.value(&x) - u.value(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolant_branches() {
        let g = grid1(2);
        let u = restrict(g.clone(), &Sine::new1(2.0));
        let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::holder(0.3).unwrap()).unwrap();
        let k = 5;
        let b = ext.cover().cubes()[k].base;
        let x = Point::new1(0.37);
        assert_eq!(local_interpolant(&ext, &u, k, &x).unwrap(), u.values[b]);
        for cls in [HolderClass::c1alpha(0.5).unwrap(), HolderClass::c11()] {
            let e = ext.with_class(cls).unwrap();
            let yb = g.point(b);
            assert_eq!(local_interpolant(&e, &u, k, &yb).unwrap(), u.values[b]);
            let f = e.extend(&u).unwrap();
            assert!((f.local_interpolant(k, &x) - local_interpolant(&e, &u, k, &x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_reproduce_extension() {
        let g = grid1(2);
        let u = restrict(g.clone(), &Sine::new1(3.0));
        for cls in [HolderClass::holder(0.5).unwrap(), HolderClass::c1alpha(0.5).unwrap(), HolderClass::c11()] {
            let ext = WhitneyExtension::for_grid(g.clone(), cls).unwrap();
            let f = ext.extend(&u).unwrap();
            for i in 0..100 {
                let x = Point::new1(i as f64 / 99.0 * 0.999 + 0.0003);
                let mut acc = Jet::constant(0.0);
                for (j, w) in ext.weights(&x).unwrap() {
                    acc.axpy(u.values[j], &w);
                }
                let direct = f.jet(&x);
                assert!((acc.v - direct.v).abs() < 1e-10);
                assert!((acc.g - direct.g).norm() < 1e-7 * (1.0 + direct.g.norm()));
            }
        }
    }

    #[test]
    fn order_preserved_below_one() {
        let g = grid1(3);
        let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::holder(0.5).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = u.iter().map(|a| a + rng.gen_range(0.0..0.1)).collect();
            let fu = ext.extend(&GridFunction::new(g.clone(), u).unwrap()).unwrap();
            let fv = ext.extend(&GridFunction::new(g.clone(), v).unwrap()).unwrap();
            for _ in 0..100 {
                let x = Point::new1(rng.gen());
                assert!(fu.value(&x) <= fv.value(&x) + 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_sup_error_is_second_order() {
        let u = Polynomial::quadratic(Matrix2::identity(), &Point::new1(0.0));
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in 2..=5 {
            let g = grid1(n);
            let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::c11()).unwrap();
            let f = ext.project(&u).unwrap();
            let e = sample_lattice(g.domain(), g.spacing() / 32.0)
                .iter()
                .map(|x| (f.value(x) - u.value(x)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
            hs.push(g.gauge());
        }
        let fit = crate::stats::loglog_fit(&hs, &errs).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.3, "{}", fit.slope);
    }

    #[test]
    fn locality_is_exact() {
        let g = Grid::cartesian(BoxDomain::interval(0.0, 4.0).unwrap(), 5).unwrap().shared();
        let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::c11()).unwrap();
        let x0 = Point::new1(1.0);
        let h = g.gauge();
        let u = GridFunction::from_fn(g.clone(), |p| if p.dist(&x0) > 400.0 * h + g.spacing() { 1.0 } else { 0.0 });
        let v = locality_check(&ext, &u, &x0).unwrap();
        assert!(v.passed && v.samples > 100);
        let bad = GridFunction::constant(g.clone(), 1.0);
        assert!(matches!(locality_check(&ext, &bad, &x0), Err(Error::Precondition(_))));
    }

    #[test]
    fn corrector_trivial_cases() {
        let g = grid1(3);
        let x0 = Point::new1(0.5);
        let w = Polynomial::squared_distance(&x0);
        let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::holder(0.5).unwrap()).unwrap();
        let r = corrector(&ext, &w, &x0).unwrap();
        assert_eq!(r.corrector.jet(&Point::new1(0.3)).v, 0.0);
        assert_eq!(r.norm_estimate.total, 0.0);
        let zero = Polynomial::affine(0.0, &[0.0]);
        let ext = ext.with_class(HolderClass::c1alpha(0.5).unwrap()).unwrap();
        let r = corrector(&ext, &zero, &x0).unwrap();
        assert_eq!(r.norm_estimate.total, 0.0);
        let r = corrector(&ext, &w, &x0).unwrap();
        assert!(r.min_after >= -1e-12);
        assert_eq!(r.corrector.jet(&x0).v, 0.0);
    }
}
