//! Operators on grid functions: linear operators in Courrège form, structured
//! min-max operators, semilinear and black-box maps; GCP testing, the example zoo,
//! extremal operators, and continuum operators with their grid projections.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{Field, HolderClass};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::point::{BoxDomain, Point};
use crate::quadrature::{adaptive_pieces, gk15_nodes};
use crate::whitney::{ExtendedFunction, WhitneyExtension, INFLATION};

/// Sparse row: (column, weight), sorted by column.
pub type Row = Vec<(usize, f64)>;

/// L(u,x) = c(x)·u(x) + Σ_{y≠x} (u(y) − u(x))·K(x,y).
#[derive(Debug, Clone)]
pub struct LinearGridOperator {
    grid: Arc<Grid>,
    pub c: Vec<f64>,
    /// K(x,·) per row, sorted by column, diagonal excluded.
    pub kernel: Vec<Row>,
}

fn merge_row(mut r: Row) -> Row {
    r.sort_by_key(|e| e.0);
    let mut out: Row = Vec::with_capacity(r.len());
    for (j, w) in r {
        match out.last_mut() {
            Some(l) if l.0 == j => l.1 += w,
            _ => out.push((j, w)),
        }
    }
    out
}

impl LinearGridOperator {
    pub fn new(grid: Arc<Grid>, c: Vec<f64>, kernel: Vec<Row>) -> Result<Self> {
        let n = grid.len();
        if c.len() != n || kernel.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: c.len().min(kernel.len()) });
        }
        let mut kernel: Vec<Row> = kernel.into_iter().map(merge_row).collect();
        for (x, row) in kernel.iter_mut().enumerate() {
            if row.iter().any(|&(y, _)| y >= n) {
                return Err(Error::InvalidParams(format!("kernel column out of range in row {x}")));
            }
            row.retain(|&(y, w)| y != x && w != 0.0);
        }
        Ok(LinearGridOperator { grid, c, kernel })
    }

    /// From matrix rows M with (Lu)(x) = Σ_y M(x,y) u(y): K = off-diagonal part,
    /// c(x) = Σ_y M(x,y).
    pub fn from_matrix(grid: Arc<Grid>, rows: Vec<Row>) -> Result<Self> {
        let c = rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        LinearGridOperator::new(grid, c, rows)
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        LinearGridOperator { grid, c: vec![0.0; n], kernel: vec![Vec::new(); n] }
    }

    pub fn identity(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        LinearGridOperator { grid, c: vec![1.0; n], kernel: vec![Vec::new(); n] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn apply_at(&self, u: &[f64], x: usize) -> f64 {
        let ux = u[x];
        self.c[x] * ux + self.kernel[x].iter().map(|&(y, k)| (u[y] - ux) * k).sum::<f64>()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|x| self.apply_at(u, x)).collect()
    }

    /// Row x of the matrix form, diagonal included.
    pub fn matrix_row(&self, x: usize) -> Row {
        let s: f64 = self.kernel[x].iter().map(|e| e.1).sum();
        let mut r = self.kernel[x].clone();
        r.push((x, self.c[x] - s));
        merge_row(r)
    }

    /// Smallest kernel weight with its (x, y), if any entry exists.
    pub fn min_kernel(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (x, row) in self.kernel.iter().enumerate() {
            for &(y, w) in row {
                if best.is_none_or(|b| w < b.0) {
                    best = Some((w, x, y));
                }
            }
        }
        best
    }

    /// Operator norm on (grid functions, sup norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.len()).map(|x| self.matrix_row(x).iter().map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// α·self + other.
    pub fn axpy(&self, alpha: f64, other: &LinearGridOperator) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        let c = self.c.iter().zip(&other.c).map(|(a, b)| alpha * a + b).collect();
        let kernel = self
            .kernel
            .iter()
            .zip(&other.kernel)
            .map(|(a, b)| a.iter().map(|&(j, w)| (j, alpha * w)).chain(b.iter().cloned()).collect())
            .collect();
        LinearGridOperator::new(self.grid.clone(), c, kernel)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        LinearGridOperator {
            grid: self.grid.clone(),
            c: self.c.iter().map(|v| alpha * v).collect(),
            kernel: self.kernel.iter().map(|r| r.iter().map(|&(j, w)| (j, alpha * w)).collect()).collect(),
        }
    }

    /// The operator whose row x is row x of `rows[x]`.
    pub fn stitch(rows: &[&LinearGridOperator]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyFamily)?;
        let n = first.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
        }
        Ok(LinearGridOperator {
            grid: first.grid.clone(),
            c: (0..n).map(|x| rows[x].c[x]).collect(),
            kernel: (0..n).map(|x| rows[x].kernel[x].clone()).collect(),
        })
    }

    pub fn dump(&self) -> OperatorDump {
        let mut k = Vec::new();
        for (x, row) in self.kernel.iter().enumerate() {
            for &(y, w) in row {
                k.push((x, y, w));
            }
        }
        OperatorDump { kind: "linear".into(), c: self.c.clone(), k }
    }

    /// Inverse of [`LinearGridOperator::dump`] on the given grid.
    pub fn from_dump(grid: Arc<Grid>, d: &OperatorDump) -> Result<Self> {
        if d.kind != "linear" {
            return Err(Error::InvalidParams(format!("operator file of kind {} is not linear", d.kind)));
        }
        let mut kernel = vec![Row::new(); grid.len()];
        for &(x, y, w) in &d.k {
            kernel.get_mut(x).ok_or_else(|| Error::InvalidParams(format!("kernel row {x} out of range")))?.push((y, w));
        }
        LinearGridOperator::new(grid, d.c.clone(), kernel)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorDump {
    pub kind: String,
    pub c: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<(usize, usize, f64)>,
}

/// One inner branch f^{ab} + L^{ab}.
#[derive(Debug, Clone)]
pub struct Branch {
    pub f: Vec<f64>,
    pub op: LinearGridOperator,
}

/// I(u,x) = min_a max_b { f^{ab}(x) + L^{ab}(u,x) }.
#[derive(Debug, Clone)]
pub struct StructuredMinMax {
    grid: Arc<Grid>,
    pub family: Vec<Vec<Branch>>,
}

impl StructuredMinMax {
    pub fn new(grid: Arc<Grid>, family: Vec<Vec<Branch>>) -> Result<Self> {
        if family.is_empty() || family.iter().any(|a| a.is_empty()) {
            return Err(Error::EmptyFamily);
        }
        for b in family.iter().flatten() {
            if b.f.len() != grid.len() || b.op.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), got: b.f.len().min(b.op.len()) });
            }
        }
        Ok(StructuredMinMax { grid, family })
    }

    /// max of linear operators with zero offsets.
    pub fn max_of(ops: Vec<LinearGridOperator>) -> Result<Self> {
        let grid = ops.first().ok_or(Error::EmptyFamily)?.grid.clone();
        let n = grid.len();
        let inner = ops.into_iter().map(|op| Branch { f: vec![0.0; n], op }).collect();
        StructuredMinMax::new(grid, vec![inner])
    }

    /// min of linear operators with zero offsets.
    pub fn min_of(ops: Vec<LinearGridOperator>) -> Result<Self> {
        let grid = ops.first().ok_or(Error::EmptyFamily)?.grid.clone();
        let n = grid.len();
        let outer = ops.into_iter().map(|op| vec![Branch { f: vec![0.0; n], op }]).collect();
        StructuredMinMax::new(grid, outer)
    }

    fn inner_max(&self, a: usize, u: &[f64], x: usize) -> f64 {
        self.family[a].iter().map(|b| b.f[x] + b.op.apply_at(u, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn apply_at(&self, u: &[f64], x: usize) -> f64 {
        (0..self.family.len()).map(|a| self.inner_max(a, u, x)).fold(f64::INFINITY, f64::min)
    }

    /// Active selections (a, b) at row x, ties within `tol` included.
    pub fn active(&self, u: &[f64], x: usize, tol: f64) -> Vec<(usize, usize)> {
        let outer: Vec<f64> = (0..self.family.len()).map(|a| self.inner_max(a, u, x)).collect();
        let m = outer.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut out = Vec::new();
        for (a, &va) in outer.iter().enumerate() {
            if va > m + tol {
                continue;
            }
            for (b, br) in self.family[a].iter().enumerate() {
                if br.f[x] + br.op.apply_at(u, x) >= va - tol {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.family.iter().flatten()
    }

    pub fn linear_family(&self) -> Vec<LinearGridOperator> {
        self.branches().map(|b| b.op.clone()).collect()
    }
}

/// I(u) = L u + σ·tanh(J u), applied row-wise.
#[derive(Debug, Clone)]
pub struct Semilinear {
    pub linear: LinearGridOperator,
    pub sigma: f64,
    pub inner: LinearGridOperator,
}

impl Semilinear {
    pub fn apply_at(&self, u: &[f64], x: usize) -> f64 {
        self.linear.apply_at(u, x) + self.sigma * self.inner.apply_at(u, x).tanh()
    }

    /// The derivative at u: L + diag(σ·sech²(J u))·J.
    pub fn jacobian(&self, u: &[f64]) -> Result<LinearGridOperator> {
        let n = self.linear.len();
        let rows: Vec<Row> = (0..n)
            .map(|x| {
                let t = self.inner.apply_at(u, x).tanh();
                let s = self.sigma * (1.0 - t * t);
                let mut r = self.linear.matrix_row(x);
                r.extend(self.inner.matrix_row(x).into_iter().map(|(j, w)| (j, s * w)));
                r
            })
            .collect();
        LinearGridOperator::from_matrix(self.linear.grid.clone(), rows)
    }
}

pub type GridMapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An operator known only through its action.
#[derive(Clone)]
pub struct BlackBox {
    grid: Arc<Grid>,
    pub name: String,
    pub map: GridMapFn,
    /// Declared or sampled Lipschitz constant for the sup norm.
    pub lipschitz: f64,
}

impl BlackBox {
    pub fn new(grid: Arc<Grid>, name: &str, map: GridMapFn, lipschitz: f64) -> Self {
        BlackBox { grid, name: name.into(), map, lipschitz }
    }
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlackBox({}, lip = {})", self.name, self.lipschitz)
    }
}

#[derive(Debug, Clone)]
pub enum GridOperator {
    Linear(LinearGridOperator),
    MinMax(StructuredMinMax),
    Semilinear(Semilinear),
    BlackBox(BlackBox),
}

impl GridOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        match self {
            GridOperator::Linear(l) => &l.grid,
            GridOperator::MinMax(m) => &m.grid,
            GridOperator::Semilinear(s) => &s.linear.grid,
            GridOperator::BlackBox(b) => &b.grid,
        }
    }

    pub fn len(&self) -> usize {
        self.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GridOperator::Linear(_) => "linear",
            GridOperator::MinMax(_) => "structured_minmax",
            GridOperator::Semilinear(_) => "semilinear",
            GridOperator::BlackBox(_) => "blackbox",
        }
    }

    pub fn apply_at(&self, u: &[f64], x: usize) -> f64 {
        match self {
            GridOperator::Linear(l) => l.apply_at(u, x),
            GridOperator::MinMax(m) => m.apply_at(u, x),
            GridOperator::Semilinear(s) => s.apply_at(u, x),
            GridOperator::BlackBox(b) => (b.map)(u)[x],
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        match self {
            GridOperator::BlackBox(b) => (b.map)(u),
            _ => (0..self.len()).map(|x| self.apply_at(u, x)).collect(),
        }
    }

    pub fn apply_fn(&self, u: &GridFunction) -> GridFunction {
        GridFunction { grid: self.grid().clone(), values: self.apply(&u.values) }
    }

    /// Lipschitz constant for the sup norm: exact for linear operators, the
    /// largest branch norm for min-max, declared for black boxes.
    pub fn lipschitz_estimate(&self) -> f64 {
        match self {
            GridOperator::Linear(l) => l.norm_inf(),
            GridOperator::MinMax(m) => m.branches().map(|b| b.op.norm_inf()).fold(0.0, f64::max),
            GridOperator::Semilinear(s) => s.linear.norm_inf() + s.sigma.abs() * s.inner.norm_inf(),
            GridOperator::BlackBox(b) => b.lipschitz,
        }
    }
}

// ---------------------------------------------------------------------------
// Courrège decomposition

/// Largest relative defect of I(αu + v) = αI(u) + I(v) over seeded random triples.
pub fn linearity_defect(op: &GridOperator, trials: usize, seed: u64) -> f64 {
    let n = op.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let zero = op.apply(&vec![0.0; n]);
    for _ in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: f64 = rng.gen_range(-2.0..2.0);
        let w: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + q).collect();
        let (iu, iv, iw) = (op.apply(&u), op.apply(&v), op.apply(&w));
        for x in 0..n {
            let lhs = iw[x];
            let rhs = a * iu[x] + iv[x];
            let scale = 1.0 + iu[x].abs() + iv[x].abs() + iw[x].abs();
            worst = worst.max((lhs - rhs).abs() / scale).max(zero[x].abs() / scale);
        }
    }
    worst
}

/// K(x,y) = (L e_y)(x) for y ≠ x and c(x) = (L 1)(x), read off the basis.
pub fn courrege_decompose(op: &GridOperator) -> Result<LinearGridOperator> {
    if let GridOperator::Linear(l) = op {
        return Ok(l.clone());
    }
    let defect = linearity_defect(op, 3, 0x5eed);
    if defect > 1e-10 {
        return Err(Error::NotLinear { defect });
    }
    let n = op.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let mut e = vec![0.0; n];
            e[y] = 1.0;
            op.apply(&e)
        })
        .collect();
    let rows: Vec<Row> =
        (0..n).map(|x| (0..n).filter_map(|y| (cols[y][x] != 0.0).then_some((y, cols[y][x]))).collect()).collect();
    LinearGridOperator::from_matrix(op.grid().clone(), rows)
}

/// Matrix rows of c(x)u(x) + Σ(u(y) − u(x))K(x,y).
pub fn assemble(l: &LinearGridOperator) -> Vec<Row> {
    (0..l.len()).map(|x| l.matrix_row(x)).collect()
}

// ---------------------------------------------------------------------------
// GCP

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcpWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub x: usize,
    /// I(u,x) − I(v,x) > 0 although u ≤ v and u(x) = v(x).
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcpVerdict {
    pub passed: bool,
    /// Decided from the kernel; otherwise "no violation found" over `trials`.
    pub exact: bool,
    pub trials: usize,
    pub min_kernel: Option<f64>,
    pub witness: Option<GcpWitness>,
}

pub const GCP_TOLERANCE: f64 = 1e-10;

fn linear_gcp(l: &LinearGridOperator) -> GcpVerdict {
    let min = l.min_kernel();
    let witness = match min {
        Some((w, x, y)) if w < 0.0 => {
            let n = l.len();
            let mut u = vec![0.0; n];
            u[y] = -1.0;
            Some(GcpWitness { gap: l.apply_at(&u, x), u, v: vec![0.0; n], x })
        }
        _ => None,
    };
    GcpVerdict { passed: witness.is_none(), exact: true, trials: 0, min_kernel: min.map(|m| m.0), witness }
}

/// Linear operators are decided exactly by the sign of K. Otherwise random
/// touching pairs u = v − b with b ≥ 0, b(x) = 0 are tried.
pub fn gcp_check(op: &GridOperator, budget: usize, seed: u64) -> GcpVerdict {
    if let GridOperator::Linear(l) = op {
        return linear_gcp(l);
    }
    let n = op.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..budget {
        let x = rng.gen_range(0..n);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; n];
        if t % 2 == 0 {
            for (i, bi) in b.iter_mut().enumerate() {
                if i != x {
                    *bi = rng.gen_range(0.0..1.0);
                }
            }
        } else if n > 1 {
            let mut y = rng.gen_range(0..n - 1);
            if y >= x {
                y += 1;
            }
            b[y] = rng.gen_range(0.0..1.0);
        }
        let u: Vec<f64> = v.iter().zip(&b).map(|(p, q)| p - q).collect();
        let gap = op.apply_at(&u, x) - op.apply_at(&v, x);
        if gap > GCP_TOLERANCE {
            return GcpVerdict {
                passed: false,
                exact: false,
                trials: t + 1,
                min_kernel: None,
                witness: Some(GcpWitness { u, v, x, gap }),
            };
        }
    }
    GcpVerdict { passed: true, exact: false, trials: budget, min_kernel: None, witness: None }
}

// ---------------------------------------------------------------------------
// zoo

fn neighbor(grid: &Grid, x: usize, axis: usize, sign: f64) -> Option<usize> {
    let mut v = nalgebra::Vector2::zeros();
    v[axis] = sign * grid.spacing();
    grid.locate_exact(&grid.point(x).add(&v)).filter(|&j| j != x)
}

/// (u(x−s) − 2u(x) + u(x+s))/s² per axis, scaled; missing neighbours dropped.
pub fn discrete_laplacian(grid: Arc<Grid>, scale: f64) -> Result<LinearGridOperator> {
    let s = grid.spacing();
    let w = scale / (s * s);
    let kernel = (0..grid.len())
        .map(|x| {
            let mut r = Row::new();
            for k in 0..grid.dim() {
                for sg in [-1.0, 1.0] {
                    if let Some(j) = neighbor(&grid, x, k, sg) {
                        r.push((j, w));
                    }
                }
            }
            r
        })
        .collect();
    LinearGridOperator::new(grid.clone(), vec![0.0; grid.len()], kernel)
}

/// K(x,y) = scale·s^d·|x−y|^{−d−σ} between distinct grid points.
pub fn fractional(grid: Arc<Grid>, order: f64, scale: f64) -> Result<LinearGridOperator> {
    if !(order > 0.0 && order < 2.0) {
        return Err(Error::InvalidParams(format!("fractional order must lie in (0,2), got {order}")));
    }
    let d = grid.dim() as f64;
    let cell = grid.spacing().powf(d);
    let pts = grid.points();
    let kernel = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            (0..pts.len())
                .filter(|&y| y != x)
                .map(|y| (y, scale * cell * pts[x].dist(&pts[y]).powf(-d - order)))
                .collect()
        })
        .collect();
    LinearGridOperator::new(grid.clone(), vec![0.0; grid.len()], kernel)
}

/// Upwind first difference for ⟨b, ∇u⟩.
pub fn drift(grid: Arc<Grid>, b: &[f64]) -> Result<LinearGridOperator> {
    if b.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: b.len() });
    }
    let s = grid.spacing();
    let kernel = (0..grid.len())
        .map(|x| {
            let mut r = Row::new();
            for (k, &bk) in b.iter().enumerate() {
                if bk != 0.0 {
                    if let Some(j) = neighbor(&grid, x, k, bk.signum()) {
                        r.push((j, bk.abs() / s));
                    }
                }
            }
            r
        })
        .collect();
    LinearGridOperator::new(grid.clone(), vec![0.0; grid.len()], kernel)
}

/// Parameters of the Isaacs example: L^{ab} = θ_a·Δ + κ_b·F + drift(d_b), offsets f^a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsaacsParams {
    pub theta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub drift: Vec<f64>,
    pub offsets: Vec<f64>,
    pub fractional_order: f64,
}

impl Default for IsaacsParams {
    fn default() -> Self {
        IsaacsParams {
            theta: vec![1.0, 0.5],
            kappa: vec![0.5, 2.0],
            drift: vec![1.0, -1.0],
            offsets: vec![0.0, 0.25],
            fractional_order: 0.5,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// Named example operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ZooSpec {
    DiscreteLaplacian {
        #[serde(default = "one")]
        scale: f64,
    },
    Fractional {
        #[serde(default = "half")]
        order: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Drift {
        b: Vec<f64>,
    },
    Isaacs {
        #[serde(default)]
        params: IsaacsParams,
    },
    PucciNonlocal {
        #[serde(default = "half")]
        order: f64,
        lambda: f64,
        big_lambda: f64,
    },
}

impl ZooSpec {
    /// The spec with default parameters for a bare name.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        Ok(match name {
            "discrete_laplacian" => ZooSpec::DiscreteLaplacian { scale: 1.0 },
            "fractional" => ZooSpec::Fractional { order: 0.5, scale: 1.0 },
            "drift" => ZooSpec::Drift { b: vec![1.0; dim] },
            "isaacs" => ZooSpec::Isaacs { params: IsaacsParams::default() },
            "pucci_nonlocal" => ZooSpec::PucciNonlocal { order: 0.5, lambda: 0.5, big_lambda: 2.0 },
            _ => return Err(Error::InvalidParams(format!("unknown zoo operator {name:?}"))),
        })
    }
}

pub fn zoo(spec: &ZooSpec, grid: Arc<Grid>) -> Result<GridOperator> {
    Ok(match spec {
        ZooSpec::DiscreteLaplacian { scale } => GridOperator::Linear(discrete_laplacian(grid, *scale)?),
        ZooSpec::Fractional { order, scale } => GridOperator::Linear(fractional(grid, *order, *scale)?),
        ZooSpec::Drift { b } => GridOperator::Linear(drift(grid, b)?),
        ZooSpec::Isaacs { params: p } => {
            if p.theta.len() != p.offsets.len() || p.kappa.len() != p.drift.len() {
                return Err(Error::InvalidParams("isaacs: theta/offsets and kappa/drift lengths differ".into()));
            }
            let lap = discrete_laplacian(grid.clone(), 1.0)?;
            let frac = fractional(grid.clone(), p.fractional_order, 1.0)?;
            let n = grid.len();
            let mut family = Vec::new();
            for (a, &th) in p.theta.iter().enumerate() {
                let mut inner = Vec::new();
                for (b, &ka) in p.kappa.iter().enumerate() {
                    let dr = drift(grid.clone(), &vec![p.drift[b]; grid.dim()])?;
                    let op = lap.scale(th).axpy(1.0, &frac.scale(ka))?.axpy(1.0, &dr)?;
                    inner.push(Branch { f: vec![p.offsets[a]; n], op });
                }
                family.push(inner);
            }
            GridOperator::MinMax(StructuredMinMax::new(grid, family)?)
        }
        ZooSpec::PucciNonlocal { order, lambda, big_lambda } => {
            if !(*lambda > 0.0 && lambda <= big_lambda) {
                return Err(Error::InvalidParams(format!("pucci bounds need 0 < λ ≤ Λ, got {lambda}, {big_lambda}")));
            }
            let f = fractional(grid, *order, 1.0)?;
            GridOperator::MinMax(StructuredMinMax::max_of(vec![f.scale(*lambda), f.scale(*big_lambda)])?)
        }
    })
}

// ---------------------------------------------------------------------------
// extremal operators

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// M⁺ = max over the family of L(u,x); M⁻ = min.
pub fn extremal(family: &[LinearGridOperator], sign: Sign, u: &[f64], x: usize) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let vals = family.iter().map(|l| l.apply_at(u, x));
    Ok(match sign {
        Sign::Plus => vals.fold(f64::NEG_INFINITY, f64::max),
        Sign::Minus => vals.fold(f64::INFINITY, f64::min),
    })
}

/// Discrete C^β norm of a grid function: sup plus the largest pairwise quotient
/// |φ(x) − φ(y)|/|x − y|^{min(β,1)}.
pub fn grid_holder_norm(phi: &GridFunction, cls: &HolderClass) -> f64 {
    let a = cls.beta.min(1.0);
    let pts = phi.grid.points();
    let q = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..pts.len())
                .map(|j| (phi.values[i] - phi.values[j]).abs() / pts[i].dist(&pts[j]).powf(a))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    phi.sup_norm() + q
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

/// |I(φu,x) − I(φv,x)| ≤ Lip(I)·‖φ‖_{C^β}·‖u − v‖_{∞, spt φ} + 1e-8.
pub fn gcp_localization_check(
    op: &GridOperator,
    phi: &GridFunction,
    x: usize,
    u: &[f64],
    v: &[f64],
    cls: &HolderClass,
) -> Result<LocalizationVerdict> {
    if phi.values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Precondition("cutoff must take values in [0,1]".into()));
    }
    if phi.values[x] != 0.0 {
        return Err(Error::Precondition("cutoff must vanish at x".into()));
    }
    let pu: Vec<f64> = phi.values.iter().zip(u).map(|(p, a)| p * a).collect();
    let pv: Vec<f64> = phi.values.iter().zip(v).map(|(p, a)| p * a).collect();
    let lhs = (op.apply_at(&pu, x) - op.apply_at(&pv, x)).abs();
    let diff = phi
        .values
        .iter()
        .zip(u.iter().zip(v))
        .filter(|(p, _)| **p != 0.0)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    let rhs = op.lipschitz_estimate() * grid_holder_norm(phi, cls) * diff + 1e-8;
    Ok(LocalizationVerdict { lhs, rhs, passed: lhs <= rhs })
}

// ---------------------------------------------------------------------------
// continuum operators (one dimension)

/// Smooth kernel on the annulus r_in ≤ |z| ≤ r_out:
/// w_±·(4t(1−t))³ with t = (|z| − r_in)/(r_out − r_in), w_+ for z > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnularKernel {
    pub r_in: f64,
    pub r_out: f64,
    pub plus: f64,
    pub minus: f64,
}

impl AnnularKernel {
    pub fn value(&self, z: f64) -> f64 {
        let t = (z.abs() - self.r_in) / (self.r_out - self.r_in);
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let b = 4.0 * t * (1.0 - t);
        let w = if z > 0.0 { self.plus } else { self.minus };
        w * b * b * b
    }

    /// Integration pieces for the offsets z with x + z in [lo, hi].
    fn pieces(&self, x: f64, lo: f64, hi: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for [a, b] in [[-self.r_out, -self.r_in], [self.r_in, self.r_out]] {
            let a = a.max(lo - x);
            let b = b.min(hi - x);
            if b > a {
                out.push([a, b]);
            }
        }
        out
    }
}

/// σ·tanh(m·u(x) + ∫ (u(x+z) − u(x)) k(z) dz)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemilinearTerm {
    pub sigma: f64,
    pub m: f64,
    pub kernel: AnnularKernel,
}

/// I(u,x) = a u''(x) + b u'(x) + c u(x) + ∫ (u(x+z) − u(x)) k(z) dz [+ semilinear term],
/// with the integral truncated at the box. Compact kernels give locality modulus ω ≡ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumOperator {
    pub domain: BoxDomain,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub kernel: Option<AnnularKernel>,
    pub semilinear: Option<SemilinearTerm>,
    pub tolerance: f64,
}

impl ContinuumOperator {
    /// The operator used by the projection experiments: diffusion, upwind-sensitive
    /// drift, an asymmetric annular kernel and a semilinear term on [0,1].
    pub fn example() -> Self {
        ContinuumOperator {
            domain: BoxDomain::unit(1),
            a: 1.0,
            b: -1.0,
            c: 0.0,
            kernel: Some(AnnularKernel { r_in: 0.3, r_out: 0.5, plus: 1.5, minus: 0.5 }),
            semilinear: Some(SemilinearTerm {
                sigma: 0.5,
                m: 1.0,
                kernel: AnnularKernel { r_in: 0.05, r_out: 0.25, plus: 2.0, minus: 1.0 },
            }),
            tolerance: 1e-9,
        }
    }

    /// A first-order operator with weak nonlocal terms on [0,1]. Without diffusion
    /// the one-sided drift discretization is what the approximate GCP has to absorb.
    pub fn transport() -> Self {
        ContinuumOperator {
            domain: BoxDomain::unit(1),
            a: 0.0,
            b: -1.0,
            c: 0.0,
            kernel: Some(AnnularKernel { r_in: 0.3, r_out: 0.5, plus: 0.02, minus: 0.01 }),
            semilinear: Some(SemilinearTerm {
                sigma: 0.05,
                m: 1.0,
                kernel: AnnularKernel { r_in: 0.05, r_out: 0.25, plus: 0.2, minus: 0.1 },
            }),
            tolerance: 1e-9,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.semilinear.is_none()
    }

    /// Locality modulus ω(r); zero for compact kernels.
    pub fn locality_modulus(&self, _r: f64) -> f64 {
        0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.domain.dim()));
        }
        if self.a < 0.0 || self.semilinear.is_some_and(|s| s.sigma < 0.0) {
            return Err(Error::InvalidParams("diffusion and semilinear weight must be nonnegative".into()));
        }
        for k in self.kernel.iter().chain(self.semilinear.as_ref().map(|s| &s.kernel)) {
            if !(0.0 < k.r_in && k.r_in < k.r_out && k.plus >= 0.0 && k.minus >= 0.0) {
                return Err(Error::InvalidParams(format!("bad annular kernel {k:?}")));
            }
        }
        Ok(())
    }

    fn integral(&self, k: &AnnularKernel, u: &dyn Field, x: f64, ux: f64) -> Result<f64> {
        let mut total = 0.0;
        for [a, b] in k.pieces(x, self.domain.lo(0), self.domain.hi(0)) {
            let mut f = |z: f64| (u.jet_at(&Point::new1(x + z)).v - ux) * k.value(z);
            total += adaptive_pieces(&mut f, &[a, b], self.tolerance)?.value;
        }
        Ok(total)
    }

    /// I(u, x) with adaptive quadrature at the configured tolerance.
    pub fn evaluate(&self, u: &dyn Field, x: &Point) -> Result<f64> {
        self.validate()?;
        let j = u.jet_at(x);
        let x0 = x.get(0);
        let mut v = self.a * j.h[(0, 0)] + self.b * j.g[0] + self.c * j.v;
        if let Some(k) = &self.kernel {
            v += self.integral(k, u, x0, j.v)?;
        }
        if let Some(s) = &self.semilinear {
            v += s.sigma * (s.m * j.v + self.integral(&s.kernel, u, x0, j.v)?).tanh();
        }
        Ok(v)
    }
}

/// The pair I_n = E⁰ ∘ i_n ∘ T and i_n = T ∘ I ∘ E^β for a continuum operator.
#[derive(Debug, Clone)]
pub struct ProjectedOperator {
    pub ext: WhitneyExtension,
    /// i_n as a grid operator: linear, or semilinear when I is.
    pub grid_op: GridOperator,
    /// Quadrature nodes per row.
    pub nodes_per_row: usize,
}

/// Weights w_i(x) as matrix-row contributions scaled by α, value parts only, minus α at x.
fn integral_row(ext: &WhitneyExtension, k: &AnnularKernel, x: usize, breaks: &[f64]) -> Result<(Row, usize)> {
    let g = ext.grid();
    let x0 = g.point(x).get(0);
    let dom = g.domain();
    let mut row = Row::new();
    let mut count = 0;
    let mut mass = 0.0;
    for [a, b] in k.pieces(x0, dom.lo(0), dom.hi(0)) {
        let (ya, yb) = (x0 + a, x0 + b);
        let i0 = breaks.partition_point(|&t| t <= ya);
        let i1 = breaks.partition_point(|&t| t < yb);
        let mut cuts = vec![ya];
        cuts.extend_from_slice(&breaks[i0..i1]);
        cuts.push(yb);
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            for (y, wq) in gk15_nodes(w[0], w[1]) {
                let kw = wq * k.value(y - x0);
                if kw == 0.0 {
                    continue;
                }
                count += 1;
                mass += kw;
                for (i, jet) in ext.weights(&Point::new1(y))? {
                    if jet.v != 0.0 {
                        row.push((i, kw * jet.v));
                    }
                }
            }
        }
    }
    row.push((x, -mass));
    Ok((merge_row(row), count))
}

/// Cube and inflated-cube edges of a 1D cover, sorted.
fn cover_breaks(ext: &WhitneyExtension) -> Vec<f64> {
    let mut b: Vec<f64> = ext
        .cover()
        .cubes()
        .iter()
        .flat_map(|q| {
            let c = q.center.get(0);
            let r = 0.5 * q.side;
            let rs = INFLATION * r;
            [c - rs, c - r, c + r, c + rs]
        })
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Builds i_n row by row. Local terms use the jets of the extension weights at the
/// grid point; the kernel integrals use composite GK15 between cover breakpoints,
/// where the extension is a single smooth expression.
pub fn project_operator(op: &ContinuumOperator, ext: &WhitneyExtension) -> Result<ProjectedOperator> {
    op.validate()?;
    let g = ext.grid();
    if g.dim() != 1 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    let breaks = cover_breaks(ext);
    let rows: Vec<(Row, Row, usize)> = (0..g.len())
        .into_par_iter()
        .map(|x| {
            let mut r1 = Row::new();
            let mut r2 = Row::new();
            let mut nodes = 0;
            for (i, j) in ext.weights(&g.point(x))? {
                r1.push((i, op.a * j.h[(0, 0)] + op.b * j.g[0] + op.c * j.v));
                if let Some(s) = &op.semilinear {
                    r2.push((i, s.m * j.v));
                }
            }
            if let Some(k) = &op.kernel {
                let (r, c) = integral_row(ext, k, x, &breaks)?;
                r1.extend(r);
                nodes += c;
            }
            if let Some(s) = &op.semilinear {
                let (r, c) = integral_row(ext, &s.kernel, x, &breaks)?;
                r2.extend(r);
                nodes += c;
            }
            Ok((merge_row(r1), merge_row(r2), nodes))
        })
        .collect::<Result<_>>()?;
    let nodes_per_row = rows.iter().map(|r| r.2).max().unwrap_or(0);
    let (m1, m2): (Vec<Row>, Vec<Row>) = rows.into_iter().map(|(a, b, _)| (a, b)).unzip();
    let linear = LinearGridOperator::from_matrix(g.clone(), m1)?;
    let grid_op = match &op.semilinear {
        None => GridOperator::Linear(linear),
        Some(s) => GridOperator::Semilinear(Semilinear {
            linear,
            sigma: s.sigma,
            inner: LinearGridOperator::from_matrix(g.clone(), m2)?,
        }),
    };
    Ok(ProjectedOperator { ext: ext.clone(), grid_op, nodes_per_row })
}

impl ProjectedOperator {
    /// i_n(u) on the grid.
    pub fn grid_apply(&self, u: &GridFunction) -> GridFunction {
        self.grid_op.apply_fn(u)
    }

    /// I_n u = E⁰(i_n(T u)) as a function on the box.
    pub fn continuum_apply(&self, u: &dyn crate::calculus::SmoothFunction) -> Result<ExtendedFunction> {
        let tu = crate::whitney::restrict(self.ext.grid().clone(), u);
        let e0 = self.ext.with_class(HolderClass::holder(0.5)?)?;
        e0.extend(&self.grid_apply(&tu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{GaussianBump, Polynomial, SmoothFunction};

    fn grid1(n: u32) -> Arc<Grid> {
        Grid::cartesian(BoxDomain::unit(1), n).unwrap().shared()
    }

    #[test]
    fn laplacian_decomposition() {
        let g = grid1(2);
        let s = g.spacing();
        let lap = discrete_laplacian(g.clone(), 1.0).unwrap();
        let op = GridOperator::BlackBox(BlackBox::new(
            g.clone(),
            "lap",
            Arc::new(move |u: &[f64]| lap.apply(u)),
            4.0 / (s * s),
        ));
        let l = courrege_decompose(&op).unwrap();
        assert_eq!(l.c[4], 0.0);
        assert_eq!(l.kernel[4], vec![(3, 1.0 / (s * s)), (5, 1.0 / (s * s))]);
        let id = courrege_decompose(&GridOperator::Linear(LinearGridOperator::identity(g.clone()))).unwrap();
        assert!(id.c.iter().all(|&c| c == 1.0) && id.kernel.iter().all(|r| r.is_empty()));
    }

    #[test]
    fn dump_roundtrip() {
        let g = grid1(2);
        let l = fractional(g.clone(), 0.5, 1.0).unwrap().axpy(1.0, &drift(g.clone(), &[0.7]).unwrap()).unwrap();
        let back = LinearGridOperator::from_dump(g.clone(), &l.dump()).unwrap();
        assert_eq!((back.c.clone(), back.kernel.clone()), (l.c.clone(), l.kernel.clone()));
        let mut bad = l.dump();
        bad.k.push((999, 0, 1.0));
        assert!(LinearGridOperator::from_dump(g, &bad).is_err());
    }

    #[test]
    fn nonlinear_maps_are_rejected() {
        let g = grid1(1);
        let op = GridOperator::BlackBox(BlackBox::new(
            g,
            "square",
            Arc::new(|u: &[f64]| u.iter().map(|v| v * v).collect()),
            1.0,
        ));
        assert!(matches!(courrege_decompose(&op), Err(Error::NotLinear { .. })));
    }

    #[test]
    fn gcp_linear_exact() {
        let g = grid1(1);
        let mut l = discrete_laplacian(g.clone(), 1.0).unwrap();
        assert!(gcp_check(&GridOperator::Linear(l.clone()), 0, 0).passed);
        l.kernel[0] = vec![(2, -1.0)];
        let v = gcp_check(&GridOperator::Linear(l.clone()), 0, 0);
        assert!(!v.passed);
        let w = v.witness.unwrap();
        assert_eq!((w.x, w.u[2], w.v[2]), (0, -1.0, 0.0));
        assert!(w.gap > 0.0);
    }

    #[test]
    fn gcp_of_max_and_violation_found() {
        let g = grid1(2);
        let a = discrete_laplacian(g.clone(), 1.0).unwrap();
        let b = fractional(g.clone(), 0.5, 1.0).unwrap();
        let m = GridOperator::MinMax(StructuredMinMax::max_of(vec![a.clone(), b]).unwrap());
        let v = gcp_check(&m, 200, 7);
        assert!(v.passed && v.trials == 200);
        let bad = GridOperator::MinMax(StructuredMinMax::max_of(vec![a.scale(-1.0)]).unwrap());
        assert!(!gcp_check(&bad, 200, 7).passed);
    }

    #[test]
    fn zoo_properties() {
        let g = grid1(3);
        let GridOperator::Linear(f) = zoo(&ZooSpec::by_name("fractional", 1).unwrap(), g.clone()).unwrap() else {
            panic!()
        };
        assert!(f.kernel.iter().all(|r| r.len() == g.len() - 1 && r.iter().all(|e| e.1 > 0.0)));
        let lap = zoo(&ZooSpec::by_name("discrete_laplacian", 1).unwrap(), g.clone()).unwrap();
        assert!(gcp_check(&lap, 0, 0).passed);
        let GridOperator::Linear(l1) = lap else { panic!() };
        let l2 = fractional(g.clone(), 0.5, 1.0).unwrap();
        let m = StructuredMinMax::max_of(vec![l1.clone(), l2.clone()]).unwrap();
        let u: Vec<f64> = g.points().iter().map(|p| (3.0 * p.get(0)).sin()).collect();
        for x in 0..g.len() {
            assert_eq!(m.apply_at(&u, x), l1.apply_at(&u, x).max(l2.apply_at(&u, x)));
        }
        assert!(zoo(&ZooSpec::Fractional { order: 2.5, scale: 1.0 }, g.clone()).is_err());
        assert!(ZooSpec::by_name("nope", 1).is_err());
        let spec: ZooSpec = serde_json::from_str(r#"{"name":"isaacs"}"#).unwrap();
        assert!(matches!(zoo(&spec, g).unwrap(), GridOperator::MinMax(_)));
    }

    #[test]
    fn extremal_basics() {
        let g = grid1(2);
        let fam = vec![discrete_laplacian(g.clone(), 1.0).unwrap(), fractional(g.clone(), 0.5, 1.0).unwrap()];
        let u: Vec<f64> = (0..g.len()).map(|i| (i as f64).sin()).collect();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        for x in 0..g.len() {
            let p = extremal(&fam, Sign::Plus, &neg, x).unwrap();
            let m = extremal(&fam, Sign::Minus, &u, x).unwrap();
            assert!((p + m).abs() < 1e-9);
            let one = extremal(&fam[..1], Sign::Plus, &u, x).unwrap();
            assert_eq!(one, extremal(&fam[..1], Sign::Minus, &u, x).unwrap());
        }
        assert!(matches!(extremal(&[], Sign::Plus, &u, 0), Err(Error::EmptyFamily)));
    }

    #[test]
    fn localization_bound() {
        let g = grid1(3);
        let op = GridOperator::Linear(discrete_laplacian(g.clone(), 1.0).unwrap());
        let x = 4;
        let xp = g.point(x);
        let phi = GridFunction::from_fn(g.clone(), |p| (p.dist(&xp) * 4.0).min(1.0));
        let cls = HolderClass::holder(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(gcp_localization_check(&op, &phi, x, &u, &v, &cls).unwrap().passed);
        }
        let zero = GridFunction::constant(g.clone(), 0.0);
        let u = vec![1.0; g.len()];
        let r = gcp_localization_check(&op, &zero, x, &u, &u, &cls).unwrap();
        assert_eq!(r.lhs, 0.0);
    }

    #[test]
    fn continuum_evaluation_matches_closed_form() {
        let op = ContinuumOperator {
            domain: BoxDomain::interval(-2.0, 2.0).unwrap(),
            a: 0.0,
            b: 0.0,
            c: 0.0,
            kernel: Some(AnnularKernel { r_in: 0.3, r_out: 0.5, plus: 1.0, minus: 1.0 }),
            semilinear: None,
            tolerance: 1e-11,
        };
        // u = x²: ∫ z² k(z) dz over both sides
        let u = Polynomial::quadratic(nalgebra::Matrix2::identity() * 2.0, &Point::new1(0.0));
        let mut f = |z: f64| z * z * op.kernel.unwrap().value(z);
        let exact = 2.0 * crate::quadrature::adaptive(&mut f, 0.3, 0.5, 1e-14).unwrap().value;
        let v = op.evaluate(&u, &Point::new1(0.1)).unwrap();
        assert!((v - exact).abs() < 1e-9, "{v} {exact}");
    }

    #[test]
    fn projection_is_linear_and_exact_on_constants() {
        let g = grid1(3);
        let mut op = ContinuumOperator::example();
        op.semilinear = None;
        let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::c11()).unwrap();
        let p = project_operator(&op, &ext).unwrap();
        let l = courrege_decompose(&p.grid_op).unwrap();
        assert!(l.min_kernel().is_some());
        let u = GridFunction::constant(g.clone(), 3.0);
        let iu = p.grid_apply(&u);
        let c = Polynomial::affine(3.0, &[0.0]);
        for (i, v) in iu.values.iter().enumerate() {
            assert!((v - op.evaluate(&c, &g.point(i)).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_operator_converges() {
        let op = ContinuumOperator::example();
        let u = GaussianBump::new(Point::new1(0.5), 0.15);
        let mut errs = Vec::new();
        for n in 2..=4 {
            let g = grid1(n);
            let ext = WhitneyExtension::for_grid(g.clone(), HolderClass::c11()).unwrap();
            let p = project_operator(&op, &ext).unwrap();
            let tu = crate::whitney::restrict(g.clone(), &u);
            let iu = p.grid_apply(&tu);
            let e =
                (0..g.len()).map(|i| (iu.values[i] - op.evaluate(&u, &g.point(i)).unwrap()).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
        let _ = u.value(&Point::new1(0.5));
    }
}
