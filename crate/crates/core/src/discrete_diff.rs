//! Discrete gradient and Hessian on grids, built from direction frames.
//!
//! A frame at a grid point x is a basis V_1..V_d with every x + V_k on the grid.
//! The gradient solves <V_k, g> = u(x + V_k) − u(x); the Hessian solves
//! <H V_k, W_kl> = δu_x(V_k, W_kl) with W_kl = V_l(x + V_k) the frame at the target.
//! Both are linear in u, so they are assembled once as sparse stencils.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{HolderClass, SmoothFunction};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::jet::sym_norm;
use crate::point::Point;
use crate::stats::RateTable;

/// Frames whose normalized direction matrix is worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Snap x + 100h·e_k to the grid: long, almost orthogonal directions.
    PaperFaithful,
    /// Immediate lattice neighbours: forward, or backward within two steps of the far edge.
    #[default]
    Stencil,
}

#[derive(Debug, Clone)]
pub struct DirectionFrame {
    pub base: usize,
    pub point: Point,
    pub directions: Vec<Vector2<f64>>,
    /// Grid indices of x + V_k.
    pub targets: Vec<usize>,
    pub mode: FrameMode,
    /// Condition number of the matrix of unit directions.
    pub condition: f64,
}

/// Sparse gradient weights: ∇u(x) ≈ Σ c_i u(y_i).
pub type GradientStencil = Vec<(usize, Vector2<f64>)>;
/// Sparse Hessian weights: ∇²u(x) ≈ Σ M_i u(y_i).
pub type HessianStencil = Vec<(usize, Matrix2<f64>)>;

fn axis(k: usize) -> Vector2<f64> {
    if k == 0 {
        Vector2::new(1.0, 0.0)
    } else {
        Vector2::new(0.0, 1.0)
    }
}

/// Inverse of the leading d×d block; the unused block is the identity for d = 1
/// and is zeroed again in the result.
fn block_inverse(m: &Matrix2<f64>, d: usize) -> Option<Matrix2<f64>> {
    let mut a = *m;
    if d == 1 {
        a[(0, 1)] = 0.0;
        a[(1, 0)] = 0.0;
        a[(1, 1)] = 1.0;
    }
    let mut inv = a.try_inverse()?;
    if d == 1 {
        inv[(1, 1)] = 0.0;
    }
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

fn from_rows(v: &[Vector2<f64>], d: usize) -> Matrix2<f64> {
    let mut m = Matrix2::zeros();
    for k in 0..d {
        m[(k, 0)] = v[k].x;
        m[(k, 1)] = v[k].y;
    }
    m
}

fn from_columns(v: &[Vector2<f64>], d: usize) -> Matrix2<f64> {
    from_rows(v, d).transpose()
}

/// Condition number of the matrix whose columns are the normalized directions.
fn frame_condition(dirs: &[Vector2<f64>], d: usize) -> f64 {
    if dirs.iter().any(|v| v.norm() == 0.0) {
        return f64::INFINITY;
    }
    if d == 1 {
        return 1.0;
    }
    let units: Vec<Vector2<f64>> = dirs.iter().map(|v| v.normalize()).collect();
    let sv = from_columns(&units, d).singular_values();
    let (a, b) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

fn stencil_target(grid: &Grid, base: usize, k: usize) -> Result<usize> {
    let x = grid.point(base);
    let s = grid.spacing();
    let at = |m: f64| grid.locate_exact(&x.add(&(axis(k) * (m * s)))).filter(|&j| j != base);
    // Forward only when two forward steps fit, so that the frame at the target
    // points back inside the grid and every second-difference corner exists.
    if at(2.0).is_some() {
        if let Some(j) = at(1.0) {
            return Ok(j);
        }
    }
    if let Some(j) = at(-1.0).or_else(|| at(1.0)) {
        return Ok(j);
    }
    // scattered grids: the neighbour best aligned with ±e_k within a few gauges
    let mut best: Option<(f64, usize)> = None;
    for j in grid.within(&x, 4.0 * grid.gauge()) {
        if j == base {
            continue;
        }
        let z = grid.point(j).sub(&x);
        let c = z[k] / z.norm();
        for (sign, pref) in [(1.0, 1e-3), (-1.0, 0.0)] {
            let score = sign * c + pref;
            if sign * c >= 0.9 && best.map_or(true, |(b, _)| score > b) {
                best = Some((score, j));
            }
        }
    }
    best.map(|(_, j)| j).ok_or(Error::BoundaryFrame { point: base })
}

fn snapped_target(grid: &Grid, base: usize, k: usize) -> Result<usize> {
    let x = grid.point(base);
    let h = grid.gauge();
    let aim = x.add(&(axis(k) * (100.0 * h)));
    if !grid.domain().contains(&aim, 1e-12 * grid.domain().max_width()) {
        return Err(Error::BoundaryFrame { point: base });
    }
    Ok(grid.nearest(&aim).0)
}

/// The frame at grid point `base`.
pub fn frame_at(grid: &Grid, base: usize, mode: FrameMode) -> Result<DirectionFrame> {
    let x = grid.point(base);
    let d = grid.dim();
    let mut targets = Vec::with_capacity(d);
    for k in 0..d {
        targets.push(match mode {
            FrameMode::Stencil => stencil_target(grid, base, k)?,
            FrameMode::PaperFaithful => snapped_target(grid, base, k)?,
        });
    }
    let directions: Vec<Vector2<f64>> = targets.iter().map(|&t| grid.point(t).sub(&x)).collect();
    let condition = frame_condition(&directions, d);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateFrame { point: base, condition });
    }
    if mode == FrameMode::PaperFaithful {
        let h = grid.gauge();
        let slack = 1e-12 * h;
        let lengths_ok = directions.iter().all(|v| v.norm() >= 98.0 * h - slack && v.norm() <= 102.0 * h + slack);
        let mut orth_ok = true;
        for a in 0..d {
            for b in 0..a {
                let c = directions[a].normalize().dot(&directions[b].normalize());
                orth_ok &= c.abs() <= 0.05;
            }
        }
        if !(lengths_ok && orth_ok) {
            return Err(Error::DegenerateFrame { point: base, condition });
        }
    }
    Ok(DirectionFrame { base, point: x, directions, targets, mode, condition })
}

/// Frame at a point of the grid.
pub fn admissible_directions(grid: &Grid, x: &Point, mode: FrameMode) -> Result<DirectionFrame> {
    let base = grid.locate_exact(x).ok_or_else(|| Error::NotInGrid(x.coords().to_vec()))?;
    frame_at(grid, base, mode)
}

fn merge<T: Copy + std::ops::AddAssign>(mut terms: Vec<(usize, T)>) -> Vec<(usize, T)> {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(terms.len());
    for (i, c) in terms {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += c,
            _ => out.push((i, c)),
        }
    }
    out
}

pub fn gradient_stencil(frame: &DirectionFrame, d: usize) -> Result<GradientStencil> {
    let inv = block_inverse(&from_rows(&frame.directions, d), d)
        .ok_or(Error::DegenerateFrame { point: frame.base, condition: frame.condition })?;
    let mut terms = Vec::with_capacity(d + 1);
    let mut sum = Vector2::zeros();
    for k in 0..d {
        let c: Vector2<f64> = inv.column(k).into_owned();
        terms.push((frame.targets[k], c));
        sum += c;
    }
    terms.push((frame.base, -sum));
    Ok(merge(terms))
}

/// Unsymmetrized Hessian weights at `frame.base`, given the frames at its targets.
pub fn hessian_stencil_raw(
    grid: &Grid,
    frame: &DirectionFrame,
    frames_at_targets: &[DirectionFrame],
) -> Result<HessianStencil> {
    let d = grid.dim();
    if frames_at_targets.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: frames_at_targets.len() });
    }
    let vinv = block_inverse(&from_columns(&frame.directions, d), d)
        .ok_or(Error::DegenerateFrame { point: frame.base, condition: frame.condition })?;
    let x = frame.point;
    let mut terms = Vec::with_capacity(4 * d * d);
    for k in 0..d {
        let fk = &frames_at_targets[k];
        if fk.base != frame.targets[k] {
            return Err(Error::Precondition(format!(
                "frame {k} is based at point {} instead of target {}",
                fk.base, frame.targets[k]
            )));
        }
        let binv = block_inverse(&from_rows(&fk.directions, d), d)
            .ok_or(Error::DegenerateFrame { point: fk.base, condition: fk.condition })?;
        let row = vinv.row(k).into_owned();
        for l in 0..d {
            let w = fk.directions[l];
            let xw = x.add(&w);
            let j = grid.locate_exact(&xw).ok_or_else(|| Error::StencilOutOfGrid(xw.coords().to_vec()))?;
            let m: Matrix2<f64> = binv.column(l).into_owned() * row;
            terms.push((fk.targets[l], m));
            terms.push((fk.base, -m));
            terms.push((j, -m));
            terms.push((frame.base, m));
        }
    }
    Ok(merge(terms))
}

fn symmetrize(s: &HessianStencil) -> HessianStencil {
    s.iter().map(|(i, m)| (*i, (m + m.transpose()) * 0.5)).collect()
}

fn check_grid(u: &GridFunction, frame: &DirectionFrame) -> Result<()> {
    if frame.base >= u.values.len() || frame.targets.iter().any(|&t| t >= u.values.len()) {
        return Err(Error::DimensionMismatch { expected: u.values.len(), got: frame.base + 1 });
    }
    Ok(())
}

/// Solution g of <V_k, g> = u(x_k) − u(x).
pub fn discrete_gradient(u: &GridFunction, frame: &DirectionFrame) -> Result<Vector2<f64>> {
    check_grid(u, frame)?;
    let s = gradient_stencil(frame, u.grid.dim())?;
    Ok(apply_vec(&s, &u.values))
}

/// u(x+V1+V2) − u(x+V1) − u(x+V2) + u(x).
pub fn second_difference(u: &GridFunction, x: &Point, v1: &Vector2<f64>, v2: &Vector2<f64>) -> Result<f64> {
    let g = &u.grid;
    let find = |p: Point| g.locate_exact(&p).ok_or_else(|| Error::StencilOutOfGrid(p.coords().to_vec()));
    let i0 = find(*x)?;
    let i1 = find(x.add(v1))?;
    let i2 = find(x.add(v2))?;
    let i12 = find(x.add(&(v1 + v2)))?;
    Ok(u.values[i12] - u.values[i1] - u.values[i2] + u.values[i0])
}

/// Symmetrized discrete Hessian with the size of the removed antisymmetric part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianEstimate {
    pub matrix: Matrix2<f64>,
    pub asymmetry: f64,
}

pub fn discrete_hessian(
    u: &GridFunction,
    frame: &DirectionFrame,
    frames_at_targets: &[DirectionFrame],
) -> Result<HessianEstimate> {
    check_grid(u, frame)?;
    let raw = apply_mat(&hessian_stencil_raw(&u.grid, frame, frames_at_targets)?, &u.values);
    Ok(HessianEstimate { matrix: (raw + raw.transpose()) * 0.5, asymmetry: 0.5 * (raw[(0, 1)] - raw[(1, 0)]).abs() })
}

pub fn apply_vec(s: &GradientStencil, values: &[f64]) -> Vector2<f64> {
    s.iter().fold(Vector2::zeros(), |acc, (i, c)| acc + c * values[*i])
}

pub fn apply_mat(s: &HessianStencil, values: &[f64]) -> Matrix2<f64> {
    s.iter().fold(Matrix2::zeros(), |acc, (i, m)| acc + m * values[*i])
}

/// Frames and derivative stencils at every grid point. Entries are errors where
/// no frame exists (long frames near the edge of the box).
#[derive(Debug, Clone)]
pub struct DerivativeStencils {
    pub mode: FrameMode,
    frames: Vec<Result<DirectionFrame>>,
    gradient: Vec<Result<GradientStencil>>,
    hessian: Option<Vec<Result<HessianStencil>>>,
}

impl DerivativeStencils {
    pub fn build(grid: &Grid, mode: FrameMode, with_hessian: bool) -> Self {
        let d = grid.dim();
        let frames: Vec<Result<DirectionFrame>> =
            (0..grid.len()).into_par_iter().map(|i| frame_at(grid, i, mode)).collect();
        let gradient =
            frames.par_iter().map(|f| f.as_ref().map_err(Clone::clone).and_then(|f| gradient_stencil(f, d))).collect();
        let hessian = with_hessian.then(|| {
            frames
                .par_iter()
                .map(|f| {
                    let f = f.as_ref().map_err(Clone::clone)?;
                    let at: Vec<DirectionFrame> =
                        f.targets.iter().map(|&t| frames[t].clone()).collect::<Result<_>>()?;
                    Ok(symmetrize(&hessian_stencil_raw(grid, f, &at)?))
                })
                .collect()
        });
        DerivativeStencils { mode, frames, gradient, hessian }
    }

    pub fn frame(&self, i: usize) -> Result<&DirectionFrame> {
        self.frames[i].as_ref().map_err(Clone::clone)
    }

    pub fn gradient(&self, i: usize) -> Result<&GradientStencil> {
        self.gradient[i].as_ref().map_err(Clone::clone)
    }

    pub fn hessian(&self, i: usize) -> Result<&HessianStencil> {
        match &self.hessian {
            Some(h) => h[i].as_ref().map_err(Clone::clone),
            None => Err(Error::Precondition("Hessian stencils were not built".into())),
        }
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn apply_gradient(&self, i: usize, values: &[f64]) -> Result<Vector2<f64>> {
        Ok(apply_vec(self.gradient(i)?, values))
    }

    pub fn apply_hessian(&self, i: usize, values: &[f64]) -> Result<Matrix2<f64>> {
        Ok(apply_mat(self.hessian(i)?, values))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub level: u32,
    pub h: f64,
    pub grad_err: f64,
    pub hess_err: Option<f64>,
    /// Grid points with a complete stencil.
    pub points_used: usize,
    pub points_skipped: usize,
    /// max |∇ⁿu| / ‖u‖_{C¹}
    pub grad_bound_ratio: f64,
    /// max |∇ⁿ²u| / ‖u‖_{C²}
    pub hess_bound_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub function: String,
    pub mode: FrameMode,
    pub beta: f64,
    pub rows: Vec<ConsistencyRow>,
    pub gradient: RateTable,
    pub hessian: Option<RateTable>,
    /// β − 1 when β ∈ (1, 2]
    pub expected_gradient_slope: Option<f64>,
    /// β − 2 when β ∈ (2, 3]
    pub expected_hessian_slope: Option<f64>,
}

impl ConsistencyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,grad_err,hess_err\n");
        for r in &self.rows {
            let he = r.hess_err.map(|v| format!("{v:e}")).unwrap_or_default();
            s.push_str(&format!("{},{:e},{:e},{}\n", r.level, r.h, r.grad_err, he));
        }
        s
    }
}

/// Max-over-grid errors of the discrete gradient and Hessian of `u` on each grid,
/// with log-log slopes against the mesh gauge. Points without a complete stencil
/// are skipped and counted.
pub fn consistency_report(
    u: &dyn SmoothFunction,
    grids: &[Grid],
    cls: &HolderClass,
    mode: FrameMode,
) -> Result<ConsistencyReport> {
    if grids.len() < 3 {
        return Err(Error::InsufficientData(format!("{} grid levels, need at least 3", grids.len())));
    }
    let mut rows = Vec::new();
    let mut any_hessian = true;
    for g in grids {
        let st = DerivativeStencils::build(g, mode, true);
        let values: Vec<f64> = g.points().iter().map(|p| u.value(p)).collect();
        let m = u.derivative_bounds(g.domain());
        let per_point: Vec<Option<(f64, f64, Option<(f64, f64)>)>> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let gr = st.apply_gradient(i, &values).ok()?;
                let j = u.jet(&g.point(i));
                let he = st.apply_hessian(i, &values).ok().map(|hm| (sym_norm(&(hm - j.h)), sym_norm(&hm)));
                Some(((gr - j.g).norm(), gr.norm(), he))
            })
            .collect();
        let used: Vec<_> = per_point.iter().flatten().collect();
        if used.is_empty() {
            return Err(Error::InsufficientData(format!("no complete frame on level {}", g.level())));
        }
        let grad_err = used.iter().map(|t| t.0).fold(0.0, f64::max);
        let grad_max = used.iter().map(|t| t.1).fold(0.0, f64::max);
        let hess: Vec<(f64, f64)> = used.iter().filter_map(|t| t.2).collect();
        let (hess_err, hess_ratio) = if hess.is_empty() {
            any_hessian = false;
            (None, None)
        } else {
            let e = hess.iter().map(|t| t.0).fold(0.0, f64::max);
            let n = hess.iter().map(|t| t.1).fold(0.0, f64::max);
            (Some(e), Some(n / (m[0] + m[1] + m[2]).max(f64::MIN_POSITIVE)))
        };
        rows.push(ConsistencyRow {
            level: g.level(),
            h: g.gauge(),
            grad_err,
            hess_err,
            points_used: used.len(),
            points_skipped: g.len() - used.len(),
            grad_bound_ratio: grad_max / (m[0] + m[1]).max(f64::MIN_POSITIVE),
            hess_bound_ratio: hess_ratio,
        });
    }
    let scale = {
        let m = u.derivative_bounds(grids[0].domain());
        1.0 + m[0] + m[1] + m[2]
    };
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let gradient = RateTable::new(h.clone(), rows.iter().map(|r| r.grad_err).collect(), 1e-9 * scale);
    let hessian =
        any_hessian.then(|| RateTable::new(h, rows.iter().map(|r| r.hess_err.unwrap_or(0.0)).collect(), 1e-7 * scale));
    let b = cls.beta;
    Ok(ConsistencyReport {
        function: u.name(),
        mode,
        beta: b,
        rows,
        gradient,
        hessian,
        expected_gradient_slope: (b > 1.0 && b <= 2.0).then_some(b - 1.0),
        expected_hessian_slope: (b > 2.0 && b <= 3.0).then_some(b - 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{Polynomial, Sine};
    use crate::point::BoxDomain;
    use std::sync::Arc;

    fn grid1(n: u32) -> Arc<Grid> {
        Grid::cartesian(BoxDomain::unit(1), n).unwrap().shared()
    }

    fn grid2(n: u32) -> Arc<Grid> {
        Grid::cartesian(BoxDomain::unit(2), n).unwrap().shared()
    }

    #[test]
    fn stencil_frame_in_1d_is_the_spacing() {
        let g = grid1(2);
        let f = admissible_directions(&g, &Point::new1(0.5), FrameMode::Stencil).unwrap();
        assert_eq!(f.directions[0].x, g.spacing());
        let f = admissible_directions(&g, &Point::new1(1.0), FrameMode::Stencil).unwrap();
        assert_eq!(f.directions[0].x, -g.spacing());
    }

    #[test]
    fn long_frame_lengths_and_boundary() {
        let g = Grid::cartesian(BoxDomain::new(&[0.0, 0.0], &[16.0, 16.0]).unwrap(), 1).unwrap();
        let h = g.gauge();
        let f = admissible_directions(&g, &Point::new2(1.0, 1.0), FrameMode::PaperFaithful).unwrap();
        for v in &f.directions {
            assert!(v.norm() >= 98.0 * h && v.norm() <= 102.0 * h);
        }
        assert!(f.directions[0].normalize().dot(&f.directions[1].normalize()).abs() <= 0.05);
        let edge = Point::new2(16.0 - g.spacing(), 1.0);
        assert!(matches!(admissible_directions(&g, &edge, FrameMode::PaperFaithful), Err(Error::BoundaryFrame { .. })));
    }

    #[test]
    fn gradient_of_square_is_forward_difference() {
        // u = x² on [-1,1] at x = 0 with spacing 1/16: (1/256)/(1/16) = 1/16
        let g = Grid::cartesian(BoxDomain::interval(-1.0, 1.0).unwrap(), 2).unwrap().shared();
        let u = GridFunction::from_fn(g.clone(), |p| p.get(0) * p.get(0));
        let f = admissible_directions(&g, &Point::new1(0.0), FrameMode::Stencil).unwrap();
        assert_eq!(discrete_gradient(&u, &f).unwrap().x, 1.0 / 16.0);
    }

    #[test]
    fn gradient_is_exact_on_affine() {
        let g = grid2(2);
        let u = GridFunction::from_fn(g.clone(), |p| 0.3 + 2.0 * p.get(0) - 0.7 * p.get(1));
        for mode in [FrameMode::Stencil] {
            for i in 0..g.len() {
                let f = frame_at(&g, i, mode).unwrap();
                let gr = discrete_gradient(&u, &f).unwrap();
                assert!((gr - Vector2::new(2.0, -0.7)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn second_differences() {
        let g = grid2(2);
        let h = g.spacing();
        let x = Point::new2(0.25, 0.5);
        let sq = GridFunction::from_fn(g.clone(), |p| p.get(0) * p.get(0));
        let e1 = Vector2::new(h, 0.0);
        let e2 = Vector2::new(0.0, h);
        assert!((second_difference(&sq, &x, &e1, &e1).unwrap() - 2.0 * h * h).abs() < 1e-15);
        let xy = GridFunction::from_fn(g.clone(), |p| p.get(0) * p.get(1));
        assert!((second_difference(&xy, &x, &e1, &e2).unwrap() - h * h).abs() < 1e-15);
        let aff = GridFunction::from_fn(g.clone(), |p| 1.0 + p.get(0) - 3.0 * p.get(1));
        assert!(second_difference(&aff, &x, &e1, &e2).unwrap().abs() < 1e-14);
        let corner = Point::new2(1.0, 1.0);
        assert!(matches!(second_difference(&aff, &corner, &e1, &e2), Err(Error::StencilOutOfGrid(_))));
    }

    fn hessian_at(u: &GridFunction, i: usize) -> HessianEstimate {
        let g = &u.grid;
        let f = frame_at(g, i, FrameMode::Stencil).unwrap();
        let at: Vec<_> = f.targets.iter().map(|&t| frame_at(g, t, FrameMode::Stencil).unwrap()).collect();
        discrete_hessian(u, &f, &at).unwrap()
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let g = grid2(2);
        let d = Matrix2::new(2.0, -0.5, -0.5, 1.0);
        let u = GridFunction::from_fn(g.clone(), |p| 0.5 * p.to_vector().dot(&(d * p.to_vector())));
        for i in 0..g.len() {
            let h = hessian_at(&u, i);
            assert!((h.matrix - d).abs().max() < 1e-9, "{} {}", i, h.matrix);
        }
        let c = GridFunction::constant(g.clone(), 4.0);
        assert_eq!(hessian_at(&c, 7).matrix, Matrix2::zeros());
    }

    #[test]
    fn hessian_of_cube_is_first_order() {
        // u = x³ at 0 with forward stencil h: δ = 6h³, so the estimate is 6h
        let g = Grid::cartesian(BoxDomain::interval(-1.0, 1.0).unwrap(), 2).unwrap().shared();
        let u = GridFunction::from_fn(g.clone(), |p| p.get(0).powi(3));
        let i = g.locate_exact(&Point::new1(0.0)).unwrap();
        let h = hessian_at(&u, i);
        assert!((h.matrix[(0, 0)] - 6.0 * g.spacing()).abs() < 1e-12);
    }

    #[test]
    fn stencils_match_direct_formulas() {
        let g = grid2(1);
        let st = DerivativeStencils::build(&g, FrameMode::Stencil, true);
        let u = GridFunction::from_fn(g.clone(), |p| (3.0 * p.get(0)).sin() * p.get(1).exp());
        for i in 0..g.len() {
            let f = st.frame(i).unwrap();
            let direct = discrete_gradient(&u, f).unwrap();
            assert!((st.apply_gradient(i, &u.values).unwrap() - direct).norm() < 1e-12);
            let h = hessian_at(&u, i);
            assert!((st.apply_hessian(i, &u.values).unwrap() - h.matrix).abs().max() < 1e-9);
        }
    }

    #[test]
    fn consistency_rates_on_sine() {
        let grids: Vec<Grid> = (2..=6).map(|n| Grid::cartesian(BoxDomain::unit(1), n).unwrap()).collect();
        let r = consistency_report(&Sine::new1(1.0), &grids, &HolderClass::c11(), FrameMode::Stencil).unwrap();
        assert!((r.gradient.slope().unwrap() - 1.0).abs() < 0.3);
        assert!((r.hessian.as_ref().unwrap().slope().unwrap() - 1.0).abs() < 0.3);
        let ratios: Vec<f64> = r.rows.iter().map(|r| r.grad_bound_ratio).collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi <= 1.2 * lo);
        assert!(r.to_csv().starts_with("level,h,grad_err,hess_err\n"));
    }

    #[test]
    fn affine_consistency_is_exact() {
        let grids: Vec<Grid> = (2..=4).map(|n| Grid::cartesian(BoxDomain::unit(1), n).unwrap()).collect();
        let u = Polynomial::affine(0.5, &[2.0]);
        let r = consistency_report(&u, &grids, &HolderClass::c11(), FrameMode::Stencil).unwrap();
        assert!(r.gradient.exact);
        assert!(r.gradient.slope().is_none());
        assert!(matches!(
            consistency_report(&u, &grids[..2], &HolderClass::c11(), FrameMode::Stencil),
            Err(Error::InsufficientData(_))
        ));
    }
}
