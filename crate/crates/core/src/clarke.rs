//! Sampled Clarke differentials of Lipschitz grid operators, mean-value
//! verification, min-max and convex max representations built from the samples,
//! and the approximate GCP of projected operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{HolderClass, SmoothFunction};
use crate::error::{Error, Result};
use crate::operators::{GcpVerdict, GridOperator, LinearGridOperator, OperatorDump, ProjectedOperator, Row};
use crate::point::Point;
use crate::stats::RateTable;
use crate::whitney::restrict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    ExactStructured,
    Numeric,
}

#[derive(Debug, Clone)]
pub struct DifferentialSample {
    pub elements: Vec<LinearGridOperator>,
    /// Base point at which each element was obtained.
    pub provenance: Vec<Vec<f64>>,
    pub mode: SampleMode,
    /// Jittered points rejected as kinks (numeric mode).
    pub rejected: usize,
}

/// Relative jitter radius around the base point.
pub const JITTER: f64 = 1e-6;
/// Finite-difference step relative to the base point's scale.
pub const FD_STEP: f64 = 1e-6;
/// One-sided derivative mismatch above which a numeric sample point is a kink.
pub const KINK_THRESHOLD: f64 = 1e-4;

fn scale_of(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
}

fn jittered(u: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = JITTER * scale_of(u);
    u.iter().map(|v| v + r * rng.gen_range(-1.0..1.0)).collect()
}

/// Row-wise selection Jacobian of a min-max operator.
fn selection_element(op: &crate::operators::StructuredMinMax, sel: &[(usize, usize)]) -> Result<LinearGridOperator> {
    let rows: Vec<&LinearGridOperator> = sel.iter().map(|&(a, b)| &op.family[a][b].op).collect();
    LinearGridOperator::stitch(&rows)
}

fn numeric_jacobian(op: &GridOperator, p: &[f64]) -> Result<Option<LinearGridOperator>> {
    let n = p.len();
    let h = FD_STEP * scale_of(p);
    let base = op.apply(p);
    let cols: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let mut q = p.to_vec();
            q[y] = p[y] + h;
            let fp = op.apply(&q);
            q[y] = p[y] - h;
            let fm = op.apply(&q);
            let mut col = Vec::with_capacity(n);
            for x in 0..n {
                let fwd = (fp[x] - base[x]) / h;
                let bwd = (base[x] - fm[x]) / h;
                if (fwd - bwd).abs() > KINK_THRESHOLD * (1.0 + fwd.abs() + bwd.abs()) {
                    return None;
                }
                col.push(0.5 * (fwd + bwd));
            }
            Some(col)
        })
        .collect();
    if cols.iter().any(|c| c.is_none()) {
        return Ok(None);
    }
    let cols: Vec<Vec<f64>> = cols.into_iter().flatten().collect();
    let rows: Vec<Row> = (0..n).map(|x| (0..n).map(|y| (y, cols[y][x])).filter(|e| e.1 != 0.0).collect()).collect();
    Ok(Some(LinearGridOperator::from_matrix(op.grid().clone(), rows)?))
}

/// Samples of the Clarke differential at u and at `budget` jittered points.
/// Exact mode uses active selections (all tied selections at u itself) for
/// min-max operators and analytic Jacobians for semilinear ones; black boxes
/// always fall back to numeric Jacobians.
pub fn clarke_sample(
    op: &GridOperator,
    u: &[f64],
    budget: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<DifferentialSample> {
    let n = op.len();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DifferentialSample { elements: Vec::new(), provenance: Vec::new(), mode, rejected: 0 };
    let numeric = mode == SampleMode::Numeric || matches!(op, GridOperator::BlackBox(_));
    if numeric {
        out.mode = SampleMode::Numeric;
        let mut points = vec![u.to_vec()];
        points.extend((0..budget).map(|_| jittered(u, &mut rng)));
        for p in points {
            match numeric_jacobian(op, &p)? {
                Some(l) => {
                    out.elements.push(l);
                    out.provenance.push(p);
                }
                None => out.rejected += 1,
            }
        }
        if out.elements.is_empty() {
            return Err(Error::NondifferentiableEverywhereSampled);
        }
        return Ok(out);
    }
    match op {
        GridOperator::Linear(l) => {
            out.elements.push(l.clone());
            out.provenance.push(u.to_vec());
        }
        GridOperator::Semilinear(s) => {
            out.elements.push(s.jacobian(u)?);
            out.provenance.push(u.to_vec());
            for _ in 0..budget {
                let p = jittered(u, &mut rng);
                out.elements.push(s.jacobian(&p)?);
                out.provenance.push(p);
            }
        }
        GridOperator::MinMax(m) => {
            let tol = 1e-12 * scale_of(u) * (1.0 + op.lipschitz_estimate());
            let active: Vec<Vec<(usize, usize)>> = (0..n).map(|x| m.active(u, x, tol)).collect();
            let mut options: Vec<(usize, usize)> = active.iter().flatten().cloned().collect();
            options.sort_unstable();
            options.dedup();
            let mut seen: Vec<Vec<(usize, usize)>> = Vec::new();
            let mut push = |sel: Vec<(usize, usize)>, p: &[f64], out: &mut DifferentialSample| -> Result<()> {
                if !seen.contains(&sel) {
                    out.elements.push(selection_element(m, &sel)?);
                    out.provenance.push(p.to_vec());
                    seen.push(sel);
                }
                Ok(())
            };
            for o in &options {
                let sel = active.iter().map(|a| if a.contains(o) { *o } else { a[0] }).collect();
                push(sel, u, &mut out)?;
            }
            for _ in 0..budget {
                let p = jittered(u, &mut rng);
                let sel = (0..n).map(|x| m.active(&p, x, 0.0)[0]).collect();
                push(sel, &p, &mut out)?;
            }
        }
        GridOperator::BlackBox(_) => unreachable!("handled by the numeric branch"),
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// mean value

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanValue {
    /// Convex weights over the sample elements, per row.
    pub weights: Vec<Vec<f64>>,
    /// max over rows of |I(u,x) − I(v,x) − Σ λ_e L_e(u−v,x)|.
    pub residual: f64,
    pub scale: f64,
    pub verified: bool,
}

/// Per row x, the convex combination of sample elements closest to the secant
/// I(u,x) − I(v,x). The objective depends on the weights only through
/// Σ λ_e L_e(u−v,x), so its minimum over the simplex is the distance from the
/// target to [min_e L_e(u−v,x), max_e L_e(u−v,x)], attained by two elements.
pub fn mean_value_find(op: &GridOperator, u: &[f64], v: &[f64], sample: &DifferentialSample) -> Result<MeanValue> {
    let m = sample.elements.len();
    if m == 0 {
        return Err(Error::EmptyFamily);
    }
    let n = op.len();
    let (iu, iv) = (op.apply(u), op.apply(v));
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let vals: Vec<Vec<f64>> = sample.elements.iter().map(|l| l.apply(&d)).collect();
    let mut weights = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    for x in 0..n {
        let t = iu[x] - iv[x];
        let (mut lo, mut hi) = (0, 0);
        for e in 0..m {
            if vals[e][x] < vals[lo][x] {
                lo = e;
            }
            if vals[e][x] > vals[hi][x] {
                hi = e;
            }
        }
        let (a, b) = (vals[lo][x], vals[hi][x]);
        let mut w = vec![0.0; m];
        if t <= a {
            w[lo] = 1.0;
            residual = residual.max(a - t);
        } else if t >= b {
            w[hi] = 1.0;
            residual = residual.max(t - b);
        } else {
            let lam = (t - a) / (b - a);
            w[hi] += lam;
            w[lo] += 1.0 - lam;
            let achieved = lam * b + (1.0 - lam) * a;
            residual = residual.max((achieved - t).abs());
        }
        weights.push(w);
    }
    let scale = scale_of(&d) * (1.0 + op.lipschitz_estimate());
    Ok(MeanValue { weights, residual, scale, verified: residual <= 1e-6 * scale })
}

// ---------------------------------------------------------------------------
// min-max representation

/// min_a max_b { f^{ab}(x) + L^b(u,x) } with f^{ab} = I(v_a) − L^b(v_a).
#[derive(Debug, Clone)]
pub struct MinMaxRep {
    pub bases: Vec<Vec<f64>>,
    pub elements: Vec<LinearGridOperator>,
    /// f[a][b][x]
    pub offsets: Vec<Vec<Vec<f64>>>,
    /// sup over the validation set of |I − representation|.
    pub residual: f64,
    pub residuals: Vec<f64>,
}

impl MinMaxRep {
    pub fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        let lu: Vec<Vec<f64>> = self.elements.iter().map(|l| l.apply(u)).collect();
        (0..u.len())
            .map(|x| {
                self.offsets
                    .iter()
                    .map(|fa| fa.iter().zip(&lu).map(|(f, l)| f[x] + l[x]).fold(f64::NEG_INFINITY, f64::max))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Value of the cone at base a alone (an upper bound for I up to the sampling gap).
    pub fn cone(&self, a: usize, u: &[f64]) -> Vec<f64> {
        let lu: Vec<Vec<f64>> = self.elements.iter().map(|l| l.apply(u)).collect();
        (0..u.len())
            .map(|x| self.offsets[a].iter().zip(&lu).map(|(f, l)| f[x] + l[x]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn dump(&self) -> MinMaxDump {
        MinMaxDump {
            r#as: self.offsets.iter().map(|f| MinMaxOuter { f: f.clone() }).collect(),
            bs: self.elements.iter().map(|l| l.dump()).collect(),
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinMaxOuter {
    /// f^{ab}(x) per inner index b.
    pub f: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinMaxDump {
    pub r#as: Vec<MinMaxOuter>,
    pub bs: Vec<OperatorDump>,
    pub residual: f64,
}

fn dedup_elements(sample: Vec<DifferentialSample>) -> Vec<LinearGridOperator> {
    let mut out: Vec<LinearGridOperator> = Vec::new();
    for s in sample {
        for e in s.elements {
            if !out.iter().any(|o| o.c == e.c && o.kernel == e.kernel) {
                out.push(e);
            }
        }
    }
    out
}

/// Builds the representation from differentials sampled at every base point and
/// reports its residual on the validation set.
pub fn minmax_represent(
    op: &GridOperator,
    bases: &[Vec<f64>],
    budget: usize,
    mode: SampleMode,
    validation: &[Vec<f64>],
    seed: u64,
) -> Result<MinMaxRep> {
    if bases.is_empty() {
        return Err(Error::InsufficientData("no base points".into()));
    }
    let samples: Vec<DifferentialSample> = bases
        .par_iter()
        .enumerate()
        .map(|(i, v)| clarke_sample(op, v, budget, mode, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let elements = dedup_elements(samples);
    let offsets: Vec<Vec<Vec<f64>>> = bases
        .par_iter()
        .map(|v| {
            let iv = op.apply(v);
            elements
                .iter()
                .map(|l| {
                    let lv = l.apply(v);
                    iv.iter().zip(&lv).map(|(a, b)| a - b).collect()
                })
                .collect()
        })
        .collect();
    let mut rep = MinMaxRep { bases: bases.to_vec(), elements, offsets, residual: 0.0, residuals: Vec::new() };
    rep.residuals = validation
        .par_iter()
        .map(|u| {
            let r = rep.evaluate(u);
            op.apply(u).iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect();
    rep.residual = rep.residuals.iter().cloned().fold(0.0, f64::max);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// GCP inheritance

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InheritanceVerdict {
    pub checked: bool,
    pub notice: Option<String>,
    pub passed: bool,
    pub tolerance: f64,
    /// (element, x, y, K(x,y)) below −tolerance.
    pub offending: Vec<(usize, usize, usize, f64)>,
}

/// Every sampled element must have K ≥ −tol (1e-10 exact, 1e-6 numeric).
pub fn gcp_inheritance_check(sample: &DifferentialSample, parent: &GcpVerdict) -> InheritanceVerdict {
    let tolerance = match sample.mode {
        SampleMode::ExactStructured => 1e-10,
        SampleMode::Numeric => 1e-6,
    };
    if !parent.passed {
        return InheritanceVerdict {
            checked: false,
            notice: Some("parent operator fails the GCP; inheritance check skipped".into()),
            passed: false,
            tolerance,
            offending: Vec::new(),
        };
    }
    let mut offending = Vec::new();
    for (e, l) in sample.elements.iter().enumerate() {
        for (x, row) in l.kernel.iter().enumerate() {
            for &(y, w) in row {
                if w < -tolerance {
                    offending.push((e, x, y, w));
                }
            }
        }
    }
    InheritanceVerdict { checked: true, notice: None, passed: offending.is_empty(), tolerance, offending }
}

/// Largest ‖L‖ / Lip(I) over the sample.
pub fn norm_ratio(op: &GridOperator, sample: &DifferentialSample) -> f64 {
    let lip = op.lipschitz_estimate().max(f64::MIN_POSITIVE);
    sample.elements.iter().map(|l| l.norm_inf() / lip).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// convex operators

/// Largest midpoint defect I((u+v)/2) − (I(u)+I(v))/2 over random segments.
pub fn convexity_defect(op: &GridOperator, trials: usize, seed: u64) -> f64 {
    let n = op.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
        let (iu, iv, im) = (op.apply(&u), op.apply(&v), op.apply(&m));
        for x in 0..n {
            worst = worst.max(im[x] - 0.5 * (iu[x] + iv[x]));
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct ConvexRep {
    /// (I(v), L_v) pairs.
    pub pairs: Vec<(Vec<f64>, Vec<f64>, LinearGridOperator)>,
    pub residual: f64,
}

impl ConvexRep {
    /// max over pairs of I(v,x) + L_v(u − v, x).
    pub fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; u.len()];
        for (v, iv, l) in &self.pairs {
            let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
            let ld = l.apply(&d);
            for x in 0..u.len() {
                out[x] = out[x].max(iv[x] + ld[x]);
            }
        }
        out
    }
}

/// Supporting-plane representation of a convex operator. Convexity is checked
/// first on 100 random segments at tolerance 1e-10.
pub fn convex_max_formula(
    op: &GridOperator,
    bases: &[Vec<f64>],
    budget: usize,
    validation: &[Vec<f64>],
    seed: u64,
) -> Result<ConvexRep> {
    let defect = convexity_defect(op, 100, seed);
    if defect > 1e-10 {
        return Err(Error::NotConvex { defect });
    }
    let mut pairs = Vec::new();
    for (i, v) in bases.iter().enumerate() {
        let s = clarke_sample(op, v, budget, SampleMode::ExactStructured, seed.wrapping_add(i as u64))?;
        let iv = op.apply(v);
        for l in s.elements {
            pairs.push((v.clone(), iv.clone(), l));
        }
    }
    let mut rep = ConvexRep { pairs, residual: 0.0 };
    rep.residual = validation
        .iter()
        .map(|u| op.apply(u).iter().zip(rep.evaluate(u)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// approximate GCP of projections

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxGcpRow {
    pub level: u32,
    pub h: f64,
    /// min over sampled elements of L(T w, x0).
    pub min_value: f64,
    /// max(0, −min_value)
    pub violation: f64,
    /// violation / (h^γ ‖w‖_{C³})
    pub constant: f64,
    pub elements: usize,
}

/// Samples i_n-differentials at T w and at `budget` random smooth base points and
/// evaluates them on the nonnegative w, which vanishes at x0.
pub fn approx_gcp_of_projection(
    proj: &ProjectedOperator,
    w: &dyn SmoothFunction,
    x0: &Point,
    budget: usize,
    seed: u64,
) -> Result<ApproxGcpRow> {
    let g = proj.ext.grid();
    let i0 = g.locate_exact(x0).ok_or_else(|| Error::NotInGrid(x0.coords().to_vec()))?;
    let tw = restrict(g.clone(), w);
    if tw.values[i0] != 0.0 || tw.values.iter().any(|v| *v < 0.0) {
        return Err(Error::Precondition("w must be nonnegative on the grid and vanish at x0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = vec![tw.values.clone()];
    for _ in 0..budget {
        let (a, f, p): (f64, f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(1.0..6.0), rng.gen_range(0.0..6.3));
        bases.push(g.points().iter().map(|q| a * (f * q.get(0) + p).sin()).collect());
    }
    let mut min_value = f64::INFINITY;
    let mut count = 0;
    for (i, b) in bases.iter().enumerate() {
        let s = clarke_sample(&proj.grid_op, b, 0, SampleMode::ExactStructured, seed.wrapping_add(i as u64))?;
        for l in &s.elements {
            min_value = min_value.min(l.apply_at(&tw.values, i0));
            count += 1;
        }
    }
    let cls = proj.ext.class();
    let h = g.gauge();
    let violation = (-min_value).max(0.0);
    let wn = w.c3_bound(g.domain()).max(f64::MIN_POSITIVE);
    Ok(ApproxGcpRow {
        level: g.level(),
        h,
        min_value,
        violation,
        constant: violation / (h.powf(cls.gamma()) * wn),
        elements: count,
    })
}

/// Rows over levels and the log-log slope of the violation magnitude.
pub fn approx_gcp_study(rows: Vec<ApproxGcpRow>) -> (Vec<ApproxGcpRow>, RateTable) {
    let t = RateTable::new(rows.iter().map(|r| r.h).collect(), rows.iter().map(|r| r.violation).collect(), 0.0);
    (rows, t)
}

/// The class used for the extension inside projected operators.
pub fn default_projection_class() -> HolderClass {
    HolderClass::c11()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operators::{discrete_laplacian, fractional, gcp_check, zoo, StructuredMinMax, ZooSpec};
    use crate::point::BoxDomain;
    use std::sync::Arc;

    fn grid1(n: u32) -> Arc<Grid> {
        Grid::cartesian(BoxDomain::unit(1), n).unwrap().shared()
    }

    fn pair(g: &Arc<Grid>) -> (LinearGridOperator, LinearGridOperator) {
        (discrete_laplacian(g.clone(), 1.0).unwrap(), fractional(g.clone(), 0.5, 1.0).unwrap())
    }

    fn rand_u(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn linear_sample_is_itself() {
        let g = grid1(2);
        let (l1, _) = pair(&g);
        let op = GridOperator::Linear(l1.clone());
        let s = clarke_sample(&op, &vec![0.0; g.len()], 5, SampleMode::ExactStructured, 1).unwrap();
        assert_eq!(s.elements.len(), 1);
        assert_eq!(s.elements[0].kernel, l1.kernel);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (u, v) = (rand_u(g.len(), &mut rng), rand_u(g.len(), &mut rng));
        assert!(mean_value_find(&op, &u, &v, &s).unwrap().residual < 1e-10);
    }

    #[test]
    fn max_sampling_strict_and_tied() {
        let g = grid1(2);
        let (l1, l2) = pair(&g);
        let m = GridOperator::MinMax(
            StructuredMinMax::max_of(vec![l1.clone(), LinearGridOperator::zero(g.clone())]).unwrap(),
        );
        let u: Vec<f64> = g.points().iter().map(|p| -(p.get(0) - 0.5).powi(2) * 10.0).collect();
        // L1 u = −20 < 0 = L2 u everywhere in the interior, so L2 (zero operator) is the strict maximizer
        let s = clarke_sample(&m, &u, 3, SampleMode::ExactStructured, 3).unwrap();
        let n = g.len();
        assert!(s.elements.iter().all(|e| e.kernel[1..n - 1].iter().all(|r| r.is_empty())));
        let t = GridOperator::MinMax(StructuredMinMax::max_of(vec![l1.clone(), l2.clone()]).unwrap());
        let s = clarke_sample(&t, &vec![0.0; g.len()], 20, SampleMode::ExactStructured, 4).unwrap();
        let x = 2;
        assert!(s.elements.iter().any(|e| e.kernel[x] == l1.kernel[x]));
        assert!(s.elements.iter().any(|e| e.kernel[x] == l2.kernel[x]));
    }

    #[test]
    fn mean_value_across_a_kink() {
        let g = grid1(0);
        let (l1, l2) = pair(&g);
        let op = GridOperator::MinMax(StructuredMinMax::max_of(vec![l1, l2]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut bases = Vec::new();
        for _ in 0..20 {
            bases.push(rand_u(g.len(), &mut rng));
        }
        let samples: Vec<_> =
            bases.iter().map(|b| clarke_sample(&op, b, 0, SampleMode::ExactStructured, 0).unwrap()).collect();
        let all = DifferentialSample {
            elements: dedup_elements(samples),
            provenance: Vec::new(),
            mode: SampleMode::ExactStructured,
            rejected: 0,
        };
        for _ in 0..20 {
            let (u, v) = (rand_u(g.len(), &mut rng), rand_u(g.len(), &mut rng));
            let mv = mean_value_find(&op, &u, &v, &all).unwrap();
            assert!(mv.residual < 1e-8, "{}", mv.residual);
            for w in &mv.weights {
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w.iter().all(|&a| a >= 0.0));
            }
        }
    }

    #[test]
    fn minmax_of_isaacs_is_exact() {
        let g = grid1(4);
        let op = zoo(&ZooSpec::by_name("isaacs", 1).unwrap(), g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let val: Vec<Vec<f64>> = (0..30).map(|_| rand_u(g.len(), &mut rng)).collect();
        let mut bases: Vec<Vec<f64>> = (0..30).map(|_| rand_u(g.len(), &mut rng)).collect();
        bases.extend(val.iter().cloned());
        let rep = minmax_represent(&op, &bases, 2, SampleMode::ExactStructured, &val, 7).unwrap();
        assert!(rep.residual <= 1e-8, "{}", rep.residual);
        // v = u gives equality at the base
        let c = rep.cone(30, &val[0]);
        let iu = op.apply(&val[0]);
        assert!(c.iter().zip(&iu).all(|(a, b)| (a - b).abs() < 1e-9));
        assert!(
            gcp_inheritance_check(
                &clarke_sample(&op, &val[0], 5, SampleMode::ExactStructured, 1).unwrap(),
                &gcp_check(&op, 50, 1)
            )
            .passed
        );
    }

    #[test]
    fn numeric_mode_and_inheritance() {
        let g = grid1(2);
        let op = zoo(&ZooSpec::by_name("isaacs", 1).unwrap(), g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = rand_u(g.len(), &mut rng);
        let s = clarke_sample(&op, &u, 4, SampleMode::Numeric, 9).unwrap();
        assert_eq!(s.mode, SampleMode::Numeric);
        let v = gcp_check(&op, 50, 2);
        assert!(gcp_inheritance_check(&s, &v).passed);
        let mut failed = v.clone();
        failed.passed = false;
        let r = gcp_inheritance_check(&s, &failed);
        assert!(!r.checked && r.notice.is_some());
    }

    #[test]
    fn convex_formula() {
        let g = grid1(2);
        let (l1, l2) = pair(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let bases: Vec<Vec<f64>> = (0..40).map(|_| rand_u(g.len(), &mut rng)).collect();
        let val: Vec<Vec<f64>> = (0..20).map(|_| rand_u(g.len(), &mut rng)).collect();
        let mx = GridOperator::MinMax(StructuredMinMax::max_of(vec![l1.clone(), l2.clone()]).unwrap());
        assert!(convex_max_formula(&mx, &bases, 0, &val, 11).unwrap().residual < 1e-8);
        let lin = GridOperator::Linear(l1.clone());
        let r = convex_max_formula(&lin, &bases[..1], 0, &val, 11).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert!(r.residual < 1e-9);
        let mn = GridOperator::MinMax(StructuredMinMax::min_of(vec![l1, l2]).unwrap());
        assert!(matches!(convex_max_formula(&mn, &bases, 0, &val, 11), Err(Error::NotConvex { .. })));
    }
}
