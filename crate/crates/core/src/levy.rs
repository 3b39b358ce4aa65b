//! Lévy triples (A, B, C, μ) read off discrete linear operators at a grid point,
//! with measure diagnostics, reconstruction from the triple, the cross-level
//! Cauchy study, and the extremal inequality checks.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{epsilon_taylor, eta, eta_tilde, rho, HolderClass, SmoothFunction};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::jet::sym_min_eig;
use crate::operators::{extremal, GridOperator, LinearGridOperator, Sign};
use crate::point::Point;
use crate::whitney::restrict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub base: Point,
    /// (y, weight), y ≠ base, distinct points.
    pub atoms: Vec<(Point, f64)>,
}

impl DiscreteMeasure {
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.atoms.iter().map(|(y, w)| f(y) * w).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.1.abs()).sum()
    }

    pub fn negative_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1.min(0.0)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriple {
    pub x: Point,
    pub eps: f64,
    pub cls: HolderClass,
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: f64,
    pub mu: DiscreteMeasure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleDump {
    pub x: Point,
    pub eps: f64,
    pub beta: f64,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub mu: Vec<(Point, f64)>,
}

impl LevyTriple {
    pub fn dump(&self) -> TripleDump {
        let d = self.x.dim();
        TripleDump {
            x: self.x,
            eps: self.eps,
            beta: self.cls.beta,
            a: (0..d).map(|i| (0..d).map(|j| self.a[(i, j)]).collect()).collect(),
            b: (0..d).map(|i| self.b[i]).collect(),
            c: self.c,
            mu: self.mu.atoms.clone(),
        }
    }
}

/// μ = K(x,·), C = c(x), B = Σ η^ε (y−x) K, A = ½ Σ η̃^ε (y−x)⊗(y−x) K, with A and
/// B dropped where the class has no diffusion or drift.
pub fn extract_levy(l: &LinearGridOperator, x: &Point, eps: f64, cls: &HolderClass) -> Result<LevyTriple> {
    if eps <= 0.0 {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {eps}")));
    }
    let g = l.grid();
    let i = g.locate_exact(x).ok_or_else(|| Error::NotInGrid(x.coords().to_vec()))?;
    let xp = g.point(i);
    let mut a = Matrix2::zeros();
    let mut b = Vector2::zeros();
    let mut atoms = Vec::with_capacity(l.kernel[i].len());
    for &(j, w) in &l.kernel[i] {
        let y = g.point(j);
        let z = y.sub(&xp);
        let d = z.norm();
        b += z * (eta(eps, d)[0] * w);
        a += z * z.transpose() * (0.5 * eta_tilde(eps, d)[0] * w);
        atoms.push((y, w));
    }
    if !cls.allows_drift() {
        b = Vector2::zeros();
    }
    if !cls.allows_diffusion() {
        a = Matrix2::zeros();
    }
    Ok(LevyTriple { x: xp, eps, cls: *cls, a, b, c: l.c[i], mu: DiscreteMeasure { base: xp, atoms } })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub m: DiscreteMeasure,
    pub total_variation: f64,
}

/// m(dy) = ρ(d(x,y)^s) μ(dy) with s = β, or 1 + ε̃ for C¹.
pub fn weighted_measure(t: &LevyTriple, eps_tilde: f64) -> WeightedMeasure {
    let s = t.cls.weight_exponent(eps_tilde);
    let atoms: Vec<(Point, f64)> = t.mu.atoms.iter().map(|(y, w)| (*y, w * rho(y.dist(&t.x).powf(s))[0])).collect();
    let m = DiscreteMeasure { base: t.x, atoms };
    WeightedMeasure { total_variation: m.total_variation(), m }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestIntegral {
    pub function: String,
    pub integral: f64,
    /// −h^γ ‖f‖_{C³}
    pub reference_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min_eig_a: f64,
    /// −h^γ ε^{−3}
    pub a_reference_bound: f64,
    pub negative_mass: f64,
    pub integrals: Vec<TestIntegral>,
}

/// Lower bounds of A and of ∫ f dμ for nonnegative f vanishing at x, reported next
/// to the reference scales h^γ ε^{−3} and h^γ ‖f‖_{C³} (unit constant).
pub fn positivity_diagnostics(t: &LevyTriple, grid: &Grid, tests: &[&dyn SmoothFunction]) -> Result<PositivityReport> {
    let h = grid.gauge();
    let hg = h.powf(t.cls.gamma());
    let mut integrals = Vec::new();
    for f in tests {
        if f.value(&t.x).abs() > 1e-14 {
            return Err(Error::Precondition(format!("test {} does not vanish at x", f.name())));
        }
        integrals.push(TestIntegral {
            function: f.name(),
            integral: t.mu.integrate(|y| f.value(y)),
            reference_bound: -hg * f.c3_bound(grid.domain()),
        });
    }
    Ok(PositivityReport {
        min_eig_a: if t.x.dim() == 1 { t.a[(0, 0)] } else { sym_min_eig(&t.a) },
        a_reference_bound: -hg * t.eps.powi(-3),
        negative_mass: t.mu.negative_mass(),
        integrals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub value: f64,
    /// tr(A ∇²u) + ⟨B, ∇u⟩ + C u(x)
    pub local: f64,
    /// Σ (u(y) − ε-Taylor(u,x)(y)) μ(y)
    pub nonlocal: f64,
}

/// tr(A ∇²u(x)) + ⟨B, ∇u(x)⟩ + C u(x) + Σ_y (u(y) − ε-Taylor(u,x)(y)) μ(y).
pub fn levy_reconstruct(t: &LevyTriple, u: &dyn SmoothFunction) -> Reconstruction {
    let j = u.jet(&t.x);
    let local = (t.a * j.h).trace() + t.b.dot(&j.g) + t.c * j.v;
    let nonlocal = t.mu.integrate(|y| u.value(y) - epsilon_taylor(u, &t.x, t.eps, &t.cls, y));
    Reconstruction { value: local + nonlocal, local, nonlocal }
}

// ---------------------------------------------------------------------------
// Cauchy study

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRow {
    /// Finer of the two compared levels.
    pub level: u32,
    pub eps: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub d_c: f64,
    /// |∫ f dμ_{n+1} − ∫ f dμ_n| per test function.
    pub d_mu: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyReport {
    pub x: Point,
    pub tests: Vec<String>,
    pub rows: Vec<StudyRow>,
    /// Per ε: every difference sequence strictly decreasing.
    pub decreasing: Vec<(f64, bool)>,
    pub verdict: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Triples of each level's operator at x for every ε, and successive differences.
pub fn convergence_study(
    ops: &[LinearGridOperator],
    x: &Point,
    eps_list: &[f64],
    tests: &[&dyn SmoothFunction],
    cls: &HolderClass,
) -> Result<CauchyReport> {
    if ops.len() < 3 {
        return Err(Error::InsufficientData(format!("{} levels, need at least 3", ops.len())));
    }
    let mut rows = Vec::new();
    let mut decreasing = Vec::new();
    for &eps in eps_list {
        let triples: Vec<LevyTriple> = ops.iter().map(|l| extract_levy(l, x, eps, cls)).collect::<Result<_>>()?;
        let ints: Vec<Vec<f64>> =
            triples.iter().map(|t| tests.iter().map(|f| t.mu.integrate(|y| f.value(y))).collect()).collect();
        let mut seqs: Vec<Vec<f64>> = vec![Vec::new(); 3 + tests.len()];
        for k in 1..triples.len() {
            let (p, q) = (&triples[k - 1], &triples[k]);
            let d_mu: Vec<f64> = (0..tests.len()).map(|i| (ints[k][i] - ints[k - 1][i]).abs()).collect();
            let row = StudyRow {
                level: ops[k].grid().level(),
                eps,
                d_a: (q.a - p.a).norm(),
                d_b: (q.b - p.b).norm(),
                d_c: (q.c - p.c).abs(),
                d_mu,
            };
            seqs[0].push(row.d_a);
            seqs[1].push(row.d_b);
            seqs[2].push(row.d_c);
            for (i, d) in row.d_mu.iter().enumerate() {
                seqs[3 + i].push(*d);
            }
            rows.push(row);
        }
        // A is identically zero below C^{1,1}, B below C^1: nothing to converge
        let skip_a = !cls.allows_diffusion();
        let skip_b = !cls.allows_drift();
        let ok =
            seqs.iter().enumerate().all(|(i, s)| (i == 0 && skip_a) || (i == 1 && skip_b) || strictly_decreasing(s));
        decreasing.push((eps, ok));
    }
    let verdict = decreasing.iter().all(|d| d.1);
    Ok(CauchyReport { x: *x, tests: tests.iter().map(|f| f.name()).collect(), rows, decreasing, verdict })
}

/// Default ε values: 2h, 4h, 8h with h the coarsest gauge, and a quarter of the box
/// (deduplicated, ascending).
pub fn default_eps_list(coarse: &Grid) -> Vec<f64> {
    let h = coarse.gauge();
    let mut v = vec![2.0 * h, 4.0 * h, 8.0 * h, 0.25 * coarse.domain().max_width()];
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

// ---------------------------------------------------------------------------
// extremal inequalities

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest excess over either inequality (≤ 0 when none is violated).
    pub max_excess: f64,
}

/// M⁻(u−v, x) ≤ I(u,x) − I(v,x) ≤ M⁺(u−v, x) on random triples (u, v, x).
pub fn extremal_inequalities(
    op: &GridOperator,
    family: &[LinearGridOperator],
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<ExtremalReport> {
    let n = op.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = rng.gen_range(0..n);
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let diff = op.apply_at(&u, x) - op.apply_at(&v, x);
        let lo = extremal(family, Sign::Minus, &d, x)?;
        let hi = extremal(family, Sign::Plus, &d, x)?;
        let excess = (lo - diff).max(diff - hi);
        max_excess = max_excess.max(excess);
        if excess > tol {
            violations += 1;
        }
    }
    Ok(ExtremalReport { trials, violations, max_excess })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub checks: usize,
    pub violations: usize,
    /// max over elements and tests of M⁻(φ,x) − L(φ,x).
    pub max_excess: f64,
}

/// M⁻_family(T φ, x) ≤ L(T φ, x) + tol for every extracted element and test φ.
pub fn extremal_lower_bound_check(
    elements: &[LinearGridOperator],
    family: &[LinearGridOperator],
    tests: &[&dyn SmoothFunction],
    x: &Point,
    tol: f64,
) -> Result<LowerBoundReport> {
    let first = elements.first().ok_or(Error::EmptyFamily)?;
    let g = first.grid();
    let i = g.locate_exact(x).ok_or_else(|| Error::NotInGrid(x.coords().to_vec()))?;
    let mut out = LowerBoundReport { checks: 0, violations: 0, max_excess: f64::NEG_INFINITY };
    for f in tests {
        let phi = restrict(g.clone(), *f);
        let m = extremal(family, Sign::Minus, &phi.values, i)?;
        for l in elements {
            let e = m - l.apply_at(&phi.values, i);
            out.checks += 1;
            out.max_excess = out.max_excess.max(e);
            if e > tol {
                out.violations += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{GaussianBump, Polynomial};
    use crate::operators::{discrete_laplacian, fractional};
    use crate::point::BoxDomain;
    use std::sync::Arc;

    fn grid1(n: u32) -> Arc<Grid> {
        Grid::cartesian(BoxDomain::unit(1), n).unwrap().shared()
    }

    #[test]
    fn scaled_laplacian_triple() {
        let g = grid1(3);
        let s = g.spacing();
        let l = discrete_laplacian(g.clone(), 1.0).unwrap();
        let t = extract_levy(&l, &Point::new1(0.5), 3.0 * s, &HolderClass::c11()).unwrap();
        assert!((t.a[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(t.b.norm() < 1e-12);
        assert_eq!(t.c, 0.0);
        let r = weighted_measure(&t, 0.5);
        assert!((r.total_variation - 2.0 * s * s / (s * s)).abs() < 1e-9);
        let low = extract_levy(&l, &Point::new1(0.5), 3.0 * s, &HolderClass::c1alpha(0.5).unwrap()).unwrap();
        assert_eq!(low.a, Matrix2::zeros());
        assert!(matches!(extract_levy(&l, &Point::new1(0.3), 0.1, &HolderClass::c11()), Err(Error::NotInGrid(_))));
    }

    #[test]
    fn single_atom_weight() {
        let t = LevyTriple {
            x: Point::new1(0.0),
            eps: 0.1,
            cls: HolderClass::c11(),
            a: Matrix2::zeros(),
            b: Vector2::zeros(),
            c: 0.0,
            mu: DiscreteMeasure { base: Point::new1(0.0), atoms: vec![(Point::new1(0.5), -3.0)] },
        };
        assert!((weighted_measure(&t, 0.5).total_variation - 0.75).abs() < 1e-15);
        let mut e = t.clone();
        e.mu.atoms.clear();
        assert_eq!(weighted_measure(&e, 0.5).total_variation, 0.0);
    }

    #[test]
    fn extraction_is_linear() {
        let g = grid1(3);
        let l1 = discrete_laplacian(g.clone(), 1.0).unwrap();
        let l2 = fractional(g.clone(), 0.7, 1.0).unwrap();
        let sum = l1.scale(2.5).axpy(1.0, &l2).unwrap();
        let x = Point::new1(0.25);
        let cls = HolderClass::c11();
        let (a, b, c) = (
            extract_levy(&l1, &x, 0.1, &cls).unwrap(),
            extract_levy(&l2, &x, 0.1, &cls).unwrap(),
            extract_levy(&sum, &x, 0.1, &cls).unwrap(),
        );
        assert!((c.a - (a.a * 2.5 + b.a)).norm() < 1e-12 * (1.0 + c.a.norm()));
        assert!((c.b - (a.b * 2.5 + b.b)).norm() < 1e-12 * (1.0 + c.b.norm()));
        assert!((c.c - (2.5 * a.c + b.c)).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_cases() {
        let g = grid1(4);
        let x = Point::new1(0.5);
        let l = fractional(g.clone(), 0.5, 1.0).unwrap();
        let k = Polynomial::affine(2.0, &[0.0]);
        for cls in [HolderClass::holder(0.5).unwrap(), HolderClass::c1alpha(0.5).unwrap(), HolderClass::c11()] {
            let t = extract_levy(&l, &x, 0.1, &cls).unwrap();
            assert!((levy_reconstruct(&t, &k).value - t.c * 2.0).abs() < 1e-12);
        }
        // β < 1: exact on grid functions
        let u = GaussianBump::new(Point::new1(0.3), 0.2);
        let t = extract_levy(&l, &x, 0.1, &HolderClass::holder(0.5).unwrap()).unwrap();
        let tu = restrict(g.clone(), &u);
        let i = g.locate_exact(&x).unwrap();
        assert!((levy_reconstruct(&t, &u).value - l.apply_at(&tu.values, i)).abs() < 1e-9);
        // affine u with a symmetric kernel, β in [1,2)
        let aff = Polynomial::affine(0.3, &[1.7]);
        let t = extract_levy(&l, &x, 0.1, &HolderClass::c1alpha(0.5).unwrap()).unwrap();
        let ta = restrict(g.clone(), &aff);
        assert!((levy_reconstruct(&t, &aff).value - l.apply_at(&ta.values, i)).abs() < 1e-9);
    }

    #[test]
    fn positivity_of_gcp_kernels() {
        let g = grid1(3);
        let l = fractional(g.clone(), 0.5, 1.0).unwrap();
        let x = Point::new1(0.5);
        let t = extract_levy(&l, &x, 0.1, &HolderClass::c11()).unwrap();
        let w = Polynomial::squared_distance(&x);
        let zero = Polynomial::affine(0.0, &[0.0]);
        let r = positivity_diagnostics(&t, &g, &[&w, &zero]).unwrap();
        assert_eq!(r.negative_mass, 0.0);
        assert!(r.min_eig_a >= 0.0);
        assert!(r.integrals[0].integral >= 0.0);
        assert_eq!(r.integrals[1].integral, 0.0);
    }

    #[test]
    fn study_of_identical_levels_is_flat() {
        let g = grid1(2);
        let l = fractional(g.clone(), 0.5, 1.0).unwrap();
        let ops = vec![l.clone(), l.clone(), l];
        let f = GaussianBump::new(Point::new1(0.9), 0.05);
        let r = convergence_study(&ops, &Point::new1(0.5), &[0.1], &[&f], &HolderClass::c11()).unwrap();
        assert!(r.rows.iter().all(|row| row.d_a == 0.0 && row.d_b == 0.0 && row.d_c == 0.0 && row.d_mu[0] == 0.0));
        assert!(!r.verdict);
    }

    #[test]
    fn extremal_checks_on_isaacs() {
        let g = grid1(2);
        let op = crate::operators::zoo(&crate::operators::ZooSpec::by_name("isaacs", 1).unwrap(), g.clone()).unwrap();
        let GridOperator::MinMax(m) = &op else { panic!() };
        let fam = m.linear_family();
        let r = extremal_inequalities(&op, &fam, 200, 1e-10, 1).unwrap();
        assert_eq!(r.violations, 0);
        let f = GaussianBump::new(Point::new1(0.4), 0.1);
        let lb = extremal_lower_bound_check(&fam, &fam, &[&f], &Point::new1(0.5), 1e-12).unwrap();
        assert_eq!(lb.violations, 0);
        let single = extremal_lower_bound_check(&fam[..1], &fam[..1], &[&f], &Point::new1(0.5), 0.0).unwrap();
        assert_eq!(single.max_excess, 0.0);
    }
}
