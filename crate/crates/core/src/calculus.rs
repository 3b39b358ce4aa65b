//! Hölder classes, smooth test functions with exact derivatives, the model
//! polynomials `l` and `q`, cutoff functions, and Taylor remainder checks.

use std::fmt::Debug;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{sym_norm, Jet};
use crate::point::{BoxDomain, Point};

/// Which of the function spaces a class describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderVariant {
    /// C^{0,β}, β in (0,1)
    Holder,
    /// C^{0,1}
    Lipschitz,
    /// C^1
    C1,
    /// C^{1,β-1}, β in (1,2)
    #[serde(rename = "c1alpha")]
    C1Alpha,
    /// C^{1,1}
    C11,
    /// C^2
    C2,
    /// C^{2,β-2}, β in (2,3]; used only for remainder and consistency checks
    #[serde(rename = "c2alpha")]
    C2Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderClass {
    pub beta: f64,
    pub variant: HolderVariant,
}

impl HolderClass {
    pub fn new(beta: f64, variant: HolderVariant) -> Result<Self> {
        use HolderVariant::*;
        let ok = match variant {
            Holder => beta > 0.0 && beta < 1.0,
            Lipschitz | C1 => beta == 1.0,
            C1Alpha => beta > 1.0 && beta < 2.0,
            C11 | C2 => beta == 2.0,
            C2Alpha => beta > 2.0 && beta <= 3.0,
        };
        if ok {
            Ok(HolderClass { beta, variant })
        } else {
            Err(Error::ClassMismatch(format!("beta {beta} is not admissible for {variant:?}")))
        }
    }

    pub fn holder(beta: f64) -> Result<Self> {
        HolderClass::new(beta, HolderVariant::Holder)
    }

    pub fn lipschitz() -> Self {
        HolderClass { beta: 1.0, variant: HolderVariant::Lipschitz }
    }

    pub fn c1() -> Self {
        HolderClass { beta: 1.0, variant: HolderVariant::C1 }
    }

    pub fn c1alpha(alpha: f64) -> Result<Self> {
        HolderClass::new(1.0 + alpha, HolderVariant::C1Alpha)
    }

    pub fn c11() -> Self {
        HolderClass { beta: 2.0, variant: HolderVariant::C11 }
    }

    pub fn c2() -> Self {
        HolderClass { beta: 2.0, variant: HolderVariant::C2 }
    }

    /// The natural class for an exponent: Hölder below 1, C^1 at 1, C^{1,α} in (1,2),
    /// C^{1,1} at 2 and C^{2,α} in (2,3].
    pub fn from_beta(beta: f64) -> Result<Self> {
        use HolderVariant::*;
        let v = if beta < 1.0 {
            Holder
        } else if beta == 1.0 {
            C1
        } else if beta < 2.0 {
            C1Alpha
        } else if beta == 2.0 {
            C11
        } else {
            C2Alpha
        };
        HolderClass::new(beta, v)
    }

    /// γ = i − β for β in [i−1, i).
    pub fn gamma(&self) -> f64 {
        let i = self.beta.floor() + 1.0;
        i - self.beta
    }

    /// Order of the local Taylor-type interpolant: 0, 1 or 2.
    pub fn taylor_order(&self) -> usize {
        if self.beta < 1.0 {
            0
        } else if self.beta < 2.0 {
            1
        } else {
            2
        }
    }

    /// Number of derivatives controlled in sup norm and the Hölder exponent of the
    /// top one (`alpha = 0` means no Hölder part).
    pub fn norm_split(&self) -> (usize, f64) {
        use HolderVariant::*;
        match self.variant {
            Holder => (0, self.beta),
            Lipschitz => (0, 1.0),
            C1 => (1, 0.0),
            C1Alpha => (1, self.beta - 1.0),
            C11 => (1, 1.0),
            C2 => (2, 0.0),
            C2Alpha => (2, self.beta - 2.0),
        }
    }

    /// Exponent κ in the weight ρ(d^κ) applied to discrete measures.
    pub fn weight_exponent(&self, eps_tilde: f64) -> f64 {
        match self.variant {
            HolderVariant::C1 => 1.0 + eps_tilde,
            _ => self.beta,
        }
    }

    /// Whether the diffusion matrix may be nonzero.
    pub fn allows_diffusion(&self) -> bool {
        self.beta >= 2.0
    }

    /// Whether the drift vector may be nonzero.
    pub fn allows_drift(&self) -> bool {
        self.beta >= 1.0
    }
}

/// A function with exact derivatives up to third order.
pub trait SmoothFunction: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn jet(&self, x: &Point) -> Jet;

    fn value(&self, x: &Point) -> f64 {
        self.jet(x).v
    }

    fn gradient(&self, x: &Point) -> Vector2<f64> {
        self.jet(x).g
    }

    fn hessian(&self, x: &Point) -> Matrix2<f64> {
        self.jet(x).h
    }

    /// Upper bounds for sup |D^j u| over the box, j = 0..=3.
    fn derivative_bounds(&self, b: &BoxDomain) -> [f64; 4];

    fn c3_bound(&self, b: &BoxDomain) -> f64 {
        self.derivative_bounds(b).iter().sum()
    }

    /// Declared seminorm [D^k u]_α over the box (α = 0: sup |D^k u|).
    fn holder_seminorm(&self, k: usize, alpha: f64, b: &BoxDomain) -> f64 {
        let m = self.derivative_bounds(b);
        if alpha == 0.0 {
            m[k]
        } else if alpha == 1.0 {
            m[k + 1]
        } else {
            (2.0 * m[k]).powf(1.0 - alpha) * m[k + 1].powf(alpha)
        }
    }

    /// Declared C^β norm over the box.
    fn holder_norm(&self, cls: &HolderClass, b: &BoxDomain) -> f64 {
        let (k, alpha) = cls.norm_split();
        let m = self.derivative_bounds(b);
        let sup: f64 = m[..=k].iter().sum();
        if alpha > 0.0 {
            sup + self.holder_seminorm(k, alpha, b)
        } else {
            sup
        }
    }

    fn support_radius(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

/// Anything that can be differentiated to third order at a point: analytic test
/// functions, extensions of grid functions, correctors.
pub trait Field: Sync {
    fn field_dim(&self) -> usize;

    fn jet_at(&self, x: &Point) -> Jet;
}

impl<T: SmoothFunction + ?Sized> Field for T {
    fn field_dim(&self) -> usize {
        self.dim()
    }

    fn jet_at(&self, x: &Point) -> Jet {
        self.jet(x)
    }
}

fn box_corners(b: &BoxDomain) -> Vec<Point> {
    if b.dim() == 1 {
        vec![Point::new1(b.lo(0)), Point::new1(b.hi(0))]
    } else {
        vec![
            Point::new2(b.lo(0), b.lo(1)),
            Point::new2(b.lo(0), b.hi(1)),
            Point::new2(b.hi(0), b.lo(1)),
            Point::new2(b.hi(0), b.hi(1)),
        ]
    }
}

/// Largest distance from `c` to a point of the box.
fn max_dist(b: &BoxDomain, c: &Point) -> f64 {
    box_corners(b).iter().map(|p| p.dist(c)).fold(0.0, f64::max)
}

/// Polynomial `Σ coef · x^i y^j`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, u32, u32)>,
    label: String,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, u32, u32)>, label: &str) -> Self {
        Polynomial { dim, terms, label: label.to_string() }
    }

    /// `c + <p, x>`.
    pub fn affine(c: f64, p: &[f64]) -> Self {
        let mut t = vec![(c, 0, 0), (p[0], 1, 0)];
        if p.len() == 2 {
            t.push((p[1], 0, 1));
        }
        Polynomial::new(p.len(), t, "affine")
    }

    /// `1/2 <D (x − c), x − c>`.
    pub fn quadratic(d: Matrix2<f64>, c: &Point) -> Self {
        let (cx, cy) = (c.get(0), c.get(1));
        let mut t = vec![(0.5 * d[(0, 0)], 2, 0), (-d[(0, 0)] * cx, 1, 0), (0.5 * d[(0, 0)] * cx * cx, 0, 0)];
        if c.dim() == 2 {
            let b = 0.5 * (d[(0, 1)] + d[(1, 0)]);
            t.extend([
                (0.5 * d[(1, 1)], 0, 2),
                (-d[(1, 1)] * cy, 0, 1),
                (0.5 * d[(1, 1)] * cy * cy, 0, 0),
                (b, 1, 1),
                (-b * cy, 1, 0),
                (-b * cx, 0, 1),
                (b * cx * cy, 0, 0),
            ]);
        }
        Polynomial::new(c.dim(), t, "quadratic")
    }

    /// `|x − c|^2`.
    pub fn squared_distance(c: &Point) -> Self {
        let mut p = Polynomial::quadratic(Matrix2::identity() * 2.0, c);
        p.label = "squared_distance".into();
        p
    }

    fn mono(e: u32, x: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (d, o) in out.iter_mut().enumerate() {
            let d = d as u32;
            if d <= e {
                let coef: f64 = ((e - d + 1)..=e).map(|k| k as f64).product();
                *o = coef * x.powi((e - d) as i32);
            }
        }
        out
    }
}

impl SmoothFunction for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &Point) -> Jet {
        let mut j = Jet::constant(0.0);
        for &(c, ex, ey) in &self.terms {
            let a = Polynomial::mono(ex, x.get(0));
            let b = if self.dim == 2 { Polynomial::mono(ey, x.get(1)) } else { [1.0, 0.0, 0.0, 0.0] };
            // ∂^{p}_x ∂^{q}_y = c a[p] b[q]
            let d = |p: usize, q: usize| c * a[p] * b[q];
            j.v += d(0, 0);
            j.g[0] += d(1, 0);
            j.g[1] += d(0, 1);
            j.h[(0, 0)] += d(2, 0);
            j.h[(0, 1)] += d(1, 1);
            j.h[(1, 0)] += d(1, 1);
            j.h[(1, 1)] += d(0, 2);
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let ny = i + k + l;
                        j.t[i][k][l] += d(3 - ny, ny);
                    }
                }
            }
        }
        if self.dim == 1 {
            j.g[1] = 0.0;
            j.h[(0, 1)] = 0.0;
            j.h[(1, 0)] = 0.0;
            j.h[(1, 1)] = 0.0;
            let t000 = j.t[0][0][0];
            j.t = [[[0.0; 2]; 2]; 2];
            j.t[0][0][0] = t000;
        }
        j
    }

    fn derivative_bounds(&self, b: &BoxDomain) -> [f64; 4] {
        // triangle inequality over monomials, each bounded by its sup on the box;
        // tensors bounded by their Frobenius norms
        let amax = b.lo(0).abs().max(b.hi(0).abs());
        let bmax = if self.dim == 2 { b.lo(1).abs().max(b.hi(1).abs()) } else { 0.0 };
        let mut out = [0.0; 4];
        for &(c, ex, ey) in &self.terms {
            let a = Polynomial::mono(ex, amax).map(f64::abs);
            let bb = if self.dim == 2 { Polynomial::mono(ey, bmax).map(f64::abs) } else { [1.0, 0.0, 0.0, 0.0] };
            for (order, o) in out.iter_mut().enumerate() {
                let mut s2 = 0.0;
                for ny in 0..=order {
                    let mult = binom(order, ny) as f64;
                    let v = c.abs() * a[order - ny] * bb[ny];
                    s2 += mult * v * v;
                }
                *o += s2.sqrt();
            }
        }
        out
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

fn binom(n: usize, k: usize) -> usize {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

/// `amp · sin(<k, x> + phase)`.
#[derive(Debug, Clone)]
pub struct Sine {
    pub dim: usize,
    pub k: Vector2<f64>,
    pub phase: f64,
    pub amp: f64,
}

impl Sine {
    pub fn new1(freq: f64) -> Self {
        Sine { dim: 1, k: Vector2::new(freq, 0.0), phase: 0.0, amp: 1.0 }
    }

    pub fn new2(kx: f64, ky: f64) -> Self {
        Sine { dim: 2, k: Vector2::new(kx, ky), phase: 0.0, amp: 1.0 }
    }
}

impl SmoothFunction for Sine {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &Point) -> Jet {
        let arg = Jet::coordinate(0, x.get(0))
            .scale(self.k.x)
            .add(&Jet::coordinate(1, x.get(1)).scale(self.k.y))
            .add(&Jet::constant(self.phase));
        let (s, c) = arg.v.sin_cos();
        arg.compose([s, c, -s, -c]).scale(self.amp)
    }

    fn derivative_bounds(&self, _b: &BoxDomain) -> [f64; 4] {
        let k = self.k.norm();
        [self.amp, self.amp * k, self.amp * k * k, self.amp * k * k * k]
    }

    fn name(&self) -> String {
        "sine".into()
    }
}

/// `amp · exp(−|x − c|² / (2σ²))`.
#[derive(Debug, Clone)]
pub struct GaussianBump {
    pub center: Point,
    pub sigma: f64,
    pub amp: f64,
}

impl GaussianBump {
    pub fn new(center: Point, sigma: f64) -> Self {
        GaussianBump { center, sigma, amp: 1.0 }
    }
}

/// sup_t |t^3 − 3t| e^{−t²/2}, attained at the smaller positive root of t^4 − 6t^2 + 3.
fn gaussian_third_sup() -> f64 {
    let t = (3.0 - 6f64.sqrt()).sqrt();
    (t * t * t - 3.0 * t).abs() * (-0.5 * t * t).exp()
}

impl SmoothFunction for GaussianBump {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn jet(&self, x: &Point) -> Jet {
        let s2 = self.sigma * self.sigma;
        let mut r2 = Jet::constant(0.0);
        for k in 0..self.dim() {
            let z = Jet::coordinate(k, x.get(k)).add(&Jet::constant(-self.center.get(k)));
            r2 = r2.add(&z.mul(&z));
        }
        let arg = r2.scale(-0.5 / s2);
        let e = arg.v.exp();
        arg.compose([e; 4]).scale(self.amp)
    }

    fn derivative_bounds(&self, _b: &BoxDomain) -> [f64; 4] {
        // radial profile: directional derivatives of the 1D Gaussian bound the tensor norms
        let s = self.sigma;
        [self.amp, self.amp * (-0.5f64).exp() / s, self.amp / (s * s), self.amp * gaussian_third_sup() / (s * s * s)]
    }

    fn support_radius(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String {
        "gaussian_bump".into()
    }
}

/// `|x − c|^β`, a Hölder function with seminorm 1 for β ≤ 1. Derivatives at `c`
/// are reported as 0.
#[derive(Debug, Clone)]
pub struct AbsPow {
    pub center: Point,
    pub beta: f64,
}

impl SmoothFunction for AbsPow {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn jet(&self, x: &Point) -> Jet {
        let z = x.sub(&self.center);
        let r = z.norm();
        if r == 0.0 {
            return Jet::constant(0.0);
        }
        let mut r2 = Jet::constant(0.0);
        for k in 0..self.dim() {
            let zk = Jet::coordinate(k, x.get(k)).add(&Jet::constant(-self.center.get(k)));
            r2 = r2.add(&zk.mul(&zk));
        }
        let p = 0.5 * self.beta;
        let s = r2.v;
        r2.compose([
            s.powf(p),
            p * s.powf(p - 1.0),
            p * (p - 1.0) * s.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * s.powf(p - 3.0),
        ])
    }

    fn derivative_bounds(&self, b: &BoxDomain) -> [f64; 4] {
        let r = max_dist(b, &self.center);
        if self.beta >= 1.0 {
            let inf = f64::INFINITY;
            [r.powf(self.beta), self.beta * r.powf(self.beta - 1.0), inf, inf]
        } else {
            [r.powf(self.beta), f64::INFINITY, f64::INFINITY, f64::INFINITY]
        }
    }

    fn holder_seminorm(&self, k: usize, alpha: f64, b: &BoxDomain) -> f64 {
        if k == 0 && (alpha - self.beta).abs() < 1e-15 && self.beta <= 1.0 {
            1.0
        } else if k == 0 && alpha < self.beta && self.beta <= 1.0 {
            // |t|^β is α-Hölder on a set of diameter D with constant D^{β−α}
            let diam = (0..b.dim()).map(|i| b.width(i).powi(2)).sum::<f64>().sqrt();
            diam.powf(self.beta - alpha)
        } else {
            let m = self.derivative_bounds(b);
            if alpha == 0.0 {
                m[k]
            } else {
                f64::INFINITY
            }
        }
    }

    fn name(&self) -> String {
        format!("abs_pow({})", self.beta)
    }
}

/// `|x − c|^2 · φ₀(|x − c| / r)`: a nonnegative well vanishing at `c`, supported in B_{2r}(c).
#[derive(Debug, Clone)]
pub struct LocalizedWell {
    pub center: Point,
    pub radius: f64,
}

impl SmoothFunction for LocalizedWell {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn jet(&self, x: &Point) -> Jet {
        let mut r2 = Jet::constant(0.0);
        for k in 0..self.dim() {
            let zk = Jet::coordinate(k, x.get(k)).add(&Jet::constant(-self.center.get(k)));
            r2 = r2.add(&zk.mul(&zk));
        }
        // φ₀(sqrt(s)/r) as a function of s = |x−c|², smooth since φ₀ ≡ 1 near 0
        let r = self.radius;
        let s = r2.v;
        let cut = if s.sqrt() <= r {
            Jet::constant(1.0)
        } else {
            let q = s.sqrt();
            let f = phi0(q / r);
            // derivatives of t(s) = sqrt(s)/r
            let t1 = 0.5 / (r * q);
            let t2 = -0.25 / (r * q * q * q);
            let t3 = 0.375 / (r * q.powi(5));
            r2.compose([
                f[0],
                f[1] * t1,
                f[2] * t1 * t1 + f[1] * t2,
                f[3] * t1 * t1 * t1 + 3.0 * f[2] * t1 * t2 + f[1] * t3,
            ])
        };
        r2.mul(&cut)
    }

    fn derivative_bounds(&self, _b: &BoxDomain) -> [f64; 4] {
        // bounds obtained by sampling the radial profile densely on its support
        let mut m = [0.0f64; 4];
        let n = 4000;
        for i in 0..=n {
            let q = 2.0 * self.radius * i as f64 / n as f64;
            let mut c = self.center.coords().to_vec();
            c[0] += q;
            let j = self.jet(&Point::from_slice(&c).expect("dim 1 or 2"));
            m[0] = m[0].max(j.v.abs());
            m[1] = m[1].max(j.g.norm());
            m[2] = m[2].max(sym_norm(&j.h));
            m[3] = m[3].max(j.third_norm());
        }
        m.map(|v| v * 1.05)
    }

    fn support_radius(&self) -> Option<f64> {
        Some(2.0 * self.radius)
    }

    fn name(&self) -> String {
        "localized_well".into()
    }
}

/// `(1 − |x − c|²/r²)⁴₊`: C³ with support the closed ball B_r(c).
#[derive(Debug, Clone)]
pub struct CompactBump {
    pub center: Point,
    pub radius: f64,
}

impl SmoothFunction for CompactBump {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn jet(&self, x: &Point) -> Jet {
        let mut r2 = Jet::constant(0.0);
        for k in 0..self.dim() {
            let z = Jet::coordinate(k, x.get(k)).add(&Jet::constant(-self.center.get(k)));
            r2 = r2.add(&z.mul(&z));
        }
        let s = r2.scale(-1.0 / (self.radius * self.radius)).add(&Jet::constant(1.0));
        if s.v <= 0.0 {
            return Jet::constant(0.0);
        }
        let t = s.v;
        s.compose([t.powi(4), 4.0 * t.powi(3), 12.0 * t * t, 24.0 * t])
    }

    fn derivative_bounds(&self, _b: &BoxDomain) -> [f64; 4] {
        // radial profile p(q) = (1 − q²/r²)⁴ sampled on [0, r]
        let r = self.radius;
        let n = 4000;
        let mut m = [0.0f64; 4];
        for i in 0..=n {
            let q = r * i as f64 / n as f64;
            let mut c = self.center.coords().to_vec();
            c[0] += q;
            let j = self.jet(&Point::from_slice(&c).expect("dim 1 or 2"));
            m[0] = m[0].max(j.v.abs());
            m[1] = m[1].max(j.g.norm());
            m[2] = m[2].max(sym_norm(&j.h));
            m[3] = m[3].max(j.third_norm());
        }
        m.map(|v| v * 1.05)
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.radius)
    }

    fn name(&self) -> String {
        "compact_bump".into()
    }
}

/// Test-function zoo by name: affine, quadratic, sine, gaussian_bump, abs_pow.
pub fn zoo_function(name: &str, dim: usize, beta: Option<f64>) -> Result<Box<dyn SmoothFunction>> {
    let center = if dim == 1 { Point::new1(0.5) } else { Point::new2(0.5, 0.5) };
    Ok(match name {
        "affine" => Box::new(Polynomial::affine(0.3, &[1.0, -0.5][..dim])),
        "quadratic" => Box::new(Polynomial::quadratic(Matrix2::identity(), &Point::from_slice(&vec![0.0; dim])?)),
        "sine" => Box::new(if dim == 1 { Sine::new1(1.0) } else { Sine::new2(1.0, 1.0) }),
        "gaussian_bump" => Box::new(GaussianBump::new(center, 0.15)),
        "abs_pow" => Box::new(AbsPow { center, beta: beta.unwrap_or(0.5) }),
        other => return Err(Error::InvalidParams(format!("unknown test function {other}"))),
    })
}

// ---------------------------------------------------------------------------
// cutoffs: each returns [f, f', f'', f''']

/// C² smoothstep 6t⁵ − 15t⁴ + 10t³ clamped to [0,1].
pub fn smoothstep2(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        [0.0; 4]
    } else if t >= 1.0 {
        [1.0, 0.0, 0.0, 0.0]
    } else {
        let t2 = t * t;
        [
            (t2 * t * (10.0 - 15.0 * t + 6.0 * t2)).min(1.0),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
            360.0 * t2 - 360.0 * t + 60.0,
        ]
    }
}

/// C³ smoothstep −20t⁷ + 70t⁶ − 84t⁵ + 35t⁴ clamped to [0,1].
pub fn smoothstep3(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        [0.0; 4]
    } else if t >= 1.0 {
        [1.0, 0.0, 0.0, 0.0]
    } else {
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        [
            (t4 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3)).min(1.0),
            140.0 * t3 * (1.0 - t).powi(3),
            420.0 * t2 * (1.0 - t).powi(2) * (1.0 - 2.0 * t),
            -4200.0 * t4 + 8400.0 * t3 - 5040.0 * t2 + 840.0 * t,
        ]
    }
}

fn chain_affine(f: [f64; 4], a: f64) -> [f64; 4] {
    [f[0], f[1] * a, f[2] * a * a, f[3] * a * a * a]
}

/// ρ: identity on [0,1), the blend 1 + t − t³ + t⁴/2 (t = s−1) on [1,2], 3/2 beyond.
pub fn rho(s: f64) -> [f64; 4] {
    if s < 1.0 {
        [s, 1.0, 0.0, 0.0]
    } else if s <= 2.0 {
        let t = s - 1.0;
        [
            1.0 + t - t * t * t + 0.5 * t * t * t * t,
            (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t),
            6.0 * t * (t - 1.0),
            12.0 * t - 6.0,
        ]
    } else {
        [1.5, 0.0, 0.0, 0.0]
    }
}

/// Radius of the ball whose indicator the drift cutoff smooths.
pub const R0: f64 = 1.0;

/// η^ε as a function of the distance d = d(x,y): S((r₀ + 2ε − d)/ε).
pub fn eta(eps: f64, d: f64) -> [f64; 4] {
    chain_affine(smoothstep2((R0 + 2.0 * eps - d) / eps), -1.0 / eps)
}

/// η̃^ε as a function of the distance: S((2ε − d)/ε).
pub fn eta_tilde(eps: f64, d: f64) -> [f64; 4] {
    chain_affine(smoothstep2((2.0 * eps - d) / eps), -1.0 / eps)
}

/// φ₀(t) = S(2 − |t|): 1 on [−1,1], 0 outside [−2,2].
pub fn phi0(t: f64) -> [f64; 4] {
    let a = t.abs();
    let f = smoothstep2(2.0 - a);
    if t >= 0.0 {
        chain_affine(f, -1.0)
    } else {
        f
    }
}

/// The corrector ramp: t on [0,½], ½ + g(τ)/2 with τ = 2(t−½) and
/// g(τ) = τ + 4τ³ − 7τ⁴ + 3τ⁵ on [½,1], and 1 beyond.
pub fn ramp(t: f64) -> [f64; 4] {
    if t <= 0.5 {
        [t, 1.0, 0.0, 0.0]
    } else if t >= 1.0 {
        [1.0, 0.0, 0.0, 0.0]
    } else {
        let u = 2.0 * (t - 0.5);
        let u2 = u * u;
        let g = u + 4.0 * u2 * u - 7.0 * u2 * u2 + 3.0 * u2 * u2 * u;
        let g1 = 1.0 + 12.0 * u2 - 28.0 * u2 * u + 15.0 * u2 * u2;
        let g2 = 24.0 * u - 84.0 * u2 + 60.0 * u2 * u;
        let g3 = 24.0 - 168.0 * u + 180.0 * u2;
        // d/dt = 2 d/dτ
        [0.5 + 0.5 * g, g1, 2.0 * g2, 4.0 * g3]
    }
}

// ---------------------------------------------------------------------------

/// l(p, y; x) = <p, x − y>.
pub fn linear_poly(p: &[f64], y: &Point, x: &Point) -> Result<f64> {
    if p.len() != y.dim() || x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), got: p.len().max(x.dim()) });
    }
    Ok(p.iter().enumerate().map(|(k, pk)| pk * (x.get(k) - y.get(k))).sum())
}

/// q(D, y; x) = ½ <D (x − y), x − y>; D must be symmetric.
pub fn quad_poly(d: &Matrix2<f64>, y: &Point, x: &Point) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), got: x.dim() });
    }
    let asym = (d[(0, 1)] - d[(1, 0)]).abs();
    if asym > 1e-12 * (1.0 + d.abs().max()) {
        return Err(Error::Nonsymmetric(asym));
    }
    let z = x.sub(y);
    Ok(0.5 * z.dot(&(d * z)))
}

/// The ε-Taylor polynomial of `u` at `x`, evaluated at `y`.
pub fn epsilon_taylor(u: &dyn SmoothFunction, x: &Point, eps: f64, cls: &HolderClass, y: &Point) -> f64 {
    let j = u.jet(x);
    epsilon_taylor_from_jet(&j, x, eps, cls, y)
}

pub fn epsilon_taylor_from_jet(j: &Jet, x: &Point, eps: f64, cls: &HolderClass, y: &Point) -> f64 {
    let z = y.sub(x);
    let d = z.norm();
    let mut v = j.v;
    if cls.taylor_order() >= 1 {
        v += eta(eps, d)[0] * j.g.dot(&z);
    }
    if cls.taylor_order() >= 2 {
        v += eta_tilde(eps, d)[0] * 0.5 * z.dot(&(j.h * z));
    }
    v
}

/// Order of the Taylor expansion subtracted in a remainder check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorForm {
    Zeroth,
    First,
    Second,
}

impl TaylorForm {
    fn order(&self) -> usize {
        match self {
            TaylorForm::Zeroth => 0,
            TaylorForm::First => 1,
            TaylorForm::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderReport {
    pub max_ratio: f64,
    pub declared_seminorm: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Samples the ball B_radius(x0) and reports max |remainder| / d^β against the
/// declared seminorm of the top derivative; fails above 1.05 × that seminorm.
/// The form fixes the subtracted expansion; β − order must lie in (0, 1].
pub fn taylor_remainder_check(
    u: &dyn SmoothFunction,
    x0: &Point,
    radius: f64,
    cls: &HolderClass,
    form: TaylorForm,
    b: &BoxDomain,
) -> Result<RemainderReport> {
    let k = form.order();
    let alpha = cls.beta - k as f64;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ClassMismatch(format!(
            "a remainder of order {k} needs beta in ({k}, {}], got {}",
            k + 1,
            cls.beta
        )));
    }
    let j0 = u.jet(x0);
    let mut pts = Vec::new();
    if x0.dim() == 1 {
        for i in 1..=1000 {
            let r = radius * i as f64 / 1000.0;
            pts.push(Point::new1(x0.get(0) + r));
            pts.push(Point::new1(x0.get(0) - r));
        }
    } else {
        for i in 1..=60 {
            let r = radius * i as f64 / 60.0;
            for a in 0..64 {
                let th = 2.0 * std::f64::consts::PI * a as f64 / 64.0;
                pts.push(Point::new2(x0.get(0) + r * th.cos(), x0.get(1) + r * th.sin()));
            }
        }
    }
    let mut max_ratio: f64 = 0.0;
    for x in &pts {
        let z = x.sub(x0);
        let d = z.norm();
        let mut rem = u.value(x) - j0.v;
        if k >= 1 {
            rem -= j0.g.dot(&z);
        }
        if k >= 2 {
            rem -= 0.5 * z.dot(&(j0.h * z));
        }
        max_ratio = max_ratio.max(rem.abs() / d.powf(cls.beta));
    }
    let declared = u.holder_seminorm(k, alpha, b);
    Ok(RemainderReport {
        max_ratio,
        declared_seminorm: declared,
        samples: pts.len(),
        // the absolute slack absorbs rounding in remainders of exact polynomials
        passed: max_ratio <= 1.05 * declared + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_scalar(f: fn(f64) -> [f64; 4], t: f64) {
        let e = 1e-6;
        let v = f(t);
        let p = f(t + e);
        let m = f(t - e);
        for i in 0..3 {
            let fd = (p[i] - m[i]) / (2.0 * e);
            assert!(
                (fd - v[i + 1]).abs() < 1e-4 * (1.0 + v[i + 1].abs()),
                "order {} at {t}: {fd} vs {}",
                i + 1,
                v[i + 1]
            );
        }
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        for &t in &[0.1, 0.3, 0.55, 0.77, 0.93] {
            fd_scalar(smoothstep2, t);
            fd_scalar(smoothstep3, t);
        }
        for &s in &[0.5, 1.2, 1.5, 1.9, 2.5] {
            fd_scalar(rho, s);
        }
        for &t in &[0.2, 0.6, 0.75, 0.9, 1.3] {
            fd_scalar(ramp, t);
        }
        for &t in &[-1.7, -1.2, 0.3, 1.4, 1.8] {
            fd_scalar(phi0, t);
        }
    }

    #[test]
    fn cutoff_invariants_sampled() {
        let n = 4000;
        let mut prev_ramp = 0.0;
        for i in 0..=n {
            let s = 4.0 * i as f64 / n as f64;
            let r = rho(s);
            if s < 1.0 {
                assert_eq!(r[0], s);
            }
            if s >= 2.0 {
                assert_eq!(r[0], 1.5);
            }
            assert!(r[1].abs() + r[2].abs() <= 4.0);
            let p = phi0(s - 2.0);
            assert!((0.0..=1.0).contains(&p[0]));
            if (s - 2.0).abs() <= 1.0 {
                assert_eq!(p[0], 1.0);
            }
            let q = phi0(s);
            if s > 2.0 {
                assert_eq!(q[0], 0.0);
            }
            let t = ramp(s / 2.0);
            assert!(t[0] >= prev_ramp);
            prev_ramp = t[0];
            if s / 2.0 <= 0.5 {
                assert_eq!(t[0], s / 2.0);
            }
            if s / 2.0 >= 1.0 {
                assert_eq!(t[0], 1.0);
            }
        }
        // ρ is C² across its breakpoints
        for &(a, b) in &[(1.0 - 1e-12, 1.0), (2.0, 2.0 + 1e-12)] {
            let (l, r) = (rho(a), rho(b));
            for i in 0..3 {
                assert!((l[i] - r[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eta_bounds_indicators_and_decreases_in_eps() {
        for i in 0..=3000 {
            let d = 3.0 * i as f64 / 3000.0;
            for &(e1, e2) in &[(0.5, 0.25), (0.2, 0.1), (0.9, 0.3)] {
                let (a1, a2) = (eta(e1, d)[0], eta(e2, d)[0]);
                assert!(a2 <= a1);
                assert!((0.0..=1.0).contains(&a1));
                if d <= R0 {
                    assert_eq!(a1, 1.0);
                }
                let (b1, b2) = (eta_tilde(e1, d)[0], eta_tilde(e2, d)[0]);
                assert!(b2 <= b1);
                if d <= e1 {
                    assert_eq!(b1, 1.0);
                }
            }
        }
    }

    #[test]
    fn linear_and_quadratic_examples() {
        let o = Point::new1(0.0);
        assert_eq!(linear_poly(&[2.0], &o, &Point::new1(0.5)).unwrap(), 1.0);
        assert_eq!(linear_poly(&[3.0], &Point::new1(0.2), &Point::new1(0.2)).unwrap(), 0.0);
        let o2 = Point::new2(0.0, 0.0);
        assert_eq!(linear_poly(&[1.0, 1.0], &o2, &Point::new2(0.25, 0.25)).unwrap(), 0.5);
        assert!(matches!(linear_poly(&[1.0, 1.0], &o, &Point::new1(1.0)), Err(Error::DimensionMismatch { .. })));
        let h = 0.1;
        let d = Matrix2::new(2.0, 0.0, 0.0, 0.0);
        assert!((quad_poly(&d, &o, &Point::new1(h)).unwrap() - h * h).abs() < 1e-16);
        assert_eq!(quad_poly(&Matrix2::identity(), &o2, &Point::new2(1.0, 0.0)).unwrap(), 0.5);
        assert_eq!(quad_poly(&Matrix2::identity(), &o2, &o2).unwrap(), 0.0);
        let ns = Matrix2::new(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(quad_poly(&ns, &o2, &o2), Err(Error::Nonsymmetric(_))));
    }

    #[test]
    fn quad_poly_reproduces_hessian() {
        let d = Matrix2::new(1.3, -0.4, -0.4, 2.1);
        let y = Point::new2(0.2, -0.1);
        let step = 1e-4;
        let q = |x: f64, z: f64| quad_poly(&d, &y, &Point::new2(x, z)).unwrap();
        let (a, b) = (y.get(0), y.get(1));
        let hxx = (q(a + step, b) - 2.0 * q(a, b) + q(a - step, b)) / (step * step);
        let hyy = (q(a, b + step) - 2.0 * q(a, b) + q(a, b - step)) / (step * step);
        let hxy = (q(a + step, b + step) - q(a + step, b - step) - q(a - step, b + step) + q(a - step, b - step))
            / (4.0 * step * step);
        let scale = 1e-6 * d.abs().max();
        assert!((hxx - d[(0, 0)]).abs() < scale);
        assert!((hyy - d[(1, 1)]).abs() < scale);
        assert!((hxy - d[(0, 1)]).abs() < scale);
    }

    #[test]
    fn epsilon_taylor_branches() {
        let u = Polynomial::quadratic(Matrix2::new(1.0, 0.0, 0.0, 0.0), &Point::new1(0.0));
        let x = Point::new1(0.3);
        let half = HolderClass::holder(0.5).unwrap();
        for &y in &[0.0, 0.7, 2.0] {
            assert_eq!(epsilon_taylor(&u, &x, 0.2, &half, &Point::new1(y)), u.value(&x));
        }
        for cls in [half, HolderClass::c1alpha(0.5).unwrap(), HolderClass::c2()] {
            assert_eq!(epsilon_taylor(&u, &x, 0.2, &cls, &x), u.value(&x));
        }
        let o = Point::new1(0.0);
        let eps = 0.25;
        for &y in &[0.05, -0.1, 0.2, 0.25] {
            let v = epsilon_taylor(&u, &o, eps, &HolderClass::c2(), &Point::new1(y));
            assert!((v - 0.5 * y * y).abs() < 1e-16);
        }
    }

    #[test]
    fn taylor_remainder_examples() {
        let b = BoxDomain::interval(-2.0, 2.0).unwrap();
        let x0 = Point::new1(0.1);
        let aff = Polynomial::affine(1.0, &[2.0]);
        let r =
            taylor_remainder_check(&aff, &x0, 0.5, &HolderClass::c1alpha(0.5).unwrap(), TaylorForm::First, &b).unwrap();
        assert!(r.max_ratio < 1e-9 && r.passed);
        let q = Polynomial::quadratic(Matrix2::new(1.0, 0.0, 0.0, 0.0), &Point::new1(0.0));
        let r = taylor_remainder_check(&q, &x0, 0.5, &HolderClass::c11(), TaylorForm::First, &b).unwrap();
        assert!(r.max_ratio <= 0.5 + 1e-12 && r.passed);
        assert_eq!(r.declared_seminorm, 1.0);
        let s = Sine::new1(1.0);
        let c3 = HolderClass::new(3.0, HolderVariant::C2Alpha).unwrap();
        let r = taylor_remainder_check(&s, &x0, 0.5, &c3, TaylorForm::Second, &b).unwrap();
        assert!(r.max_ratio <= 1.0 / 6.0 + 1e-9 && r.passed);
        assert!(taylor_remainder_check(&s, &x0, 0.5, &HolderClass::c11(), TaylorForm::Second, &b).is_err());
    }

    #[test]
    fn zoo_jets_match_finite_differences() {
        let fns: Vec<Box<dyn SmoothFunction>> = vec![
            Box::new(Sine::new2(1.3, -0.7)),
            Box::new(GaussianBump::new(Point::new2(0.4, 0.6), 0.3)),
            Box::new(Polynomial::new(2, vec![(1.0, 3, 0), (2.0, 1, 1), (-0.5, 0, 2)], "cubic")),
            Box::new(AbsPow { center: Point::new2(0.0, 0.0), beta: 1.5 }),
            Box::new(LocalizedWell { center: Point::new2(0.5, 0.5), radius: 0.2 }),
            Box::new(CompactBump { center: Point::new2(0.5, 0.5), radius: 0.4 }),
        ];
        let e = 1e-5;
        for f in &fns {
            for &(x, y) in &[(0.31, 0.72), (0.8, 0.45), (0.55, 0.3)] {
                let j = f.jet(&Point::new2(x, y));
                for k in 0..2 {
                    let (dx, dy) = if k == 0 { (e, 0.0) } else { (0.0, e) };
                    let p = f.jet(&Point::new2(x + dx, y + dy));
                    let m = f.jet(&Point::new2(x - dx, y - dy));
                    assert!(((p.v - m.v) / (2.0 * e) - j.g[k]).abs() < 1e-5, "{}", f.name());
                    for i in 0..2 {
                        assert!(((p.g[i] - m.g[i]) / (2.0 * e) - j.h[(i, k)]).abs() < 1e-4, "{}", f.name());
                        for l in 0..2 {
                            let fd = (p.h[(i, l)] - m.h[(i, l)]) / (2.0 * e);
                            assert!((fd - j.t[i][l][k]).abs() < 1e-3 * (1.0 + fd.abs()), "{}", f.name());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn derivative_bounds_dominate_samples() {
        let b = BoxDomain::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let fns: Vec<Box<dyn SmoothFunction>> = vec![
            Box::new(Sine::new2(2.0, 1.0)),
            Box::new(GaussianBump::new(Point::new2(0.5, 0.5), 0.15)),
            Box::new(Polynomial::new(2, vec![(1.0, 3, 0), (2.0, 1, 1)], "cubic")),
            Box::new(LocalizedWell { center: Point::new2(0.5, 0.5), radius: 0.2 }),
            Box::new(CompactBump { center: Point::new2(0.5, 0.5), radius: 0.3 }),
        ];
        for f in &fns {
            let m = f.derivative_bounds(&b);
            for i in 0..=40 {
                for k in 0..=40 {
                    let j = f.jet(&Point::new2(i as f64 / 40.0, k as f64 / 40.0));
                    assert!(j.v.abs() <= m[0] * (1.0 + 1e-12));
                    assert!(j.g.norm() <= m[1] * (1.0 + 1e-12));
                    assert!(sym_norm(&j.h) <= m[2] * (1.0 + 1e-12));
                    assert!(j.third_norm() <= m[3] * (1.0 + 1e-9), "{}", f.name());
                }
            }
        }
    }

    #[test]
    fn gamma_values() {
        assert_eq!(HolderClass::holder(0.5).unwrap().gamma(), 0.5);
        assert_eq!(HolderClass::c1alpha(0.5).unwrap().gamma(), 0.5);
        assert_eq!(HolderClass::c11().gamma(), 1.0);
        assert_eq!(HolderClass::c1().gamma(), 1.0);
        assert!(HolderClass::new(1.5, HolderVariant::Holder).is_err());
    }

    proptest! {
        #[test]
        fn quad_poly_vanishes_at_base(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let d = Matrix2::new(a, b, b, c);
            let p = Point::new2(x, y);
            prop_assert_eq!(quad_poly(&d, &p, &p).unwrap(), 0.0);
        }

        #[test]
        fn remainder_of_sine_within_declared_seminorm(x0 in -1.0f64..1.0, freq in 0.5f64..3.0) {
            let b = BoxDomain::interval(-3.0, 3.0).unwrap();
            let s = Sine::new1(freq);
            let r = taylor_remainder_check(&s, &Point::new1(x0), 0.5, &HolderClass::c11(), TaylorForm::First, &b).unwrap();
            prop_assert!(r.passed);
        }
    }
}
