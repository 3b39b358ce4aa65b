//! Third-order jets of scalar functions on the plane.
//!
//! A one-dimensional function is a jet whose y-derivatives are zero; every
//! operation below preserves that.

use nalgebra::{Matrix2, Vector2};

/// Value, gradient, Hessian and symmetric third-derivative tensor at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Vector2<f64>,
    pub h: Matrix2<f64>,
    pub t: [[[f64; 2]; 2]; 2],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::constant(0.0)
    }
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: Vector2::zeros(), h: Matrix2::zeros(), t: [[[0.0; 2]; 2]; 2] }
    }

    /// The coordinate function x_k at the point `x`.
    pub fn coordinate(k: usize, xk: f64) -> Self {
        let mut j = Jet::constant(xk);
        j.g[k] = 1.0;
        j
    }

    /// Jet of the quadratic polynomial `c + <g, z> + 1/2 <H z, z>` at `z`.
    pub fn quadratic(c: f64, g: Vector2<f64>, h: Matrix2<f64>, z: Vector2<f64>) -> Self {
        Jet { v: c + g.dot(&z) + 0.5 * z.dot(&(h * z)), g: g + h * z, h, t: [[[0.0; 2]; 2]; 2] }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut t = self.t;
        for (i, ti) in t.iter_mut().enumerate() {
            for (j, tij) in ti.iter_mut().enumerate() {
                for (k, tijk) in tij.iter_mut().enumerate() {
                    *tijk += o.t[i][j][k];
                }
            }
        }
        Jet { v: self.v + o.v, g: self.g + o.g, h: self.h + o.h, t }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> Jet {
        let mut t = self.t;
        for ti in t.iter_mut() {
            for tij in ti.iter_mut() {
                for tijk in tij.iter_mut() {
                    *tijk *= a;
                }
            }
        }
        Jet { v: a * self.v, g: self.g * a, h: self.h * a, t }
    }

    /// `self += a * o`
    pub fn axpy(&mut self, a: f64, o: &Jet) {
        self.v += a * o.v;
        self.g += o.g * a;
        self.h += o.h * a;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    self.t[i][j][k] += a * o.t[i][j][k];
                }
            }
        }
    }

    /// Leibniz rule up to third order.
    pub fn mul(&self, o: &Jet) -> Jet {
        let (a, b) = (self, o);
        let v = a.v * b.v;
        let g = b.g * a.v + a.g * b.v;
        let h = b.h * a.v + a.h * b.v + a.g * b.g.transpose() + b.g * a.g.transpose();
        let mut t = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    t[i][j][k] = a.v * b.t[i][j][k]
                        + b.v * a.t[i][j][k]
                        + a.g[i] * b.h[(j, k)]
                        + a.g[j] * b.h[(i, k)]
                        + a.g[k] * b.h[(i, j)]
                        + b.g[i] * a.h[(j, k)]
                        + b.g[j] * a.h[(i, k)]
                        + b.g[k] * a.h[(i, j)];
                }
            }
        }
        Jet { v, g, h, t }
    }

    /// `f ∘ self` for a scalar `f` given by `[f, f', f'', f''']` at `self.v`.
    pub fn compose(&self, f: [f64; 4]) -> Jet {
        let g = self.g * f[1];
        let h = self.g * self.g.transpose() * f[2] + self.h * f[1];
        let mut t = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let gi = self.g[i];
                    let gj = self.g[j];
                    let gk = self.g[k];
                    t[i][j][k] = f[3] * gi * gj * gk
                        + f[2] * (self.h[(i, j)] * gk + self.h[(i, k)] * gj + self.h[(j, k)] * gi)
                        + f[1] * self.t[i][j][k];
                }
            }
        }
        Jet { v: f[0], g, h, t }
    }

    pub fn recip(&self) -> Jet {
        let s = self.v;
        self.compose([1.0 / s, -1.0 / (s * s), 2.0 / (s * s * s), -6.0 / (s * s * s * s)])
    }

    /// Operator norm of the Hessian (largest absolute eigenvalue).
    pub fn hess_norm(&self) -> f64 {
        sym_norm(&self.h)
    }

    /// Sup over unit directions of the third directional derivative, sampled on 256 directions.
    pub fn third_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..256 {
            let th = std::f64::consts::PI * a as f64 / 256.0;
            let e = [th.cos(), th.sin()];
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        s += self.t[i][j][k] * e[i] * e[j] * e[k];
                    }
                }
            }
            m = m.max(s.abs());
        }
        m
    }
}

/// Largest absolute eigenvalue of a symmetric 2x2 matrix.
pub fn sym_norm(m: &Matrix2<f64>) -> f64 {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid + rad).abs().max((mid - rad).abs())
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub fn sym_min_eig(m: &Matrix2<f64>) -> f64 {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}
