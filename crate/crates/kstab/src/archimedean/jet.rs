//! Derivative jets of functions on `R^n`, `n <= 3`, and the one-variable profiles
//! from which symplectic potentials are assembled.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Value and derivatives up to `order` (at most 4), stored as flat tensors.
#[derive(Clone, Debug)]
pub struct Jet {
    pub n: usize,
    pub order: usize,
    pub v: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub t3: Vec<f64>,
    pub t4: Vec<f64>,
}

impl Jet {
    pub fn zero(n: usize, order: usize) -> Jet {
        let len = |k: usize| if order >= k { n.pow(k as u32) } else { 0 };
        Jet {
            n,
            order,
            v: 0.0,
            g: vec![0.0; len(1)],
            h: vec![0.0; len(2)],
            t3: vec![0.0; len(3)],
            t4: vec![0.0; len(4)],
        }
    }

    /// Adds `a * phi(<b, y> + c)` given `d[k] = phi^(k)` at the point.
    pub fn add_ridge(&mut self, a: f64, b: &[f64], d: &[f64; 5]) {
        let n = self.n;
        self.v += a * d[0];
        if self.order >= 1 {
            for i in 0..n {
                self.g[i] += a * d[1] * b[i];
            }
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    self.h[i * n + j] += a * d[2] * b[i] * b[j];
                }
            }
        }
        if self.order >= 3 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        self.t3[(i * n + j) * n + k] += a * d[3] * b[i] * b[j] * b[k];
                    }
                }
            }
        }
        if self.order >= 4 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            self.t4[((i * n + j) * n + k) * n + l] += a * d[4] * b[i] * b[j] * b[k] * b[l];
                        }
                    }
                }
            }
        }
    }

    pub fn add(&mut self, o: &Jet) {
        self.v += o.v;
        for (a, b) in self.g.iter_mut().zip(&o.g) {
            *a += b;
        }
        for (a, b) in self.h.iter_mut().zip(&o.h) {
            *a += b;
        }
        for (a, b) in self.t3.iter_mut().zip(&o.t3) {
            *a += b;
        }
        for (a, b) in self.t4.iter_mut().zip(&o.t4) {
            *a += b;
        }
    }

    pub fn hess(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.h)
    }

    /// `d/dy_k` of the Hessian.
    pub fn hess_d(&self, k: usize) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| self.t3[(i * n + j) * n + k])
    }

    /// `d^2/dy_k dy_l` of the Hessian.
    pub fn hess_dd(&self, k: usize, l: usize) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| self.t4[((i * n + j) * n + k) * n + l])
    }
}

/// Cubic spline on a uniform grid, clamped with end slopes from the cubic through
/// the four nearest samples.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    a: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(a: f64, b: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 4 || b <= a {
            return Err(Error::InvalidInput(
                "spline needs at least 4 samples on a proper interval".into(),
            ));
        }
        let h = (b - a) / (n - 1) as f64;
        let s0 = (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]) / (6.0 * h);
        let s1 = (11.0 * y[n - 1] - 18.0 * y[n - 2] + 9.0 * y[n - 3] - 2.0 * y[n - 4]) / (6.0 * h);
        // Tridiagonal system for the second derivatives (Thomas algorithm).
        let mut sub = vec![1.0; n];
        let mut diag = vec![4.0; n];
        let sup = vec![1.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0;
        diag[n - 1] = 2.0;
        rhs[0] = 6.0 / h * ((y[1] - y[0]) / h - s0);
        rhs[n - 1] = 6.0 / h * (s1 - (y[n - 1] - y[n - 2]) / h);
        for i in 1..n - 1 {
            rhs[i] = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
        }
        sub[0] = 0.0;
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(CubicSpline { a, h, y, m })
    }

    pub fn derivs(&self, z: f64) -> [f64; 5] {
        let n = self.y.len();
        let t = ((z - self.a) / self.h).floor();
        let i = (t.max(0.0) as usize).min(n - 2);
        let x0 = self.a + i as f64 * self.h;
        let (h, m0, m1, y0, y1) = (self.h, self.m[i], self.m[i + 1], self.y[i], self.y[i + 1]);
        let p = x0 + h - z;
        let q = z - x0;
        let v = m0 * p.powi(3) / (6.0 * h)
            + m1 * q.powi(3) / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * p
            + (y1 / h - m1 * h / 6.0) * q;
        let d1 = -m0 * p * p / (2.0 * h) + m1 * q * q / (2.0 * h) - (y0 / h - m0 * h / 6.0) + (y1 / h - m1 * h / 6.0);
        let d2 = m0 * p / h + m1 * q / h;
        let d3 = (m1 - m0) / h;
        [v, d1, d2, d3, 0.0]
    }
}

/// One-variable profile `phi` of a ridge term `a * phi(<b, y> + c)`.
#[derive(Clone, Debug)]
pub enum Profile {
    /// `z log z / 2`, the building block of the canonical symplectic potential.
    XLogX,
    /// `z^k`.
    Pow(i32),
    /// `e^z`.
    Exp,
    Spline(Arc<CubicSpline>),
}

impl Profile {
    pub fn derivs(&self, z: f64) -> Result<[f64; 5]> {
        Ok(match self {
            Profile::XLogX => {
                if z < 0.0 {
                    return Err(Error::Degenerate(format!("point outside the polytope (slack {z:e})")));
                }
                if z == 0.0 {
                    [0.0, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY]
                } else {
                    [
                        0.5 * z * z.ln(),
                        0.5 * (z.ln() + 1.0),
                        0.5 / z,
                        -0.5 / (z * z),
                        1.0 / (z * z * z),
                    ]
                }
            }
            Profile::Pow(k) => {
                let k = *k;
                let f = |j: i32| -> f64 {
                    if j > k {
                        return 0.0;
                    }
                    let c: f64 = (0..j).map(|i| (k - i) as f64).product();
                    c * z.powi(k - j)
                };
                [f(0), f(1), f(2), f(3), f(4)]
            }
            Profile::Exp => {
                let e = z.exp();
                [e, e, e, e, e]
            }
            Profile::Spline(s) => s.derivs(z),
        })
    }
}

/// `a * phi(<b, y> + c)`.
#[derive(Clone, Debug)]
pub struct Ridge {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
    pub profile: Profile,
}

impl Ridge {
    pub fn new(a: f64, b: Vec<f64>, c: f64, profile: Profile) -> Self {
        Ridge { a, b, c, profile }
    }

    pub fn arg(&self, y: &[f64]) -> f64 {
        self.b.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() + self.c
    }

    pub fn add_to(&self, y: &[f64], jet: &mut Jet) -> Result<()> {
        let d = self.profile.derivs(self.arg(y))?;
        jet.add_ridge(self.a, &self.b, &d);
        Ok(())
    }

    /// True when the term is convex for every admissible argument.
    pub fn is_convex(&self) -> bool {
        match &self.profile {
            Profile::XLogX | Profile::Exp => self.a >= 0.0,
            Profile::Pow(k) => *k <= 1 || (self.a >= 0.0 && k % 2 == 0),
            Profile::Spline(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior() {
        let f = |x: f64| x * x * x - x;
        let n = 201;
        let ys: Vec<f64> = (0..n).map(|i| f(i as f64 / (n - 1) as f64)).collect();
        let s = CubicSpline::new(0.0, 1.0, ys).unwrap();
        let d = s.derivs(0.5);
        assert!((d[0] - f(0.5)).abs() < 1e-7);
        assert!((d[1] - (3.0 * 0.25 - 1.0)).abs() < 1e-4);
    }

    #[test]
    fn ridge_jet_matches_finite_difference() {
        let r = Ridge::new(0.7, vec![1.0, 2.0], 0.3, Profile::XLogX);
        let y = [0.2, 0.1];
        let mut j = Jet::zero(2, 4);
        r.add_to(&y, &mut j).unwrap();
        let h = 1e-6;
        let mut jp = Jet::zero(2, 4);
        r.add_to(&[y[0] + h, y[1]], &mut jp).unwrap();
        assert!(((jp.v - j.v) / h - j.g[0]).abs() < 1e-5);
        assert!(((jp.h[3] - j.h[3]) / h - j.t3[(3) * 2]).abs() < 1e-3);
    }
}
