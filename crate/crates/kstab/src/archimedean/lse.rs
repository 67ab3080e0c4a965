//! Log-sum-exp potentials `u(x) = (1/beta) log sum_k exp(beta <p_k, x> + w_k)`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use super::jet::Jet;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Lse {
    pub beta: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Lse {
    pub fn new(beta: f64, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidInput("log-sum-exp needs one weight per point".into()));
        }
        let n = points[0].len();
        if points.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: 0 });
        }
        if !(beta > 0.0) || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "log-sum-exp needs beta > 0 and finite weights".into(),
            ));
        }
        Ok(Lse { beta, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| self.beta * dot(p, x) + w)
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        log_sum_exp(&self.logits(x)) / self.beta
    }

    /// Gibbs probabilities and the log partition function.
    fn probs(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let l = self.logits(x);
        let z = log_sum_exp(&l);
        let p = l.iter().map(|a| (a - z).exp()).collect();
        (p, l, z)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let (p, _, _) = self.probs(x);
        let mut g = vec![0.0; self.dim()];
        for (pk, pt) in p.iter().zip(&self.points) {
            for i in 0..g.len() {
                g[i] += pk * pt[i];
            }
        }
        g
    }

    /// Value and derivatives up to `order` from the cumulants of the Gibbs measure.
    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let n = self.dim();
        let (p, _, z) = self.probs(x);
        let mut j = Jet::zero(n, order);
        j.v = z / self.beta;
        // Centre at the dominant point so that small cumulants keep their relative accuracy.
        let dom = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
        let pd = &self.points[dom];
        let mut off = vec![0.0; n];
        for (pk, pt) in p.iter().zip(&self.points) {
            for i in 0..n {
                off[i] += pk * (pt[i] - pd[i]);
            }
        }
        let mean: Vec<f64> = (0..n).map(|i| pd[i] + off[i]).collect();
        if order >= 1 {
            j.g.copy_from_slice(&mean);
        }
        if order < 2 {
            return j;
        }
        let b = self.beta;
        let mut cov = vec![0.0; n * n];
        for (pk, pt) in p.iter().zip(&self.points) {
            let c: Vec<f64> = (0..n).map(|i| (pt[i] - pd[i]) - off[i]).collect();
            for a in 0..n {
                for bb in 0..n {
                    cov[a * n + bb] += pk * c[a] * c[bb];
                }
            }
            if order >= 3 {
                for a in 0..n {
                    for bb in 0..n {
                        for cc in 0..n {
                            j.t3[(a * n + bb) * n + cc] += b * b * pk * c[a] * c[bb] * c[cc];
                        }
                    }
                }
            }
            if order >= 4 {
                for a in 0..n {
                    for bb in 0..n {
                        for cc in 0..n {
                            for d in 0..n {
                                j.t4[((a * n + bb) * n + cc) * n + d] += b * b * b * pk * c[a] * c[bb] * c[cc] * c[d];
                            }
                        }
                    }
                }
            }
        }
        for (h, c) in j.h.iter_mut().zip(&cov) {
            *h = b * c;
        }
        if order >= 4 {
            for a in 0..n {
                for bb in 0..n {
                    for cc in 0..n {
                        for d in 0..n {
                            let s = cov[a * n + bb] * cov[cc * n + d]
                                + cov[a * n + cc] * cov[bb * n + d]
                                + cov[a * n + d] * cov[bb * n + cc];
                            j.t4[((a * n + bb) * n + cc) * n + d] -= b * b * b * s;
                        }
                    }
                }
            }
        }
        j
    }

    pub fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        self.jet(x, 2).hess()
    }

    /// `log det D^2 u`, switching to a Cauchy-Binet sum in log space when the
    /// covariance is too degenerate for a direct determinant.
    pub fn log_det_hess(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let (_, l, z) = self.probs(x);
        let live: Vec<usize> = (0..l.len()).filter(|&k| l[k] - z > -1400.0).collect();
        // the positive Cauchy-Binet sum is smooth in x; the direct determinant only
        // stands in when there are too many subsets
        let subsets = (0..=n).fold(1.0, |acc, i| acc * (live.len() - i) as f64 / (i + 1) as f64);
        if subsets > 20_000.0 {
            let h = self.hess(x);
            let d = h.determinant();
            let tr = h.trace() / n as f64;
            if d > 1e-6 * tr.powi(n as i32) && d > 1e-280 {
                return d.ln();
            }
        }
        let mut terms = Vec::new();
        for s in live.iter().copied().combinations(n + 1) {
            let m = DMatrix::from_fn(n + 1, n + 1, |r, c| if c == 0 { 1.0 } else { self.points[s[r]][c - 1] });
            let v = m.determinant();
            if v != 0.0 {
                terms.push(s.iter().map(|&k| l[k] - z).sum::<f64>() + 2.0 * v.abs().ln());
            }
        }
        if terms.is_empty() {
            return f64::NEG_INFINITY;
        }
        n as f64 * self.beta.ln() + log_sum_exp(&terms)
    }

    /// Solves `grad u(x) = y` for `y` in the interior of the convex hull of the points.
    pub fn solve_grad(&self, y: &[f64], start: Option<&[f64]>) -> Result<Vec<f64>> {
        if self.dim() == 1 {
            return self
                .solve_grad_1d(y[0], start.map(|s| s[0]).unwrap_or(0.0))
                .map(|x| vec![x]);
        }
        let basis = DMatrix::identity(self.dim(), self.dim());
        self.newton(y, &basis, start)
    }

    fn solve_grad_1d(&self, y: f64, x0: f64) -> Result<f64> {
        let g = |x: f64| self.grad(&[x])[0] - y;
        let lo_p = self.points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi_p = self.points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        if !(y > lo_p && y < hi_p) {
            return Err(Error::Degenerate(format!(
                "gradient value {y} outside ({lo_p}, {hi_p})"
            )));
        }
        let (mut lo, mut hi);
        let mut step = 1.0;
        if g(x0) < 0.0 {
            lo = x0;
            hi = x0 + step;
            while g(hi) < 0.0 {
                lo = hi;
                step *= 2.0;
                hi += step;
                if step > 1e300 {
                    return Err(Error::Degenerate("gradient bracket diverged".into()));
                }
            }
        } else {
            hi = x0;
            lo = x0 - step;
            while g(lo) > 0.0 {
                hi = lo;
                step *= 2.0;
                lo -= step;
                if step > 1e300 {
                    return Err(Error::Degenerate("gradient bracket diverged".into()));
                }
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..400 {
            let j = self.jet(&[x], 2);
            let r = j.g[0] - y;
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - r / j.h[0];
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo) <= 4.0 * f64::EPSILON * x.abs().max(1.0) || next == x {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Damped Newton for `min_t u(x0 + B t) - <x0 + B t, y>` over the column span of `B`.
    fn newton(&self, y: &[f64], basis: &DMatrix<f64>, start: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.dim();
        let k = basis.ncols();
        let mut x = DVector::from_vec(start.map(|s| s.to_vec()).unwrap_or_else(|| vec![0.0; n]));
        // u(x) - <x, y> with the points moved by -y, so the residual has no cancellation
        let sh = Lse {
            beta: self.beta,
            points: self
                .points
                .iter()
                .map(|k| k.iter().zip(y).map(|(a, b)| a - b).collect())
                .collect(),
            weights: self.weights.clone(),
        };
        let obj = |x: &DVector<f64>| sh.value(x.as_slice());
        let mut f = obj(&x);
        let mut polish = 0;
        for _ in 0..500 {
            let j = sh.jet(x.as_slice(), 2);
            let g = basis.transpose() * DVector::from_vec(j.g.clone());
            let h = basis.transpose() * j.hess() * basis;
            let hreg = &h + DMatrix::identity(k, k) * (1e-300f64).max(h.trace().abs() * 1e-14);
            let step = match hreg.clone().cholesky() {
                Some(c) => c.solve(&g),
                None => g.clone(),
            };
            let dec = g.dot(&step);
            let dir = basis * step;
            if !(dec > 1e-30) || dir.amax() <= 1e-15 * (1.0 + x.amax()) {
                return Ok(x.as_slice().to_vec());
            }
            // Below the resolution of the objective, take plain Newton steps.
            if dec < 1e-10 * (1.0 + f.abs()) {
                polish += 1;
                x -= &dir;
                if polish >= 6 {
                    return Ok(x.as_slice().to_vec());
                }
                continue;
            }
            let mut t = 1.0;
            loop {
                let cand = &x - &dir * t;
                let fc = obj(&cand);
                if fc <= f - 0.25 * t * dec || t < 1e-20 {
                    if t < 1e-20 || cand == x {
                        return Ok(x.as_slice().to_vec());
                    }
                    x = cand;
                    f = fc;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::Degenerate(format!(
            "Newton iteration for the gradient map did not converge at {y:?}"
        )))
    }

    /// Restriction to the points with the given indices.
    pub fn restrict(&self, idx: &[usize]) -> Lse {
        Lse {
            beta: self.beta,
            points: idx.iter().map(|&k| self.points[k].clone()).collect(),
            weights: idx.iter().map(|&k| self.weights[k]).collect(),
        }
    }

    /// `sup_x <x, y> - u(x)` for `y` in the relative interior of the hull of the points.
    pub fn conjugate(&self, y: &[f64], start: Option<&[f64]>) -> Result<f64> {
        let n = self.dim();
        if self.points.len() == 1 {
            return Ok(-self.weights[0] / self.beta);
        }
        let p0 = &self.points[0];
        let diffs: Vec<Vec<f64>> = self
            .points
            .iter()
            .skip(1)
            .map(|p| (0..n).map(|i| p[i] - p0[i]).collect())
            .collect();
        let basis = orthonormal_span(&diffs, n);
        if basis.ncols() == n {
            let x = self.solve_grad(y, start)?;
            return Ok(dot(&x, y) - self.value(&x));
        }
        let x = self.newton(y, &basis, None)?;
        Ok(dot(&x, y) - self.value(&x))
    }
}

/// Orthonormal basis of the span of `vs`, as matrix columns.
pub(crate) fn orthonormal_span(vs: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut w = DVector::from_column_slice(v);
        for c in &cols {
            let d = c.dot(&w);
            w -= c * d;
        }
        let nw = w.norm();
        if nw > 1e-10 * (1.0 + DVector::from_column_slice(v).norm()) {
            cols.push(w / nw);
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs1() -> Lse {
        Lse::new(2.0, vec![vec![0.0], vec![1.0]], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn fs_closed_forms() {
        let u = fs1();
        let x = 0.3f64;
        let e = (2.0 * x).exp();
        assert!((u.value(&[x]) - 0.5 * (1.0 + e).ln()).abs() < 1e-14);
        assert!((u.grad(&[x])[0] - e / (1.0 + e)).abs() < 1e-14);
        assert!((u.hess(&[x])[(0, 0)] - 2.0 * e / (1.0 + e).powi(2)).abs() < 1e-14);
        assert!((u.log_det_hess(&[x]) - (2.0 * e / (1.0 + e).powi(2)).ln()).abs() < 1e-12);
    }

    #[test]
    fn log_det_far_out() {
        let u = fs1();
        let x = 400.0;
        // u'' = 2 e^{2x} / (1 + e^{2x})^2 ~ 2 e^{-2x}
        assert!((u.log_det_hess(&[x]) - (2f64.ln() - 2.0 * x)).abs() < 1e-9);
    }

    #[test]
    fn gradient_inverse_and_conjugate() {
        let u = fs1();
        for &y in &[1e-12, 0.2, 0.5, 0.9, 1.0 - 1e-12] {
            let x = u.solve_grad(&[y], None).unwrap();
            assert!((u.grad(&x)[0] - y).abs() < 1e-14);
            let g = u.conjugate(&[y], None).unwrap();
            let exact = 0.5 * (y * y.ln() + (1.0 - y) * (1.0 - y).ln());
            assert!((g - exact).abs() < 1e-10, "{y} {g} {exact}");
        }
    }

    #[test]
    fn square_newton_and_face() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let u = Lse::new(2.0, pts, vec![0.0; 4]).unwrap();
        let y = [0.3, 0.8];
        let x = u.solve_grad(&y, None).unwrap();
        let g = u.grad(&x);
        assert!((g[0] - 0.3).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
        let edge = u.restrict(&[0, 1]);
        let v = edge.conjugate(&[0.3, 0.0], None).unwrap();
        let exact = 0.5 * (0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn cumulant_jet_matches_differences() {
        let u = Lse::new(2.0, vec![vec![0.0], vec![1.0], vec![3.0]], vec![0.1, -0.2, 0.4]).unwrap();
        let x = 0.2;
        let h = 1e-4;
        let j = u.jet(&[x], 4);
        let jp = u.jet(&[x + h], 4);
        let jm = u.jet(&[x - h], 4);
        assert!(((jp.h[0] - jm.h[0]) / (2.0 * h) - j.t3[0]).abs() < 1e-6);
        assert!(((jp.t3[0] - jm.t3[0]) / (2.0 * h) - j.t4[0]).abs() < 1e-5);
    }
}
