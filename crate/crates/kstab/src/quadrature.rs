//! Adaptive Gauss-Legendre quadrature on intervals, the real line and convex cells.
//!
//! Intervals are graded towards both endpoints so that the logarithmic boundary
//! behaviour of symplectic potentials does not stall the refinement.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::polytope::{MomentPolytope, RationalPolytope};
use crate::rational::{to_f64, vec_f64};

/// Value with an error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value - o.value,
            error: self.error + o.error,
        }
    }
}

impl Estimate {
    pub fn scale(self, k: f64) -> Estimate {
        Estimate {
            value: self.value * k,
            error: self.error * k.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_depth: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-8,
            abs: 1e-12,
            max_depth: 48,
        }
    }
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(12).expect("degree >= 2").into_iter().collect())
}

/// Smooth bijection of [0,1] flattening both ends to third order.
fn flat(t: f64) -> (f64, f64) {
    (t, 1.0)
}

fn grade(t: f64) -> (f64, f64) {
    let (w, _, dw) = grade_both(t);
    (w, dw)
}

/// `grade` together with `1 - w` computed without cancellation.
fn grade_both(t: f64) -> (f64, f64, f64) {
    let a = t * t * t;
    let b = (1.0 - t) * (1.0 - t) * (1.0 - t);
    let s = a + b;
    let dw = 3.0 * t * t * (1.0 - t) * (1.0 - t) / (s * s);
    (a / s, b / s, dw)
}

/// Panel integral of `f` and of `|f|`.
fn gl_panel(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    let (mut s, mut t) = (0.0, 0.0);
    for &(x, w) in rule() {
        let v = f(m + h * x)?;
        s += w * v;
        t += w * v.abs();
    }
    Ok((s * h, t * h))
}

fn check(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature { residual: f64::NAN })
    }
}

const MAX_PANELS: usize = 100_000;

/// Adaptive integral over `[0, 1]` with interval bisection. Panels whose refinement
/// changes by less than `floor` times their `int |f|` are accepted as noise.
fn adapt_unit(f: &dyn Fn(f64) -> Result<f64>, tol: Tolerance) -> Result<Estimate> {
    adapt_unit_floor(f, tol, 1e-11)
}

fn adapt_unit_floor(f: &dyn Fn(f64) -> Result<f64>, tol: Tolerance, floor: f64) -> Result<Estimate> {
    // Coarse pass fixes the absolute target; cancellation below the rounding
    // level of int |f| is not chased.
    let (mut coarse, mut coarse_abs) = (0.0, 0.0);
    for k in 0..8 {
        let (v, a) = gl_panel(f, k as f64 / 8.0, (k + 1) as f64 / 8.0)?;
        coarse += v;
        coarse_abs += a;
    }
    let target = (tol.rel * check(coarse)?.abs()).max(tol.abs).max(1e-14 * coarse_abs);
    let (whole, whole_abs) = gl_panel(f, 0.0, 1.0)?;
    let mut stack = vec![(0.0, 1.0, whole, whole_abs, 0usize)];
    let mut est = Estimate::default();
    let mut panels = 0usize;
    // unresolved error of panels stopped at the depth limit
    let mut stalled = 0.0;
    while let Some((a, b, whole, whole_abs, depth)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::Quadrature { residual: est.error });
        }
        let m = 0.5 * (a + b);
        let (left, left_abs) = gl_panel(f, a, m)?;
        let (right, right_abs) = gl_panel(f, m, b)?;
        let diff = (left + right - whole).abs();
        // MAX_PANELS panels at this size add at most a tenth of the target
        let noise = (floor * whole_abs).max(target * 1e-6);
        if diff <= target * (b - a) || diff <= noise || depth >= tol.max_depth {
            if depth >= tol.max_depth && diff > noise {
                stalled += diff;
            }
            est.value += left + right;
            est.error += diff;
        } else {
            stack.push((a, m, left, left_abs, depth + 1));
            stack.push((m, b, right, right_abs, depth + 1));
        }
    }
    if stalled > target {
        return Err(Error::Quadrature { residual: stalled });
    }
    est.value = check(est.value)?;
    Ok(est)
}

/// `int_a^b f`, graded at both endpoints.
pub fn integrate_interval(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    let len = b - a;
    let g = |t: f64| -> Result<f64> {
        let (w, wc, dw) = grade_both(t);
        if dw == 0.0 {
            return Ok(0.0);
        }
        let y = if w <= 0.5 { a + len * w } else { b - len * wc };
        Ok(f(y)? * dw * len)
    };
    adapt_unit(&g, tol)
}

/// `int_R f` through `x = t / (1 - t^2)`.
pub fn integrate_line(f: &dyn Fn(f64) -> Result<f64>, tol: Tolerance) -> Result<Estimate> {
    let g = |s: f64| -> Result<f64> {
        let t = 2.0 * s - 1.0;
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return Ok(0.0);
        }
        let x = t / d;
        let v = f(x)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        Ok(v * 2.0 * (1.0 + t * t) / (d * d))
    };
    adapt_unit(&g, tol)
}

/// Tensor rule on a triangle `(c, p, q)` collapsed at `c`, graded in both directions.
fn integrate_triangle(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    c: [f64; 2],
    p: [f64; 2],
    q: [f64; 2],
    tol: Tolerance,
    graded: bool,
) -> Result<Estimate> {
    let grade = if graded { grade } else { flat };
    let jac = ((p[0] - c[0]) * (q[1] - p[1]) - (p[1] - c[1]) * (q[0] - p[0])).abs();
    let point = |s: f64, t: f64| -> Result<f64> {
        let (ws, dws) = grade(s);
        let (wt, dwt) = grade(t);
        let e = [p[0] + wt * (q[0] - p[0]), p[1] + wt * (q[1] - p[1])];
        let y = [c[0] + ws * (e[0] - c[0]), c[1] + ws * (e[1] - c[1])];
        Ok(f(&y)? * ws * dws * dwt * jac)
    };
    // int |f| on a product rule sets the absolute scale a row has to resolve
    let mut scale = 0.0;
    for &(x, wx) in rule() {
        for &(y, wy) in rule() {
            scale += 0.25 * wx * wy * check(point(0.5 + 0.5 * x, 0.5 + 0.5 * y)?)?.abs();
        }
    }
    let fine = Tolerance {
        rel: tol.rel * 1e-2,
        abs: (tol.abs * 1e-2).max(tol.rel * 1e-2 * scale / jac),
        ..tol
    };
    let inner = |s: f64| -> Result<f64> {
        let (ws, dws) = grade(s);
        if dws == 0.0 || ws == 0.0 {
            return Ok(0.0);
        }
        let row = |t: f64| -> Result<f64> {
            let (wt, dwt) = grade(t);
            if dwt == 0.0 {
                return Ok(0.0);
            }
            let e = [p[0] + wt * (q[0] - p[0]), p[1] + wt * (q[1] - p[1])];
            let y = [c[0] + ws * (e[0] - c[0]), c[1] + ws * (e[1] - c[1])];
            Ok(f(&y)? * dwt)
        };
        let r = adapt_unit(&row, fine)?;
        Ok(r.value * ws * dws * jac)
    };
    // the rows are solved well below the outer tolerance; what noise remains is not chased
    adapt_unit_floor(&inner, tol, 10.0 * fine.rel)
}

/// Vertices of a polygon in counterclockwise order.
pub fn polygon_ccw(cell: &RationalPolytope) -> Vec<[f64; 2]> {
    let pts: Vec<[f64; 2]> = cell.vertices().iter().map(|v| [to_f64(&v[0]), to_f64(&v[1])]).collect();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut pts = pts;
    pts.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.partial_cmp(&tb).unwrap()
    });
    pts
}

/// Integral of `f` over a full-dimensional cell of dimension one or two.
pub fn integrate_cell(cell: &RationalPolytope, f: &dyn Fn(&[f64]) -> Result<f64>, tol: Tolerance) -> Result<Estimate> {
    cell_rule(cell, f, tol, true)
}

/// As `integrate_cell` without boundary grading, for integrands smooth up to the
/// boundary whose evaluation loses accuracy there.
pub fn integrate_cell_smooth(
    cell: &RationalPolytope,
    f: &dyn Fn(&[f64]) -> Result<f64>,
    tol: Tolerance,
) -> Result<Estimate> {
    cell_rule(cell, f, tol, false)
}

fn cell_rule(
    cell: &RationalPolytope,
    f: &dyn Fn(&[f64]) -> Result<f64>,
    tol: Tolerance,
    graded: bool,
) -> Result<Estimate> {
    match cell.dim() {
        1 => {
            let a = to_f64(&cell.vertices()[0][0]);
            let b = to_f64(&cell.vertices()[1][0]);
            let (lo, hi) = (a.min(b), a.max(b));
            if graded {
                integrate_interval(&|y| f(&[y]), lo, hi, tol)
            } else {
                adapt_unit(&|t| Ok(f(&[lo + t * (hi - lo)])? * (hi - lo)), tol)
            }
        }
        2 => {
            let pts = polygon_ccw(cell);
            let n = pts.len() as f64;
            let c = [
                pts.iter().map(|p| p[0]).sum::<f64>() / n,
                pts.iter().map(|p| p[1]).sum::<f64>() / n,
            ];
            let mut est = Estimate::default();
            for i in 0..pts.len() {
                let j = (i + 1) % pts.len();
                est = est + integrate_triangle(f, c, pts[i], pts[j], tol, graded)?;
            }
            Ok(est)
        }
        d => Err(Error::Unsupported(format!("quadrature in dimension {d}"))),
    }
}

/// `int_{dP} f dsigma` for the lattice boundary measure.
pub fn integrate_boundary(p: &MomentPolytope, f: &dyn Fn(&[f64]) -> Result<f64>, tol: Tolerance) -> Result<Estimate> {
    let verts = p.poly().vertices();
    let mut est = Estimate::default();
    for facet in p.facets() {
        match p.dim() {
            1 => {
                let v = vec_f64(&verts[facet.vertices[0]]);
                est.value += f(&v)?;
            }
            2 => {
                let a = vec_f64(&verts[facet.vertices[0]]);
                let b = vec_f64(&verts[facet.vertices[1]]);
                // lattice length = euclidean length / |u| for the primitive normal u
                let u = facet.normal_q();
                let un = (to_f64(&u[0]).powi(2) + to_f64(&u[1]).powi(2)).sqrt();
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                let lat = len / un;
                let g = |t: f64| f(&[a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                est = est + integrate_interval(&g, 0.0, 1.0, tol)?.scale(lat);
            }
            d => return Err(Error::Unsupported(format!("boundary quadrature in dimension {d}"))),
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn interval_log_singularity() {
        let r = integrate_interval(&|y: f64| Ok(y.ln()), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-10, "{r:?}");
        let r = integrate_interval(
            &|y: f64| Ok(y * y.ln() + (1.0 - y) * (1.0 - y).ln()),
            0.0,
            1.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!((r.value + 0.5).abs() < 1e-10);
    }

    #[test]
    fn whole_line() {
        let r = integrate_line(&|x: f64| Ok((-x * x).exp()), Tolerance::default()).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn square_cell() {
        let sq = MomentPolytope::unit_square().unwrap();
        let r = integrate_cell(sq.poly(), &|y: &[f64]| Ok(y[0] * y[1]), Tolerance::default()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
        let r = integrate_cell(sq.poly(), &|y: &[f64]| Ok(y[0].ln()), Tolerance::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-9);
        let b = integrate_boundary(&sq, &|_| Ok(1.0), Tolerance::default()).unwrap();
        assert!((b.value - 4.0).abs() < 1e-12);
        let tri = RationalPolytope::new(2, vec![vec![qi(0), qi(0)], vec![qi(2), qi(0)], vec![qi(0), qi(2)]]).unwrap();
        let r = integrate_cell(&tri, &|y: &[f64]| Ok(y[0]), Tolerance::default()).unwrap();
        assert!((r.value - 4.0 / 3.0).abs() < 1e-12);
    }
}
