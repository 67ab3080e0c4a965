//! Torus-invariant metrics as convex potentials `u` on `R^n` with `grad u(R^n) = int P`,
//! represented either directly (log-sum-exp) or through the symplectic potential `G = u*`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde_json::{json, Value};

use super::jet::{CubicSpline, Jet, Profile, Ridge};
use super::lse::Lse;
use crate::error::{Error, Result};
use crate::polytope::{AffinePiece, MomentPolytope, RationalPolytope};
use crate::rational::{decode, to_f64, vec_f64, Q};

/// Floating-point view of a moment polytope.
#[derive(Debug)]
pub struct PolyData {
    pub moment: MomentPolytope,
    pub n: usize,
    pub normals: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub volume: f64,
    pub mean_s: f64,
    pub center: Vec<f64>,
}

impl PolyData {
    pub fn new(m: &MomentPolytope) -> Arc<PolyData> {
        let n = m.dim();
        let verts: Vec<Vec<f64>> = m.poly().vertices().iter().map(|v| vec_f64(v)).collect();
        let center = (0..n)
            .map(|j| verts.iter().map(|v| v[j]).sum::<f64>() / verts.len() as f64)
            .collect();
        Arc::new(PolyData {
            moment: m.clone(),
            n,
            normals: m.facets().iter().map(|f| vec_f64(&f.normal_q())).collect(),
            rhs: m.facets().iter().map(|f| to_f64(&f.rhs)).collect(),
            volume: to_f64(m.volume()),
            mean_s: to_f64(m.mean_s()),
            center,
        })
    }

    pub fn slacks(&self, y: &[f64]) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.rhs)
            .map(|(u, b)| u.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() - b)
            .collect()
    }

    pub fn min_slack(&self, y: &[f64]) -> f64 {
        self.slacks(y).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `[a, b]` for an interval.
    pub fn interval(&self) -> (f64, f64) {
        let v = self.moment.poly().vertices();
        (to_f64(&v[0][0]), to_f64(&v[v.len() - 1][0]))
    }
}

/// `scale * f` for a convex piecewise affine `f = max_C (<xi_C, y> + b_C)`, optionally
/// replaced by the soft maximum `eps log sum exp((<xi_C, y> + b_C) / eps)`.
#[derive(Clone, Debug)]
pub struct PlTerm {
    pub scale: f64,
    pub pieces: Vec<AffinePiece>,
    pub eps: f64,
    slopes: Vec<Vec<f64>>,
    consts: Vec<f64>,
    soft: Option<Lse>,
}

impl PlTerm {
    pub fn new(scale: f64, pieces: Vec<AffinePiece>, eps: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("piecewise affine term without pieces".into()));
        }
        let slopes: Vec<Vec<f64>> = pieces.iter().map(|p| vec_f64(&p.slope)).collect();
        let consts: Vec<f64> = pieces.iter().map(|p| to_f64(&p.constant)).collect();
        let soft = if eps > 0.0 {
            Some(Lse::new(
                1.0 / eps,
                slopes.clone(),
                consts.iter().map(|b| b / eps).collect(),
            )?)
        } else {
            None
        };
        Ok(PlTerm {
            scale,
            pieces,
            eps,
            slopes,
            consts,
            soft,
        })
    }

    fn active(&self, y: &[f64]) -> usize {
        let mut best = 0;
        let mut bv = f64::NEG_INFINITY;
        for (k, (s, b)) in self.slopes.iter().zip(&self.consts).enumerate() {
            let v = s.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() + b;
            if v > bv {
                bv = v;
                best = k;
            }
        }
        best
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match &self.soft {
            Some(l) => self.scale * l.value(y),
            None => {
                let k = self.active(y);
                let v = self.slopes[k].iter().zip(y).map(|(p, q)| p * q).sum::<f64>() + self.consts[k];
                self.scale * v
            }
        }
    }

    fn add_to(&self, y: &[f64], jet: &mut Jet) {
        let mut j = match &self.soft {
            Some(l) => l.jet(y, jet.order),
            None => {
                let k = self.active(y);
                let mut j = Jet::zero(jet.n, jet.order);
                j.v = self.slopes[k].iter().zip(y).map(|(p, q)| p * q).sum::<f64>() + self.consts[k];
                if jet.order >= 1 {
                    j.g.copy_from_slice(&self.slopes[k]);
                }
                j
            }
        };
        scale_jet(&mut j, self.scale);
        jet.add(&j);
    }

    /// Breakpoints of a one-dimensional term, sorted.
    fn intervals(&self) -> Vec<(f64, f64, usize)> {
        let mut v: Vec<(f64, f64, usize)> = self
            .pieces
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let a = to_f64(&p.cell.vertices()[0][0]);
                let b = to_f64(&p.cell.vertices()[p.cell.vertices().len() - 1][0]);
                (a.min(b), a.max(b), k)
            })
            .collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        v
    }
}

fn scale_jet(j: &mut Jet, s: f64) {
    j.v *= s;
    for x in
        j.g.iter_mut()
            .chain(j.h.iter_mut())
            .chain(j.t3.iter_mut())
            .chain(j.t4.iter_mut())
    {
        *x *= s;
    }
}

/// Symplectic potential `G = core* + sum of ridges + PL term`.
#[derive(Clone, Debug, Default)]
pub struct Dual {
    pub core: Option<Lse>,
    pub ridges: Vec<Ridge>,
    pub pl: Option<PlTerm>,
}

#[derive(Clone, Debug)]
pub enum Repr {
    Lse(Arc<Lse>),
    Dual(Arc<Dual>),
}

/// Values of `G` at an interior point of `P`.
#[derive(Clone, Copy, Debug)]
pub struct YPoint<'a> {
    pub g: f64,
    pub x: &'a [f64],
    pub log_det: f64,
}

/// A point of the gradient correspondence `x = grad G(y)`, `y = grad u(x)`.
#[derive(Clone, Debug)]
pub struct Pair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `G(y)`, without the additive shift.
    pub g: f64,
    /// `log det D^2 G(y) = -log det D^2 u(x)`; `+inf` where `u` is affine.
    pub log_det_g: f64,
}

#[derive(Clone, Debug)]
pub struct ToricPotential {
    poly: Arc<PolyData>,
    repr: Repr,
    shift: f64,
    cells: Vec<RationalPolytope>,
}

impl ToricPotential {
    /// Fubini-Study potential `(1/2) log sum exp(2 <k, x>)` over the lattice points of `P`.
    pub fn fs(p: &MomentPolytope) -> Result<Self> {
        let n = p.lattice_points().len();
        Self::lse_weights(p, &vec![1.0; n])
    }

    /// `(1/2) log sum c_k exp(2 <k, x>)` over the lattice points, `c_k > 0`.
    pub fn lse_weights(p: &MomentPolytope, coeffs: &[f64]) -> Result<Self> {
        let pts = p.lattice_points();
        if coeffs.len() != pts.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, one per lattice point, found {}",
                pts.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be positive".into()));
        }
        let points = pts.iter().map(|k| k.iter().map(|&a| a as f64).collect()).collect();
        let lse = Lse::new(2.0, points, coeffs.iter().map(|c| c.ln()).collect())?;
        Self::from_lse(p, lse, vec![p.poly().clone()])
    }

    /// A log-sum-exp potential whose points span exactly `P`.
    pub fn from_lse(p: &MomentPolytope, lse: Lse, cells: Vec<RationalPolytope>) -> Result<Self> {
        let poly = PolyData::new(p);
        if lse.dim() != poly.n {
            return Err(Error::DimensionMismatch {
                expected: poly.n,
                found: lse.dim(),
            });
        }
        for pt in &lse.points {
            if poly.min_slack(pt) < -1e-12 {
                return Err(Error::InvalidInput("log-sum-exp point outside the polytope".into()));
            }
        }
        for v in p.poly().vertices() {
            let v = vec_f64(v);
            let hit = lse
                .points
                .iter()
                .any(|pt| pt.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12));
            if !hit {
                return Err(Error::InvalidInput(
                    "every vertex of P must be a log-sum-exp point".into(),
                ));
            }
        }
        Ok(ToricPotential {
            poly,
            repr: Repr::Lse(Arc::new(lse)),
            shift: 0.0,
            cells,
        })
    }

    /// `G_P = (1/2) sum_i l_i log l_i`.
    pub fn guillemin(p: &MomentPolytope) -> Result<Self> {
        Self::symplectic(p, Vec::new())
    }

    /// `G_P` plus extra ridge terms.
    pub fn symplectic(p: &MomentPolytope, extra: Vec<Ridge>) -> Result<Self> {
        let poly = PolyData::new(p);
        let mut ridges = guillemin_ridges(&poly);
        ridges.extend(extra);
        let dual = Dual {
            core: None,
            ridges,
            pl: None,
        };
        Self::from_dual(p, dual, vec![p.poly().clone()])
    }

    pub fn from_dual(p: &MomentPolytope, dual: Dual, cells: Vec<RationalPolytope>) -> Result<Self> {
        let poly = PolyData::new(p);
        let u = ToricPotential {
            poly,
            repr: Repr::Dual(Arc::new(dual)),
            shift: 0.0,
            cells,
        };
        u.check_convex()?;
        Ok(u)
    }

    /// Potential whose symplectic potential is sampled on a uniform grid over an interval.
    pub fn grid(p: &MomentPolytope, values: &[f64]) -> Result<Self> {
        let poly = PolyData::new(p);
        if poly.n != 1 {
            return Err(Error::Unsupported("grid potentials on intervals only".into()));
        }
        let (a, b) = poly.interval();
        let m = values.len();
        if m < 3 {
            return Err(Error::InvalidInput("grid needs at least 3 values".into()));
        }
        let base = guillemin_ridges(&poly);
        let g_p = |y: f64| -> Result<f64> {
            let mut j = Jet::zero(1, 0);
            for r in &base {
                r.add_to(&[y], &mut j)?;
            }
            Ok(j.v)
        };
        let mut rest = Vec::with_capacity(m);
        for (i, v) in values.iter().enumerate() {
            let y = a + (b - a) * i as f64 / (m - 1) as f64;
            rest.push(v - g_p(y)?);
        }
        let spline = Arc::new(CubicSpline::new(a, b, rest)?);
        let mut ridges = base;
        ridges.push(Ridge::new(1.0, vec![1.0], 0.0, Profile::Spline(spline)));
        Self::from_dual(
            p,
            Dual {
                core: None,
                ridges,
                pl: None,
            },
            vec![p.poly().clone()],
        )
    }

    /// Symplectic-side view of a log-sum-exp potential, with an optional PL term.
    pub fn dual_of(&self) -> Dual {
        match &self.repr {
            Repr::Lse(l) => Dual {
                core: Some((**l).clone()),
                ridges: Vec::new(),
                pl: None,
            },
            Repr::Dual(d) => (**d).clone(),
        }
    }

    /// `u + c`.
    pub fn plus_const(&self, c: f64) -> Self {
        let mut u = self.clone();
        u.shift += c;
        u
    }

    pub fn poly(&self) -> &Arc<PolyData> {
        &self.poly
    }

    pub fn moment(&self) -> &MomentPolytope {
        &self.poly.moment
    }

    pub fn dim(&self) -> usize {
        self.poly.n
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn cells(&self) -> &[RationalPolytope] {
        &self.cells
    }

    pub fn with_cells(mut self, cells: Vec<RationalPolytope>) -> Self {
        self.cells = cells;
        self
    }

    /// Symplectic jets are only available when no log-sum-exp core is involved.
    pub fn has_symplectic_jets(&self) -> bool {
        matches!(&self.repr, Repr::Dual(d) if d.core.is_none())
    }

    fn check_convex(&self) -> Result<()> {
        let Repr::Dual(d) = &self.repr else { return Ok(()) };
        if d.ridges.iter().all(|r| r.is_convex()) {
            return Ok(());
        }
        for y in self.sample_points(24) {
            let h = self.dual_jet(d, &y, 2)?.hess();
            let e = h.symmetric_eigenvalues();
            if e.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::NotConvex(format!("symplectic potential not convex near {y:?}")));
            }
        }
        Ok(())
    }

    /// Interior sample points on a grid, for convexity and sup checks.
    pub fn sample_points(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let verts: Vec<Vec<f64>> = self.moment().poly().vertices().iter().map(|v| vec_f64(v)).collect();
        let lo: Vec<f64> = (0..n)
            .map(|j| verts.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi: Vec<f64> = (0..n)
            .map(|j| verts.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let y: Vec<f64> = (0..n)
                .map(|j| lo[j] + (hi[j] - lo[j]) * (idx[j] as f64 + 0.5) / k as f64)
                .collect();
            if self.poly.min_slack(&y) > 0.0 {
                out.push(y);
            }
            let mut j = 0;
            while j < n {
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
        out
    }

    fn dual_jet(&self, d: &Dual, y: &[f64], order: usize) -> Result<Jet> {
        self.jet_parts(d, y, order, false)
    }

    fn jet_parts(&self, d: &Dual, y: &[f64], order: usize, smooth_only: bool) -> Result<Jet> {
        let n = self.dim();
        let mut jet = Jet::zero(n, order);
        for r in &d.ridges {
            r.add_to(y, &mut jet)?;
        }
        if let Some(pl) = &d.pl {
            if !(smooth_only && pl.eps == 0.0) {
                pl.add_to(y, &mut jet);
            }
        }
        if let Some(core) = &d.core {
            if order > 2 {
                return Err(Error::Unsupported(
                    "third derivatives of a numerically conjugated potential".into(),
                ));
            }
            let x = core.solve_grad(y, Some(&self.start(y)))?;
            let mut j = Jet::zero(n, order);
            j.v = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - core.value(&x);
            if order >= 1 {
                j.g.copy_from_slice(&x);
            }
            if order >= 2 {
                let h = core.hess(&x);
                let inv = h
                    .try_inverse()
                    .ok_or_else(|| Error::Degenerate("singular Hessian".into()))?;
                j.h.copy_from_slice(inv.transpose().as_slice());
            }
            jet.add(&j);
        }
        Ok(jet)
    }

    /// Jet of `G` (without shift) at an interior point.
    pub fn g_jet(&self, y: &[f64], order: usize) -> Result<Jet> {
        match &self.repr {
            Repr::Dual(d) => self.dual_jet(d, y, order),
            Repr::Lse(l) => {
                if order > 2 {
                    return Err(Error::Unsupported("symplectic jets of a log-sum-exp potential".into()));
                }
                let x = l.solve_grad(y, Some(&self.start(y)))?;
                let mut j = Jet::zero(self.dim(), order);
                j.v = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - l.value(&x);
                if order >= 1 {
                    j.g.copy_from_slice(&x);
                }
                if order >= 2 {
                    let inv = l
                        .hess(&x)
                        .try_inverse()
                        .ok_or_else(|| Error::Degenerate("singular Hessian".into()))?;
                    j.h.copy_from_slice(inv.transpose().as_slice());
                }
                Ok(j)
            }
        }
    }

    /// `G(y)`, `grad G(y)` and `log det D^2 G(y)` at an interior point.
    pub fn at_y(&self, y: &[f64]) -> Result<Pair> {
        match &self.repr {
            Repr::Lse(l) => {
                let x = l.solve_grad(y, Some(&self.start(y)))?;
                let g = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - l.value(&x);
                let log_det_g = -l.log_det_hess(&x);
                Ok(Pair {
                    x,
                    y: y.to_vec(),
                    g,
                    log_det_g,
                })
            }
            Repr::Dual(d) => {
                let j = self.dual_jet(d, y, 2)?;
                let det = j.hess().determinant();
                if !(det > 0.0) {
                    return Err(Error::NotConvex(format!("degenerate symplectic Hessian at {y:?}")));
                }
                Ok(Pair {
                    x: j.g.clone(),
                    y: y.to_vec(),
                    g: j.v,
                    log_det_g: det.ln(),
                })
            }
        }
    }

    /// `u(x)`, `grad u(x)` and `log det D^2 G` at the image point.
    pub fn at_x(&self, x: &[f64]) -> Result<Pair> {
        match &self.repr {
            Repr::Lse(l) => {
                let y = l.grad(x);
                let u = l.value(x);
                let g = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - u;
                Ok(Pair {
                    x: x.to_vec(),
                    y,
                    g,
                    log_det_g: -l.log_det_hess(x),
                })
            }
            Repr::Dual(d) => {
                let (y, clamped) = if self.dim() == 1 {
                    let (y, c) = self.argmax_1d(d, x[0])?;
                    (vec![y], c)
                } else {
                    if matches!(&d.pl, Some(p) if p.eps == 0.0) {
                        return Err(Error::Unsupported(
                            "evaluating a non-smooth symplectic potential on R^n, n >= 2; use eps > 0".into(),
                        ));
                    }
                    (self.argmax_newton(d, x)?, false)
                };
                let j = self.dual_jet(d, &y, 2)?;
                let log_det_g = if clamped {
                    f64::INFINITY
                } else {
                    j.hess().determinant().ln()
                };
                Ok(Pair {
                    x: x.to_vec(),
                    y,
                    g: j.v,
                    log_det_g,
                })
            }
        }
    }

    /// `u(x)` including the shift.
    pub fn u(&self, x: &[f64]) -> Result<f64> {
        if let Repr::Lse(l) = &self.repr {
            return Ok(l.value(x) + self.shift);
        }
        let p = self.at_x(x)?;
        Ok(p.x.iter().zip(&p.y).map(|(a, b)| a * b).sum::<f64>() - p.g + self.shift)
    }

    /// `G(y)` including the shift, for any `y` in `P`.
    pub fn g(&self, y: &[f64]) -> Result<f64> {
        let s = self.poly.slacks(y);
        let on_boundary = s.iter().any(|v| *v <= 1e-14);
        let v = match &self.repr {
            Repr::Lse(l) if on_boundary => self.face_conjugate(l, y, &s)?,
            Repr::Lse(_) => self.g_jet(y, 0)?.v,
            Repr::Dual(d) => {
                let mut jet = Jet::zero(self.dim(), 0);
                for r in &d.ridges {
                    r.add_to(y, &mut jet)?;
                }
                if let Some(pl) = &d.pl {
                    jet.v += pl.value(y);
                }
                if let Some(core) = &d.core {
                    jet.v += if on_boundary {
                        self.face_conjugate(core, y, &s)?
                    } else {
                        core.conjugate(y, Some(&self.start(y)))?
                    };
                }
                jet.v
            }
        };
        Ok(v - self.shift)
    }

    fn face_conjugate(&self, l: &Lse, y: &[f64], slack: &[f64]) -> Result<f64> {
        let tight: Vec<usize> = (0..slack.len()).filter(|&i| slack[i] <= 1e-14).collect();
        let idx: Vec<usize> = (0..l.points.len())
            .filter(|&k| {
                let s = self.poly.slacks(&l.points[k]);
                tight.iter().all(|&i| s[i].abs() < 1e-12)
            })
            .collect();
        if idx.is_empty() {
            return Err(Error::Degenerate("no log-sum-exp point on the face".into()));
        }
        l.restrict(&idx).conjugate(y, None)
    }

    /// Gradient of the canonical symplectic potential, a starting point for Newton.
    fn start(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (u, l) in self.poly.normals.iter().zip(self.poly.slacks(y)) {
            let c = 0.5 * (l.max(1e-300).ln() + 1.0);
            for i in 0..x.len() {
                x[i] += c * u[i];
            }
        }
        x
    }

    /// Jet of `G` without a non-smooth PL term.
    fn smooth_jet(&self, d: &Dual, y: &[f64], order: usize) -> Result<Jet> {
        self.jet_parts(d, y, order, true)
    }

    /// Interior kinks of a one-dimensional non-smooth potential as
    /// `(y, G(y), G'(y-), G'(y+))`, without shift.
    pub fn kinks_1d(&self) -> Result<Vec<(f64, f64, f64, f64)>> {
        let Repr::Dual(d) = &self.repr else {
            return Ok(Vec::new());
        };
        let Some(pl) = &d.pl else { return Ok(Vec::new()) };
        if pl.eps > 0.0 || self.dim() != 1 {
            return Ok(Vec::new());
        }
        let iv = pl.intervals();
        let mut out = Vec::new();
        for w in iv.windows(2) {
            let y = w[0].1;
            let jet = self.smooth_jet(d, &[y], 1)?;
            let left = jet.g[0] + pl.scale * pl.slopes[w[0].2][0];
            let right = jet.g[0] + pl.scale * pl.slopes[w[1].2][0];
            out.push((y, self.g(&[y])? + self.shift, left, right));
        }
        Ok(out)
    }

    /// Maximizer of `x y - G(y)` on an interval; flags points where `u` is affine.
    fn argmax_1d(&self, d: &Dual, x: f64) -> Result<(f64, bool)> {
        let (a, b) = self.poly.interval();
        let smooth_slope = |y: f64, slope: f64| -> Result<(f64, f64)> {
            let jet = self.smooth_jet(d, &[y], 2)?;
            Ok((jet.g[0] + slope - x, jet.h[0]))
        };
        let cells: Vec<(f64, f64, f64)> = match &d.pl {
            Some(pl) if pl.eps == 0.0 => pl
                .intervals()
                .into_iter()
                .map(|(c0, c1, k)| (c0, c1, pl.scale * pl.slopes[k][0]))
                .collect(),
            _ => vec![(a, b, 0.0)],
        };
        let last = cells.len() - 1;
        for (i, &(c0, c1, slope)) in cells.iter().enumerate() {
            if i < last {
                let (h1, _) = smooth_slope(c1, slope)?;
                if h1 <= 0.0 {
                    continue;
                }
            }
            if i > 0 {
                let (h0, _) = smooth_slope(c0, slope)?;
                if h0 >= 0.0 {
                    return Ok((c0, true));
                }
            }
            let y = root_increasing(&|y| smooth_slope(y, slope), c0, c1, i == 0 && c0 == a, i == last)?;
            return Ok((y, false));
        }
        unreachable!("last cell always accepts")
    }

    /// Damped Newton for `min_y G(y) - <x, y>` in the interior of `P`.
    fn argmax_newton(&self, d: &Dual, x: &[f64]) -> Result<Vec<f64>> {
        let xv = DVector::from_column_slice(x);
        let mut y = DVector::from_column_slice(&self.poly.center);
        let obj = |y: &DVector<f64>| -> Result<f64> { Ok(self.dual_jet(d, y.as_slice(), 0)?.v - xv.dot(y)) };
        let mut f = obj(&y)?;
        let mut polish = 0;
        for _ in 0..500 {
            let j = self.dual_jet(d, y.as_slice(), 2)?;
            let g = DVector::from_vec(j.g.clone()) - &xv;
            let h = j.hess();
            let step = h.clone().cholesky().map(|c| c.solve(&g)).unwrap_or_else(|| g.clone());
            let dec = g.dot(&step);
            if !(dec > 1e-30) || step.amax() <= 1e-15 * (1.0 + y.amax()) {
                return Ok(y.as_slice().to_vec());
            }
            if dec < 1e-10 * (1.0 + f.abs()) && self.poly.min_slack((&y - &step).as_slice()) > 0.0 {
                polish += 1;
                y -= &step;
                if polish >= 6 {
                    return Ok(y.as_slice().to_vec());
                }
                continue;
            }
            let mut t = 1.0;
            loop {
                let cand = &y - &step * t;
                if self.poly.min_slack(cand.as_slice()) > 0.0 {
                    let fc = obj(&cand)?;
                    if fc <= f - 0.25 * t * dec {
                        if cand == y {
                            return Ok(y.as_slice().to_vec());
                        }
                        y = cand;
                        f = fc;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-30 {
                    return Ok(y.as_slice().to_vec());
                }
            }
            if dec < 1e-26 {
                return Ok(y.as_slice().to_vec());
            }
        }
        Err(Error::Degenerate(format!(
            "Legendre maximization did not converge at x = {x:?}"
        )))
    }

    /// Scalar curvature at `y` in the interior of `P`.
    pub fn scalar_curvature(&self, y: &[f64]) -> Result<f64> {
        match &self.repr {
            Repr::Lse(l) => {
                let x = l.solve_grad(y, Some(&self.start(y)))?;
                Ok(lse_scalar_curvature(l, &x))
            }
            Repr::Dual(d) => {
                if d.core.is_some() {
                    return Err(Error::Unsupported("scalar curvature of a conjugated core".into()));
                }
                if matches!(&d.pl, Some(p) if p.eps == 0.0) {
                    return Err(Error::Unsupported("scalar curvature of a non-smooth potential".into()));
                }
                abreu(&self.dual_jet(d, y, 4)?)
            }
        }
    }

    /// Scalar curvature at the point of `P` corresponding to `x`.
    pub fn scalar_curvature_x(&self, x: &[f64]) -> Result<f64> {
        match &self.repr {
            Repr::Lse(l) => Ok(lse_scalar_curvature(l, x)),
            Repr::Dual(_) => {
                let p = self.at_x(x)?;
                self.scalar_curvature(&p.y)
            }
        }
    }

    pub fn from_json(p: &MomentPolytope, v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidInput("potential needs a \"kind\"".into()))?;
        let num = |x: &Value| -> Result<f64> {
            match x.as_f64() {
                Some(f) => Ok(f),
                None => Ok(to_f64(&decode(x)?)),
            }
        };
        let list = |key: &str| -> Result<Vec<f64>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidInput(format!("potential needs \"{key}\"")))?
                .iter()
                .map(num)
                .collect()
        };
        let u = match kind {
            "fs" => Self::fs(p)?,
            "lse-weights" => Self::lse_weights(p, &list("coeffs")?)?,
            "grid" => Self::grid(p, &list("values")?)?,
            k => return Err(Error::InvalidInput(format!("unknown potential kind {k:?}"))),
        };
        let c = match v.get("shift") {
            Some(s) => num(s)?,
            None => 0.0,
        };
        Ok(u.plus_const(c))
    }

    pub fn describe(&self) -> Value {
        match &self.repr {
            Repr::Lse(l) => json!({"kind": "lse", "beta": l.beta, "terms": l.points.len(), "shift": self.shift}),
            Repr::Dual(d) => json!({
                "kind": "symplectic",
                "ridges": d.ridges.len(),
                "core": d.core.is_some(),
                "pl": d.pl.as_ref().map(|p| json!({"scale": p.scale, "eps": p.eps})),
                "shift": self.shift,
            }),
        }
    }
}

/// Root of an increasing function on `(a, b)`, bisecting geometrically towards
/// endpoints where the function is unbounded.
fn root_increasing(
    h: &dyn Fn(f64) -> Result<(f64, f64)>,
    a: f64,
    b: f64,
    open_left: bool,
    open_right: bool,
) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let tiny = 1e-300;
    let mid = |lo: f64, hi: f64| -> f64 {
        let w = hi - lo;
        if open_left && lo == a && w > 8.0 * tiny {
            return a + (tiny * w).sqrt().max(w * 1e-3).min(0.5 * w);
        }
        if open_right && hi == b && w > 8.0 * tiny {
            return b - (tiny * w).sqrt().max(w * 1e-3).min(0.5 * w);
        }
        0.5 * (lo + hi)
    };
    let mut y = 0.5 * (a + b);
    for _ in 0..2000 {
        let (r, d) = h(y)?;
        if r == 0.0 {
            return Ok(y);
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - r / d;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            mid(lo, hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * y.abs().max(f64::MIN_POSITIVE) || next == y || next <= lo || next >= hi {
            return Ok(if next > lo && next < hi { next } else { y });
        }
        y = next;
    }
    Ok(y)
}

pub(crate) fn guillemin_ridges(p: &PolyData) -> Vec<Ridge> {
    p.normals
        .iter()
        .zip(&p.rhs)
        .map(|(u, b)| Ridge::new(1.0, u.clone(), -b, Profile::XLogX))
        .collect()
}

/// Scalar curvature from the symplectic side: `S = -(1/2) sum_ij d_i d_j H^ij`, `H = (D^2 G)^-1`.
pub fn abreu(j: &Jet) -> Result<f64> {
    let n = j.n;
    let hess = j.hess();
    let h = hess
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular symplectic Hessian".into()))?;
    let a: Vec<DMatrix<f64>> = (0..n).map(|k| j.hess_d(k)).collect();
    let mut s = 0.0;
    for i in 0..n {
        for jj in 0..n {
            // d_i d_j H = H A_i H A_j H + H A_j H A_i H - H A_ij H
            let t = &h * &a[i] * &h * &a[jj] * &h + &h * &a[jj] * &h * &a[i] * &h - &h * j.hess_dd(i, jj) * &h;
            s += t[(i, jj)];
        }
    }
    Ok(-0.5 * s)
}

/// Scalar curvature on the complex side for `u` given by cumulants:
/// `S = tr(A^-1 D^2 rho)`, `rho = -(1/2) log det A`, `A = D^2 u`.
pub fn lse_scalar_curvature(l: &Lse, x: &[f64]) -> f64 {
    let (a, d2rho) = lse_ricci(l, x);
    match a.try_inverse() {
        Some(ai) => (ai * d2rho).trace(),
        None => f64::NAN,
    }
}

/// `(A, D^2 rho)` with `A = D^2 u` and `rho = -(1/2) log det A`, so that the Ricci
/// form is `dd^c rho` against `dd^c u`.
pub fn lse_ricci(l: &Lse, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let j = l.jet(x, 4);
    let n = j.n;
    let a = j.hess();
    let mut d2rho = DMatrix::zeros(n, n);
    let Some(ai) = a.clone().try_inverse() else {
        return (a, d2rho.add_scalar(f64::NAN));
    };
    let da: Vec<DMatrix<f64>> = (0..n).map(|k| j.hess_d(k)).collect();
    for p in 0..n {
        for q in 0..n {
            let t1 = (&ai * j.hess_dd(p, q)).trace();
            let t2 = (&ai * &da[p] * &ai * &da[q]).trace();
            d2rho[(p, q)] = -0.5 * (t1 - t2);
        }
    }
    (a, d2rho)
}

/// Pieces of the zero function on `P`.
pub fn zero_pieces(p: &MomentPolytope) -> Vec<AffinePiece> {
    vec![AffinePiece {
        cell: p.poly().clone(),
        slope: vec![Q::zero(); p.dim()],
        constant: Q::zero(),
    }]
}
