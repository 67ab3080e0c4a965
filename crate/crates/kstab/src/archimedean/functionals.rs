//! Energy functionals of toric metrics, computed on the moment polytope through the
//! gradient correspondence `x = grad G(y)`.

use std::sync::Arc;

use serde_json::{json, Value};

use super::potential::{Pair, Repr, ToricPotential};
use crate::error::{Error, Result};
use crate::polytope::RationalPolytope;
use crate::quadrature::{
    integrate_boundary, integrate_cell, integrate_cell_smooth, integrate_line, Estimate, Tolerance,
};
use crate::rational::{vec_f64, Q};

fn same_polytope(u: &ToricPotential, r: &ToricPotential) -> Result<()> {
    if u.moment().poly() != r.moment().poly() {
        return Err(Error::InvalidInput("potentials live on different polytopes".into()));
    }
    Ok(())
}

/// Common refinement of the quadrature cells of two potentials.
fn common_cells(u: &ToricPotential, r: &ToricPotential) -> Result<Vec<RationalPolytope>> {
    let n = u.dim();
    if n == 1 {
        let mut cuts: Vec<Q> = u
            .cells()
            .iter()
            .chain(r.cells())
            .flat_map(|c| c.vertices().iter().map(|v| v[0].clone()))
            .collect();
        cuts.sort();
        cuts.dedup();
        return cuts
            .windows(2)
            .map(|w| RationalPolytope::interval(w[0].clone(), w[1].clone()))
            .collect();
    }
    let mut out = Vec::new();
    for a in u.cells() {
        for b in r.cells() {
            let hs: Vec<(Vec<Q>, Q)> = a
                .facets()
                .iter()
                .chain(b.facets())
                .map(|f| (f.normal_q(), f.rhs.clone()))
                .collect();
            match RationalPolytope::from_halfspaces(n, &hs) {
                Ok(c) if c.is_full_dim() => out.push(c),
                Ok(_) | Err(Error::EmptyPolytope) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// `(1/|P|) int_P f dy` over the given cells; boundary points contribute nothing.
fn average(
    u: &ToricPotential,
    cells: &[RationalPolytope],
    f: &dyn Fn(&[f64]) -> Result<f64>,
    tol: Tolerance,
) -> Result<Estimate> {
    average_by(u, cells, f, tol, integrate_cell)
}

type CellRule = fn(&RationalPolytope, &dyn Fn(&[f64]) -> Result<f64>, Tolerance) -> Result<Estimate>;

fn average_by(
    u: &ToricPotential,
    cells: &[RationalPolytope],
    f: &dyn Fn(&[f64]) -> Result<f64>,
    tol: Tolerance,
    rule: CellRule,
) -> Result<Estimate> {
    let poly = u.poly().clone();
    let g = |y: &[f64]| -> Result<f64> {
        if poly.min_slack(y) <= 0.0 {
            return Ok(0.0);
        }
        f(y)
    };
    let mut est = Estimate::default();
    for c in cells {
        est = est + rule(c, &g, tol)?;
    }
    Ok(est.scale(1.0 / poly.volume))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Monge-Ampere energy `E(u) - E(u_ref)` with `E(u_ref) = 0`.
pub fn energy_e(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    same_polytope(u, r)?;
    let cells = common_cells(u, r)?;
    let f = |y: &[f64]| -> Result<f64> { Ok((u.g(y)? + u.shift()) - (r.g(y)? + r.shift())) };
    let mut e = average(u, &cells, &f, tol)?.scale(-1.0);
    e.value += u.shift() - r.shift();
    Ok(e)
}

/// `int (u - u_ref) MA(u_ref)`.
pub fn against_ref(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    same_polytope(u, r)?;
    let f = |y: &[f64]| -> Result<f64> {
        let p = r.at_y(y)?;
        let ur = dot(&p.x, y) - p.g;
        Ok(u.u(&p.x)? - u.shift() - ur)
    };
    let cells = common_cells(u, r)?;
    let mut e = average(u, &cells, &f, tol)?;
    e.value += u.shift() - r.shift();
    Ok(e)
}

/// `int (u - u_ref) MA(u)`.
pub fn against_self(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    same_polytope(u, r)?;
    let f = |y: &[f64]| -> Result<f64> {
        let p = u.at_y(y)?;
        let uu = dot(&p.x, y) - p.g;
        Ok(uu - (r.u(&p.x)? - r.shift()))
    };
    let cells = common_cells(u, r)?;
    let mut e = average(u, &cells, &f, tol)?;
    e.value += u.shift() - r.shift();
    Ok(e)
}

pub fn functional_j(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    Ok(against_ref(u, r, tol)? - energy_e(u, r, tol)?)
}

pub fn functional_i(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    Ok(against_ref(u, r, tol)? - against_self(u, r, tol)?)
}

/// `rho_ref = -(1/2) log det D^2 u_ref` at `x`.
fn rho(r: &ToricPotential, x: &[f64]) -> Result<f64> {
    Ok(0.5 * r.at_x(x)?.log_det_g)
}

/// Ricci energy: the energy twisted by `-Ric(omega_ref)`.
pub fn ricci_energy_r(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    same_polytope(u, r)?;
    let poly = u.poly();
    let b = integrate_boundary(
        u.moment(),
        &|y: &[f64]| Ok((u.g(y)? + u.shift()) - (r.g(y)? + r.shift())),
        tol,
    )?
    .scale(1.0 / poly.volume);
    let f = |y: &[f64]| -> Result<f64> {
        let pu = u.at_y(y)?;
        let pr = r.at_y(y)?;
        Ok(rho(r, &pu.x)? - 0.5 * pr.log_det_g)
    };
    let cells = common_cells(u, r)?;
    let mut e = b - average(u, &cells, &f, tol)?;
    e.value -= poly.mean_s * (u.shift() - r.shift());
    Ok(e)
}

/// Form against which the energy is twisted.
#[derive(Clone)]
pub enum Theta {
    Zero,
    /// `-Ric(omega_ref)`.
    Ricci,
    /// A form given by its density in the real coordinate of a one-dimensional model.
    Density1d(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// `V^-1 int (u - u_ref) theta` for one-dimensional models, integrated on the real line.
pub fn twisted_energy(u: &ToricPotential, r: &ToricPotential, theta: &Theta, tol: Tolerance) -> Result<Estimate> {
    same_polytope(u, r)?;
    if u.dim() != 1 {
        return Err(Error::Unsupported("twisted energy on the real side needs n = 1".into()));
    }
    let dens: Arc<dyn Fn(f64) -> Result<f64> + '_> = match theta {
        Theta::Zero => return Ok(Estimate::default()),
        Theta::Ricci => {
            let Repr::Lse(l) = r.repr() else {
                return Err(Error::Unsupported("Ricci twist needs a log-sum-exp reference".into()));
            };
            let l = l.clone();
            Arc::new(move |x: f64| {
                // rho'' = -(1/2)(A''/A - (A'/A)^2)
                let j = l.jet(&[x], 4);
                let (a, a1, a2) = (j.h[0], j.t3[0], j.t4[0]);
                let v = 0.5 * (a2 / a - (a1 / a).powi(2));
                Ok(if v.is_finite() { v } else { 0.0 })
            })
        }
        Theta::Density1d(g) => {
            let g = g.clone();
            Arc::new(move |x: f64| Ok(g(x)))
        }
    };
    let f = |x: f64| -> Result<f64> {
        let d = dens(x)?;
        if d == 0.0 {
            return Ok(0.0);
        }
        Ok((u.u(&[x])? - r.u(&[x])?) * d)
    };
    Ok(integrate_line(&f, tol)?.scale(1.0 / u.poly().volume))
}

/// Relative entropy `(1/2) int log(MA(u) / MA(u_ref)) MA(u)`.
pub fn entropy_h(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    same_polytope(u, r)?;
    let f = |y: &[f64]| -> Result<f64> {
        let pu = u.at_y(y)?;
        let pr = r.at_x(&pu.x)?;
        Ok(-0.5 * (pu.log_det_g - pr.log_det_g))
    };
    let cells = common_cells(u, r)?;
    average(u, &cells, &f, tol)
}

/// Mabuchi functional through `M = H + R + Sbar E`.
pub fn mabuchi_m(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    let s = u.poly().mean_s;
    Ok(entropy_h(u, r, tol)? + ricci_energy_r(u, r, tol)? + energy_e(u, r, tol)?.scale(s))
}

/// Scalar curvature as a function on the interior of `P`.
pub fn scalar_curvature(u: &ToricPotential) -> impl Fn(&[f64]) -> Result<f64> + '_ {
    move |y: &[f64]| u.scalar_curvature(y)
}

/// `int S MA(u)`, which equals the mean scalar curvature.
pub fn mean_scalar_curvature(u: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    let f = |y: &[f64]| u.scalar_curvature(y);
    average(u, u.cells(), &f, tol)
}

/// `log int_{R^n} exp(-2 (u - <m0, x>)) dx` for the unshifted potential.
fn log_partition(u: &ToricPotential, m0: &[f64], tol: Tolerance) -> Result<f64> {
    let expo = |y: &[f64]| -> Result<(f64, f64)> {
        let p = u.at_y(y)?;
        let ux = dot(&p.x, y) - p.g;
        Ok((-2.0 * (ux - dot(m0, &p.x)), p.log_det_g))
    };
    let kinks = u.kinks_1d()?;
    let kink_log = |(y, g, lo, hi): (f64, f64, f64, f64)| -> f64 {
        let k = y - m0[0];
        // int_lo^hi exp(-2 (x y - g - m0 x)) dx
        if k.abs() < 1e-300 {
            2.0 * g + (hi - lo).ln()
        } else {
            let (a, b) = (-2.0 * k * lo, -2.0 * k * hi);
            let (big, small) = if a > b { (a, b) } else { (b, a) };
            2.0 * g + big + (1.0 - (small - big).exp()).ln() - (2.0 * k.abs()).ln()
        }
    };
    let mut c0 = f64::NEG_INFINITY;
    for y in u.sample_points(16) {
        let (e, ld) = expo(&y)?;
        c0 = c0.max(e + ld);
    }
    for &k in &kinks {
        c0 = c0.max(kink_log(k));
    }
    let f = |y: &[f64]| -> Result<f64> {
        let (e, ld) = expo(y)?;
        Ok((e + ld - c0).exp())
    };
    let vol = u.poly().volume;
    let body = average(u, u.cells(), &f, tol)?.value * vol;
    let gaps: f64 = kinks.iter().map(|&k| (kink_log(k) - c0).exp()).sum();
    let total = body + gaps;
    if !(total > 0.0) {
        return Err(Error::Quadrature { residual: total });
    }
    Ok(c0 + total.ln())
}

/// Ding's `L`, normalized so that `L(u_ref) = 0`; needs an anticanonical polytope.
pub fn ding_l(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<f64> {
    same_polytope(u, r)?;
    let m0 = vec_f64(&u.moment().anticanonical_shift()?);
    let lu = log_partition(u, &m0, tol)?;
    let lr = log_partition(r, &m0, tol)?;
    Ok(-0.5 * (lu - lr) + u.shift() - r.shift())
}

pub fn ding_d(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
    let l = ding_l(u, r, tol)?;
    let e = energy_e(u, r, tol)?;
    Ok(Estimate {
        value: l - e.value,
        error: e.error,
    })
}

/// Monge-Ampere measure `V^-1 (dd^c phi)^n`, of total mass one.
pub struct MaMeasure<'a> {
    u: &'a ToricPotential,
}

pub fn ma_measure(u: &ToricPotential) -> MaMeasure<'_> {
    MaMeasure { u }
}

impl MaMeasure<'_> {
    /// Density with respect to Lebesgue measure in the real coordinates.
    pub fn density_x(&self, x: &[f64]) -> Result<f64> {
        let p = self.u.at_x(x)?;
        Ok((-p.log_det_g).exp() / self.u.poly().volume)
    }

    /// Total mass, integrated on the real side.
    pub fn total_mass(&self, tol: Tolerance) -> Result<Estimate> {
        match self.u.dim() {
            1 => integrate_line(&|x: f64| self.density_x(&[x]), tol),
            2 => integrate_line(
                &|x0: f64| Ok(integrate_line(&|x1: f64| self.density_x(&[x0, x1]), tol)?.value),
                tol,
            ),
            d => Err(Error::Unsupported(format!("mass quadrature in dimension {d}"))),
        }
    }

    /// `int w dMA` for a function `w` of the real coordinates.
    pub fn integrate(&self, w: &dyn Fn(&[f64]) -> Result<f64>, tol: Tolerance) -> Result<Estimate> {
        let f = |y: &[f64]| -> Result<f64> { w(&self.u.at_y(y)?.x) };
        average_by(self.u, self.u.cells(), &f, tol, integrate_cell_smooth)
    }

    /// `int w dMA` for a function of the whole point pair `(x, y, G)`.
    pub fn integrate_pair(&self, w: &dyn Fn(&Pair) -> Result<f64>, tol: Tolerance) -> Result<Estimate> {
        let f = |y: &[f64]| -> Result<f64> { w(&self.u.at_y(y)?) };
        average_by(self.u, self.u.cells(), &f, tol, integrate_cell_smooth)
    }
}

/// Symplectic potential `u*` of a potential, as a function on `P`.
pub struct LegendreDual<'a> {
    u: &'a ToricPotential,
}

pub fn legendre(u: &ToricPotential) -> LegendreDual<'_> {
    LegendreDual { u }
}

impl LegendreDual<'_> {
    pub fn value(&self, y: &[f64]) -> Result<f64> {
        self.u.g(y)
    }

    pub fn grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.u.at_y(y)?.x)
    }

    /// `sup |u(x) - u**(x)|` over the given points, where the second transform is
    /// computed by golden-section search from values of `u*` alone.
    pub fn involution_error(&self, xs: &[f64]) -> Result<f64> {
        if self.u.dim() != 1 {
            return Err(Error::Unsupported("involution check on intervals only".into()));
        }
        let (a, b) = self.u.poly().interval();
        let mut worst: f64 = 0.0;
        for &x in xs {
            let phi = |y: f64| -> Result<f64> { Ok(x * y - self.value(&[y])?) };
            let gr = 0.5 * (5f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (a, b);
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let (mut fc, mut fd) = (phi(c)?, phi(d)?);
            for _ in 0..200 {
                if fc > fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = phi(c)?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = phi(d)?;
                }
            }
            let best = [phi(a)?, phi(b)?, fc, fd].into_iter().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((best - self.u.u(&[x])?).abs());
        }
        Ok(worst)
    }
}

/// All functionals of a potential relative to a reference.
#[derive(Clone, Debug)]
pub struct FunctionalReport {
    pub e: Estimate,
    pub i: Estimate,
    pub j: Estimate,
    pub r: Estimate,
    pub h: Estimate,
    pub m: Estimate,
    pub l: Option<f64>,
    pub d: Option<Estimate>,
}

impl FunctionalReport {
    pub fn compute(u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Self> {
        let e = energy_e(u, r, tol)?;
        let a_ref = against_ref(u, r, tol)?;
        let a_self = against_self(u, r, tol)?;
        let rr = ricci_energy_r(u, r, tol)?;
        let h = entropy_h(u, r, tol)?;
        let s = u.poly().mean_s;
        let m = h + rr + e.scale(s);
        let l = match ding_l(u, r, tol) {
            Ok(l) => Some(l),
            Err(Error::NotAnticanonical) => None,
            Err(e) => return Err(e),
        };
        let d = l.map(|l| Estimate {
            value: l - e.value,
            error: e.error,
        });
        Ok(FunctionalReport {
            e,
            i: a_ref - a_self,
            j: a_ref - e,
            r: rr,
            h,
            m,
            l,
            d,
        })
    }

    pub fn entries(&self) -> Vec<(&'static str, Estimate)> {
        let mut v = vec![
            ("E", self.e),
            ("I", self.i),
            ("J", self.j),
            ("R", self.r),
            ("H", self.h),
            ("M", self.m),
        ];
        if let (Some(l), Some(d)) = (self.l, self.d) {
            v.push((
                "L",
                Estimate {
                    value: l,
                    error: d.error,
                },
            ));
            v.push(("D", d));
        }
        v
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (k, e) in self.entries() {
            m.insert(k.to_string(), json!({"value": e.value, "error": e.error}));
        }
        Value::Object(m)
    }
}

/// Outcome of the two comparison inequalities between nearby metrics.
#[derive(Clone, Debug)]
pub struct ShiftReport {
    pub sup_diff: f64,
    pub j_gap: f64,
    pub j_bound: f64,
    pub j_holds: bool,
    pub m_drop: f64,
    pub m_constant: Option<f64>,
    pub m_holds: Option<bool>,
}

/// `sup |u - v|`, computed as `sup |G_u - G_v|` over a grid of `P` including its boundary.
pub fn sup_distance(u: &ToricPotential, v: &ToricPotential) -> Result<f64> {
    let mut pts = u.sample_points(if u.dim() == 1 { 400 } else { 48 });
    for vert in u.moment().poly().vertices() {
        pts.push(vec_f64(vert));
    }
    let mut best: f64 = 0.0;
    for y in pts {
        best = best.max((u.g(&y)? - v.g(&y)?).abs());
    }
    Ok(best)
}

/// Checks `|J(u) - J(v)| <= 2 sup|u - v|` and, on curves,
/// `M(u) >= M(v) - (sup|S_v| + Sbar) sup|u - v|`.
pub fn shift_inequality_check(
    u: &ToricPotential,
    v: &ToricPotential,
    r: &ToricPotential,
    tol: Tolerance,
) -> Result<ShiftReport> {
    let d = sup_distance(u, v)?;
    let jg = (functional_j(u, r, tol)?.value - functional_j(v, r, tol)?.value).abs();
    let slack = 1e-7;
    let m_drop = mabuchi_m(v, r, tol)?.value - mabuchi_m(u, r, tol)?.value;
    let m_constant = if u.dim() == 1 {
        let mut smax: f64 = 0.0;
        for y in v.sample_points(200) {
            smax = smax.max(v.scalar_curvature(&y)?.abs());
        }
        Some(smax + u.poly().mean_s)
    } else {
        None
    };
    Ok(ShiftReport {
        sup_diff: d,
        j_gap: jg,
        j_bound: 2.0 * d,
        j_holds: jg <= 2.0 * d + slack,
        m_drop,
        m_constant,
        m_holds: m_constant.map(|c| m_drop <= c * d + slack),
    })
}

/// Startup calibration: unit Monge-Ampere mass and `E(u_ref + c) = c` for the reference.
pub fn calibration_check(r: &ToricPotential, tol: Tolerance) -> Result<()> {
    let mass = ma_measure(r).total_mass(tol)?.value;
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Inconsistent(format!("Monge-Ampere mass {mass} differs from 1")));
    }
    let e = energy_e(&r.plus_const(1.5), r, tol)?.value;
    if (e - 1.5).abs() > 1e-12 {
        return Err(Error::Inconsistent(format!("E(u_ref + 1.5) = {e}")));
    }
    Ok(())
}

/// First variations of `E` and `M` along `c_k -> c_k exp(2 t a_k)`, by central
/// differences and by the Monge-Ampere formulas.
#[derive(Clone, Copy, Debug)]
pub struct VariationReport {
    pub de_fd: f64,
    pub de_formula: f64,
    pub dm_fd: f64,
    pub dm_formula: f64,
}

impl VariationReport {
    pub fn max_error(&self) -> f64 {
        (self.de_fd - self.de_formula)
            .abs()
            .max((self.dm_fd - self.dm_formula).abs())
    }
}

pub fn variation_check(
    p: &crate::polytope::MomentPolytope,
    coeffs: &[f64],
    dir: &[f64],
    r: &ToricPotential,
    h: f64,
    tol: Tolerance,
) -> Result<VariationReport> {
    if dir.len() != coeffs.len() {
        return Err(Error::InvalidInput(
            "direction needs one weight per lattice point".into(),
        ));
    }
    let at = |t: f64| -> Result<ToricPotential> {
        let c: Vec<f64> = coeffs.iter().zip(dir).map(|(c, a)| c * (2.0 * t * a).exp()).collect();
        ToricPotential::lse_weights(p, &c)
    };
    let u = at(0.0)?;
    let (up, um) = (at(h)?, at(-h)?);
    let de_fd = (energy_e(&up, r, tol)?.value - energy_e(&um, r, tol)?.value) / (2.0 * h);
    let dm_fd = (mabuchi_m(&up, r, tol)?.value - mabuchi_m(&um, r, tol)?.value) / (2.0 * h);
    let l = match u.repr() {
        Repr::Lse(l) => l.clone(),
        Repr::Dual(_) => unreachable!("built from weights"),
    };
    // w = du/dt = sum a_k pi_k(x)
    let w = |x: &[f64]| -> f64 {
        let e: Vec<f64> = l
            .points
            .iter()
            .zip(&l.weights)
            .map(|(k, wk)| l.beta * dot(k, x) + wk)
            .collect();
        let z = super::lse::log_sum_exp(&e);
        e.iter().zip(dir).map(|(ei, a)| a * (ei - z).exp()).sum()
    };
    let mu = ma_measure(&u);
    let sbar = u.poly().mean_s;
    let de = mu.integrate(&|x| Ok(w(x)), tol)?;
    let dm = mu.integrate(&|x| Ok(w(x) * (sbar - u.scalar_curvature_x(x)?)), tol)?;
    Ok(VariationReport {
        de_fd,
        de_formula: de.value,
        dm_fd,
        dm_formula: dm.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archimedean::{Profile, Ridge};
    use crate::polytope::MomentPolytope;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn p1() -> MomentPolytope {
        MomentPolytope::interval(0, 1).unwrap()
    }

    /// Random smooth potentials on an interval: log-sum-exp on [0,3] and ridge perturbations on [0,1].
    fn samples(seed: u64, k: usize) -> Vec<(ToricPotential, ToricPotential)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..k {
            if i % 2 == 0 {
                let p = MomentPolytope::interval(0, 3).unwrap();
                let c: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..5.0)).collect();
                let round = ToricPotential::lse_weights(&p, &[1.0, 3.0, 3.0, 1.0]).unwrap();
                out.push((ToricPotential::lse_weights(&p, &c).unwrap(), round));
            } else {
                let a = rng.gen_range(-0.15..0.15);
                let b = rng.gen_range(-0.3..0.3);
                let u = ToricPotential::symplectic(
                    &p1(),
                    vec![
                        Ridge::new(a, vec![1.0], 0.0, Profile::Pow(3)),
                        Ridge::new(b, vec![1.0], 0.0, Profile::Pow(2)),
                    ],
                )
                .unwrap();
                out.push((u, ToricPotential::fs(&p1()).unwrap()));
            }
        }
        out
    }

    #[test]
    fn translation_laws() {
        let p = MomentPolytope::interval(0, 3).unwrap();
        let u = ToricPotential::lse_weights(&p, &[1.0, 0.3, 2.0, 1.5]).unwrap();
        let r = ToricPotential::fs(&p).unwrap();
        let c = 0.7;
        let base = FunctionalReport::compute(&u, &r, tol()).unwrap();
        let moved = FunctionalReport::compute(&u.plus_const(c), &r, tol()).unwrap();
        assert!((moved.e.value - base.e.value - c).abs() < 1e-12);
        assert!((moved.j.value - base.j.value).abs() < 1e-12);
        assert!((moved.i.value - base.i.value).abs() < 1e-12);
        assert!((moved.h.value - base.h.value).abs() < 1e-12);
        assert!((moved.r.value - base.r.value + 2.0 / 3.0 * c).abs() < 1e-9);
        assert!((moved.m.value - base.m.value).abs() < 1e-9);
        let e = energy_e(&r.plus_const(c), &r, tol()).unwrap().value;
        assert_eq!(e, c);
    }

    #[test]
    fn energy_of_translated_fs() {
        // u(x) = u_fs(x + a) has G(y) = G_fs(y) - a y, so E = a/2 on [0,1].
        let a: f64 = 0.4;
        let u = ToricPotential::lse_weights(&p1(), &[1.0, (2.0 * a).exp()]).unwrap();
        let r = ToricPotential::fs(&p1()).unwrap();
        assert!((energy_e(&u, &r, tol()).unwrap().value - a / 2.0).abs() < 1e-10);
        // Products on the square add up.
        let sq = MomentPolytope::unit_square().unwrap();
        let (c1, c2): (f64, f64) = (2.0, 0.5);
        let u = ToricPotential::lse_weights(&sq, &[1.0, c2, c1, c1 * c2]).unwrap();
        let r = ToricPotential::fs(&sq).unwrap();
        let e = energy_e(&u, &r, tol()).unwrap().value;
        assert!((e - (c1.ln() + c2.ln()) / 4.0).abs() < 1e-9, "{e}");
    }

    #[test]
    fn energy_matches_real_side_oracle() {
        // n = 1: E = (1/2) int (u - u_ref)(MA(u) + MA(u_ref)), integrated in x.
        for (u, r) in samples(7, 4) {
            let vol = u.poly().volume;
            let f = |x: f64| -> Result<f64> {
                let du = (-u.at_x(&[x])?.log_det_g).exp();
                let dr = (-r.at_x(&[x])?.log_det_g).exp();
                Ok(0.5 * (u.u(&[x])? - r.u(&[x])?) * (du + dr) / vol)
            };
            let oracle = integrate_line(&f, tol()).unwrap().value;
            let e = energy_e(&u, &r, tol()).unwrap().value;
            assert!((e - oracle).abs() < 1e-8, "{e} {oracle}");
        }
    }

    #[test]
    fn i_is_twice_j_on_curves() {
        for (u, r) in samples(11, 6) {
            let i = functional_i(&u, &r, tol()).unwrap().value;
            let j = functional_j(&u, &r, tol()).unwrap().value;
            assert!(j > 0.0);
            assert!((i - 2.0 * j).abs() <= 1e-6 * i.max(1.0), "{i} {j}");
        }
    }

    #[test]
    fn ricci_energy_matches_twisted_energy() {
        for (u, r) in samples(5, 4) {
            let a = ricci_energy_r(&u, &r, tol()).unwrap().value;
            let b = twisted_energy(&u, &r, &Theta::Ricci, tol()).unwrap().value;
            assert!((a - b).abs() < 1e-7, "{a} {b}");
            assert_eq!(twisted_energy(&u, &r, &Theta::Zero, tol()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn fs_measure_and_curvature() {
        let r = ToricPotential::fs(&p1()).unwrap();
        let ma = ma_measure(&r);
        for &x in &[-3.0, 0.0, 0.8] {
            let e = (2.0f64 * x).exp();
            assert!((ma.density_x(&[x]).unwrap() - 2.0 * e / (1.0 + e).powi(2)).abs() < 1e-12);
        }
        assert!((ma.total_mass(tol()).unwrap().value - 1.0).abs() < 1e-9);
        calibration_check(&r, tol()).unwrap();
        let sq = ToricPotential::fs(&MomentPolytope::unit_square().unwrap()).unwrap();
        assert!((ma_measure(&sq).total_mass(tol()).unwrap().value - 1.0).abs() < 1e-9);
        let fs = ToricPotential::fs(&MomentPolytope::interval(0, 2).unwrap()).unwrap();
        for (u, _) in samples(3, 4).into_iter().chain([(fs.clone(), fs)]) {
            let s = mean_scalar_curvature(&u, tol()).unwrap().value;
            assert!((s - u.poly().mean_s).abs() < 1e-6, "{s}");
        }
    }

    #[test]
    fn legendre_closed_forms() {
        // log(1 + e^x) on [0,1]
        let l = crate::archimedean::Lse::new(1.0, vec![vec![0.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        let u = ToricPotential::from_lse(&p1(), l, vec![p1().poly().clone()]).unwrap();
        let d = legendre(&u);
        for &y in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let exact = if y == 0.0 || y == 1.0 {
                0.0
            } else {
                y * f64::ln(y) + (1.0 - y) * (1.0 - y).ln()
            };
            assert!((d.value(&[y]).unwrap() - exact).abs() < 1e-12);
        }
        let fs = ToricPotential::fs(&MomentPolytope::interval(0, 2).unwrap()).unwrap();
        let xs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.5).collect();
        assert!(legendre(&fs).involution_error(&xs).unwrap() < 1e-7);
    }

    #[test]
    fn representation_independence() {
        let p = MomentPolytope::interval(0, 2).unwrap();
        let fs = ToricPotential::fs(&p).unwrap();
        let vals: Vec<f64> = (0..801).map(|i| fs.g(&[i as f64 / 400.0]).unwrap()).collect();
        let grid = ToricPotential::grid(&p, &vals).unwrap();
        let a = FunctionalReport::compute(&grid, &fs, tol()).unwrap();
        for (k, e) in a.entries() {
            assert!(e.value.abs() < 1e-7, "{k} {}", e.value);
        }
    }

    #[test]
    fn positivity_and_fs_minimum() {
        for (u, r) in samples(13, 6) {
            let rep = FunctionalReport::compute(&u, &r, tol()).unwrap();
            assert!(rep.h.value >= -1e-9 && rep.j.value >= -1e-9);
            assert!(rep.m.value >= -1e-6, "{:?}", rep.m);
        }
    }

    #[test]
    fn ding_inequalities_on_anticanonical_line() {
        let p = MomentPolytope::interval(0, 2).unwrap();
        let r = ToricPotential::lse_weights(&p, &[1.0, 2.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let c: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..5.0)).collect();
            let u = ToricPotential::lse_weights(&p, &c).unwrap();
            let rep = FunctionalReport::compute(&u, &r, tol()).unwrap();
            let d = rep.d.unwrap().value;
            assert!(d <= rep.m.value + 1e-6 && d <= rep.j.value + 1e-6, "{rep:?}");
            let moved = ding_d(&u.plus_const(0.9), &r, tol()).unwrap().value;
            assert!((moved - d).abs() < 1e-10);
        }
        let sq = MomentPolytope::unit_square().unwrap();
        let fs = ToricPotential::fs(&sq).unwrap();
        assert!(matches!(ding_l(&fs, &fs, tol()), Err(Error::NotAnticanonical)));
    }

    #[test]
    fn shift_inequalities() {
        for (u, r) in samples(19, 4) {
            let v = if u.dim() == 1 { r.clone() } else { continue };
            let rep = shift_inequality_check(&u, &v, &r, tol()).unwrap();
            assert!(rep.j_holds && rep.m_holds.unwrap(), "{rep:?}");
        }
    }

    #[test]
    fn first_variations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [
            MomentPolytope::interval(0, 3).unwrap(),
            MomentPolytope::unit_square().unwrap(),
        ] {
            let r = ToricPotential::fs(&p).unwrap();
            let k = p.lattice_points().len();
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
            let a: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = variation_check(&p, &c, &a, &r, 1e-4, tol()).unwrap();
            assert!(v.max_error() < 1e-5, "{v:?}");
        }
    }
}
