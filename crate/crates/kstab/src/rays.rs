//! Rays of metrics attached to a PL direction and the slopes of functionals along them.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde_json::{json, Value};

use crate::archimedean::{
    against_ref, against_self, ding_d, energy_e, entropy_h, mabuchi_m, ricci_energy_r, Lse, PlTerm, ToricPotential,
};
use crate::error::{Error, Result};
use crate::nonarchimedean::{make_config, NaFunctionalReport, PlConvexFunction};
use crate::polytope::MomentPolytope;
use crate::quadrature::{Estimate, Tolerance};
use crate::rational::{self, to_f64, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayKind {
    /// `G_s = G_0 + s f`.
    Legendre,
    /// `(1/2m) log sum exp(2 <k, x> - 2 s m f(k/m))` over `k` in `mP`.
    Bergman,
}

impl FromStr for RayKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legendre" => Ok(RayKind::Legendre),
            "bergman" => Ok(RayKind::Bergman),
            k => Err(Error::InvalidInput(format!("unknown ray kind {k:?}"))),
        }
    }
}

impl RayKind {
    pub fn name(self) -> &'static str {
        match self {
            RayKind::Legendre => "legendre",
            RayKind::Bergman => "bergman",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functional {
    E,
    I,
    J,
    R,
    H,
    M,
    D,
}

impl FromStr for Functional {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "E" => Functional::E,
            "I" => Functional::I,
            "J" => Functional::J,
            "R" => Functional::R,
            "H" => Functional::H,
            "M" => Functional::M,
            "D" => Functional::D,
            f => return Err(Error::InvalidInput(format!("unknown functional {f:?}"))),
        })
    }
}

impl Functional {
    pub const ALL: [Functional; 7] = [
        Functional::E,
        Functional::I,
        Functional::J,
        Functional::R,
        Functional::H,
        Functional::M,
        Functional::D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::E => "E",
            Functional::I => "I",
            Functional::J => "J",
            Functional::R => "R",
            Functional::H => "H",
            Functional::M => "M",
            Functional::D => "D",
        }
    }

    pub fn eval(self, u: &ToricPotential, r: &ToricPotential, tol: Tolerance) -> Result<Estimate> {
        match self {
            Functional::E => energy_e(u, r, tol),
            Functional::I => Ok(against_ref(u, r, tol)? - against_self(u, r, tol)?),
            Functional::J => Ok(against_ref(u, r, tol)? - energy_e(u, r, tol)?),
            Functional::R => ricci_energy_r(u, r, tol),
            Functional::H => entropy_h(u, r, tol),
            Functional::M => mabuchi_m(u, r, tol),
            Functional::D => ding_d(u, r, tol),
        }
    }

    /// Non-Archimedean value of the direction.
    pub fn target(self, na: &NaFunctionalReport) -> Result<Q> {
        Ok(match self {
            Functional::E => na.e.clone(),
            Functional::I => na.i.clone(),
            Functional::J => na.j.clone(),
            Functional::R => na.r.clone(),
            Functional::H => na.h.clone(),
            Functional::M => na.m.clone(),
            Functional::D => na.d.clone().ok_or(Error::NotAnticanonical)?,
        })
    }
}

/// Geometric grid of `k` points in `[a, b]`.
pub fn geometric_grid(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k < 2 {
        return vec![a];
    }
    (0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)).collect()
}

#[derive(Clone, Debug)]
pub struct RaySpec {
    pub base: ToricPotential,
    pub direction: PlConvexFunction,
    pub kind: RayKind,
    /// Soft-max width for the kinks of `s f` on a Legendre ray; 0 keeps them sharp.
    pub eps: f64,
    pub s_grid: Vec<f64>,
    /// Level of a Bergman ray; the minimal admissible level when `None`.
    pub m: Option<u64>,
}

impl RaySpec {
    /// Legendre ray from `base` with the default grid.
    pub fn new(base: ToricPotential, direction: PlConvexFunction) -> Self {
        RaySpec {
            base,
            direction,
            kind: RayKind::Legendre,
            eps: 0.0,
            s_grid: geometric_grid(10.0, 200.0, 16),
            m: None,
        }
    }

    pub fn kind(mut self, kind: RayKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn grid(mut self, s: Vec<f64>) -> Self {
        self.s_grid = s;
        self
    }

    pub fn level(mut self, m: u64) -> Self {
        self.m = Some(m);
        self
    }

    fn check(&self) -> Result<()> {
        if self.direction.poly().poly() != self.base.moment().poly() {
            return Err(Error::InvalidInput("direction lives on another polytope".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidInput("smoothing must be nonnegative".into()));
        }
        if self.s_grid.windows(2).any(|w| !(w[0] < w[1])) || self.s_grid.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidInput("s grid must be positive and increasing".into()));
        }
        Ok(())
    }
}

/// `m f(k/m)` over the lattice points `k` of `mP`, or `None` if some value is fractional
/// or some node of `f` is off `(1/m) Z^n`.
pub(crate) fn bergman_weights(f: &PlConvexFunction, m: u64) -> Result<Option<Vec<(Vec<Q>, Q)>>> {
    let mq = Q::from_integer(BigInt::from(m));
    for v in f.nodes() {
        if v.iter().any(|x| !(x * &mq).is_integer()) {
            return Ok(None);
        }
    }
    let scaled = MomentPolytope::new(f.poly().poly().scale(&mq)?)?;
    let mut out = Vec::new();
    for k in scaled.lattice_points() {
        let y: Vec<Q> = k.iter().map(|&a| Q::from_integer(BigInt::from(a)) / &mq).collect();
        let w = f.eval(&y) * &mq;
        if !w.is_integer() {
            return Ok(None);
        }
        out.push((y, w));
    }
    Ok(Some(out))
}

/// Smallest level at which `f` is integral on `(1/m) Z^n`.
pub fn minimal_level(f: &PlConvexFunction) -> Result<u64> {
    let mut d = BigInt::one();
    for v in f.nodes() {
        d = d.lcm(&rational::lcm_den(&v));
    }
    let mut vals = BigInt::one();
    for p in f.pieces() {
        vals = vals.lcm(&rational::lcm_den(p.slope.iter().chain([&p.constant])));
    }
    let d: u64 = d.try_into().map_err(|_| Error::Integrality("level too large".into()))?;
    let cap: u64 = vals.try_into().unwrap_or(u64::MAX / d.max(1));
    for j in 1..=cap.max(1) {
        let m = d * j;
        if bergman_weights(f, m)?.is_some() {
            return Ok(m);
        }
    }
    Err(Error::Integrality("no level makes the weights integral".into()))
}

/// The metric of the ray at time `s >= 0`.
pub fn ray_at(spec: &RaySpec, s: f64) -> Result<ToricPotential> {
    spec.check()?;
    if !(s >= 0.0) {
        return Err(Error::InvalidInput("ray time must be nonnegative".into()));
    }
    let p = spec.base.moment();
    let cells: Vec<_> = spec.direction.pieces().iter().map(|c| c.cell.clone()).collect();
    match spec.kind {
        RayKind::Legendre => {
            if s == 0.0 {
                return Ok(spec.base.clone());
            }
            let mut dual = spec.base.dual_of();
            if dual.pl.is_some() {
                return Err(Error::Unsupported("base already carries a PL term".into()));
            }
            // soft maximum of s f at width eps, i.e. of f at width eps / s
            dual.pl = Some(PlTerm::new(s, spec.direction.pieces().to_vec(), spec.eps / s)?);
            let u = ToricPotential::from_dual(p, dual, cells)?;
            Ok(u.plus_const(spec.base.shift()))
        }
        RayKind::Bergman => {
            let m = match spec.m {
                Some(m) => m,
                None => minimal_level(&spec.direction)?,
            };
            let w = bergman_weights(&spec.direction, m)?
                .ok_or_else(|| Error::Integrality(format!("level {m} does not clear the denominators")))?;
            let beta = 2.0 * m as f64;
            let points = w.iter().map(|(y, _)| rational::vec_f64(y)).collect();
            let weights = w.iter().map(|(_, v)| -2.0 * s * to_f64(v)).collect();
            ToricPotential::from_lse(p, Lse::new(beta, points, weights)?, cells)
        }
    }
}

fn target_of(spec: &RaySpec, f: Functional) -> Result<Q> {
    let cfg = make_config(spec.base.moment(), &spec.direction)?;
    f.target(&NaFunctionalReport::compute(&cfg)?)
}

/// Evaluates `F` along the grid in parallel, keeping grid order.
fn samples(
    spec: &RaySpec,
    f: Functional,
    reference: &ToricPotential,
    s_grid: &[f64],
    tol: Tolerance,
) -> Vec<Result<Estimate>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = s_grid
            .iter()
            .map(|&s| scope.spawn(move || f.eval(&ray_at(spec, s)?, reference, tol)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Inconsistent("sample worker panicked".into())))
            })
            .collect()
    })
}

/// Least squares `y = a + b x`; returns `(b, a, stderr of b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (b, a, se)
}

/// Least squares `y = a + b x + c log x`; returns `b`.
fn log_corrected_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let m = nalgebra::DMatrix::from_fn(x.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => x[i],
        _ => x[i].ln(),
    });
    let v = nalgebra::DVector::from_column_slice(y);
    let sol = m.svd(true, true).solve(&v, 1e-14).ok()?;
    Some(sol[1])
}

#[derive(Clone, Debug)]
pub struct SlopeReport {
    pub functional: Functional,
    pub kind: RayKind,
    pub eps: f64,
    /// `(s, F(phi^s), quadrature error)` for every sample that converged.
    pub samples: Vec<(f64, f64, f64)>,
    /// Grid points whose evaluation failed.
    pub failures: Vec<(f64, String)>,
    pub slope: f64,
    pub stderr: f64,
    /// Difference to the slope of a fit with an extra `log s` term.
    pub extrapolation_error: f64,
    pub target: Q,
    pub pass: bool,
}

impl SlopeReport {
    /// `max(2% |target|, 5e-3)`.
    pub fn tolerance(&self) -> f64 {
        (0.02 * to_f64(&self.target).abs()).max(5e-3)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "functional": self.functional.name(),
            "kind": self.kind.name(),
            "eps": self.eps,
            "slope": self.slope,
            "stderr": self.stderr,
            "extrapolation_error": self.extrapolation_error,
            "target": rational::encode(&self.target),
            "target_value": to_f64(&self.target),
            "tolerance": self.tolerance(),
            "pass": self.pass,
            "samples": self.samples.iter().map(|(s, v, e)| json!({"s": s, "value": v, "error": e})).collect::<Vec<_>>(),
            "failures": self.failures.iter().map(|(s, e)| json!({"s": s, "error": e})).collect::<Vec<_>>(),
        })
    }

    /// Rows `s,F,F/s`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,F,F_over_s\n");
        for (s, v, _) in &self.samples {
            out.push_str(&format!("{s},{v},{}\n", v / s));
        }
        out
    }
}

/// Slope at infinity of `F` along the ray, regressed over the top half of the grid,
/// against the non-Archimedean value of the direction.
pub fn slope(spec: &RaySpec, f: Functional, reference: &ToricPotential, tol: Tolerance) -> Result<SlopeReport> {
    spec.check()?;
    let target = target_of(spec, f)?;
    let res = samples(spec, f, reference, &spec.s_grid, tol);
    let mut good = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in spec.s_grid.iter().zip(res) {
        match r {
            Ok(e) => good.push((*s, e.value, e.error)),
            Err(e @ (Error::Quadrature { .. } | Error::Degenerate(_))) => failures.push((*s, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let half = spec.s_grid[spec.s_grid.len() / 2];
    let top: Vec<&(f64, f64, f64)> = good.iter().filter(|(s, _, _)| *s >= half).collect();
    let (sl, se, ex) = if top.len() >= 2 {
        let x: Vec<f64> = top.iter().map(|t| t.0).collect();
        let y: Vec<f64> = top.iter().map(|t| t.1).collect();
        let (b, _, se) = linear_fit(&x, &y);
        let ex = if top.len() >= 4 {
            log_corrected_slope(&x, &y).map_or(f64::NAN, |c| (c - b).abs())
        } else {
            f64::NAN
        };
        (b, se, ex)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let mut rep = SlopeReport {
        functional: f,
        kind: spec.kind,
        eps: spec.eps,
        samples: good,
        failures,
        slope: sl,
        stderr: se,
        extrapolation_error: ex,
        target,
        pass: false,
    };
    rep.pass = (rep.slope - to_f64(&rep.target)).abs() <= rep.tolerance();
    Ok(rep)
}

/// Slopes for each smoothing width in `eps`, with the spread between them.
pub fn eps_sweep(
    spec: &RaySpec,
    f: Functional,
    reference: &ToricPotential,
    eps: &[f64],
    tol: Tolerance,
) -> Result<(Vec<SlopeReport>, f64)> {
    let mut reps = Vec::new();
    for &e in eps {
        reps.push(slope(&spec.clone().eps(e), f, reference, tol)?);
    }
    let lo = reps.iter().map(|r| r.slope).fold(f64::INFINITY, f64::min);
    let hi = reps.iter().map(|r| r.slope).fold(f64::NEG_INFINITY, f64::max);
    Ok((reps, hi - lo))
}

#[derive(Clone, Debug)]
pub struct LogCorrection {
    /// `(s, M(phi^s) - s M^NA, ratio to log s)`.
    pub residuals: Vec<(f64, f64, f64)>,
    /// Largest ratio over the top half of the grid.
    pub sup_ratio: f64,
    /// The same over the doubled grid.
    pub doubled_sup_ratio: f64,
    /// Slope of the residual against `log s` on the top half.
    pub log_slope: f64,
    pub bounded: bool,
}

impl LogCorrection {
    pub fn to_json(&self) -> Value {
        json!({
            "sup_ratio": self.sup_ratio,
            "doubled_sup_ratio": self.doubled_sup_ratio,
            "log_slope": self.log_slope,
            "bounded": self.bounded,
            "residuals": self.residuals.iter().map(|(s, r, q)| json!({"s": s, "residual": r, "ratio": q})).collect::<Vec<_>>(),
        })
    }
}

/// Checks that `M(phi^s) - s M^NA` grows at most like `log s`.
pub fn entropy_log_correction(spec: &RaySpec, reference: &ToricPotential, tol: Tolerance) -> Result<LogCorrection> {
    spec.check()?;
    if spec.s_grid.iter().any(|s| *s <= 1.0) {
        return Err(Error::InvalidInput("log correction needs s > 1".into()));
    }
    let target = to_f64(&target_of(spec, Functional::M)?);
    let run = |grid: &[f64]| -> Result<Vec<(f64, f64, f64)>> {
        let mut out = Vec::new();
        for (s, r) in grid.iter().zip(samples(spec, Functional::M, reference, grid, tol)) {
            let res = r?.value - s * target;
            out.push((*s, res, res.abs() / s.ln()));
        }
        Ok(out)
    };
    let top_sup = |v: &[(f64, f64, f64)]| v[v.len() / 2..].iter().map(|t| t.2).fold(0.0, f64::max);
    let residuals = run(&spec.s_grid)?;
    let doubled: Vec<f64> = spec.s_grid.iter().map(|s| 2.0 * s).collect();
    let dres = run(&doubled)?;
    let top = &residuals[residuals.len() / 2..];
    let x: Vec<f64> = top.iter().map(|t| t.0.ln()).collect();
    let y: Vec<f64> = top.iter().map(|t| t.1).collect();
    let log_slope = if x.len() >= 2 { linear_fit(&x, &y).0 } else { 0.0 };
    let sup_ratio = top_sup(&residuals);
    let doubled_sup_ratio = top_sup(&dres);
    Ok(LogCorrection {
        bounded: doubled_sup_ratio <= 2.0 * sup_ratio + 1e-9,
        residuals,
        sup_ratio,
        doubled_sup_ratio,
        log_slope,
    })
}

/// True when the Legendre rays of `f` and `g` differ, i.e. `f != g` as functions.
pub fn uniqueness_probe(f: &PlConvexFunction, g: &PlConvexFunction) -> Result<bool> {
    Ok(!f.same_function(g)?)
}

/// `(vol P)^-1 int_P f`, the expected slope of `-E`.
pub fn average(f: &PlConvexFunction) -> Result<Q> {
    f.average()
}
