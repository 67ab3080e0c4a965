//! Volumes of nearby fibers in the local model `z_0^b_0 ... z_p^b_p = eps tau` of an snc
//! degeneration, and the growth exponent in `log(1/tau)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rays::linear_fit;

/// Smooth positive weight on the closed unit polydisc multiplying the volume form.
#[derive(Clone, Default)]
pub enum Twist {
    #[default]
    Flat,
    /// `exp(a sum |z_i|^2)`.
    Radial(f64),
    Custom(Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Twist::Flat => write!(f, "Flat"),
            Twist::Radial(a) => write!(f, "Radial({a})"),
            Twist::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Twist {
    fn eval(&self, z: &[Complex64]) -> f64 {
        match self {
            Twist::Flat => 1.0,
            Twist::Radial(a) => (a * z.iter().map(|c| c.norm_sqr()).sum::<f64>()).exp(),
            Twist::Custom(h) => h(z),
        }
    }
}

/// Local model `z_0^b_0 ... z_p^b_p = eps tau` in the polydisc `|z_i| <= 1`, `i = 0..n`.
#[derive(Clone, Debug)]
pub struct SncModel {
    pub n: usize,
    pub p: usize,
    pub b: Vec<u32>,
    pub eps: f64,
    pub twist: Twist,
}

/// Fiber volume rule: tensor Gauss-Legendre or seeded Monte-Carlo.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    Gauss(usize),
    MonteCarlo { samples: usize, seed: u64 },
}

impl SncModel {
    pub fn new(n: usize, p: usize, b: Vec<u32>, eps: f64) -> Result<Self> {
        if n == 0 || p > n {
            return Err(Error::InvalidInput(format!(
                "need n >= 1 and 0 <= p <= n, found n = {n}, p = {p}"
            )));
        }
        if b.len() != p + 1 || b.iter().any(|&x| x == 0) {
            return Err(Error::InvalidInput(format!("need {} positive multiplicities", p + 1)));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        Ok(SncModel {
            n,
            p,
            b,
            eps,
            twist: Twist::Flat,
        })
    }

    pub fn with_twist(mut self, twist: Twist) -> Self {
        self.twist = twist;
        self
    }

    /// `{"n", "p", "b", "eps"}` with an optional `"twist": {"radial": a}`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let int = |k: &str| -> Result<usize> {
            v.get(k)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| Error::InvalidInput(format!("model needs integer \"{k}\"")))
        };
        let b: Vec<u32> = v
            .get("b")
            .and_then(|x| serde_json::from_value(x.clone()).ok())
            .ok_or_else(|| Error::InvalidInput("model needs integer multiplicities \"b\"".into()))?;
        let eps = v
            .get("eps")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::InvalidInput("model needs \"eps\"".into()))?;
        let m = Self::new(int("n")?, int("p")?, b, eps)?;
        Ok(
            match v.get("twist").and_then(|t| t.get("radial")).and_then(Value::as_f64) {
                Some(a) => m.with_twist(Twist::Radial(a)),
                None => m,
            },
        )
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({"n": self.n, "p": self.p, "b": self.b, "eps": self.eps});
        if let Twist::Radial(a) = self.twist {
            v["twist"] = json!({"radial": a});
        }
        v
    }

    /// Tensor Gauss with 32 points per dimension up to `n = 2`, Monte-Carlo beyond.
    pub fn default_rule(&self, seed: u64) -> Rule {
        if self.n <= 2 {
            Rule::Gauss(32)
        } else {
            Rule::MonteCarlo {
                samples: 1_000_000,
                seed,
            }
        }
    }

    /// `L = log 1/(eps tau)`; the chart needs `L >= 1`.
    pub fn log_inverse(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        let l = -(self.eps * tau).ln();
        if !(l >= 1.0) {
            return Err(Error::Degenerate(format!(
                "eps tau = {:e} is too close to the unit circle",
                self.eps * tau
            )));
        }
        Ok(l)
    }

    /// `(2 pi L)^p pi^(n-p) / (p! prod b_j)`, the volume for the flat twist.
    pub fn flat_volume(&self, tau: f64) -> Result<f64> {
        let l = self.log_inverse(tau)?;
        let fact: f64 = (1..=self.p).map(|k| k as f64).product();
        let bprod: f64 = self.b.iter().map(|&x| x as f64).product();
        Ok((2.0 * PI * l).powi(self.p as i32) * PI.powi((self.n - self.p) as i32) / (fact * bprod))
    }

    /// Twist at the chart point with simplex coordinates `t`, angles `theta`, branch
    /// `r` of `z_0` and polydisc point `zs`.
    fn chart_weight(&self, l: f64, t: &[f64], theta: &[f64], r: u32, zs: &[Complex64]) -> (f64, f64) {
        let p = self.p;
        let b0 = self.b[0] as f64;
        let mut z = Vec::with_capacity(self.n + 1);
        z.push(Complex64::new(0.0, 0.0));
        let (mut rest, mut jac, mut bw, mut bt) = (1.0, 1.0, 0.0, 0.0);
        for j in 1..=p {
            let bj = self.b[j] as f64;
            let x = rest * t[j - 1];
            jac *= rest / bj;
            rest -= x;
            let w = x / bj;
            bw += x;
            bt += bj * theta[j - 1];
            z.push(Complex64::from_polar((-w * l).exp(), 2.0 * PI * theta[j - 1]));
        }
        let w0 = ((1.0 - bw) / b0).max(0.0);
        let theta0 = (r as f64 - bt) / b0;
        z[0] = Complex64::from_polar((-w0 * l).exp(), 2.0 * PI * theta0);
        z.extend_from_slice(zs);
        (self.twist.eval(&z), jac)
    }
}

fn gauss(k: usize) -> Result<Vec<(f64, f64)>> {
    static RULE32: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let build = |k: usize| -> Result<Vec<(f64, f64)>> {
        Ok(GaussLegendre::new(k)
            .map_err(|e| Error::InvalidInput(format!("Gauss rule: {e}")))?
            .into_iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect())
    };
    if k == 32 {
        return Ok(RULE32.get_or_init(|| build(32).expect("32 points")).clone());
    }
    build(k)
}

/// `int_{B cap X_tau} h |eta_tau|^2` through the chart
/// `z_j = exp(-w_j L + 2 pi i theta_j)` on `simplex x T x polydisc`, in which
/// `|eta_tau|^2 = b_0^-2 (2 pi L)^p dw dtheta dA`.
pub fn fiber_volume(model: &SncModel, tau: f64, rule: Rule) -> Result<f64> {
    let l = model.log_inverse(tau)?;
    let (p, q) = (model.p, model.n - model.p);
    let dims = 2 * p + 2 * q;
    let b0 = model.b[0];
    let scale = (2.0 * PI * l).powi(p as i32) / (b0 as f64 * b0 as f64);
    let point = |u: &[f64], r: u32| -> f64 {
        let t = &u[..p];
        let theta = &u[p..2 * p];
        let mut zs = Vec::with_capacity(q);
        let mut disc = 1.0;
        for i in 0..q {
            let rad = u[2 * p + 2 * i];
            zs.push(Complex64::from_polar(rad, 2.0 * PI * u[2 * p + 2 * i + 1]));
            disc *= 2.0 * PI * rad;
        }
        let (h, jac) = model.chart_weight(l, t, theta, r, &zs);
        h * jac * disc
    };
    let total = match rule {
        Rule::Gauss(k) => {
            let g = gauss(k)?;
            let count = g.len().checked_pow(dims as u32).filter(|c| *c <= 50_000_000);
            let Some(count) = count else {
                return Err(Error::Unsupported(format!("tensor rule with {k}^{dims} points")));
            };
            let mut u = vec![0.0; dims];
            let mut sum = 0.0;
            for idx in 0..count {
                let (mut rest, mut w) = (idx, 1.0);
                for slot in u.iter_mut() {
                    let (x, wx) = g[rest % g.len()];
                    *slot = x;
                    w *= wx;
                    rest /= g.len();
                }
                for r in 0..b0 {
                    sum += w * point(&u, r);
                }
            }
            sum
        }
        Rule::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("no Monte-Carlo samples".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u = vec![0.0; dims];
            let mut sum = 0.0;
            for _ in 0..samples {
                for slot in u.iter_mut() {
                    *slot = rng.gen::<f64>();
                }
                let r = rng.gen_range(0..b0);
                sum += b0 as f64 * point(&u, r);
            }
            sum / samples as f64
        }
    };
    Ok(scale * total)
}

/// `k` points from `10^-lo` down to `10^-hi`, geometric.
pub fn tau_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| 10f64.powf(-(lo + (hi - lo) * i as f64 / (k.max(2) - 1) as f64)))
        .collect()
}

/// Six decades, two points per decade: `10^-3 .. 10^-9`.
pub fn default_tau_grid() -> Vec<f64> {
    tau_grid(3.0, 9.0, 13)
}

/// Volumes along a grid, one thread per `tau`; Monte-Carlo point `i` uses `seed + i`.
pub fn fiber_volumes(model: &SncModel, taus: &[f64], rule: Rule) -> Result<Vec<f64>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = taus
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let rule = match rule {
                    Rule::MonteCarlo { samples, seed } => Rule::MonteCarlo {
                        samples,
                        seed: seed.wrapping_add(i as u64),
                    },
                    g => g,
                };
                scope.spawn(move || fiber_volume(model, t, rule))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Inconsistent("volume worker panicked".into())))
            })
            .collect()
    })
}

#[derive(Clone, Debug)]
pub struct ExponentFit {
    pub taus: Vec<f64>,
    pub volumes: Vec<f64>,
    pub exponent: f64,
    pub intercept: f64,
    /// Root mean square residual of the log-log fit.
    pub residual: f64,
    /// `max / min` of `volume / log(1/tau)^p` over the grid.
    pub sandwich_ratio: f64,
    pub warning: bool,
}

impl ExponentFit {
    pub const RESIDUAL_WARNING: f64 = 0.05;

    pub fn to_json(&self) -> Value {
        json!({
            "exponent": self.exponent,
            "intercept": self.intercept,
            "residual": self.residual,
            "sandwich_ratio": self.sandwich_ratio,
            "warning": self.warning,
            "samples": self.taus.iter().zip(&self.volumes).map(|(t, v)| json!({"tau": t, "volume": v})).collect::<Vec<_>>(),
        })
    }

    /// Rows `tau,volume`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,volume\n");
        for (t, v) in self.taus.iter().zip(&self.volumes) {
            out.push_str(&format!("{t:e},{v:e}\n"));
        }
        out
    }
}

/// Least squares slope of `log volume` against `log log(1/tau)` on a geometric grid
/// spanning at least six decades.
pub fn exponent_fit(model: &SncModel, taus: &[f64], rule: Rule) -> Result<ExponentFit> {
    if taus.len() < 3 {
        return Err(Error::InvalidInput("need at least three grid points".into()));
    }
    if taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::InvalidInput("grid points must lie in (0, 1)".into()));
    }
    let ratios: Vec<f64> = taus.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    if ratios
        .iter()
        .any(|r| (r - ratios[0]).abs() > 1e-9 * ratios[0].abs().max(1.0))
    {
        return Err(Error::InvalidInput("grid must be geometric".into()));
    }
    let (lo, hi) = taus
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if (hi / lo).log10() < 6.0 - 1e-9 {
        return Err(Error::InvalidInput("grid must span at least six decades".into()));
    }
    let volumes = fiber_volumes(model, taus, rule)?;
    let x: Vec<f64> = taus.iter().map(|t| (-t.ln()).ln()).collect();
    let y: Vec<f64> = volumes.iter().map(|v| v.ln()).collect();
    let (slope, intercept, _) = linear_fit(&x, &y);
    let residual = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    let norm: Vec<f64> = taus
        .iter()
        .zip(&volumes)
        .map(|(t, v)| v / (-t.ln()).powi(model.p as i32))
        .collect();
    let sandwich_ratio = norm.iter().cloned().fold(0.0, f64::max) / norm.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ExponentFit {
        taus: taus.to_vec(),
        volumes,
        exponent: slope,
        intercept,
        residual,
        sandwich_ratio,
        warning: residual > ExponentFit::RESIDUAL_WARNING,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_quadrature_matches_closed_form() {
        for (n, p, b) in [
            (1, 0, vec![2]),
            (1, 1, vec![1, 1]),
            (2, 1, vec![2, 1]),
            (2, 2, vec![1, 2, 1]),
        ] {
            let m = SncModel::new(n, p, b, 1.0).unwrap();
            for tau in [1e-3, 1e-7] {
                let v = fiber_volume(&m, tau, Rule::Gauss(8)).unwrap();
                let exact = m.flat_volume(tau).unwrap();
                assert!((v - exact).abs() < 1e-10 * exact, "{m:?} {tau}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn domain_checks() {
        assert!(SncModel::new(1, 2, vec![1, 1, 1], 1.0).is_err());
        assert!(SncModel::new(2, 1, vec![1], 1.0).is_err());
        let m = SncModel::new(1, 1, vec![1, 1], 1.0).unwrap();
        assert!(matches!(
            fiber_volume(&m, 0.9, Rule::Gauss(4)),
            Err(Error::Degenerate(_))
        ));
        assert!(exponent_fit(&m, &tau_grid(3.0, 6.0, 7), Rule::Gauss(4)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = SncModel::new(2, 1, vec![1, 3], 0.5)
            .unwrap()
            .with_twist(Twist::Radial(0.3));
        let back = SncModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.to_json(), m.to_json());
    }
}
