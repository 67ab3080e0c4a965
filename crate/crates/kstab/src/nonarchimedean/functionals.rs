//! Exact non-Archimedean functionals of toric test configurations.
//!
//! A configuration built from `f` carries the metric `phi` with
//! `phi - phi_triv = f*(-eta) - h_P(-eta)` on the toric valuation of weight `eta`,
//! so `phi_triv + c` corresponds to `f - c`. Every functional is computed once from
//! intersection numbers on the Cayley polytope and once from the valuative side.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::polytope::{mixed_volume_against, volume, MomentPolytope, RationalPolytope};
use crate::rational::{self, primitive_of, Q};

use super::config::ToricTestConfig;

fn agree(what: &str, a: Q, b: Q) -> Result<Q> {
    if a == b {
        Ok(a)
    } else {
        Err(Error::Inconsistent(format!(
            "{what}: intersection {a} differs from valuative {b}"
        )))
    }
}

/// `P x [0, M]`, the Cayley polytope of the trivial configuration.
fn product(cfg: &ToricTestConfig) -> Result<RationalPolytope> {
    let mut pts = Vec::new();
    for v in cfg.poly().poly().vertices() {
        for t in [Q::zero(), cfg.height().clone()] {
            let mut w = v.clone();
            w.push(t);
            pts.push(w);
        }
    }
    RationalPolytope::new(cfg.poly().dim() + 1, pts)
}

/// `E^NA = (Lbar^{n+1}) / ((n+1) V)` after removing the height shift.
pub fn na_energy(cfg: &ToricTestConfig) -> Result<Q> {
    let p = cfg.poly();
    let inter = volume(cfg.cayley())? / p.volume() - cfg.height();
    agree("energy", inter, -cfg.function().average()?)
}

/// `V^-1 (phi . phi_triv^n)`, the value of `phi - phi_triv` at the trivial valuation.
pub fn na_sup(cfg: &ToricTestConfig) -> Result<Q> {
    let p = cfg.poly();
    let n1 = Q::from_integer((p.dim() + 1).into());
    let b = product(cfg)?;
    let inter = &n1 * (mixed_volume_against(cfg.cayley(), &b)? - volume(&b)?) / p.volume();
    agree("sup", inter, -cfg.function().min_value())
}

pub fn na_j(cfg: &ToricTestConfig) -> Result<Q> {
    Ok(na_sup(cfg)? - na_energy(cfg)?)
}

/// `I^NA = V^-1 ((phi - phi_triv) . (phi_triv^n - phi^n))`.
pub fn na_i(cfg: &ToricTestConfig) -> Result<Q> {
    let p = cfg.poly();
    let n1 = Q::from_integer((p.dim() + 1).into());
    let a = cfg.cayley();
    let b = product(cfg)?;
    let inter =
        &n1 * (mixed_volume_against(a, &b)? - volume(a)? - volume(&b)? + mixed_volume_against(&b, a)?) / p.volume();
    let f = cfg.function();
    let mut val = -f.min_value();
    for c in cfg.components() {
        val += &c.mass * (&c.constant + p.poly().support(&c.slope));
    }
    agree("I", inter, val)
}

/// `H^NA = int A_X dMA^NA`, cross-checked against the relative log canonical classes.
pub fn na_entropy(cfg: &ToricTestConfig) -> Result<Q> {
    let p = cfg.poly();
    let val = cfg.components().iter().fold(Q::zero(), |acc, c| acc + &c.mass * &c.a_x);
    // K^log of the total space minus the pullback of the product's is sum b_E A_X(v_E) E.
    let inter = cfg.components().iter().fold(Q::zero(), |acc, c| {
        acc + Q::from_integer(c.b.clone()) * &c.a_x * &c.facet_volume
    }) / p.volume();
    if inter != val {
        return Err(Error::EntropyMismatch {
            valuation: val.to_string(),
            intersection: inter.to_string(),
        });
    }
    Ok(val)
}

/// `R^NA = V^-1 (rho^* K^log_{X x P^1 / P^1} . Lbar^n)` after removing the height shift.
pub fn na_ricci(cfg: &ToricTestConfig) -> Result<Q> {
    let p = cfg.poly();
    let side = cfg
        .side_facets()
        .iter()
        .fold(Q::zero(), |acc, fm| acc + &fm.lattice_volume);
    let vertical = cfg.components().iter().fold(Q::zero(), |acc, c| {
        acc + Q::from_integer(c.b.clone()) * &c.a_x * &c.facet_volume
    });
    let inter = -(side + vertical) / p.volume() + cfg.height() * p.mean_s();
    let val = cfg.function().boundary_integral()? / p.volume() - na_entropy(cfg)?;
    agree("R", inter, val)
}

/// `M^NA = H^NA + R^NA + Sbar E^NA`, checked against the toric Futaki expression.
pub fn na_mabuchi(cfg: &ToricTestConfig) -> Result<Q> {
    let p = cfg.poly();
    let m = na_entropy(cfg)? + na_ricci(cfg)? + p.mean_s() * na_energy(cfg)?;
    let f = cfg.function();
    let toric = (f.boundary_integral()? - p.mean_s() * f.integral()?) / p.volume();
    agree("M", m, toric)
}

/// `V^-1 ((X_0 - X_0,red) . Lbar^n)`.
pub fn non_reduced_correction(cfg: &ToricTestConfig) -> Q {
    cfg.components().iter().fold(Q::zero(), |acc, c| {
        let b = Q::from_integer(c.b.clone());
        acc + &c.mass * (Q::one() - Q::one() / b)
    })
}

pub fn donaldson_futaki(cfg: &ToricTestConfig) -> Result<Q> {
    Ok(na_mabuchi(cfg)? + non_reduced_correction(cfg))
}

/// Atoms `(v_E, mass_E)` of the Monge-Ampere measure.
pub fn na_ma_measure(cfg: &ToricTestConfig) -> Vec<(Vec<Q>, Q)> {
    cfg.components().iter().map(|c| (c.v.clone(), c.mass.clone())).collect()
}

/// `(phi - phi_triv)(v_eta)`.
pub fn phi_at(cfg: &ToricTestConfig, eta: &[Q]) -> Q {
    let neg: Vec<Q> = eta.iter().map(|x| -x).collect();
    cfg.function().conjugate(&neg) - cfg.poly().poly().support(&neg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DingReport {
    pub l: Q,
    pub d: Q,
    /// Weight of a minimizing toric valuation.
    pub argmin: Vec<Q>,
    pub candidates: usize,
    /// The minimum does not move when pairwise sums of candidates are added.
    pub refinement_stable: bool,
}

fn ding_candidates(cfg: &ToricTestConfig) -> Vec<Vec<Q>> {
    let p = cfg.poly();
    let n = p.dim();
    let mut out: Vec<Vec<Q>> = vec![vec![Q::zero(); n]];
    let mut push = |w: Vec<Q>| {
        if !out.contains(&w) {
            out.push(w);
        }
    };
    for c in cfg.components() {
        push(c.v.clone());
    }
    for f in p.facets() {
        push(f.normal_q());
    }
    // rays of the normal fan of the subdivision: walls between cells
    let comps = cfg.components();
    for i in 0..comps.len() {
        for j in i + 1..comps.len() {
            let d: Vec<Q> = comps[i].slope.iter().zip(&comps[j].slope).map(|(a, b)| a - b).collect();
            if d.iter().all(Zero::is_zero) {
                continue;
            }
            let r: Vec<Q> = primitive_of(&d).into_iter().map(Q::from_integer).collect();
            push(r.iter().map(|x| -x).collect());
            push(r);
        }
    }
    out
}

fn ding_value(cfg: &ToricTestConfig, eta: &[Q]) -> Result<Q> {
    Ok(cfg.poly().log_discrepancy(eta)? + phi_at(cfg, eta))
}

/// `L^NA` as a minimum over toric candidate valuations and `D^NA = L^NA - E^NA`.
pub fn na_ding(cfg: &ToricTestConfig) -> Result<DingReport> {
    cfg.poly().anticanonical_shift()?;
    let cands = ding_candidates(cfg);
    let mut best: Option<(Q, Vec<Q>)> = None;
    for eta in &cands {
        let v = ding_value(cfg, eta)?;
        if best.as_ref().map_or(true, |(b, _)| &v < b) {
            best = Some((v, eta.clone()));
        }
    }
    let (l, argmin) = best.expect("trivial valuation is a candidate");
    let mut refined = l.clone();
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let w: Vec<Q> = cands[i].iter().zip(&cands[j]).map(|(a, b)| a + b).collect();
            refined = refined.min(ding_value(cfg, &w)?);
        }
    }
    let d = &l - na_energy(cfg)?;
    Ok(DingReport {
        refinement_stable: refined == l,
        l,
        d,
        argmin,
        candidates: cands.len(),
    })
}

/// `-f(m0)` for the anticanonical centre `m0`; the exact infimum over all valuations.
pub fn ding_closed_form(cfg: &ToricTestConfig) -> Result<Q> {
    let m0 = cfg.poly().anticanonical_shift()?;
    Ok(-cfg.function().eval(&m0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaFunctionalReport {
    pub e: Q,
    pub i: Q,
    pub j: Q,
    pub h: Q,
    pub r: Q,
    pub m: Q,
    pub df: Q,
    pub l: Option<Q>,
    pub d: Option<Q>,
}

impl NaFunctionalReport {
    pub fn compute(cfg: &ToricTestConfig) -> Result<Self> {
        let ding = match na_ding(cfg) {
            Ok(d) => Some(d),
            Err(Error::NotAnticanonical) => None,
            Err(e) => return Err(e),
        };
        let r = NaFunctionalReport {
            e: na_energy(cfg)?,
            i: na_i(cfg)?,
            j: na_j(cfg)?,
            h: na_entropy(cfg)?,
            r: na_ricci(cfg)?,
            m: na_mabuchi(cfg)?,
            df: donaldson_futaki(cfg)?,
            l: ding.as_ref().map(|d| d.l.clone()),
            d: ding.map(|d| d.d),
        };
        r.check(cfg.poly())?;
        Ok(r)
    }

    fn check(&self, p: &MomentPolytope) -> Result<()> {
        if self.m != &self.h + &self.r + p.mean_s() * &self.e {
            return Err(Error::Inconsistent("M^NA != H^NA + R^NA + Sbar E^NA".into()));
        }
        if self.j < Q::zero() || self.h < Q::zero() || self.df < self.m {
            return Err(Error::Inconsistent("sign constraint violated".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, Q)> {
        let mut out = vec![
            ("E", self.e.clone()),
            ("I", self.i.clone()),
            ("J", self.j.clone()),
            ("H", self.h.clone()),
            ("R", self.r.clone()),
            ("M", self.m.clone()),
            ("DF", self.df.clone()),
        ];
        if let (Some(l), Some(d)) = (&self.l, &self.d) {
            out.push(("L", l.clone()));
            out.push(("D", d.clone()));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for (k, v) in self.entries() {
            m.insert(format!("{k}_NA").replace("DF_NA", "DF"), rational::encode(&v));
        }
        json!(m)
    }
}
