//! Exact LP search for the uniform stability threshold on an interval.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::polytope::{lp_minimize, Constraint, MomentPolytope, Relation};
use crate::rational::{self, Q};

use super::config::make_config;
use super::functionals::{donaldson_futaki, na_j, na_mabuchi};
use super::pl::PlConvexFunction;

/// Convex functions searched over.
#[derive(Clone, Debug)]
pub enum Family {
    /// Constants only.
    Constants,
    /// Functions affine between consecutive interior breakpoints.
    Breakpoints(Vec<Q>),
}

#[derive(Clone, Debug)]
pub struct Threshold {
    /// Minimum of `DF` over the normalized family.
    pub delta: Q,
    /// Minimum of `M^NA`, a lower bound for `DF`.
    pub mabuchi_min: Q,
    pub witness: PlConvexFunction,
    pub witness_j: Q,
    /// `delta` is certified: the witness reaches the lower bound.
    pub exact: bool,
    pub lps: usize,
}

impl Threshold {
    pub fn to_json(&self) -> Value {
        json!({
            "delta": rational::encode(&self.delta),
            "mabuchi_min": rational::encode(&self.mabuchi_min),
            "exact": self.exact,
            "lps": self.lps,
            "witness": self.witness.to_json(),
        })
    }
}

fn nodes(p: &MomentPolytope, breaks: &[Q]) -> Result<Vec<Q>> {
    let a = p.poly().vertices()[0][0].clone();
    let b = p.poly().vertices()[1][0].clone();
    let mut out = vec![a.clone(), b.clone()];
    for x in breaks {
        if x <= &a || x >= &b {
            return Err(Error::InvalidInput(format!("breakpoint {x} is not interior")));
        }
        out.push(x.clone());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// `min DF(f)` over convex `f` in the family with `J^NA(f) = 1`.
///
/// `J^NA = avg f - min f` is linear once the minimizing node is fixed, so one LP
/// per node minimizes the linear `M^NA`; `DF >= M^NA` makes that a lower bound,
/// reached when the optimal `f` has integral slopes.
pub fn stability_threshold(p: &MomentPolytope, family: &Family) -> Result<Threshold> {
    if p.dim() != 1 {
        return Err(Error::Unsupported("threshold search in dimension > 1".into()));
    }
    let breaks = match family {
        Family::Constants => return Err(Error::Infeasible),
        Family::Breakpoints(b) => b,
    };
    let y = nodes(p, breaks)?;
    let k = y.len();
    let vol = p.volume().clone();
    let h: Vec<Q> = y.windows(2).map(|w| &w[1] - &w[0]).collect();
    // trapezoid weights: int f = sum w_i f_i
    let mut w = vec![Q::zero(); k];
    for i in 0..k - 1 {
        let half = &h[i] / Q::from_integer(2.into());
        w[i] += &half;
        w[i + 1] += half;
    }
    let sbar = p.mean_s().clone();
    let cost: Vec<Q> = (0..k)
        .map(|i| {
            let mut c = -(&sbar * &w[i]);
            if i == 0 || i == k - 1 {
                c += Q::one();
            }
            c / &vol
        })
        .collect();
    let mut base = Vec::new();
    for i in 1..k - 1 {
        // (f_{i+1} - f_i)/h_i >= (f_i - f_{i-1})/h_{i-1}
        let mut row = vec![Q::zero(); k];
        row[i + 1] = Q::one() / &h[i];
        row[i] = -(Q::one() / &h[i]) - Q::one() / &h[i - 1];
        row[i - 1] = Q::one() / &h[i - 1];
        base.push(Constraint::new(row, Relation::Ge, Q::zero()));
    }
    base.push(Constraint::new(
        w.iter().map(|x| x / &vol).collect(),
        Relation::Eq,
        Q::one(),
    ));
    let mut best: Option<(Q, Vec<Q>)> = None;
    let mut lps = 0;
    for j in 0..k {
        let mut cons = base.clone();
        for i in 0..k {
            let mut row = vec![Q::zero(); k];
            row[i] = Q::one();
            let rel = if i == j { Relation::Eq } else { Relation::Ge };
            cons.push(Constraint::new(row, rel, Q::zero()));
        }
        lps += 1;
        match lp_minimize(&cost, &cons) {
            Ok(sol) => {
                if best.as_ref().map_or(true, |(b, _)| sol.optimum < *b) {
                    best = Some((sol.optimum, sol.argmin));
                }
            }
            Err(Error::Infeasible) => {}
            Err(e) => return Err(e),
        }
    }
    let (mabuchi_min, values) = best.ok_or(Error::Infeasible)?;
    let witness = PlConvexFunction::from_values_1d(p.clone(), &y, &values)?;
    let cfg = make_config(p, &witness)?;
    if na_mabuchi(&cfg)? != mabuchi_min {
        return Err(Error::Inconsistent("LP objective disagrees with M^NA".into()));
    }
    let witness_j = na_j(&cfg)?;
    let df = donaldson_futaki(&cfg)?;
    Ok(Threshold {
        exact: df == mabuchi_min,
        delta: df,
        mabuchi_min,
        witness,
        witness_j,
        lps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn p1_threshold_is_zero() {
        let p = MomentPolytope::interval(0, 1).unwrap();
        let t = stability_threshold(&p, &Family::Breakpoints(vec![q(1, 2)])).unwrap();
        assert_eq!(t.delta, qi(0));
        assert_eq!(t.mabuchi_min, qi(0));
        assert!(t.exact);
        assert_eq!(t.witness_j, qi(1));
        // the minimizer is linear
        let s: Vec<_> = t.witness.pieces().iter().map(|p| p.slope[0].clone()).collect();
        assert!(s.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn semistability_on_fine_grid() {
        let p = MomentPolytope::interval(0, 3).unwrap();
        let breaks: Vec<Q> = (1..12).map(|i| q(i, 4)).collect();
        let t = stability_threshold(&p, &Family::Breakpoints(breaks)).unwrap();
        assert_eq!(t.mabuchi_min, qi(0));
    }

    #[test]
    fn constants_are_infeasible() {
        let p = MomentPolytope::interval(0, 1).unwrap();
        assert_eq!(
            stability_threshold(&p, &Family::Constants).unwrap_err(),
            Error::Infeasible
        );
    }
}
