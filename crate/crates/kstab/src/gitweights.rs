//! Functions with log norm singularities on a torus: weight polytopes, support functions,
//! slopes at infinity along one-parameter subgroups and the boundedness criterion.
//! Also Bergman projection and the Ricci bound for Fubini-Study potentials on toric models.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::archimedean::lse::log_sum_exp;
use crate::archimedean::{lse_ricci, ma_measure, Lse, Repr, ToricPotential};
use crate::error::{Error, Result};
use crate::nonarchimedean::PlConvexFunction;
use crate::polytope::{lp_minimize, polytope_contains, Constraint, MomentPolytope, RationalPolytope, Relation};
use crate::quadrature::Tolerance;
use crate::rational::{self, q, qi, to_f64, Q};
use crate::rays::{bergman_weights, linear_fit, minimal_level};

/// A vector split into torus weight components, recorded by weight and component norm.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedVector {
    weights: Vec<Vec<i64>>,
    norms: Vec<f64>,
    polytope: RationalPolytope,
}

fn qvec(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&a| qi(a)).collect()
}

impl WeightedVector {
    /// Components with equal weights are merged in the `L^2` sense.
    pub fn new(weights: Vec<Vec<i64>>, norms: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput(
                "a weighted vector needs at least one weight".into(),
            ));
        }
        if weights.len() != norms.len() {
            return Err(Error::InvalidInput("one norm per weight".into()));
        }
        let r = weights[0].len();
        if r == 0 {
            return Err(Error::InvalidInput("torus rank must be positive".into()));
        }
        if let Some(w) = weights.iter().find(|w| w.len() != r) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: w.len(),
            });
        }
        if norms.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput("component norms must be positive".into()));
        }
        let mut merged: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (w, c) in weights.into_iter().zip(norms) {
            *merged.entry(w).or_insert(0.0) += c * c;
        }
        let (weights, norms): (Vec<_>, Vec<_>) = merged.into_iter().map(|(w, c)| (w, c.sqrt())).unzip();
        let polytope = RationalPolytope::new(r, weights.iter().map(|w| qvec(w)).collect())?;
        Ok(WeightedVector {
            weights,
            norms,
            polytope,
        })
    }

    pub fn rank(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Weight polytope `P_v`.
    pub fn polytope(&self) -> &RationalPolytope {
        &self.polytope
    }

    /// `log |lambda(e^-s) v|`, evaluated in log space.
    pub fn log_norm(&self, lambda: &[f64], s: f64, norm: Norm) -> f64 {
        let t: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.norms)
            .map(|(m, c)| c.ln() - s * m.iter().zip(lambda).map(|(a, b)| *a as f64 * b).sum::<f64>())
            .collect();
        match norm {
            Norm::L2 => 0.5 * log_sum_exp(&t.iter().map(|a| 2.0 * a).collect::<Vec<_>>()),
            Norm::Max => t.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"weights": self.weights, "norms": self.norms})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let weights: Vec<Vec<i64>> = v
            .get("weights")
            .and_then(|w| serde_json::from_value(w.clone()).ok())
            .ok_or_else(|| Error::InvalidInput("vector needs integer \"weights\"".into()))?;
        let norms: Vec<f64> = match v.get("norms") {
            Some(n) => serde_json::from_value(n.clone())
                .map_err(|_| Error::InvalidInput("\"norms\" must be numbers".into()))?,
            None => vec![1.0; weights.len()],
        };
        Self::new(weights, norms)
    }
}

/// Two norms used to check that slopes at infinity do not depend on the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    Max,
}

/// `h_v(lambda) = max_{m in M_v} <m, lambda>`.
pub fn support_function(v: &WeightedVector, lambda: &[Q]) -> Result<Q> {
    check_dim(v.rank(), lambda.len())?;
    Ok(v.weights
        .iter()
        .map(|m| rational::dot(&qvec(m), lambda))
        .max()
        .expect("nonempty weights"))
}

fn lowest(v: &WeightedVector, lambda: &[Q]) -> Q {
    v.weights
        .iter()
        .map(|m| rational::dot(&qvec(m), lambda))
        .min()
        .expect("nonempty weights")
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `f(g) = sum_i a_i log |g v_i|` up to a bounded term.
#[derive(Clone, Debug, PartialEq)]
pub struct LogNormFunction {
    rank: usize,
    terms: Vec<(Q, WeightedVector)>,
}

impl LogNormFunction {
    pub fn new(rank: usize, terms: Vec<(Q, WeightedVector)>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidInput("torus rank must be positive".into()));
        }
        for (_, v) in &terms {
            check_dim(rank, v.rank())?;
        }
        Ok(LogNormFunction { rank, terms })
    }

    /// `log |g v| - log |g w|`.
    pub fn ratio(v: WeightedVector, w: WeightedVector) -> Result<Self> {
        Self::new(v.rank(), vec![(qi(1), v), (qi(-1), w)])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &[(Q, WeightedVector)] {
        &self.terms
    }

    /// `f(lambda(e^-s))` with the given component norm.
    pub fn along(&self, lambda: &[f64], s: f64, norm: Norm) -> f64 {
        self.terms
            .iter()
            .map(|(a, v)| to_f64(a) * v.log_norm(lambda, s, norm))
            .sum()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rank": self.rank,
            "vectors": self.terms.iter().map(|(_, v)| v.to_json()).collect::<Vec<_>>(),
            "coeffs": self.terms.iter().map(|(a, _)| rational::encode(a)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let rank = v
            .get("rank")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidInput("representation needs \"rank\"".into()))? as usize;
        let vectors = v
            .get("vectors")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("representation needs \"vectors\"".into()))?;
        let coeffs = rational::decode_vec(
            v.get("coeffs")
                .ok_or_else(|| Error::InvalidInput("representation needs \"coeffs\"".into()))?,
        )?;
        if coeffs.len() != vectors.len() {
            return Err(Error::InvalidInput("one coefficient per vector".into()));
        }
        let terms = coeffs
            .into_iter()
            .zip(vectors)
            .map(|(a, x)| Ok((a, WeightedVector::from_json(x)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rank, terms)
    }
}

/// Slope of `f(lambda(tau))` in `log |tau|^-1`: `-sum_i a_i min_{m in M_i} <m, lambda>`.
pub fn f_na(f: &LogNormFunction, lambda: &[Q]) -> Result<Q> {
    check_dim(f.rank, lambda.len())?;
    Ok(f.terms
        .iter()
        .fold(Q::zero(), |acc, (a, v)| acc - a * lowest(v, lambda)))
}

/// Least squares slope of `s -> f(lambda(e^-s))` over `s = 5, 6, ..., 40`.
pub fn numeric_slope(f: &LogNormFunction, lambda: &[Q], norm: Norm) -> Result<f64> {
    check_dim(f.rank, lambda.len())?;
    let l = rational::vec_f64(lambda);
    let s: Vec<f64> = (5..=40).map(f64::from).collect();
    let y: Vec<f64> = s.iter().map(|&t| f.along(&l, t, norm)).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("log norm overflow along the subgroup".into()));
    }
    Ok(linear_fit(&s, &y).0)
}

#[derive(Clone, Debug)]
pub struct SlopeCheck {
    pub lambda: Vec<Q>,
    pub exact: Q,
    pub l2: f64,
    pub max: f64,
    pub error: f64,
    pub pass: bool,
}

impl SlopeCheck {
    pub const TOLERANCE: f64 = 1e-3;

    pub fn to_json(&self) -> Value {
        json!({
            "lambda": rational::encode_vec(&self.lambda),
            "f_na": rational::encode(&self.exact),
            "numeric_l2": self.l2,
            "numeric_max": self.max,
            "error": self.error,
            "pass": self.pass,
        })
    }
}

/// Compares the exact slope with the numeric slopes under both norms.
pub fn slope_vs_fna(f: &LogNormFunction, lambda: &[Q]) -> Result<SlopeCheck> {
    let exact = f_na(f, lambda)?;
    let l2 = numeric_slope(f, lambda, Norm::L2)?;
    let max = numeric_slope(f, lambda, Norm::Max)?;
    let e = to_f64(&exact);
    let error = (l2 - e).abs().max((max - e).abs());
    Ok(SlopeCheck {
        lambda: lambda.to_vec(),
        exact,
        l2,
        max,
        error,
        pass: error <= SlopeCheck::TOLERANCE,
    })
}

/// `D f = log |g v| - log |g w|` after clearing denominators by tensor powers:
/// `P_v` and `P_w` are Minkowski sums of the scaled weight polytopes.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub power: BigInt,
    pub p_v: RationalPolytope,
    pub p_w: RationalPolytope,
}

pub fn reduce(f: &LogNormFunction) -> Result<Reduced> {
    let d = rational::lcm_den(f.terms.iter().map(|(a, _)| a));
    if d.to_i64().is_none() {
        return Err(Error::Integrality(
            "clear denominators: common denominator too large".into(),
        ));
    }
    let dq = Q::from_integer(d.clone());
    let origin = RationalPolytope::new(f.rank, vec![vec![Q::zero(); f.rank]])?;
    let (mut p_v, mut p_w) = (origin.clone(), origin);
    for (a, v) in &f.terms {
        let k = a * &dq;
        if k.is_zero() {
            continue;
        }
        let scaled = v.polytope().scale(&rational::qabs(&k))?;
        if k.is_positive() {
            p_v = p_v.minkowski_sum(&scaled)?;
        } else {
            p_w = p_w.minkowski_sum(&scaled)?;
        }
    }
    Ok(Reduced { power: d, p_v, p_w })
}

#[derive(Clone, Debug)]
pub struct Boundedness {
    pub bounded: bool,
    /// A direction with negative slope when unbounded, with that slope.
    pub witness: Option<(Vec<Q>, Q)>,
}

impl Boundedness {
    pub fn to_json(&self) -> Value {
        json!({
            "bounded": self.bounded,
            "witness": self.witness.as_ref().map(|(l, v)| json!({
                "lambda": rational::encode_vec(l),
                "f_na": rational::encode(v),
            })),
        })
    }
}

/// Bounded below on the torus iff `P_w` lies in `P_v`.
pub fn bounded_below_torus(f: &LogNormFunction) -> Result<Boundedness> {
    let red = reduce(f)?;
    if polytope_contains(&red.p_v, &red.p_w)? {
        return Ok(Boundedness {
            bounded: true,
            witness: None,
        });
    }
    let outside = red
        .p_w
        .vertices()
        .iter()
        .find(|w| !red.p_v.contains_point(w))
        .ok_or_else(|| Error::Inconsistent("no vertex of P_w outside P_v".into()))?;
    let mu = separate(&red.p_v, outside)?;
    let lambda: Vec<Q> = mu.iter().map(|x| -x).collect();
    let value = f_na(f, &lambda)?;
    if !value.is_negative() {
        return Err(Error::Inconsistent("separating direction has nonnegative slope".into()));
    }
    Ok(Boundedness {
        bounded: false,
        witness: Some((lambda, value)),
    })
}

/// A direction `mu` in the unit cube maximizing `<w, mu> - h_P(mu)`.
fn separate(p: &RationalPolytope, w: &[Q]) -> Result<Vec<Q>> {
    let r = w.len();
    let mut cons = Vec::new();
    for v in p.vertices() {
        let mut c: Vec<Q> = v.clone();
        c.push(qi(-1));
        cons.push(Constraint::new(c, Relation::Le, Q::zero()));
    }
    for i in 0..r {
        let mut e = vec![Q::zero(); r + 1];
        e[i] = qi(1);
        cons.push(Constraint::new(e.clone(), Relation::Le, qi(1)));
        cons.push(Constraint::new(e, Relation::Ge, qi(-1)));
    }
    let mut c: Vec<Q> = w.iter().map(|x| -x).collect();
    c.push(qi(1));
    let sol = lp_minimize(&c, &cons)?;
    if !sol.optimum.is_negative() {
        return Err(Error::Inconsistent("point outside P_v but not separated".into()));
    }
    Ok(sol.argmin[..r].to_vec())
}

/// Rays of the normal fan of the Minkowski sum of all weight polytopes, padded with
/// coordinate directions, in rank at most two.
pub fn fan_candidates(f: &LogNormFunction) -> Result<Vec<Vec<Q>>> {
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    let mut push = |v: Vec<i64>| {
        if v.iter().all(|x| *x == 0) {
            return;
        }
        let p = rational::primitive(&v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
        if !out.contains(&p) {
            out.push(p);
        }
    };
    match f.rank {
        1 => {
            push(vec![1]);
            push(vec![-1]);
        }
        2 => {
            for e in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
                push(e.to_vec());
            }
            for (_, v) in &f.terms {
                for (a, b) in v.weights.iter().tuple_combinations() {
                    let d = [b[0] - a[0], b[1] - a[1]];
                    for w in [[d[0], d[1]], [-d[0], -d[1]], [-d[1], d[0]], [d[1], -d[0]]] {
                        push(w.to_vec());
                    }
                }
            }
        }
        r => return Err(Error::Unsupported(format!("fan candidates in rank {r}"))),
    }
    Ok(out
        .into_iter()
        .map(|v| v.into_iter().map(Q::from_integer).collect())
        .collect())
}

/// Second decision procedure: the minimum of `f^NA` over the fan candidates.
pub fn bounded_by_fan(f: &LogNormFunction) -> Result<Boundedness> {
    let mut worst: Option<(Vec<Q>, Q)> = None;
    for l in fan_candidates(f)? {
        let v = f_na(f, &l)?;
        if worst.as_ref().map_or(true, |(_, w)| v < *w) {
            worst = Some((l, v));
        }
    }
    let (l, v) = worst.expect("candidates are nonempty");
    if v.is_negative() {
        return Ok(Boundedness {
            bounded: false,
            witness: Some((l, v)),
        });
    }
    Ok(Boundedness {
        bounded: true,
        witness: None,
    })
}

/// A vector of `Sym^d C^n` in the monomial basis, acted on by `SL(n)` through
/// `(g p)(x) = p(g^T x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymVector {
    n: usize,
    d: u32,
    coeffs: BTreeMap<Vec<u32>, Complex64>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl SymVector {
    pub fn new(n: usize, d: u32, coeffs: BTreeMap<Vec<u32>, Complex64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("SL(n) needs n >= 2".into()));
        }
        for a in coeffs.keys() {
            if a.len() != n || a.iter().sum::<u32>() != d {
                return Err(Error::InvalidInput(format!(
                    "exponent {a:?} is not of degree {d} in {n} variables"
                )));
            }
        }
        Ok(SymVector { n, d, coeffs })
    }

    /// Exponents of all monomials of degree `d` in `n` variables.
    pub fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
        (0..n)
            .combinations_with_replacement(d as usize)
            .map(|c| {
                let mut a = vec![0u32; n];
                for i in c {
                    a[i] += 1;
                }
                a
            })
            .collect()
    }

    /// Gaussian coefficients on a random subset of monomials, at least one nonzero.
    pub fn random<R: Rng>(n: usize, d: u32, density: f64, rng: &mut R) -> Result<Self> {
        let mons = Self::monomials(n, d);
        let mut coeffs = BTreeMap::new();
        for a in &mons {
            if rng.gen::<f64>() < density {
                coeffs.insert(a.clone(), gaussian(rng));
            }
        }
        if coeffs.is_empty() {
            let a = mons[rng.gen_range(0..mons.len())].clone();
            coeffs.insert(a, gaussian(rng));
        }
        Self::new(n, d, coeffs)
    }

    /// `{"d", "terms": [{"exp": [...], "c": [re, im]}]}` in `n` variables.
    pub fn from_json(n: usize, v: &Value) -> Result<Self> {
        let d = v
            .get("d")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidInput("polynomial needs degree \"d\"".into()))? as u32;
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("polynomial needs \"terms\"".into()))?;
        let mut coeffs = BTreeMap::new();
        for t in terms {
            let exp: Vec<u32> = t
                .get("exp")
                .and_then(|e| serde_json::from_value(e.clone()).ok())
                .ok_or_else(|| Error::InvalidInput("term needs an exponent \"exp\"".into()))?;
            let c: [f64; 2] = t
                .get("c")
                .and_then(|e| serde_json::from_value(e.clone()).ok())
                .ok_or_else(|| Error::InvalidInput("term needs a coefficient \"c\": [re, im]".into()))?;
            *coeffs.entry(exp).or_insert(Complex64::zero()) += Complex64::new(c[0], c[1]);
        }
        Self::new(n, d, coeffs)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "d": self.d,
            "terms": self.coeffs.iter().map(|(a, c)| json!({"exp": a, "c": [c.re, c.im]})).collect::<Vec<_>>(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<u32>, Complex64> {
        &self.coeffs
    }

    /// `g . p` by substituting `x_i -> sum_j g_ji x_j`.
    pub fn act(&self, g: &DMatrix<Complex64>) -> Result<Self> {
        if g.nrows() != self.n || g.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: g.nrows(),
            });
        }
        let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (a, c) in &self.coeffs {
            let mut poly: BTreeMap<Vec<u32>, Complex64> = BTreeMap::from([(vec![0; self.n], *c)]);
            for (i, &e) in a.iter().enumerate() {
                for _ in 0..e {
                    let mut next = BTreeMap::new();
                    for (b, cb) in &poly {
                        for j in 0..self.n {
                            let mut b2 = b.clone();
                            b2[j] += 1;
                            *next.entry(b2).or_insert(Complex64::zero()) += cb * g[(j, i)];
                        }
                    }
                    poly = next;
                }
            }
            for (b, cb) in poly {
                *out.entry(b).or_insert(Complex64::zero()) += cb;
            }
        }
        Ok(SymVector {
            n: self.n,
            d: self.d,
            coeffs: out,
        })
    }

    /// Weights `(a_i - a_n)_{i<n}` of the diagonal torus and unitarily invariant
    /// component norms `|c_a| sqrt(a!/d!)`; coefficients below `1e-12` of the largest drop out.
    pub fn weighted(&self) -> Result<WeightedVector> {
        let big = self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        if !(big > 0.0) {
            return Err(Error::InvalidInput("zero vector".into()));
        }
        let dfact = factorial(self.d);
        let (mut ws, mut ns) = (Vec::new(), Vec::new());
        for (a, c) in &self.coeffs {
            if c.norm() <= 1e-12 * big {
                continue;
            }
            let last = a[self.n - 1] as i64;
            ws.push(a[..self.n - 1].iter().map(|&e| e as i64 - last).collect());
            let w: f64 = a.iter().map(|&e| factorial(e)).product();
            ns.push(c.norm() * (w / dfact).sqrt());
        }
        WeightedVector::new(ws, ns)
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary matrix: QR of a complex Gaussian matrix with phases fixed.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = z.qr();
    let (mut qm, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::one() };
        for i in 0..n {
            qm[(i, j)] *= ph;
        }
    }
    qm
}

/// `{"n", "polys": [...], "coeffs": [[a, den], ...]}`.
pub fn sym_terms_from_json(v: &Value) -> Result<Vec<(Q, SymVector)>> {
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::InvalidInput("group needs \"n\"".into()))? as usize;
    let polys = v
        .get("polys")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("group input needs \"polys\"".into()))?;
    let coeffs = rational::decode_vec(
        v.get("coeffs")
            .ok_or_else(|| Error::InvalidInput("group input needs \"coeffs\"".into()))?,
    )?;
    if coeffs.len() != polys.len() {
        return Err(Error::InvalidInput("one coefficient per polynomial".into()));
    }
    coeffs
        .into_iter()
        .zip(polys)
        .map(|(a, p)| Ok((a, SymVector::from_json(n, p)?)))
        .collect()
}

/// `sum_i a_i log |g v_i|` for explicit `SL(n)` vectors, restricted to the diagonal torus.
pub fn sym_function(terms: &[(Q, SymVector)]) -> Result<LogNormFunction> {
    let n = terms
        .first()
        .map(|(_, v)| v.n)
        .ok_or_else(|| Error::InvalidInput("no terms".into()))?;
    let t = terms
        .iter()
        .map(|(a, v)| Ok((a.clone(), v.weighted()?)))
        .collect::<Result<Vec<_>>>()?;
    LogNormFunction::new(n - 1, t)
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub seed: u64,
    pub identity: bool,
    pub verdicts: Vec<bool>,
    pub stable: bool,
    /// First sample with a negative slope: index, direction and slope.
    pub negative: Option<(usize, Vec<Q>, Q)>,
}

impl ProbeReport {
    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "trials": self.verdicts.len(),
            "identity": self.identity,
            "verdicts": self.verdicts,
            "stable": self.stable,
            "negative": self.negative.as_ref().map(|(i, l, v)| json!({
                "sample": i,
                "lambda": rational::encode_vec(l),
                "f_na": rational::encode(v),
            })),
        })
    }
}

/// Boundedness on conjugated tori `k^-1 T k` for sampled unitary `k`.
/// Sample `i` draws from stream `i` of the seeded generator.
pub fn conjugated_probe(terms: &[(Q, SymVector)], trials: usize, seed: u64) -> Result<ProbeReport> {
    let n = terms
        .first()
        .map(|(_, v)| v.n)
        .ok_or_else(|| Error::InvalidInput("no terms".into()))?;
    if terms.iter().any(|(_, v)| v.n != n) {
        return Err(Error::InvalidInput("vectors for different groups".into()));
    }
    let identity = bounded_below_torus(&sym_function(terms)?)?.bounded;
    let sample = |i: usize| -> Result<Boundedness> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let k = random_unitary(n, &mut rng);
        let moved = terms
            .iter()
            .map(|(a, v)| Ok((a.clone(), v.act(&k)?)))
            .collect::<Result<Vec<_>>>()?;
        bounded_below_torus(&sym_function(&moved)?)
    };
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = trials.div_ceil(workers.max(1)).max(1);
    let results: Vec<Result<Boundedness>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..trials)
            .collect::<Vec<_>>()
            .chunks(chunk)
            .map(|idx| {
                let idx = idx.to_vec();
                let sample = &sample;
                scope.spawn(move || idx.into_iter().map(sample).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| {
                h.join()
                    .unwrap_or_else(|_| vec![Err(Error::Inconsistent("probe worker panicked".into()))])
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let verdicts: Vec<bool> = results.iter().map(|b| b.bounded).collect();
    let negative = results
        .iter()
        .enumerate()
        .find_map(|(i, b)| b.witness.clone().map(|(l, v)| (i, l, v)));
    let stable = verdicts.iter().all(|&b| b == identity);
    Ok(ProbeReport {
        seed,
        identity,
        verdicts,
        stable,
        negative,
    })
}

/// Rank-one log-norm function of the `C^*`-action on sections of `mL` induced by `f`:
/// the monomial at `k` has weight `m f(k/m)` and the coefficient is `1/m`.
/// Its slope at `lambda = 1` is `-min f`.
pub fn toric_weight_function(f: &PlConvexFunction, m: Option<u64>) -> Result<LogNormFunction> {
    let m = match m {
        Some(m) => m,
        None => minimal_level(f)?,
    };
    let pts = bergman_weights(f, m)?.ok_or_else(|| Error::Integrality(format!("f is not integral at level {m}")))?;
    let weights = pts
        .iter()
        .map(|(_, w)| w.to_integer().to_i64().map(|x| vec![x]))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Integrality("weight out of range".into()))?;
    let norms = vec![1.0; weights.len()];
    LogNormFunction::new(1, vec![(q(1, m as i64), WeightedVector::new(weights, norms)?)])
}

/// Normalized weight of the determinant line of sections of `mL`:
/// `-(1/N_m) sum_k f(k/m)`, a Riemann sum for the energy.
pub fn determinant_weight(f: &PlConvexFunction, m: u64) -> Result<Q> {
    let pts = bergman_weights(f, m)?.ok_or_else(|| Error::Integrality(format!("f is not integral at level {m}")))?;
    let n = pts.len() as i64;
    let mq = qi(m as i64);
    Ok(-pts.iter().fold(Q::zero(), |acc, (_, w)| acc + w / &mq) / qi(n))
}

/// Fubini-Study potential of the monomial basis of `H^0(mL)` made orthonormal for
/// `L^2(m phi, MA(phi))`: `(1/2m) log sum_k |s_k|^2 / N_k`.
pub fn bergman_map(u: &ToricPotential, m: u64, tol: Tolerance) -> Result<ToricPotential> {
    if m == 0 {
        return Err(Error::InvalidInput("level must be positive".into()));
    }
    let p = u.moment();
    let mp = MomentPolytope::new(p.poly().scale(&qi(m as i64))?)?;
    let mf = m as f64;
    let ma = ma_measure(u);
    let shift = u.shift();
    let mut points = Vec::new();
    let mut log_norms = Vec::new();
    for k in mp.lattice_points() {
        let kf: Vec<f64> = k.iter().map(|&a| a as f64).collect();
        let y: Vec<f64> = kf.iter().map(|a| a / mf).collect();
        let peak = 2.0 * mf * u.g(&y)?;
        let w = |pr: &crate::archimedean::Pair| -> Result<f64> {
            let xy: f64 = pr.x.iter().zip(&pr.y).map(|(a, b)| a * b).sum();
            let kx: f64 = pr.x.iter().zip(&kf).map(|(a, b)| a * b).sum();
            let e = 2.0 * kx - 2.0 * mf * (xy - pr.g + shift) - peak;
            Ok(e.min(0.0).exp())
        };
        let est = ma.integrate_pair(&w, tol)?;
        if !(est.value > 0.0) {
            return Err(Error::Degenerate(format!("vanishing L^2 norm for the monomial {k:?}")));
        }
        log_norms.push(peak + est.value.ln());
        points.push(y);
    }
    let hi = log_norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = log_norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = (hi - lo).exp();
    if !cond.is_finite() || cond > 1e300 {
        return Err(Error::Degenerate(format!("Gram matrix condition number {cond:e}")));
    }
    let lse = Lse::new(2.0 * mf, points, log_norms.iter().map(|l| -l).collect())?;
    ToricPotential::from_lse(p, lse, u.cells().to_vec())
}

#[derive(Clone, Debug)]
pub struct RicciReport {
    pub level: u64,
    pub terms: usize,
    pub bound: f64,
    pub max_ratio: f64,
    pub argmax: Vec<f64>,
    pub max_violation: f64,
    pub holds: bool,
}

impl RicciReport {
    pub const THRESHOLD: f64 = 1e-8;

    pub fn to_json(&self) -> Value {
        json!({
            "level": self.level,
            "terms": self.terms,
            "bound": self.bound,
            "max_ratio": self.max_ratio,
            "argmax": self.argmax,
            "max_violation": self.max_violation,
            "holds": self.holds,
        })
    }
}

/// Checks `Ric(dd^c phi) <= m N_m dd^c phi` on the images of an interior grid of `P`, where `N_m` counts
/// the terms of the log-sum-exp potential: the largest eigenvalue of
/// `A^-1/2 D^2 rho A^-1/2` against `m N_m`.
pub fn ricci_bound_check(u: &ToricPotential, m: u64) -> Result<RicciReport> {
    let Repr::Lse(l) = u.repr() else {
        return Err(Error::InvalidInput("Ricci bound needs a log-sum-exp potential".into()));
    };
    let n = u.dim();
    let bound = (m as f64) * l.points.len() as f64;
    let k = match n {
        1 => 400,
        2 => 60,
        d => return Err(Error::Unsupported(format!("Ricci grid in dimension {d}"))),
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for y in u.sample_points(k) {
        let x = u.at_y(&y)?.x;
        let (a, d2rho) = lse_ricci(l, &x);
        let Some(ch) = a.cholesky() else { continue };
        let li = ch
            .l()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular Hessian".into()))?;
        let c = &li * d2rho * li.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let top = c.symmetric_eigenvalues().max();
        if top.is_finite() && top > best.0 {
            best = (top, x);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Degenerate(
            "no grid point with a positive definite Hessian".into(),
        ));
    }
    let violation = (best.0 - bound).max(0.0);
    Ok(RicciReport {
        level: m,
        terms: l.points.len(),
        bound,
        max_ratio: best.0,
        argmax: best.1,
        max_violation: violation,
        holds: violation <= RicciReport::THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(ws: &[&[i64]]) -> WeightedVector {
        WeightedVector::new(ws.iter().map(|w| w.to_vec()).collect(), vec![1.0; ws.len()]).unwrap()
    }

    #[test]
    fn support_examples() {
        let v = wv(&[&[1], &[-1]]);
        assert_eq!(support_function(&v, &[qi(3)]).unwrap(), qi(3));
        assert_eq!(support_function(&v, &[qi(0)]).unwrap(), qi(0));
        assert_eq!(
            support_function(&v, &[q(4, 3)]).unwrap(),
            support_function(&v, &[q(2, 3)]).unwrap() * qi(2)
        );
    }

    #[test]
    fn slopes_of_examples() {
        let f = LogNormFunction::ratio(wv(&[&[1]]), wv(&[&[-1]])).unwrap();
        assert_eq!(f_na(&f, &[qi(1)]).unwrap(), qi(-2));
        let c = slope_vs_fna(&f, &[qi(1)]).unwrap();
        assert!(c.pass, "{c:?}");
        let g = LogNormFunction::ratio(wv(&[&[-1], &[1]]), wv(&[&[1]])).unwrap();
        assert_eq!(f_na(&g, &[qi(1)]).unwrap(), qi(2));
        assert_eq!(f_na(&g, &[qi(-1)]).unwrap(), qi(0));
        let same = LogNormFunction::ratio(wv(&[&[2], &[-1]]), wv(&[&[2], &[-1]])).unwrap();
        let c = slope_vs_fna(&same, &[qi(3)]).unwrap();
        assert_eq!(c.exact, qi(0));
        assert!(c.l2.abs() < 1e-6 && c.max.abs() < 1e-6);
    }

    #[test]
    fn boundedness_examples() {
        let b = bounded_below_torus(&LogNormFunction::ratio(wv(&[&[-1], &[1]]), wv(&[&[1]])).unwrap()).unwrap();
        assert!(b.bounded);
        let f = LogNormFunction::ratio(wv(&[&[1]]), wv(&[&[-1]])).unwrap();
        let b = bounded_below_torus(&f).unwrap();
        assert!(!b.bounded);
        let (l, v) = b.witness.unwrap();
        assert!(v.is_negative());
        assert_eq!(f_na(&f, &l).unwrap(), v);
        assert!(!bounded_by_fan(&f).unwrap().bounded);
    }

    #[test]
    fn denominators_are_cleared() {
        let v = wv(&[&[2, 0], &[0, 2], &[-2, -2]]);
        let w = wv(&[&[1, 0]]);
        let f = LogNormFunction::new(2, vec![(q(1, 2), v), (q(-1, 3), w)]).unwrap();
        let red = reduce(&f).unwrap();
        assert_eq!(red.power, BigInt::from(6));
        assert_eq!(red.p_w.vertices(), &[vec![qi(2), qi(0)]]);
        assert_eq!(
            bounded_below_torus(&f).unwrap().bounded,
            bounded_by_fan(&f).unwrap().bounded
        );
    }

    #[test]
    fn action_matches_torus_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = SymVector::random(3, 2, 0.6, &mut rng).unwrap();
        let t = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let moved = p.act(&t).unwrap();
        for (a, c) in p.coeffs() {
            let scale = 2f64.powi(a[0] as i32) * 0.5f64.powi(a[1] as i32);
            assert!((moved.coeffs()[a] - c * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_action_keeps_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = SymVector::random(3, 3, 1.0, &mut rng).unwrap();
        let k = random_unitary(3, &mut rng);
        let before: f64 = p.weighted().unwrap().norms().iter().map(|c| c * c).sum();
        let after: f64 = p
            .act(&k)
            .unwrap()
            .weighted()
            .unwrap()
            .norms()
            .iter()
            .map(|c| c * c)
            .sum();
        assert!((before - after).abs() < 1e-10 * before);
    }

    #[test]
    fn probe_on_equal_vectors_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = SymVector::random(2, 2, 1.0, &mut rng).unwrap();
        let r = conjugated_probe(&[(qi(1), v.clone()), (qi(-1), v)], 16, 11).unwrap();
        assert!(r.identity && r.stable);
    }

    #[test]
    fn fs_is_its_own_bergman_image() {
        let p = MomentPolytope::interval(0, 1).unwrap();
        let u = ToricPotential::fs(&p).unwrap();
        for m in 1..=3u64 {
            let b = bergman_map(&u, m, Tolerance::default()).unwrap();
            let c = ((m + 1) as f64).ln() / (2.0 * m as f64);
            for x in [-3.0, -0.5, 0.0, 1.0, 4.0] {
                let d = b.u(&[x]).unwrap() - u.u(&[x]).unwrap();
                assert!((d - c).abs() < 1e-6, "m = {m}, x = {x}: {d} vs {c}");
            }
        }
    }

    #[test]
    fn fs_saturates_the_ricci_bound() {
        let p = MomentPolytope::interval(0, 1).unwrap();
        let r = ricci_bound_check(&ToricPotential::fs(&p).unwrap(), 1).unwrap();
        assert!(r.holds, "{r:?}");
        assert!((r.max_ratio - 2.0).abs() < 1e-6);
    }
}
