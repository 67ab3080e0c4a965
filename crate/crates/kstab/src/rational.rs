//! Exact rationals and the small amount of exact linear algebra the crate needs.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn vec_f64(v: &[Q]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_int(a: &[BigInt], b: &[Q]) -> Q {
    a.iter()
        .zip(b)
        .fold(Q::zero(), |acc, (x, y)| acc + Q::from_integer(x.clone()) * y)
}

/// Least common multiple of the denominators.
pub fn lcm_den<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Scales a nonzero integer vector to be primitive.
pub fn primitive(v: &[BigInt]) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    v.iter().map(|x| x / &g).collect()
}

/// Primitive integer vector on the ray spanned by a rational vector.
pub fn primitive_of(v: &[Q]) -> Vec<BigInt> {
    let l = lcm_den(v);
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Q::from_integer(l.clone())).to_integer())
        .collect();
    primitive(&ints)
}

pub fn is_integral(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_integer())
}

/// Row-reduces a copy of `rows` and returns its rank.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &m[r][c];
                for j in c..ncols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Solves the square system `a x = b`; `None` when singular.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        let piv = m[c][c].clone();
        for j in c..=n {
            m[c][j] = &m[c][j] / &piv;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

/// Exact determinant of a square rational matrix.
pub fn det(a: &[Vec<Q>]) -> Q {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            m.swap(c, p);
            d = -d;
        }
        d *= &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[c][c];
                for j in c..n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    d
}

pub fn factorial(n: usize) -> Q {
    (1..=n as i64).fold(Q::one(), |acc, k| acc * qi(k))
}

/// Encodes a rational as `[num, den]`; huge values fall back to strings.
pub fn encode(x: &Q) -> Value {
    match (x.numer().to_i64(), x.denom().to_i64()) {
        (Some(n), Some(d)) => json!([n, d]),
        _ => json!([x.numer().to_string(), x.denom().to_string()]),
    }
}

pub fn encode_vec(v: &[Q]) -> Value {
    Value::Array(v.iter().map(encode).collect())
}

fn decode_int(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::InvalidInput(format!("expected integer, got {n}"))),
        Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|_| Error::InvalidInput(format!("expected integer, got {s:?}"))),
        other => Err(Error::InvalidInput(format!("expected integer, got {other}"))),
    }
}

/// Decodes `[num, den]`, a bare integer, or a `"num/den"` string.
pub fn decode(v: &Value) -> Result<Q> {
    match v {
        Value::Array(a) if a.len() == 2 => {
            let n = decode_int(&a[0])?;
            let d = decode_int(&a[1])?;
            if d.is_zero() {
                return Err(Error::InvalidInput("zero denominator".into()));
            }
            Ok(Q::new(n, d))
        }
        Value::Number(_) => Ok(Q::from_integer(decode_int(v)?)),
        Value::String(s) => s
            .parse::<Q>()
            .map_err(|_| Error::InvalidInput(format!("bad rational {s:?}"))),
        other => Err(Error::InvalidInput(format!("expected [num, den], got {other}"))),
    }
}

pub fn decode_vec(v: &Value) -> Result<Vec<Q>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidInput(format!("expected array, got {v}")))?
        .iter()
        .map(decode)
        .collect()
}

/// `|x|` as a rational.
pub fn qabs(x: &Q) -> Q {
    x.abs()
}
