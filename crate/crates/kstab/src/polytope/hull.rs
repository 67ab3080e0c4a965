//! Exact facet enumeration for small point sets.
//!
//! Points are scaled to a common integer lattice and every affinely independent
//! d-subset is tested as a supporting hyperplane. Quartic in the point count, which
//! is fine for the handful of vertices a desk-scale polytope has.

use std::collections::HashSet;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::rational::{lcm_den, primitive, rank, solve, Q};

#[derive(Clone, Debug)]
pub(crate) struct RawFacet {
    /// Primitive inner normal.
    pub normal: Vec<BigInt>,
    /// `<normal, y> >= rhs` on the polytope.
    pub rhs: Q,
    /// Indices of the input points lying on the facet.
    pub on: Vec<usize>,
}

fn overflow() -> Error {
    Error::Unsupported("coordinates too large for exact hull".into())
}

/// Bareiss fraction-free determinant; `None` only on overflow.
fn det_i128(mut m: Vec<Vec<i128>>) -> Option<i128> {
    let n = m.len();
    if n == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return Some(0);
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = m[i][j].checked_mul(m[k][k])?;
                let b = m[i][k].checked_mul(m[k][j])?;
                m[i][j] = a.checked_sub(b)? / prev;
            }
        }
        prev = m[k][k];
    }
    m[n - 1][n - 1].checked_mul(sign)
}

fn scale_to_int(points: &[Vec<Q>]) -> Result<(Vec<Vec<i128>>, BigInt)> {
    let l = lcm_den(points.iter().flatten());
    let lq = Q::from_integer(l.clone());
    let ints = points
        .iter()
        .map(|p| {
            p.iter()
                .map(|x| (x * &lq).to_integer().to_i128().ok_or_else(overflow))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ints, l))
}

/// Facets of the hull of a full-dimensional point set in `R^d`, `d >= 1`.
pub(crate) fn facets(points: &[Vec<Q>]) -> Result<Vec<RawFacet>> {
    let d = points[0].len();
    let (ip, l) = scale_to_int(points)?;
    let lq = Q::from_integer(l);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for combo in (0..ip.len()).combinations(d) {
        let base = &ip[combo[0]];
        let diffs: Vec<Vec<i128>> = combo[1..]
            .iter()
            .map(|&i| ip[i].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let mut normal = Vec::with_capacity(d);
        for k in 0..d {
            let minor: Vec<Vec<i128>> = diffs
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect())
                .collect();
            let m = det_i128(minor).ok_or_else(overflow)?;
            normal.push(if k % 2 == 0 { m } else { -m });
        }
        if normal.iter().all(|&x| x == 0) {
            continue;
        }
        let g = normal.iter().fold(0i128, |acc, &x| num_integer::gcd(acc, x));
        let normal: Vec<i128> = normal.iter().map(|x| x / g).collect();
        let level = |p: &Vec<i128>| -> Option<i128> {
            normal
                .iter()
                .zip(p)
                .try_fold(0i128, |acc, (a, b)| acc.checked_add(a.checked_mul(*b)?))
        };
        let c = level(base).ok_or_else(overflow)?;
        let mut pos = false;
        let mut neg = false;
        let mut on = Vec::new();
        for (i, p) in ip.iter().enumerate() {
            let s = level(p).ok_or_else(overflow)? - c;
            if s > 0 {
                pos = true;
            } else if s < 0 {
                neg = true;
            } else {
                on.push(i);
            }
            if pos && neg {
                break;
            }
        }
        if pos && neg {
            continue;
        }
        let (normal, c) = if neg {
            (normal.iter().map(|x| -x).collect::<Vec<_>>(), -c)
        } else {
            (normal, c)
        };
        if seen.insert((normal.clone(), c)) {
            out.push(RawFacet {
                normal: primitive(&normal.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>()),
                rhs: Q::from_integer(BigInt::from(c)) / &lq,
                on,
            });
        }
    }
    Ok(out)
}

/// Affine hull data: an origin, a basis of directions, and pivot columns that
/// make the basis matrix invertible.
pub(crate) struct AffineHull {
    pub origin: Vec<Q>,
    pub basis: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

impl AffineHull {
    pub fn new(points: &[Vec<Q>]) -> Self {
        let origin = points[0].clone();
        let mut basis: Vec<Vec<Q>> = Vec::new();
        for p in &points[1..] {
            let v: Vec<Q> = p.iter().zip(&origin).map(|(a, b)| a - b).collect();
            let mut trial = basis.clone();
            trial.push(v.clone());
            if rank(&trial) > basis.len() {
                basis.push(v);
            }
        }
        let d = origin.len();
        let mut pivots = Vec::new();
        for c in 0..d {
            let mut trial = pivots.clone();
            trial.push(c);
            let rows: Vec<Vec<Q>> = trial
                .iter()
                .map(|&j| basis.iter().map(|b| b[j].clone()).collect())
                .collect();
            if rank(&rows) == trial.len() {
                pivots = trial;
            }
            if pivots.len() == basis.len() {
                break;
            }
        }
        AffineHull { origin, basis, pivots }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of a point of the affine hull in the stored basis.
    pub fn coords(&self, p: &[Q]) -> Vec<Q> {
        let k = self.basis.len();
        if k == 0 {
            return Vec::new();
        }
        let a: Vec<Vec<Q>> = self
            .pivots
            .iter()
            .map(|&j| self.basis.iter().map(|b| b[j].clone()).collect())
            .collect();
        let rhs: Vec<Q> = self.pivots.iter().map(|&j| &p[j] - &self.origin[j]).collect();
        solve(&a, &rhs).expect("pivot columns are independent")
    }
}

/// Indices of the extreme points of an arbitrary (possibly lower-dimensional) point set.
pub(crate) fn extreme_points(points: &[Vec<Q>]) -> Result<Vec<usize>> {
    let hull = AffineHull::new(points);
    let k = hull.dim();
    if k == 0 {
        return Ok(vec![0]);
    }
    let local: Vec<Vec<Q>> = points.iter().map(|p| hull.coords(p)).collect();
    if k == 1 {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in local.iter().enumerate() {
            if p[0] < local[lo][0] {
                lo = i;
            }
            if p[0] > local[hi][0] {
                hi = i;
            }
        }
        return Ok(vec![lo, hi]);
    }
    let fs = facets(&local)?;
    let mut out = Vec::new();
    for i in 0..local.len() {
        let normals: Vec<Vec<Q>> = fs
            .iter()
            .filter(|f| f.on.contains(&i))
            .map(|f| f.normal.iter().map(|x| Q::from_integer(x.clone())).collect())
            .collect();
        if rank(&normals) == k {
            out.push(i);
        }
    }
    Ok(out)
}

/// Removes exact duplicates while keeping the first occurrence.
pub(crate) fn dedup_points(points: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut out: Vec<Vec<Q>> = Vec::new();
    for p in points {
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    out
}
