//! Exact rational polytopes: volumes, lattice boundary measure, mixed volumes,
//! containment and a small exact LP.

mod hull;
pub mod lp;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{self, dot, dot_int, factorial, is_integral, qi, rank, solve, Q};

pub use lp::{lp_minimize, Constraint, LpSolution, Relation};

/// A facet `<normal, y> >= rhs`, with `normal` the primitive inner normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub normal: Vec<BigInt>,
    pub rhs: Q,
    pub vertices: Vec<usize>,
}

impl Facet {
    /// Lattice distance from the facet hyperplane; nonnegative on the polytope.
    pub fn eval(&self, y: &[Q]) -> Q {
        dot_int(&self.normal, y) - &self.rhs
    }

    pub fn normal_q(&self) -> Vec<Q> {
        self.normal.iter().map(|x| Q::from_integer(x.clone())).collect()
    }
}

/// Convex hull of finitely many rational points, stored by its vertices.
#[derive(Clone, Debug)]
pub struct RationalPolytope {
    dim: usize,
    vertices: Vec<Vec<Q>>,
    affine_dim: usize,
    facets: Vec<Facet>,
}

impl PartialEq for RationalPolytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices == other.vertices
    }
}

impl RationalPolytope {
    pub fn new(dim: usize, points: Vec<Vec<Q>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        let pts = hull::dedup_points(&points);
        let ext = hull::extreme_points(&pts)?;
        let mut vertices: Vec<Vec<Q>> = ext.into_iter().map(|i| pts[i].clone()).collect();
        vertices.sort();
        let affine_dim = hull::AffineHull::new(&vertices).dim();
        let facets = if affine_dim == dim && dim > 0 {
            hull::facets(&vertices)?
                .into_iter()
                .map(|f| Facet {
                    normal: f.normal,
                    rhs: f.rhs,
                    vertices: f.on,
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(RationalPolytope {
            dim,
            vertices,
            affine_dim,
            facets,
        })
    }

    /// `{y : <a_i, y> >= b_i}`; errors with `EmptyPolytope` when the region is empty.
    pub fn from_halfspaces(dim: usize, halfspaces: &[(Vec<Q>, Q)]) -> Result<Self> {
        let mut pts = Vec::new();
        for combo in (0..halfspaces.len()).combinations(dim) {
            let a: Vec<Vec<Q>> = combo.iter().map(|&i| halfspaces[i].0.clone()).collect();
            let b: Vec<Q> = combo.iter().map(|&i| halfspaces[i].1.clone()).collect();
            if let Some(y) = solve(&a, &b) {
                if halfspaces.iter().all(|(ai, bi)| dot(ai, &y) >= *bi) {
                    pts.push(y);
                }
            }
        }
        if pts.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        RationalPolytope::new(dim, pts)
    }

    pub fn interval(a: Q, b: Q) -> Result<Self> {
        RationalPolytope::new(1, vec![vec![a], vec![b]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Q>] {
        &self.vertices
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dim(&self) -> bool {
        self.affine_dim == self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn support(&self, w: &[Q]) -> Q {
        self.vertices
            .iter()
            .map(|v| dot(v, w))
            .max()
            .expect("nonempty polytope")
    }

    pub fn contains_point(&self, y: &[Q]) -> bool {
        if self.is_full_dim() {
            return self.facets.iter().all(|f| !f.eval(y).is_negative());
        }
        in_convex_hull(&self.vertices, y)
    }

    pub fn scale(&self, k: &Q) -> Result<Self> {
        let pts = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|x| x * k).collect())
            .collect();
        RationalPolytope::new(self.dim, pts)
    }

    pub fn minkowski_sum(&self, other: &RationalPolytope) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            }
        }
        RationalPolytope::new(self.dim, pts)
    }

    pub fn centroid(&self) -> Result<Vec<Q>> {
        let (v, m) = measure(&self.vertices)?;
        if v.is_zero() {
            return Err(Error::Degenerate("centroid of a lower-dimensional polytope".into()));
        }
        Ok(m.into_iter().map(|x| x / &v).collect())
    }

    pub fn to_json(&self) -> Value {
        let verts: Vec<Value> = self
            .vertices
            .iter()
            .map(|v| {
                if self.dim == 1 {
                    rational::encode(&v[0])
                } else {
                    rational::encode_vec(v)
                }
            })
            .collect();
        json!({ "dim": self.dim, "vertices": verts })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = v
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::InvalidInput("polytope needs integer \"dim\"".into()))? as usize;
        let verts = v
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("polytope needs \"vertices\"".into()))?;
        let pts = verts.iter().map(|p| parse_point(dim, p)).collect::<Result<Vec<_>>>()?;
        RationalPolytope::new(dim, pts)
    }
}

/// Parses a point; in dimension one a bare rational is accepted.
pub fn parse_point(dim: usize, p: &Value) -> Result<Vec<Q>> {
    if dim == 1 {
        if let Ok(x) = rational::decode(p) {
            if !matches!(p, Value::Array(a) if a.len() == 1) {
                return Ok(vec![x]);
            }
        }
    }
    let v = rational::decode_vec(p)?;
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(v)
}

fn in_convex_hull(vertices: &[Vec<Q>], y: &[Q]) -> bool {
    let k = vertices.len();
    let mut cons = Vec::new();
    for j in 0..y.len() {
        let row = vertices.iter().map(|v| v[j].clone()).collect();
        cons.push(Constraint::new(row, Relation::Eq, y[j].clone()));
    }
    cons.push(Constraint::new(vec![Q::one(); k], Relation::Eq, Q::one()));
    for i in 0..k {
        let mut row = vec![Q::zero(); k];
        row[i] = Q::one();
        cons.push(Constraint::new(row, Relation::Ge, Q::zero()));
    }
    lp_minimize(&vec![Q::zero(); k], &cons).is_ok()
}

/// Volume and first moment `int y dy` of the hull of a point set in its ambient space.
fn measure(points: &[Vec<Q>]) -> Result<(Q, Vec<Q>)> {
    let d = points[0].len();
    if d == 0 {
        return Ok((Q::one(), Vec::new()));
    }
    let pts = hull::dedup_points(points);
    let diffs: Vec<Vec<Q>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    if pts.len() <= d || rank(&diffs) < d {
        return Ok((Q::zero(), vec![Q::zero(); d]));
    }
    if d == 1 {
        let lo = pts.iter().map(|p| &p[0]).min().unwrap();
        let hi = pts.iter().map(|p| &p[0]).max().unwrap();
        let two = qi(2);
        return Ok((hi - lo, vec![(hi * hi - lo * lo) / two]));
    }
    let apex: Vec<Q> = (0..d)
        .map(|j| pts.iter().fold(Q::zero(), |acc, p| acc + &p[j]) / qi(pts.len() as i64))
        .collect();
    let mut vol = Q::zero();
    let mut mom = vec![Q::zero(); d];
    let dq = qi(d as i64);
    for f in hull::facets(&pts)? {
        let normal: Vec<Q> = f.normal.iter().map(|x| Q::from_integer(x.clone())).collect();
        let height = dot(&normal, &apex) - &f.rhs;
        if height.is_zero() {
            continue;
        }
        let on: Vec<Vec<Q>> = f.on.iter().map(|&i| pts[i].clone()).collect();
        let (lat, fc) = facet_measure(&normal, &f.rhs, &on)?;
        // Euclidean pyramid volume = height_euclid * area_euclid / d; the norms cancel.
        let pyr = &height * &lat / &dq;
        let scale = &dq / (&dq + Q::one());
        for j in 0..d {
            let c = &apex[j] + (&fc[j] - &apex[j]) * &scale;
            mom[j] += &pyr * c;
        }
        vol += pyr;
    }
    Ok((vol, mom))
}

/// Lattice-normalized volume and centroid of a facet with primitive normal.
fn facet_measure(normal: &[Q], rhs: &Q, on: &[Vec<Q>]) -> Result<(Q, Vec<Q>)> {
    let k = normal.iter().position(|x| !x.is_zero()).expect("nonzero normal");
    let proj: Vec<Vec<Q>> = on
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect();
    let (pv, pm) = measure(&proj)?;
    if pv.is_zero() {
        return Ok((Q::zero(), on[0].clone()));
    }
    let pc: Vec<Q> = pm.iter().map(|x| x / &pv).collect();
    let mut c = Vec::with_capacity(normal.len());
    let mut it = pc.into_iter();
    for j in 0..normal.len() {
        if j == k {
            c.push(Q::zero());
        } else {
            c.push(it.next().unwrap());
        }
    }
    let partial = dot(normal, &c);
    c[k] = (rhs - partial) / &normal[k];
    Ok((pv / normal[k].abs(), c))
}

/// Exact volume in the ambient dimension (zero for lower-dimensional input).
pub fn volume(p: &RationalPolytope) -> Result<Q> {
    Ok(measure(p.vertices())?.0)
}

/// A facet with its lattice-normalized measure and centroid.
#[derive(Clone, Debug)]
pub struct FacetMeasure {
    pub facet: Facet,
    pub lattice_volume: Q,
    pub centroid: Vec<Q>,
}

pub fn facet_measures(p: &RationalPolytope) -> Result<Vec<FacetMeasure>> {
    p.facets()
        .iter()
        .map(|f| {
            let on: Vec<Vec<Q>> = f.vertices.iter().map(|&i| p.vertices[i].clone()).collect();
            let (lat, c) = facet_measure(&f.normal_q(), &f.rhs, &on)?;
            Ok(FacetMeasure {
                facet: f.clone(),
                lattice_volume: lat,
                centroid: c,
            })
        })
        .collect()
}

/// An affine function `slope . y + constant` on a cell.
#[derive(Clone, Debug)]
pub struct AffinePiece {
    pub cell: RationalPolytope,
    pub slope: Vec<Q>,
    pub constant: Q,
}

impl AffinePiece {
    pub fn eval(&self, y: &[Q]) -> Q {
        dot(&self.slope, y) + &self.constant
    }
}

/// Integrands accepted by [`boundary_integral`].
#[derive(Clone, Debug)]
pub enum BoundaryIntegrand<'a> {
    Constant(Q),
    Affine { slope: Vec<Q>, constant: Q },
    Pieces(&'a [AffinePiece]),
}

/// `int_{dP} g dsigma` for the lattice-normalized boundary measure.
pub fn boundary_integral(p: &RationalPolytope, g: &BoundaryIntegrand) -> Result<Q> {
    if !p.is_full_dim() {
        return Err(Error::Degenerate("boundary of a lower-dimensional polytope".into()));
    }
    let mut total = Q::zero();
    match g {
        BoundaryIntegrand::Constant(c) => {
            for fm in facet_measures(p)? {
                total += &fm.lattice_volume * c;
            }
        }
        BoundaryIntegrand::Affine { slope, constant } => {
            for fm in facet_measures(p)? {
                total += &fm.lattice_volume * (dot(slope, &fm.centroid) + constant);
            }
        }
        BoundaryIntegrand::Pieces(pieces) => {
            for f in p.facets() {
                let normal = f.normal_q();
                for piece in pieces.iter() {
                    let on: Vec<Vec<Q>> = piece
                        .cell
                        .vertices()
                        .iter()
                        .filter(|v| f.eval(v).is_zero())
                        .cloned()
                        .collect();
                    if on.len() < p.dim() {
                        continue;
                    }
                    let (lat, c) = facet_measure(&normal, &f.rhs, &on)?;
                    total += lat * piece.eval(&c);
                }
            }
        }
    }
    Ok(total)
}

/// Mixed volume by inclusion-exclusion over Minkowski sums, normalized so that
/// `mixed_volume(Q, ..., Q) = volume(Q)`.
pub fn mixed_volume(qs: &[RationalPolytope]) -> Result<Q> {
    let n = qs.len();
    if n == 0 {
        return Err(Error::EmptyPolytope);
    }
    for p in qs {
        if p.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    let mut total = Q::zero();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut sum = qs[members[0]].clone();
        for &i in &members[1..] {
            sum = sum.minkowski_sum(&qs[i])?;
        }
        let v = volume(&sum)?;
        if (n - members.len()) % 2 == 0 {
            total += v;
        } else {
            total -= v;
        }
    }
    Ok(total / factorial(n))
}

/// `V(K, L, ..., L)` through the facets of a full-dimensional `L`.
pub fn mixed_volume_against(k: &RationalPolytope, l: &RationalPolytope) -> Result<Q> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: k.dim(),
        });
    }
    if !l.is_full_dim() {
        return Err(Error::Degenerate("second argument must be full-dimensional".into()));
    }
    let mut total = Q::zero();
    for fm in facet_measures(l)? {
        let outer: Vec<Q> = fm.facet.normal_q().into_iter().map(|x| -x).collect();
        total += k.support(&outer) * &fm.lattice_volume;
    }
    Ok(total / qi(l.dim() as i64))
}

/// True iff every vertex of `inner` lies in `outer`.
pub fn polytope_contains(outer: &RationalPolytope, inner: &RationalPolytope) -> Result<bool> {
    if outer.dim() != inner.dim() {
        return Err(Error::DimensionMismatch {
            expected: outer.dim(),
            found: inner.dim(),
        });
    }
    Ok(inner.vertices().iter().all(|v| outer.contains_point(v)))
}

/// A full-dimensional lattice polytope standing for a polarized toric manifold.
#[derive(Clone, Debug)]
pub struct MomentPolytope {
    poly: RationalPolytope,
    volume: Q,
    big_v: Q,
    mean_s: Q,
}

impl MomentPolytope {
    pub fn new(poly: RationalPolytope) -> Result<Self> {
        if !poly.is_full_dim() {
            return Err(Error::InvalidInput("moment polytope must be full-dimensional".into()));
        }
        if !poly.vertices().iter().all(|v| is_integral(v)) {
            return Err(Error::InvalidInput("moment polytope must have lattice vertices".into()));
        }
        let volume = volume(&poly)?;
        let big_v = &volume * factorial(poly.dim());
        let sigma = boundary_integral(&poly, &BoundaryIntegrand::Constant(Q::one()))?;
        let mean_s = sigma / &volume;
        Ok(MomentPolytope {
            poly,
            volume,
            big_v,
            mean_s,
        })
    }

    pub fn from_vertices(dim: usize, vertices: Vec<Vec<Q>>) -> Result<Self> {
        MomentPolytope::new(RationalPolytope::new(dim, vertices)?)
    }

    /// `[a, b]`, the polytope of `(P^1, O(b - a))`.
    pub fn interval(a: i64, b: i64) -> Result<Self> {
        MomentPolytope::new(RationalPolytope::interval(qi(a), qi(b))?)
    }

    pub fn unit_square() -> Result<Self> {
        MomentPolytope::from_vertices(
            2,
            vec![
                vec![qi(0), qi(0)],
                vec![qi(1), qi(0)],
                vec![qi(0), qi(1)],
                vec![qi(1), qi(1)],
            ],
        )
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        MomentPolytope::new(RationalPolytope::from_json(v)?)
    }

    pub fn poly(&self) -> &RationalPolytope {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    /// Euclidean volume of `P`.
    pub fn volume(&self) -> &Q {
        &self.volume
    }

    /// `V = n! vol(P)`.
    pub fn big_v(&self) -> &Q {
        &self.big_v
    }

    /// Mean scalar curvature: lattice boundary measure over volume.
    pub fn mean_s(&self) -> &Q {
        &self.mean_s
    }

    pub fn facets(&self) -> &[Facet] {
        self.poly.facets()
    }

    /// Lattice points of `P` in lexicographic order.
    pub fn lattice_points(&self) -> Vec<Vec<i64>> {
        let n = self.dim();
        let lo: Vec<i64> = (0..n)
            .map(|j| self.poly.vertices().iter().map(|v| v[j].to_integer()).min().unwrap())
            .map(|x| x.to_i64().expect("small polytope"))
            .collect();
        let hi: Vec<i64> = (0..n)
            .map(|j| self.poly.vertices().iter().map(|v| v[j].to_integer()).max().unwrap())
            .map(|x| x.to_i64().expect("small polytope"))
            .collect();
        (0..n)
            .map(|j| lo[j]..=hi[j])
            .multi_cartesian_product()
            .filter(|p| {
                let y: Vec<Q> = p.iter().map(|&x| qi(x)).collect();
                self.poly.contains_point(&y)
            })
            .collect()
    }

    /// Facet indices through a vertex.
    pub fn cone_at_vertex(&self, i: usize) -> Vec<usize> {
        self.facets()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.vertices.contains(&i))
            .map(|(k, _)| k)
            .collect()
    }

    fn smooth_cone(&self, i: usize) -> Result<Vec<usize>> {
        let cone = self.cone_at_vertex(i);
        if cone.len() != self.dim() {
            return Err(Error::NonSmoothCone(i));
        }
        let m: Vec<Vec<Q>> = cone.iter().map(|&k| self.facets()[k].normal_q()).collect();
        if rational::det(&m).abs() != Q::one() {
            return Err(Error::NonSmoothCone(i));
        }
        Ok(cone)
    }

    /// True when every vertex cone is unimodular.
    pub fn is_delzant(&self) -> bool {
        (0..self.poly.vertices().len()).all(|i| self.smooth_cone(i).is_ok())
    }

    /// Coordinates of `eta` in a cone of the inner-normal fan containing it.
    pub fn cone_coordinates(&self, eta: &[Q]) -> Result<Vec<(usize, Q)>> {
        for i in 0..self.poly.vertices().len() {
            let cone = self.smooth_cone(i)?;
            let n = self.dim();
            // eta = sum c_k u_k  <=>  U^T c = eta
            let ut: Vec<Vec<Q>> = (0..n)
                .map(|j| {
                    cone.iter()
                        .map(|&k| Q::from_integer(self.facets()[k].normal[j].clone()))
                        .collect()
                })
                .collect();
            let c = solve(&ut, eta).expect("unimodular cone");
            if c.iter().all(|x| !x.is_negative()) {
                return Ok(cone.into_iter().zip(c).collect());
            }
        }
        Err(Error::Inconsistent("inner-normal fan does not cover the vector".into()))
    }

    /// Log discrepancy of the toric valuation with weight `eta`.
    pub fn log_discrepancy(&self, eta: &[Q]) -> Result<Q> {
        Ok(self
            .cone_coordinates(eta)?
            .into_iter()
            .fold(Q::zero(), |acc, (_, c)| acc + c))
    }

    /// The lattice translation `m0` with `P - m0 = {<u_i, y> >= -1}`, if any.
    pub fn anticanonical_shift(&self) -> Result<Vec<Q>> {
        let n = self.dim();
        let cone = self.smooth_cone(0).map_err(|_| Error::NotAnticanonical)?;
        let a: Vec<Vec<Q>> = cone.iter().map(|&k| self.facets()[k].normal_q()).collect();
        let b: Vec<Q> = cone.iter().map(|&k| &self.facets()[k].rhs + Q::one()).collect();
        let m0 = solve(&a, &b).ok_or(Error::NotAnticanonical)?;
        let ok = is_integral(&m0)
            && self
                .facets()
                .iter()
                .all(|f| dot_int(&f.normal, &m0) == &f.rhs + Q::one());
        if ok && m0.len() == n {
            Ok(m0)
        } else {
            Err(Error::NotAnticanonical)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn poly(dim: usize, pts: &[&[i64]]) -> RationalPolytope {
        RationalPolytope::new(dim, pts.iter().map(|p| p.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn volumes() {
        assert_eq!(volume(&poly(1, &[&[0], &[1]])).unwrap(), qi(1));
        assert_eq!(volume(&poly(2, &[&[0, 0], &[1, 0], &[0, 1]])).unwrap(), q(1, 2));
        assert_eq!(volume(&poly(1, &[&[0], &[3]])).unwrap(), qi(3));
        assert_eq!(
            volume(&poly(3, &[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])).unwrap(),
            q(1, 6)
        );
        assert_eq!(volume(&poly(2, &[&[0, 0], &[1, 1]])).unwrap(), qi(0));
        assert_eq!(RationalPolytope::new(1, vec![]), Err(Error::EmptyPolytope));
    }

    #[test]
    fn redundant_points_dropped() {
        let p = poly(2, &[&[0, 0], &[2, 0], &[0, 2], &[2, 2], &[1, 1], &[1, 0]]);
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.facets().len(), 4);
    }

    #[test]
    fn boundary_measures() {
        let p = poly(1, &[&[0], &[1]]);
        let one = BoundaryIntegrand::Constant(qi(1));
        assert_eq!(boundary_integral(&p, &one).unwrap(), qi(2));
        let id = BoundaryIntegrand::Affine {
            slope: vec![qi(1)],
            constant: qi(0),
        };
        assert_eq!(boundary_integral(&p, &id).unwrap(), qi(1));
        let sq = poly(2, &[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(boundary_integral(&sq, &one).unwrap(), qi(4));
        // The hypotenuse of the standard triangle has lattice length one.
        let tri = poly(2, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert_eq!(boundary_integral(&tri, &one).unwrap(), qi(3));
    }

    #[test]
    fn mixed_volumes() {
        let seg = poly(1, &[&[0], &[1]]);
        assert_eq!(mixed_volume(&[seg]).unwrap(), qi(1));
        let sq = poly(2, &[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(mixed_volume(&[sq.clone(), sq.clone()]).unwrap(), qi(1));
        let hseg = poly(2, &[&[0, 0], &[1, 0]]);
        assert_eq!(mixed_volume(&[sq.clone(), hseg.clone()]).unwrap(), q(1, 2));
        assert_eq!(mixed_volume_against(&hseg, &sq).unwrap(), q(1, 2));
    }

    #[test]
    fn containment() {
        let big = RationalPolytope::interval(qi(-1), qi(1)).unwrap();
        let pt = RationalPolytope::new(1, vec![vec![qi(1)]]).unwrap();
        assert!(polytope_contains(&big, &pt).unwrap());
        assert!(!polytope_contains(&pt, &big).unwrap());
        let sq = poly(2, &[&[-1, -1], &[1, -1], &[-1, 1], &[1, 1]]);
        let diamond = poly(2, &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]);
        assert!(polytope_contains(&sq, &diamond).unwrap());
        assert!(!polytope_contains(&diamond, &sq).unwrap());
        let seg = poly(2, &[&[-1, -1], &[1, 1]]);
        let mid = poly(2, &[&[0, 0]]);
        assert!(polytope_contains(&seg, &mid).unwrap());
        assert!(!polytope_contains(&seg, &poly(2, &[&[1, 0]])).unwrap());
    }

    #[test]
    fn moment_polytope_constants() {
        let p1 = MomentPolytope::interval(0, 1).unwrap();
        assert_eq!(*p1.mean_s(), qi(2));
        assert_eq!(*p1.big_v(), qi(1));
        let sq = MomentPolytope::unit_square().unwrap();
        assert_eq!(*sq.mean_s(), qi(4));
        assert_eq!(*sq.big_v(), qi(2));
        assert!(sq.is_delzant());
        assert_eq!(sq.lattice_points().len(), 4);
        assert_eq!(sq.log_discrepancy(&[qi(-1), qi(-2)]).unwrap(), qi(3));
        let fano = MomentPolytope::interval(0, 2).unwrap();
        assert_eq!(fano.anticanonical_shift().unwrap(), vec![qi(1)]);
        assert_eq!(p1.anticanonical_shift(), Err(Error::NotAnticanonical));
    }

    #[test]
    fn halfspace_cells() {
        // {0 <= y <= 1} intersected with y <= x, inside the unit square
        let hs = vec![
            (vec![qi(1), qi(0)], qi(0)),
            (vec![qi(-1), qi(0)], qi(-1)),
            (vec![qi(0), qi(1)], qi(0)),
            (vec![qi(0), qi(-1)], qi(-1)),
            (vec![qi(1), qi(-1)], qi(0)),
        ];
        let t = RationalPolytope::from_halfspaces(2, &hs).unwrap();
        assert_eq!(volume(&t).unwrap(), q(1, 2));
        assert_eq!(t.centroid().unwrap(), vec![q(2, 3), q(1, 3)]);
    }

    #[test]
    fn json_roundtrip() {
        let p = poly(2, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert_eq!(RationalPolytope::from_json(&p.to_json()).unwrap(), p);
        let s = RationalPolytope::interval(q(1, 2), qi(3)).unwrap();
        assert_eq!(RationalPolytope::from_json(&s.to_json()).unwrap(), s);
    }
}
