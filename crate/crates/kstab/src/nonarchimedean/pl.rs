//! Convex rational piecewise-affine functions on a moment polytope.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::polytope::{
    boundary_integral, parse_point, volume, AffinePiece, BoundaryIntegrand, MomentPolytope, RationalPolytope,
};
use crate::rational::{self, dot, Q};

/// A continuous convex function, affine with rational coefficients on each cell.
#[derive(Clone, Debug)]
pub struct PlConvexFunction {
    poly: MomentPolytope,
    pieces: Vec<AffinePiece>,
}

fn halfspaces_of(cell: &RationalPolytope) -> Vec<(Vec<Q>, Q)> {
    cell.facets().iter().map(|f| (f.normal_q(), f.rhs.clone())).collect()
}

fn full_dim_meet(a: &RationalPolytope, b: &RationalPolytope) -> Result<bool> {
    let mut hs = halfspaces_of(a);
    hs.extend(halfspaces_of(b));
    match RationalPolytope::from_halfspaces(a.dim(), &hs) {
        Ok(c) => Ok(c.is_full_dim()),
        Err(Error::EmptyPolytope) => Ok(false),
        Err(e) => Err(e),
    }
}

impl PlConvexFunction {
    /// Validates the subdivision, continuity across cells and convexity.
    pub fn new(poly: MomentPolytope, pieces: Vec<AffinePiece>) -> Result<Self> {
        let n = poly.dim();
        if pieces.is_empty() {
            return Err(Error::InvalidInput("no cells".into()));
        }
        let mut total = Q::zero();
        for p in &pieces {
            if p.cell.dim() != n || p.slope.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.slope.len().min(p.cell.dim()),
                });
            }
            if !p.cell.is_full_dim() {
                return Err(Error::InvalidInput("cell is not full-dimensional".into()));
            }
            if !p.cell.vertices().iter().all(|v| poly.poly().contains_point(v)) {
                return Err(Error::InvalidInput("cell leaves the polytope".into()));
            }
            total += volume(&p.cell)?;
        }
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                if full_dim_meet(&pieces[i].cell, &pieces[j].cell)? {
                    return Err(Error::InvalidInput(format!("cells {i} and {j} overlap")));
                }
            }
        }
        if &total != poly.volume() {
            return Err(Error::InvalidInput("cells do not cover the polytope".into()));
        }
        let f = PlConvexFunction { poly, pieces };
        let mut values = Vec::new();
        for v in f.nodes() {
            let vals: Vec<Q> = f
                .pieces
                .iter()
                .filter(|p| p.cell.contains_point(&v))
                .map(|p| p.eval(&v))
                .collect();
            if vals.iter().any(|x| x != &vals[0]) {
                return Err(Error::InvalidInput(format!(
                    "discontinuous at {:?}",
                    rational::vec_f64(&v)
                )));
            }
            values.push((v, vals[0].clone()));
        }
        for (v, val) in &values {
            if f.pieces.iter().any(|p| &p.eval(v) > val) {
                return Err(Error::NotSemipositive(format!(
                    "not convex at {:?}",
                    rational::vec_f64(v)
                )));
            }
        }
        Ok(f)
    }

    /// `max_k (<a_k, y> + b_k)` with cells read off from the maximizing regions.
    pub fn from_max(poly: MomentPolytope, affines: &[(Vec<Q>, Q)]) -> Result<Self> {
        let n = poly.dim();
        let mut uniq: Vec<(Vec<Q>, Q)> = Vec::new();
        for a in affines {
            if a.0.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.0.len(),
                });
            }
            if !uniq.contains(a) {
                uniq.push(a.clone());
            }
        }
        let base = halfspaces_of(poly.poly());
        let mut pieces = Vec::new();
        for (k, (ak, bk)) in uniq.iter().enumerate() {
            let mut hs = base.clone();
            for (j, (aj, bj)) in uniq.iter().enumerate() {
                if j != k {
                    let w: Vec<Q> = ak.iter().zip(aj).map(|(x, y)| x - y).collect();
                    hs.push((w, bj - bk));
                }
            }
            match RationalPolytope::from_halfspaces(n, &hs) {
                Ok(cell) if cell.is_full_dim() => pieces.push(AffinePiece {
                    cell,
                    slope: ak.clone(),
                    constant: bk.clone(),
                }),
                Ok(_) | Err(Error::EmptyPolytope) => {}
                Err(e) => return Err(e),
            }
        }
        PlConvexFunction::new(poly, pieces)
    }

    pub fn constant(poly: MomentPolytope, c: Q) -> Result<Self> {
        let n = poly.dim();
        PlConvexFunction::from_max(poly, &[(vec![Q::zero(); n], c)])
    }

    pub fn affine(poly: MomentPolytope, slope: Vec<Q>, c: Q) -> Result<Self> {
        PlConvexFunction::from_max(poly, &[(slope, c)])
    }

    /// Linear interpolation of `values` at the sorted `nodes` of an interval.
    pub fn from_values_1d(poly: MomentPolytope, nodes: &[Q], values: &[Q]) -> Result<Self> {
        if poly.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: poly.dim(),
            });
        }
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::InvalidInput("need matching nodes and values".into()));
        }
        let mut pieces = Vec::new();
        for i in 0..nodes.len() - 1 {
            let (a, b) = (&nodes[i], &nodes[i + 1]);
            if a >= b {
                return Err(Error::InvalidInput("nodes must increase".into()));
            }
            let slope = (&values[i + 1] - &values[i]) / (b - a);
            let constant = &values[i] - &slope * a;
            pieces.push(AffinePiece {
                cell: RationalPolytope::interval(a.clone(), b.clone())?,
                slope: vec![slope],
                constant,
            });
        }
        PlConvexFunction::new(poly, pieces)
    }

    pub fn poly(&self) -> &MomentPolytope {
        &self.poly
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// All cell vertices without repetition.
    pub fn nodes(&self) -> Vec<Vec<Q>> {
        let mut out: Vec<Vec<Q>> = Vec::new();
        for p in &self.pieces {
            for v in p.cell.vertices() {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out.sort();
        out
    }

    pub fn eval(&self, y: &[Q]) -> Q {
        self.pieces.iter().map(|p| p.eval(y)).max().expect("nonempty")
    }

    pub fn min_value(&self) -> Q {
        self.nodes().iter().map(|v| self.eval(v)).min().expect("nonempty")
    }

    pub fn max_value(&self) -> Q {
        self.nodes().iter().map(|v| self.eval(v)).max().expect("nonempty")
    }

    pub fn integral(&self) -> Result<Q> {
        let mut total = Q::zero();
        for p in &self.pieces {
            let c = p.cell.centroid()?;
            total += volume(&p.cell)? * p.eval(&c);
        }
        Ok(total)
    }

    pub fn average(&self) -> Result<Q> {
        Ok(self.integral()? / self.poly.volume())
    }

    /// `int_{dP} f dsigma` for the lattice boundary measure.
    pub fn boundary_integral(&self) -> Result<Q> {
        boundary_integral(self.poly.poly(), &BoundaryIntegrand::Pieces(&self.pieces))
    }

    /// Legendre transform `sup_y <zeta, y> - f(y)`.
    pub fn conjugate(&self, zeta: &[Q]) -> Q {
        self.nodes()
            .iter()
            .map(|v| dot(zeta, v) - self.eval(v))
            .max()
            .expect("nonempty")
    }

    pub fn scale(&self, d: &Q) -> Result<Self> {
        if d.is_negative() {
            return Err(Error::NotSemipositive("negative scaling".into()));
        }
        if d.is_zero() {
            return PlConvexFunction::constant(self.poly.clone(), Q::zero());
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| AffinePiece {
                cell: p.cell.clone(),
                slope: p.slope.iter().map(|x| x * d).collect(),
                constant: &p.constant * d,
            })
            .collect();
        Ok(PlConvexFunction {
            poly: self.poly.clone(),
            pieces,
        })
    }

    pub fn add_const(&self, c: &Q) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| AffinePiece {
                cell: p.cell.clone(),
                slope: p.slope.clone(),
                constant: &p.constant + c,
            })
            .collect();
        PlConvexFunction {
            poly: self.poly.clone(),
            pieces,
        }
    }

    /// Equality as functions on `P`, whatever the subdivisions.
    pub fn same_function(&self, other: &PlConvexFunction) -> Result<bool> {
        if self.poly.poly() != other.poly.poly() {
            return Ok(false);
        }
        for a in &self.pieces {
            for b in &other.pieces {
                if (a.slope != b.slope || a.constant != b.constant) && full_dim_meet(&a.cell, &b.cell)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> Value {
        let n = self.poly.dim();
        let cells: Vec<Value> = self
            .pieces
            .iter()
            .map(|p| {
                let verts: Vec<Value> = p
                    .cell
                    .vertices()
                    .iter()
                    .map(|v| {
                        if n == 1 {
                            rational::encode(&v[0])
                        } else {
                            rational::encode_vec(v)
                        }
                    })
                    .collect();
                let mut aff = p.slope.clone();
                aff.push(p.constant.clone());
                json!({ "vertices": verts, "affine": rational::encode_vec(&aff) })
            })
            .collect();
        json!({ "cells": cells })
    }

    pub fn from_json(poly: MomentPolytope, v: &Value) -> Result<Self> {
        let n = poly.dim();
        let cells = v
            .get("cells")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidInput("PL function needs \"cells\"".into()))?;
        let mut pieces = Vec::new();
        for c in cells {
            let verts = c
                .get("vertices")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidInput("cell needs \"vertices\"".into()))?
                .iter()
                .map(|p| parse_point(n, p))
                .collect::<Result<Vec<_>>>()?;
            let aff = rational::decode_vec(
                c.get("affine")
                    .ok_or_else(|| Error::InvalidInput("cell needs \"affine\"".into()))?,
            )?;
            if aff.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    found: aff.len(),
                });
            }
            pieces.push(AffinePiece {
                cell: RationalPolytope::new(n, verts)?,
                slope: aff[..n].to_vec(),
                constant: aff[n].clone(),
            });
        }
        PlConvexFunction::new(poly, pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn kink() -> PlConvexFunction {
        let p = MomentPolytope::interval(0, 1).unwrap();
        PlConvexFunction::from_max(p, &[(vec![qi(0)], qi(0)), (vec![qi(1)], q(-1, 2))]).unwrap()
    }

    #[test]
    fn kink_data() {
        let f = kink();
        assert_eq!(f.pieces().len(), 2);
        assert_eq!(f.integral().unwrap(), q(1, 8));
        assert_eq!(f.max_value(), q(1, 2));
        assert_eq!(f.min_value(), qi(0));
        assert_eq!(f.boundary_integral().unwrap(), q(1, 2));
        assert_eq!(f.conjugate(&[qi(1)]), q(1, 2));
    }

    #[test]
    fn json_round_trip() {
        let f = kink();
        let g = PlConvexFunction::from_json(f.poly().clone(), &f.to_json()).unwrap();
        assert_eq!(g.integral().unwrap(), f.integral().unwrap());
        assert_eq!(g.nodes(), f.nodes());
    }

    #[test]
    fn concave_rejected() {
        let p = MomentPolytope::interval(0, 1).unwrap();
        let r = PlConvexFunction::from_values_1d(p, &[qi(0), q(1, 2), qi(1)], &[qi(0), qi(1), qi(0)]);
        assert!(matches!(r, Err(Error::NotSemipositive(_))));
    }

    #[test]
    fn bad_subdivisions_rejected() {
        let p = MomentPolytope::interval(0, 1).unwrap();
        let piece = |a: Q, b: Q| AffinePiece {
            cell: RationalPolytope::interval(a, b).unwrap(),
            slope: vec![qi(0)],
            constant: qi(0),
        };
        let gap = PlConvexFunction::new(p.clone(), vec![piece(qi(0), q(1, 2))]);
        assert!(matches!(gap, Err(Error::InvalidInput(_))));
        let overlap = PlConvexFunction::new(p.clone(), vec![piece(qi(0), q(3, 4)), piece(q(1, 4), qi(1))]);
        assert!(matches!(overlap, Err(Error::InvalidInput(_))));
        let jump = PlConvexFunction::new(
            p,
            vec![
                piece(qi(0), q(1, 2)),
                AffinePiece {
                    cell: RationalPolytope::interval(q(1, 2), qi(1)).unwrap(),
                    slope: vec![qi(0)],
                    constant: qi(1),
                },
            ],
        );
        assert!(matches!(jump, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn square_max() {
        let sq = MomentPolytope::unit_square().unwrap();
        let f = PlConvexFunction::from_max(sq, &[(vec![qi(0), qi(0)], qi(0)), (vec![qi(1), qi(1)], qi(-1))]).unwrap();
        assert_eq!(f.pieces().len(), 2);
        // int max(0, x + y - 1) over the unit square
        assert_eq!(f.integral().unwrap(), q(1, 6));
        assert_eq!(f.boundary_integral().unwrap(), qi(1));
    }
}
