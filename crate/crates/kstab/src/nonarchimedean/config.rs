//! Toric test configurations: the Cayley polytope of a PL function and the
//! divisorial data of its central fibre.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::polytope::{facet_measures, volume, FacetMeasure, MomentPolytope, RationalPolytope};
use crate::rational::{self, lcm_den, Q};

use super::pl::PlConvexFunction;

/// One irreducible component `E` of the central fibre.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub id: usize,
    /// Multiplicity of `E` in the central fibre.
    pub b: BigInt,
    /// Weight of the monomial valuation `b^-1 ord_E` restricted to the generic fibre.
    pub v: Vec<Q>,
    pub a_x: Q,
    pub mass: Q,
    /// The affine piece of `f` this component comes from.
    pub slope: Vec<Q>,
    pub constant: Q,
    /// Lattice volume of the matching upper facet of the Cayley polytope.
    pub facet_volume: Q,
}

#[derive(Clone, Debug)]
pub struct ToricTestConfig {
    f: PlConvexFunction,
    height: Q,
    cayley: RationalPolytope,
    fan: Vec<Vec<BigInt>>,
    components: Vec<Component>,
    side: Vec<FacetMeasure>,
}

/// Builds the configuration with `M = max(ceil(max f), 0) + 1`.
pub fn make_config(p: &MomentPolytope, f: &PlConvexFunction) -> Result<ToricTestConfig> {
    let m = f.max_value().ceil().max(Q::zero()) + Q::one();
    make_config_with_height(p, f, m)
}

/// Builds the configuration with an explicit height `M > max(max f, 0)`.
pub fn make_config_with_height(p: &MomentPolytope, f: &PlConvexFunction, height: Q) -> Result<ToricTestConfig> {
    if f.poly().poly() != p.poly() {
        return Err(Error::InvalidInput("function lives on another polytope".into()));
    }
    if height <= f.max_value() || !height.is_positive() {
        return Err(Error::InvalidInput("height must exceed max f and 0".into()));
    }
    let n = p.dim();
    let mut pts = Vec::new();
    for v in f.nodes() {
        let top = &height - f.eval(&v);
        let mut lo = v.clone();
        lo.push(Q::zero());
        let mut hi = v;
        hi.push(top);
        pts.push(lo);
        pts.push(hi);
    }
    let cayley = RationalPolytope::new(n + 1, pts)?;

    // Group the pieces by their affine function.
    let mut components: Vec<Component> = Vec::new();
    for piece in f.pieces() {
        let vol = volume(&piece.cell)?;
        if let Some(c) = components
            .iter_mut()
            .find(|c| c.slope == piece.slope && c.constant == piece.constant)
        {
            c.mass += vol / p.volume();
            continue;
        }
        let b = lcm_den(&piece.slope);
        let v: Vec<Q> = piece.slope.iter().map(|x| -x).collect();
        let a_x = p.log_discrepancy(&v)?;
        components.push(Component {
            id: components.len(),
            b,
            v,
            a_x,
            mass: vol / p.volume(),
            slope: piece.slope.clone(),
            constant: piece.constant.clone(),
            facet_volume: Q::zero(),
        });
    }

    // Read the same data back off the upper facets of the Cayley polytope.
    let mut side = Vec::new();
    let mut matched = vec![false; components.len()];
    for fm in facet_measures(&cayley)? {
        let last = fm.facet.normal[n].clone();
        if last.is_negative() {
            let b = -last;
            let bq = Q::from_integer(b.clone());
            let v: Vec<Q> = fm.facet.normal[..n]
                .iter()
                .map(|x| Q::from_integer(x.clone()) / &bq)
                .collect();
            let k = components
                .iter()
                .position(|c| c.v == v)
                .ok_or_else(|| Error::Inconsistent("upper facet without a component".into()))?;
            if components[k].b != b || matched[k] {
                return Err(Error::Inconsistent("multiplicity disagrees with the fan".into()));
            }
            matched[k] = true;
            components[k].facet_volume = fm.lattice_volume.clone();
        } else if last.is_zero() {
            side.push(fm);
        }
    }
    if matched.iter().any(|m| !m) {
        return Err(Error::Inconsistent("component without an upper facet".into()));
    }
    let fan = cayley.facets().iter().map(|f| f.normal.clone()).collect();
    let cfg = ToricTestConfig {
        f: f.clone(),
        height,
        cayley,
        fan,
        components,
        side,
    };
    cfg.check_discrepancy_relation()?;
    Ok(cfg)
}

impl ToricTestConfig {
    pub fn function(&self) -> &PlConvexFunction {
        &self.f
    }

    pub fn poly(&self) -> &MomentPolytope {
        self.f.poly()
    }

    pub fn height(&self) -> &Q {
        &self.height
    }

    pub fn cayley(&self) -> &RationalPolytope {
        &self.cayley
    }

    /// Primitive inner normals of the Cayley polytope: the rays of the compactified fan.
    pub fn fan(&self) -> &[Vec<BigInt>] {
        &self.fan
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Facets of the Cayley polytope lying over the boundary of `P`.
    pub(crate) fn side_facets(&self) -> &[FacetMeasure] {
        &self.side
    }

    /// `A_{X x C}(ord_E) = b_E (1 + A_X(v_E))`, with the left side evaluated in the product fan.
    pub fn check_discrepancy_relation(&self) -> Result<()> {
        let p = self.poly();
        for c in &self.components {
            let bq = Q::from_integer(c.b.clone());
            let w: Vec<Q> = c.v.iter().map(|x| x * &bq).collect();
            // product cones are (cone of X) x R_{>=0} e_t; the e_t coordinate is b_E
            let coords = p.cone_coordinates(&w)?;
            let lhs = coords.iter().fold(Q::zero(), |acc, (_, x)| acc + x) + &bq;
            let rhs = &bq * (Q::one() + &c.a_x);
            if lhs != rhs {
                return Err(Error::Inconsistent(format!(
                    "log discrepancy relation fails on component {}",
                    c.id
                )));
            }
        }
        Ok(())
    }

    /// True when the central fibre is reduced.
    pub fn is_reduced(&self) -> bool {
        self.components.iter().all(|c| c.b.is_one())
    }

    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .components
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "b": c.b.to_string(),
                    "v": rational::encode_vec(&c.v),
                    "A_X": rational::encode(&c.a_x),
                    "mass": rational::encode(&c.mass),
                })
            })
            .collect();
        json!({
            "height": rational::encode(&self.height),
            "cayley": self.cayley.to_json(),
            "components": comps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn unit() -> MomentPolytope {
        MomentPolytope::interval(0, 1).unwrap()
    }

    #[test]
    fn constant_is_trivial() {
        let p = unit();
        let f = PlConvexFunction::constant(p.clone(), q(3, 2)).unwrap();
        let cfg = make_config(&p, &f).unwrap();
        assert_eq!(cfg.components().len(), 1);
        let c = &cfg.components()[0];
        assert_eq!(c.v, vec![qi(0)]);
        assert_eq!(c.a_x, qi(0));
        assert_eq!(c.mass, qi(1));
        assert_eq!(cfg.height(), &qi(3));
    }

    #[test]
    fn kink_components() {
        let p = unit();
        let f = PlConvexFunction::from_max(p.clone(), &[(vec![qi(0)], qi(0)), (vec![qi(1)], q(-1, 2))]).unwrap();
        let cfg = make_config(&p, &f).unwrap();
        assert_eq!(cfg.components().len(), 2);
        let e = cfg.components().iter().find(|c| c.v == vec![qi(-1)]).unwrap();
        assert_eq!(e.a_x, qi(1));
        assert_eq!(e.mass, q(1, 2));
        assert!(cfg.is_reduced());
        let total = cfg.components().iter().fold(Q::zero(), |a, c| a + &c.mass);
        assert_eq!(total, qi(1));
    }

    #[test]
    fn scaling_rescales_components() {
        let p = MomentPolytope::interval(0, 2).unwrap();
        let g = PlConvexFunction::from_max(
            p.clone(),
            &[
                (vec![qi(0)], qi(0)),
                (vec![q(1, 2)], q(-1, 2)),
                (vec![q(5, 3)], q(-7, 3)),
            ],
        )
        .unwrap();
        let cg = make_config(&p, &g).unwrap();
        for d in [2i64, 3, 6] {
            let cf = make_config(&p, &g.scale(&qi(d)).unwrap()).unwrap();
            assert_eq!(cf.components().len(), cg.components().len());
            for (a, b) in cf.components().iter().zip(cg.components()) {
                let dq = qi(d);
                assert_eq!(a.v, b.v.iter().map(|x| x * &dq).collect::<Vec<_>>());
                assert_eq!(a.mass, b.mass);
                assert_eq!(a.a_x, &b.a_x * &dq);
                assert_eq!(&a.b * num_integer::Integer::gcd(&b.b, &BigInt::from(d)), b.b);
            }
        }
    }

    #[test]
    fn wrong_height_rejected() {
        let p = unit();
        let f = PlConvexFunction::constant(p.clone(), qi(1)).unwrap();
        assert!(make_config_with_height(&p, &f, qi(1)).is_err());
    }
}
