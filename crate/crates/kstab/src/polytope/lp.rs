//! Exact two-phase simplex over the rationals with Bland's rule.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `coeffs . x (rel) rhs` over free variables.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub rel: Relation,
    pub rhs: Q,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, rel: Relation, rhs: Q) -> Self {
        Constraint { coeffs, rel, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub optimum: Q,
    pub argmin: Vec<Q>,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x /= &p;
        }
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pr) {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[Q]) -> Vec<Q> {
        let mut z: Vec<Q> = cost.to_vec();
        z.push(Q::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if !cost[b].is_zero() {
                for (zj, a) in z.iter_mut().zip(row) {
                    *zj -= &cost[b] * a;
                }
            }
        }
        z
    }

    /// Minimizes `cost` over the current basis; columns with `allowed[j] == false` never enter.
    fn run(&mut self, cost: &[Q], allowed: &[bool]) -> Result<()> {
        loop {
            let z = self.reduced_costs(cost);
            let Some(enter) = (0..self.ncols).find(|&j| allowed[j] && z[j].is_negative()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter].is_positive() {
                    let ratio = &row[self.ncols] / &row[enter];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return Err(Error::Unbounded),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }
}

/// Minimizes `c . x` subject to the constraints, all variables free.
pub fn lp_minimize(c: &[Q], constraints: &[Constraint]) -> Result<LpSolution> {
    let n = c.len();
    for k in constraints {
        if k.coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: k.coeffs.len(),
            });
        }
    }
    let m = constraints.len();
    // Columns: x+ (n), x- (n), one slack per inequality, one artificial per Ge/Eq row.
    let n_slack = constraints.iter().filter(|k| k.rel != Relation::Eq).count();
    let n_art = m; // upper bound; unused ones stay zero columns
    let ncols = 2 * n + n_slack + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut is_art = vec![false; ncols];
    let mut slack = 2 * n;
    let art0 = 2 * n + n_slack;
    for (i, k) in constraints.iter().enumerate() {
        let flip = k.rhs.is_negative();
        let sgn = if flip { -Q::one() } else { Q::one() };
        let rel = match (k.rel, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        };
        let mut row = vec![Q::zero(); ncols + 1];
        for j in 0..n {
            row[j] = &sgn * &k.coeffs[j];
            row[n + j] = -&row[j];
        }
        row[ncols] = &sgn * &k.rhs;
        match rel {
            Relation::Le => {
                row[slack] = Q::one();
                basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -Q::one();
                slack += 1;
                row[art0 + i] = Q::one();
                is_art[art0 + i] = true;
                basis.push(art0 + i);
            }
            Relation::Eq => {
                row[art0 + i] = Q::one();
                is_art[art0 + i] = true;
                basis.push(art0 + i);
            }
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, ncols };

    let phase1: Vec<Q> = (0..ncols)
        .map(|j| if is_art[j] { Q::one() } else { Q::zero() })
        .collect();
    let all = vec![true; ncols];
    t.run(&phase1, &all)?;
    let infeas: Q = t
        .rows
        .iter()
        .zip(&t.basis)
        .filter(|(_, &b)| is_art[b])
        .fold(Q::zero(), |acc, (r, _)| acc + &r[ncols]);
    if infeas.is_positive() {
        return Err(Error::Infeasible);
    }
    // Drive zero-level artificials out of the basis, dropping redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if is_art[t.basis[r]] {
            match (0..ncols).find(|&j| !is_art[j] && !t.rows[r][j].is_zero()) {
                Some(j) => {
                    t.pivot(r, j);
                    r += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    let mut phase2 = vec![Q::zero(); ncols];
    for j in 0..n {
        phase2[j] = c[j].clone();
        phase2[n + j] = -&c[j];
    }
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    t.run(&phase2, &allowed)?;

    let mut val = vec![Q::zero(); ncols];
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        val[b] = row[ncols].clone();
    }
    let argmin: Vec<Q> = (0..n).map(|j| &val[j] - &val[n + j]).collect();
    let optimum = c.iter().zip(&argmin).fold(Q::zero(), |acc, (a, b)| acc + a * b);
    Ok(LpSolution { optimum, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn single_lower_bound() {
        let s = lp_minimize(&[qi(1)], &[Constraint::new(vec![qi(1)], Relation::Ge, qi(3))]).unwrap();
        assert_eq!(s.optimum, qi(3));
        assert_eq!(s.argmin, vec![qi(3)]);
    }

    #[test]
    fn simplex_corner() {
        let cons = vec![
            Constraint::new(vec![qi(1), qi(0)], Relation::Ge, qi(0)),
            Constraint::new(vec![qi(0), qi(1)], Relation::Ge, qi(0)),
            Constraint::new(vec![qi(1), qi(1)], Relation::Ge, qi(1)),
        ];
        let s = lp_minimize(&[qi(1), qi(1)], &cons).unwrap();
        assert_eq!(s.optimum, qi(1));
    }

    #[test]
    fn empty_region() {
        let cons = vec![
            Constraint::new(vec![qi(1)], Relation::Ge, qi(2)),
            Constraint::new(vec![qi(1)], Relation::Le, qi(1)),
        ];
        assert_eq!(lp_minimize(&[qi(1)], &cons), Err(Error::Infeasible));
    }

    #[test]
    fn unbounded_direction() {
        let cons = vec![Constraint::new(vec![qi(1)], Relation::Le, qi(1))];
        assert_eq!(lp_minimize(&[qi(1)], &cons), Err(Error::Unbounded));
    }

    #[test]
    fn equality_and_fractions() {
        // min -x - y, x + 2y = 3, 3x + y <= 4, x, y >= 0 -> (1, 1)
        let cons = vec![
            Constraint::new(vec![qi(1), qi(2)], Relation::Eq, qi(3)),
            Constraint::new(vec![qi(3), qi(1)], Relation::Le, qi(4)),
            Constraint::new(vec![qi(1), qi(0)], Relation::Ge, qi(0)),
            Constraint::new(vec![qi(0), qi(1)], Relation::Ge, qi(0)),
        ];
        let s = lp_minimize(&[qi(-1), qi(-1)], &cons).unwrap();
        assert_eq!(s.optimum, qi(-2));
        assert_eq!(s.argmin, vec![qi(1), qi(1)]);
        let s = lp_minimize(&[qi(-1), qi(0)], &cons[..2]).unwrap();
        assert_eq!(s.argmin[0], qi(1));
    }
}
