//! Exact non-Archimedean functionals of a kink on the interval and a roof on the square.

use kstab::nonarchimedean::{make_config, NaFunctionalReport, PlConvexFunction};
use kstab::polytope::MomentPolytope;
use kstab::rational::{q, qi};

fn main() -> kstab::Result<()> {
    let p = MomentPolytope::interval(0, 1)?;
    let kink = PlConvexFunction::from_max(p.clone(), &[(vec![qi(0)], qi(0)), (vec![qi(1)], q(-1, 2))])?;
    let sq = MomentPolytope::unit_square()?;
    let roof = PlConvexFunction::from_max(
        sq.clone(),
        &[
            (vec![qi(0), qi(0)], qi(0)),
            (vec![qi(1), qi(1)], q(-1, 1)),
            (vec![q(1, 2), qi(0)], q(-1, 3)),
        ],
    )?;
    for (name, poly, f) in [("kink", &p, kink), ("roof", &sq, roof)] {
        let cfg = make_config(poly, &f)?;
        let r = NaFunctionalReport::compute(&cfg)?;
        println!("{name}: reduced central fiber {}", cfg.is_reduced());
        for (k, v) in r.entries() {
            println!("  {k:>3} = {v}");
        }
    }
    Ok(())
}
