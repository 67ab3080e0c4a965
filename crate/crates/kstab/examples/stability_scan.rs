//! Uniform stability threshold on the interval over convex functions with fixed breakpoints.

use kstab::nonarchimedean::{stability_threshold, Family};
use kstab::polytope::MomentPolytope;
use kstab::rational::q;

fn main() -> kstab::Result<()> {
    let p = MomentPolytope::interval(0, 1)?;
    for breaks in [vec![q(1, 2)], vec![q(1, 3), q(2, 3)], vec![q(1, 5), q(1, 2), q(4, 5)]] {
        let t = stability_threshold(&p, &Family::Breakpoints(breaks.clone()))?;
        println!(
            "breakpoints {:?}: delta {} min M {} certified {} witness J {}",
            breaks.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            t.delta,
            t.mabuchi_min,
            t.exact,
            t.witness_j
        );
    }
    Ok(())
}
