//! Slopes at infinity and the polytope criterion for boundedness on a torus.

use kstab::gitweights::{bounded_below_torus, bounded_by_fan, slope_vs_fna, LogNormFunction, WeightedVector};
use kstab::rational::qi;

fn main() -> kstab::Result<()> {
    let v = WeightedVector::new(vec![vec![1, 0], vec![0, 1], vec![-1, -1]], vec![1.0, 1.0, 1.0])?;
    let w = WeightedVector::new(vec![vec![0, 0]], vec![1.0])?;
    let stable = LogNormFunction::ratio(v.clone(), w)?;
    let edge = WeightedVector::new(vec![vec![1, 0], vec![0, 1]], vec![1.0, 2.0])?;
    let unstable = LogNormFunction::ratio(edge, WeightedVector::new(vec![vec![0, 0]], vec![1.0])?)?;
    for (name, f) in [("triangle", stable), ("edge", unstable)] {
        let c = slope_vs_fna(&f, &[qi(1), qi(1)])?;
        println!("{name}: f_NA(1,1) = {} numeric {:.6}", c.exact, c.l2);
        let a = bounded_below_torus(&f)?;
        let b = bounded_by_fan(&f)?;
        println!("  bounded {} (fan {})", a.bounded, b.bounded);
        if let Some((l, v)) = a.witness {
            println!(
                "  witness lambda = ({}) with f_NA = {v}",
                l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
            );
        }
    }
    Ok(())
}
