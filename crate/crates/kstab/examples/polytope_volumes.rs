//! Exact volumes, boundary measure and mixed volumes of small lattice polytopes.

use kstab::polytope::{facet_measures, mixed_volume, volume, MomentPolytope, RationalPolytope};
use kstab::rational::qi;

fn main() -> kstab::Result<()> {
    let square = MomentPolytope::unit_square()?;
    let tri = RationalPolytope::new(2, vec![vec![qi(0), qi(0)], vec![qi(2), qi(0)], vec![qi(0), qi(2)]])?;
    println!("vol(square) = {}", square.volume());
    println!("Sbar(square) = {}", square.mean_s());
    println!("vol(triangle) = {}", volume(&tri)?);
    for m in facet_measures(&tri)? {
        println!(
            "  facet normal {:?}: lattice length {}",
            m.facet.normal, m.lattice_volume
        );
    }
    println!(
        "MV(square, triangle) = {}",
        mixed_volume(&[square.poly().clone(), tri.clone()])?
    );
    println!("lattice points of square: {:?}", square.lattice_points());
    Ok(())
}
