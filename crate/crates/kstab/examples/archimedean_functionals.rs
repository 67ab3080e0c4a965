//! Energy functionals of a few torus-invariant metrics against Fubini-Study.

use kstab::archimedean::{FunctionalReport, Profile, Ridge, ToricPotential};
use kstab::polytope::MomentPolytope;
use kstab::quadrature::Tolerance;

fn main() -> kstab::Result<()> {
    let p = MomentPolytope::interval(0, 1)?;
    let fs = ToricPotential::fs(&p)?;
    let cases = [
        ("fs + 1/2", fs.plus_const(0.5)),
        ("lse(1, 4)", ToricPotential::lse_weights(&p, &[1.0, 4.0])?),
        (
            "ridge",
            ToricPotential::symplectic(&p, vec![Ridge::new(0.2, vec![1.0], -0.5, Profile::Pow(2))])?,
        ),
    ];
    for (name, u) in cases {
        let r = FunctionalReport::compute(&u, &fs, Tolerance::default())?;
        let row: Vec<String> = r
            .entries()
            .iter()
            .map(|(k, e)| format!("{k} {:+.8}", e.value))
            .collect();
        println!("{name:>10}: {}", row.join("  "));
    }
    Ok(())
}
