//! Slopes of E, J and M along both rays of f = max(0, y - 1/2) on the unit interval.

use kstab::archimedean::ToricPotential;
use kstab::nonarchimedean::PlConvexFunction;
use kstab::polytope::MomentPolytope;
use kstab::quadrature::Tolerance;
use kstab::rational::{q, qi};
use kstab::rays::{geometric_grid, slope, Functional, RayKind, RaySpec};

fn main() -> kstab::Result<()> {
    let p = MomentPolytope::interval(0, 1)?;
    let f = PlConvexFunction::from_max(p.clone(), &[(vec![qi(0)], qi(0)), (vec![qi(1)], q(-1, 2))])?;
    let base = ToricPotential::guillemin(&p)?;
    let reference = ToricPotential::fs(&p)?;
    for kind in [RayKind::Legendre, RayKind::Bergman] {
        let spec = RaySpec::new(base.clone(), f.clone())
            .kind(kind)
            .grid(geometric_grid(100.0, 200.0, 8));
        for func in [Functional::E, Functional::J, Functional::M] {
            let t = std::time::Instant::now();
            let r = slope(&spec, func, &reference, Tolerance::default())?;
            println!(
                "{:>8} {}: slope {:+.6} target {} ({:+.6}) pass {} [{:.2?}] failures {}",
                kind.name(),
                func.name(),
                r.slope,
                r.target,
                kstab::rational::to_f64(&r.target),
                r.pass,
                t.elapsed(),
                r.failures.len()
            );
        }
    }
    Ok(())
}
