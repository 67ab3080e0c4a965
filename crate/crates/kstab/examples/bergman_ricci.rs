//! Bergman approximation of a symplectic potential and the Ricci bound of its level sets.

use kstab::archimedean::{Profile, Ridge, ToricPotential};
use kstab::gitweights::{bergman_map, ricci_bound_check};
use kstab::polytope::MomentPolytope;
use kstab::quadrature::Tolerance;

fn main() -> kstab::Result<()> {
    let p = MomentPolytope::interval(0, 1)?;
    let u = ToricPotential::symplectic(&p, vec![Ridge::new(0.1, vec![1.0], 0.0, Profile::Pow(2))])?;
    for m in [1, 2, 4, 8, 16] {
        let b = bergman_map(&u, m, Tolerance::default())?;
        let gap = (-60..=60)
            .map(|i| {
                let x = [i as f64 / 10.0];
                Ok((b.u(&x)? - u.u(&x)?).abs())
            })
            .collect::<kstab::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let r = ricci_bound_check(&b, m)?;
        println!(
            "m = {m:>2}: sup |P_m u - u| = {gap:.3e}, Ricci bound holds {} (ratio {:.4} of {})",
            r.holds, r.max_ratio, r.bound
        );
    }
    Ok(())
}
