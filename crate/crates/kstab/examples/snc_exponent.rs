//! Growth exponent of fiber volumes near an snc central fiber.

use kstab::snclocal::{default_tau_grid, exponent_fit, SncModel, Twist};

fn main() -> kstab::Result<()> {
    for (n, p, b) in [
        (1, 0, vec![1]),
        (1, 1, vec![1, 1]),
        (2, 1, vec![2, 1]),
        (2, 2, vec![1, 2, 1]),
    ] {
        for twist in [Twist::Flat, Twist::Radial(0.25)] {
            let m = SncModel::new(n, p, b.clone(), 1.0)?.with_twist(twist.clone());
            let fit = exponent_fit(&m, &default_tau_grid(), m.default_rule(0))?;
            println!(
                "n = {n} p = {p} b = {b:?} {twist:?}: exponent {:.4} sandwich {:.3} residual {:.2e}",
                fit.exponent, fit.sandwich_ratio, fit.residual
            );
        }
    }
    Ok(())
}
