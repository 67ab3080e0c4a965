use kstab::archimedean::ToricPotential;
use kstab::nonarchimedean::PlConvexFunction;
use kstab::polytope::MomentPolytope;
use kstab::quadrature::Tolerance;
use kstab::rational::{q, qi, to_f64};
use kstab::rays::{entropy_log_correction, eps_sweep, geometric_grid, slope, Functional, RayKind, RaySpec};

fn kink() -> PlConvexFunction {
    let p = MomentPolytope::interval(0, 1).unwrap();
    PlConvexFunction::from_max(p, &[(vec![qi(0)], qi(0)), (vec![qi(1)], q(-1, 2))]).unwrap()
}

#[test]
fn smoothing_does_not_move_slopes() {
    let p = MomentPolytope::interval(0, 1).unwrap();
    let spec = RaySpec::new(ToricPotential::guillemin(&p).unwrap(), kink()).grid(geometric_grid(50.0, 200.0, 6));
    let r = ToricPotential::fs(&p).unwrap();
    for f in [Functional::E, Functional::J, Functional::M] {
        let (reps, spread) = eps_sweep(&spec, f, &r, &[0.0, 0.05, 0.01], Tolerance::default()).unwrap();
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        assert!(spread < 5e-3, "{spread}");
    }
}

#[test]
fn log_correction_is_bounded() {
    let p = MomentPolytope::interval(0, 1).unwrap();
    let spec = RaySpec::new(ToricPotential::guillemin(&p).unwrap(), kink()).grid(geometric_grid(10.0, 200.0, 8));
    let r = ToricPotential::fs(&p).unwrap();
    let c = entropy_log_correction(&spec, &r, Tolerance::default()).unwrap();
    assert!(c.bounded, "{c:?}");
    let flat = PlConvexFunction::constant(p.clone(), q(2, 3)).unwrap();
    let spec = RaySpec::new(ToricPotential::fs(&p).unwrap(), flat).grid(geometric_grid(10.0, 200.0, 6));
    let c = entropy_log_correction(&spec, &ToricPotential::fs(&p).unwrap(), Tolerance::default()).unwrap();
    assert!(c.residuals.iter().all(|t| t.1.abs() < 1e-8), "{c:?}");
}

#[test]
fn square_slopes() {
    let p = MomentPolytope::unit_square().unwrap();
    let f =
        PlConvexFunction::from_max(p.clone(), &[(vec![qi(0), qi(0)], qi(0)), (vec![qi(1), qi(1)], qi(-1))]).unwrap();
    let r = ToricPotential::fs(&p).unwrap();
    let spec = RaySpec::new(ToricPotential::guillemin(&p).unwrap(), f)
        .kind(RayKind::Legendre)
        .eps(0.05)
        .grid(geometric_grid(50.0, 200.0, 4));
    for func in [Functional::E, Functional::J, Functional::M] {
        let rep = slope(&spec, func, &r, Tolerance::default()).unwrap();
        assert!(rep.pass, "{:?} {} vs {}", func, rep.slope, to_f64(&rep.target));
    }
}
