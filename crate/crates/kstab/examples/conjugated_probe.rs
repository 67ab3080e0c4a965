//! Boundedness of an SL(2) log-norm function after random unitary conjugation.

use std::collections::BTreeMap;

use kstab::gitweights::{conjugated_probe, SymVector};
use kstab::rational::qi;
use num_complex::Complex64;

fn monomial(a: Vec<u32>) -> kstab::Result<SymVector> {
    let d = a.iter().sum();
    SymVector::new(2, d, BTreeMap::from([(a, Complex64::new(1.0, 0.0))]))
}

fn main() -> kstab::Result<()> {
    let unlucky = [(qi(1), monomial(vec![1, 0])?), (qi(-1), monomial(vec![0, 1])?)];
    let genuine = [(qi(1), monomial(vec![1, 0])?), (qi(-1), monomial(vec![2, 0])?)];
    for (name, terms) in [("x / y", &unlucky[..]), ("x / x^2", &genuine[..])] {
        let r = conjugated_probe(terms, 16, 7)?;
        println!(
            "{name}: torus bounded {} after conjugation {:?}",
            r.identity, r.verdicts
        );
        println!("  instability survives conjugation: {}", r.stable);
    }
    Ok(())
}
