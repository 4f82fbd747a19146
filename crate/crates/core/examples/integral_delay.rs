//! The reference integral delay `d(φ) = δ(∫ v(φ))`, its extended derivative,
//! the right-hand side `F(φ) = f(φ(d(φ)))` and membership in `U_b`.

use sdde_chart::delay::{in_ub, residual, rhs, rhs_deriv, DelayFunctional, IntegralDelay, ScalarField};
use sdde_chart::{GridSpec, IntervalFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::default();
    let d = IntegralDelay::reference(1.0)?;
    let f = ScalarField::sin();

    for c in [-5.0, 0.0, 1.0, 5.0, 50.0] {
        let phi = IntervalFunction::constant(c, 1.0, grid)?;
        println!("d(const {c:>5}) = {:.9}", d.eval(&phi)?);
    }

    let phi = IntervalFunction::fit(1.0, grid, |t| 1.0 + 0.4 * (5.0 * t).sin(), |t| 2.0 * (5.0 * t).cos())?;
    let dir = IntervalFunction::fit(1.0, grid, |t| t.cos(), |t| -t.sin())?;
    println!("d(phi) = {:.9}", d.eval(&phi)?);
    println!("D_e d(phi) dir = {:.9}", d.ext_deriv_apply(&phi, &dir)?);
    println!("c = ded_bound(1) = {}", d.ded_bound(1.0));
    println!("F(phi) = {:.9}, DF(phi) dir = {:.9}", rhs(&f, &d, &phi)?, rhs_deriv(&f, &d, &phi, &dir, true)?);
    println!("residual(phi) = {:.9}", residual(&f, &d, &phi)?);
    println!("phi in U_1: {}, in U_3: {}", in_ub(&d, &phi, 1.0)?, in_ub(&d, &phi, 3.0)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
