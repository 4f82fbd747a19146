//! Method-of-steps integration starting on the solution manifold, with the
//! manifold residual monitored along the solution.

use sdde_chart::ddeint::{integrate, manifold_residual_along, StepConfig};
use sdde_chart::delay::{IntegralDelay, ScalarField};
use sdde_chart::verify::affine_start;
use sdde_chart::GridSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let f = ScalarField::sin();
    let d = IntegralDelay::reference(1.0)?;
    let phi0 = affine_start(&f, &d, GridSpec::default(), 1.0, 1e-13)?;
    let traj = integrate(&f, &d, &phi0, StepConfig::new(2.0, 1e-2))?;
    let times: Vec<f64> = (0..=8).map(|k| 0.25 * k as f64).collect();
    let res = manifold_residual_along(&traj, &f, &d, &times)?;
    for (t, r) in times.iter().zip(&res) {
        println!("t = {t:.2}  x = {:.9}  x' = {:.9}  residual = {r:.2e}", traj.value(*t), traj.deriv(*t));
    }
    println!("largest derivative jump at nodes: {:.2e}", traj.max_derivative_jump());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
