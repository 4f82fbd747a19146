//! The three counterexample constructions: unbounded `D_e F`, a right-hand
//! side that is not determined by the past, and a delay that is not constant
//! on a finite-codimension subspace.

use sdde_chart::delay::{IntegralDelay, ScalarField};
use sdde_chart::manifold::{scenario_prop4, scenario_prop5, scenario_prop6, LinearFunctional, SubspaceZ};
use sdde_chart::GridSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::default();
    let d = IntegralDelay::reference(1.0)?;

    let p4 = scenario_prop4(&ScalarField::square(), &d, grid, 10)?;
    for row in &p4.rows {
        println!("n = {:>2}  D_eF(n)1 = {:>6.2}", row.n, row.extended);
    }

    let p5 = scenario_prop5(&ScalarField::identity(), &d, 1.0, -0.5, grid)?;
    println!("s = -0.5: d(phi) = {:.6}, d(psi) = {:.6}, |F(phi) - F(psi)| = {:.6}", p5.d_phi, p5.d_psi, p5.gap);

    let z = SubspaceZ::new(1.0, grid, vec![LinearFunctional::point_value(-1.0), LinearFunctional::point_deriv(0.0)])?;
    let p6 = scenario_prop6(&d, &z, 1.0, grid)?;
    println!("codim {}: d(phi) = {:.9}, d(2phi) = {:.9}, gap = {:.3e}", z.codimension(), p6.d_phi, p6.d_2phi, p6.gap);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
