//! The chart `Π` from `U_b` into `X₀` and its inverse by fixed-point iteration.

use std::sync::Arc;

use sdde_chart::chart::ChartAtlas;
use sdde_chart::delay::{residual, IntegralDelay, ScalarField};
use sdde_chart::{GridSpec, IntervalFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let atlas = ChartAtlas::new(
        ScalarField::sin(),
        Arc::new(IntegralDelay::reference(1.0)?),
        1.0,
        GridSpec::default(),
    )?;
    let phi = IntervalFunction::fit(
        1.0,
        GridSpec::default(),
        |t| 1.5 + 0.3 * (2.0 * t).sin(),
        |t| 0.6 * (2.0 * t).cos(),
    )?;
    let d_phi = atlas.delay().eval(&phi)?;
    let psi = atlas.chart_forward(&phi)?;
    println!("d(phi) = {d_phi:.12}");
    println!("residual(phi) = {:.6e}, psi'(0) = {:.6e}", residual(atlas.f(), atlas.delay(), &phi)?, psi.deriv(0.0));

    let inv = atlas.chart_inverse(&psi, None)?;
    for rec in &inv.log {
        println!("  k = {:>2}  r = {:.15}  |dr| = {:.3e}", rec.k, rec.r, rec.step);
    }
    println!("recovered r = {:.12}, C1 error = {:.3e}", inv.r, inv.phi.distance_c1(&phi)?);
    println!("D2(d o B)(psi, r) = {:.3e}", atlas.d2db(&psi, inv.r)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
