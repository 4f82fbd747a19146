//! Points of the solution manifold `X_F` by bisection along a segment, and
//! the chart restricted to `X_F`.

use std::sync::Arc;

use sdde_chart::chart::ChartAtlas;
use sdde_chart::delay::{residual, IntegralDelay, ScalarField};
use sdde_chart::manifold::{find_point, project_x0, x0_bump};
use sdde_chart::{GridSpec, IntervalFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::default();
    let d = Arc::new(IntegralDelay::reference(1.0)?);
    for f in [ScalarField::sin(), ScalarField::identity(), ScalarField::constant(0.7)] {
        let p = find_point(&f, d.as_ref(), grid, 1e-10)?;
        println!("{:<14} s = {:.12}  residual = {:.2e}  bisections = {}", f.name(), p.s, p.residual, p.log.len());
    }

    let f = ScalarField::constant(0.7);
    let atlas = ChartAtlas::new(f.clone(), d.clone(), 1.0, grid)?;
    let p = find_point(&f, d.as_ref(), grid, 1e-10)?;
    let psi = atlas.chart_forward(&p.phi)?;
    let bump = x0_bump(1.0, grid)?;
    let target = project_x0(&IntervalFunction::axpy(1e-2 / bump.norm_c1(), &bump, &psi)?)?;
    let q = atlas.chart_manifold(&target)?;
    println!("perturbed point of X_F: residual = {:.2e}", residual(&f, d.as_ref(), &q)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
